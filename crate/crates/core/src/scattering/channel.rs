use super::device::{KrausCache, KrausPair, SectorKraus};
use crate::error::{Error, Result};
use crate::hamiltonian::GeneralizedCoupling;
use crate::spin::{BasisIndexer, DensityMatrix, SubspaceState};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

type CMat = DMatrix<Complex64>;

/// `M0 ρ M0† + M1 ρ M1†` on the dense static space.
pub fn channel_step_dense(rho: &CMat, kraus: &KrausPair) -> Result<CMat> {
    if rho.nrows() != kraus.m0.ncols() || rho.ncols() != kraus.m0.ncols() {
        return Err(Error::DimensionMismatch { expected: kraus.m0.ncols(), found: rho.nrows() });
    }
    Ok(&kraus.m0 * rho * kraus.m0.adjoint() + &kraus.m1 * rho * kraus.m1.adjoint())
}

/// Static-register state block-diagonal in hamming weight. Blocks absent
/// from the map are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDensity {
    pub n: usize,
    pub blocks: Vec<Option<CMat>>,
}

impl BlockDensity {
    pub fn from_pure(state: &SubspaceState) -> Self {
        let mut blocks = vec![None; state.n() + 1];
        blocks[state.k()] = Some(DensityMatrix::from_pure(state).entries);
        BlockDensity { n: state.n(), blocks }
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().flatten().map(|b| b.trace().re).sum()
    }

    pub fn block(&self, k: usize) -> Option<DensityMatrix> {
        self.blocks.get(k)?.as_ref().map(|e| DensityMatrix { indexer: BasisIndexer { n: self.n, k }, entries: e.clone() })
    }

    /// `⟨ψ|ρ|ψ⟩^{1/2}` for a fixed-weight pure `ψ`.
    pub fn fidelity(&self, psi: &SubspaceState) -> Result<f64> {
        match self.block(psi.k()) {
            Some(b) => crate::spin::fidelity_mixed(&b, psi),
            None => Ok(0.0),
        }
    }
}

/// One electron through the channel, weight block by weight block.
pub fn channel_step(rho: &BlockDensity, cache: &KrausCache, polarization: u8) -> Result<BlockDensity> {
    let mut out: Vec<Option<CMat>> = vec![None; rho.n + 1];
    let mut add = |k: usize, m: CMat| {
        out[k] = Some(match out[k].take() {
            Some(prev) => prev + m,
            None => m,
        });
    };
    for (k, block) in rho.blocks.iter().enumerate() {
        let Some(b) = block else { continue };
        let kr = cache.get(rho.n, k, polarization)?;
        add(k, &kr.m0 * b * kr.m0.adjoint());
        if let Some(leak) = kr.leak_weight() {
            add(leak, &kr.m1 * b * kr.m1.adjoint());
        }
    }
    Ok(BlockDensity { n: rho.n, blocks: out })
}

/// Class-averaged exchange strengths per electron, `J_l δt` for
/// `l = 0..=min(k, n-k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strengths {
    pub n: usize,
    pub k: usize,
    pub j_dt: Vec<f64>,
    pub variances: Vec<f64>,
    pub unitarity_error: f64,
}

impl Strengths {
    pub fn coupling(&self) -> Result<GeneralizedCoupling> {
        GeneralizedCoupling::new(self.n, self.k, self.j_dt.clone())
    }
}

/// Phase of the one-dimensional sector the electron cannot disturb: all
/// static qubits aligned with the electron.
pub fn reference_phase(cache: &KrausCache, n: usize, polarization: u8) -> Result<Complex64> {
    let k = if polarization == 0 { 0 } else { n };
    let kr = cache.get(n, k, polarization)?;
    let z = kr.m0[(0, 0)];
    Ok(z / z.norm())
}

/// `-Im(U)/2` averaged over entries with equal `popcount(u_i & u_j)`,
/// `U = M0 / reference phase`.
pub fn strengths_from_block(kraus: &SectorKraus, reference: Complex64) -> Result<Strengths> {
    let ix = kraus.indexer();
    let u = &kraus.m0 / reference;
    let d = ix.dim();
    let dev = (u.adjoint() * &u - CMat::identity(d, d)).camax();
    if dev > 1e-3 {
        return Err(Error::NotNearUnitary(dev));
    }
    let classes = kraus.k.min(kraus.n - kraus.k) + 1;
    let mut sum = vec![0.0; classes];
    let mut sq = vec![0.0; classes];
    let mut count = vec![0usize; classes];
    let words = ix.states();
    for (i, &a) in words.iter().enumerate() {
        for (j, &b) in words.iter().enumerate() {
            let l = kraus.k - (a & b).count_ones() as usize;
            let v = -u[(i, j)].im / 2.0;
            sum[l] += v;
            sq[l] += v * v;
            count[l] += 1;
        }
    }
    let j_dt: Vec<f64> = sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();
    let variances = sq.iter().zip(&count).zip(&j_dt).map(|((s, &c), m)| (s / c as f64 - m * m).max(0.0)).collect();
    Ok(Strengths { n: kraus.n, k: kraus.k, j_dt, variances, unitarity_error: dev })
}

pub fn extract_strengths(cache: &KrausCache, n: usize, k: usize, polarization: u8) -> Result<Strengths> {
    let kr = cache.get(n, k, polarization)?;
    strengths_from_block(&kr, reference_phase(cache, n, polarization)?)
}
