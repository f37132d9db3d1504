//! Generalized exchange Hamiltonians on a fixed-weight block, their
//! polynomial structure in the one-swap operator, and unitary evolution.

use crate::error::{Error, Result};
use crate::half::Half;
use crate::spin::{binomial, s2_diagonal, BasisIndexer, SubspaceState};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Couplings `J_0..J_K` with `K = min(k, n - k)`; `J_l` weights pairs
/// of basis states that are `l` swaps apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedCoupling {
    pub n: usize,
    pub k: usize,
    #[serde(rename = "J")]
    pub j: Vec<f64>,
}

impl GeneralizedCoupling {
    pub fn new(n: usize, k: usize, j: Vec<f64>) -> Result<Self> {
        if k > n || n == 0 {
            return Err(Error::OutOfRange(format!("(n, k) = ({n}, {k})")));
        }
        let want = k.min(n - k) + 1;
        if j.len() != want {
            return Err(Error::DimensionMismatch { expected: want, found: j.len() });
        }
        Ok(GeneralizedCoupling { n, k, j })
    }

    /// Uniform `J′ Σ S_i·S_j` with its diagonal dropped: `J_1 = J′/4`.
    pub fn all_coupled(n: usize, k: usize, jprime: f64) -> Result<Self> {
        let mut j = vec![0.0; k.min(n.saturating_sub(k)) + 1];
        if j.len() > 1 {
            j[1] = jprime / 4.0;
        }
        GeneralizedCoupling::new(n, k, j)
    }

    /// `J_l = J` for every `l ≥ 1`.
    pub fn all_equal(n: usize, k: usize, jval: f64) -> Result<Self> {
        let mut j = vec![jval; k.min(n.saturating_sub(k)) + 1];
        j[0] = 0.0;
        GeneralizedCoupling::new(n, k, j)
    }

    pub fn order(&self) -> usize {
        self.j.len() - 1
    }

    /// `J_0` only shifts the spectrum; flag it for reporting.
    pub fn has_phase_only_term(&self) -> bool {
        self.j[0] != 0.0
    }
}

fn check_block(n: usize, k: usize) -> Result<BasisIndexer> {
    if n == 0 {
        return Err(Error::OutOfRange("n = 0".into()));
    }
    BasisIndexer::new(n, k)
}

/// 0/1 matrix marking pairs `l` swaps apart, i.e. `popcount(u & v) = k - l`.
pub fn build_partial(n: usize, k: usize, l: usize) -> Result<DMatrix<f64>> {
    let ix = check_block(n, k)?;
    if l > k.min(n - k) {
        return Err(Error::OutOfRange(format!("l = {l} for (n, k) = ({n}, {k})")));
    }
    let states = ix.states();
    let d = states.len();
    Ok(DMatrix::from_fn(d, d, |i, j| ((states[i] & states[j]).count_ones() as usize + l == k) as u8 as f64))
}

/// Dense Hamiltonian with a lazily cached eigendecomposition.
#[derive(Debug)]
pub struct SubspaceHamiltonian {
    pub indexer: BasisIndexer,
    pub matrix: DMatrix<f64>,
    eigen: OnceLock<SymmetricEigen<f64, nalgebra::Dyn>>,
}

impl Clone for SubspaceHamiltonian {
    fn clone(&self) -> Self {
        SubspaceHamiltonian::from_matrix(self.indexer, self.matrix.clone())
    }
}

impl SubspaceHamiltonian {
    pub fn from_matrix(indexer: BasisIndexer, matrix: DMatrix<f64>) -> Self {
        SubspaceHamiltonian { indexer, matrix, eigen: OnceLock::new() }
    }

    pub fn eigen(&self) -> &SymmetricEigen<f64, nalgebra::Dyn> {
        self.eigen.get_or_init(|| SymmetricEigen::new(self.matrix.clone()))
    }

    /// Sorted eigenvalues.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    /// `exp(-iHt)` as a dense matrix.
    pub fn propagator(&self, t: f64) -> DMatrix<Complex64> {
        let e = self.eigen();
        let v = e.eigenvectors.map(|x| Complex64::new(x, 0.0));
        let phases = DVector::from_iterator(e.eigenvalues.len(), e.eigenvalues.iter().map(|&w| Complex64::from_polar(1.0, -w * t)));
        let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * phases[j]);
        scaled * v.adjoint()
    }

    pub fn apply(&self, x: &DVector<Complex64>) -> DVector<Complex64> {
        self.matrix.map(|v| Complex64::new(v, 0.0)) * x
    }

    pub fn expectation(&self, state: &SubspaceState) -> f64 {
        state.amplitudes.dotc(&self.apply(&state.amplitudes)).re
    }
}

/// `Σ_l 2J_l M_{k,l}`.
pub fn build_hamiltonian(c: &GeneralizedCoupling) -> Result<SubspaceHamiltonian> {
    let ix = check_block(c.n, c.k)?;
    let states = ix.states();
    let d = states.len();
    let matrix = DMatrix::from_fn(d, d, |i, j| {
        let l = c.k - (states[i] & states[j]).count_ones() as usize;
        2.0 * c.j[l]
    });
    Ok(SubspaceHamiltonian::from_matrix(ix, matrix))
}

/// `exp(-iHt)|ψ⟩`.
pub fn evolve(state: &SubspaceState, h: &SubspaceHamiltonian, t: f64) -> Result<SubspaceState> {
    if state.indexer != h.indexer {
        return Err(Error::DimensionMismatch { expected: h.indexer.dim(), found: state.indexer.dim() });
    }
    if t == 0.0 {
        return Ok(state.clone());
    }
    let e = h.eigen();
    let v = &e.eigenvectors;
    let re = v.tr_mul(&state.amplitudes.map(|z| z.re));
    let im = v.tr_mul(&state.amplitudes.map(|z| z.im));
    let (mut out_re, mut out_im) = (DVector::zeros(re.len()), DVector::zeros(re.len()));
    for (i, w) in e.eigenvalues.iter().enumerate() {
        let c = Complex64::new(re[i], im[i]) * Complex64::from_polar(1.0, -w * t);
        out_re[i] = c.re;
        out_im[i] = c.im;
    }
    let (out_re, out_im) = (v * out_re, v * out_im);
    let amplitudes = DVector::from_fn(out_re.len(), |i, _| Complex64::new(out_re[i], out_im[i]));
    Ok(SubspaceState { indexer: state.indexer, amplitudes })
}

fn spin_range_check(n: usize, k: usize, s: Half) -> Result<()> {
    let lo = (n as i64 - 2 * k.min(n - k) as i64).max(0);
    let hi = n as i64;
    let s2 = s.twice();
    if s2 < lo || s2 > hi || (hi - s2) % 2 != 0 {
        return Err(Error::DomainError(format!("S = {s} outside the spectrum of block ({n}, {k})")));
    }
    Ok(())
}

/// Eigenvalue of `M_{k,1}` on total spin `S`: `S(S+1) - 3n/4 - ½[C(k,2) + C(n-k,2) - k(n-k)]`.
pub fn mk1_eigenvalue(n: usize, k: usize, s: Half) -> Result<f64> {
    if k > n {
        return Err(Error::OutOfRange(format!("(n, k) = ({n}, {k})")));
    }
    spin_range_check(n, k, s)?;
    let sv = s.value();
    Ok(sv * (sv + 1.0) - s2_diagonal(n, k))
}

/// Three-term recurrence data and the change of basis to powers of `H_{k,1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialExpansion {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Column `l` holds `a^[l]`, the expansion of `M_{k,1}^l` over `M_{k,q}`.
    pub a_coeffs: DMatrix<f64>,
    /// `H = Σ_l b_l M_{k,1}^l`.
    pub b_coeffs: Vec<f64>,
    /// `H = Σ_l c_l H_{k,1}^l`, available when `J_1 ≠ 0`.
    pub c_coeffs: Vec<f64>,
}

/// Recurrence coefficients and `a^[l]` columns for the block `(n, k)`.
fn recurrence(n: usize, k: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>, DMatrix<f64>) {
    let kk = k.min(n - k);
    let (nf, kf) = (n as f64, kk as f64);
    let alpha: Vec<f64> = (0..=kk).map(|q| (kf - q as f64 + 1.0) * (nf - kf - q as f64 + 1.0)).collect();
    let beta: Vec<f64> = (0..=kk).map(|q| q as f64 * (nf - 2.0 * q as f64)).collect();
    let gamma: Vec<f64> = (0..=kk).map(|q| ((q + 1) * (q + 1)) as f64).collect();
    let mut a = DMatrix::zeros(kk + 1, kk + 1);
    a[(0, 0)] = 1.0;
    for l in 1..=kk {
        for q in 0..=kk {
            let mut v = beta[q] * a[(q, l - 1)];
            if q > 0 {
                v += gamma[q - 1] * a[(q - 1, l - 1)];
            }
            if q < kk {
                v += alpha[q + 1] * a[(q + 1, l - 1)];
            }
            a[(q, l)] = v;
        }
    }
    (alpha, beta, gamma, a)
}

/// Back-substitute `Σ_l a_q^[l] b_l = 2J_q`.
fn solve_b(a: &DMatrix<f64>, j: &[f64]) -> Result<Vec<f64>> {
    let kk = j.len() - 1;
    let mut b = vec![0.0; kk + 1];
    for q in (0..=kk).rev() {
        let diag = a[(q, q)];
        if diag == 0.0 {
            return Err(Error::SingularSystem(q));
        }
        let mut rhs = 2.0 * j[q];
        for l in (q + 1)..=kk {
            rhs -= a[(q, l)] * b[l];
        }
        b[q] = rhs / diag;
    }
    Ok(b)
}

pub fn polynomial_expansion(c: &GeneralizedCoupling) -> Result<PolynomialExpansion> {
    if c.j.len() < 2 || c.j[1] == 0.0 {
        return Err(Error::DomainError("polynomial expansion in H_{k,1} needs J_1 ≠ 0".into()));
    }
    let (alpha, beta, gamma, a_coeffs) = recurrence(c.n, c.k);
    let b_coeffs = solve_b(&a_coeffs, &c.j)?;
    let two_j1 = 2.0 * c.j[1];
    let c_coeffs = b_coeffs.iter().enumerate().map(|(l, b)| b / two_j1.powi(l as i32)).collect();
    Ok(PolynomialExpansion { alpha, beta, gamma, a_coeffs, b_coeffs, c_coeffs })
}

/// Energy of the total-spin-`S` eigenspace of `H_k`.
pub fn energy(c: &GeneralizedCoupling, s: Half) -> Result<f64> {
    let m = mk1_eigenvalue(c.n, c.k, s)?;
    let (_, _, _, a) = recurrence(c.n, c.k);
    let b = solve_b(&a, &c.j)?;
    Ok(b.iter().rev().fold(0.0, |acc, bl| acc * m + bl))
}

/// `E(S_hi) - E(S_lo)`.
pub fn omega(c: &GeneralizedCoupling, s_hi: Half, s_lo: Half) -> Result<f64> {
    Ok(energy(c, s_hi)? - energy(c, s_lo)?)
}

/// `(S, E(S), multiplicity)` for every total spin present in the block.
pub fn polynomial_spectrum(c: &GeneralizedCoupling) -> Result<Vec<(Half, f64, usize)>> {
    let kk = c.k.min(c.n - c.k);
    (0..=kk)
        .map(|j| {
            let s = Half(c.n as i64 - 2 * j as i64);
            let mult = binomial(c.n, j) - if j > 0 { binomial(c.n, j - 1) } else { 0 };
            Ok((s, energy(c, s)?, mult as usize))
        })
        .collect()
}
