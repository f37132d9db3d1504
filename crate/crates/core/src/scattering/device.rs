use crate::error::{Error, Result};
use crate::spin::BasisIndexer;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

type CMat = DMatrix<Complex64>;

const COND_LIMIT: f64 = 1e12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A 1D channel: hard wall, `n` static qubits spaced by `kd`, then a partial
/// barrier at `kd0` from the last qubit, then the reservoir.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringDevice {
    pub n: usize,
    pub kd: f64,
    pub kd0: f64,
    #[serde(rename = "Gamma")]
    pub gamma: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
    pub injected_polarization: u8,
}

impl Default for ScatteringDevice {
    fn default() -> Self {
        ScatteringDevice { n: 3, kd: PI, kd0: PI / 2.0, gamma: 1000.0, omega: 1e-4, injected_polarization: 0 }
    }
}

impl ScatteringDevice {
    pub fn with_qubits(n: usize) -> Self {
        ScatteringDevice { n, ..Default::default() }
    }

    pub fn with_polarization(mut self, pol: u8) -> Self {
        self.injected_polarization = pol;
        self
    }

    /// The same channel cut down to `n` qubits.
    pub fn resized(&self, n: usize) -> Self {
        ScatteringDevice { n, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scatterer {
    /// Static qubit `j`, 1-based from the hard wall.
    Qubit(usize),
    Barrier,
}

/// Scalars `(x, y)` with `t = x I + y P`, `P` the flying/static swap.
fn qubit_coefficients(omega: f64) -> (Complex64, Complex64) {
    let a = c(1.0, -omega);
    let b = c(0.0, 2.0 * omega);
    let det = a * a - b * b;
    (a / det, -b / det)
}

fn barrier_coefficient(gamma: f64) -> Complex64 {
    c(1.0, 0.0) / c(1.0, gamma)
}

/// Word layout on `n + 1` qubits: flying qubit on the top bit, static qubit
/// `j` on bit `n - j`.
fn swap_word(u: u64, n: usize, j: usize) -> u64 {
    let fb = n;
    let sb = n - j;
    if ((u >> fb) & 1) != ((u >> sb) & 1) {
        u ^ (1 << fb) ^ (1 << sb)
    } else {
        u
    }
}

/// Dense `(t, r)` of one scatterer on the full `2^(n+1)` space.
pub fn scatterer_matrices(kind: Scatterer, device: &ScatteringDevice) -> Result<(CMat, CMat)> {
    let n = device.n;
    if n + 1 > 14 {
        return Err(Error::OutOfRange(format!("dense scatterer on {} qubits", n + 1)));
    }
    let dim = 1usize << (n + 1);
    let t = match kind {
        Scatterer::Qubit(j) => {
            if j == 0 || j > n {
                return Err(Error::OutOfRange(format!("qubit {j} of {n}")));
            }
            let (x, y) = qubit_coefficients(device.omega);
            let mut t = CMat::identity(dim, dim) * x;
            for u in 0..dim as u64 {
                t[(swap_word(u, n, j) as usize, u as usize)] += y;
            }
            t
        }
        Scatterer::Barrier => CMat::identity(dim, dim) * barrier_coefficient(device.gamma),
    };
    let r = &t - CMat::identity(dim, dim);
    Ok((t, r))
}

fn one_norm(m: &CMat) -> f64 {
    m.column_iter().map(|col| col.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `r + α t (I - α r̂ r)^{-1} r̂ t`, with `t`/`r` applied through closures.
fn cascade_step(
    rhat: &CMat,
    alpha: Complex64,
    left_t: impl Fn(&CMat) -> CMat,
    right_t: impl Fn(&CMat) -> CMat,
    right_r: impl Fn(&CMat) -> CMat,
    r_dense: CMat,
) -> Result<CMat> {
    let d = rhat.nrows();
    let a = CMat::identity(d, d) - right_r(rhat) * alpha;
    let a_inv = a.clone().try_inverse().ok_or(Error::SingularCascade(f64::INFINITY))?;
    let cond = one_norm(&a) * one_norm(&a_inv);
    if !cond.is_finite() || cond > COND_LIMIT {
        return Err(Error::SingularCascade(cond));
    }
    Ok(r_dense + left_t(&(a_inv * right_t(rhat))) * alpha)
}

fn phase(kd: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * kd)
}

/// Reflection operator restricted to total weight `sector` of the
/// flying+static register, basis in ascending word order.
pub fn cascade_sector(device: &ScatteringDevice, sector: usize) -> Result<(BasisIndexer, CMat)> {
    let n = device.n;
    let ix = BasisIndexer::new(n + 1, sector)?;
    let words = ix.states();
    let d = words.len();
    let eye = CMat::identity(d, d);
    let mut rhat = -eye.clone();
    let (x, y) = qubit_coefficients(device.omega);
    for j in 1..=n {
        let perm: Vec<usize> = words.iter().map(|&u| ix.rank_unchecked(swap_word(u, n, j))).collect();
        // (P M)[perm[i], :] = M[i, :]; P is an involution so rows and columns permute alike.
        let p_left = |m: &CMat| {
            let mut out = CMat::zeros(d, m.ncols());
            for (i, &pi) in perm.iter().enumerate() {
                out.set_row(pi, &m.row(i));
            }
            out
        };
        let p_right = |m: &CMat| {
            let mut out = CMat::zeros(m.nrows(), d);
            for (i, &pi) in perm.iter().enumerate() {
                out.set_column(pi, &m.column(i));
            }
            out
        };
        let t_left = |m: &CMat| m * x + p_left(m) * y;
        let t_right = |m: &CMat| m * x + p_right(m) * y;
        let r_right = |m: &CMat| m * (x - 1.0) + p_right(m) * y;
        let r_dense = t_left(&eye) - &eye;
        let alpha = phase(if j == 1 { device.kd0 } else { device.kd });
        rhat = cascade_step(&rhat, alpha, t_left, t_right, r_right, r_dense)?;
    }
    let tb = barrier_coefficient(device.gamma);
    let alpha = phase(device.kd0);
    let r_dense = &eye * (tb - 1.0);
    rhat = cascade_step(&rhat, alpha, |m| m * tb, |m| m * tb, |m| m * (tb - 1.0), r_dense)?;
    Ok((ix, rhat))
}

/// `R_B` on the full `2^(n+1)` space from dense scatterers, for checking
/// the sector assembly on small devices.
pub fn cascade_full(device: &ScatteringDevice) -> Result<CMat> {
    let dim = 1usize << (device.n + 1);
    let mut rhat = -CMat::identity(dim, dim);
    let mut elements: Vec<(Scatterer, f64)> = (1..=device.n).map(|j| (Scatterer::Qubit(j), if j == 1 { device.kd0 } else { device.kd })).collect();
    elements.push((Scatterer::Barrier, device.kd0));
    for (kind, kd) in elements {
        let (t, r) = scatterer_matrices(kind, device)?;
        let tl = t.clone();
        let tr = t.clone();
        let rr = r.clone();
        rhat = cascade_step(&rhat, phase(kd), move |m| &tl * m, move |m| m * &tr, move |m| m * &rr, r)?;
    }
    Ok(rhat)
}

pub fn unitarity_error(m: &CMat) -> f64 {
    let d = m.ncols();
    (m.adjoint() * m - CMat::identity(d, d)).camax()
}

/// Kraus pair for one static weight `k` and one injected polarization.
/// `m0` keeps the weight; `m1` moves it by one (down for `|0⟩`
/// electrons, up for `|1⟩`).
#[derive(Debug, Clone, PartialEq)]
pub struct SectorKraus {
    pub n: usize,
    pub k: usize,
    pub polarization: u8,
    pub m0: CMat,
    pub m1: CMat,
}

impl SectorKraus {
    pub fn indexer(&self) -> BasisIndexer {
        BasisIndexer { n: self.n, k: self.k }
    }

    /// Static weight reached through `m1`, if any.
    pub fn leak_weight(&self) -> Option<usize> {
        match self.polarization {
            0 => self.k.checked_sub(1),
            _ => (self.k < self.n).then_some(self.k + 1),
        }
    }

    pub fn completeness_error(&self) -> f64 {
        let d = self.m0.ncols();
        (self.m0.adjoint() * &self.m0 + self.m1.adjoint() * &self.m1 - CMat::identity(d, d)).camax()
    }
}

/// Split one sector of `R_B` into the Kraus pair for static weight `k`.
pub fn kraus_from_sector(device: &ScatteringDevice, k: usize, polarization: u8) -> Result<SectorKraus> {
    let n = device.n;
    if k > n || polarization > 1 {
        return Err(Error::OutOfRange(format!("static weight {k} of {n}, polarization {polarization}")));
    }
    let (_, r) = cascade_sector(device, k + polarization as usize)?;
    Ok(split_sector(n, k, polarization, &r))
}

/// Cut the Kraus pair for static weight `k` out of the `R_B` sector
/// `k + polarization`.
fn split_sector(n: usize, k: usize, polarization: u8, r: &CMat) -> SectorKraus {
    let sector = k + polarization as usize;
    // Flying-0 words sort first.
    let f0 = if sector <= n { crate::spin::binomial(n, sector) as usize } else { 0 };
    let d = r.nrows();
    let (m0, m1) = if polarization == 0 {
        (r.view((0, 0), (f0, f0)).into_owned(), r.view((f0, 0), (d - f0, f0)).into_owned())
    } else {
        (r.view((f0, f0), (d - f0, d - f0)).into_owned(), r.view((0, f0), (f0, d - f0)).into_owned())
    };
    SectorKraus { n, k, polarization, m0, m1 }
}

/// Dense Kraus pair on the full `2^n` static space.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausPair {
    pub m0: CMat,
    pub m1: CMat,
}

impl KrausPair {
    pub fn completeness_error(&self) -> f64 {
        let d = self.m0.ncols();
        (self.m0.adjoint() * &self.m0 + self.m1.adjoint() * &self.m1 - CMat::identity(d, d)).camax()
    }
}

/// Top-left/bottom-left blocks of a full `R_B` (or the right-hand blocks
/// for `|1⟩` electrons).
pub fn kraus_from_rb(rb: &CMat, polarization: u8) -> Result<KrausPair> {
    let dim = rb.nrows();
    if dim < 2 || !dim.is_multiple_of(2) || rb.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: rb.ncols() });
    }
    let h = dim / 2;
    let (col, keep, flip) = if polarization == 0 { (0, 0, h) } else { (h, h, 0) };
    Ok(KrausPair { m0: rb.view((keep, col), (h, h)).into_owned(), m1: rb.view((flip, col), (h, h)).into_owned() })
}

/// Memoized `R_B` sectors and sector Kraus pairs of one device geometry,
/// keyed by static qubit count.
#[derive(Debug)]
pub struct KrausCache {
    template: ScatteringDevice,
    sectors: Mutex<HashMap<(usize, usize), Arc<CMat>>>,
    map: Mutex<HashMap<(usize, usize, u8), Arc<SectorKraus>>>,
}

impl KrausCache {
    pub fn new(template: ScatteringDevice) -> Self {
        KrausCache { template, sectors: Mutex::new(HashMap::new()), map: Mutex::new(HashMap::new()) }
    }

    /// `R_B` restricted to total weight `sector` for `n` static qubits.
    pub fn sector(&self, n: usize, sector: usize) -> Result<Arc<CMat>> {
        if let Some(hit) = self.sectors.lock().expect("cache lock").get(&(n, sector)) {
            return Ok(hit.clone());
        }
        let built = Arc::new(cascade_sector(&self.template.resized(n), sector)?.1);
        self.sectors.lock().expect("cache lock").insert((n, sector), built.clone());
        Ok(built)
    }

    pub fn device(&self) -> &ScatteringDevice {
        &self.template
    }

    pub fn get(&self, n: usize, k: usize, polarization: u8) -> Result<Arc<SectorKraus>> {
        let key = (n, k, polarization);
        if let Some(hit) = self.map.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        if k > n || polarization > 1 {
            return Err(Error::OutOfRange(format!("static weight {k} of {n}, polarization {polarization}")));
        }
        let r = self.sector(n, k + polarization as usize)?;
        let built = Arc::new(split_sector(n, k, polarization, &r));
        self.map.lock().expect("cache lock").insert(key, built.clone());
        Ok(built)
    }
}
