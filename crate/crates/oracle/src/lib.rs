//! Naive full Hilbert space reference for spin-1/2 exchange dynamics.
//!
//! Everything here works on dense `2^n` vectors and matrices built from
//! explicit single-site spin operators. It shares no code with the
//! fixed-weight engine it is meant to check.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use std::fmt;

/// Largest register the oracle accepts.
pub const MAX_QUBITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    TooLarge(usize),
    DimensionMismatch { expected: usize, found: usize },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::TooLarge(n) => write!(f, "{n} qubits exceeds the oracle cap of {MAX_QUBITS}"),
            OracleError::DimensionMismatch { expected, found } => {
                write!(f, "expected dimension {expected}, found {found}")
            }
        }
    }
}

impl std::error::Error for OracleError {}

fn check_size(n: usize) -> Result<(), OracleError> {
    if n == 0 || n > MAX_QUBITS {
        Err(OracleError::TooLarge(n))
    } else {
        Ok(())
    }
}

/// Qubit 1 is the most significant bit, so site `i` (0-based) owns bit `n - 1 - i`.
fn site_bit(n: usize, site: usize) -> usize {
    n - 1 - site
}

/// A state on the full `2^n` register.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    pub n: usize,
    pub amplitudes: DVector<Complex64>,
}

impl FullState {
    pub fn basis(n: usize, index: usize) -> Self {
        let mut amplitudes = DVector::zeros(1 << n);
        amplitudes[index] = Complex64::new(1.0, 0.0);
        FullState { n, amplitudes }
    }

    /// Parse a bitstring such as `"0110"` (leftmost character = qubit 1).
    pub fn from_bits(bits: &str) -> Self {
        let index = usize::from_str_radix(bits, 2).expect("bitstring");
        FullState::basis(bits.len(), index)
    }

    /// Place amplitudes given in ascending order of the weight-`k` integers.
    pub fn embed_weight(n: usize, k: usize, amps: &[Complex64]) -> Result<Self, OracleError> {
        let members: Vec<usize> = (0..1usize << n).filter(|u| u.count_ones() as usize == k).collect();
        if members.len() != amps.len() {
            return Err(OracleError::DimensionMismatch { expected: members.len(), found: amps.len() });
        }
        let mut amplitudes = DVector::zeros(1 << n);
        for (u, a) in members.iter().zip(amps) {
            amplitudes[*u] = *a;
        }
        Ok(FullState { n, amplitudes })
    }

    /// Amplitudes on the weight-`k` strings, ascending.
    pub fn restrict_weight(&self, k: usize) -> Vec<Complex64> {
        (0..1usize << self.n)
            .filter(|u| u.count_ones() as usize == k)
            .map(|u| self.amplitudes[u])
            .collect()
    }

    pub fn dicke(n: usize, k: usize) -> Self {
        let members: Vec<usize> = (0..1usize << n).filter(|u| u.count_ones() as usize == k).collect();
        let a = Complex64::new(1.0 / (members.len() as f64).sqrt(), 0.0);
        let mut amplitudes = DVector::zeros(1 << n);
        for u in members {
            amplitudes[u] = a;
        }
        FullState { n, amplitudes }
    }

    /// Tensor a fresh qubit in `|bit⟩` on the right.
    pub fn append(&self, bit: u8) -> Self {
        let mut amplitudes = DVector::zeros(1 << (self.n + 1));
        for u in 0..1usize << self.n {
            amplitudes[(u << 1) | bit as usize] = self.amplitudes[u];
        }
        FullState { n: self.n + 1, amplitudes }
    }

    /// Local z-rotation `diag(1, e^{iθ})` on each of the last `count` qubits.
    pub fn rz_last(&self, theta: f64, count: usize) -> Self {
        let mut out = self.clone();
        let mask = (1usize << count) - 1;
        for u in 0..1usize << self.n {
            let m = (u & mask).count_ones() as f64;
            out.amplitudes[u] *= Complex64::from_polar(1.0, m * theta);
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn inner(&self, other: &FullState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|⟨self|other⟩|`.
    pub fn fidelity(&self, other: &FullState) -> f64 {
        self.inner(other).norm()
    }

    /// Largest entrywise gap after removing the relative global phase.
    pub fn distance_up_to_phase(&self, other: &FullState) -> f64 {
        let ov = self.inner(other);
        let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { Complex64::new(1.0, 0.0) };
        (&self.amplitudes * phase - &other.amplitudes).camax()
    }
}

fn pauli(c: char) -> DMatrix<Complex64> {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match c {
        'x' => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        'y' => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        'z' => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => DMatrix::identity(2, 2),
    }
}

/// Kronecker chain placing `op` on the listed sites and identity elsewhere.
fn site_product(n: usize, sites: &[usize], op: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eye = pauli('i');
    let mut acc = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for s in 0..n {
        let factor = if sites.contains(&s) { op } else { &eye };
        acc = acc.kronecker(factor);
    }
    acc
}

/// `Σ_{i<j} S_i·S_j` with `S = σ/2`.
fn pair_sum(n: usize) -> DMatrix<Complex64> {
    let dim = 1 << n;
    let mut h = DMatrix::zeros(dim, dim);
    let ops = [pauli('x'), pauli('y'), pauli('z')];
    for i in 0..n {
        for j in (i + 1)..n {
            for op in &ops {
                h += site_product(n, &[i, j], op) * Complex64::new(0.25, 0.0);
            }
        }
    }
    h
}

fn real_part(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    m.map(|z| {
        debug_assert!(z.im.abs() < 1e-12);
        z.re
    })
}

/// `J′ Σ_{i<j} S_i·S_j` on the full register (real symmetric).
pub fn full_heisenberg(n: usize, jprime: f64) -> Result<DMatrix<f64>, OracleError> {
    check_size(n)?;
    Ok(real_part(&pair_sum(n)) * jprime)
}

/// Total `S²` on the full register.
pub fn full_s2(n: usize) -> Result<DMatrix<f64>, OracleError> {
    check_size(n)?;
    let dim = 1 << n;
    Ok(real_part(&pair_sum(n)) * 2.0 + DMatrix::identity(dim, dim) * (0.75 * n as f64))
}

/// Total `S_z` (diagonal).
pub fn full_sz(n: usize) -> Result<DMatrix<f64>, OracleError> {
    check_size(n)?;
    let dim = 1 << n;
    let mut sz = DMatrix::zeros(dim, dim);
    for u in 0..dim {
        let mut m = 0.0;
        for site in 0..n {
            m += if (u >> site_bit(n, site)) & 1 == 0 { 0.5 } else { -0.5 };
        }
        sz[(u, u)] = m;
    }
    Ok(sz)
}

pub fn expectation(op: &DMatrix<f64>, state: &FullState) -> f64 {
    let v = op.map(|x| Complex64::new(x, 0.0)) * &state.amplitudes;
    state.amplitudes.dotc(&v).re
}

/// Cached eigendecomposition of the all-coupled Hamiltonian.
pub struct HeisenbergOracle {
    pub n: usize,
    pub jprime: f64,
    eigen: SymmetricEigen<f64, nalgebra::Dyn>,
}

impl HeisenbergOracle {
    pub fn new(n: usize, jprime: f64) -> Result<Self, OracleError> {
        let h = full_heisenberg(n, jprime)?;
        Ok(HeisenbergOracle { n, jprime, eigen: SymmetricEigen::new(h) })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.eigen.eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    /// `exp(-iHt)|ψ⟩`.
    pub fn evolve(&self, state: &FullState, t: f64) -> Result<FullState, OracleError> {
        let dim = 1usize << self.n;
        if state.amplitudes.len() != dim {
            return Err(OracleError::DimensionMismatch { expected: dim, found: state.amplitudes.len() });
        }
        let v = self.eigen.eigenvectors.map(|x| Complex64::new(x, 0.0));
        let mut coeffs = v.adjoint() * &state.amplitudes;
        for (c, e) in coeffs.iter_mut().zip(self.eigen.eigenvalues.iter()) {
            *c *= Complex64::from_polar(1.0, -e * t);
        }
        Ok(FullState { n: self.n, amplitudes: v * coeffs })
    }
}

/// One-shot evolution under `J′ Σ S_i·S_j`.
pub fn oracle_evolve(state: &FullState, jprime: f64, t: f64) -> Result<FullState, OracleError> {
    HeisenbergOracle::new(state.n, jprime)?.evolve(state, t)
}
