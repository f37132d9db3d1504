//! Fixed-weight basis indexing, spin eigenstates, observables and fidelity.
//!
//! Bitstrings are read with the leftmost character as qubit 1 and the most
//! significant bit. Within a weight-`k` block states are ordered by
//! ascending integer value. Character `'0'` carries `M = +1/2`, `'1'`
//! carries `M = -1/2`.

use crate::error::{Error, Result};
use crate::half::Half;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Largest register representable by the `u64` bit encoding.
pub const MAX_QUBITS: usize = 62;

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

fn c64(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Rank/unrank over the weight-`k` strings of `n` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisIndexer {
    pub n: usize,
    pub k: usize,
}

impl BasisIndexer {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n > MAX_QUBITS || k > n {
            return Err(Error::OutOfRange(format!("(n, k) = ({n}, {k})")));
        }
        Ok(BasisIndexer { n, k })
    }

    pub fn dim(&self) -> usize {
        binomial(self.n, self.k) as usize
    }

    /// Combinatorial number system: `Σ C(p_i, i+1)` over set bits `p_0 < p_1 < …`.
    pub fn rank(&self, u: u64) -> Result<usize> {
        if self.n < 64 && u >> self.n != 0 {
            return Err(Error::OutOfRange(format!("{u} has more than {} bits", self.n)));
        }
        if u.count_ones() as usize != self.k {
            return Err(Error::WrongWeight(self.bits(u)));
        }
        Ok(self.rank_unchecked(u))
    }

    pub(crate) fn rank_unchecked(&self, mut u: u64) -> usize {
        let mut r = 0u64;
        let mut i = 1;
        while u != 0 {
            let p = u.trailing_zeros() as usize;
            r += binomial(p, i);
            i += 1;
            u &= u - 1;
        }
        r as usize
    }

    pub fn unrank(&self, index: usize) -> Result<u64> {
        if index >= self.dim() {
            return Err(Error::OutOfRange(format!("index {index} outside [0, {})", self.dim())));
        }
        let mut r = index as u64;
        let mut u = 0u64;
        let mut top = self.n;
        for i in (1..=self.k).rev() {
            let mut p = top;
            while binomial(p, i) > r {
                p -= 1;
            }
            u |= 1 << p;
            r -= binomial(p, i);
            top = p;
        }
        Ok(u)
    }

    /// All members in rank order.
    pub fn states(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.dim());
        if self.k == 0 {
            out.push(0);
            return out;
        }
        let mut u: u64 = (1u64 << self.k) - 1;
        let limit = 1u64 << self.n;
        while u < limit {
            out.push(u);
            let c = u & u.wrapping_neg();
            let r = u + c;
            u = (((r ^ u) >> 2) / c) | r;
        }
        out
    }

    pub fn bits(&self, u: u64) -> String {
        (0..self.n).rev().map(|b| if (u >> b) & 1 == 1 { '1' } else { '0' }).collect()
    }

    pub fn parse(&self, bits: &str) -> Result<u64> {
        if bits.len() != self.n || !bits.chars().all(|c| c == '0' || c == '1') {
            return Err(Error::OutOfRange(format!("{bits:?} is not a {}-bit string", self.n)));
        }
        let u = bits.chars().fold(0u64, |acc, c| (acc << 1) | (c == '1') as u64);
        if u.count_ones() as usize != self.k {
            return Err(Error::WrongWeight(bits.to_string()));
        }
        Ok(u)
    }

    pub fn index_of(&self, bits: &str) -> Result<usize> {
        self.rank(self.parse(bits)?)
    }

    pub fn bits_at(&self, index: usize) -> Result<String> {
        Ok(self.bits(self.unrank(index)?))
    }
}

/// Amplitudes over one fixed-weight block.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceState {
    pub indexer: BasisIndexer,
    pub amplitudes: DVector<Complex64>,
}

impl SubspaceState {
    pub fn new(indexer: BasisIndexer, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != indexer.dim() {
            return Err(Error::DimensionMismatch { expected: indexer.dim(), found: amplitudes.len() });
        }
        Ok(SubspaceState { indexer, amplitudes })
    }

    pub fn basis(bits: &str) -> Result<Self> {
        let k = bits.chars().filter(|&c| c == '1').count();
        let indexer = BasisIndexer::new(bits.len(), k)?;
        let mut amplitudes = DVector::zeros(indexer.dim());
        amplitudes[indexer.index_of(bits)?] = c64(1.0);
        Ok(SubspaceState { indexer, amplitudes })
    }

    pub fn n(&self) -> usize {
        self.indexer.n
    }

    pub fn k(&self) -> usize {
        self.indexer.k
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(&self) -> Self {
        let norm = self.norm();
        SubspaceState { indexer: self.indexer, amplitudes: &self.amplitudes / c64(norm) }
    }

    pub fn inner(&self, other: &SubspaceState) -> Result<Complex64> {
        self.same_space(other)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub(crate) fn same_space(&self, other: &SubspaceState) -> Result<()> {
        if self.indexer != other.indexer {
            return Err(Error::DimensionMismatch { expected: self.indexer.dim(), found: other.indexer.dim() });
        }
        Ok(())
    }

    pub fn amplitude(&self, bits: &str) -> Result<Complex64> {
        Ok(self.amplitudes[self.indexer.index_of(bits)?])
    }

    /// Multiply by a global phase so the first nonzero amplitude is real positive.
    pub fn canonical_phase(&self) -> Self {
        let lead = self.amplitudes.iter().find(|a| a.norm() > 1e-14).copied();
        match lead {
            Some(a) => SubspaceState { indexer: self.indexer, amplitudes: &self.amplitudes * (a.conj() / a.norm()) },
            None => self.clone(),
        }
    }

    /// Tensor a qubit in `|bit⟩` on the right.
    pub fn append_qubit(&self, bit: u8) -> SubspaceState {
        let indexer = BasisIndexer { n: self.n() + 1, k: self.k() + bit as usize };
        let mut amplitudes = DVector::zeros(indexer.dim());
        for (i, u) in self.indexer.states().into_iter().enumerate() {
            amplitudes[indexer.rank_unchecked((u << 1) | bit as u64)] = self.amplitudes[i];
        }
        SubspaceState { indexer, amplitudes }
    }

    /// Flip every qubit: weight `k` becomes `n - k` and rank order reverses.
    pub fn flip_all(&self) -> SubspaceState {
        let indexer = BasisIndexer { n: self.n(), k: self.n() - self.k() };
        let amplitudes = DVector::from_iterator(self.amplitudes.len(), self.amplitudes.iter().rev().copied());
        SubspaceState { indexer, amplitudes }
    }

    /// `(|ψ⟩, weight)` pairs as bitstrings, skipping zeros.
    pub fn terms(&self, tol: f64) -> Vec<(String, Complex64)> {
        self.indexer
            .states()
            .into_iter()
            .zip(self.amplitudes.iter())
            .filter(|(_, a)| a.norm() > tol)
            .map(|(u, a)| (self.indexer.bits(u), *a))
            .collect()
    }
}

/// A density matrix on one fixed-weight block.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub indexer: BasisIndexer,
    pub entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(indexer: BasisIndexer, entries: DMatrix<Complex64>) -> Result<Self> {
        let d = indexer.dim();
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: entries.nrows() });
        }
        Ok(DensityMatrix { indexer, entries })
    }

    pub fn from_pure(state: &SubspaceState) -> Self {
        DensityMatrix { indexer: state.indexer, entries: &state.amplitudes * state.amplitudes.adjoint() }
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.entries - self.entries.adjoint()).camax()
    }
}

/// `√⟨ψ|ρ|ψ⟩`.
pub fn fidelity_mixed(rho: &DensityMatrix, psi: &SubspaceState) -> Result<f64> {
    if rho.indexer != psi.indexer {
        return Err(Error::DimensionMismatch { expected: psi.indexer.dim(), found: rho.indexer.dim() });
    }
    let v = &rho.entries * &psi.amplitudes;
    Ok(psi.amplitudes.dotc(&v).re.max(0.0).sqrt())
}

/// `|⟨ψ|φ⟩|` for pure states.
pub fn fidelity(phi: &SubspaceState, psi: &SubspaceState) -> Result<f64> {
    Ok(phi.inner(psi)?.norm())
}

/// Clebsch–Gordan pair `(A, B)` for attaching one spin-1/2.
pub fn clebsch_ab(s: Half, m: Half) -> Result<(f64, f64)> {
    let (s2, m2) = (s.twice(), m.twice());
    let num_a = s2 + m2 + 2;
    let num_b = s2 - m2;
    if s2 < 0 || num_a < 0 || num_b < 0 {
        return Err(Error::DomainError(format!("no Clebsch-Gordan pair for S = {s}, M = {m}")));
    }
    let den = 2.0 * (s2 + 1) as f64;
    Ok(((num_a as f64 / den).sqrt(), (num_b as f64 / den).sqrt()))
}

/// Total spin reached by a branching path, or `InvalidPath`.
pub fn spin_of_path(path: &str) -> Result<Half> {
    let mut s2: i64 = 0;
    for (i, c) in path.chars().enumerate() {
        match (i, c) {
            (0, '1') => s2 = 1,
            (_, '1') if i > 0 => s2 += 1,
            (_, '2') if i > 0 && s2 > 0 => s2 -= 1,
            _ => return Err(Error::InvalidPath(path.to_string())),
        }
    }
    if path.is_empty() {
        return Err(Error::InvalidPath(path.to_string()));
    }
    Ok(Half(s2))
}

/// `(n, S, M, path)` naming one simultaneous eigenvector of `S²` and `S_z`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinSpec {
    pub n: usize,
    pub s: Half,
    pub m: Half,
    pub path: String,
}

impl SpinSpec {
    pub fn new(path: &str, m: Half) -> Result<Self> {
        let s = spin_of_path(path)?;
        let n = path.len();
        if m.twice().abs() > s.twice() {
            return Err(Error::DomainError(format!("|M| = {m} exceeds S = {s}")));
        }
        if (n as i64 - m.twice()) % 2 != 0 {
            return Err(Error::DomainError(format!("M = {m} incompatible with {n} qubits")));
        }
        Ok(SpinSpec { n, s, m, path: path.to_string() })
    }

    /// The Dicke state `D^n_k = X(n, n/2, n/2 - k)` with the all-'1' path.
    pub fn dicke(n: usize, k: usize) -> Result<Self> {
        if n == 0 || k > n {
            return Err(Error::OutOfRange(format!("Dicke ({n}, {k})")));
        }
        SpinSpec::new(&"1".repeat(n), Half(n as i64 - 2 * k as i64))
    }

    /// Number of `'1'` characters in the computational basis strings.
    pub fn k(&self) -> usize {
        ((self.n as i64 - self.m.twice()) / 2) as usize
    }

    pub fn indexer(&self) -> BasisIndexer {
        BasisIndexer { n: self.n, k: self.k() }
    }
}

type Memo = HashMap<(usize, i64), Option<DVector<f64>>>;

/// Ladder-consistent eigenvector for `path[..len]` at `2M = m2`, or `None`
/// when `|M| > S`.
fn raw_recursive(path: &[u8], len: usize, m2: i64, memo: &mut Memo) -> Option<DVector<f64>> {
    if let Some(hit) = memo.get(&(len, m2)) {
        return hit.clone();
    }
    let s2 = spin_twice(&path[..len]);
    let out = if m2.abs() > s2 {
        None
    } else if len == 1 {
        Some(DVector::from_element(1, 1.0))
    } else {
        let last = path[len - 1];
        let sp2 = if last == b'1' { s2 - 1 } else { s2 + 1 };
        let mp2 = m2 - 1;
        let den = 2.0 * (sp2 + 1) as f64;
        let a = ((sp2 + mp2 + 2).max(0) as f64 / den).sqrt();
        let b = ((sp2 - mp2).max(0) as f64 / den).sqrt();
        let (c0, c1) = if last == b'1' { (a, b) } else { (-b, a) };
        let k = ((len as i64 - m2) / 2) as usize;
        let target = BasisIndexer { n: len, k };
        let mut v = DVector::zeros(target.dim());
        for (bit, coef, sub_m2) in [(0u64, c0, mp2), (1u64, c1, mp2 + 2)] {
            if coef == 0.0 {
                continue;
            }
            if let Some(sub) = raw_recursive(path, len - 1, sub_m2, memo) {
                let sub_idx = BasisIndexer { n: len - 1, k: k - bit as usize };
                for (i, u) in sub_idx.states().into_iter().enumerate() {
                    v[target.rank_unchecked((u << 1) | bit)] += coef * sub[i];
                }
            }
        }
        Some(v)
    };
    memo.insert((len, m2), out.clone());
    out
}

fn spin_twice(path: &[u8]) -> i64 {
    path.iter().enumerate().fold(0, |s, (i, &c)| if i == 0 || c == b'1' { s + 1 } else { s - 1 })
}

/// Real amplitudes with the phase convention fixed by the recursion alone.
/// Sibling states that differ only in `M` are related by the ladder
/// operator with positive coefficients.
pub(crate) fn raw_eigenstate(spec: &SpinSpec) -> DVector<f64> {
    let mut memo = Memo::new();
    raw_recursive(spec.path.as_bytes(), spec.n, spec.m.twice(), &mut memo).expect("validated spec")
}

/// Build `X(n, S, M, path)` with its first nonzero amplitude real positive.
pub fn build_spin_eigenstate(spec: &SpinSpec) -> Result<SubspaceState> {
    let checked = SpinSpec::new(&spec.path, spec.m)?;
    if checked.s != spec.s || checked.n != spec.n {
        return Err(Error::InvalidPath(spec.path.clone()));
    }
    let raw = raw_eigenstate(spec);
    let state = SubspaceState { indexer: spec.indexer(), amplitudes: raw.map(c64) };
    Ok(state.canonical_phase())
}

pub fn dicke(n: usize, k: usize) -> Result<SubspaceState> {
    let indexer = BasisIndexer::new(n, k)?;
    let d = indexer.dim();
    Ok(SubspaceState { indexer, amplitudes: DVector::from_element(d, c64(1.0 / (d as f64).sqrt())) })
}

/// Apply the one-swap adjacency `M_{k,1}` of the block.
pub fn apply_one_swap(indexer: &BasisIndexer, x: &DVector<Complex64>) -> DVector<Complex64> {
    let n = indexer.n;
    let states = indexer.states();
    let mut out = DVector::zeros(x.len());
    for (i, &u) in states.iter().enumerate() {
        if x[i] == Complex64::new(0.0, 0.0) {
            continue;
        }
        for one in 0..n {
            if (u >> one) & 1 == 0 {
                continue;
            }
            for zero in 0..n {
                if (u >> zero) & 1 == 1 {
                    continue;
                }
                let v = u ^ (1 << one) ^ (1 << zero);
                out[indexer.rank_unchecked(v)] += x[i];
            }
        }
    }
    out
}

/// Diagonal part of `S²` on a weight-`k` block: `3n/4 + ½[C(k,2) + C(n-k,2) - k(n-k)]`.
pub fn s2_diagonal(n: usize, k: usize) -> f64 {
    let same = (binomial(k, 2) + binomial(n - k, 2)) as f64;
    let diff = (k * (n - k)) as f64;
    0.75 * n as f64 + 0.5 * (same - diff)
}

/// `S²|ψ⟩` restricted to the block.
pub fn apply_s2(state: &SubspaceState) -> DVector<Complex64> {
    let d = s2_diagonal(state.n(), state.k());
    apply_one_swap(&state.indexer, &state.amplitudes) + &state.amplitudes * c64(d)
}

pub fn expectation_s2(state: &SubspaceState) -> f64 {
    state.amplitudes.dotc(&apply_s2(state)).re
}

/// `S_z` eigenvalue of the block, `(n - 2k)/2`.
pub fn sz_value(indexer: &BasisIndexer) -> Half {
    Half(indexer.n as i64 - 2 * indexer.k as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_examples() {
        let ix = BasisIndexer::new(4, 2).unwrap();
        assert_eq!(ix.index_of("0011").unwrap(), 0);
        assert_eq!(ix.index_of("0101").unwrap(), 1);
        assert_eq!(ix.bits_at(5).unwrap(), "1100");
        assert!(matches!(ix.index_of("0111"), Err(Error::WrongWeight(_))));
        assert!(matches!(ix.bits_at(6), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn states_are_ascending_and_ranked() {
        for n in 0..=10 {
            for k in 0..=n {
                let ix = BasisIndexer::new(n, k).unwrap();
                let st = ix.states();
                assert_eq!(st.len(), ix.dim());
                for (i, &u) in st.iter().enumerate() {
                    assert_eq!(ix.rank(u).unwrap(), i);
                    assert_eq!(ix.unrank(i).unwrap(), u);
                }
                assert!(st.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn clebsch_examples() {
        let (a, b) = clebsch_ab(Half(1), Half(-1)).unwrap();
        assert!((a - 0.5f64.sqrt()).abs() < 1e-15 && (b - 0.5f64.sqrt()).abs() < 1e-15);
        let (a, b) = clebsch_ab(Half(2), Half(0)).unwrap();
        assert!((a - (2.0f64 / 3.0).sqrt()).abs() < 1e-15 && (b - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(clebsch_ab(Half(1), Half(1)).unwrap(), (1.0, 0.0));
        assert!(clebsch_ab(Half(1), Half(3)).is_err());
    }

    #[test]
    fn small_eigenstates() {
        let singlet = build_spin_eigenstate(&SpinSpec::new("12", Half(0)).unwrap()).unwrap();
        let r = 0.5f64.sqrt();
        assert!((singlet.amplitude("01").unwrap() - c64(r)).norm() < 1e-15);
        assert!((singlet.amplitude("10").unwrap() + c64(r)).norm() < 1e-15);

        let x = build_spin_eigenstate(&SpinSpec::new("112", Half(1)).unwrap()).unwrap();
        let s6 = 6f64.sqrt();
        assert!((x.amplitude("001").unwrap() - c64(2.0 / s6)).norm() < 1e-15);
        assert!((x.amplitude("010").unwrap() + c64(1.0 / s6)).norm() < 1e-15);
        assert!((x.amplitude("100").unwrap() + c64(1.0 / s6)).norm() < 1e-15);
    }

    #[test]
    fn invalid_paths() {
        assert!(matches!(spin_of_path("2"), Err(Error::InvalidPath(_))));
        assert!(matches!(spin_of_path("122"), Err(Error::InvalidPath(_))));
        assert!(matches!(SpinSpec::new("11", Half(4)), Err(Error::DomainError(_))));
    }

    #[test]
    fn append_examples() {
        let s = SubspaceState::basis("1").unwrap().append_qubit(0);
        assert_eq!(s, SubspaceState::basis("10").unwrap());
        let d = dicke(2, 1).unwrap().append_qubit(1);
        let r = 0.5f64.sqrt();
        assert!((d.amplitude("011").unwrap() - c64(r)).norm() < 1e-15);
        assert!((d.amplitude("101").unwrap() - c64(r)).norm() < 1e-15);
        assert!(d.amplitude("110").unwrap().norm() < 1e-15);
    }

    #[test]
    fn s2_examples() {
        assert!((expectation_s2(&dicke(4, 2).unwrap()) - 6.0).abs() < 1e-12);
        let singlet = build_spin_eigenstate(&SpinSpec::new("12", Half(0)).unwrap()).unwrap();
        assert!(expectation_s2(&singlet).abs() < 1e-12);
        assert!((expectation_s2(&dicke(2, 1).unwrap().append_qubit(1)) - 2.75).abs() < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let d = dicke(2, 1).unwrap();
        let singlet = build_spin_eigenstate(&SpinSpec::new("12", Half(0)).unwrap()).unwrap();
        assert!((fidelity(&d, &d).unwrap() - 1.0).abs() < 1e-15);
        assert!(fidelity(&d, &singlet).unwrap() < 1e-15);
        let mut rho = DMatrix::zeros(2, 2);
        rho[(0, 0)] = c64(0.5);
        rho[(1, 1)] = c64(0.5);
        let rho = DensityMatrix::new(d.indexer, rho).unwrap();
        assert!((fidelity_mixed(&rho, &d).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dicke_matches_symmetric_path() {
        for n in 1..=7 {
            for k in 0..=n {
                let a = dicke(n, k).unwrap();
                let b = build_spin_eigenstate(&SpinSpec::dicke(n, k).unwrap()).unwrap();
                assert!((a.amplitudes - b.amplitudes).camax() < 1e-13);
            }
        }
    }

    #[test]
    fn flip_all_reverses() {
        let s = SubspaceState::basis("0011").unwrap().flip_all();
        assert_eq!(s, SubspaceState::basis("1100").unwrap());
    }
}
