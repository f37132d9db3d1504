//! Single-qubit expansions `X(n-1, S, ·) ⊗ |b⟩ → X(n, S ± 1/2, ·)` and
//! multi-qubit Dicke jumps under all-equal coupling.

use crate::error::{Error, Result};
use crate::half::Half;
use crate::hamiltonian::{build_hamiltonian, evolve, omega, GeneralizedCoupling, SubspaceHamiltonian};
use crate::spin::{binomial, build_spin_eigenstate, clebsch_ab, dicke, BasisIndexer, SpinSpec, SubspaceState};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// Target spin `S + 1/2` (path step `'1'`).
    Up,
    /// Target spin `S - 1/2` (path step `'2'`).
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExpansionCase {
    pub bit: u8,
    pub direction: Direction,
}

impl ExpansionCase {
    pub const fn new(bit: u8, direction: Direction) -> Self {
        ExpansionCase { bit, direction }
    }

    pub fn all() -> [ExpansionCase; 4] {
        [
            ExpansionCase::new(0, Direction::Up),
            ExpansionCase::new(0, Direction::Down),
            ExpansionCase::new(1, Direction::Up),
            ExpansionCase::new(1, Direction::Down),
        ]
    }

    pub fn path_step(&self) -> char {
        match self.direction {
            Direction::Up => '1',
            Direction::Down => '2',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub t_s: f64,
    pub theta: f64,
    pub feasible: bool,
    pub achieved_fidelity: f64,
    pub omega: f64,
    pub cos_argument: f64,
}

/// Target amplitudes `(τ0, τ1)` on the branches `X(S, M) ⊗ |0⟩` and
/// `X(S, M+1) ⊗ |1⟩`: `(A, B)` going up, `(-B, A)` going down.
pub fn branch_weights(direction: Direction, s: Half, m: Half) -> Result<(f64, f64)> {
    let (a, b) = clebsch_ab(s, m)?;
    Ok(match direction {
        Direction::Up => (a, b),
        Direction::Down => (-b, a),
    })
}

/// Squared overlap between the appended start state and the target.
pub fn start_overlap_sq(case: ExpansionCase, s: Half, m: Half) -> Result<f64> {
    let (t0, t1) = branch_weights(case.direction, s, m)?;
    Ok(if case.bit == 0 { t0 * t0 } else { t1 * t1 })
}

/// `cos(ω t_s) = 1 - 1/(2c²)` with `c` the start/target overlap.
pub fn cosine_argument(case: ExpansionCase, s: Half, m: Half) -> Result<f64> {
    let c2 = start_overlap_sq(case, s, m)?;
    Ok(if c2 == 0.0 { f64::NEG_INFINITY } else { 1.0 - 0.5 / c2 })
}

/// Smallest `t_s ≥ 0` reaching the target branch magnitudes. `s` is the
/// start spin and `m` the parameter with target `M̃ = m + 1/2`.
pub fn stopping_time(case: ExpansionCase, s: Half, m: Half, omega: f64) -> Result<f64> {
    let c2 = start_overlap_sq(case, s, m)?;
    if (1.0 - c2).abs() < 1e-14 {
        return Ok(0.0);
    }
    let x = cosine_argument(case, s, m)?;
    if x < -1.0 - 1e-12 {
        return Err(Error::Infeasible(x));
    }
    if omega == 0.0 {
        return Err(Error::DomainError("ω = 0 leaves the branches frozen".into()));
    }
    Ok(x.clamp(-1.0, 1.0).acos() / omega.abs())
}

/// Wrap into `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Multiply each amplitude by `e^{imθ}`, `m` = ones among the last `count` bits.
pub fn rz_last(state: &SubspaceState, theta: f64, count: usize) -> Result<SubspaceState> {
    if count > state.n() {
        return Err(Error::OutOfRange(format!("count {count} > n = {}", state.n())));
    }
    let mask = if count == 64 { u64::MAX } else { (1u64 << count) - 1 };
    let mut out = state.clone();
    for (i, u) in state.indexer.states().into_iter().enumerate() {
        let m = (u & mask).count_ones() as f64;
        if m > 0.0 {
            out.amplitudes[i] *= Complex64::from_polar(1.0, m * theta);
        }
    }
    Ok(out)
}

/// Overlaps `(⟨t0|ψ0⟩, ⟨t1|ψ1⟩)` of the last-bit branches plus the largest
/// norm of `ψ_b` outside `span(t_b)`.
fn branch_overlaps(state: &SubspaceState, target: &SubspaceState) -> Result<([Complex64; 2], f64)> {
    state.same_space(target)?;
    let states = state.indexer.states();
    let mut ov = [Complex64::new(0.0, 0.0); 2];
    let mut tn = [0.0; 2];
    for (i, u) in states.iter().enumerate() {
        let b = (u & 1) as usize;
        ov[b] += target.amplitudes[i].conj() * state.amplitudes[i];
        tn[b] += target.amplitudes[i].norm_sqr();
    }
    let coef: Vec<Complex64> = (0..2).map(|b| if tn[b] > 0.0 { ov[b] / tn[b] } else { Complex64::new(0.0, 0.0) }).collect();
    let mut res = [0.0; 2];
    for (i, u) in states.iter().enumerate() {
        let b = (u & 1) as usize;
        res[b] += (state.amplitudes[i] - coef[b] * target.amplitudes[i]).norm_sqr();
    }
    Ok((ov, res[0].max(res[1]).sqrt()))
}

/// The `θ` for [`rz_last`] that maximizes fidelity with `target`.
pub fn phase_correction_angle(state_after_evolution: &SubspaceState, target: &SubspaceState) -> Result<f64> {
    let (ov, residual) = branch_overlaps(state_after_evolution, target)?;
    if residual > 1e-9 {
        return Err(Error::BranchDecompositionFailed(residual));
    }
    if ov[0].norm() < 1e-300 || ov[1].norm() < 1e-300 {
        return Ok(0.0);
    }
    Ok(wrap_angle(ov[0].arg() - ov[1].arg()))
}

/// The eigenstate produced by `case` from `start`.
pub fn target_spec(start: &SpinSpec, case: ExpansionCase) -> Result<SpinSpec> {
    let mut path = start.path.clone();
    path.push(case.path_step());
    let m = start.m + Half(1 - 2 * case.bit as i64);
    SpinSpec::new(&path, m)
}

/// Branch parameter `M = M̃ - 1/2` of a target.
fn eq1_m(target: &SpinSpec) -> Half {
    target.m - Half::HALF
}

/// Gap between the two branch spins of `target`'s block, `E(S+1/2) - E(S-1/2)`,
/// or `None` when the lower branch does not exist.
fn branch_gap(coupling: &GeneralizedCoupling, start_s: Half, target: &SpinSpec) -> Result<Option<f64>> {
    let lo = start_s - Half::HALF;
    if lo.twice() < target.m.twice().abs() {
        return Ok(None);
    }
    Ok(Some(omega(coupling, start_s + Half::HALF, lo)?))
}

fn check_coupling(coupling: &GeneralizedCoupling, target: &SpinSpec) -> Result<()> {
    if coupling.n != target.n || coupling.k != target.k() {
        return Err(Error::DimensionMismatch { expected: target.indexer().dim(), found: BasisIndexer { n: coupling.n, k: coupling.k }.dim() });
    }
    Ok(())
}

/// Expand with a caller-supplied Hamiltonian for the target block.
pub fn expand_with(
    start: &SpinSpec,
    start_state: &SubspaceState,
    case: ExpansionCase,
    coupling: &GeneralizedCoupling,
    h: &SubspaceHamiltonian,
) -> Result<(SubspaceState, ExpansionReport)> {
    let target = target_spec(start, case)?;
    check_coupling(coupling, &target)?;
    let m = eq1_m(&target);
    let cos_argument = cosine_argument(case, start.s, m)?;
    let gap = branch_gap(coupling, start.s, &target)?;
    let omega = gap.unwrap_or(0.0);
    let t_s = if gap.is_none() { 0.0 } else { stopping_time(case, start.s, m, omega)? };
    let target_state = build_spin_eigenstate(&target)?;
    let evolved = evolve(&start_state.append_qubit(case.bit), h, t_s)?;
    let theta = phase_correction_angle(&evolved, &target_state)?;
    let out = rz_last(&evolved, theta, 1)?;
    let achieved_fidelity = target_state.inner(&out)?.norm();
    Ok((out, ExpansionReport { t_s, theta, feasible: true, achieved_fidelity, omega, cos_argument }))
}

/// Append `|bit⟩`, evolve for `t_s`, correct the last-qubit phase.
pub fn expand(start: &SpinSpec, case: ExpansionCase, coupling: &GeneralizedCoupling) -> Result<(SubspaceState, ExpansionReport)> {
    let h = build_hamiltonian(coupling)?;
    let start_state = build_spin_eigenstate(start)?;
    expand_with(start, &start_state, case, coupling, &h)
}

/// Model-gauge branch amplitudes `(|a1|², |a2|²)` over `[0, t_max]`.
pub fn branch_trajectory(case: ExpansionCase, s: Half, m: Half, omega: f64, t_max: f64, samples: usize) -> Result<Vec<[f64; 3]>> {
    let (t0, t1) = branch_weights(case.direction, s, m)?;
    let start = if case.bit == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
    let proj = t0 * start[0] + t1 * start[1];
    Ok((0..samples)
        .map(|i| {
            let t = if samples > 1 { t_max * i as f64 / (samples - 1) as f64 } else { 0.0 };
            let e = Complex64::from_polar(1.0, -omega * t) - 1.0;
            let a1 = start[0] + e * proj * t0;
            let a2 = start[1] + e * proj * t1;
            [t, a1.norm_sqr(), a2.norm_sqr()]
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JumpMethod {
    Preserving,
    Incrementing,
}

/// `C(n+q, k)/C(n, k)` or `C(n+q, k+q)/C(n, k)` as a running product.
pub fn jump_ratio(n: usize, k: usize, q: usize, method: JumpMethod) -> f64 {
    (1..=q).fold(1.0, |acc, i| {
        let num = (n + i) as f64;
        let den = match method {
            JumpMethod::Preserving => (n + i - k) as f64,
            JumpMethod::Incrementing => (k + i) as f64,
        };
        acc * num / den
    })
}

/// Largest `q` whose binomial ratio stays within 4.
pub fn jump_qmax(n: usize, k: usize, method: JumpMethod) -> Result<usize> {
    if k > n || n == 0 {
        return Err(Error::OutOfRange(format!("(n, k) = ({n}, {k})")));
    }
    let unbounded = match method {
        JumpMethod::Preserving => k == 0,
        JumpMethod::Incrementing => k == n,
    };
    if unbounded {
        return Err(Error::OutOfRange(format!("the ratio never exceeds 4 for (n, k) = ({n}, {k})")));
    }
    if method == JumpMethod::Incrementing && k == 0 {
        return Err(Error::OutOfRange("incrementing jumps need k ≥ 1".into()));
    }
    let limit = 4.0 * (1.0 + 1e-12);
    let mut q = 0;
    let mut ratio = 1.0;
    loop {
        let i = q + 1;
        let den = match method {
            JumpMethod::Preserving => (n + i - k) as f64,
            JumpMethod::Incrementing => (k + i) as f64,
        };
        let next = ratio * (n + i) as f64 / den;
        if next > limit {
            return Ok(q);
        }
        ratio = next;
        q = i;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpReport {
    pub q: usize,
    pub t_s: f64,
    pub per_qubit_theta: f64,
    pub achieved_fidelity: f64,
    pub phase_uncorrectable: bool,
    pub residual_infidelity: f64,
}

/// Fidelity-maximizing uniform angle for a sum `Σ_m w_m e^{imθ}`.
/// Returns `(θ, |Σ|, exact)`.
pub(crate) fn best_uniform_angle(classes: &[(usize, Complex64)]) -> (f64, f64, bool) {
    let nonzero: Vec<(usize, Complex64)> = classes.iter().copied().filter(|(_, w)| w.norm() > 1e-15).collect();
    let value = |theta: f64| -> f64 { nonzero.iter().map(|(m, w)| w * Complex64::from_polar(1.0, *m as f64 * theta)).sum::<Complex64>().norm() };
    match nonzero.as_slice() {
        [] | [_] => (0.0, value(0.0), true),
        [(m0, w0), (m1, w1)] if m1 - m0 == 1 => {
            let theta = wrap_angle(w0.arg() - w1.arg());
            (theta, value(theta), true)
        }
        _ => {
            let step = 1e-4;
            let steps = (2.0 * PI / step).ceil() as usize;
            let mut best = (0.0, f64::MIN);
            for i in 0..=steps {
                let theta = -PI + i as f64 * step;
                let v = value(theta);
                if v > best.1 {
                    best = (theta, v);
                }
            }
            let (mut lo, mut hi) = (best.0 - step, best.0 + step);
            let g = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..80 {
                let a = hi - g * (hi - lo);
                let b = lo + g * (hi - lo);
                if value(a) > value(b) {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            let theta = wrap_angle(0.5 * (lo + hi));
            (theta, value(theta), false)
        }
    }
}

/// Stop time of a Dicke jump with binomial ratio `ratio` under a rank-one
/// gap `Ω`: `cos(Ω t_s) = 1 - ratio/2`.
pub fn jump_stopping_time(ratio: f64, big_omega: f64) -> Result<f64> {
    let x = 1.0 - ratio / 2.0;
    if x < -1.0 - 1e-12 {
        return Err(Error::Infeasible(x));
    }
    if big_omega == 0.0 {
        return Err(Error::DomainError("Ω = 0".into()));
    }
    Ok(x.clamp(-1.0, 1.0).acos() / big_omega.abs())
}

/// Expand `D^n_k ⊗ |bit⟩^q` to `D^{n+q}_{k+bit·q}` with all couplings
/// equal to `j`.
pub fn jump_expand(start: &SubspaceState, q: usize, bit: u8, j: f64) -> Result<(SubspaceState, JumpReport)> {
    let (n, k) = (start.n(), start.k());
    let method = if bit == 0 { JumpMethod::Preserving } else { JumpMethod::Incrementing };
    let unbounded = matches!(jump_qmax(n, k, method), Err(Error::OutOfRange(_)));
    if !unbounded {
        let qmax = jump_qmax(n, k, method)?;
        if q > qmax {
            return Err(Error::JumpInfeasible { q, qmax });
        }
    }
    let mut psi = start.clone();
    for _ in 0..q {
        psi = psi.append_qubit(bit);
    }
    let target = dicke(n + q, k + bit as usize * q)?;
    let dim = target.indexer.dim();
    let ratio = binomial(n + q, target.k()) as f64 / binomial(n, k) as f64;
    let big_omega = 2.0 * j * dim as f64;
    let t_s = if q == 0 || dim == 1 { 0.0 } else { jump_stopping_time(ratio, big_omega)? };

    let overlap = target.amplitudes.dotc(&psi.amplitudes);
    let kick = (Complex64::from_polar(1.0, -big_omega * t_s) - 1.0) * overlap;
    let evolved = SubspaceState { indexer: psi.indexer, amplitudes: &psi.amplitudes + &target.amplitudes * kick };

    let mask = if q >= 64 { u64::MAX } else { (1u64 << q) - 1 };
    let mut classes: Vec<(usize, Complex64)> = (0..=q).map(|m| (m, Complex64::new(0.0, 0.0))).collect();
    for (i, u) in evolved.indexer.states().into_iter().enumerate() {
        let m = (u & mask).count_ones() as usize;
        classes[m].1 += target.amplitudes[i].conj() * evolved.amplitudes[i];
    }
    let (theta, _, exact) = best_uniform_angle(&classes);
    let out = rz_last(&evolved, theta, q)?;
    let achieved_fidelity = target.inner(&out)?.norm();
    let residual_infidelity = (1.0 - achieved_fidelity * achieved_fidelity).max(0.0);
    let report = JumpReport {
        q,
        t_s,
        per_qubit_theta: theta,
        achieved_fidelity,
        phase_uncorrectable: !exact && residual_infidelity > 1e-9,
        residual_infidelity,
    };
    Ok((out, report))
}
