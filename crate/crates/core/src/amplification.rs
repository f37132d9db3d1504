//! Spin pumping: repeated `[evolve π/ω; R_z(π)]` cycles rotate the
//! appended state toward the target eigenstate, then one exact step lands
//! on it.
//!
//! Coefficients are reported in a fixed gauge: `c1 = ⟨T|ψ⟩`, `c2 = ⟨O|ψ⟩`
//! with `T` the target and `O` the other spin branch, and the global phase
//! chosen so that `c2` (or `c1` once `c2` vanishes) is real and nonnegative.
//! `a1`, `a2` are the amplitudes on `X(S, M) ⊗ |0⟩` and `X(S, M+1) ⊗ |1⟩`.

use crate::error::{Error, Result};
use crate::expansion::{branch_weights, target_spec, Direction, ExpansionCase};
use crate::half::Half;
use crate::hamiltonian::{build_hamiltonian, energy, GeneralizedCoupling, SubspaceHamiltonian};
use crate::spin::{clebsch_ab, raw_eigenstate, BasisIndexer, SpinSpec, SubspaceState};
use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    Start,
    Evolve,
    Rotate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTrack {
    pub r: usize,
    pub stage: Stage,
    pub c1: Complex64,
    pub c2: Complex64,
    pub a1: Complex64,
    pub a2: Complex64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub s2: f64,
}

impl CoefficientTrack {
    /// Starting point `X(S, M+1) ⊗ |1⟩` of the worked case: `(c1, c2) = (B, A)`.
    pub fn worked_start(s: Half, m: Half) -> Result<Self> {
        let (a, b) = clebsch_ab(s, m)?;
        let c = |x: f64| Complex64::new(x, 0.0);
        Ok(CoefficientTrack { r: 0, stage: Stage::Start, c1: c(b), c2: c(a), a1: c(0.0), a2: c(1.0), a, b, s2: f64::NAN })
    }
}

/// One Grover iterate `[evolve π/ω; R_z(π)]` on real boundary coefficients.
pub fn grover_step(track: &CoefficientTrack) -> CoefficientTrack {
    debug_assert!(track.c1.im.abs() < 1e-10 && track.c2.im.abs() < 1e-10);
    let (a, b) = (track.a, track.b);
    let cos = a * a - b * b;
    let sin = 2.0 * a * b;
    let c1 = track.c1 * cos + track.c2 * sin;
    let c2 = -track.c1 * sin + track.c2 * cos;
    CoefficientTrack {
        r: track.r + 1,
        stage: Stage::Rotate,
        c1,
        c2,
        a1: c1 * a - c2 * b,
        a2: c1 * b + c2 * a,
        a,
        b,
        s2: track.s2,
    }
}

/// `⌈(π/2 - α/2)/α⌉` for a start overlap `c1(0)`, at least 1.
pub fn iterations_for_overlap(c1_0: f64) -> usize {
    if c1_0 * c1_0 >= 0.25 - 1e-15 {
        return 1;
    }
    let alpha = 2.0 * c1_0.asin();
    let x = (PI / 2.0 - alpha / 2.0) / alpha;
    ((x - 1e-9).ceil() as usize).max(1)
}

/// Iterations for the worked case `X(S, M+1) ⊗ |1⟩ → X(S+1/2, M+1/2)`.
pub fn iteration_count(s: Half, m: Half) -> usize {
    match clebsch_ab(s, m) {
        Ok((_, b)) => iterations_for_overlap(b),
        Err(_) => 1,
    }
}

/// Iterations for the climb `D^{p-1}_{q-1} ⊗ |1⟩ → D^p_q`.
pub fn climb_iterations(p: usize, q: usize) -> usize {
    iterations_for_overlap((q as f64 / p as f64).sqrt())
}

/// The small-angle estimate `⌈(π/4)√(p/q) - 1/2⌉`.
pub fn climb_iterations_estimate(p: usize, q: usize) -> usize {
    let x = PI / 4.0 * (p as f64 / q as f64).sqrt() - 0.5;
    (x - 1e-12).ceil().max(0.0) as usize
}

/// `⟨S²⟩` of `|a1| e^{-iφ} X(S,M)⊗|0⟩ + |a2| X(S,M+1)⊗|1⟩` after `R_z(θ)`.
pub fn expected_s2_after_rotation(a1_mag: f64, a2_mag: f64, phi: f64, theta: f64, s: Half, m: Half) -> Result<f64> {
    let (a, b) = clebsch_ab(s, m)?;
    let (sv, mv) = (s.value(), m.value());
    Ok(sv * (sv + 1.0) - (mv + 0.25) + (2.0 * mv + 1.0) * a1_mag * a1_mag + 2.0 * (2.0 * sv + 1.0) * a * b * a1_mag * a2_mag * (phi + theta).cos())
}

/// Operations the schedule needs from a two-branch simulator.
pub trait TwoBranchEngine {
    fn evolve(&mut self, t: f64);
    /// Physical `R_z(θ)` on the appended qubit.
    fn rz(&mut self, theta: f64);
    /// Amplitudes on `X(S, M) ⊗ |0⟩` and `X(S, M+1) ⊗ |1⟩`.
    fn branches(&self) -> (Complex64, Complex64);
}

/// Geometry shared by every engine for one expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBranchSetup {
    pub case: ExpansionCase,
    pub s: Half,
    pub m: Half,
    /// Target weights on the two branches.
    pub tau: (f64, f64),
    /// Sign making the start's `c2` nonnegative.
    pub other_sign: f64,
    pub s_target: Half,
    pub s_other: Half,
    /// `E_target - E_other`.
    pub delta: f64,
}

impl TwoBranchSetup {
    pub fn new(case: ExpansionCase, s: Half, m: Half, delta: f64) -> Result<Self> {
        let tau = branch_weights(case.direction, s, m)?;
        let start_o = if case.bit == 0 { -tau.1 } else { tau.0 };
        let other_sign = if start_o < 0.0 { -1.0 } else { 1.0 };
        let (s_target, s_other) = match case.direction {
            Direction::Up => (s + Half::HALF, s - Half::HALF),
            Direction::Down => (s - Half::HALF, s + Half::HALF),
        };
        Ok(TwoBranchSetup { case, s, m, tau, other_sign, s_target, s_other, delta })
    }

    /// Start overlap `c1(0)`.
    pub fn start_overlap(&self) -> f64 {
        if self.case.bit == 0 { self.tau.0.abs() } else { self.tau.1.abs() }
    }

    pub fn alpha(&self) -> f64 {
        2.0 * self.start_overlap().asin()
    }

    pub fn predicted_iterations(&self) -> usize {
        iterations_for_overlap(self.start_overlap())
    }

    fn coefficients(&self, a: Complex64, b: Complex64) -> (Complex64, Complex64) {
        let (t0, t1) = self.tau;
        (a * t0 + b * t1, (-a * t1 + b * t0) * self.other_sign)
    }

    fn s2_of(&self, c1: Complex64, c2: Complex64) -> f64 {
        let st = self.s_target.value();
        let so = self.s_other.value();
        c1.norm_sqr() * st * (st + 1.0) + c2.norm_sqr() * so * (so + 1.0)
    }

    fn target_s2(&self) -> f64 {
        let st = self.s_target.value();
        st * (st + 1.0)
    }

    fn track(&self, r: usize, stage: Stage, a: Complex64, b: Complex64) -> CoefficientTrack {
        let (c1, c2) = self.coefficients(a, b);
        let pivot = if c2.norm() > 1e-12 { c2 } else { c1 };
        let g = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { Complex64::new(1.0, 0.0) };
        let (clebsch_a, clebsch_b) = clebsch_ab(self.s, self.m).unwrap_or((self.tau.0, self.tau.1));
        CoefficientTrack { r, stage, c1: c1 * g, c2: c2 * g, a1: a * g, a2: b * g, a: clebsch_a, b: clebsch_b, s2: self.s2_of(c1, c2) }
    }

    /// Smallest `t ≥ 0` with `|a(t)| = |τ0|`, or `None` when out of reach.
    fn exact_stop(&self, a: Complex64, b: Complex64) -> Option<f64> {
        let (c1, c2) = self.coefficients(a, b);
        let (t0, t1) = self.tau;
        let p = c1 * t0;
        let q = c2 * (-t1 * self.other_sign);
        let want = t0 * t0;
        let (pm, qm) = (p.norm(), q.norm());
        if pm * qm < 1e-15 {
            return ((pm * pm + qm * qm - want).abs() < 1e-12).then_some(0.0);
        }
        let x = (want - pm * pm - qm * qm) / (2.0 * pm * qm);
        if x.abs() > 1.0 + 1e-12 {
            return None;
        }
        let acos = x.clamp(-1.0, 1.0).acos();
        let sd = self.delta.signum() * (p.arg() - q.arg());
        let two_pi = 2.0 * PI;
        let mut best = f64::INFINITY;
        for cand in [sd - acos, sd + acos] {
            let mut phi = cand.rem_euclid(two_pi);
            if two_pi - phi < 1e-12 {
                phi = 0.0;
            }
            best = best.min(phi);
        }
        Some(best / self.delta.abs())
    }

    fn exact_theta(&self, a: Complex64, b: Complex64) -> f64 {
        let (t0, t1) = self.tau;
        let ov0 = a * t0;
        let ov1 = b * t1;
        if ov0.norm() < 1e-300 || ov1.norm() < 1e-300 {
            return 0.0;
        }
        crate::expansion::wrap_angle(ov0.arg() - ov1.arg())
    }
}

/// The reduced two-dimensional model.
#[derive(Debug, Clone)]
pub struct ModelEngine {
    setup: TwoBranchSetup,
    a: Complex64,
    b: Complex64,
}

impl ModelEngine {
    pub fn new(setup: TwoBranchSetup) -> Self {
        let (a, b) = if setup.case.bit == 0 { (1.0, 0.0) } else { (0.0, 1.0) };
        ModelEngine { setup, a: Complex64::new(a, 0.0), b: Complex64::new(b, 0.0) }
    }
}

impl TwoBranchEngine for ModelEngine {
    fn evolve(&mut self, t: f64) {
        let s = &self.setup;
        let (c1, c2) = s.coefficients(self.a, self.b);
        let c1 = c1 * Complex64::from_polar(1.0, -s.delta * t);
        let (t0, t1) = s.tau;
        let o = s.other_sign;
        self.a = c1 * t0 - c2 * t1 * o;
        self.b = c1 * t1 + c2 * t0 * o;
    }

    fn rz(&mut self, theta: f64) {
        self.b *= Complex64::from_polar(1.0, theta);
    }

    fn branches(&self) -> (Complex64, Complex64) {
        (self.a, self.b)
    }
}

/// Full simulation inside the target block.
#[derive(Debug, Clone)]
pub struct SubspaceEngine<'h> {
    h: &'h SubspaceHamiltonian,
    pub state: SubspaceState,
    branch0: DVector<Complex64>,
    branch1: DVector<Complex64>,
}

impl<'h> SubspaceEngine<'h> {
    /// `start` must be the raw sibling named by `case`; `branch0`/`branch1`
    /// are the appended raw siblings.
    pub fn new(h: &'h SubspaceHamiltonian, start: SubspaceState, branch0: DVector<Complex64>, branch1: DVector<Complex64>) -> Self {
        SubspaceEngine { h, state: start, branch0, branch1 }
    }
}

impl TwoBranchEngine for SubspaceEngine<'_> {
    fn evolve(&mut self, t: f64) {
        self.state = crate::hamiltonian::evolve(&self.state, self.h, t).expect("matching block");
    }

    fn rz(&mut self, theta: f64) {
        self.state = crate::expansion::rz_last(&self.state, theta, 1).expect("n ≥ 1");
    }

    fn branches(&self) -> (Complex64, Complex64) {
        (self.branch0.dotc(&self.state.amplitudes), self.branch1.dotc(&self.state.amplitudes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplificationResult {
    pub iterations_used: usize,
    pub predicted_iterations: usize,
    pub alpha: f64,
    pub trace: Vec<CoefficientTrack>,
    #[serde(skip)]
    pub final_state: Option<SubspaceState>,
    pub final_fidelity: f64,
    /// `1 - |c1|²` at the boundary before the exact last step.
    pub pre_final_error: f64,
}

/// Run the pumping schedule on any engine.
pub fn run_schedule<E: TwoBranchEngine>(engine: &mut E, setup: &TwoBranchSetup) -> Result<AmplificationResult> {
    let predicted = setup.predicted_iterations();
    let cap = 10 * predicted.max(1);
    let tol = 1e-9 * setup.target_s2().max(1.0);
    let (a, b) = engine.branches();
    let mut trace = vec![setup.track(0, Stage::Start, a, b)];
    let mut pre_final_error = 1.0 - setup.coefficients(a, b).0.norm_sqr();
    let mut r = 0;
    loop {
        let (a, b) = engine.branches();
        let (c1, c2) = setup.coefficients(a, b);
        if (setup.s2_of(c1, c2) - setup.target_s2()).abs() <= tol {
            break;
        }
        if r >= cap {
            return Err(Error::NoConvergence(cap));
        }
        pre_final_error = 1.0 - c1.norm_sqr();
        r += 1;
        match setup.exact_stop(a, b) {
            Some(t) => {
                engine.evolve(t);
                let (a, b) = engine.branches();
                trace.push(setup.track(r, Stage::Evolve, a, b));
                engine.rz(setup.exact_theta(a, b));
            }
            None => {
                if setup.delta == 0.0 {
                    return Err(Error::NoConvergence(cap));
                }
                engine.evolve(PI / setup.delta.abs());
                let (a, b) = engine.branches();
                trace.push(setup.track(r, Stage::Evolve, a, b));
                engine.rz(PI);
            }
        }
        let (a, b) = engine.branches();
        trace.push(setup.track(r, Stage::Rotate, a, b));
    }
    let (a, b) = engine.branches();
    let final_fidelity = setup.coefficients(a, b).0.norm();
    Ok(AmplificationResult {
        iterations_used: r,
        predicted_iterations: predicted,
        alpha: setup.alpha(),
        trace,
        final_state: None,
        final_fidelity,
        pre_final_error,
    })
}

/// Evolution phases `|Δ| t` of the pumping schedule in order: `π` for each
/// Grover iterate, then the exact last step. `delta_sign` is the sign of
/// `E_target - E_other`.
pub fn schedule_phases(case: ExpansionCase, s: Half, m: Half, delta_sign: f64) -> Result<Vec<f64>> {
    let setup = TwoBranchSetup::new(case, s, m, if delta_sign < 0.0 { -1.0 } else { 1.0 })?;
    let mut engine = ModelEngine::new(setup.clone());
    let cap = 10 * setup.predicted_iterations().max(1);
    let mut phases = Vec::new();
    while phases.len() < cap {
        let (a, b) = engine.branches();
        if let Some(t) = setup.exact_stop(a, b) {
            phases.push(t);
            return Ok(phases);
        }
        engine.evolve(PI);
        engine.rz(PI);
        phases.push(PI);
    }
    Err(Error::NoConvergence(cap))
}

/// Pumping on the reduced model with gap `delta = E_target - E_other`.
pub fn amplified_expand_model(case: ExpansionCase, s: Half, m: Half, delta: f64) -> Result<AmplificationResult> {
    let setup = TwoBranchSetup::new(case, s, m, delta)?;
    let mut engine = ModelEngine::new(setup.clone());
    run_schedule(&mut engine, &setup)
}

/// Full-state pumping from `start` (any of the four cases) under `coupling`
/// on the target block.
pub fn amplified_expand(start: &SpinSpec, case: ExpansionCase, coupling: &GeneralizedCoupling) -> Result<AmplificationResult> {
    let h = build_hamiltonian(coupling)?;
    amplified_expand_with(start, case, coupling, &h)
}

pub fn amplified_expand_with(start: &SpinSpec, case: ExpansionCase, coupling: &GeneralizedCoupling, h: &SubspaceHamiltonian) -> Result<AmplificationResult> {
    amplified_expand_from(start, None, case, coupling, h)
}

/// As [`amplified_expand_with`], starting from `start_state` (a global
/// phase times the eigenstate `start`) instead of a fresh build.
pub fn amplified_expand_from(
    start: &SpinSpec,
    start_state: Option<&SubspaceState>,
    case: ExpansionCase,
    coupling: &GeneralizedCoupling,
    h: &SubspaceHamiltonian,
) -> Result<AmplificationResult> {
    let target = target_spec(start, case)?;
    if coupling.n != target.n || coupling.k != target.k() {
        return Err(Error::DimensionMismatch { expected: target.indexer().dim(), found: h.indexer.dim() });
    }
    let m = target.m - Half::HALF;
    let s = start.s;
    let (s_target, s_other) = match case.direction {
        Direction::Up => (s + Half::HALF, s - Half::HALF),
        Direction::Down => (s - Half::HALF, s + Half::HALF),
    };
    let other_exists = s_other.twice() >= target.m.twice().abs();
    let delta = if other_exists { energy(coupling, s_target)? - energy(coupling, s_other)? } else { 0.0 };
    let setup = TwoBranchSetup::new(case, s, m, delta)?;

    let sibling = |m_sub: Half, bit: u8| -> DVector<Complex64> {
        let exists = m_sub.twice().abs() <= s.twice();
        let out_ix = target.indexer();
        if !exists {
            return DVector::zeros(out_ix.dim());
        }
        let spec = SpinSpec { n: start.n, s, m: m_sub, path: start.path.clone() };
        let raw = raw_eigenstate(&spec).map(|x| Complex64::new(x, 0.0));
        let sub = SubspaceState { indexer: BasisIndexer { n: start.n, k: out_ix.k - bit as usize }, amplitudes: raw };
        sub.append_qubit(bit).amplitudes
    };
    let branch0 = sibling(m, 0);
    let branch1 = sibling(m + Half(2), 1);
    let start_state = match start_state {
        Some(st) => {
            if st.n() != start.n || st.k() != start.k() {
                return Err(Error::DimensionMismatch { expected: start.indexer().dim(), found: st.indexer.dim() });
            }
            st.append_qubit(case.bit)
        }
        None => {
            let v = if case.bit == 0 { branch0.clone() } else { branch1.clone() };
            SubspaceState { indexer: target.indexer(), amplitudes: v }
        }
    };
    let mut engine = SubspaceEngine::new(h, start_state, branch0, branch1);
    let mut result = run_schedule(&mut engine, &setup)?;
    let target_state = crate::spin::build_spin_eigenstate(&target)?;
    result.final_fidelity = target_state.inner(&engine.state)?.norm();
    result.final_state = Some(engine.state);
    Ok(result)
}
