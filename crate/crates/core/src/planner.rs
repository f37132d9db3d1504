//! Routes through the `(n, k)` plane and their stage counts.
//!
//! A point `(n, k)` stands for `D^n_k`. A step out of `(n, k)` appends one
//! qubit: `|0⟩` keeps the weight, `|1⟩` raises it. Region tests are
//! evaluated at the step's starting point.

use crate::amplification::{amplified_expand_from, climb_iterations, climb_iterations_estimate};
use crate::error::{Error, Result};
use crate::expansion::{expand_with, jump_expand, Direction, ExpansionCase};
use crate::half::Half;
use crate::hamiltonian::{build_hamiltonian, GeneralizedCoupling};
use crate::spin::{build_spin_eigenstate, clebsch_ab, dicke, SpinSpec, SubspaceState};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// Only weight-preserving expansion is feasible.
    I,
    II,
    /// Only weight-incrementing expansion is feasible.
    III,
    Outside,
}

pub fn preserving_feasible(n: usize, k: usize) -> bool {
    4 * k <= 3 * (n + 1)
}

pub fn incrementing_feasible(n: usize, k: usize) -> bool {
    4 * k + 3 >= n
}

pub fn region(n: usize, k: usize) -> Result<Region> {
    if k > n {
        return Err(Error::OutOfRange(format!("k = {k} exceeds n = {n}")));
    }
    Ok(match (preserving_feasible(n, k), incrementing_feasible(n, k)) {
        (true, true) => Region::II,
        (true, false) => Region::I,
        (false, true) => Region::III,
        (false, false) => Region::Outside,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param")]
pub enum StepKind {
    WJump(usize),
    WeightPreserving,
    WeightIncrementing,
    AmplifiedIncrement(usize),
    BitFlipAll,
}

impl StepKind {
    pub fn cost(&self) -> usize {
        match self {
            StepKind::AmplifiedIncrement(r) => *r,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    pub kind: StepKind,
    pub from: (usize, usize),
    pub to: (usize, usize),
}

impl PlanStep {
    fn new(kind: StepKind, from: (usize, usize)) -> Self {
        let (n, k) = from;
        let to = match kind {
            StepKind::WJump(q) => (n + q, k),
            StepKind::WeightPreserving => (n + 1, k),
            StepKind::WeightIncrementing | StepKind::AmplifiedIncrement(_) => (n + 1, k + 1),
            StepKind::BitFlipAll => (n, n - k),
        };
        PlanStep { kind, from, to }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreparationPlan {
    pub target: (usize, usize),
    pub steps: Vec<PlanStep>,
    pub total_cost: usize,
}

impl PreparationPlan {
    fn from_steps(target: (usize, usize), steps: Vec<PlanStep>) -> Self {
        let total_cost = steps.iter().map(|s| s.kind.cost()).sum();
        PreparationPlan { target, steps, total_cost }
    }

    /// Product state the plan starts from, `(n, k)` with `k ∈ {0, n}`.
    pub fn origin(&self) -> (usize, usize) {
        self.steps.first().map(|s| s.from).unwrap_or(self.target)
    }

    /// Lattice points visited, origin first.
    pub fn waypoints(&self) -> Vec<(usize, usize)> {
        let mut out = vec![self.origin()];
        out.extend(self.steps.iter().map(|s| s.to));
        out
    }
}

fn check_target(n: usize, k: usize) -> Result<()> {
    if n == 0 || k > n || n > crate::spin::MAX_QUBITS {
        return Err(Error::OutOfRange(format!("no Dicke target (n, k) = ({n}, {k})")));
    }
    Ok(())
}

/// Back-trace diagonally as far as possible, then horizontally as far as
/// possible, alternating down to a product state.
pub fn linear_plan(n: usize, k: usize) -> Result<PreparationPlan> {
    check_target(n, k)?;
    let mut back = Vec::new();
    let (mut p, mut q) = (n, k);
    let mut diagonal = true;
    while q > 0 && q < p {
        let diag_ok = incrementing_feasible(p - 1, q - 1);
        let horiz_ok = q + 2 <= p && preserving_feasible(p - 1, q);
        if !(if diagonal { diag_ok } else { horiz_ok }) {
            diagonal = !diagonal;
        }
        if diagonal && diag_ok {
            back.push(PlanStep::new(StepKind::WeightIncrementing, (p - 1, q - 1)));
            p -= 1;
            q -= 1;
        } else if !diagonal && horiz_ok {
            back.push(PlanStep::new(StepKind::WeightPreserving, (p - 1, q)));
            p -= 1;
        } else {
            return Err(Error::OutOfRange(format!("no feasible back-step from ({p}, {q})")));
        }
    }
    back.reverse();
    Ok(PreparationPlan::from_steps((n, k), back))
}

/// Iteration count per climb into `(p, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CountRule {
    /// `⌈(π/2 - α/2)/α⌉`, what the pumping schedule actually uses.
    #[default]
    Exact,
    /// `⌈(π/4)√(p/q) - 1/2⌉`.
    Estimate,
}

pub fn climb_cost(p: usize, q: usize, rule: CountRule) -> usize {
    match rule {
        CountRule::Exact => climb_iterations(p, q),
        CountRule::Estimate => climb_iterations_estimate(p, q).max(1),
    }
}

/// `⌈log₄ m⌉` for `m ≥ 1`.
pub fn log4_ceil(m: usize) -> usize {
    let mut stages = 0;
    let mut reach = 1usize;
    while reach < m {
        reach = reach.saturating_mul(4);
        stages += 1;
    }
    stages
}

/// W-state jumps to `(n-k+1, 1)`, then climbs along the diagonal.
pub fn modified_plan(n: usize, k: usize) -> Result<PreparationPlan> {
    modified_plan_with(n, k, CountRule::Exact)
}

pub fn modified_plan_with(n: usize, k: usize, rule: CountRule) -> Result<PreparationPlan> {
    check_target(n, k)?;
    if k == 0 || k == n {
        return Ok(PreparationPlan::from_steps((n, k), Vec::new()));
    }
    if 2 * k > n {
        let mut plan = modified_plan_with(n, n - k, rule)?;
        plan.steps.push(PlanStep::new(StepKind::BitFlipAll, (n, n - k)));
        return Ok(PreparationPlan::from_steps((n, k), plan.steps));
    }
    let w = n - k + 1;
    let mut steps = Vec::new();
    let mut m = 1;
    while m < w {
        let next = (4 * m).min(w);
        steps.push(PlanStep::new(StepKind::WJump(next - m), (m, 1)));
        m = next;
    }
    for j in 2..=k {
        let p = n - k + j;
        let r = climb_cost(p, j, rule);
        let kind = if r == 1 { StepKind::WeightIncrementing } else { StepKind::AmplifiedIncrement(r) };
        steps.push(PlanStep::new(kind, (p - 1, j - 1)));
    }
    Ok(PreparationPlan::from_steps((n, k), steps))
}

/// `⌈log₄(n-k+1)⌉ + Σ_{j=2}^{k} r_(n-k+j, j)` for `k ≤ n/2`.
pub fn cost(n: usize, k: usize, rule: CountRule) -> usize {
    log4_ceil(n - k + 1) + (2..=k).map(|j| climb_cost(n - k + j, j, rule)).sum::<usize>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostCell {
    pub n: usize,
    pub k: usize,
    pub cost: usize,
}

/// Every `1 ≤ k ≤ n/2`, `2 ≤ n ≤ n_max`, ordered by `(n, k)`.
pub fn cost_table(n_max: usize, rule: CountRule) -> Vec<CostCell> {
    let cells: Vec<(usize, usize)> = (2..=n_max).flat_map(|n| (1..=n / 2).map(move |k| (n, k))).collect();
    cells.into_par_iter().map(|(n, k)| CostCell { n, k, cost: cost(n, k, rule) }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionCell {
    pub n: usize,
    pub k: usize,
    pub region: Region,
}

pub fn region_map(n_max: usize) -> Vec<RegionCell> {
    (1..=n_max)
        .flat_map(|n| (0..=n).map(move |k| RegionCell { n, k, region: region(n, k).expect("k ≤ n") }))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanExecution {
    pub state: SubspaceState,
    pub fidelity: f64,
    /// Fidelity against `D^n_k` after each step.
    pub step_fidelities: Vec<f64>,
}

fn product(n: usize, k: usize) -> Result<SubspaceState> {
    dicke(n, k)
}

/// Run a plan with all-coupled exchange `J′` for expansions and all-equal
/// `J` for jumps.
pub fn execute_plan(plan: &PreparationPlan, jprime: f64, jump_j: f64) -> Result<PlanExecution> {
    let (n0, k0) = plan.origin();
    let mut state = product(n0, k0)?;
    let mut step_fidelities = Vec::with_capacity(plan.steps.len());
    for step in &plan.steps {
        let (n, k) = step.from;
        if state.n() != n || state.k() != k {
            return Err(Error::DimensionMismatch { expected: n, found: state.n() });
        }
        state = match step.kind {
            StepKind::WJump(q) => jump_expand(&state, q, 0, jump_j)?.0,
            StepKind::BitFlipAll => state.flip_all(),
            StepKind::WeightPreserving | StepKind::WeightIncrementing | StepKind::AmplifiedIncrement(_) => {
                let bit = if step.kind == StepKind::WeightPreserving { 0 } else { 1 };
                let case = ExpansionCase::new(bit, Direction::Up);
                let start = SpinSpec::dicke(n, k)?;
                let (tn, tk) = step.to;
                let coupling = GeneralizedCoupling::all_coupled(tn, tk, jprime)?;
                let h = build_hamiltonian(&coupling)?;
                match step.kind {
                    StepKind::AmplifiedIncrement(_) => {
                        amplified_expand_from(&start, Some(&state), case, &coupling, &h)?.final_state.expect("full run")
                    }
                    _ => expand_with(&start, &state, case, &coupling, &h)?.0,
                }
            }
        };
        let (tn, tk) = step.to;
        step_fidelities.push(dicke(tn, tk)?.inner(&state)?.norm());
    }
    let (n, k) = plan.target;
    let fidelity = dicke(n, k)?.inner(&state)?.norm();
    Ok(PlanExecution { state, fidelity, step_fidelities })
}

/// One expansion in a spin-path preparation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub from: SpinSpec,
    pub case: ExpansionCase,
}

/// Back-trace of `X(n, S, M, path)` to a product state, at each level
/// choosing the branch with the larger coefficient so every step is
/// feasible without pumping.
pub fn spin_path_plan(target: &SpinSpec) -> Result<(SpinSpec, Vec<PathStep>)> {
    let mut steps = Vec::new();
    let mut cur = SpinSpec::new(&target.path, target.m)?;
    while !(cur.n == 1 || (2 * cur.s.twice() == 2 * cur.n as i64 && cur.m.twice().abs() == cur.s.twice())) {
        let prev_path = &cur.path[..cur.n - 1];
        let prev_s = crate::spin::spin_of_path(prev_path)?;
        let direction = if cur.path.ends_with('1') { Direction::Up } else { Direction::Down };
        let m = cur.m - Half::HALF;
        let (a, b) = clebsch_ab(prev_s, m).unwrap_or((0.0, 0.0));
        let (t0, t1) = match direction {
            Direction::Up => (a, b),
            Direction::Down => (b, a),
        };
        let ok0 = m.twice().abs() <= prev_s.twice();
        let ok1 = (m + Half(2)).twice().abs() <= prev_s.twice();
        let bit = match (ok0, ok1) {
            (true, true) => u8::from(t1 > t0),
            (true, false) => 0,
            (false, true) => 1,
            (false, false) => return Err(Error::InvalidPath(cur.path.clone())),
        };
        let prev_m = if bit == 0 { m } else { m + Half(2) };
        let from = SpinSpec::new(prev_path, prev_m)?;
        steps.push(PathStep { from: from.clone(), case: ExpansionCase::new(bit, direction) });
        cur = from;
    }
    steps.reverse();
    Ok((cur, steps))
}

/// Prepare `X(n, S, M, path)` by single-step expansions under all-coupled `J′`.
pub fn prepare_spin_path(target: &SpinSpec, jprime: f64) -> Result<(SubspaceState, Vec<PathStep>, f64)> {
    let (origin, steps) = spin_path_plan(target)?;
    let mut state = build_spin_eigenstate(&origin)?;
    for step in &steps {
        let next = crate::expansion::target_spec(&step.from, step.case)?;
        let coupling = GeneralizedCoupling::all_coupled(next.n, next.k(), jprime)?;
        let h = build_hamiltonian(&coupling)?;
        state = expand_with(&step.from, &state, step.case, &coupling, &h)?.0;
    }
    let fidelity = build_spin_eigenstate(target)?.inner(&state)?.norm();
    Ok((state, steps, fidelity))
}
