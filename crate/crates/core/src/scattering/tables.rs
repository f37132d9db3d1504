use super::device::KrausCache;
use super::simulate::{simulate_expansion, StopStrategy};
use crate::amplification::climb_iterations;
use crate::error::{Error, Result};
use crate::planner::{PreparationPlan, StepKind};
use crate::spin::{dicke, SubspaceState};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Table {
    /// `D^n_k ⊗ |0⟩ → D^{n+1}_k` from exact inputs.
    I,
    /// `D^n_k ⊗ |1⟩ → D^{n+1}_{k+1}` from exact inputs, pumped where needed.
    II,
    /// `D^n_k` chained from a product state along the modified plan.
    III,
}

impl std::str::FromStr for Table {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "1" => Ok(Table::I),
            "II" | "2" => Ok(Table::II),
            "III" | "3" => Ok(Table::III),
            _ => Err(Error::OutOfRange(format!("no table {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub n: usize,
    pub k: usize,
    /// Percent.
    pub fidelity: f64,
    /// Percent with spin pumping, where the plain expansion is infeasible.
    pub pumped: Option<f64>,
}

/// Highest `k` column of the tables.
pub const MAX_COLUMN: usize = 8;

fn pct(f: f64) -> f64 {
    100.0 * f
}

pub fn expansion_cell(cache: &KrausCache, n: usize, k: usize, bit: u8) -> Result<TableCell> {
    let start = dicke(n, k)?;
    let plain = simulate_expansion(cache, &start, bit, StopStrategy::ClosestApproach, None)?;
    let pumped = if bit == 1 && climb_iterations(n + 1, k + 1) > 1 {
        Some(pct(simulate_expansion(cache, &start, bit, StopStrategy::Pump, None)?.fidelity))
    } else {
        None
    };
    Ok(TableCell { n, k, fidelity: pct(plain.fidelity), pumped })
}

/// Run a plan on the device. Jumps become single weight-preserving
/// expansions; the final bit flip is taken as exact.
pub fn execute_plan_on_device(cache: &KrausCache, plan: &PreparationPlan) -> Result<(SubspaceState, f64)> {
    let (n0, k0) = plan.origin();
    let mut state = dicke(n0, k0)?;
    for step in &plan.steps {
        match step.kind {
            StepKind::WJump(q) => {
                for _ in 0..q {
                    state = simulate_expansion(cache, &state, 0, StopStrategy::ClosestApproach, None)?.state;
                }
            }
            StepKind::WeightPreserving => state = simulate_expansion(cache, &state, 0, StopStrategy::ClosestApproach, None)?.state,
            StepKind::WeightIncrementing => state = simulate_expansion(cache, &state, 1, StopStrategy::ClosestApproach, None)?.state,
            StepKind::AmplifiedIncrement(_) => state = simulate_expansion(cache, &state, 1, StopStrategy::Pump, None)?.state,
            StepKind::BitFlipAll => state = state.flip_all(),
        }
    }
    let (n, k) = plan.target;
    let fidelity = dicke(n, k)?.amplitudes.dotc(&state.amplitudes).norm();
    Ok((state, fidelity))
}

/// Single-step chain `|1…1⟩` or `|0…0⟩` through the listed lattice points.
pub fn execute_chain(cache: &KrausCache, points: &[(usize, usize)]) -> Result<(SubspaceState, f64)> {
    let (n0, k0) = *points.first().ok_or(Error::OutOfRange("empty chain".into()))?;
    let mut state = dicke(n0, k0)?;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b.0 != a.0 + 1 || b.1 < a.1 || b.1 > a.1 + 1 {
            return Err(Error::OutOfRange(format!("no single step from {a:?} to {b:?}")));
        }
        let bit = (b.1 - a.1) as u8;
        state = simulate_expansion(cache, &state, bit, StopStrategy::ClosestApproach, None)?.state;
    }
    let (n, k) = *points.last().unwrap();
    let fidelity = dicke(n, k)?.amplitudes.dotc(&state.amplitudes).norm();
    Ok((state, fidelity))
}

/// `|11⟩ → D^3_2 → … → D^9_2 → D^10_3`.
pub fn d10_3_chain() -> Vec<(usize, usize)> {
    let mut pts: Vec<(usize, usize)> = (2..=9).map(|n| (n, 2)).collect();
    pts.push((10, 3));
    pts
}

/// Cells of `which` for `2 ≤ n ≤ n_max`, ordered by `(n, k)`.
pub fn reproduce_table(cache: &KrausCache, which: Table, n_max: usize) -> Result<Vec<TableCell>> {
    let cells: Vec<(usize, usize)> = (2..=n_max)
        .flat_map(|n| {
            let top = match which {
                Table::III => n - 1,
                _ => (n - 1).min(MAX_COLUMN - 1),
            };
            (1..=top).map(move |k| (n, k))
        })
        .collect();
    cells
        .into_par_iter()
        .map(|(n, k)| match which {
            Table::I => expansion_cell(cache, n, k, 0),
            Table::II => expansion_cell(cache, n, k, 1),
            Table::III => {
                let plan = crate::planner::modified_plan(n, k)?;
                let (_, f) = execute_plan_on_device(cache, &plan)?;
                Ok(TableCell { n, k, fidelity: pct(f), pumped: None })
            }
        })
        .collect()
}
