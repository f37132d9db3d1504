use super::channel::extract_strengths;
use super::device::KrausCache;
use crate::amplification::schedule_phases;
use crate::error::{Error, Result};
use crate::expansion::{cosine_argument, wrap_angle, Direction, ExpansionCase};
use crate::half::Half;
use crate::hamiltonian::energy;
use crate::spin::{dicke, SubspaceState};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopStrategy {
    /// Fail with `NoCrossing` when the two diagonal families never meet.
    Strict,
    /// Stop at the best product near the closest approach.
    ClosestApproach,
    /// Pump spin before the last entangling run.
    Pump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub d1sq: f64,
    pub d2sq: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimulationLog {
    pub records: Vec<LogRecord>,
    /// Electrons in the last entangling run.
    pub n_stop: usize,
    pub n_estimate: f64,
    /// Electrons through the single-qubit phase device in the last run.
    pub n_phase: usize,
    pub n_phase_refined: f64,
    /// `(entangling, phase)` electron counts of each pumping iterate.
    pub pump_runs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceExpansion {
    /// Target-weight part of the static state; its norm is the population
    /// that never left the target weight.
    pub state: SubspaceState,
    pub fidelity: f64,
    pub polarization: u8,
    pub omega_dt: f64,
    pub log: SimulationLog,
}

/// `|0⟩` electrons while `k < (n+1)/2` on the register being entangled.
pub fn polarization_rule(n: usize, k: usize) -> u8 {
    u8::from(2 * k > n)
}

fn families(v: &SubspaceState, bit: u8) -> (f64, f64) {
    let (mut s, mut c) = ([0.0; 2], [0usize; 2]);
    for (i, u) in v.indexer.states().into_iter().enumerate() {
        let f = usize::from((u & 1) as u8 != bit);
        s[f] += v.amplitudes[i].norm_sqr();
        c[f] += 1;
    }
    let mean = |f: usize| if c[f] > 0 { s[f] / c[f] as f64 } else { 0.0 };
    (mean(0), mean(1))
}

fn log_product(v: &SubspaceState) -> f64 {
    v.amplitudes.iter().map(|z| z.norm_sqr().max(1e-300).ln()).sum()
}

struct Stepper<'a> {
    m0: &'a nalgebra::DMatrix<Complex64>,
    target: SubspaceState,
    bit: u8,
    n_total: usize,
    records: Vec<LogRecord>,
}

impl Stepper<'_> {
    fn record(&mut self, v: &SubspaceState) {
        let (d1sq, d2sq) = families(v, self.bit);
        let fidelity = self.target.amplitudes.dotc(&v.amplitudes).norm();
        self.records.push(LogRecord { n: self.n_total, d1sq, d2sq, fidelity });
    }

    fn step(&mut self, v: &mut SubspaceState) {
        v.amplitudes = self.m0 * &v.amplitudes;
        self.n_total += 1;
        self.record(v);
    }

    fn run(&mut self, v: &mut SubspaceState, count: usize) {
        for _ in 0..count {
            self.step(v);
        }
    }

    /// Step to the log-product maximum within `estimate ± window`, climbing
    /// past the window edge while the product still rises.
    fn run_to_product_max(&mut self, v: &mut SubspaceState, estimate: f64) -> usize {
        let window = (0.02 * estimate).max(50.0);
        let lo = (estimate - window).max(0.0).floor() as usize;
        let hi = (estimate + window).ceil() as usize;
        let cap = 4 * hi + 1000;
        let mut best = (f64::NEG_INFINITY, 0usize, v.clone());
        let mut prev = f64::NEG_INFINITY;
        let mut n = 0;
        loop {
            let lp = log_product(v);
            if n >= lo && lp > best.0 {
                best = (lp, n, v.clone());
            }
            let rising = lp > prev;
            prev = lp;
            if n >= cap || (n >= hi && !(best.1 == n && rising)) {
                break;
            }
            self.step(v);
            n += 1;
        }
        // Records past the chosen stop are diagnostic only.
        let overshoot = n - best.1;
        self.n_total -= overshoot;
        self.records.truncate(self.records.len() - overshoot);
        *v = best.2;
        best.1
    }
}

/// Per-electron factors `(p0, p1)` of the one-qubit phase device on the
/// static qubit's `|0⟩`, `|1⟩`.
pub fn phase_device(cache: &KrausCache, polarization: u8) -> Result<(Complex64, Complex64)> {
    let p0 = cache.get(1, 0, polarization)?.m0[(0, 0)];
    let p1 = cache.get(1, 1, polarization)?.m0[(0, 0)];
    Ok((p0, p1))
}

fn cpow(z: Complex64, n: usize) -> Complex64 {
    Complex64::from_polar(z.norm().powi(n as i32), z.arg() * n as f64)
}

fn apply_phase_device(v: &mut SubspaceState, p: (Complex64, Complex64), count: usize) {
    let f = [cpow(p.0, count), cpow(p.1, count)];
    for (i, u) in v.indexer.states().into_iter().enumerate() {
        v.amplitudes[i] *= f[(u & 1) as usize];
    }
}

fn phase_period(p: (Complex64, Complex64)) -> Result<usize> {
    let delta = wrap_angle((p.1 / p.0).arg()).abs();
    if delta < 1e-9 {
        return Err(Error::DomainError("phase device gives no relative phase".into()));
    }
    Ok((2.0 * PI / delta).ceil() as usize)
}

/// Electron count whose relative phase is closest to `theta`.
fn phase_count_for(p: (Complex64, Complex64), theta: f64) -> Result<usize> {
    let delta = (p.1 / p.0).arg();
    let period = phase_period(p)?;
    Ok((0..=period).min_by(|&a, &b| {
        let ea = wrap_angle(a as f64 * delta - theta).abs();
        let eb = wrap_angle(b as f64 * delta - theta).abs();
        ea.partial_cmp(&eb).unwrap()
    }).unwrap_or(0))
}

/// Fidelity-maximizing electron count over one phase period, with its
/// parabolic refinement.
fn phase_count_for_fidelity(v: &SubspaceState, target: &SubspaceState, p: (Complex64, Complex64)) -> Result<(usize, f64)> {
    let mut s = [Complex64::new(0.0, 0.0); 2];
    for (i, u) in v.indexer.states().into_iter().enumerate() {
        s[(u & 1) as usize] += target.amplitudes[i].conj() * v.amplitudes[i];
    }
    let f = |n: usize| (s[0] * cpow(p.0, n) + s[1] * cpow(p.1, n)).norm();
    let period = phase_period(p)?;
    let best = (0..=period).max_by(|&a, &b| f(a).partial_cmp(&f(b)).unwrap()).unwrap_or(0);
    let refined = if best > 0 {
        let (y0, y1, y2) = (f(best - 1), f(best), f(best + 1));
        let den = y0 - 2.0 * y1 + y2;
        if den.abs() > 0.0 { best as f64 + 0.5 * (y0 - y2) / den } else { best as f64 }
    } else {
        0.0
    };
    Ok((best, refined))
}

/// Append `|bit⟩` to the static register and entangle it on the device,
/// then correct the appended qubit's phase.
pub fn simulate_expansion(
    cache: &KrausCache,
    start: &SubspaceState,
    bit: u8,
    strategy: StopStrategy,
    polarization: Option<u8>,
) -> Result<DeviceExpansion> {
    let (n, k) = (start.n(), start.k());
    let (tn, tk) = (n + 1, k + bit as usize);
    let pol = polarization.unwrap_or_else(|| polarization_rule(tn, tk));
    let mut v = start.append_qubit(bit);
    let target = dicke(tn, tk)?;
    if tk == 0 || tk == tn {
        let fidelity = target.amplitudes.dotc(&v.amplitudes).norm();
        return Ok(DeviceExpansion { state: v, fidelity, polarization: pol, omega_dt: 0.0, log: SimulationLog::default() });
    }
    let kr = cache.get(tn, tk, pol)?;
    let coupling = extract_strengths(cache, tn, tk, pol)?.coupling()?;
    let omega_dt = energy(&coupling, Half(tn as i64))? - energy(&coupling, Half(tn as i64 - 2))?;
    let w = omega_dt.abs();
    if w < 1e-15 {
        return Err(Error::DomainError("device gives no branch splitting".into()));
    }
    let case = ExpansionCase::new(bit, Direction::Up);
    let (s, m) = (Half(n as i64), Half(n as i64 - 2 * k as i64 - 2 * bit as i64));
    let phases = phase_device(cache, pol)?;

    let mut stepper = Stepper { m0: &kr.m0, target: target.clone(), bit, n_total: 0, records: Vec::new() };
    stepper.record(&v);
    let mut log = SimulationLog::default();

    let final_phase = match strategy {
        StopStrategy::Pump => {
            let schedule = schedule_phases(case, s, m, omega_dt)?;
            let (last, pumps) = schedule.split_last().expect("nonempty schedule");
            for phi in pumps {
                let count = (phi / w).round() as usize;
                stepper.run(&mut v, count);
                let ph = phase_count_for(phases, PI)?;
                apply_phase_device(&mut v, phases, ph);
                stepper.record(&v);
                log.pump_runs.push((count, ph));
            }
            *last
        }
        _ => {
            let x = cosine_argument(case, s, m)?;
            if x >= -1.0 { x.min(1.0).acos() } else { PI }
        }
    };
    let estimate = final_phase / w;
    let start_n = stepper.records.len() - 1;
    let n_stop = stepper.run_to_product_max(&mut v, estimate);

    if strategy == StopStrategy::Strict {
        let run = &stepper.records[start_n..];
        let sign0 = (run[0].d1sq - run[0].d2sq).signum();
        let crossed = run.iter().any(|r| (r.d1sq - r.d2sq).signum() != sign0);
        if !crossed {
            let gap = run.iter().map(|r| (r.d1sq - r.d2sq).abs()).fold(f64::INFINITY, f64::min);
            return Err(Error::NoCrossing(gap));
        }
    }

    let (n_phase, refined) = phase_count_for_fidelity(&v, &target, phases)?;
    apply_phase_device(&mut v, phases, n_phase);
    stepper.record(&v);
    let fidelity = target.amplitudes.dotc(&v.amplitudes).norm();
    log.records = stepper.records;
    log.n_stop = n_stop;
    log.n_estimate = estimate;
    log.n_phase = n_phase;
    log.n_phase_refined = refined;
    Ok(DeviceExpansion { state: v, fidelity, polarization: pol, omega_dt, log })
}
