//! On-disk shapes for states, couplings and plans.

use crate::error::{Error, Result};
use crate::spin::{BasisIndexer, SubspaceState};
use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `{"n": .., "k": .., "amplitudes": [[re, im], ..]}`, amplitudes in
/// ascending order of the weight-`k` integers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub n: usize,
    pub k: usize,
    pub amplitudes: Vec<[f64; 2]>,
}

impl From<&SubspaceState> for StateFile {
    fn from(s: &SubspaceState) -> Self {
        StateFile { n: s.n(), k: s.k(), amplitudes: s.amplitudes.iter().map(|z| [z.re, z.im]).collect() }
    }
}

impl StateFile {
    pub fn to_state(&self) -> Result<SubspaceState> {
        let ix = BasisIndexer::new(self.n, self.k)?;
        let amps = DVector::from_iterator(self.amplitudes.len(), self.amplitudes.iter().map(|[re, im]| Complex64::new(*re, *im)));
        SubspaceState::new(ix, amps)
    }
}

/// One row of a coefficient trace export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub r: usize,
    #[serde(rename = "Re c1")]
    pub re_c1: f64,
    #[serde(rename = "Im c1")]
    pub im_c1: f64,
    #[serde(rename = "Re c2")]
    pub re_c2: f64,
    #[serde(rename = "Im c2")]
    pub im_c2: f64,
    pub a1: f64,
    pub a2: f64,
    #[serde(rename = "S2")]
    pub s2: f64,
}

impl From<&crate::amplification::CoefficientTrack> for TraceRow {
    fn from(t: &crate::amplification::CoefficientTrack) -> Self {
        TraceRow { r: t.r, re_c1: t.c1.re, im_c1: t.c1.im, re_c2: t.c2.re, im_c2: t.c2.im, a1: t.a1.norm(), a2: t.a2.norm(), s2: t.s2 }
    }
}

/// Parse `"0.5"`, `"-3/2"` or `"1"` into twice its value.
pub fn parse_half(s: &str) -> Result<crate::Half> {
    let bad = || Error::DomainError(format!("{s:?} is not a half-integer"));
    if let Some((num, den)) = s.split_once('/') {
        let num: i64 = num.trim().parse().map_err(|_| bad())?;
        return match den.trim() {
            "2" => Ok(crate::Half(num)),
            "1" => Ok(crate::Half(2 * num)),
            _ => Err(bad()),
        };
    }
    let v: f64 = s.trim().parse().map_err(|_| bad())?;
    crate::Half::from_f64(v).ok_or_else(bad)
}
