//! Shared inputs for the criterion benches.

use spinprep_core::scattering::ScatteringDevice;
use spinprep_core::{Half, SpinSpec};

/// A degenerate mid-chain eigenstate with a non-trivial path.
pub fn mixed_spec(n: usize) -> SpinSpec {
    let mut path = String::from("1");
    for i in 1..n {
        path.push(if i % 3 == 2 { '2' } else { '1' });
    }
    let s = spinprep_core::spin::spin_of_path(&path).expect("valid path");
    SpinSpec::new(&path, Half(s.twice() % 2)).expect("valid spec")
}

pub fn default_device(n: usize) -> ScatteringDevice {
    ScatteringDevice::with_qubits(n)
}
