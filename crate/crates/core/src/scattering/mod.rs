//! Electron-scattering device: static qubits in a 1D channel entangled by
//! spin-polarized electrons reflected back to a reservoir.
//!
//! Each electron acts on the static register through a Kraus pair cut from
//! the reflection operator `R_B`. Everything is done one total-weight
//! sector at a time.

mod channel;
mod device;
mod simulate;
mod tables;

pub use channel::{
    channel_step, channel_step_dense, extract_strengths, reference_phase, strengths_from_block, BlockDensity, Strengths,
};
pub use device::{
    cascade_full, cascade_sector, kraus_from_rb, kraus_from_sector, scatterer_matrices, unitarity_error, KrausCache,
    KrausPair, Scatterer, ScatteringDevice, SectorKraus,
};
pub use simulate::{
    phase_device, polarization_rule, simulate_expansion, DeviceExpansion, LogRecord, SimulationLog, StopStrategy,
};
pub use tables::{d10_3_chain, execute_chain, execute_plan_on_device, expansion_cell, reproduce_table, Table, TableCell, MAX_COLUMN};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::dicke;

    #[test]
    fn sector_matches_full() {
        let dev = ScatteringDevice::with_qubits(3);
        let full = cascade_full(&dev).unwrap();
        assert!(unitarity_error(&full) < 1e-9);
        for sector in 0..=4 {
            let (ix, r) = cascade_sector(&dev, sector).unwrap();
            let words = ix.states();
            for (i, &a) in words.iter().enumerate() {
                for (j, &b) in words.iter().enumerate() {
                    assert!((r[(i, j)] - full[(a as usize, b as usize)]).norm() < 1e-10);
                }
            }
        }
        for a in 0..16usize {
            for b in 0..16usize {
                if a.count_ones() != b.count_ones() {
                    assert!(full[(a, b)].norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn kraus_complete() {
        let cache = KrausCache::new(ScatteringDevice::default());
        for pol in 0..2 {
            for k in 0..=3 {
                assert!(cache.get(3, k, pol).unwrap().completeness_error() < 1e-10);
            }
        }
        let pair = kraus_from_rb(&cascade_full(&ScatteringDevice::default()).unwrap(), 0).unwrap();
        assert!(pair.completeness_error() < 1e-10);
    }

    #[test]
    fn transparent_qubits() {
        let dev = ScatteringDevice { omega: 0.0, ..ScatteringDevice::with_qubits(2) };
        let (t, r) = scatterer_matrices(Scatterer::Qubit(1), &dev).unwrap();
        assert!((t.clone() - nalgebra::DMatrix::identity(8, 8)).camax() < 1e-15);
        assert!(r.camax() < 1e-15);
        let cache = KrausCache::new(dev);
        assert!(cache.get(2, 1, 0).unwrap().m1.camax() < 1e-15);
    }

    #[test]
    fn two_one_preserving() {
        let cache = KrausCache::new(ScatteringDevice::default());
        let r = simulate_expansion(&cache, &dicke(2, 1).unwrap(), 0, StopStrategy::ClosestApproach, Some(0)).unwrap();
        assert!((r.fidelity - 0.9989).abs() < 3e-3, "{}", r.fidelity);
    }

    #[test]
    fn strengths_shape() {
        let cache = KrausCache::new(ScatteringDevice::default());
        let s = extract_strengths(&cache, 5, 2, 0).unwrap();
        assert_eq!(s.j_dt.len(), 3);
        assert!(s.j_dt[1].abs() > 0.0);
    }
}
