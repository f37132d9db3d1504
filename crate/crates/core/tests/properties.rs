use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use spinprep_core::amplification::{grover_step, CoefficientTrack};
use spinprep_core::expansion::rz_last;
use spinprep_core::planner::{cost, linear_plan, modified_plan, CountRule};
use spinprep_core::scattering::{channel_step, BlockDensity, KrausCache, ScatteringDevice};
use spinprep_core::spin::{apply_s2, binomial, expectation_s2, sz_value};
use spinprep_core::{build_hamiltonian, build_spin_eigenstate, evolve, fidelity, BasisIndexer, GeneralizedCoupling, Half, SpinSpec, SubspaceState};

/// All branching paths of length `n` ending at spin `s`.
fn paths(n: usize, s: Half) -> Vec<String> {
    fn walk(prefix: String, s2: i64, n: usize, target: i64, out: &mut Vec<String>) {
        if prefix.len() == n {
            if s2 == target {
                out.push(prefix);
            }
            return;
        }
        walk(format!("{prefix}1"), s2 + 1, n, target, out);
        if s2 > 0 {
            walk(format!("{prefix}2"), s2 - 1, n, target, out);
        }
    }
    let mut out = Vec::new();
    walk("1".into(), 1, n, s.twice(), &mut out);
    out
}

fn random_state(n: usize, k: usize, raw: &[(f64, f64)]) -> SubspaceState {
    let ix = BasisIndexer::new(n, k).unwrap();
    let d = ix.dim();
    let amps = DVector::from_iterator(d, (0..d).map(|i| {
        let (re, im) = raw[i % raw.len()];
        Complex64::new(re + 0.01 * i as f64, im)
    }));
    SubspaceState::new(ix, amps).unwrap().normalized()
}

/// A path of length `n` from random choices, with `M` picked in range.
fn spec_strategy() -> impl Strategy<Value = SpinSpec> {
    (1usize..=9, prop::collection::vec(any::<bool>(), 9), any::<u32>()).prop_map(|(n, ups, pick)| {
        let mut path = String::from("1");
        let mut s2 = 1i64;
        for &up in ups.iter().take(n - 1) {
            if up || s2 == 0 {
                path.push('1');
                s2 += 1;
            } else {
                path.push('2');
                s2 -= 1;
            }
        }
        let m2 = -s2 + 2 * (pick as i64 % (s2 + 1));
        SpinSpec::new(&path, Half(m2)).unwrap()
    })
}

fn amps() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..16).prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 0.1))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rank_unrank_roundtrip(n in 1usize..=30, kf in 0.0f64..=1.0, pick in any::<u64>()) {
        let k = (kf * n as f64).round() as usize;
        let ix = BasisIndexer::new(n, k).unwrap();
        let i = (pick % binomial(n, k)) as usize;
        let u = ix.unrank(i).unwrap();
        prop_assert_eq!(u.count_ones() as usize, k);
        prop_assert_eq!(ix.rank(u).unwrap(), i);
    }

    #[test]
    fn eigenstates_are_eigenstates(spec in spec_strategy()) {
        let psi = build_spin_eigenstate(&spec).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
        let s = spec.s.value();
        let residual = (apply_s2(&psi) - &psi.amplitudes * Complex64::new(s * (s + 1.0), 0.0)).norm();
        prop_assert!(residual < 1e-10, "residual {}", residual);
        prop_assert_eq!(sz_value(&psi.indexer), spec.m);
    }

    #[test]
    fn degenerate_paths_are_orthogonal(n in 2usize..=8, s_pick in any::<u32>(), m_pick in any::<u32>()) {
        let s2 = (n as i64 % 2) + 2 * (s_pick as i64 % (n as i64 / 2 + 1));
        let m2 = -s2 + 2 * (m_pick as i64 % (s2 + 1));
        let states: Vec<SubspaceState> = paths(n, Half(s2))
            .iter()
            .map(|p| build_spin_eigenstate(&SpinSpec::new(p, Half(m2)).unwrap()).unwrap())
            .collect();
        for i in 0..states.len() {
            for j in 0..i {
                prop_assert!(states[i].inner(&states[j]).unwrap().norm() < 1e-10);
            }
        }
    }

    #[test]
    fn fidelity_ignores_global_phase(n in 2usize..=8, raw in amps(), phase in -3.2f64..3.2) {
        let k = n / 2;
        let a = random_state(n, k, &raw);
        let b = spinprep_core::dicke(n, k).unwrap();
        let rotated = SubspaceState::new(a.indexer, &a.amplitudes * Complex64::from_polar(1.0, phase)).unwrap();
        prop_assert!((fidelity(&a, &b).unwrap() - fidelity(&rotated, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn evolution_is_unitary_and_conserves_spin(n in 2usize..=8, raw in amps(), t in -10.0f64..10.0, j2 in -1.0f64..1.0) {
        let k = n / 2;
        let psi = random_state(n, k, &raw);
        let j: Vec<f64> = (0..=k).map(|l| if l == 0 { 0.0 } else { j2.powi(l as i32 - 1) }).collect();
        let h = build_hamiltonian(&GeneralizedCoupling::new(n, k, j).unwrap()).unwrap();
        let out = evolve(&psi, &h, t).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
        prop_assert!((expectation_s2(&out) - expectation_s2(&psi)).abs() < 1e-10);
    }

    #[test]
    fn rz_preserves_norm(n in 2usize..=8, raw in amps(), theta in -7.0f64..7.0, count in 1usize..=8) {
        let psi = random_state(n, n / 2, &raw);
        let out = rz_last(&psi, theta, count.min(n)).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grover_step_preserves_norm(alpha in 0.01f64..3.1, r in 1usize..20) {
        let (a, b) = ((alpha / 2.0).cos(), (alpha / 2.0).sin());
        let c = |x: f64| Complex64::new(x, 0.0);
        let mut t = CoefficientTrack {
            r: 0,
            stage: spinprep_core::amplification::Stage::Start,
            c1: c(b), c2: c(a), a1: c(0.0), a2: c(1.0), a, b, s2: 0.0,
        };
        for _ in 0..r {
            t = grover_step(&t);
        }
        prop_assert!((t.c1.norm_sqr() + t.c2.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert!((t.a1.norm_sqr() + t.a2.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cost_is_sublinear(n in 4usize..=200, kf in 0.0f64..=1.0) {
        let k = 2 + (kf * (n / 2 - 2) as f64).round() as usize;
        prop_assert!(cost(n, k, CountRule::Exact) < n);
    }

    #[test]
    fn plans_are_connected(n in 1usize..=60, kf in 0.0f64..=1.0) {
        let k = (kf * n as f64).round() as usize;
        for plan in [linear_plan(n, k).unwrap(), modified_plan(n, k).unwrap()] {
            let (n0, k0) = plan.origin();
            prop_assert!(k0 == 0 || k0 == n0);
            for w in plan.steps.windows(2) {
                prop_assert_eq!(w[0].to, w[1].from);
            }
            prop_assert_eq!(*plan.waypoints().last().unwrap(), (n, k));
            prop_assert_eq!(plan.total_cost, plan.steps.iter().map(|s| s.kind.cost()).sum::<usize>());
        }
    }

    #[test]
    fn kraus_complete_and_trace_preserving(n in 1usize..=5, kf in 0.0f64..=1.0, pol in 0u8..2, omega in 1e-5f64..1e-2, raw in amps()) {
        let k = (kf * n as f64).round() as usize;
        let cache = KrausCache::new(ScatteringDevice { omega, ..ScatteringDevice::default() });
        prop_assert!(cache.get(n, k, pol).unwrap().completeness_error() < 1e-10);
        let rho = BlockDensity::from_pure(&random_state(n, k, &raw));
        let mut next = rho.clone();
        for _ in 0..10 {
            let stepped = channel_step(&next, &cache, pol).unwrap();
            prop_assert!((stepped.trace() - next.trace()).abs() < 1e-12);
            next = stepped;
        }
    }
}

#[test]
fn rank_unrank_exhaustive() {
    for n in 1..=10 {
        for k in 0..=n {
            let ix = BasisIndexer::new(n, k).unwrap();
            for (i, u) in ix.states().into_iter().enumerate() {
                assert_eq!(ix.unrank(i).unwrap(), u);
                assert_eq!(ix.rank(u).unwrap(), i);
            }
        }
    }
}

#[test]
fn five_qubit_path_counts() {
    let ps = paths(5, Half(3));
    assert_eq!(ps.len(), 4);
    let all: usize = (0..=2).map(|j| paths(5, Half(5 - 2 * j)).len()).sum();
    assert_eq!(all, 1 + 4 + 5);
}
