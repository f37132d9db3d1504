use criterion::{criterion_group, criterion_main, Criterion};
use spinprep_bench::{default_device, mixed_spec};
use spinprep_core::planner::{cost_table, CountRule};
use spinprep_core::scattering::{cascade_sector, channel_step, simulate_expansion, BlockDensity, KrausCache, StopStrategy};
use spinprep_core::{build_hamiltonian, build_spin_eigenstate, dicke, evolve, GeneralizedCoupling};
use std::hint::black_box;

fn eigenstates(c: &mut Criterion) {
    let spec = mixed_spec(12);
    c.bench_function("build_spin_eigenstate n=12", |b| b.iter(|| build_spin_eigenstate(black_box(&spec)).unwrap()));
}

fn evolution(c: &mut Criterion) {
    let h = build_hamiltonian(&GeneralizedCoupling::all_coupled(12, 6, 1.0).unwrap()).unwrap();
    h.eigen();
    let psi = dicke(11, 5).unwrap().append_qubit(1);
    c.bench_function("evolve n=12 k=6", |b| b.iter(|| evolve(black_box(&psi), &h, 0.7).unwrap()));
}

fn cascade(c: &mut Criterion) {
    let dev = default_device(8);
    c.bench_function("cascade_sector n=8 sector=4", |b| b.iter(|| cascade_sector(black_box(&dev), 4).unwrap()));
}

fn channel(c: &mut Criterion) {
    let cache = KrausCache::new(default_device(8));
    let rho = BlockDensity::from_pure(&dicke(8, 4).unwrap());
    channel_step(&rho, &cache, 0).unwrap();
    c.bench_function("channel_step n=8", |b| b.iter(|| channel_step(black_box(&rho), &cache, 0).unwrap()));
}

fn device_expansion(c: &mut Criterion) {
    let cache = KrausCache::new(default_device(3));
    let start = dicke(2, 1).unwrap();
    let mut group = c.benchmark_group("device");
    group.sample_size(10);
    group.bench_function("simulate_expansion D^2_1 bit 0", |b| {
        b.iter(|| simulate_expansion(&cache, black_box(&start), 0, StopStrategy::ClosestApproach, None).unwrap())
    });
    group.finish();
}

fn planning(c: &mut Criterion) {
    c.bench_function("cost_table n<=100", |b| b.iter(|| cost_table(black_box(100), CountRule::Exact)));
}

criterion_group!(benches, eigenstates, evolution, cascade, channel, device_expansion, planning);
criterion_main!(benches);
