use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cpfree_core::channel::{draw_cir, pdp_from_profile, LTE_5MHZ_SAMPLE_RATE};
use cpfree_core::dsp::{convolve_direct, convolve_fast, RngStream, C64};
use cpfree_core::ofdm::{apply_channel, full_mask, modulate, Constellation};
use cpfree_core::tr::{coupling_matrices, equivalent_channel, tr_coefficient, tr_combine, zf_diag_fast, CouplingRoute, SymbolGroup};

fn noise(rng: &mut RngStream, n: usize) -> Vec<C64> {
    (0..n).map(|_| rng.cn(1.0)).collect()
}

fn convolution(c: &mut Criterion) {
    let mut rng = RngStream::new(1, 0);
    let h = noise(&mut rng, 39);
    let mut group = c.benchmark_group("convolution");
    for len in [512usize, 5120] {
        let x = noise(&mut rng, len);
        group.bench_with_input(BenchmarkId::new("direct", len), &x, |b, x| b.iter(|| convolve_direct(black_box(x), &h)));
        group.bench_with_input(BenchmarkId::new("overlap_save_256", len), &x, |b, x| {
            b.iter(|| convolve_fast(black_box(x), &h, 256))
        });
    }
    group.finish();
}

fn same_slot_diagonal(c: &mut Criterion) {
    let pdp = pdp_from_profile("ETU", LTE_5MHZ_SAMPLE_RATE).unwrap();
    let cir = draw_cir(&mut RngStream::new(2, 0), &pdp, 64, 4).unwrap();
    let trch = equivalent_channel(&cir);
    let mut group = c.benchmark_group("same_slot_diagonal");
    group.bench_function("fft_512", |b| b.iter(|| zf_diag_fast(black_box(&trch), 512)));
    group.sample_size(10);
    group.bench_function("per_coefficient_512", |b| {
        b.iter(|| {
            let mut acc = C64::new(0.0, 0.0);
            for p in 0..512 {
                for k in 0..4 {
                    for j in 0..4 {
                        acc += tr_coefficient(&trch, k, j, p, p, SymbolGroup::Curr, 512).unwrap();
                    }
                }
            }
            acc
        })
    });
    group.finish();
}

fn time_reversal(c: &mut Criterion) {
    let pdp = pdp_from_profile("ETU", LTE_5MHZ_SAMPLE_RATE).unwrap();
    let mut rng = RngStream::new(3, 0);
    let (m, k, n) = (64, 10, 512);
    let cir = draw_cir(&mut rng, &pdp, m, k).unwrap();
    let frame = modulate(&mut rng, k, 4, n, Constellation::Qpsk, &full_mask(n), 0).unwrap();
    let rx = apply_channel(&frame, &cir, &mut rng, 0.1).unwrap();
    let trch = equivalent_channel(&cir);

    let mut group = c.benchmark_group("time_reversal");
    group.sample_size(10);
    for block in [128usize, 256, 512] {
        group.bench_with_input(BenchmarkId::new("tr_combine", block), &block, |b, &block| {
            b.iter(|| tr_combine(black_box(&rx), &cir, block))
        });
    }
    group.bench_function("equivalent_channel", |b| b.iter(|| equivalent_channel(black_box(&cir))));
    group.bench_function("coupling_full_band_one_subcarrier", |b| {
        b.iter(|| coupling_matrices(black_box(&trch), 7, n, CouplingRoute::FullBand))
    });
    group.finish();
}

criterion_group!(benches, convolution, same_slot_diagonal, time_reversal);
criterion_main!(benches);
