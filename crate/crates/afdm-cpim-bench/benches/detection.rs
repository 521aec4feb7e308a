//! Detector throughput: MMSE-ML bank vs brute-force ML.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use afdm_cpim::{
    apply_channel, channel_matrix, encode, ml_detect_full, mmse_ml_detect, sample_channel,
    ChirpParams, Codebook, Constellation, PermutationIndex, FULL_ML_DEFAULT_BUDGET,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(n: usize, k: usize) -> (Codebook, Constellation, ChaCha8Rng) {
    let params = ChirpParams::optimal(n, 3, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut entries = Vec::new();
    while entries.len() < k {
        let p = PermutationIndex::random(n, &mut rng).unwrap();
        if !entries.contains(&p) {
            entries.push(p);
        }
    }
    (
        Codebook::new(&params, entries).unwrap(),
        Constellation::bpsk(),
        rng,
    )
}

fn bench_detectors(c: &mut Criterion) {
    // MMSE-ML at the reference scale (N = 32, K = 2): the Monte Carlo
    // hot loop.
    {
        let (cb, cons, mut rng) = fixture(32, 2);
        let chan = sample_channel(3, 3, 3.0, false, &mut rng).unwrap();
        let h = channel_matrix(&chan, cb.params().c1(), 32).unwrap();
        let bits: Vec<u8> = (0..33).map(|_| rng.random_range(0..=1u8)).collect();
        let frame = encode(&bits, &cb, &cons).unwrap();
        let n0 = 0.1;
        let r = apply_channel(&frame.signal, &h, n0, &mut rng).unwrap();
        c.bench_function("mmse_ml_n32_k2", |b| {
            b.iter(|| mmse_ml_detect(black_box(&r), &h, &cb, n0, &cons).unwrap())
        });
    }

    // Full ML at a size it can still afford (N = 8, K = 2: 512 candidates).
    {
        let (cb, cons, mut rng) = fixture(8, 2);
        let chan = sample_channel(3, 3, 1.0, false, &mut rng).unwrap();
        let h = channel_matrix(&chan, cb.params().c1(), 8).unwrap();
        let bits: Vec<u8> = (0..9).map(|_| rng.random_range(0..=1u8)).collect();
        let frame = encode(&bits, &cb, &cons).unwrap();
        let n0 = 0.1;
        let r = apply_channel(&frame.signal, &h, n0, &mut rng).unwrap();
        c.bench_function("full_ml_n8_k2", |b| {
            b.iter(|| {
                ml_detect_full(black_box(&r), &h, &cb, &cons, FULL_ML_DEFAULT_BUDGET).unwrap()
            })
        });
    }
}

criterion_group!(benches, bench_detectors);
criterion_main!(benches);
