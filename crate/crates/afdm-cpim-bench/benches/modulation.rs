//! DAFT (de)modulation: FFT fast path vs dense reference.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use afdm_cpim::{ChirpParams, DaftMatrix, PermutationIndex};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

fn bench_modulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("modulate");
    for &n in &[32usize, 256, 1024] {
        let params = ChirpParams::optimal(n, 3, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let perm = if n <= 32 {
            PermutationIndex::random(n, &mut rng).unwrap()
        } else {
            PermutationIndex::identity(n).unwrap()
        };
        let daft = DaftMatrix::new(&params, perm).unwrap();
        let x = random_vec(n, &mut rng);

        group.bench_with_input(BenchmarkId::new("fft", n), &n, |b, _| {
            b.iter(|| daft.modulate(black_box(&x)).unwrap())
        });
        if n <= 256 {
            group.bench_with_input(BenchmarkId::new("dense", n), &n, |b, _| {
                b.iter(|| daft.modulate_dense(black_box(&x)).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_modulation);
criterion_main!(benches);
