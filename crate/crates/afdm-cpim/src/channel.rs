//! Doubly-dispersive delay-Doppler channels.
//!
//! A realization holds `P` paths with complex gain `h_p`, integer delay
//! `ℓ_p` and normalized Doppler `f_p`. The circular channel matrix is
//! `H = Σ_p h_p · Φ_p · Z^{f_p} · Π^{ℓ_p}` where `Φ_p` is the chirp-periodic
//! prefix phase, `Z` the diagonal roots-of-unity matrix and `Π` the cyclic
//! shift. Each path contributes exactly one nonzero per row, so `H` is kept
//! as per-row triplets and only materialized densely for small `N`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::afdm::DaftMatrix;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::PermutationIndex;

/// `N` at or below which the channel matrix is additionally stored densely.
pub const DENSE_LIMIT: usize = 64;

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParams {
    pub gain: Complex64,
    pub delay: usize,
    pub doppler: f64,
}

/// A sampled doubly-dispersive channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub paths: Vec<PathParams>,
    pub ell_max: usize,
    pub f_max: f64,
}

/// Draws a channel with `p` resolvable paths: i.i.d. circularly-symmetric
/// Gaussian gains of variance `1/p`, distinct uniform delays in
/// `{0, …, ell_max}`, and Doppler shifts uniform over integers
/// `{-⌊f_max⌋, …, ⌊f_max⌋}` (or uniform reals in `[-f_max, f_max]` when
/// `fractional_doppler` is set).
pub fn sample_channel<R: Rng + ?Sized>(
    p: usize,
    ell_max: usize,
    f_max: f64,
    fractional_doppler: bool,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if p == 0 {
        return Err(Error::Sampler("P must be at least 1".into()));
    }
    if f_max < 0.0 {
        return Err(Error::Sampler(format!("f_max must be >= 0, got {f_max}")));
    }
    if p > ell_max + 1 {
        return Err(Error::Sampler(format!(
            "cannot draw {p} distinct delays from {{0, …, {ell_max}}}"
        )));
    }

    // Draw order is part of the determinism contract: delays, dopplers, gains.
    let mut candidates: Vec<usize> = (0..=ell_max).collect();
    let mut delays = Vec::with_capacity(p);
    for i in 0..p {
        let j = rng.random_range(i..candidates.len());
        candidates.swap(i, j);
        delays.push(candidates[i]);
    }

    let mut dopplers = Vec::with_capacity(p);
    for _ in 0..p {
        let f = if fractional_doppler {
            if f_max == 0.0 {
                0.0
            } else {
                rng.random_range(-f_max..=f_max)
            }
        } else {
            let bound = f_max.floor() as i64;
            rng.random_range(-bound..=bound) as f64
        };
        dopplers.push(f);
    }

    let sigma = (1.0 / (2.0 * p as f64)).sqrt();
    let normal = Normal::new(0.0, sigma).expect("valid std dev");
    let paths = (0..p)
        .map(|i| PathParams {
            gain: Complex64::new(normal.sample(rng), normal.sample(rng)),
            delay: delays[i],
            doppler: dopplers[i],
        })
        .collect();

    Ok(ChannelRealization {
        paths,
        ell_max,
        f_max,
    })
}

/// Diagonal of the chirp-periodic prefix phase matrix `Φ_p`: the first
/// `ell_p` entries are `exp(-j·2π·c1·(N² - 2N(ℓ_p - q)))` for
/// `q = 0, …, ℓ_p-1`, followed by `N - ℓ_p` ones.
pub fn phase_matrix_phi(ell_p: usize, c1: f64, n: usize) -> Result<Vec<Complex64>> {
    if ell_p >= n {
        return Err(Error::DelayOutOfRange { delay: ell_p, n });
    }
    let nn = n as f64;
    let mut diag = Vec::with_capacity(n);
    for q in 0..ell_p {
        let arg = c1 * (nn * nn - 2.0 * nn * (ell_p - q) as f64);
        let t = arg.rem_euclid(1.0);
        diag.push(Complex64::cis(-2.0 * std::f64::consts::PI * t));
    }
    diag.resize(n, Complex64::ONE);
    Ok(diag)
}

/// The channel matrix, stored as per-row triplets (and densely for
/// `N ≤ DENSE_LIMIT`).
#[derive(Debug, Clone)]
pub struct ChannelMatrix {
    n: usize,
    /// `rows[i]` holds the (column, value) pairs of row `i`, sorted by column.
    rows: Vec<Vec<(usize, Complex64)>>,
    dense: Option<CMatrix>,
}

impl ChannelMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored nonzero entries.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn rows(&self) -> &[Vec<(usize, Complex64)>] {
        &self.rows
    }

    /// `H · s`.
    pub fn apply(&self, s: &[Complex64]) -> Result<Vec<Complex64>> {
        if s.len() != self.n {
            return Err(Error::dim(self.n, s.len(), "channel input length"));
        }
        Ok(self
            .rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * s[c]).sum())
            .collect())
    }

    pub fn to_dense(&self) -> CMatrix {
        if let Some(d) = &self.dense {
            return d.clone();
        }
        let mut m = CMatrix::zeros(self.n, self.n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[(i, c)] += v;
            }
        }
        m
    }

    /// `H · Hᴴ`, exploiting row sparsity.
    pub fn gram(&self) -> CMatrix {
        let mut g = CMatrix::zeros(self.n, self.n);
        // Bucket entries by column, then accumulate the rank-one outer
        // products column by column.
        let mut by_col: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                by_col[c].push((i, v));
            }
        }
        for col in &by_col {
            for &(i, vi) in col {
                for &(j, vj) in col {
                    g[(i, j)] += vi * vj.conj();
                }
            }
        }
        g
    }

    /// `Hᴴ · m` for a dense right factor, exploiting sparsity of `H`.
    pub fn adjoint_times(&self, m: &CMatrix) -> CMatrix {
        assert_eq!(m.nrows(), self.n);
        let mut out = CMatrix::zeros(self.n, m.ncols());
        for (i, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                let w = v.conj();
                for j in 0..m.ncols() {
                    out[(c, j)] += w * m[(i, j)];
                }
            }
        }
        out
    }

    /// Wraps an explicit dense matrix (nonzeros are extracted for the sparse
    /// application path).
    pub fn from_dense(m: CMatrix) -> Self {
        let n = m.nrows();
        assert_eq!(n, m.ncols(), "channel matrix must be square");
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| m[(i, j)] != Complex64::ZERO)
                    .map(|j| (j, m[(i, j)]))
                    .collect()
            })
            .collect();
        ChannelMatrix {
            n,
            rows,
            dense: Some(m),
        }
    }
}

/// Materializes `H = Σ_p h_p · Φ_p · Z^{f_p} · Π^{ℓ_p}`. Row `i` of path `p`
/// has its single nonzero at column `(i - ℓ_p) mod N` with value
/// `h_p · Φ_p[i] · exp(-j·2π·i·f_p/N)`.
pub fn channel_matrix(chan: &ChannelRealization, c1: f64, n: usize) -> Result<ChannelMatrix> {
    let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); n];
    for path in &chan.paths {
        if path.delay >= n {
            return Err(Error::DelayOutOfRange {
                delay: path.delay,
                n,
            });
        }
        let phi = phase_matrix_phi(path.delay, c1, n)?;
        for (i, row) in rows.iter_mut().enumerate() {
            let col = (i + n - path.delay) % n;
            let z = {
                let t = (i as f64 * path.doppler / n as f64).rem_euclid(1.0);
                Complex64::cis(-2.0 * std::f64::consts::PI * t)
            };
            row.push((col, path.gain * phi[i] * z));
        }
    }
    // Merge duplicate columns (paths sharing a delay).
    for row in rows.iter_mut() {
        row.sort_by_key(|&(c, _)| c);
        let mut merged: Vec<(usize, Complex64)> = Vec::with_capacity(row.len());
        for &(c, v) in row.iter() {
            match merged.last_mut() {
                Some((lc, lv)) if *lc == c => *lv += v,
                _ => merged.push((c, v)),
            }
        }
        *row = merged;
    }
    let mut h = ChannelMatrix {
        n,
        rows,
        dense: None,
    };
    if n <= DENSE_LIMIT {
        h.dense = Some(h.to_dense());
    }
    Ok(h)
}

/// `r = H·s + w` with i.i.d. circularly-symmetric complex Gaussian noise of
/// per-entry variance `n0` (`n0 = 0` is noiseless).
pub fn apply_channel<R: Rng + ?Sized>(
    s: &[Complex64],
    h: &ChannelMatrix,
    n0: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if n0 < 0.0 {
        return Err(Error::NegativeNoise(n0));
    }
    let mut r = h.apply(s)?;
    if n0 > 0.0 {
        let sigma = (n0 / 2.0).sqrt();
        let normal = Normal::new(0.0, sigma).expect("valid std dev");
        for v in r.iter_mut() {
            *v += Complex64::new(normal.sample(rng), normal.sample(rng));
        }
    }
    Ok(r)
}

/// Effective DAFT-domain channel `G_k = A_k · H · A_k⁻¹`.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    pub g: CMatrix,
    pub perm: PermutationIndex,
}

/// Forms `G = A H A⁻¹` by pushing basis vectors through the fast transform
/// paths (O(N² log N), no dense DAFT product).
pub fn effective_channel(h: &ChannelMatrix, daft: &DaftMatrix) -> Result<EffectiveChannel> {
    let n = daft.n();
    if h.n() != n {
        return Err(Error::dim(n, h.n(), "channel size"));
    }
    let mut g = CMatrix::zeros(n, n);
    let mut e = vec![Complex64::ZERO; n];
    for j in 0..n {
        e[j] = Complex64::ONE;
        let col = daft.demodulate(&h.apply(&daft.modulate(&e)?)?)?;
        for i in 0..n {
            g[(i, j)] = col[i];
        }
        e[j] = Complex64::ZERO;
    }
    Ok(EffectiveChannel {
        g,
        perm: daft.perm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::afdm::{ChirpParams, PermutationIndex};
    use crate::linalg::{max_abs_diff, norm_sqr};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_path(gain: Complex64, delay: usize, doppler: f64) -> ChannelRealization {
        ChannelRealization {
            paths: vec![PathParams {
                gain,
                delay,
                doppler,
            }],
            ell_max: delay,
            f_max: doppler.abs(),
        }
    }

    #[test]
    fn sampler_degenerate_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let chan = sample_channel(1, 0, 0.0, false, &mut rng).unwrap();
        assert_eq!(chan.paths.len(), 1);
        assert_eq!(chan.paths[0].delay, 0);
        assert_eq!(chan.paths[0].doppler, 0.0);
    }

    #[test]
    fn sampler_is_deterministic_and_normalized() {
        let a = sample_channel(3, 3, 3.0, false, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = sample_channel(3, 3, 3.0, false, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);

        // Distinct delays, Doppler within bounds.
        assert_ne!(a.paths[0].delay, a.paths[1].delay);
        assert_ne!(a.paths[0].delay, a.paths[2].delay);
        for p in &a.paths {
            assert!(p.doppler.abs() <= 3.0 && p.doppler.fract() == 0.0);
        }

        // E[Σ|h_p|²] = 1: average over many realizations.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut acc = 0.0;
        let reps = 20_000;
        for _ in 0..reps {
            let c = sample_channel(3, 3, 3.0, false, &mut rng).unwrap();
            acc += c.paths.iter().map(|p| p.gain.norm_sqr()).sum::<f64>();
        }
        let mean = acc / reps as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean path power {mean}");
    }

    #[test]
    fn sampler_rejects_too_many_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_channel(5, 3, 1.0, false, &mut rng).is_err());
        assert!(sample_channel(0, 3, 1.0, false, &mut rng).is_err());
    }

    #[test]
    fn phi_zero_delay_is_identity() {
        let d = phase_matrix_phi(0, 0.123, 8).unwrap();
        assert!(d.iter().all(|&v| (v - Complex64::ONE).norm() < 1e-15));
    }

    #[test]
    fn phi_matches_displayed_formula() {
        let c1 = 7.0 / 64.0;
        let d = phase_matrix_phi(1, c1, 32).unwrap();
        let want = Complex64::cis(-2.0 * std::f64::consts::PI * (c1 * (1024.0 - 64.0)).rem_euclid(1.0));
        assert!((d[0] - want).norm() < 1e-12);
        assert!(d[1..].iter().all(|&v| (v - Complex64::ONE).norm() < 1e-15));
    }

    #[test]
    fn phi_entries_unit_modulus_and_range_checked() {
        let d = phase_matrix_phi(5, 0.7312, 9).unwrap();
        assert!(d.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
        assert!(phase_matrix_phi(9, 0.1, 9).is_err());
    }

    #[test]
    fn identity_channel() {
        let chan = single_path(Complex64::ONE, 0, 0.0);
        let h = channel_matrix(&chan, 0.25, 8).unwrap();
        assert!(crate::linalg::identity_defect(&h.to_dense()) < 1e-14);
    }

    #[test]
    fn pure_delay_is_cyclic_shift() {
        let chan = single_path(Complex64::ONE, 1, 0.0);
        let h = channel_matrix(&chan, 0.0, 4).unwrap().to_dense();
        for i in 0..4 {
            for j in 0..4 {
                let want = if j == (i + 3) % 4 { 1.0 } else { 0.0 };
                assert!((h[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn nnz_is_paths_times_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let chan = sample_channel(3, 3, 3.0, false, &mut rng).unwrap();
            let h = channel_matrix(&chan, 7.0 / 64.0, 32).unwrap();
            assert_eq!(h.nnz(), 3 * 32);
        }
    }

    #[test]
    fn delay_out_of_range_rejected() {
        let chan = single_path(Complex64::ONE, 8, 0.0);
        assert!(channel_matrix(&chan, 0.1, 8).is_err());
    }

    #[test]
    fn apply_channel_noiseless_and_linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let chan = sample_channel(2, 3, 1.0, false, &mut rng).unwrap();
        let h = channel_matrix(&chan, 9.0 / 64.0, 8).unwrap();
        let s: Vec<Complex64> = (0..8)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let r = apply_channel(&s, &h, 0.0, &mut rng).unwrap();
        let hs = crate::linalg::matvec(&h.to_dense(), &s);
        assert!(max_abs_diff(&r, &hs) < 1e-12);

        let alpha = Complex64::new(0.3, -1.1);
        let scaled: Vec<Complex64> = s.iter().map(|v| v * alpha).collect();
        let r2 = apply_channel(&scaled, &h, 0.0, &mut rng).unwrap();
        let want: Vec<Complex64> = r.iter().map(|v| v * alpha).collect();
        assert!(max_abs_diff(&r2, &want) < 1e-12);
    }

    #[test]
    fn apply_channel_rejects_negative_noise() {
        let chan = single_path(Complex64::ONE, 0, 0.0);
        let h = channel_matrix(&chan, 0.1, 4).unwrap();
        let s = vec![Complex64::ONE; 4];
        assert!(apply_channel(&s, &h, -1.0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn noise_variance_matches_n0() {
        let chan = single_path(Complex64::ONE, 0, 0.0);
        let n = 8;
        let h = channel_matrix(&chan, 0.1, n).unwrap();
        let s = vec![Complex64::ZERO; n];
        let n0 = 0.37;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draws = 100_000 / n;
        let mut acc = 0.0;
        for _ in 0..draws {
            let r = apply_channel(&s, &h, n0, &mut rng).unwrap();
            acc += norm_sqr(&r);
        }
        let per_entry = acc / (draws * n) as f64;
        assert!(
            (per_entry - n0).abs() / n0 < 0.02,
            "per-entry variance {per_entry} vs {n0}"
        );
    }

    #[test]
    fn zero_signal_pure_noise_energy() {
        let chan = single_path(Complex64::ONE, 0, 0.0);
        let n = 32;
        let h = channel_matrix(&chan, 0.1, n).unwrap();
        let s = vec![Complex64::ZERO; n];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut acc = 0.0;
        let draws = 2000;
        for _ in 0..draws {
            acc += norm_sqr(&apply_channel(&s, &h, 1.0, &mut rng).unwrap());
        }
        let mean = acc / draws as f64;
        assert!((mean - n as f64).abs() / (n as f64) < 0.05, "E‖r‖² = {mean}");
    }

    #[test]
    fn effective_channel_of_identity_is_identity() {
        let params = ChirpParams::optimal(8, 1, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let daft = DaftMatrix::new(&params, PermutationIndex::random(8, &mut rng).unwrap())
            .unwrap();
        let chan = single_path(Complex64::ONE, 0, 0.0);
        let h = channel_matrix(&chan, params.c1(), 8).unwrap();
        let eff = effective_channel(&h, &daft).unwrap();
        assert!(crate::linalg::identity_defect(&eff.g) < 1e-10);
    }

    #[test]
    fn effective_channel_matches_matrix_product_and_io_relation() {
        let params = ChirpParams::optimal(8, 1, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let daft = DaftMatrix::new(&params, PermutationIndex::random(8, &mut rng).unwrap())
            .unwrap();
        let chan = sample_channel(2, 3, 1.0, false, &mut rng).unwrap();
        let h = channel_matrix(&chan, params.c1(), 8).unwrap();
        let eff = effective_channel(&h, &daft).unwrap();

        // Constituent product A H A⁻¹.
        let a = daft.forward_dense();
        let want = &a * h.to_dense() * daft.inverse_dense();
        assert!((eff.g.clone() - want).norm() < 1e-10);

        // A(Hs + w) = Gx + Aw on a random instance.
        let x: Vec<Complex64> = (0..8)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let w: Vec<Complex64> = (0..8)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let s = daft.modulate(&x).unwrap();
        let mut r = h.apply(&s).unwrap();
        for (ri, wi) in r.iter_mut().zip(&w) {
            *ri += wi;
        }
        let lhs = daft.demodulate(&r).unwrap();
        let gx = crate::linalg::matvec(&eff.g, &x);
        let aw = daft.demodulate(&w).unwrap();
        let rhs: Vec<Complex64> = gx.iter().zip(&aw).map(|(a, b)| a + b).collect();
        assert!(max_abs_diff(&lhs, &rhs) < 1e-9);

        // demodulate(apply_channel(modulate(x), H, 0)) = G·x.
        let noiseless = daft
            .demodulate(&apply_channel(&daft.modulate(&x).unwrap(), &h, 0.0, &mut rng).unwrap())
            .unwrap();
        assert!(max_abs_diff(&noiseless, &gx) < 1e-9);
    }

    #[test]
    fn single_integer_path_is_separable() {
        // One path with integer Doppler and the matched c1: G has exactly one
        // nonzero per row.
        let params = ChirpParams::optimal(32, 3, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let chan = sample_channel(1, 3, 3.0, false, &mut rng).unwrap();
            let h = channel_matrix(&chan, params.c1(), 32).unwrap();
            let daft =
                DaftMatrix::new(&params, PermutationIndex::random(32, &mut rng).unwrap())
                    .unwrap();
            let g = effective_channel(&h, &daft).unwrap().g;
            for i in 0..32 {
                let count = (0..32).filter(|&j| g[(i, j)].norm() > 1e-9).count();
                assert_eq!(count, 1, "row {i}");
            }
        }
    }

    #[test]
    fn effective_noise_keeps_variance() {
        // Aw has the same per-entry variance as w (unitary transform).
        let params = ChirpParams::optimal(8, 1, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let daft = DaftMatrix::new(&params, PermutationIndex::random(8, &mut rng).unwrap())
            .unwrap();
        let n0: f64 = 0.81;
        let sigma = (n0 / 2.0).sqrt();
        let normal = Normal::new(0.0, sigma).unwrap();
        let draws = 100_000 / 8;
        let mut acc = 0.0;
        for _ in 0..draws {
            let w: Vec<Complex64> = (0..8)
                .map(|_| Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
                .collect();
            acc += norm_sqr(&daft.demodulate(&w).unwrap());
        }
        let per_entry = acc / (draws * 8) as f64;
        assert!(
            (per_entry - n0).abs() / n0 < 0.02,
            "effective noise variance {per_entry} vs {n0}"
        );
    }
}
