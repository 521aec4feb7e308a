//! Chirp sequences, permutation indexing and the permuted DAFT transform.
//!
//! The forward transform is `A_i = diag(perm_i(λ_c2)) · F_N · diag(λ_c1)`
//! with `F_N` the unitary N-point DFT matrix and `λ_c` the quadratic-phase
//! chirp vector `exp(-j·2π·c·n²)`. Its inverse is the conjugate transpose.
//! Every operation offers an FFT fast path (O(N log N)) and a dense-matrix
//! reference path used as the testing oracle.

use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::{matvec, CMatrix};

/// Largest order whose factorial fits in `u128` (34! < 2¹²⁸ ≤ 35!).
pub const MAX_RANKED_ORDER: usize = 34;

/// `k!` as `u128`, or `None` when it does not fit (k ≥ 35).
pub fn factorial(k: usize) -> Option<u128> {
    const TABLE_LEN: usize = MAX_RANKED_ORDER + 1;
    const TABLE: [u128; TABLE_LEN] = {
        let mut t = [1u128; TABLE_LEN];
        let mut i = 1;
        while i < TABLE_LEN {
            t[i] = t[i - 1] * i as u128;
            i += 1;
        }
        t
    };
    TABLE.get(k).copied()
}

/// Unit-modulus chirp vector with entries `exp(-j·2π·c·n²)`, n = 0..N-1.
pub fn chirp_vector(c: f64, n: usize) -> Result<Vec<Complex64>> {
    if n == 0 {
        return Err(Error::InvalidDimension(
            "chirp vector length must be at least 1".into(),
        ));
    }
    Ok((0..n).map(|i| quad_phase(c, (i * i) as f64)).collect())
}

/// `exp(-j·2π·c·q)` with the argument reduced mod 1 before the trig calls.
fn quad_phase(c: f64, q: f64) -> Complex64 {
    let t = (c * q).rem_euclid(1.0);
    Complex64::cis(-2.0 * std::f64::consts::PI * t)
}

/// Optimal first chirp frequency `(2(f_max + ξ) + 1) / (2N)` for a channel
/// with maximum integer Doppler `f_max` and guard width `ξ`.
pub fn optimal_c1(f_max: u32, xi: u32, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidDimension("N must be at least 1".into()));
    }
    Ok((2.0 * (f_max as f64 + xi as f64) + 1.0) / (2.0 * n as f64))
}

/// Deterministic irrational-valued default for the second chirp frequency,
/// `(√5 - 1) / (2N)`.
pub fn default_c2(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidDimension("N must be at least 1".into()));
    }
    Ok((5.0f64.sqrt() - 1.0) / (2.0 * n as f64))
}

/// DAFT chirp parameters: subcarrier count `N`, chirp frequencies `c1`, `c2`
/// and the guard width `ξ` used when `c1` is derived from channel statistics.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ChirpParams {
    n: usize,
    c1: f64,
    c2: f64,
    guard_xi: u32,
    /// Doppler bound handed to [`ChirpParams::optimal`], kept for provenance.
    f_max: Option<u32>,
}

impl ChirpParams {
    pub fn new(n: usize, c1: f64, c2: f64, guard_xi: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(format!(
                "N must be at least 2, got {n}"
            )));
        }
        Ok(ChirpParams {
            n,
            c1,
            c2,
            guard_xi,
            f_max: None,
        })
    }

    /// Parameters with `c1` set optimally for integer Doppler up to `f_max`
    /// with guard `ξ`, and the deterministic default `c2`.
    pub fn optimal(n: usize, f_max: u32, xi: u32) -> Result<Self> {
        Self::optimal_with_c2(n, f_max, xi, default_c2(n)?)
    }

    pub fn optimal_with_c2(n: usize, f_max: u32, xi: u32, c2: f64) -> Result<Self> {
        let mut p = Self::new(n, optimal_c1(f_max, xi, n)?, c2, xi)?;
        p.f_max = Some(f_max);
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn c1(&self) -> f64 {
        self.c1
    }
    pub fn c2(&self) -> f64 {
        self.c2
    }
    pub fn guard_xi(&self) -> u32 {
        self.guard_xi
    }
    pub fn f_max(&self) -> Option<u32> {
        self.f_max
    }
}

/// Lexicographic rank of a permutation of `{0, …, order-1}`.
///
/// Index 1 is the identity permutation; index `order!` is the descending
/// permutation. Ranks are held in 128 bits, which covers every index up to
/// order 34; the identity (and any other index that fits) remains valid for
/// larger orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PermutationIndex {
    index: u128,
    order: usize,
}

impl PermutationIndex {
    pub fn new(index: u128, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidDimension(
                "permutation order must be at least 1".into(),
            ));
        }
        if index == 0 {
            return Err(Error::IndexOutOfRange { index, order });
        }
        if let Some(f) = factorial(order) {
            if index > f {
                return Err(Error::IndexOutOfRange { index, order });
            }
        }
        Ok(PermutationIndex { index, order })
    }

    /// Index 1: the identity permutation of any order.
    pub fn identity(order: usize) -> Result<Self> {
        Self::new(1, order)
    }

    /// Uniform random index in `[1, order!]`.
    pub fn random<R: Rng + ?Sized>(order: usize, rng: &mut R) -> Result<Self> {
        let f = factorial(order).ok_or(Error::OrderTooLarge(order))?;
        Self::new(rng.random_range(1..=f), order)
    }

    pub fn index(&self) -> u128 {
        self.index
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Decodes the rank into the permutation vector via the factorial number
    /// system: the `(index-1)`-th permutation of `(0, …, order-1)` in
    /// lexicographic order.
    pub fn to_permutation(&self) -> Vec<usize> {
        let mut rank = self.index - 1;
        let mut available: Vec<usize> = (0..self.order).collect();
        let mut out = Vec::with_capacity(self.order);
        for pos in 0..self.order {
            let slots = self.order - 1 - pos;
            let digit = match factorial(slots) {
                Some(f) => {
                    let d = (rank / f) as usize;
                    rank %= f;
                    d
                }
                // slots! exceeds u128::MAX ≥ rank, so the digit is zero.
                None => 0,
            };
            out.push(available.remove(digit));
        }
        out
    }

    /// Inverse of [`PermutationIndex::to_permutation`] (Lehmer encoding).
    pub fn from_permutation(perm: &[usize]) -> Result<Self> {
        let order = perm.len();
        if order == 0 {
            return Err(Error::InvalidPermutation("empty permutation".into()));
        }
        let mut seen = vec![false; order];
        for &p in perm {
            if p >= order {
                return Err(Error::InvalidPermutation(format!(
                    "element {p} out of range for order {order}"
                )));
            }
            if seen[p] {
                return Err(Error::InvalidPermutation(format!("repeated element {p}")));
            }
            seen[p] = true;
        }
        let mut rank: u128 = 0;
        for (pos, &p) in perm.iter().enumerate() {
            let smaller_unused = perm[pos + 1..].iter().filter(|&&q| q < p).count() as u128;
            let slots = order - 1 - pos;
            if smaller_unused > 0 {
                let f = factorial(slots).ok_or(Error::OrderTooLarge(order))?;
                rank = rank
                    .checked_add(
                        smaller_unused
                            .checked_mul(f)
                            .ok_or(Error::OrderTooLarge(order))?,
                    )
                    .ok_or(Error::OrderTooLarge(order))?;
            }
        }
        Self::new(rank + 1, order)
    }
}

impl std::fmt::Display for PermutationIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index)
    }
}

// rustfft plans are cheap to share and thread-safe; one planner serves the
// whole process.
fn plan_pair(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    static PLANNER: Mutex<Option<FftPlanner<f64>>> = Mutex::new(None);
    let mut guard = PLANNER.lock().unwrap();
    let planner = guard.get_or_insert_with(FftPlanner::new);
    (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
}

/// A permuted DAFT matrix `A_i` with its inverse, held in factored form
/// (chirp diagonals plus FFT plans) so that applying either direction costs
/// O(N log N).
#[derive(Clone)]
pub struct DaftMatrix {
    params: ChirpParams,
    perm: PermutationIndex,
    lambda1: Vec<Complex64>,
    lambda2_perm: Vec<Complex64>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for DaftMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DaftMatrix")
            .field("n", &self.params.n())
            .field("perm", &self.perm)
            .finish()
    }
}

impl DaftMatrix {
    /// Builds `A_i` for the given chirp parameters and permutation index.
    /// The permutation reorders the second chirp sequence:
    /// `λ_c2,i[n] = λ_c2[π_i(n)]`.
    pub fn new(params: &ChirpParams, perm: PermutationIndex) -> Result<Self> {
        if perm.order() != params.n() {
            return Err(Error::dim(params.n(), perm.order(), "permutation order"));
        }
        let n = params.n();
        let lambda1 = chirp_vector(params.c1(), n)?;
        let lambda2 = chirp_vector(params.c2(), n)?;
        let perm_vec = perm.to_permutation();
        let lambda2_perm = perm_vec.iter().map(|&p| lambda2[p]).collect();
        let (fft_fwd, fft_inv) = plan_pair(n);
        Ok(DaftMatrix {
            params: params.clone(),
            perm,
            lambda1,
            lambda2_perm,
            fft_fwd,
            fft_inv,
        })
    }

    /// The classical (identity-permutation) DAFT matrix.
    pub fn classical(params: &ChirpParams) -> Result<Self> {
        Self::new(params, PermutationIndex::identity(params.n())?)
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    pub fn params(&self) -> &ChirpParams {
        &self.params
    }

    pub fn perm(&self) -> PermutationIndex {
        self.perm
    }

    /// Modulation `s = A⁻¹ x` via the fast path
    /// `Λ_c1ᴴ · IFFT · Λ_c2,iᴴ · x` (no matrix is formed).
    pub fn modulate(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(x)?;
        let mut buf: Vec<Complex64> = x
            .iter()
            .zip(&self.lambda2_perm)
            .map(|(v, l)| v * l.conj())
            .collect();
        self.fft_inv.process(&mut buf);
        let scale = 1.0 / (self.n() as f64).sqrt();
        for (b, l) in buf.iter_mut().zip(&self.lambda1) {
            *b *= scale * l.conj();
        }
        Ok(buf)
    }

    /// Demodulation `y = A r` via the fast path `Λ_c2,i · FFT · Λ_c1 · r`.
    pub fn demodulate(&self, r: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(r)?;
        let mut buf: Vec<Complex64> = r.iter().zip(&self.lambda1).map(|(v, l)| v * l).collect();
        self.fft_fwd.process(&mut buf);
        let scale = 1.0 / (self.n() as f64).sqrt();
        for (b, l) in buf.iter_mut().zip(&self.lambda2_perm) {
            *b *= scale * l;
        }
        Ok(buf)
    }

    /// Dense-matrix reference for [`DaftMatrix::modulate`].
    pub fn modulate_dense(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(x)?;
        Ok(matvec(&self.inverse_dense(), x))
    }

    /// Dense-matrix reference for [`DaftMatrix::demodulate`].
    pub fn demodulate_dense(&self, r: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(r)?;
        Ok(matvec(&self.forward_dense(), r))
    }

    /// The forward matrix `A_i = Λ_c2,i F_N Λ_c1`, materialized densely.
    pub fn forward_dense(&self) -> CMatrix {
        let n = self.n();
        let scale = 1.0 / (n as f64).sqrt();
        CMatrix::from_fn(n, n, |m, k| {
            let f = quad_phase(1.0 / n as f64, (m * k) as f64) * scale;
            self.lambda2_perm[m] * f * self.lambda1[k]
        })
    }

    /// The inverse `A_i⁻¹ = A_iᴴ` (the DAFT is unitary), materialized densely.
    pub fn inverse_dense(&self) -> CMatrix {
        self.forward_dense().adjoint()
    }

    fn check_len(&self, v: &[Complex64]) -> Result<()> {
        if v.len() != self.n() {
            return Err(Error::dim(self.n(), v.len(), "signal length"));
        }
        Ok(())
    }
}
