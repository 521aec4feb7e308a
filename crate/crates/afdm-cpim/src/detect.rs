//! Detection: brute-force ML over the full `(k, x)` candidate space and the
//! reduced-complexity MMSE-ML bank.
//!
//! The MMSE bank factors every per-codeword filter through the shared term
//! `Hᴴ(HHᴴ + N0·I)⁻¹`, so one matrix inversion serves all `K` hypotheses and
//! each hypothesis costs one fast DAFT application plus one residual.

use num_complex::Complex64;

use crate::afdm::DaftMatrix;
use crate::channel::ChannelMatrix;
use crate::codec::Codebook;
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::linalg::{invert_with_condition, matvec, CMatrix};

/// Default cap on `K·M^N` candidates for the brute-force search.
pub const FULL_ML_DEFAULT_BUDGET: u128 = 1 << 24;

/// Condition-estimate ceiling for inverting `HHᴴ` when `N0 = 0`.
const COND_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorMethod {
    FullMl,
    MmseMl,
}

#[derive(Debug, Clone)]
pub struct DetectionResult {
    /// Detected symbol vector.
    pub x_hat: Vec<Complex64>,
    /// Detected codeword index (1-based).
    pub k_hat: usize,
    /// Achieved residual `‖r - H A_k⁻¹ x̂‖₂²`.
    pub metric: f64,
    pub method: DetectorMethod,
    /// Number of residual evaluations performed (complexity accounting).
    pub residual_evals: usize,
}

/// Received-domain residual `‖r - H A_k⁻¹ x‖₂²`.
pub fn residual_received(
    r: &[Complex64],
    h: &ChannelMatrix,
    daft: &DaftMatrix,
    x: &[Complex64],
) -> Result<f64> {
    let hs = h.apply(&daft.modulate(x)?)?;
    Ok(r.iter().zip(&hs).map(|(a, b)| (a - b).norm_sqr()).sum())
}

/// Demodulated-domain residual `‖A_k r - A_k H A_k⁻¹ x‖₂²`; equal to the
/// received-domain form by unitarity of the DAFT.
pub fn residual_demodulated(
    r: &[Complex64],
    h: &ChannelMatrix,
    daft: &DaftMatrix,
    x: &[Complex64],
) -> Result<f64> {
    let y = daft.demodulate(r)?;
    let gx = daft.demodulate(&h.apply(&daft.modulate(x)?)?)?;
    Ok(y.iter().zip(&gx).map(|(a, b)| (a - b).norm_sqr()).sum())
}

/// Exact ML detection by exhaustive search over all `K·M^N` candidates.
///
/// Candidates are scanned with `k` ascending and symbol bit patterns in
/// lexicographic order, keeping strictly better metrics, so ties resolve to
/// the smallest `k` and then the lexicographically smallest bit pattern.
pub fn ml_detect_full(
    r: &[Complex64],
    h: &ChannelMatrix,
    codebook: &Codebook,
    constellation: &Constellation,
    budget: u128,
) -> Result<DetectionResult> {
    let n = codebook.n();
    if r.len() != n {
        return Err(Error::dim(n, r.len(), "received signal length"));
    }
    let b1 = n * constellation.bits_per_symbol();
    let candidates = if b1 >= 100 {
        u128::MAX
    } else {
        (codebook.k() as u128).saturating_mul(1u128 << b1)
    };
    if candidates > budget {
        return Err(Error::BudgetExceeded {
            context: "full ML detection",
            candidates,
            budget,
            hint: "use the MMSE-ML detector or the GAS solver for this size",
        });
    }

    let mut best: Option<DetectionResult> = None;
    let mut evals = 0usize;
    let mut bits = vec![0u8; b1];
    for k in 1..=codebook.k() {
        let daft = codebook.daft(k)?;
        for v in 0u64..(1u64 << b1) {
            for (i, b) in bits.iter_mut().enumerate() {
                *b = ((v >> (b1 - 1 - i)) & 1) as u8;
            }
            let x = constellation.map_bits(&bits)?;
            let metric = residual_received(r, h, daft, &x)?;
            evals += 1;
            if best.as_ref().is_none_or(|b| metric < b.metric) {
                best = Some(DetectionResult {
                    x_hat: x,
                    k_hat: k,
                    metric,
                    method: DetectorMethod::FullMl,
                    residual_evals: 0,
                });
            }
        }
    }
    let mut out = best.expect("at least one candidate");
    out.residual_evals = evals;
    Ok(out)
}

/// MMSE filter bank: the shared factor `Hᴴ(HHᴴ + N0·I)⁻¹` plus the per-
/// codeword DAFT applications `M_k = A_k · common`.
#[derive(Debug, Clone)]
pub struct MmseFilterBank {
    common: CMatrix,
    n0: f64,
    /// Matrix inversions performed during construction (always 1).
    pub inversions: usize,
    /// Frobenius condition estimate of the inverted matrix.
    pub cond_estimate: f64,
}

impl MmseFilterBank {
    /// `common · r`, shared across all codeword hypotheses.
    pub fn equalize_common(&self, r: &[Complex64]) -> Vec<Complex64> {
        matvec(&self.common, r)
    }

    /// `M_k r = A_k (common · r)`.
    pub fn apply(&self, daft: &DaftMatrix, r: &[Complex64]) -> Result<Vec<Complex64>> {
        daft.demodulate(&self.equalize_common(r))
    }

    pub fn common(&self) -> &CMatrix {
        &self.common
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }
}

/// Builds the bank with a single `N×N` inversion shared by all `K` filters.
pub fn build_mmse_bank(h: &ChannelMatrix, codebook: &Codebook, n0: f64) -> Result<MmseFilterBank> {
    if n0 < 0.0 {
        return Err(Error::NegativeNoise(n0));
    }
    if h.n() != codebook.n() {
        return Err(Error::dim(codebook.n(), h.n(), "channel size"));
    }
    let mut gram = h.gram();
    for i in 0..h.n() {
        gram[(i, i)] += Complex64::new(n0, 0.0);
    }
    let (inv, cond_estimate) = invert_with_condition(&gram)?;
    if n0 == 0.0 && cond_estimate > COND_LIMIT {
        return Err(Error::Numerical {
            message: "HHᴴ too ill-conditioned to invert with N0 = 0".into(),
            cond_estimate,
        });
    }
    let common = h.adjoint_times(&inv);
    Ok(MmseFilterBank {
        common,
        n0,
        inversions: 1,
        cond_estimate,
    })
}

/// Reduced-complexity MMSE-ML detection: equalize under each codeword
/// hypothesis, hard-project, and keep the hypothesis with the smallest
/// received-domain residual (ties resolve to the smallest `k`).
pub fn mmse_ml_detect(
    r: &[Complex64],
    h: &ChannelMatrix,
    codebook: &Codebook,
    n0: f64,
    constellation: &Constellation,
) -> Result<DetectionResult> {
    if r.len() != codebook.n() {
        return Err(Error::dim(codebook.n(), r.len(), "received signal length"));
    }
    let bank = build_mmse_bank(h, codebook, n0)?;
    let z = bank.equalize_common(r);
    let mut best: Option<DetectionResult> = None;
    for k in 1..=codebook.k() {
        let daft = codebook.daft(k)?;
        let soft = daft.demodulate(&z)?;
        let x = constellation.project(&soft);
        let metric = residual_received(r, h, daft, &x)?;
        if best.as_ref().is_none_or(|b| metric < b.metric) {
            best = Some(DetectionResult {
                x_hat: x,
                k_hat: k,
                metric,
                method: DetectorMethod::MmseMl,
                residual_evals: 0,
            });
        }
    }
    let mut out = best.expect("codebook is non-empty");
    out.residual_evals = codebook.k();
    Ok(out)
}
