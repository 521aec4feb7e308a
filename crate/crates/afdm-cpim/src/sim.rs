//! Reproducible Monte Carlo BER experiments.
//!
//! Every trial is seeded counter-style from `(seed, ebn0_db, trial index)`,
//! so workers may process trials in any order and the early-stop point is
//! evaluated in index order: results are byte-identical for any worker
//! count. Each trial draws a fresh channel and fresh bits, encodes, passes
//! through the channel with AWGN, detects, and counts symbol-field and
//! index-field bit errors separately.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::afdm::{ChirpParams, PermutationIndex};
use crate::channel::{apply_channel, channel_matrix, sample_channel};
use crate::codec::{decode_bits, encode, Codebook};
use crate::constellation::Constellation;
use crate::design::{
    exhaustive_maxmin, pairwise_distances, permutation_pool, DistanceMetric,
    MAXMIN_DEFAULT_BUDGET,
};
use crate::detect::{ml_detect_full, mmse_ml_detect, FULL_ML_DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::gas::{parallel_ml_solve, GasConfig, GAS_EMULATION_MAX_VARS};
use crate::kv::KvMap;
use crate::{derive_seed, Bit};

const SALT_CODEBOOK: u64 = 0xC0DE_B00C;
const SALT_GAS: u64 = 0x6A5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    FullMl,
    MmseMl,
    Gas,
}

impl std::fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DetectorKind::FullMl => write!(f, "full_ml"),
            DetectorKind::MmseMl => write!(f, "mmse_ml"),
            DetectorKind::Gas => write!(f, "gas"),
        }
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full_ml" => Ok(DetectorKind::FullMl),
            "mmse_ml" => Ok(DetectorKind::MmseMl),
            "gas" => Ok(DetectorKind::Gas),
            other => Err(Error::Config(format!(
                "unknown detector `{other}` (expected full_ml|mmse_ml|gas)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookSource {
    /// Max-min design over a (possibly subsampled) permutation pool.
    Designed,
    /// Explicit permutation indices from the `q` key.
    Explicit,
    /// Seeded uniform random distinct indices.
    Random,
}

impl std::fmt::Display for CodebookSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CodebookSource::Designed => write!(f, "designed"),
            CodebookSource::Explicit => write!(f, "explicit"),
            CodebookSource::Random => write!(f, "random"),
        }
    }
}

impl std::str::FromStr for CodebookSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "designed" => Ok(CodebookSource::Designed),
            "explicit" => Ok(CodebookSource::Explicit),
            "random" => Ok(CodebookSource::Random),
            other => Err(Error::Config(format!(
                "unknown codebook source `{other}` (expected designed|explicit|random)"
            ))),
        }
    }
}

/// Free parameters of one BER experiment.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SimConfig {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub paths: usize,
    pub ell_max: usize,
    pub f_max: u32,
    pub xi: u32,
    pub fractional_doppler: bool,
    pub detector: DetectorKind,
    pub codebook: CodebookSource,
    pub codebook_metric: DistanceMetric,
    pub pool_size: usize,
    /// Explicit permutation indices (required for `codebook = explicit`).
    pub q: Option<Vec<u128>>,
    /// Second chirp frequency override; default is the golden-ratio value.
    pub c2: Option<f64>,
    pub ebn0_grid_db: Vec<f64>,
    pub trials_per_point: usize,
    /// Early stop once this many total bit errors have accumulated.
    pub target_bit_errors: Option<usize>,
    pub seed: u64,
    /// Channel noise override (e.g. 0 for noiseless ground-truth runs).
    pub channel_n0_override: Option<f64>,
    /// MMSE filter noise override for mismatch studies.
    pub filter_n0_override: Option<f64>,
    pub gas_max_iterations: usize,
    pub gas_no_improve_limit: Option<usize>,
    pub gas_fixed_point_bits: Option<u32>,
    /// Also simulate the classical (K = 1) reference shifted by the
    /// theoretical gain, for curve overlays.
    pub emit_theoretical: bool,
}

impl SimConfig {
    pub fn from_kv_text(text: &str, overrides: &[String]) -> Result<Self> {
        let mut kv = KvMap::parse(text)?;
        kv.apply_overrides(overrides)?;
        let cfg = SimConfig {
            n: kv.require("n")?,
            m: kv.require("m")?,
            k: kv.require("k")?,
            paths: kv.require("paths")?,
            ell_max: kv.require("ell_max")?,
            f_max: kv.require("f_max")?,
            xi: kv.take_or("xi", 0)?,
            fractional_doppler: kv.take_bool("fractional_doppler", false)?,
            detector: kv.require("detector")?,
            codebook: kv.take_or("codebook", CodebookSource::Designed)?,
            codebook_metric: kv.take_or("codebook_metric", DistanceMetric::Angular)?,
            pool_size: kv.take_or("pool_size", 256)?,
            q: kv.take_list("q")?,
            c2: kv.take("c2")?,
            ebn0_grid_db: kv
                .take_list("ebn0_grid_db")?
                .ok_or_else(|| Error::Config("missing required key `ebn0_grid_db`".into()))?,
            trials_per_point: kv.require("trials_per_point")?,
            target_bit_errors: kv.take("target_bit_errors")?,
            seed: kv.require("seed")?,
            channel_n0_override: kv.take("channel_n0_override")?,
            filter_n0_override: kv.take("filter_n0_override")?,
            gas_max_iterations: kv.take_or("gas_max_iterations", 2000)?,
            gas_no_improve_limit: kv.take("gas_no_improve_limit")?,
            gas_fixed_point_bits: kv.take("gas_fixed_point_bits")?,
            emit_theoretical: kv.take_bool("emit_theoretical", false)?,
        };
        kv.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n must be >= 2, got {}", self.n)));
        }
        Constellation::from_order(self.m)?;
        if self.k == 0 || !self.k.is_power_of_two() {
            return Err(Error::Config(format!(
                "k must be a power of two >= 1, got {}",
                self.k
            )));
        }
        if self.paths == 0 || self.paths > self.ell_max + 1 {
            return Err(Error::Config(format!(
                "paths = {} must be in [1, ell_max + 1 = {}]",
                self.paths,
                self.ell_max + 1
            )));
        }
        if self.ell_max >= self.n {
            return Err(Error::Config(format!(
                "ell_max = {} must be below n = {}",
                self.ell_max, self.n
            )));
        }
        if self.ebn0_grid_db.is_empty() {
            return Err(Error::Config("ebn0_grid_db must not be empty".into()));
        }
        if self.trials_per_point == 0 {
            return Err(Error::Config("trials_per_point must be >= 1".into()));
        }
        let b1 = self.n * Constellation::from_order(self.m)?.bits_per_symbol();
        match self.detector {
            DetectorKind::FullMl => {
                let candidates = if b1 >= 100 {
                    u128::MAX
                } else {
                    (self.k as u128).saturating_mul(1u128 << b1)
                };
                if candidates > FULL_ML_DEFAULT_BUDGET {
                    return Err(Error::Config(format!(
                        "full_ml needs K·M^N = {candidates} candidates, above the budget {FULL_ML_DEFAULT_BUDGET}; use mmse_ml or gas"
                    )));
                }
            }
            DetectorKind::Gas => {
                if b1 > GAS_EMULATION_MAX_VARS {
                    return Err(Error::Config(format!(
                        "gas detector needs {b1} binary variables, above the emulation budget {GAS_EMULATION_MAX_VARS}"
                    )));
                }
                if self.gas_max_iterations == 0 {
                    return Err(Error::Config("gas_max_iterations must be >= 1".into()));
                }
            }
            DetectorKind::MmseMl => {}
        }
        if self.codebook == CodebookSource::Explicit {
            let q = self
                .q
                .as_ref()
                .ok_or_else(|| Error::Config("codebook = explicit requires `q`".into()))?;
            if q.len() != self.k {
                return Err(Error::Config(format!(
                    "q lists {} indices but k = {}",
                    q.len(),
                    self.k
                )));
            }
        }
        if let Some(n0) = self.channel_n0_override {
            if n0 < 0.0 {
                return Err(Error::Config("channel_n0_override must be >= 0".into()));
            }
        }
        Ok(())
    }

    pub fn chirp_params(&self) -> Result<ChirpParams> {
        match self.c2 {
            Some(c2) => ChirpParams::optimal_with_c2(self.n, self.f_max, self.xi, c2),
            None => ChirpParams::optimal(self.n, self.f_max, self.xi),
        }
    }

    /// Deterministic flat-text echo of the effective configuration.
    pub fn to_kv_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("n = {}\n", self.n));
        s.push_str(&format!("m = {}\n", self.m));
        s.push_str(&format!("k = {}\n", self.k));
        s.push_str(&format!("paths = {}\n", self.paths));
        s.push_str(&format!("ell_max = {}\n", self.ell_max));
        s.push_str(&format!("f_max = {}\n", self.f_max));
        s.push_str(&format!("xi = {}\n", self.xi));
        s.push_str(&format!("fractional_doppler = {}\n", self.fractional_doppler));
        s.push_str(&format!("detector = {}\n", self.detector));
        s.push_str(&format!("codebook = {}\n", self.codebook));
        s.push_str(&format!("codebook_metric = {}\n", self.codebook_metric));
        s.push_str(&format!("pool_size = {}\n", self.pool_size));
        if let Some(q) = &self.q {
            let qs: Vec<String> = q.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!("q = {}\n", qs.join(" ")));
        }
        if let Some(c2) = self.c2 {
            s.push_str(&format!("c2 = {c2}\n"));
        }
        let grid: Vec<String> = self.ebn0_grid_db.iter().map(|v| v.to_string()).collect();
        s.push_str(&format!("ebn0_grid_db = {}\n", grid.join(" ")));
        s.push_str(&format!("trials_per_point = {}\n", self.trials_per_point));
        if let Some(t) = self.target_bit_errors {
            s.push_str(&format!("target_bit_errors = {t}\n"));
        }
        s.push_str(&format!("seed = {}\n", self.seed));
        if let Some(v) = self.channel_n0_override {
            s.push_str(&format!("channel_n0_override = {v}\n"));
        }
        if let Some(v) = self.filter_n0_override {
            s.push_str(&format!("filter_n0_override = {v}\n"));
        }
        s.push_str(&format!("gas_max_iterations = {}\n", self.gas_max_iterations));
        if let Some(v) = self.gas_no_improve_limit {
            s.push_str(&format!("gas_no_improve_limit = {v}\n"));
        }
        if let Some(v) = self.gas_fixed_point_bits {
            s.push_str(&format!("gas_fixed_point_bits = {v}\n"));
        }
        s.push_str(&format!("emit_theoretical = {}\n", self.emit_theoretical));
        s
    }

    pub fn config_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_kv_text().as_bytes());
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Builds the experiment's codebook (`k = 1` always uses the identity
    /// permutation: classical AFDM).
    pub fn build_codebook(&self) -> Result<Codebook> {
        let params = self.chirp_params()?;
        if self.k == 1 {
            return Codebook::new(&params, vec![PermutationIndex::identity(self.n)?]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[self.seed, SALT_CODEBOOK]));
        let entries = match self.codebook {
            CodebookSource::Explicit => self
                .q
                .as_ref()
                .ok_or_else(|| Error::Config("codebook = explicit requires `q`".into()))?
                .iter()
                .map(|&i| PermutationIndex::new(i, self.n))
                .collect::<Result<Vec<_>>>()?,
            CodebookSource::Random => {
                let mut entries: Vec<PermutationIndex> = Vec::with_capacity(self.k);
                while entries.len() < self.k {
                    let p = PermutationIndex::random(self.n, &mut rng)?;
                    if !entries.contains(&p) {
                        entries.push(p);
                    }
                }
                entries
            }
            CodebookSource::Designed => {
                let pool = permutation_pool(self.n, self.pool_size, &mut rng)?;
                let distances = pairwise_distances(&pool, &params, self.codebook_metric)?;
                let best = exhaustive_maxmin(&distances, self.k, MAXMIN_DEFAULT_BUDGET)?;
                best.permutations(&distances)
            }
        };
        Codebook::new(&params, entries)
    }

    fn gas_config(&self, seed: u64) -> GasConfig {
        GasConfig {
            scaling_lambda: 8.0 / 7.0,
            max_iterations: self.gas_max_iterations,
            no_improve_limit: self.gas_no_improve_limit,
            seed,
            fixed_point_bits: self.gas_fixed_point_bits,
        }
    }
}

/// One measured BER point.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BerPoint {
    pub ebn0_db: f64,
    pub trials: u64,
    pub symbol_bit_errors: u64,
    pub index_bit_errors: u64,
    pub total_bits: u64,
    pub ber_symbol: f64,
    pub ber_index: f64,
    pub ber_total: f64,
}

/// Noise variance for a target Eb/N0: with unit symbol energy the frame
/// carries `B = N·log2(M) + log2(K)` bits in `N` samples, so `Eb = N/B` and
/// `N0 = Eb · 10^(-dB/10)`. The index bits ride along without extra energy,
/// which is exactly what produces the CPIM Eb/N0 gain.
pub fn noise_variance_from_ebn0(ebn0_db: f64, n: usize, m: usize, k: usize) -> f64 {
    let b1 = n as f64 * (m as f64).log2();
    let b = b1 + (k as f64).log2();
    let eb = n as f64 / b;
    eb * 10f64.powf(-ebn0_db / 10.0)
}

/// `10·log10(1 + log2(K)/(N·log2 M))` with `log2(K)` passed explicitly so
/// that astronomically large `K` (up to `N!`) stays representable.
pub fn theoretical_gain_db(n: usize, m: usize, log2_k: f64) -> f64 {
    10.0 * (1.0 + log2_k / (n as f64 * (m as f64).log2())).log10()
}

struct TrialCounts {
    symbol_errors: u64,
    index_errors: u64,
}

fn run_trial(
    config: &SimConfig,
    codebook: &Codebook,
    constellation: &Constellation,
    ebn0_db: f64,
    n0_channel: f64,
    n0_filter: f64,
    trial: u64,
) -> Result<TrialCounts> {
    let trial_seed = derive_seed(&[config.seed, ebn0_db.to_bits(), trial]);
    let run = || -> Result<TrialCounts> {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let chan = sample_channel(
            config.paths,
            config.ell_max,
            config.f_max as f64,
            config.fractional_doppler,
            &mut rng,
        )?;
        let h = channel_matrix(&chan, codebook.params().c1(), config.n)?;
        let b1 = config.n * constellation.bits_per_symbol();
        let b = b1 + codebook.index_bits();
        let bits: Vec<Bit> = (0..b).map(|_| rng.random_range(0..=1u8)).collect();
        let frame = encode(&bits, codebook, constellation)?;
        let r = apply_channel(&frame.signal, &h, n0_channel, &mut rng)?;

        let rx_bits = match config.detector {
            DetectorKind::FullMl => {
                let det = ml_detect_full(&r, &h, codebook, constellation, FULL_ML_DEFAULT_BUDGET)?;
                decode_bits(&det.x_hat, det.k_hat, codebook, constellation)?
            }
            DetectorKind::MmseMl => {
                let det = mmse_ml_detect(&r, &h, codebook, n0_filter, constellation)?;
                decode_bits(&det.x_hat, det.k_hat, codebook, constellation)?
            }
            DetectorKind::Gas => {
                let gas_cfg = config.gas_config(derive_seed(&[trial_seed, SALT_GAS]));
                let sol = parallel_ml_solve(&r, &h, codebook, constellation, &gas_cfg)?;
                let mut rx = sol.bits;
                let b2 = codebook.index_bits();
                for i in (0..b2).rev() {
                    rx.push((((sol.k_star - 1) >> i) & 1) as Bit);
                }
                rx
            }
        };

        let symbol_errors = bits[..b1]
            .iter()
            .zip(&rx_bits[..b1])
            .filter(|(a, b)| a != b)
            .count() as u64;
        let index_errors = bits[b1..]
            .iter()
            .zip(&rx_bits[b1..])
            .filter(|(a, b)| a != b)
            .count() as u64;
        Ok(TrialCounts {
            symbol_errors,
            index_errors,
        })
    };
    run().map_err(|e| Error::TrialFailed {
        trial_seed,
        message: e.to_string(),
    })
}

/// Runs one grid point. Trials are evaluated in parallel batches but error
/// accumulation and the early-stop decision follow trial-index order, so the
/// result is independent of the worker count.
pub fn run_ber_point(config: &SimConfig, codebook: &Codebook, ebn0_db: f64) -> Result<BerPoint> {
    let constellation = Constellation::from_order(config.m)?;
    let n0_channel = config
        .channel_n0_override
        .unwrap_or_else(|| noise_variance_from_ebn0(ebn0_db, config.n, config.m, config.k));
    let n0_filter = config.filter_n0_override.unwrap_or(n0_channel);

    let b1 = config.n * constellation.bits_per_symbol();
    let b2 = codebook.index_bits();
    let b = (b1 + b2) as u64;

    let mut symbol_errors = 0u64;
    let mut index_errors = 0u64;
    let mut trials_done = 0u64;
    let target = config.target_bit_errors.map(|t| t as u64);

    const BATCH: u64 = 128;
    let total = config.trials_per_point as u64;
    let mut start = 0u64;
    'points: while start < total {
        let end = (start + BATCH).min(total);
        let batch: Vec<Result<TrialCounts>> = (start..end)
            .into_par_iter()
            .map(|t| {
                run_trial(
                    config,
                    codebook,
                    &constellation,
                    ebn0_db,
                    n0_channel,
                    n0_filter,
                    t,
                )
            })
            .collect();
        for counts in batch {
            let counts = counts?;
            symbol_errors += counts.symbol_errors;
            index_errors += counts.index_errors;
            trials_done += 1;
            if let Some(t) = target {
                if symbol_errors + index_errors >= t {
                    break 'points;
                }
            }
        }
        start = end;
    }

    let total_bits = trials_done * b;
    let sym_bits = trials_done * b1 as u64;
    let idx_bits = trials_done * b2 as u64;
    Ok(BerPoint {
        ebn0_db,
        trials: trials_done,
        symbol_bit_errors: symbol_errors,
        index_bit_errors: index_errors,
        total_bits,
        ber_symbol: if sym_bits > 0 {
            symbol_errors as f64 / sym_bits as f64
        } else {
            0.0
        },
        ber_index: if idx_bits > 0 {
            index_errors as f64 / idx_bits as f64
        } else {
            0.0
        },
        ber_total: if total_bits > 0 {
            (symbol_errors + index_errors) as f64 / total_bits as f64
        } else {
            0.0
        },
    })
}

/// A completed sweep with its provenance.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub points: Vec<BerPoint>,
    /// Classical reference simulated at `ebn0 + gain` per display point,
    /// present when `emit_theoretical` is set.
    pub theoretical: Option<Vec<BerPoint>>,
    pub gain_db: f64,
    pub config_hash: String,
    pub warnings: Vec<String>,
    pub runtime_seconds: f64,
    pub version: String,
}

/// Maps [`run_ber_point`] over the Eb/N0 grid and attaches metadata. A soft
/// monotonicity check (BER non-increasing up to 2σ of counting noise) only
/// emits warnings.
pub fn sweep(config: &SimConfig) -> Result<SweepResult> {
    config.validate()?;
    let start = std::time::Instant::now();
    let codebook = config.build_codebook()?;
    let mut points = Vec::with_capacity(config.ebn0_grid_db.len());
    for &db in &config.ebn0_grid_db {
        points.push(run_ber_point(config, &codebook, db)?);
    }

    let mut warnings = Vec::new();
    for w in points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let sigma = |p: &BerPoint| {
            if p.total_bits == 0 {
                return 0.0;
            }
            (p.ber_total * (1.0 - p.ber_total) / p.total_bits as f64).sqrt()
        };
        let tol = 2.0 * (sigma(a).powi(2) + sigma(b).powi(2)).sqrt();
        if b.ber_total > a.ber_total + tol {
            warnings.push(format!(
                "BER not monotone beyond 2-sigma: {} at {} dB vs {} at {} dB",
                a.ber_total, a.ebn0_db, b.ber_total, b.ebn0_db
            ));
        }
    }

    let gain_db = theoretical_gain_db(config.n, config.m, (config.k as f64).log2());
    let theoretical = if config.emit_theoretical && config.k > 1 {
        let mut ref_config = config.clone();
        ref_config.k = 1;
        ref_config.codebook = CodebookSource::Explicit;
        ref_config.q = Some(vec![1]);
        ref_config.emit_theoretical = false;
        let ref_codebook = ref_config.build_codebook()?;
        let mut ref_points = Vec::with_capacity(config.ebn0_grid_db.len());
        for &db in &config.ebn0_grid_db {
            let mut p = run_ber_point(&ref_config, &ref_codebook, db + gain_db)?;
            p.ebn0_db = db; // display axis of the overlay
            ref_points.push(p);
        }
        Some(ref_points)
    } else {
        None
    };

    Ok(SweepResult {
        points,
        theoretical,
        gain_db,
        config_hash: config.config_hash(),
        warnings,
        runtime_seconds: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

/// CSV schema shared by the sweep outputs: one row per grid point.
pub fn ber_csv(points: &[BerPoint]) -> String {
    let mut out = String::from(
        "ebn0_db,trials,symbol_bit_errors,index_bit_errors,total_bits,ber_symbol,ber_index,ber_total\n",
    );
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            p.ebn0_db,
            p.trials,
            p.symbol_bit_errors,
            p.index_bit_errors,
            p.total_bits,
            p.ber_symbol,
            p.ber_index,
            p.ber_total
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> SimConfig {
        SimConfig {
            n: 8,
            m: 2,
            k: 2,
            paths: 3,
            ell_max: 3,
            f_max: 1,
            xi: 0,
            fractional_doppler: false,
            detector: DetectorKind::MmseMl,
            codebook: CodebookSource::Random,
            codebook_metric: DistanceMetric::Angular,
            pool_size: 64,
            q: None,
            c2: None,
            ebn0_grid_db: vec![0.0, 6.0, 12.0],
            trials_per_point: 200,
            target_bit_errors: None,
            seed: 7,
            channel_n0_override: None,
            filter_n0_override: None,
            gas_max_iterations: 500,
            gas_no_improve_limit: None,
            gas_fixed_point_bits: None,
            emit_theoretical: false,
        }
    }

    #[test]
    fn noise_variance_examples() {
        assert!((noise_variance_from_ebn0(0.0, 32, 2, 1) - 1.0).abs() < 1e-15);
        assert!((noise_variance_from_ebn0(0.0, 32, 2, 4) - 32.0 / 34.0).abs() < 1e-15);
    }

    #[test]
    fn gain_matches_maximum_attainable() {
        // K = N! at N = 32, M = 2.
        let log2_fact: f64 = (2..=32).map(|i| (i as f64).log2()).sum();
        let gain = theoretical_gain_db(32, 2, log2_fact);
        assert!((gain - 6.7).abs() <= 0.05, "gain {gain}");
    }

    #[test]
    fn gain_is_exact_noise_shift() {
        for (n, m, k) in [(32usize, 2usize, 2usize), (32, 2, 4), (8, 4, 8)] {
            let gain = theoretical_gain_db(n, m, (k as f64).log2());
            for db in [-3.0, 0.0, 7.5] {
                let a = noise_variance_from_ebn0(db, n, m, k);
                let b = noise_variance_from_ebn0(db + gain, n, m, 1);
                assert!((a - b).abs() / a < 1e-12, "N0 shift mismatch: {a} vs {b}");
            }
        }
    }

    #[test]
    fn config_parsing_rejects_unknown_and_invalid() {
        let text = "n = 8\nm = 2\nk = 2\npaths = 3\nell_max = 3\nf_max = 1\ndetector = mmse_ml\nebn0_grid_db = 0 5\ntrials_per_point = 10\nseed = 1\ncodebook = random\n";
        assert!(SimConfig::from_kv_text(text, &[]).is_ok());
        let with_unknown = format!("{text}bogus = 1\n");
        assert!(SimConfig::from_kv_text(&with_unknown, &[]).is_err());
        // k not a power of two
        assert!(SimConfig::from_kv_text(text, &["k=3".into()]).is_err());
        // full_ml over budget at n = 32
        let big = text.replace("n = 8", "n = 32").replace("mmse_ml", "full_ml");
        assert!(SimConfig::from_kv_text(&big, &[]).is_err());
        // gas over emulation budget at n = 32
        let big_gas = text.replace("n = 8", "n = 32").replace("mmse_ml", "gas");
        assert!(SimConfig::from_kv_text(&big_gas, &[]).is_err());
        // overrides change the effective config
        let cfg = SimConfig::from_kv_text(text, &["seed=9".into()]).unwrap();
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = base_config();
        let mut b = base_config();
        assert_eq!(a.config_hash(), b.config_hash());
        b.seed = 8;
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn codebook_sources() {
        let mut cfg = base_config();
        let cb = cfg.build_codebook().unwrap();
        assert_eq!(cb.k(), 2);

        cfg.codebook = CodebookSource::Explicit;
        cfg.q = Some(vec![1, 7]);
        let cb = cfg.build_codebook().unwrap();
        assert_eq!(cb.entries()[0].index(), 1);
        assert_eq!(cb.entries()[1].index(), 7);

        cfg.k = 1;
        let cb = cfg.build_codebook().unwrap();
        assert_eq!(cb.entries()[0].index(), 1);

        let mut designed = base_config();
        designed.n = 4;
        designed.ell_max = 3;
        designed.codebook = CodebookSource::Designed;
        designed.pool_size = 24;
        let cb = designed.build_codebook().unwrap();
        assert_eq!(cb.k(), 2);
    }

    #[test]
    fn noiseless_point_has_zero_ber() {
        let mut cfg = base_config();
        cfg.channel_n0_override = Some(0.0);
        cfg.filter_n0_override = Some(1e-6);
        cfg.trials_per_point = 300;
        let cb = cfg.build_codebook().unwrap();
        let point = run_ber_point(&cfg, &cb, 100.0).unwrap();
        assert_eq!(point.trials, 300);
        assert_eq!(point.symbol_bit_errors + point.index_bit_errors, 0);
        assert_eq!(point.ber_total, 0.0);
        assert_eq!(point.total_bits, 300 * 9);
    }

    #[test]
    fn point_is_deterministic() {
        let cfg = base_config();
        let cb = cfg.build_codebook().unwrap();
        let a = run_ber_point(&cfg, &cb, 6.0).unwrap();
        let b = run_ber_point(&cfg, &cb, 6.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn early_stop_at_target_errors() {
        let mut cfg = base_config();
        cfg.trials_per_point = 100_000;
        cfg.target_bit_errors = Some(50);
        let cb = cfg.build_codebook().unwrap();
        let p = run_ber_point(&cfg, &cb, 0.0).unwrap();
        assert!(p.trials < 100_000);
        assert!(p.symbol_bit_errors + p.index_bit_errors >= 50);
        // Error accounting bounds.
        assert!(p.symbol_bit_errors <= p.trials * 8);
        assert!(p.index_bit_errors <= p.trials);
    }

    #[test]
    fn sweep_outputs_and_reproducibility() {
        let mut cfg = base_config();
        cfg.trials_per_point = 100;
        let a = sweep(&cfg).unwrap();
        let b = sweep(&cfg).unwrap();
        assert_eq!(a.points.len(), 3);
        assert_eq!(ber_csv(&a.points), ber_csv(&b.points));
        assert!(ber_csv(&a.points).starts_with(
            "ebn0_db,trials,symbol_bit_errors,index_bit_errors,total_bits,ber_symbol,ber_index,ber_total\n"
        ));
        assert_eq!(a.config_hash, b.config_hash);
    }

    #[test]
    fn sweep_warns_on_non_monotone_ber() {
        // A descending grid makes the BER rise with the point index well
        // beyond counting noise; the sweep flags it but still succeeds.
        let mut cfg = base_config();
        cfg.ebn0_grid_db = vec![12.0, 0.0];
        cfg.trials_per_point = 400;
        let res = sweep(&cfg).unwrap();
        assert!(!res.warnings.is_empty());
        assert!(res.warnings[0].contains("not monotone"));
    }

    #[test]
    fn sweep_emits_theoretical_reference() {
        let mut cfg = base_config();
        cfg.trials_per_point = 50;
        cfg.emit_theoretical = true;
        let res = sweep(&cfg).unwrap();
        let theo = res.theoretical.expect("reference curve requested");
        assert_eq!(theo.len(), cfg.ebn0_grid_db.len());
        for (p, &db) in theo.iter().zip(&cfg.ebn0_grid_db) {
            assert_eq!(p.ebn0_db, db);
            // classical reference carries no index bits
            assert_eq!(p.index_bit_errors, 0);
        }
        assert!(res.gain_db > 0.0);
    }

    #[test]
    fn gas_detector_runs_and_is_deterministic() {
        let mut cfg = base_config();
        cfg.n = 4;
        cfg.ell_max = 3;
        cfg.detector = DetectorKind::Gas;
        cfg.trials_per_point = 30;
        cfg.gas_max_iterations = 300;
        let cb = cfg.build_codebook().unwrap();
        let a = run_ber_point(&cfg, &cb, 8.0).unwrap();
        let b = run_ber_point(&cfg, &cb, 8.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trials, 30);
    }

    #[test]
    fn cpim_beats_classical_at_high_snr_and_not_at_low() {
        // Qualitative crossover on a small system with a frozen seed: the
        // index bits drag the total BER up at low Eb/N0 and ride along almost
        // free once detection is reliable.
        let mut k2 = base_config();
        k2.trials_per_point = 20_000;
        k2.target_bit_errors = Some(500);
        let mut k1 = k2.clone();
        k1.k = 1;

        let cb2 = k2.build_codebook().unwrap();
        let cb1 = k1.build_codebook().unwrap();

        let low2 = run_ber_point(&k2, &cb2, 0.0).unwrap();
        let low1 = run_ber_point(&k1, &cb1, 0.0).unwrap();
        assert!(
            low2.ber_total >= low1.ber_total,
            "low SNR: K=2 {} vs K=1 {}",
            low2.ber_total,
            low1.ber_total
        );

        let hi2 = run_ber_point(&k2, &cb2, 22.0).unwrap();
        let hi1 = run_ber_point(&k1, &cb1, 22.0).unwrap();
        assert!(
            hi2.ber_total <= hi1.ber_total,
            "high SNR: K=2 {} vs K=1 {}",
            hi2.ber_total,
            hi1.ber_total
        );
    }
}
