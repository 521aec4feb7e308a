//! Grover adaptive search (GAS), emulated classically.
//!
//! The emulation reproduces the measurement statistics of amplitude
//! amplification rather than simulating gates: for a threshold `y` with good
//! fraction `g = |{b : E(b) < y}| / 2ⁿ` and rotation count `L`, a measurement
//! returns a uniform draw from the good set with probability
//! `sin²((2L+1)·arcsin√g)` and a uniform draw from the complement otherwise.
//! The solver enumerates all objective values once (subset-sum transform over
//! the coefficient cube), argsorts the states, and then serves every
//! threshold query in O(log 2ⁿ).

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rayon::prelude::*;

use crate::afdm::DaftMatrix;
use crate::channel::ChannelMatrix;
use crate::codec::Codebook;
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::Bit;

/// Hard cap on the number of binary variables the emulator will enumerate.
pub const GAS_EMULATION_MAX_VARS: usize = 26;

/// A real-coefficient multilinear function over `n` binary variables:
/// `E(b) = constant + Σ_t c_t · Π_{i ∈ vars_t} b_i`.
///
/// Construction absorbs `b² = b` (duplicate indices within a term) and merges
/// terms with identical variable sets, so the stored form is canonical.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialBinaryObjective {
    n_vars: usize,
    /// Sorted variable subsets with their coefficients, in deterministic
    /// (lexicographic) order.
    terms: Vec<(Vec<u32>, f64)>,
    constant: f64,
}

impl PolynomialBinaryObjective {
    pub fn new(n_vars: usize, terms: Vec<(Vec<u32>, f64)>, constant: f64) -> Result<Self> {
        if n_vars == 0 {
            return Err(Error::InvalidDimension(
                "objective needs at least one variable".into(),
            ));
        }
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        let mut constant = constant;
        for (mut vars, coeff) in terms {
            for &v in &vars {
                if v as usize >= n_vars {
                    return Err(Error::Config(format!(
                        "term variable {v} out of range for n = {n_vars}"
                    )));
                }
            }
            vars.sort_unstable();
            vars.dedup();
            if vars.is_empty() {
                constant += coeff;
            } else {
                *merged.entry(vars).or_insert(0.0) += coeff;
            }
        }
        merged.retain(|_, c| *c != 0.0);
        Ok(PolynomialBinaryObjective {
            n_vars,
            terms: merged.into_iter().collect(),
            constant,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn terms(&self) -> &[(Vec<u32>, f64)] {
        &self.terms
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Highest term order (0 for a constant objective).
    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(v, _)| v.len()).max().unwrap_or(0)
    }

    pub fn evaluate(&self, b: &[Bit]) -> Result<f64> {
        if b.len() != self.n_vars {
            return Err(Error::dim(self.n_vars, b.len(), "assignment length"));
        }
        let mut acc = self.constant;
        for (vars, coeff) in &self.terms {
            if vars.iter().all(|&v| b[v as usize] == 1) {
                acc += coeff;
            }
        }
        Ok(acc)
    }

    /// Copy with every coefficient rounded to the nearest multiple of
    /// `2^-frac_bits` (the fixed-point coefficient grid).
    pub fn quantized(&self, frac_bits: u32) -> Self {
        let scale = (1u64 << frac_bits) as f64;
        let q = |v: f64| (v * scale).round() / scale;
        PolynomialBinaryObjective {
            n_vars: self.n_vars,
            terms: self
                .terms
                .iter()
                .map(|(vars, c)| (vars.clone(), q(*c)))
                .filter(|(_, c)| *c != 0.0)
                .collect(),
            constant: q(self.constant),
        }
    }

    /// Plain-text serialization: `nvars`, optional `constant`, then one
    /// `term <coeff> <var> <var> …` line per term.
    pub fn to_text(&self) -> String {
        let mut out = format!("nvars {}\n", self.n_vars);
        if self.constant != 0.0 {
            out.push_str(&format!("constant {}\n", self.constant));
        }
        for (vars, coeff) in &self.terms {
            let idx: Vec<String> = vars.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!("term {} {}\n", coeff, idx.join(" ")));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut n_vars: Option<usize> = None;
        let mut constant = 0.0;
        let mut terms = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let mut tok = line.split_whitespace();
            match tok.next() {
                Some("nvars") => {
                    let v = tok
                        .next()
                        .ok_or_else(|| Error::Config(format!("line {line_no}: nvars needs a value")))?;
                    n_vars = Some(v.parse().map_err(|_| {
                        Error::Config(format!("line {line_no}: bad nvars `{v}`"))
                    })?);
                }
                Some("constant") => {
                    let v = tok.next().ok_or_else(|| {
                        Error::Config(format!("line {line_no}: constant needs a value"))
                    })?;
                    constant = v.parse().map_err(|_| {
                        Error::Config(format!("line {line_no}: bad constant `{v}`"))
                    })?;
                }
                Some("term") => {
                    let c = tok.next().ok_or_else(|| {
                        Error::Config(format!("line {line_no}: term needs a coefficient"))
                    })?;
                    let coeff: f64 = c.parse().map_err(|_| {
                        Error::Config(format!("line {line_no}: bad coefficient `{c}`"))
                    })?;
                    let vars = tok
                        .map(|v| {
                            v.parse::<u32>().map_err(|_| {
                                Error::Config(format!("line {line_no}: bad variable `{v}`"))
                            })
                        })
                        .collect::<Result<Vec<u32>>>()?;
                    terms.push((vars, coeff));
                }
                Some(other) => {
                    return Err(Error::Config(format!(
                        "line {line_no}: unknown directive `{other}`"
                    )))
                }
                None => {}
            }
        }
        let n_vars =
            n_vars.ok_or_else(|| Error::Config("objective file is missing `nvars`".into()))?;
        Self::new(n_vars, terms, constant)
    }
}

/// Two's-complement wraparound of `value` in a 32-bit register with
/// `frac_bits` fractional bits.
pub fn wrap_fixed_point(value: f64, frac_bits: u32) -> f64 {
    let scale = (1u64 << frac_bits) as f64;
    let units = (value * scale).round() as i128;
    let wrapped = (units + (1i128 << 31)).rem_euclid(1i128 << 32) - (1i128 << 31);
    wrapped as f64 / scale
}

/// GAS run parameters.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GasConfig {
    /// Rotation-count growth factor; the classical schedule uses 8/7.
    pub scaling_lambda: f64,
    /// Hard cap on oracle queries (samples).
    pub max_iterations: usize,
    /// Stop after this many consecutive non-improving samples.
    /// `None` selects `⌈8·√2ⁿ⌉`.
    pub no_improve_limit: Option<usize>,
    pub seed: u64,
    /// When set, coefficients are quantized to this many fractional bits and
    /// objective values wrap in a 32-bit two's-complement register.
    pub fixed_point_bits: Option<u32>,
}

impl Default for GasConfig {
    fn default() -> Self {
        GasConfig {
            scaling_lambda: 8.0 / 7.0,
            max_iterations: 10_000,
            no_improve_limit: None,
            seed: 0,
            fixed_point_bits: None,
        }
    }
}

impl GasConfig {
    pub fn effective_no_improve_limit(&self, n_vars: usize) -> usize {
        self.no_improve_limit
            .unwrap_or_else(|| (8.0 * ((1u64 << n_vars) as f64).sqrt()).ceil() as usize)
    }
}

/// One sampling step of a GAS run.
#[derive(Debug, Clone, Copy)]
pub struct GasStep {
    pub iteration: usize,
    /// Threshold `y_i` in force when the sample was drawn.
    pub threshold: f64,
    /// Rotation count `L_i`.
    pub rotations: u64,
    /// Objective value of the measured state.
    pub measured: f64,
}

/// Full record of a GAS run.
#[derive(Debug, Clone)]
pub struct GasTrace {
    /// Row 0 records the classical initial sample; subsequent rows are
    /// amplitude-amplification queries.
    pub history: Vec<GasStep>,
    pub best_b: Vec<Bit>,
    pub best_y: f64,
    /// Number of oracle (sampling) queries, excluding the initial draw.
    pub oracle_queries: usize,
}

impl GasTrace {
    /// CSV with columns `iteration,y,l,value,cumulative_queries`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,y,l,value,cumulative_queries\n");
        for s in &self.history {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.iteration, s.threshold, s.rotations, s.measured, s.iteration
            ));
        }
        out
    }
}

/// Classical GAS emulator for one objective: full value table plus an
/// argsorted state list, reused across thresholds, rotation counts and runs.
pub struct GasSolver {
    obj: PolynomialBinaryObjective,
    fixed_point_bits: Option<u32>,
    values: Vec<f64>,
    /// State ids sorted by (value, id).
    sorted: Vec<u32>,
}

impl GasSolver {
    pub fn new(obj: &PolynomialBinaryObjective) -> Result<Self> {
        Self::build(obj.clone(), None)
    }

    /// Solver over the quantized objective with 32-bit two's-complement
    /// value wraparound.
    pub fn with_fixed_point(obj: &PolynomialBinaryObjective, frac_bits: u32) -> Result<Self> {
        Self::build(obj.quantized(frac_bits), Some(frac_bits))
    }

    pub fn for_config(obj: &PolynomialBinaryObjective, config: &GasConfig) -> Result<Self> {
        match config.fixed_point_bits {
            Some(m) => Self::with_fixed_point(obj, m),
            None => Self::new(obj),
        }
    }

    fn build(obj: PolynomialBinaryObjective, fixed_point_bits: Option<u32>) -> Result<Self> {
        let n = obj.n_vars();
        if n > GAS_EMULATION_MAX_VARS {
            return Err(Error::BudgetExceeded {
                context: "GAS emulation",
                candidates: 1u128 << n,
                budget: 1u128 << GAS_EMULATION_MAX_VARS,
                hint: "reduce the instance size (the classical emulator enumerates all states)",
            });
        }
        let size = 1usize << n;

        // Value table by subset-sum (zeta) transform: seed each term's
        // coefficient at its variable mask, then fold bit by bit. E(b) is the
        // sum of coefficients of all subsets of b's support.
        let mut values = vec![0.0f64; size];
        values[0] = obj.constant();
        for (vars, coeff) in obj.terms() {
            let mask = vars.iter().fold(0usize, |m, &v| m | (1usize << v));
            values[mask] += coeff;
        }
        for bit in 0..n {
            let step = 1usize << bit;
            let mut base = 0;
            while base < size {
                for i in base + step..base + 2 * step {
                    values[i] += values[i - step];
                }
                base += 2 * step;
            }
        }
        if let Some(m) = fixed_point_bits {
            for v in values.iter_mut() {
                *v = wrap_fixed_point(*v, m);
            }
        }

        let mut sorted: Vec<u32> = (0..size as u32).collect();
        sorted.par_sort_unstable_by(|&a, &b| {
            values[a as usize]
                .total_cmp(&values[b as usize])
                .then(a.cmp(&b))
        });
        Ok(GasSolver {
            obj,
            fixed_point_bits,
            values,
            sorted,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.obj.n_vars()
    }

    pub fn objective(&self) -> &PolynomialBinaryObjective {
        &self.obj
    }

    /// The solver's value function (quantized + wrapped in fixed-point mode).
    pub fn value(&self, b: &[Bit]) -> Result<f64> {
        let v = self.obj.evaluate(b)?;
        Ok(match self.fixed_point_bits {
            Some(m) => wrap_fixed_point(v, m),
            None => v,
        })
    }

    fn state_bits(&self, state: u64) -> Vec<Bit> {
        (0..self.n_vars())
            .map(|i| ((state >> i) & 1) as Bit)
            .collect()
    }

    /// Number of states with `E(b) < y`.
    pub fn count_below(&self, y: f64) -> usize {
        self.sorted
            .partition_point(|&s| self.values[s as usize] < y)
    }

    /// Good-set fraction `g` for a threshold.
    pub fn good_fraction(&self, y: f64) -> f64 {
        self.count_below(y) as f64 / (1u64 << self.n_vars()) as f64
    }

    fn sample_state<R: Rng + ?Sized>(&self, y: f64, l: u64, rng: &mut R) -> u64 {
        let size = 1u64 << self.n_vars();
        let count = self.count_below(y) as u64;
        if count == 0 || count == size {
            // Empty good set or empty complement: the measurement marginal is
            // uniform over all states.
            return rng.random_range(0..size);
        }
        let g = count as f64 / size as f64;
        let theta = g.sqrt().asin();
        let p_good = ((2 * l + 1) as f64 * theta).sin().powi(2);
        if rng.random::<f64>() < p_good {
            self.sorted[rng.random_range(0..count) as usize] as u64
        } else {
            self.sorted[rng.random_range(count..size) as usize] as u64
        }
    }

    /// One emulated measurement of `R^L S_y |0⟩`.
    pub fn sample<R: Rng + ?Sized>(&self, y: f64, l: u64, rng: &mut R) -> Vec<Bit> {
        self.state_bits(self.sample_state(y, l, rng))
    }

    /// Runs the adaptive-threshold minimization loop: start from a uniform
    /// random state, draw `L` uniformly from `{0, …, ⌈k⌉-1}`, sample, accept
    /// strict improvements (resetting `k = 1`), otherwise grow
    /// `k = min(λk, √2ⁿ)`; stop at `max_iterations` queries or after
    /// `no_improve_limit` consecutive non-improvements.
    pub fn minimize(&self, config: &GasConfig) -> GasTrace {
        debug_assert!(
            config.scaling_lambda > 1.0,
            "rotation growth factor must exceed 1"
        );
        let n = self.n_vars();
        let size = 1u64 << n;
        let sqrt_space = (size as f64).sqrt();
        let no_improve_limit = config.effective_no_improve_limit(n);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

        let mut state = rng.random_range(0..size);
        let mut y = self.values[state as usize];
        let mut best_state = state;
        let mut k = 1.0f64;
        let mut history = vec![GasStep {
            iteration: 0,
            threshold: y,
            rotations: 0,
            measured: y,
        }];
        let mut no_improve = 0usize;
        let mut queries = 0usize;

        while queries < config.max_iterations && no_improve < no_improve_limit {
            let l_max = k.ceil() as u64 - 1;
            let l = rng.random_range(0..=l_max);
            state = self.sample_state(y, l, &mut rng);
            queries += 1;
            let measured = self.values[state as usize];
            history.push(GasStep {
                iteration: queries,
                threshold: y,
                rotations: l,
                measured,
            });
            if measured < y {
                y = measured;
                best_state = state;
                k = 1.0;
                no_improve = 0;
            } else {
                k = (config.scaling_lambda * k).min(sqrt_space);
                no_improve += 1;
            }
        }

        let best_b = self.state_bits(best_state);
        let best_y = self.value(&best_b).expect("best state has valid arity");
        GasTrace {
            history,
            best_b,
            best_y,
            oracle_queries: queries,
        }
    }
}

/// One emulated Grover measurement for an objective. Builds the full state
/// table; for repeated sampling construct a [`GasSolver`] once instead.
pub fn grover_sample<R: Rng + ?Sized>(
    obj: &PolynomialBinaryObjective,
    y: f64,
    l: u64,
    rng: &mut R,
) -> Result<Vec<Bit>> {
    Ok(GasSolver::new(obj)?.sample(y, l, rng))
}

/// Runs GAS on an objective. Builds the solver internally; reuse a
/// [`GasSolver`] across runs of the same objective.
pub fn gas_minimize(obj: &PolynomialBinaryObjective, config: &GasConfig) -> Result<GasTrace> {
    Ok(GasSolver::for_config(obj, config)?.minimize(config))
}

/// Expands `E(b) = ‖r - H A_k⁻¹ g(b)‖₂²` into a multilinear objective over
/// the `B1 = N·log2(M)` symbol bits, by substituting the constellation's
/// per-symbol multilinear map and expanding the squared norm exactly.
pub fn build_ml_objective(
    r: &[Complex64],
    h: &ChannelMatrix,
    daft: &DaftMatrix,
    constellation: &Constellation,
) -> Result<PolynomialBinaryObjective> {
    let n = daft.n();
    if r.len() != n {
        return Err(Error::dim(n, r.len(), "received signal length"));
    }
    if h.n() != n {
        return Err(Error::dim(n, h.n(), "channel size"));
    }
    let bps = constellation.bits_per_symbol();
    let n_vars = n * bps;

    // Columns of B = H·A⁻¹ via the fast paths.
    let mut bcols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut e = vec![Complex64::ZERO; n];
    for t in 0..n {
        e[t] = Complex64::ONE;
        bcols.push(h.apply(&daft.modulate(&e)?)?);
        e[t] = Complex64::ZERO;
    }

    let sym_poly = constellation.symbol_poly();

    // Residual row polynomials ρ_row(b) = r_row - Σ_t B[row][t]·x_t(b).
    // Each is a list of (sorted global vars, complex coefficient).
    let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    let mut constant = 0.0;
    let mut rho: Vec<(Vec<u32>, Complex64)> = Vec::new();
    for row in 0..n {
        rho.clear();
        rho.push((Vec::new(), r[row]));
        for (t, bcol) in bcols.iter().enumerate() {
            let bv = bcol[row];
            if bv == Complex64::ZERO {
                continue;
            }
            for (vars, c) in &sym_poly {
                let gvars: Vec<u32> = vars.iter().map(|&j| (t * bps + j) as u32).collect();
                rho.push((gvars, -bv * c));
            }
        }
        // |ρ|² = Σ_{α,β} a_α·conj(a_β)·m_α·m_β; the imaginary parts cancel
        // over the symmetric sum, so accumulate real parts only.
        for (va, ca) in &rho {
            for (vb, cb) in &rho {
                let coeff = (ca * cb.conj()).re;
                if coeff == 0.0 {
                    continue;
                }
                let mut union = va.clone();
                union.extend_from_slice(vb);
                union.sort_unstable();
                union.dedup();
                if union.is_empty() {
                    constant += coeff;
                } else {
                    *acc.entry(union).or_insert(0.0) += coeff;
                }
            }
        }
    }

    PolynomialBinaryObjective::new(n_vars, acc.into_iter().collect(), constant)
}

/// Outcome of the K-device parallel GAS solve of the full ML problem.
#[derive(Debug, Clone)]
pub struct MlSolveResult {
    pub bits: Vec<Bit>,
    pub k_star: usize,
    pub objective: f64,
    /// Total oracle queries across all devices.
    pub oracle_queries: usize,
}

/// Runs one GAS instance per codeword hypothesis (logically parallel; device
/// `k` draws from a stream seeded by `derive_seed(seed, k)`, so concurrent
/// and sequential execution give identical results) and returns the device
/// with the smallest achieved objective (ties → smallest `k`).
pub fn parallel_ml_solve(
    r: &[Complex64],
    h: &ChannelMatrix,
    codebook: &Codebook,
    constellation: &Constellation,
    config: &GasConfig,
) -> Result<MlSolveResult> {
    let runs: Vec<(usize, GasTrace)> = (1..=codebook.k())
        .into_par_iter()
        .map(|k| -> Result<(usize, GasTrace)> {
            let obj = build_ml_objective(r, h, codebook.daft(k)?, constellation)?;
            let device_config = GasConfig {
                seed: crate::derive_seed(&[config.seed, k as u64]),
                ..config.clone()
            };
            let trace = GasSolver::for_config(&obj, &device_config)?.minimize(&device_config);
            Ok((k, trace))
        })
        .collect::<Result<Vec<_>>>()?;

    let total_queries = runs.iter().map(|(_, t)| t.oracle_queries).sum();
    let (k_star, best) = runs
        .into_iter()
        .min_by(|(ka, ta), (kb, tb)| ta.best_y.total_cmp(&tb.best_y).then(ka.cmp(kb)))
        .expect("codebook is non-empty");
    Ok(MlSolveResult {
        bits: best.best_b,
        k_star,
        objective: best.best_y,
        oracle_queries: total_queries,
    })
}
