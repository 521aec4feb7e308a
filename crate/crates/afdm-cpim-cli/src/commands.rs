//! Subcommand implementations. Every run writes a metadata file carrying the
//! effective configuration, the seed and the tool version, so any output
//! directory is sufficient to re-run the experiment.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use afdm_cpim::design::{
    build_codebook_objective, exhaustive_maxmin, pairwise_distances, permutation_pool,
    CodebookDesignProblem, DistanceMetric, MAXMIN_DEFAULT_BUDGET,
};
use afdm_cpim::detect::{
    ml_detect_full, mmse_ml_detect, residual_received, FULL_ML_DEFAULT_BUDGET,
};
use afdm_cpim::gas::{
    build_ml_objective, parallel_ml_solve, GasConfig, GasSolver, PolynomialBinaryObjective,
    GAS_EMULATION_MAX_VARS,
};
use afdm_cpim::kv::KvMap;
use afdm_cpim::sim::{ber_csv, noise_variance_from_ebn0, sweep, SimConfig};
use afdm_cpim::{
    apply_channel, channel_matrix, content_hash, decode_bits, derive_seed, encode,
    sample_channel, Bit, ChirpParams, Codebook, Constellation, Error, PermutationIndex, Result,
};

const SALT_POOL: u64 = 0xC0DE_B00C;
const SALT_INSTANCE: u64 = 0x1257;

fn read_config(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        Error::Config(format!("cannot read config file {}: {e}", path.display()))
    })
}

fn write_output(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    Ok(path)
}

fn metadata_text(
    command: &str,
    config_echo: &str,
    runtime_seconds: f64,
    extra: &[(&str, String)],
) -> String {
    let mut out = String::new();
    out.push_str("# afdm-cpim run metadata\n");
    out.push_str(&format!("tool_version = {}\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&format!("command = {command}\n"));
    out.push_str(&format!("config_hash = {}\n", content_hash(config_echo)));
    out.push_str(&format!("runtime_seconds = {runtime_seconds}\n"));
    for (k, v) in extra {
        out.push_str(&format!("{k} = {v}\n"));
    }
    out.push_str("\n[config]\n");
    out.push_str(config_echo);
    out
}

fn bits_string(bits: &[Bit]) -> String {
    bits.iter().map(|b| char::from(b'0' + b)).collect()
}

// ---------------------------------------------------------------------------
// ber-sweep
// ---------------------------------------------------------------------------

pub fn ber_sweep(config_path: &Path, output_dir: &Path, overrides: &[String]) -> Result<()> {
    let config = SimConfig::from_kv_text(&read_config(config_path)?, overrides)?;
    let result = sweep(&config)?;

    write_output(output_dir, "ber.csv", &ber_csv(&result.points))?;
    if let Some(theo) = &result.theoretical {
        write_output(output_dir, "theoretical_reference.csv", &ber_csv(theo))?;
    }
    let json = serde_json::to_string_pretty(&config)
        .map_err(|e| Error::Config(format!("config JSON export failed: {e}")))?;
    write_output(output_dir, "config.json", &format!("{json}\n"))?;

    let mut extra = vec![
        ("seed", config.seed.to_string()),
        ("gain_db", result.gain_db.to_string()),
        ("points", result.points.len().to_string()),
    ];
    if result.warnings.is_empty() {
        extra.push(("warnings", "none".to_string()));
    } else {
        extra.push(("warnings", result.warnings.join(" | ")));
    }
    let meta = metadata_text(
        "ber-sweep",
        &config.to_kv_text(),
        result.runtime_seconds,
        &extra,
    );
    write_output(output_dir, "metadata.txt", &meta)?;

    for p in &result.points {
        println!(
            "{:>8} dB: ber_total {:.6e} ({} trials, {} errors)",
            p.ebn0_db,
            p.ber_total,
            p.trials,
            p.symbol_bit_errors + p.index_bit_errors
        );
    }
    println!(
        "wrote {} (config {})",
        output_dir.join("ber.csv").display(),
        result.config_hash
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// codebook-design
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DesignMethod {
    Exhaustive,
    Gas,
    Both,
}

impl std::str::FromStr for DesignMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(DesignMethod::Exhaustive),
            "gas" => Ok(DesignMethod::Gas),
            "both" => Ok(DesignMethod::Both),
            other => Err(Error::Config(format!(
                "unknown method `{other}` (expected exhaustive|gas|both)"
            ))),
        }
    }
}

struct DesignConfig {
    n: usize,
    f_max: u32,
    xi: u32,
    c2: Option<f64>,
    k: usize,
    metric: DistanceMetric,
    method: DesignMethod,
    pool_size: usize,
    seed: u64,
    lambda1: f64,
    lambda2: Option<f64>,
    gas_max_iterations: usize,
    gas_no_improve_limit: Option<usize>,
}

impl DesignConfig {
    fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut kv = KvMap::parse(text)?;
        kv.apply_overrides(overrides)?;
        let cfg = DesignConfig {
            n: kv.require("n")?,
            f_max: kv.take_or("f_max", 1)?,
            xi: kv.take_or("xi", 0)?,
            c2: kv.take("c2")?,
            k: kv.require("k")?,
            metric: kv.take_or("metric", DistanceMetric::Angular)?,
            method: kv.take_or("method", DesignMethod::Both)?,
            pool_size: kv.take_or("pool_size", 256)?,
            seed: kv.require("seed")?,
            lambda1: kv.take_or("lambda1", 20.0)?,
            lambda2: kv.take("lambda2")?,
            gas_max_iterations: kv.take_or("gas_max_iterations", 2000)?,
            gas_no_improve_limit: kv.take("gas_no_improve_limit")?,
        };
        kv.finish()?;
        Ok(cfg)
    }

    fn params(&self) -> Result<ChirpParams> {
        match self.c2 {
            Some(c2) => ChirpParams::optimal_with_c2(self.n, self.f_max, self.xi, c2),
            None => ChirpParams::optimal(self.n, self.f_max, self.xi),
        }
    }

    fn echo(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("n = {}\n", self.n));
        s.push_str(&format!("f_max = {}\n", self.f_max));
        s.push_str(&format!("xi = {}\n", self.xi));
        if let Some(c2) = self.c2 {
            s.push_str(&format!("c2 = {c2}\n"));
        }
        s.push_str(&format!("k = {}\n", self.k));
        s.push_str(&format!("metric = {}\n", self.metric));
        let method = match self.method {
            DesignMethod::Exhaustive => "exhaustive",
            DesignMethod::Gas => "gas",
            DesignMethod::Both => "both",
        };
        s.push_str(&format!("method = {method}\n"));
        s.push_str(&format!("pool_size = {}\n", self.pool_size));
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("lambda1 = {}\n", self.lambda1));
        if let Some(l2) = self.lambda2 {
            s.push_str(&format!("lambda2 = {l2}\n"));
        }
        s.push_str(&format!("gas_max_iterations = {}\n", self.gas_max_iterations));
        if let Some(v) = self.gas_no_improve_limit {
            s.push_str(&format!("gas_no_improve_limit = {v}\n"));
        }
        s
    }
}

pub fn codebook_design(config_path: &Path, output_dir: &Path, overrides: &[String]) -> Result<()> {
    let start = Instant::now();
    let cfg = DesignConfig::parse(&read_config(config_path)?, overrides)?;
    let params = cfg.params()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[cfg.seed, SALT_POOL]));
    let pool = permutation_pool(cfg.n, cfg.pool_size, &mut rng)?;
    let distances = pairwise_distances(&pool, &params, cfg.metric)?;
    write_output(output_dir, "distances.csv", &distances.to_csv())?;

    let mut extra: Vec<(&str, String)> = vec![("pool", pool.len().to_string())];
    let mut oracle_entries: Option<(Vec<PermutationIndex>, f64)> = None;
    let mut gas_entries: Option<(Vec<PermutationIndex>, f64)> = None;

    if matches!(cfg.method, DesignMethod::Exhaustive | DesignMethod::Both) {
        let res = exhaustive_maxmin(&distances, cfg.k, MAXMIN_DEFAULT_BUDGET)?;
        extra.push(("oracle_d_min", res.d_min.to_string()));
        oracle_entries = Some((res.permutations(&distances), res.d_min));
    }

    if matches!(cfg.method, DesignMethod::Gas | DesignMethod::Both) {
        let problem =
            CodebookDesignProblem::new(distances.clone(), cfg.k, cfg.lambda1, cfg.lambda2)?;
        let objective = build_codebook_objective(&problem);
        let solver = GasSolver::new(&objective)?;
        let gas_config = GasConfig {
            max_iterations: cfg.gas_max_iterations,
            no_improve_limit: cfg.gas_no_improve_limit,
            seed: cfg.seed,
            ..GasConfig::default()
        };
        let trace = solver.minimize(&gas_config);
        write_output(output_dir, "gas_trace.csv", &trace.to_csv())?;
        extra.push(("gas_oracle_queries", trace.oracle_queries.to_string()));
        let selection = afdm_cpim::design::decode_selection(&trace.best_b, &pool);
        extra.push(("gas_cardinality", selection.len().to_string()));
        if selection.len() == cfg.k {
            let positions: Vec<usize> = trace
                .best_b
                .iter()
                .enumerate()
                .filter(|(_, &b)| b == 1)
                .map(|(i, _)| i)
                .collect();
            let d_min = distances.min_distance(&positions);
            extra.push(("gas_d_min", d_min.to_string()));
            gas_entries = Some((selection, d_min));
        } else {
            extra.push((
                "gas_d_min",
                "n/a (selection cardinality does not match k)".to_string(),
            ));
        }
    }

    if let (Some((_, od)), Some((_, gd))) = (&oracle_entries, &gas_entries) {
        extra.push(("methods_agree", (od == gd).to_string()));
    }

    let (entries, d_min) = oracle_entries
        .or(gas_entries)
        .ok_or_else(|| Error::Config("GAS did not return a valid size-K selection; raise gas_max_iterations".into()))?;
    extra.push(("d_min", d_min.to_string()));
    let codebook = Codebook::new(&params, entries)?;
    write_output(output_dir, "codebook.txt", &codebook.to_text())?;

    let meta = metadata_text(
        "codebook-design",
        &cfg.echo(),
        start.elapsed().as_secs_f64(),
        &extra,
    );
    write_output(output_dir, "metadata.txt", &meta)?;
    println!(
        "designed K={} codebook over pool {} (d_min {}), wrote {}",
        cfg.k,
        pool.len(),
        d_min,
        output_dir.join("codebook.txt").display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// gas-solve
// ---------------------------------------------------------------------------

pub fn gas_solve(config_path: &Path, output_dir: &Path, overrides: &[String]) -> Result<()> {
    let start = Instant::now();
    let text = read_config(config_path)?;
    let mut kv = KvMap::parse(&text)?;
    kv.apply_overrides(overrides)?;
    let objective_kind = kv.require_str("objective")?;
    let seed: u64 = kv.require("seed")?;
    let gas_config = GasConfig {
        scaling_lambda: kv.take_or("scaling_lambda", 8.0 / 7.0)?,
        max_iterations: kv.take_or("max_iterations", 1000)?,
        no_improve_limit: kv.take("no_improve_limit")?,
        seed,
        fixed_point_bits: kv.take("fixed_point_bits")?,
    };
    if gas_config.scaling_lambda <= 1.0 {
        return Err(Error::Config(format!(
            "scaling_lambda must exceed 1, got {}",
            gas_config.scaling_lambda
        )));
    }
    if gas_config.max_iterations == 0 {
        return Err(Error::Config("max_iterations must be >= 1".into()));
    }

    let objective: PolynomialBinaryObjective = match objective_kind.as_str() {
        "terms" => {
            let path = PathBuf::from(kv.require_str("terms_file")?);
            let body = std::fs::read_to_string(&path).map_err(|e| {
                Error::Config(format!("cannot read terms file {}: {e}", path.display()))
            })?;
            PolynomialBinaryObjective::from_text(&body)?
        }
        "codebook" => {
            let n: usize = kv.require("n")?;
            let f_max: u32 = kv.take_or("f_max", 1)?;
            let xi: u32 = kv.take_or("xi", 0)?;
            let k: usize = kv.require("k")?;
            let metric: DistanceMetric = kv.take_or("metric", DistanceMetric::Angular)?;
            let pool_size: usize = kv.take_or("pool_size", 256)?;
            let lambda1: f64 = kv.take_or("lambda1", 20.0)?;
            let lambda2: Option<f64> = kv.take("lambda2")?;
            let params = ChirpParams::optimal(n, f_max, xi)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, SALT_POOL]));
            let pool = permutation_pool(n, pool_size, &mut rng)?;
            let distances = pairwise_distances(&pool, &params, metric)?;
            let problem = CodebookDesignProblem::new(distances, k, lambda1, lambda2)?;
            build_codebook_objective(&problem)
        }
        "ml-instance" => {
            let n: usize = kv.require("n")?;
            let m: usize = kv.require("m")?;
            let k: usize = kv.require("k")?;
            let paths: usize = kv.take_or("paths", 3)?;
            let ell_max: usize = kv.take_or("ell_max", 3)?;
            let f_max: u32 = kv.take_or("f_max", 1)?;
            let xi: u32 = kv.take_or("xi", 0)?;
            let ebn0_db: f64 = kv.take_or("ebn0_db", 10.0)?;
            let device_k: usize = kv.take_or("device_k", 0)?;
            let constellation = Constellation::from_order(m)?;
            let params = ChirpParams::optimal(n, f_max, xi)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, SALT_INSTANCE]));
            let mut entries = Vec::new();
            while entries.len() < k {
                let p = PermutationIndex::random(n, &mut rng)?;
                if !entries.contains(&p) {
                    entries.push(p);
                }
            }
            let codebook = Codebook::new(&params, entries)?;
            let chan = sample_channel(paths, ell_max, f_max as f64, false, &mut rng)?;
            let h = channel_matrix(&chan, params.c1(), n)?;
            let b = n * constellation.bits_per_symbol() + codebook.index_bits();
            let bits: Vec<Bit> = (0..b).map(|_| rng.random_range(0..=1u8)).collect();
            let frame = encode(&bits, &codebook, &constellation)?;
            let n0 = noise_variance_from_ebn0(ebn0_db, n, m, k);
            let r = apply_channel(&frame.signal, &h, n0, &mut rng)?;
            let device = if device_k == 0 { frame.perm_choice } else { device_k };
            build_ml_objective(&r, &h, codebook.daft(device)?, &constellation)?
        }
        other => {
            return Err(Error::Config(format!(
                "unknown objective `{other}` (expected terms|codebook|ml-instance)"
            )))
        }
    };
    kv.finish()?;

    let solver = GasSolver::for_config(&objective, &gas_config)?;
    let trace = solver.minimize(&gas_config);

    write_output(output_dir, "trace.csv", &trace.to_csv())?;
    let solution = format!(
        "b = {}\nvalue = {}\nn_vars = {}\noracle_queries = {}\n",
        bits_string(&trace.best_b),
        trace.best_y,
        objective.n_vars(),
        trace.oracle_queries
    );
    write_output(output_dir, "solution.txt", &solution)?;
    let meta = metadata_text(
        "gas-solve",
        &text_echo(&text, overrides),
        start.elapsed().as_secs_f64(),
        &[
            ("n_vars", objective.n_vars().to_string()),
            ("best_value", trace.best_y.to_string()),
            ("oracle_queries", trace.oracle_queries.to_string()),
        ],
    );
    write_output(output_dir, "metadata.txt", &meta)?;
    println!(
        "best value {} after {} queries, wrote {}",
        trace.best_y,
        trace.oracle_queries,
        output_dir.join("solution.txt").display()
    );
    Ok(())
}

/// Echo of the raw config with overrides appended (the raw file remains the
/// source of truth for keys this command does not model as a struct).
fn text_echo(text: &str, overrides: &[String]) -> String {
    let mut echo = text.to_string();
    if !echo.ends_with('\n') {
        echo.push('\n');
    }
    for ov in overrides {
        echo.push_str(&format!("# override: {ov}\n"));
    }
    echo
}

// ---------------------------------------------------------------------------
// detect-demo
// ---------------------------------------------------------------------------

pub fn detect_demo(config_path: &Path, output_dir: &Path, overrides: &[String]) -> Result<()> {
    let start = Instant::now();
    let text = read_config(config_path)?;
    let mut kv = KvMap::parse(&text)?;
    kv.apply_overrides(overrides)?;
    let ebn0_db: f64 = kv.take_or("ebn0_db", 10.0)?;
    // Reuse the sweep config machinery for the shared keys.
    let sim = SimConfig {
        n: kv.require("n")?,
        m: kv.require("m")?,
        k: kv.require("k")?,
        paths: kv.take_or("paths", 3)?,
        ell_max: kv.take_or("ell_max", 3)?,
        f_max: kv.take_or("f_max", 1)?,
        xi: kv.take_or("xi", 0)?,
        fractional_doppler: kv.take_bool("fractional_doppler", false)?,
        detector: afdm_cpim::sim::DetectorKind::MmseMl,
        codebook: kv.take_or("codebook", afdm_cpim::sim::CodebookSource::Random)?,
        codebook_metric: kv.take_or("codebook_metric", DistanceMetric::Angular)?,
        pool_size: kv.take_or("pool_size", 256)?,
        q: kv.take_list("q")?,
        c2: kv.take("c2")?,
        ebn0_grid_db: vec![ebn0_db],
        trials_per_point: 1,
        target_bit_errors: None,
        seed: kv.require("seed")?,
        channel_n0_override: kv.take("channel_n0_override")?,
        filter_n0_override: kv.take("filter_n0_override")?,
        gas_max_iterations: kv.take_or("gas_max_iterations", 1000)?,
        gas_no_improve_limit: kv.take("gas_no_improve_limit")?,
        gas_fixed_point_bits: kv.take("gas_fixed_point_bits")?,
        emit_theoretical: false,
    };
    kv.finish()?;
    sim.validate_demo()?;

    let constellation = Constellation::from_order(sim.m)?;
    let codebook = sim.build_codebook()?;
    let n0_channel = sim
        .channel_n0_override
        .unwrap_or_else(|| noise_variance_from_ebn0(ebn0_db, sim.n, sim.m, sim.k));
    let n0_filter = sim.filter_n0_override.unwrap_or(n0_channel);

    // Mirrors trial 0 of a sweep at this grid point.
    let trial_seed = derive_seed(&[sim.seed, ebn0_db.to_bits(), 0]);
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    let chan = sample_channel(
        sim.paths,
        sim.ell_max,
        sim.f_max as f64,
        sim.fractional_doppler,
        &mut rng,
    )?;
    let h = channel_matrix(&chan, codebook.params().c1(), sim.n)?;
    let b1 = sim.n * constellation.bits_per_symbol();
    let b = b1 + codebook.index_bits();
    let bits: Vec<Bit> = (0..b).map(|_| rng.random_range(0..=1u8)).collect();
    let frame = encode(&bits, &codebook, &constellation)?;
    let r = apply_channel(&frame.signal, &h, n0_channel, &mut rng)?;

    let mut report = String::new();
    report.push_str("# afdm-cpim detect-demo\n");
    report.push_str(&format!("seed = {}\n", sim.seed));
    report.push_str(&format!("trial_seed = {trial_seed}\n"));
    report.push_str(&format!("ebn0_db = {ebn0_db}\n"));
    report.push_str(&format!("channel_n0 = {n0_channel}\n"));
    report.push_str(&format!("filter_n0 = {n0_filter}\n"));
    report.push_str(&format!(
        "codebook_q = {}\n",
        codebook
            .entries()
            .iter()
            .map(|p| p.index().to_string())
            .collect::<Vec<_>>()
            .join(" ")
    ));
    report.push_str(&format!("transmitted_bits = {}\n", bits_string(&bits)));
    report.push_str(&format!("transmitted_k = {}\n", frame.perm_choice));
    report.push_str("channel_paths = delay:doppler:|gain| ");
    let path_desc: Vec<String> = chan
        .paths
        .iter()
        .map(|p| format!("{}:{}:{:.4}", p.delay, p.doppler, p.gain.norm()))
        .collect();
    report.push_str(&format!("{}\n", path_desc.join(" ")));
    report.push('\n');

    // MMSE-ML always runs.
    {
        let t = Instant::now();
        let det = mmse_ml_detect(&r, &h, &codebook, n0_filter, &constellation)?;
        let wall = t.elapsed().as_secs_f64() * 1e3;
        let rx = decode_bits(&det.x_hat, det.k_hat, &codebook, &constellation)?;
        let recheck =
            residual_received(&r, &h, codebook.daft(det.k_hat)?, &det.x_hat)?;
        report.push_str(&format!(
            "[mmse_ml] k_hat = {} metric = {:.6e} recheck = {:.6e} wall_ms = {:.3} bits = {} agree = {}\n",
            det.k_hat,
            det.metric,
            recheck,
            wall,
            bits_string(&rx),
            rx == bits
        ));
    }

    // Full ML runs when the candidate space fits the budget.
    let candidates = (sim.k as u128).saturating_mul(
        1u128
            .checked_shl((b1 as u32).min(127))
            .unwrap_or(u128::MAX),
    );
    if candidates <= FULL_ML_DEFAULT_BUDGET {
        let t = Instant::now();
        let det = ml_detect_full(&r, &h, &codebook, &constellation, FULL_ML_DEFAULT_BUDGET)?;
        let wall = t.elapsed().as_secs_f64() * 1e3;
        let rx = decode_bits(&det.x_hat, det.k_hat, &codebook, &constellation)?;
        let recheck = residual_received(&r, &h, codebook.daft(det.k_hat)?, &det.x_hat)?;
        report.push_str(&format!(
            "[full_ml] k_hat = {} metric = {:.6e} recheck = {:.6e} wall_ms = {:.3} bits = {} agree = {}\n",
            det.k_hat,
            det.metric,
            recheck,
            wall,
            bits_string(&rx),
            rx == bits
        ));
    } else {
        report.push_str(&format!(
            "[full_ml] omitted: {candidates} candidates exceed the budget {FULL_ML_DEFAULT_BUDGET}\n"
        ));
    }

    // GAS runs when the bit count fits the emulation budget.
    if b1 <= GAS_EMULATION_MAX_VARS {
        let t = Instant::now();
        let gas_cfg = GasConfig {
            max_iterations: sim.gas_max_iterations,
            no_improve_limit: sim.gas_no_improve_limit,
            seed: derive_seed(&[trial_seed, 0x6A5]),
            fixed_point_bits: sim.gas_fixed_point_bits,
            ..GasConfig::default()
        };
        let sol = parallel_ml_solve(&r, &h, &codebook, &constellation, &gas_cfg)?;
        let wall = t.elapsed().as_secs_f64() * 1e3;
        let mut rx = sol.bits.clone();
        for i in (0..codebook.index_bits()).rev() {
            rx.push((((sol.k_star - 1) >> i) & 1) as Bit);
        }
        report.push_str(&format!(
            "[gas] k_hat = {} objective = {:.6e} queries = {} wall_ms = {:.3} bits = {} agree = {}\n",
            sol.k_star,
            sol.objective,
            sol.oracle_queries,
            wall,
            bits_string(&rx),
            rx == bits
        ));
    } else {
        report.push_str(&format!(
            "[gas] omitted: {b1} binary variables exceed the emulation budget {GAS_EMULATION_MAX_VARS}\n"
        ));
    }

    print!("{report}");
    write_output(output_dir, "report.txt", &report)?;
    let meta = metadata_text(
        "detect-demo",
        &text_echo(&text, overrides),
        start.elapsed().as_secs_f64(),
        &[("ebn0_db", ebn0_db.to_string())],
    );
    write_output(output_dir, "metadata.txt", &meta)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// distance-grid
// ---------------------------------------------------------------------------

pub fn distance_grid(config_path: &Path, output_dir: &Path, overrides: &[String]) -> Result<()> {
    let start = Instant::now();
    let text = read_config(config_path)?;
    let mut kv = KvMap::parse(&text)?;
    kv.apply_overrides(overrides)?;
    let n: usize = kv.require("n")?;
    let f_max: u32 = kv.take_or("f_max", 1)?;
    let xi: u32 = kv.take_or("xi", 0)?;
    let c2: Option<f64> = kv.take("c2")?;
    let metric: DistanceMetric = kv.take_or("metric", DistanceMetric::Angular)?;
    let pool_size: usize = kv.take_or("pool_size", 256)?;
    let seed: u64 = kv.require("seed")?;
    kv.finish()?;

    let params = match c2 {
        Some(c2) => ChirpParams::optimal_with_c2(n, f_max, xi, c2)?,
        None => ChirpParams::optimal(n, f_max, xi)?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, SALT_POOL]));
    let pool = permutation_pool(n, pool_size, &mut rng)?;
    let distances = pairwise_distances(&pool, &params, metric)?;
    write_output(output_dir, "distances.csv", &distances.to_csv())?;
    let meta = metadata_text(
        "distance-grid",
        &text_echo(&text, overrides),
        start.elapsed().as_secs_f64(),
        &[
            ("pool", pool.len().to_string()),
            ("metric", metric.to_string()),
        ],
    );
    write_output(output_dir, "metadata.txt", &meta)?;
    println!(
        "wrote {} ({}×{} grid)",
        output_dir.join("distances.csv").display(),
        pool.len(),
        pool.len()
    );
    Ok(())
}

// Demo validation relaxes the sweep-only requirements: the demo picks
// detectors itself and checks their budgets at run time.
trait DemoValidate {
    fn validate_demo(&self) -> Result<()>;
}

impl DemoValidate for SimConfig {
    fn validate_demo(&self) -> Result<()> {
        let mut relaxed = self.clone();
        relaxed.detector = afdm_cpim::sim::DetectorKind::MmseMl;
        relaxed.validate()
    }
}
