use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use sdpower_core::experiments::{
    delta_ap_distribution, parse_synthetic_spec, power_experiment, type1_experiment, validity_map_curve,
    write_delta_ap_csv, write_power_csv, write_type1_csv, write_validity_csv, ErrorTally, ExperimentConfig,
    HeaderComments, Profile,
};
use sdpower_core::ingest::QueryId;
use sdpower_core::rng::RngStream;
use sdpower_core::sdmodel::{read_models, write_models, ModelSet};
use sdpower_core::stattests::{run_all_tests, ResampleConfig, TestKind};

use crate::args::{Cli, Command, ExperimentArgs, FitArgs, TestArgs, ValidityArgs};
use crate::fit::fit_manifest;
use crate::manifest::{parse_statistic, Manifest, Overrides};
use crate::CliError;

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit(a) => with_pool(a.threads, || cmd_fit(&a)),
        Command::Type1(a) => with_pool(a.threads, || cmd_type1(&a)),
        Command::Power(a) => with_pool(a.threads, || cmd_power(&a)),
        Command::Validity(a) => with_pool(a.common.threads, || cmd_validity(&a)),
        Command::Test(a) => cmd_test(&a),
    }
}

fn with_pool<F>(threads: Option<usize>, f: F) -> Result<(), CliError>
where
    F: FnOnce() -> Result<(), CliError> + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Input(format!("cannot start worker pool: {e}")))?;
    pool.install(f)
}

fn seed_or_entropy(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random();
        eprintln!("seed {s} (drawn from entropy)");
        s
    })
}

fn short_sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn models_bytes(models: &ModelSet) -> Vec<u8> {
    let mut buf = Vec::new();
    write_models(models, &mut buf).expect("writing to memory");
    buf
}

fn write_file<F>(dir: &Path, name: &str, f: F) -> Result<PathBuf, CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), String>,
{
    let path = dir.join(name);
    let out_err = |reason: String| CliError::Output {
        path: path.clone(),
        reason,
    };
    fs::create_dir_all(dir).map_err(|e| out_err(e.to_string()))?;
    let file = File::create(&path).map_err(|e| out_err(e.to_string()))?;
    let mut w = BufWriter::new(file);
    f(&mut w).map_err(out_err)?;
    w.flush().map_err(|e| out_err(e.to_string()))?;
    Ok(path)
}

fn cmd_fit(a: &FitArgs) -> Result<(), CliError> {
    let m = Manifest::load(&a.manifest)?;
    let out = a.out.clone().or_else(|| m.out.clone()).unwrap_or_else(|| ".".into());
    let summary = fit_manifest(&m)?;

    write_file(&out, "exclusions.tsv", |w| {
        summary
            .exclusions
            .iter()
            .try_for_each(|e| writeln!(w, "{e}"))
            .map_err(|e| e.to_string())
    })?;
    write_file(&out, "fit_failures.tsv", |w| {
        summary
            .failures
            .iter()
            .try_for_each(|f| writeln!(w, "{}\t{}\t{}", f.system, f.query, f.reason))
            .map_err(|e| e.to_string())
    })?;
    let path = write_file(&out, "models.csv", |w| {
        write_models(&summary.models, w).map_err(|e| e.to_string())
    })?;

    for f in &summary.failures {
        eprintln!("fit failed: system {} query {}: {}", f.system, f.query, f.reason);
    }
    println!(
        "{}: {} of {} systems retained, {} dropped; {} models fitted, {} fit failures",
        m.collection,
        summary.models.systems.len(),
        summary.n_runs,
        summary.exclusions.len(),
        summary.models.n_models(),
        summary.failures.len()
    );
    println!("wrote {}", path.display());
    if summary.models.is_empty() {
        return Err(CliError::Input("no models could be fitted".into()));
    }
    Ok(())
}

/// Models, labels and configuration for one experiment command.
struct Resolved {
    models: ModelSet,
    collection: String,
    profile: Profile,
    cfg: ExperimentConfig,
    out: PathBuf,
}

fn file_stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| "models".into(), |s| s.to_string_lossy().into_owned())
}

fn resolve(a: &ExperimentArgs, extra: Overrides) -> Result<Resolved, CliError> {
    let src = &a.source;
    let mut manifest = None;
    let (models, collection) = if let Some(path) = &src.manifest {
        let m = Manifest::load(path)?;
        let summary = fit_manifest(&m)?;
        eprintln!(
            "{}: {} systems retained, {} dropped, {} models, {} fit failures",
            m.collection,
            summary.models.systems.len(),
            summary.exclusions.len(),
            summary.models.n_models(),
            summary.failures.len()
        );
        let c = m.collection.clone();
        manifest = Some(m);
        (summary.models, c)
    } else if let Some(path) = &src.models {
        let file = File::open(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        let models = read_models(file).map_err(|source| CliError::Models {
            path: path.clone(),
            source,
        })?;
        (models, file_stem(path))
    } else if let Some(path) = &src.synthetic {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        let models = parse_synthetic_spec(&text).map_err(|source| CliError::Synthetic {
            path: path.clone(),
            source,
        })?;
        (models, file_stem(path))
    } else {
        unreachable!("clap requires one model source")
    };

    let profile = a
        .profile
        .or(manifest.as_ref().and_then(|m| m.profile))
        .unwrap_or_default();
    let seed = seed_or_entropy(a.seed.or(manifest.as_ref().and_then(|m| m.seed)));
    let mut cfg = ExperimentConfig::for_profile(profile, seed);
    if let Some(m) = &manifest {
        m.overrides.apply(&mut cfg).map_err(CliError::Input)?;
    }
    let flags = Overrides {
        n_samples_per_list: a.samples,
        n_repetitions: a.reps,
        n_resamples: a.resamples,
        alpha_grid: a.alpha_grid.clone(),
        h_grid: a.h_grid.clone(),
        query_sizes: a.queries.clone(),
        power_alpha: a.alpha,
        resample_statistic: a.statistic.clone(),
        ..extra
    };
    flags.apply(&mut cfg).map_err(CliError::Input)?;
    cfg.validate()?;

    let out = a
        .out
        .clone()
        .or_else(|| manifest.as_ref().and_then(|m| m.out.clone()))
        .unwrap_or_else(|| ".".into());
    Ok(Resolved {
        models,
        collection: a.collection.clone().unwrap_or(collection),
        profile,
        cfg,
        out,
    })
}

fn header(command: &str, r: &Resolved) -> HeaderComments {
    let mut h = HeaderComments::default();
    h.push("generator", concat!("sdpower ", env!("CARGO_PKG_VERSION")));
    h.push("command", command);
    h.push("profile", r.profile);
    h.push("seed", r.cfg.master_seed);
    h.push("config_sha256", short_sha256(r.cfg.canonical_string().as_bytes()));
    h.push("models_sha256", short_sha256(&models_bytes(&r.models)));
    h
}

/// Warns about failed trials; errors out if some test failed in every one.
fn report_errors(errors: &[ErrorTally]) -> Result<(), CliError> {
    let mut total = Vec::new();
    for e in errors {
        eprintln!(
            "warning: {} failed in {} of {} trials at {} queries (counted as non-rejections)",
            e.test, e.errors, e.n_trials, e.n_queries
        );
        if e.errors == e.n_trials {
            total.push(format!("{} at {} queries", e.test, e.n_queries));
        }
    }
    if total.is_empty() {
        Ok(())
    } else {
        Err(CliError::AllTrialsFailed(format!(
            "every trial failed for: {}",
            total.join(", ")
        )))
    }
}

fn warn_nonpositive_mu1(pairs: &[(String, QueryId)]) {
    for (system, query) in pairs {
        eprintln!(
            "warning: system {system} query {query} has mu1 <= 0; scaling by 1 + h lowers its relevant scores"
        );
    }
}

fn print_table(title: &str, sizes: &[usize], rows: impl Fn(TestKind, usize) -> Option<f64>) {
    println!("{title}");
    let mut line = format!("{:<12}", "test");
    for n in sizes {
        line.push_str(&format!(" {:>8}", format!("n={n}")));
    }
    println!("{line}");
    for test in TestKind::ALL {
        let mut line = format!("{:<12}", test.as_str());
        for &n in sizes {
            match rows(test, n) {
                Some(v) => line.push_str(&format!(" {v:>8.4}")),
                None => line.push_str(&format!(" {:>8}", "-")),
            }
        }
        println!("{line}");
    }
}

fn cmd_type1(a: &ExperimentArgs) -> Result<(), CliError> {
    let r = resolve(a, Overrides::default())?;
    let report = type1_experiment(&r.models, &r.cfg)?;
    let path = write_file(&r.out, "type1.csv", |w| {
        write_type1_csv(&report, &r.collection, &header("type1", &r), w).map_err(|e| e.to_string())
    })?;
    let grid = &r.cfg.alpha_grid;
    let alpha = grid.iter().copied().find(|&x| x == 0.05).unwrap_or(grid[0]);
    print_table(
        &format!("rejection rate at alpha = {alpha}"),
        &r.cfg.query_sizes,
        |t, n| report.get(t, alpha, n).map(|row| row.rejection_rate),
    );
    println!("wrote {}", path.display());
    report_errors(&report.errors)
}

fn cmd_power(a: &ExperimentArgs) -> Result<(), CliError> {
    let r = resolve(a, Overrides::default())?;
    let curve = power_experiment(&r.models, &r.cfg)?;
    warn_nonpositive_mu1(&curve.nonpositive_mu1);
    let path = write_file(&r.out, "power.csv", |w| {
        write_power_csv(&curve, &r.collection, &header("power", &r), w).map_err(|e| e.to_string())
    })?;
    let h = *r.cfg.h_grid.last().expect("validated non-empty");
    print_table(
        &format!("power at alpha = {}, h = {h}", curve.alpha),
        &r.cfg.query_sizes,
        |t, n| curve.get(t, h, n).map(|row| row.p_reject),
    );
    println!("wrote {}", path.display());
    report_errors(&curve.errors)
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[k] } else { (v[k - 1] + v[k]) / 2.0 })
}

fn cmd_validity(a: &ValidityArgs) -> Result<(), CliError> {
    let extra = Overrides {
        validity_simulations: a.simulations,
        ..Overrides::default()
    };
    let r = resolve(&a.common, extra)?;
    let nonpositive: Vec<(String, QueryId)> = r
        .models
        .systems
        .iter()
        .flat_map(|s| {
            s.queries
                .iter()
                .filter(|(_, m)| m.relevant().mu() <= 0.0)
                .map(|(q, _)| (s.system.clone(), q.clone()))
        })
        .collect();
    warn_nonpositive_mu1(&nonpositive);

    let curve = validity_map_curve(&r.models, &r.cfg)?;
    let deltas = delta_ap_distribution(&r.models, a.delta_h, a.delta_reps, &r.cfg)?;
    let mut h = header("validity", &r);
    h.push("delta_h", a.delta_h);
    h.push("delta_reps", a.delta_reps);
    let map_path = write_file(&r.out, "validity_map.csv", |w| {
        write_validity_csv(&curve, &h, w).map_err(|e| e.to_string())
    })?;
    let delta_path = write_file(&r.out, "delta_ap.csv", |w| {
        write_delta_ap_csv(&deltas, &h, w).map_err(|e| e.to_string())
    })?;

    println!("{:>8} {:>10}", "h", "mean_ap");
    for (h, ap) in &curve {
        println!("{h:>8} {ap:>10.5}");
    }
    let mut values: Vec<f64> = deltas.iter().filter_map(|d| d.delta_ap_pct).collect();
    let positive = values.iter().filter(|&&v| v > 0.0).count();
    let negative = values.iter().filter(|&&v| v < 0.0).count();
    let sentinels = deltas.len() - values.len();
    match median(&mut values) {
        Some(m) => println!(
            "delta AP % at h = {}: median {m:.4}, {positive} positive, {negative} negative, {sentinels} with zero base AP",
            a.delta_h
        ),
        None => println!("delta AP % at h = {}: every base AP was zero", a.delta_h),
    }
    println!("wrote {} and {}", map_path.display(), delta_path.display());
    Ok(())
}

/// Reads `ap_a ap_b` rows; blank lines and `#` comments are skipped.
pub fn parse_ap_pairs(text: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(format!("line {}: expected 2 columns, found {}", i + 1, fields.len()));
        }
        let mut pair = [0.0; 2];
        for (slot, f) in pair.iter_mut().zip(&fields) {
            *slot = f
                .parse::<f64>()
                .ok()
                .filter(|v| (0.0..=1.0).contains(v))
                .ok_or_else(|| format!("line {}: `{f}` is not an AP value in [0, 1]", i + 1))?;
        }
        rows.push((pair[0], pair[1]));
    }
    if rows.len() < 2 {
        return Err(format!("need at least 2 rows of paired APs, found {}", rows.len()));
    }
    Ok(rows)
}

fn cmd_test(a: &TestArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.file).map_err(|source| CliError::Io {
        path: a.file.clone(),
        source,
    })?;
    let rows = parse_ap_pairs(&text).map_err(|e| CliError::Input(format!("{}: {e}", a.file.display())))?;
    let statistic = parse_statistic(&a.statistic).map_err(CliError::Input)?;
    if a.resamples == 0 {
        return Err(CliError::Input("--resamples must be >= 1".into()));
    }
    let seed = seed_or_entropy(a.seed);
    let d: Vec<f64> = rows.iter().map(|(x, y)| y - x).collect();
    let cfg = ResampleConfig {
        statistic,
        ..ResampleConfig::new(a.resamples, RngStream::new(seed))
    };
    let reports = run_all_tests(&d, a.alpha, &cfg).map_err(|e| CliError::Input(e.to_string()))?;
    println!("test\tstatistic\tp_value\treject");
    for r in reports {
        match &r.result {
            Ok(o) => println!("{}\t{}\t{}\t{}", r.test, o.statistic, o.p_value, r.rejected),
            Err(e) => println!("{}\t-\t-\terror: {e}", r.test),
        }
    }
    Ok(())
}
