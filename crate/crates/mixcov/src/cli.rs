//! Command-line surface: CSV in, JSON/CSV out. One thin binary dispatches
//! to the `fit`, `reject`, `screen` and `sim` subcommands; everything here
//! is also callable as a library.

use crate::em::{em_fit, EmConfig, F1Class, PiClass};
use crate::error::{Error, Result};
use crate::inference::{dcov_permutation_test, flag_monotonicity, reject_at_level};
use crate::io::{
    read_dataset_csv, read_fit_document, FitDocument, LseSummary,
    SCHEMA_VERSION,
};
use crate::marginal::{marginal1_profile, marginal2_lse, LseOptions, ProfileOptions};
use crate::model::{spline_expand, Dataset, MixtureFit, NullDensity, PriorFn};
use crate::simlab::{run_setting, Method, SimSetting};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "mixcov", version, about = "Covariate-dependent two-groups mixture modeling")]
struct Cli {
    /// Flat key-value JSON config mirroring flag names; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Fit a mixture model to a CSV dataset.
    Fit(FitArgs),
    /// Apply the lFDR rejection rule to a stored fit.
    Reject(RejectArgs),
    /// Distance-covariance screen for whether covariates matter.
    Screen(ScreenArgs),
    /// Run the simulation harness and emit tidy metric rows.
    Sim(SimArgs),
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Input CSV: header row, `y` column first, covariates after.
    #[arg(long)]
    data: PathBuf,
    /// fmle | marginal1 | marginal2
    #[arg(long)]
    method: Option<String>,
    /// logistic | probit | cloglog | isotonic | constant
    #[arg(long)]
    pi: Option<String>,
    /// gaussmix | decreasing | paramnormal
    #[arg(long)]
    f1: Option<String>,
    /// stdnormal | normal:MU,SIG2 | uniform
    #[arg(long)]
    null: Option<String>,
    /// Expand each covariate into this many spline basis columns.
    #[arg(long)]
    spline_df: Option<usize>,
    /// fmle initializer: marginal1 | marginal2 | best | file:PATH
    #[arg(long)]
    init: Option<String>,
    /// Covariate column index ordering the isotonic prior.
    #[arg(long)]
    iso_covariate: Option<usize>,
    /// Refine the profile grid around the first-pass argmax.
    #[arg(long)]
    refine: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path for the fit JSON (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RejectArgs {
    /// Fit JSON produced by `mixcov fit`.
    #[arg(long)]
    fit: PathBuf,
    /// Nominal level in (0,1).
    #[arg(long)]
    alpha: Option<f64>,
    /// Original dataset; enables the monotonicity caveat flag.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Optional per-hypothesis CSV (index, lfdr, rejected).
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScreenArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimArgs {
    /// Setting tag like A.i or D.iv.
    #[arg(long)]
    setting: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Comma-separated: marginal1,marginal2,fmle,oracle
    #[arg(long)]
    methods: Option<String>,
    /// Comma-separated nominal levels for FDP/TPR rows.
    #[arg(long)]
    alpha_levels: Option<String>,
    /// Fit on raw covariates instead of the spline expansion.
    #[arg(long)]
    no_splines: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Parallel replicate workers.
    #[arg(long)]
    jobs: Option<usize>,
    /// Tidy CSV output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Aggregated summary JSON path.
    #[arg(long)]
    summary: Option<PathBuf>,
}

/// Flat key-value config document.
#[derive(Default)]
struct Config(serde_json::Map<String, serde_json::Value>);

impl Config {
    fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Config::default()),
            Some(p) => {
                let raw = std::fs::read_to_string(p)?;
                let value: serde_json::Value = serde_json::from_str(&raw)?;
                match value {
                    serde_json::Value::Object(map) => Ok(Config(map)),
                    _ => Err(Error::BadInput("config must be a flat JSON object".into())),
                }
            }
        }
    }

    fn string(&self, key: &str) -> Option<String> {
        self.0.get(key).and_then(|v| v.as_str().map(str::to_string))
    }

    fn u64(&self, key: &str) -> Option<u64> {
        self.0.get(key).and_then(|v| v.as_u64())
    }

    fn usize(&self, key: &str) -> Option<usize> {
        self.u64(key).map(|v| v as usize)
    }

    fn f64(&self, key: &str) -> Option<f64> {
        self.0.get(key).and_then(|v| v.as_f64())
    }
}

fn pick<T>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

fn pick_opt<T>(flag: Option<T>, config: Option<T>) -> Option<T> {
    flag.or(config)
}

/// Seed policy: explicit seed wins; otherwise CI mode demands one and
/// interactive use falls back to a time-derived seed (always echoed).
fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    if std::env::var("MIXCOV_CI").as_deref() == Ok("1") {
        return Err(Error::BadInput(
            "MIXCOV_CI=1 requires an explicit --seed for randomized commands".into(),
        ));
    }
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0x5eed);
    Ok(nanos)
}

fn parse_null(tag: &str) -> Result<NullDensity> {
    match tag {
        "stdnormal" => Ok(NullDensity::StdNormal),
        "uniform" => Ok(NullDensity::UniformUnit),
        other => {
            if let Some(rest) = other.strip_prefix("normal:") {
                let (mu, sig2) = rest.split_once(',').okor_usage("null normal needs MU,SIG2")?;
                let mu: f64 = mu.trim().parse().map_err(|_| usage("bad null mean"))?;
                let sigma2: f64 = sig2.trim().parse().map_err(|_| usage("bad null variance"))?;
                if sigma2 <= 0.0 {
                    return Err(usage("null variance must be positive"));
                }
                Ok(NullDensity::Normal { mu, sigma2 })
            } else {
                Err(usage(&format!("unknown null {other:?}")))
            }
        }
    }
}

fn parse_pi(tag: &str) -> Result<PiClass> {
    match tag {
        "logistic" => Ok(PiClass::LinkLogistic),
        "probit" => Ok(PiClass::LinkProbit),
        "cloglog" => Ok(PiClass::LinkCLogLog),
        "isotonic" => Ok(PiClass::Isotonic),
        "constant" => Ok(PiClass::Constant),
        other => Err(usage(&format!("unknown pi class {other:?}"))),
    }
}

fn parse_f1(tag: &str) -> Result<F1Class> {
    match tag {
        "gaussmix" => Ok(F1Class::GaussMixGrid),
        "decreasing" => Ok(F1Class::Decreasing),
        "paramnormal" => Ok(F1Class::ParamNormal),
        other => Err(usage(&format!("unknown f1 class {other:?}"))),
    }
}

fn usage(msg: &str) -> Error {
    Error::BadInput(msg.into())
}

trait OkOrUsage<T> {
    fn okor_usage(self, msg: &str) -> Result<T>;
}

impl<T> OkOrUsage<T> for Option<T> {
    fn okor_usage(self, msg: &str) -> Result<T> {
        self.ok_or_else(|| usage(msg))
    }
}

/// Entry point: parse argv, dispatch, and map errors to exit codes
/// (0 success, 1 runtime/model error, 2 usage error) with a machine-readable
/// error JSON on stderr.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with success status
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let config = match Config::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return emit_error(&e),
    };
    let outcome = match cli.command {
        Cmd::Fit(args) => cmd_fit(args, &config),
        Cmd::Reject(args) => cmd_reject(args, &config),
        Cmd::Screen(args) => cmd_screen(args, &config),
        Cmd::Sim(args) => cmd_sim(args, &config),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => emit_error(&e),
    }
}

fn emit_error(e: &Error) -> i32 {
    let payload = serde_json::json!({
        "error": e.code(),
        "message": e.to_string(),
    });
    eprintln!("{payload}");
    match e {
        Error::BadInput(_) | Error::BadSchema(_) => 2,
        _ => 1,
    }
}

fn write_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, json)?,
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_fit(args: FitArgs, config: &Config) -> Result<()> {
    let raw = read_dataset_csv(&args.data)?;
    let method = pick(args.method, config.string("method"), "fmle".into());
    let pi_tag = pick(args.pi, config.string("pi"), "logistic".into());
    let f1_tag = pick(args.f1, config.string("f1"), "gaussmix".into());
    let null_tag = pick(args.null, config.string("null"), "stdnormal".into());
    let init_tag = pick(args.init, config.string("init"), "best".into());
    let spline_df = pick_opt(args.spline_df, config.usize("spline_df"));
    let iso_covariate = pick(args.iso_covariate, config.usize("iso_covariate"), 0);
    let seed = args.seed.or(config.u64("seed"));

    let pi_class = parse_pi(&pi_tag)?;
    let f1_class = parse_f1(&f1_tag)?;
    let null = parse_null(&null_tag)?;
    null.validate()?;

    let (data, spline_meta) = match spline_df {
        None => (raw, None),
        Some(df) => {
            if df == 0 {
                return Err(usage("--spline-df must be at least 1"));
            }
            let (design, meta) = spline_expand(raw.x(), df)?;
            (raw.with_design(design)?, Some(meta))
        }
    };

    let mut doc = match method.as_str() {
        "marginal1" => {
            if f1_class != F1Class::GaussMixGrid {
                return Err(usage("marginal1 estimates a gaussmix signal; use --f1 gaussmix"));
            }
            let opts = ProfileOptions {
                pi_class,
                iso_covariate,
                refine: args.refine,
                ..ProfileOptions::default()
            };
            let res = marginal1_profile(&data, &null, &opts)?;
            let mut fit =
                MixtureFit::from_parts(res.pi_hat, res.f1_hat, null, &data, res.profile.len(), true)?;
            if res.degenerate {
                fit.diagnostics.flags.push("flat prior objective at the selected alpha".into());
            }
            let mut doc = FitDocument::new("marginal1", fit);
            doc.profile = Some(res.profile);
            doc
        }
        "marginal2" => {
            if f1_class != F1Class::GaussMixGrid {
                return Err(usage("marginal2 estimates a gaussmix signal; use --f1 gaussmix"));
            }
            let link = pi_class
                .link()
                .okor_usage("marginal2 needs a link prior (logistic, probit or cloglog)")?;
            let res = marginal2_lse(&data, &null, &LseOptions { link, ..LseOptions::default() })?;
            let prior = PriorFn::Link { link, beta0: res.beta0, beta: res.beta.clone() };
            let mut fit =
                MixtureFit::from_parts(prior, res.f1_hat.clone(), null, &data, res.mu_grid.len(), true)?;
            if res.flagged {
                fit.diagnostics.flags.push("bounded retry during least squares".into());
            }
            let cov = res
                .covariance
                .as_ref()
                .map(|c| (0..c.rows()).map(|i| c.row(i).to_vec()).collect())
                .unwrap_or_default();
            let mut doc = FitDocument::new("marginal2", fit);
            doc.lse = Some(LseSummary {
                mu: res.mu,
                covariance: cov,
                mu_grid: res.mu_grid,
                sse: res.sse,
            });
            doc
        }
        "fmle" => {
            let cfg = EmConfig { pi_class, f1_class, iso_covariate, ..EmConfig::default() };
            let init = resolve_init(&init_tag, &data, &null, &cfg, args.refine)?;
            let fit = em_fit(&data, &null, init, &cfg)?;
            FitDocument::new("fmle", fit)
        }
        other => return Err(usage(&format!("unknown method {other:?}"))),
    };

    doc.fit.diagnostics.spline = spline_meta;
    doc.fit.diagnostics.seed = seed;
    write_json(args.out.as_deref(), &doc)
}

/// Build the EM initializer: one of the marginal fits, the best of both, or
/// a stored fit document.
fn resolve_init(
    tag: &str,
    data: &Dataset,
    null: &NullDensity,
    cfg: &EmConfig,
    refine: bool,
) -> Result<(PriorFn, crate::model::SignalDensity)> {
    let marginal1 = |_: ()| -> Result<(PriorFn, crate::model::SignalDensity, f64)> {
        let opts = ProfileOptions {
            pi_class: cfg.pi_class,
            iso_covariate: cfg.iso_covariate,
            refine,
            ..ProfileOptions::default()
        };
        let res = marginal1_profile(data, null, &opts)?;
        let ll = crate::model::loglik_joint(&res.pi_hat, &res.f1_hat, null, data)?;
        Ok((res.pi_hat, res.f1_hat, ll))
    };
    let marginal2 = |_: ()| -> Result<Option<(PriorFn, crate::model::SignalDensity, f64)>> {
        let Some(link) = cfg.pi_class.link() else { return Ok(None) };
        let res = marginal2_lse(data, null, &LseOptions { link, ..LseOptions::default() })?;
        let prior = PriorFn::Link { link, beta0: res.beta0, beta: res.beta };
        let ll = crate::model::loglik_joint(&prior, &res.f1_hat, null, data)?;
        Ok(Some((prior, res.f1_hat, ll)))
    };
    match tag {
        "marginal1" => {
            let (p, s, _) = marginal1(())?;
            Ok((p, s))
        }
        "marginal2" => {
            let (p, s, _) = marginal2(())?
                .okor_usage("marginal2 initialization needs a link prior class")?;
            Ok((p, s))
        }
        "best" => {
            let m1 = marginal1(())?;
            match marginal2(())? {
                Some(m2) if m2.2 > m1.2 => Ok((m2.0, m2.1)),
                _ => Ok((m1.0, m1.1)),
            }
        }
        other => {
            if let Some(path) = other.strip_prefix("file:") {
                let doc = read_fit_document(Path::new(path))?;
                Ok((doc.fit.prior, doc.fit.signal))
            } else {
                Err(usage(&format!("unknown init {other:?}")))
            }
        }
    }
}

fn cmd_reject(args: RejectArgs, config: &Config) -> Result<()> {
    let alpha = pick(args.alpha, config.f64("alpha"), 0.1);
    let doc = read_fit_document(&args.fit)?;
    let mut report = reject_at_level(&doc.fit.lfdr, alpha)?;
    if let Some(data_path) = &args.data {
        let data = read_dataset_csv(data_path)?;
        if data.n() == doc.fit.lfdr.len() {
            flag_monotonicity(&mut report, data.y(), &doc.fit.null);
        } else {
            return Err(usage("dataset length does not match the fit"));
        }
    }
    if let Some(csv_path) = &args.csv {
        let mut wtr = csv::Writer::from_path(csv_path)?;
        wtr.write_record(["index", "lfdr", "rejected"])?;
        let mut rejected = vec![false; doc.fit.lfdr.len()];
        for &i in &report.rejected {
            rejected[i] = true;
        }
        for (i, l) in doc.fit.lfdr.iter().enumerate() {
            wtr.write_record([i.to_string(), l.to_string(), rejected[i].to_string()])?;
        }
        wtr.flush()?;
    }
    write_json(args.out.as_deref(), &report)
}

fn cmd_screen(args: ScreenArgs, config: &Config) -> Result<()> {
    let data = read_dataset_csv(&args.data)?;
    if data.n() < 2 {
        return Err(usage("the screen needs at least two observations"));
    }
    if data.p() == 0 {
        return Err(usage("the screen needs at least one covariate column"));
    }
    let permutations = pick(args.permutations, config.usize("permutations"), 199);
    if permutations < 1 {
        return Err(usage("--permutations must be at least 1"));
    }
    let seed = resolve_seed(args.seed, config.u64("seed"))?;
    let report = dcov_permutation_test(data.x(), data.y(), permutations, seed)?;
    write_json(args.out.as_deref(), &report)
}

fn cmd_sim(args: SimArgs, config: &Config) -> Result<()> {
    let n = pick(args.n, config.usize("n"), 1000);
    let replicates = pick(args.replicates, config.usize("replicates"), 1);
    let jobs = pick(args.jobs, config.usize("jobs"), 1);
    let seed = resolve_seed(args.seed, config.u64("seed"))?;
    let methods_tag = pick(
        args.methods,
        config.string("methods"),
        "marginal1,marginal2,fmle,oracle".into(),
    );
    let methods: Vec<Method> = methods_tag
        .split(',')
        .filter(|s| !s.is_empty())
        .map(Method::parse)
        .collect::<Result<_>>()?;
    let levels_tag = pick(
        args.alpha_levels,
        config.string("alpha_levels"),
        "0.05,0.10,0.15,0.20,0.25,0.30".into(),
    );
    let alpha_levels: Vec<f64> = levels_tag
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|_| usage("bad alpha level")))
        .collect::<Result<_>>()?;
    if alpha_levels.iter().any(|&a| !(0.0 < a && a < 1.0)) {
        return Err(usage("alpha levels must lie in (0,1)"));
    }

    let mut setting = SimSetting::parse_tag(&args.setting, n, seed)?;
    setting.expand_splines = !args.no_splines;

    let rows = run_setting(&setting, replicates, &methods, &alpha_levels, jobs)?;

    // timings are informational; keep the CSV deterministic
    let mut timing: std::collections::BTreeMap<String, (f64, usize)> = Default::default();
    for row in rows.iter().filter(|r| r.metric == "seconds") {
        let e = timing.entry(row.method.clone()).or_insert((0.0, 0));
        e.0 += row.value;
        e.1 += 1;
    }
    for (method, (total, count)) in &timing {
        eprintln!("[timing] method={method} mean_seconds={:.3}", total / *count as f64);
    }

    let deterministic: Vec<&crate::simlab::SimRow> =
        rows.iter().filter(|r| r.metric != "seconds").collect();

    let mut out: Box<dyn std::io::Write> = match &args.out {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    };
    {
        let mut wtr = csv::Writer::from_writer(&mut out);
        wtr.write_record(["setting", "n", "replicate", "seed", "method", "metric", "value"])?;
        for row in &deterministic {
            wtr.write_record([
                row.setting.clone(),
                row.n.to_string(),
                row.replicate.to_string(),
                row.seed.to_string(),
                row.method.clone(),
                row.metric.clone(),
                row.value.to_string(),
            ])?;
        }
        wtr.flush()?;
    }

    if let Some(summary_path) = &args.summary {
        let mut sums: std::collections::BTreeMap<(String, String), (f64, usize)> = Default::default();
        for row in &deterministic {
            let e = sums.entry((row.method.clone(), row.metric.clone())).or_insert((0.0, 0));
            e.0 += row.value;
            e.1 += 1;
        }
        let mut means = serde_json::Map::new();
        for ((method, metric), (total, count)) in sums {
            let entry = means
                .entry(method)
                .or_insert_with(|| serde_json::Value::Object(Default::default()));
            entry
                .as_object_mut()
                .unwrap()
                .insert(metric, serde_json::json!(total / count as f64));
        }
        let summary = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "setting": args.setting,
            "n": n,
            "replicates": replicates,
            "master_seed": seed,
            "means": means,
        });
        std::fs::write(summary_path, serde_json::to_string_pretty(&summary)?)?;
    }
    Ok(())
}
