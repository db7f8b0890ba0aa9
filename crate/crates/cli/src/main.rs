use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use asymscore::asymmetry::{
    expfam_param_verdict, expfam_verdict, location_sweep, location_verdict, scale_sweep, scale_sweep_families,
    scale_verdict, VerdictRow,
};
use asymscore::divergence::divergence;
use asymscore::families::{parse_distribution, Omega};
use asymscore::harness::io::{
    pair_forecasts, read_dispersion_samples, read_forecasts, read_targets, score_pairs, standardize_target_map,
    write_rejected, RejectedRecord,
};
use asymscore::harness::{
    asymmetric_laplace_grid, default_axes, dispersion_flip, heatmap, linspace, ranking_table, synthetic_flips,
    synthetic_normal_pairs, DispersionRecord, DivergenceKind, HeatmapGrid, RankingRow, RollingStandardizer,
};
use asymscore::hedging::{hedge_expfam_optimum, optimal_scale, ShiftLaw};
use asymscore::scoring::{score, LossSpec};
use asymscore::selftest::{catalog_fixtures, run_selftest, scale_specs};
use asymscore::{expfam_descriptor, make_family, Distribution, Error, LocationFamily, ScaleFamily};

const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser, Debug)]
#[command(name = "asymscore", version, about = "Asymmetry of proper scoring rules")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads (defaults to ASYMSCORE_THREADS, then all cores).
    #[arg(long, global = true, env = "ASYMSCORE_THREADS")]
    threads: Option<usize>,
    /// Also write a JSON mirror of each CSV artifact.
    #[arg(long, global = true)]
    json: bool,
    /// Directory for CSV/JSON artifacts; nothing is written without it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// key=value file supplying defaults for any long flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score one forecast against one outcome.
    Score(ScoreArgs),
    /// Divergence d(F, G) induced by a loss.
    Diverge(DivergeArgs),
    /// Over/under-penalization verdicts.
    Asymmetry(AsymmetryArgs),
    /// Optimal hedge against a random shift.
    Hedge(HedgeArgs),
    /// Expected-loss surfaces over (mean, sd).
    Heatmap(HeatmapArgs),
    /// Standardized forecaster ranks from quantile forecasts.
    Rank(RankArgs),
    /// Dispersion-flip comparison.
    Dispersion(DispersionArgs),
    /// Runs the invariant suite.
    Selftest,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long)]
    loss: String,
    /// Distribution as `name:p1,p2,...`.
    #[arg(long)]
    dist: String,
    #[arg(long, allow_hyphen_values = true)]
    y: f64,
}

#[derive(Args, Debug)]
struct DivergeArgs {
    #[arg(long)]
    loss: String,
    #[arg(long)]
    f: String,
    #[arg(long)]
    g: String,
}

#[derive(Args, Debug)]
struct AsymmetryArgs {
    /// Comma-separated losses.
    #[arg(long, default_value = "crps")]
    loss: String,
    /// `<name>-scale` or `<name>-location`.
    #[arg(long)]
    family: Option<String>,
    /// Base law (`name:p1,...`) when the family name alone is not enough.
    #[arg(long)]
    base: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    /// Exponential-family catalog entry, with `--fixed` nuisance values.
    #[arg(long)]
    expfam: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    fixed: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    /// Compare in the natural parameter instead of the conventional one.
    #[arg(long)]
    natural: bool,
    /// Full sweep: `scale`, `location` or `expfam`.
    #[arg(long)]
    sweep: Option<String>,
}

#[derive(Args, Debug)]
struct HedgeArgs {
    #[arg(long, default_value = "crps")]
    loss: String,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    base: Option<String>,
    #[arg(long)]
    expfam: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    fixed: Vec<f64>,
    /// `two-point:a`, `log-uniform:a` or `log-normal:s`.
    #[arg(long)]
    shift: String,
    /// Training value of σ (scale hedges) or η (natural-parameter hedges).
    #[arg(long, allow_hyphen_values = true)]
    center: Option<f64>,
}

#[derive(Args, Debug)]
struct HeatmapArgs {
    #[arg(long, default_value = "log,crps")]
    loss: String,
    /// Standard normal forecasts and this many N(0, 1) outcomes.
    #[arg(long)]
    synthetic: Option<usize>,
    /// Expected-loss grid against a standardized asymmetric Laplace target.
    #[arg(long)]
    asymmetric_laplace: Option<f64>,
    #[arg(long)]
    forecasts: Option<PathBuf>,
    #[arg(long)]
    targets: Option<PathBuf>,
    /// Rolling standardization window for file targets.
    #[arg(long, default_value_t = 8)]
    window: usize,
    /// `lo:hi:n`
    #[arg(long, allow_hyphen_values = true)]
    mu_axis: Option<String>,
    #[arg(long)]
    sigma_axis: Option<String>,
}

#[derive(Args, Debug)]
struct RankArgs {
    #[arg(long)]
    forecasts: PathBuf,
    #[arg(long)]
    targets: PathBuf,
    #[arg(long, default_value = "log,crps")]
    loss: String,
}

#[derive(Args, Debug)]
struct DispersionArgs {
    /// `unit,kind,value` samples with kind `forecast` or `observed`.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Number of synthetic normal replicates.
    #[arg(long)]
    synthetic: Option<usize>,
    /// sd(F)/sd(G) for synthetic replicates.
    #[arg(long, default_value_t = 2.0)]
    ratio: f64,
    /// Draws per sample in synthetic replicates.
    #[arg(long, default_value_t = 300)]
    draws: usize,
    #[arg(long, default_value = "cramer")]
    divergence: String,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
    SelftestFailed(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Run = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let argv = match with_config(argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::SelftestFailed(n)) => {
            eprintln!("{n} check(s) failed");
            ExitCode::from(1)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numeric() {
        4
    } else if matches!(
        e,
        Error::Data(_) | Error::Io(_) | Error::Rejected(_) | Error::EmptyPairs | Error::SeriesTooShort { .. }
    ) {
        3
    } else {
        2
    }
}

/// Splices `--key value` pairs from a `--config` file in right after the
/// subcommand, skipping any key already given on the command line.
fn with_config(argv: Vec<String>) -> Result<Vec<String>, String> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(argv);
    };
    let path = if let Some(p) = argv[pos].strip_prefix("--config=") {
        p.to_string()
    } else {
        argv.get(pos + 1).cloned().ok_or("--config needs a path")?
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config `{path}`: {e}"))?;
    let given: Vec<&str> = argv
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a))
        .collect();
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected key=value", n + 1))?;
        let k = k.trim().replace('_', "-");
        if k == "config" || given.contains(&k.as_str()) {
            continue;
        }
        match v.trim() {
            "true" => extra.push(format!("--{k}")),
            "false" => {}
            v => extra.push(format!("--{k}={v}")),
        }
    }
    let sub = argv
        .iter()
        .enumerate()
        .skip(1)
        .find(|(i, a)| !a.starts_with('-') && !(*i > 0 && takes_value(&argv[i - 1])))
        .map(|(i, _)| i + 1)
        .unwrap_or(argv.len());
    let mut out = argv[..sub].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[sub..]);
    Ok(out)
}

fn takes_value(flag: &str) -> bool {
    matches!(flag, "--seed" | "--threads" | "--out" | "--config")
}

fn run(cli: &Cli) -> Run {
    match &cli.command {
        Command::Score(a) => cmd_score(cli, a),
        Command::Diverge(a) => cmd_diverge(cli, a),
        Command::Asymmetry(a) => cmd_asymmetry(cli, a),
        Command::Hedge(a) => cmd_hedge(cli, a),
        Command::Heatmap(a) => cmd_heatmap(cli, a),
        Command::Rank(a) => cmd_rank(cli, a),
        Command::Dispersion(a) => cmd_dispersion(cli, a),
        Command::Selftest => cmd_selftest(cli),
    }
}

/// Up to 12 significant digits, trailing zeros dropped.
fn num(x: f64) -> String {
    if !x.is_finite() || x == 0.0 {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..=12).contains(&mag) {
        return format!("{x:.11e}");
    }
    let digits = (11 - mag).clamp(0, 17) as usize;
    let s = format!("{x:.digits$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn losses(text: &str) -> Result<Vec<LossSpec>, Failure> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| LossSpec::parse(s).map_err(Failure::from))
        .collect()
}

/// Writes `<name>.csv` (and `<name>.json` with `--json`) under `--out`.
fn artifact(cli: &Cli, name: &str, header: &str, rows: &[String]) -> Run {
    let Some(dir) = &cli.out else { return Ok(()) };
    std::fs::create_dir_all(dir).map_err(Error::from)?;
    let csv_path = dir.join(format!("{name}.csv"));
    asymscore::harness::io::write_csv(&csv_path, header, rows.iter().cloned())?;
    if cli.json {
        std::fs::write(dir.join(format!("{name}.json")), json_mirror(&csv_path)?).map_err(Error::from)?;
    }
    Ok(())
}

fn json_mirror(csv_path: &Path) -> Result<String, Error> {
    let mut rdr = csv::Reader::from_path(csv_path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let mut obj = Map::new();
        for (k, v) in header.iter().zip(rec.iter()) {
            let value = match v.parse::<f64>() {
                Ok(x) if x.is_finite() => serde_json::Number::from_f64(x).map_or(Value::String(v.into()), Value::Number),
                _ => Value::String(v.into()),
            };
            obj.insert(k.clone(), value);
        }
        records.push(Value::Object(obj));
    }
    Ok(serde_json::to_string_pretty(&Value::Array(records)).expect("JSON values serialize") + "\n")
}

fn cmd_score(cli: &Cli, a: &ScoreArgs) -> Run {
    let spec = LossSpec::parse(&a.loss)?;
    let d = parse_distribution(&a.dist)?;
    let v = score(&spec, &d.into(), a.y)?;
    println!("score {} {} y={}: {}", spec.tag(), a.dist, num(a.y), num(v));
    artifact(cli, "score", "loss,dist,y,score", &[format!("{},\"{}\",{},{}", spec.tag(), a.dist, a.y, v)])
}

fn cmd_diverge(cli: &Cli, a: &DivergeArgs) -> Run {
    let spec = LossSpec::parse(&a.loss)?;
    let (f, g) = (parse_distribution(&a.f)?, parse_distribution(&a.g)?);
    let d = divergence(&spec, &f, &g)?;
    println!("divergence {} F={} G={}: {}", spec.tag(), a.f, a.g, num(d));
    artifact(cli, "divergence", "loss,f,g,divergence", &[format!("{},\"{}\",\"{}\",{}", spec.tag(), a.f, a.g, d)])
}

enum FamilyMode {
    Scale(Distribution),
    Location(Distribution),
}

fn family_base(family: &str, base: Option<&str>) -> Result<FamilyMode, Failure> {
    let f = family.to_ascii_lowercase();
    let (name, scale) = if let Some(n) = f.strip_suffix("-scale") {
        (n, true)
    } else if let Some(n) = f.strip_suffix("-location") {
        (n, false)
    } else {
        return Err(Failure::Usage(format!("family `{family}` must end in -scale or -location")));
    };
    let d = match base {
        Some(b) => parse_distribution(b)?,
        None => match scale_sweep_families().into_iter().find(|d| d.name() == name) {
            Some(d) => d,
            None => match name {
                "cauchy" => make_family("cauchy", &[0.0, 1.0])?,
                "log-normal" => make_family("log-normal", &[0.0, 1.0])?,
                _ => return Err(Failure::Usage(format!("family `{family}` needs --base"))),
            },
        },
    };
    Ok(if scale { FamilyMode::Scale(d) } else { FamilyMode::Location(d) })
}

fn print_verdicts(cli: &Cli, rows: &[VerdictRow]) -> Run {
    for r in rows {
        println!(
            "asymmetry {} {} {}={}: {} (lhs {}, rhs {}, margin {})",
            r.loss,
            r.family,
            r.mode,
            num(r.param),
            r.verdict.comparison,
            num(r.verdict.lhs),
            num(r.verdict.rhs),
            num(r.verdict.margin)
        );
    }
    let csv: Vec<String> = rows.iter().map(|r| r.csv()).collect();
    artifact(cli, "verdicts", VerdictRow::CSV_HEADER, &csv)
}

fn cmd_asymmetry(cli: &Cli, a: &AsymmetryArgs) -> Run {
    let specs = losses(&a.loss)?;
    if let Some(sweep) = &a.sweep {
        let rows = match sweep.as_str() {
            "scale" => scale_sweep(&scale_specs(), &scale_sweep_families(), &[1.5, 2.0, 5.0])?,
            "location" => {
                let bases = [
                    make_family("normal", &[0.0, 1.0])?,
                    make_family("laplace", &[0.0, 1.0])?,
                    make_family("uniform", &[-1.0, 1.0])?,
                ];
                location_sweep(&specs, &bases, &[0.5, 2.0])?
            }
            "expfam" => {
                let mut rows = Vec::new();
                for (name, fam) in catalog_fixtures() {
                    for eta in [0.5, 1.0, 2.0] {
                        for theta in [1.5, 3.0] {
                            rows.push(VerdictRow {
                                loss: "log".into(),
                                family: format!("{name}(theta={theta})"),
                                mode: "eta".into(),
                                param: eta,
                                verdict: expfam_param_verdict(&fam, fam.from_natural(eta), theta)?,
                            });
                        }
                    }
                }
                rows
            }
            other => return Err(Failure::Usage(format!("unknown sweep `{other}`"))),
        };
        return print_verdicts(cli, &rows);
    }
    if let Some(name) = &a.expfam {
        let fam = expfam_descriptor(name, &a.fixed)?;
        let theta = a.theta.ok_or_else(|| Failure::Usage("--expfam needs --theta".into()))?;
        let default_eta = if fam.omega() == Omega::Real { 0.0 } else { 1.0 };
        let eta = a.eta.unwrap_or(default_eta);
        let (verdict, mode) = if a.natural {
            (expfam_verdict(&fam, eta, theta)?, "eta")
        } else {
            (expfam_param_verdict(&fam, fam.from_natural(eta), theta)?, "param")
        };
        return print_verdicts(
            cli,
            &[VerdictRow {
                loss: "log".into(),
                family: format!("{name}(theta={theta})"),
                mode: mode.into(),
                param: eta,
                verdict,
            }],
        );
    }
    let family = a
        .family
        .as_deref()
        .ok_or_else(|| Failure::Usage("asymmetry needs --family, --expfam or --sweep".into()))?;
    let mut rows = Vec::new();
    for spec in &specs {
        let row = match family_base(family, a.base.as_deref())? {
            FamilyMode::Scale(d) => {
                let sigma = a.sigma.ok_or_else(|| Failure::Usage("scale family needs --sigma".into()))?;
                VerdictRow {
                    loss: spec.tag(),
                    family: family.into(),
                    mode: "scale".into(),
                    param: sigma,
                    verdict: scale_verdict(spec, &ScaleFamily::new(d), sigma)?,
                }
            }
            FamilyMode::Location(d) => {
                let mu = a.mu.ok_or_else(|| Failure::Usage("location family needs --mu".into()))?;
                let verdict = location_verdict(spec, &LocationFamily::new(d), mu)?;
                if verdict.asymmetric_base {
                    log::warn!("base density of {family} is not symmetric; log-loss verdict reflects that");
                }
                VerdictRow {
                    loss: spec.tag(),
                    family: family.into(),
                    mode: "location".into(),
                    param: mu,
                    verdict,
                }
            }
        };
        rows.push(row);
    }
    print_verdicts(cli, &rows)
}

const HEDGE_HEADER: &str = "loss,family,shift,sigma_star,baseline,hedged,direction";

fn cmd_hedge(cli: &Cli, a: &HedgeArgs) -> Run {
    if let Some(name) = &a.expfam {
        let fam = expfam_descriptor(name, &a.fixed)?;
        let center = a.center.unwrap_or(if fam.omega() == Omega::Real { 0.0 } else { 1.0 });
        let shift = ShiftLaw::parse(&a.shift, 1.0)?;
        let r = hedge_expfam_optimum(&fam, &shift, center)?;
        println!(
            "hedge log {name} {}: η*={} (baseline {}, hedged {}, {})",
            shift.tag(),
            num(r.optimum),
            num(r.baseline_loss),
            num(r.hedged_loss),
            r.direction
        );
        return artifact(
            cli,
            "hedge",
            HEDGE_HEADER,
            &[format!(
                "log,{name},{},{},{},{},{}",
                shift.tag(),
                r.optimum,
                r.baseline_loss,
                r.hedged_loss,
                r.direction
            )],
        );
    }
    let family = a
        .family
        .as_deref()
        .ok_or_else(|| Failure::Usage("hedge needs --family or --expfam".into()))?;
    let FamilyMode::Scale(base) = family_base(family, a.base.as_deref())? else {
        return Err(Failure::Usage("hedging needs a -scale family".into()));
    };
    let shift = ShiftLaw::parse(&a.shift, a.center.unwrap_or(1.0))?;
    let fam = ScaleFamily::new(base);
    let mut rows = Vec::new();
    for spec in losses(&a.loss)? {
        let r = optimal_scale(&spec, &fam, &shift)?;
        println!(
            "hedge {} {family} {}: σ*={} (baseline {}, hedged {}, {})",
            spec.tag(),
            shift.tag(),
            num(r.optimum),
            num(r.baseline_loss),
            num(r.hedged_loss),
            r.direction
        );
        rows.push(format!(
            "{},{family},{},{},{},{},{}",
            spec.tag(),
            shift.tag(),
            r.optimum,
            r.baseline_loss,
            r.hedged_loss,
            r.direction
        ));
    }
    artifact(cli, "hedge", HEDGE_HEADER, &rows)
}

fn parse_axis(text: Option<&str>, default: Vec<f64>) -> Result<Vec<f64>, Failure> {
    let Some(t) = text else { return Ok(default) };
    let parts: Vec<&str> = t.split(':').collect();
    let bad = || Failure::Usage(format!("axis `{t}` must be lo:hi:n"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    Ok(linspace(lo, hi, n))
}

fn write_grid(cli: &Cli, tag: &str, grid: &HeatmapGrid) -> Run {
    match grid.argmin_point() {
        Some((m, s)) => println!(
            "heatmap {tag}: argmin at mu={}, sigma={} (loss {})",
            num(m),
            num(s),
            num(grid.cell(m, s))
        ),
        None => println!("heatmap {tag}: no finite cell"),
    }
    artifact(cli, &format!("heatmap_{}", file_tag(tag)), HeatmapGrid::CSV_HEADER, &grid.csv_rows())
}

fn file_tag(tag: &str) -> String {
    tag.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' }).collect()
}

fn cmd_heatmap(cli: &Cli, a: &HeatmapArgs) -> Run {
    let specs = losses(&a.loss)?;
    let (dm, ds) = default_axes();
    let mu = parse_axis(a.mu_axis.as_deref(), dm)?;
    let sigma = parse_axis(a.sigma_axis.as_deref(), ds)?;
    if let Some(p) = a.asymmetric_laplace {
        let grids = asymmetric_laplace_grid(p, &specs, &mu, &sigma)?;
        for (spec, g) in specs.iter().zip(&grids) {
            write_grid(cli, &format!("{}-al{p}", spec.tag()), g)?;
        }
        return Ok(());
    }
    let pairs = match (&a.forecasts, &a.targets, a.synthetic) {
        (Some(f), Some(t), None) => {
            let (forecasts, mut rejected) = read_forecasts(f)?;
            let (targets, rej_t) = read_targets(t)?;
            rejected.extend(rej_t);
            let targets = standardize_target_map(&targets, &RollingStandardizer { window: a.window })?;
            let (pairs, rej_p) = pair_forecasts(&forecasts, &targets);
            rejected.extend(rej_p);
            sidecar(cli, &rejected)?;
            if pairs.is_empty() {
                return Err(Error::Data("no usable (forecast, target) pairs".into()).into());
            }
            pairs.into_iter().map(|p| (p.forecast, p.observed)).collect()
        }
        (None, None, Some(n)) => synthetic_normal_pairs(n, cli.seed),
        (None, None, None) => synthetic_normal_pairs(10_000, cli.seed),
        _ => {
            return Err(Failure::Usage(
                "give --forecasts with --targets, or --synthetic, or --asymmetric-laplace".into(),
            ))
        }
    };
    for spec in &specs {
        let g = heatmap(spec, &pairs, &mu, &sigma)?;
        write_grid(cli, &spec.tag(), &g)?;
    }
    Ok(())
}

fn sidecar(cli: &Cli, rejected: &[RejectedRecord]) -> Run {
    if rejected.is_empty() {
        return Ok(());
    }
    eprintln!("{} record(s) rejected", rejected.len());
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        write_rejected(&dir.join("rejected.csv"), rejected)?;
    }
    Ok(())
}

fn cmd_rank(cli: &Cli, a: &RankArgs) -> Run {
    let specs = losses(&a.loss)?;
    let (forecasts, mut rejected) = read_forecasts(&a.forecasts)?;
    let (targets, rej_t) = read_targets(&a.targets)?;
    rejected.extend(rej_t);
    let (pairs, rej_p) = pair_forecasts(&forecasts, &targets);
    rejected.extend(rej_p);
    sidecar(cli, &rejected)?;
    if pairs.is_empty() {
        return Err(Error::Data("no usable (forecast, target) pairs".into()).into());
    }
    let scored = score_pairs(&pairs, &specs)?;
    let rows = ranking_table(&scored)?;
    for r in &rows {
        println!(
            "rank {} {}: mean standardized rank {}, variance rank {}",
            r.loss_tag,
            r.forecaster,
            num(r.mean_std_rank),
            num(r.mean_std_variance_rank)
        );
    }
    let csv: Vec<String> = rows.iter().map(RankingRow::csv).collect();
    artifact(cli, "ranking", RankingRow::CSV_HEADER, &csv)
}

fn cmd_dispersion(cli: &Cli, a: &DispersionArgs) -> Run {
    let kind = DivergenceKind::parse(&a.divergence)?;
    let records: Vec<(String, DispersionRecord)> = match (&a.samples, a.synthetic) {
        (Some(path), None) => {
            let units: BTreeMap<String, (Vec<f64>, Vec<f64>)> = read_dispersion_samples(path)?;
            let mut out = Vec::new();
            for (unit, (f, g)) in units {
                out.push((unit, dispersion_flip(&f, &g, kind)?));
            }
            out
        }
        (None, Some(n)) => synthetic_flips(a.ratio, 1.0, a.draws, n, kind, cli.seed)?
            .into_iter()
            .enumerate()
            .map(|(i, r)| (format!("rep{i}"), r))
            .collect(),
        _ => return Err(Failure::Usage("give exactly one of --samples or --synthetic".into())),
    };
    let improved = records.iter().filter(|(_, r)| r.d_flipped < r.d_original).count();
    println!(
        "dispersion {}: flipped forecast closer in {improved}/{} unit(s)",
        kind.as_str(),
        records.len()
    );
    let csv: Vec<String> = records.iter().map(|(u, r)| r.csv(u, kind)).collect();
    artifact(cli, "dispersion", DispersionRecord::CSV_HEADER, &csv)
}

fn cmd_selftest(cli: &Cli) -> Run {
    let outcomes = run_selftest(cli.seed);
    let mut failed = 0;
    for o in &outcomes {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("{tag} [{}] {}: {}", o.module, o.name, o.detail);
        failed += usize::from(!o.passed);
    }
    let csv: Vec<String> = outcomes
        .iter()
        .map(|o| format!("{},\"{}\",{},\"{}\"", o.module, o.name, o.passed, o.detail.replace('"', "'")))
        .collect();
    artifact(cli, "selftest", "module,check,passed,detail", &csv)?;
    if failed > 0 {
        Err(Failure::SelftestFailed(failed))
    } else {
        Ok(())
    }
}
