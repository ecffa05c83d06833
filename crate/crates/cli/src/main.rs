//! `sparselab`: run one experiment, write its CSV, report pass or fail.

mod args;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand};
use sparselab_core::averaging::{bilinear_spherical_average, Quadrature};
use sparselab_core::experiments::{
    continuity_decay_run, lp_decay_suite, pointwise_bound_run, radial_bump,
    radius_perturbation_run, sharpness_run, sparse_suite_run, write_csv, ContinuityConfig,
    ContinuityInput, CsvRow, ExtremizerConstants, ExtremizerKind, PerturbationConfig,
    SharpnessConfig, SparseSuiteConfig,
};
use sparselab_core::spectral::CircleRule;
use sparselab_core::{
    make_indicator, Exponent, ExponentTriple, GridFunction, GridSpec,
    LabError, RegionSpec,
};

#[derive(Parser, Debug)]
#[command(name = "sparselab", version, about = "Numerical experiments for bilinear spherical maximal functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Flat `key = value` file; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    /// Samples per axis.
    #[arg(long)]
    n: Option<usize>,
    /// Half-width of the grid box.
    #[arg(long = "box")]
    half_width: Option<f64>,
    #[arg(long, default_value = "2")]
    p: Exponent,
    #[arg(long, default_value = "2")]
    q: Exponent,
    #[arg(long, default_value = "2")]
    r: Exponent,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "SPARSELAB_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lower and upper scaling of an extremizer family.
    Sharpness {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kind: ExtremizerKind,
        #[arg(long, default_value = "2^-3..2^-7")]
        deltas: String,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long)]
        c2: Option<f64>,
    },
    /// Decay of the continuity norm in the translation `h`.
    Continuity {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "2^-4..2^-8")]
        hs: String,
        #[arg(long, default_value = "indicator")]
        input: ContinuityInput,
    },
    /// Littlewood–Paley decay in one dimension.
    LpDecay {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "1..6")]
        ks: String,
        /// Random input pairs, seeded from `--seed` upward.
        #[arg(long, default_value_t = 3)]
        cases: usize,
    },
    /// Calderón–Zygmund, sparsity and domination checks on random inputs.
    SparseCheck {
        #[command(flatten)]
        common: Common,
        /// `randomN` for `N` seeded cases.
        #[arg(long, default_value = "random20")]
        suite: String,
        #[arg(long)]
        c0: Option<f64>,
    },
    /// Scaling of radius differences of the linear spherical average.
    RadiusPerturbation {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "0.05,0.1,0.2,0.4")]
        gammas: String,
        #[arg(long, default_value = "2^-1..2^-3")]
        epss: String,
    },
    /// Pointwise domination by Hardy–Littlewood times linear maximal.
    PointwiseBound {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        cases: usize,
    },
    /// Evaluate `A_t(f, g)` once and write the grid.
    Average {
        #[command(flatten)]
        common: Common,
        /// Grid CSV for `f`; the indicator of the ball of radius 0.8 when absent.
        #[arg(long)]
        f: Option<PathBuf>,
        #[arg(long)]
        g: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
    },
}

/// Configuration problems exit with 2, failed tolerances with 1.
enum Failure {
    Config(anyhow::Error),
    Tolerance,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        Failure::Config(e.into())
    }
}

struct Report {
    rows: Vec<CsvRow>,
    summary: String,
    pass: bool,
}

fn triple(c: &Common) -> Result<ExponentTriple> {
    Ok(ExponentTriple::new(c.p, c.q, c.r)?)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn sharpness(
    c: &Common,
    kind: ExtremizerKind,
    deltas: &str,
    consts: (Option<f64>, Option<f64>, Option<f64>),
) -> Result<Report, Failure> {
    let d = c.d.unwrap_or(2);
    let t = triple(c)?;
    let deltas = args::parse_scales(deltas)?;
    if c.half_width.is_some() {
        log::warn!("--box is ignored; each extremizer family has a fixed box");
    }
    let mut constants = ExtremizerConstants::calibrated(kind, d);
    constants.c = consts.0.unwrap_or(constants.c);
    constants.c1 = consts.1.unwrap_or(constants.c1);
    constants.c2 = consts.2.unwrap_or(constants.c2);
    let cfg = SharpnessConfig {
        n: c.n.unwrap_or(1024),
        constants: Some(constants),
        ..Default::default()
    };
    let run = sharpness_run(kind, d, &deltas, &t, &cfg)?;
    let tol = if kind == ExtremizerKind::KnappBoxes { 0.25 } else { 0.2 };
    let (lo, up) = (kind.lower_exponent(d), kind.upper_exponent(d, &t));
    let pass = (run.lower.slope - lo).abs() <= tol && (run.upper.slope - up).abs() <= 0.05;
    Ok(Report {
        rows: run.csv_rows(),
        summary: format!(
            "sharpness {kind} d={d}: lower slope {:.3} (target {lo} ± {tol}), upper slope {:.3} (target {up} ± 0.05): {}",
            run.lower.slope,
            run.upper.slope,
            verdict(pass)
        ),
        pass,
    })
}

fn continuity(c: &Common, hs: &str, input: ContinuityInput) -> Result<Report, Failure> {
    let d = c.d.unwrap_or(2);
    let t = triple(c)?;
    let hs = args::parse_scales(hs)?;
    let mut cfg = ContinuityConfig::default();
    cfg.n = c.n.unwrap_or(cfg.n);
    cfg.half_width = c.half_width.unwrap_or(cfg.half_width);
    let (rows, fit) = continuity_decay_run(d, &t, &hs, input, &cfg)?;
    let pass = match input {
        ContinuityInput::Indicator => fit.slope > 0.05,
        ContinuityInput::Gaussian => (fit.slope - 1.0).abs() <= 0.15,
    };
    let target = match input {
        ContinuityInput::Indicator => "> 0.05",
        ContinuityInput::Gaussian => "1 ± 0.15",
    };
    Ok(Report {
        rows: rows
            .iter()
            .map(|&(h, v)| CsvRow {
                experiment: "continuity".into(),
                kind: input.name().into(),
                d,
                triple: Some(t),
                scale: h,
                lower_value: v,
                upper_value: fit.predict(h),
            })
            .collect(),
        summary: format!(
            "continuity {} d={d} {t}: eta {:.3} (target {target}): {}",
            input.name(),
            fit.slope,
            verdict(pass)
        ),
        pass,
    })
}

fn lp_decay(c: &Common, ks: &str, cases: usize) -> Result<Report, Failure> {
    if c.d.is_some_and(|d| d != 1) {
        return Err(Failure::Config(anyhow::anyhow!("lp-decay runs in d = 1 only")));
    }
    let ks = args::parse_ints(ks)?;
    let n = c.n.unwrap_or(1 << 15);
    if cases == 0 {
        return Err(Failure::Config(anyhow::anyhow!("--cases must be positive")));
    }
    let seeds: Vec<u64> = (0..cases as u64).map(|i| c.seed + i).collect();
    let suite = lp_decay_suite(&seeds, n, &ks, &CircleRule::default())?;
    let mut rows = Vec::new();
    for case in &suite {
        for (name, fit) in [("projection", &case.projection), ("identity", &case.identity)] {
            rows.extend(fit.samples.iter().map(|&(s, v)| CsvRow {
                experiment: "lp-decay".into(),
                kind: format!("{name}-seed{}", case.seed),
                d: 1,
                triple: None,
                scale: s,
                lower_value: v,
                upper_value: fit.predict(s),
            }));
        }
    }
    let worst = suite.iter().map(|c| c.projection.slope).fold(f64::NEG_INFINITY, f64::max);
    let control = suite.iter().map(|c| c.identity.slope.abs()).fold(0.0, f64::max);
    let pass = worst <= -0.1 && control < 0.02;
    Ok(Report {
        rows,
        summary: format!(
            "lp-decay: largest slope {worst:.3} (target <= -0.1), control {control:.2e} (target < 0.02): {}",
            verdict(pass)
        ),
        pass,
    })
}

fn sparse_check(c: &Common, suite: &str, c0: Option<f64>) -> Result<Report, Failure> {
    let d = c.d.unwrap_or(1);
    let t = triple(c)?;
    let cases: usize = suite
        .strip_prefix("random")
        .and_then(|n| n.parse().ok())
        .with_context(|| format!("unknown suite {suite:?}; expected randomN"))?;
    let mut cfg = SparseSuiteConfig::for_dimension(d);
    cfg.cases = cases;
    cfg.seed = c.seed;
    cfg.n = c.n.unwrap_or(cfg.n);
    cfg.c0 = c0.unwrap_or(cfg.c0);
    let report = sparse_suite_run(d, &t, &cfg)?;
    let eta_floor = 2f64.powi(-(d as i32) - 2);
    let pass = report.all_cz_passed()
        && report.all_sparse()
        && report.min_eta() >= eta_floor
        && report.max_ratio_change() < 0.25;
    let mut rows = Vec::new();
    for (i, case) in report.cases.iter().enumerate() {
        for (n, ratio) in [(cfg.n, case.ratio_coarse), (2 * cfg.n, case.ratio_fine)] {
            rows.push(CsvRow {
                experiment: "sparse-check".into(),
                kind: format!("case{i}"),
                d,
                triple: Some(t),
                scale: n as f64,
                lower_value: ratio,
                upper_value: case.eta,
            });
        }
    }
    Ok(Report {
        rows,
        summary: format!(
            "sparse-check d={d} {suite}: max domination ratio {:.4} (change {:.2}% under doubling), min eta {:.4} (>= {eta_floor}), cz {}, sparse {}: {}",
            report.max_ratio(),
            100.0 * report.max_ratio_change(),
            report.min_eta(),
            report.all_cz_passed(),
            report.all_sparse(),
            verdict(pass)
        ),
        pass,
    })
}

fn radius_perturbation(c: &Common, gammas: &str, epss: &str) -> Result<Report, Failure> {
    if c.d.is_some_and(|d| d != 2) {
        return Err(Failure::Config(anyhow::anyhow!("radius-perturbation runs in d = 2 only")));
    }
    let gammas = args::parse_scales(gammas)?;
    let epss = args::parse_scales(epss)?;
    let mut cfg = PerturbationConfig::default();
    cfg.n = c.n.unwrap_or(cfg.n);
    cfg.half_width = c.half_width.unwrap_or(cfg.half_width);
    let run = radius_perturbation_run(c.p, c.r, &gammas, &epss, &radial_bump, &cfg)?;
    let target = 2.0 * c.r.recip().to_f64() - 2.0 * c.p.recip().to_f64();
    let eps_ok = run.eps_fits.iter().all(|(_, f)| (f.slope - target).abs() <= 0.2);
    let gamma_ok = run.gamma_fits.iter().all(|(_, f)| f.slope > 0.0);
    let pass = eps_ok && gamma_ok;
    let t = ExponentTriple::new(c.p, c.p, c.r)?;
    let rows = run
        .rows
        .iter()
        .map(|row| {
            let fit = run.gamma_fits.iter().find(|f| f.0 == row.eps).map(|f| &f.1);
            CsvRow {
                experiment: "radius-perturbation".into(),
                kind: format!("eps={:e}", row.eps),
                d: 2,
                triple: Some(t),
                scale: row.gamma,
                lower_value: row.value,
                upper_value: fit.map_or(f64::NAN, |f| f.predict(row.gamma)),
            }
        })
        .collect();
    let slopes = |fits: &[(f64, sparselab_core::ScalingFit)]| {
        fits.iter()
            .map(|(v, f)| format!("{v}:{:.3}", f.slope))
            .collect::<Vec<_>>()
            .join(" ")
    };
    Ok(Report {
        rows,
        summary: format!(
            "radius-perturbation p={} r={}: eps slopes [{}] (target {target} ± 0.2), gamma slopes [{}] (> 0): {}",
            c.p,
            c.r,
            slopes(&run.eps_fits),
            slopes(&run.gamma_fits),
            verdict(pass)
        ),
        pass,
    })
}

fn pointwise(c: &Common, cases: usize) -> Result<Report, Failure> {
    if c.d.is_some_and(|d| d != 2) {
        return Err(Failure::Config(anyhow::anyhow!("pointwise-bound runs in d = 2 only")));
    }
    let n = c.n.unwrap_or(16);
    let report = pointwise_bound_run(cases, c.seed, n)?;
    let pass = report.violations == 0 && report.max_ratio <= 10.0;
    Ok(Report {
        rows: vec![CsvRow {
            experiment: "pointwise-bound".into(),
            kind: format!("random{cases}"),
            d: 2,
            triple: None,
            scale: n as f64,
            lower_value: report.max_ratio,
            upper_value: 10.0,
        }],
        summary: format!(
            "pointwise-bound: C = {:.4} (target <= 10), {} violations: {}",
            report.max_ratio,
            report.violations,
            verdict(pass)
        ),
        pass,
    })
}

fn read_grid(path: &PathBuf) -> Result<GridFunction> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(GridFunction::read_csv(BufReader::new(file))?)
}

fn average(c: &Common, f: Option<&PathBuf>, g: Option<&PathBuf>, t: f64) -> Result<(), Failure> {
    let default = || -> Result<GridFunction> {
        let d = c.d.unwrap_or(2);
        let spec = GridSpec::centered(d, c.half_width.unwrap_or(2.0), c.n.unwrap_or(128))?;
        Ok(make_indicator(&RegionSpec::ball(&vec![0.0; d], 0.8), &spec)?)
    };
    let f = match f {
        Some(p) => read_grid(p)?,
        None => default()?,
    };
    let g = match g {
        Some(p) => read_grid(p)?,
        None => f.clone(),
    };
    let out = bilinear_spherical_average(&f, &g, t, &Quadrature::default())?;
    let sink: Box<dyn Write> = match &c.out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    out.write_csv(BufWriter::new(sink))?;
    let msg = format!("average t={t}: {} samples, max {:.6}", out.spec().len(), out.max_abs());
    if c.out.is_some() {
        println!("{msg}");
    } else {
        eprintln!("{msg}");
    }
    Ok(())
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Sharpness { common, .. }
        | Command::Continuity { common, .. }
        | Command::LpDecay { common, .. }
        | Command::SparseCheck { common, .. }
        | Command::RadiusPerturbation { common, .. }
        | Command::PointwiseBound { common, .. }
        | Command::Average { common, .. } => common,
    }
}

fn execute(cmd: &Command) -> Result<(), Failure> {
    let c = common(cmd);
    if let Some(n) = c.threads {
        if n == 0 {
            return Err(Failure::Config(anyhow::anyhow!("--threads must be positive")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("thread pool already initialized")?;
    }
    let report = match cmd {
        Command::Sharpness {
            kind, deltas, c: k, c1, c2, ..
        } => sharpness(c, *kind, deltas, (*k, *c1, *c2))?,
        Command::Continuity { hs, input, .. } => continuity(c, hs, *input)?,
        Command::LpDecay { ks, cases, .. } => lp_decay(c, ks, *cases)?,
        Command::SparseCheck { suite, c0, .. } => sparse_check(c, suite, *c0)?,
        Command::RadiusPerturbation { gammas, epss, .. } => radius_perturbation(c, gammas, epss)?,
        Command::PointwiseBound { cases, .. } => pointwise(c, *cases)?,
        Command::Average { f, g, t, .. } => return average(c, f.as_ref(), g.as_ref(), *t),
    };
    match &c.out {
        Some(p) => {
            let file = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            write_csv(&report.rows, BufWriter::new(file))?;
            println!("{}", report.summary);
        }
        None => {
            write_csv(&report.rows, io::stdout().lock())?;
            eprintln!("{}", report.summary);
        }
    }
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Tolerance)
    }
}

/// Pull `--config PATH` out of the arguments and splice its entries in.
fn resolve_args(raw: Vec<String>) -> Result<Vec<String>> {
    let mut args = Vec::with_capacity(raw.len());
    let mut config = None;
    let mut it = raw.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            config = Some(it.next().context("--config needs a path")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            config = Some(p.to_string());
        } else {
            args.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read config {path}"))?;
    let map = args::parse_config(&text)?;
    if map.contains_key("config") {
        bail!("config files cannot include other configs");
    }
    let cmd = Cli::command();
    let names: Vec<&str> = cmd.get_subcommands().map(|s| s.get_name()).collect();
    args::merge_config(&args, &map, &names)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match resolve_args(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    // clap exits with 2 on usage errors
    let cli = Cli::parse_from(args);
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Tolerance) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
