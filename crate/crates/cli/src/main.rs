use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use curvflow::curvature::{q_tilde_unchecked, CurvatureOperator};
use curvflow::flow::{self, FlowTrajectory, Method, StepPolicy, Termination};
use curvflow::holonomy::{holonomy_preservation_check_with, HolonomyReport};
use curvflow::io::{read_operator, write_operator, OperatorFile};
use curvflow::models::{self, ProductSpec};
use curvflow::stability::{self, StabilityReport};
use curvflow::NumericPolicy;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

mod config;
mod reproduce;

use config::{FileConfig, DEFAULT_SEED};

const EXIT_ERROR: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 3;
const EXIT_BLOWUP: u8 = 10;
const EXIT_UNDERFLOW: u8 = 11;

#[derive(Parser)]
#[command(name = "curvflow", version, about = "Curvature operators and the ODE dR/dt = R² + R#")]
struct Cli {
    /// JSON config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for random operators.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for independent runs.
    #[arg(long, global = true, env = "CURVFLOW_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct an operator and write it as JSON.
    Build {
        #[command(subcommand)]
        model: Model,
    },
    /// Integrate the raw or normalized flow and write a CSV trajectory.
    Flow(FlowArgs),
    /// Jacobian spectrum and stability verdict at a zero of Q~.
    Stability {
        /// Operator files; reports come out in input order.
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Holonomy algebra and the check hol(Q(R)) ⊆ hol(R).
    Holonomy {
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one of the built-in verification suites.
    Reproduce {
        #[arg(value_enum)]
        target: reproduce::Target,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BuildOut {
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scale to scalar curvature 1.
    #[arg(long)]
    normalize: bool,
}

#[derive(Subcommand)]
enum Model {
    /// Round sphere of dimension n.
    Sphere {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        out: BuildOut,
    },
    /// Product of spheres and flat factors, e.g. `s3:1,flat:2`.
    Product {
        #[arg(long)]
        factors: ProductSpec,
        #[command(flatten)]
        out: BuildOut,
    },
    /// Complex projective plane.
    Cp2 {
        #[command(flatten)]
        out: BuildOut,
    },
    /// Random operator satisfying the Bianchi identity.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Multiple of the identity added afterwards.
        #[arg(long, default_value_t = 0.0)]
        shift: f64,
        #[command(flatten)]
        out: BuildOut,
    },
    /// Read an operator file, validating it.
    Json {
        #[arg(long)]
        input: PathBuf,
        /// Project onto the Bianchi subspace instead of rejecting.
        #[arg(long)]
        project: bool,
        #[command(flatten)]
        out: BuildOut,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FlowMode {
    Raw,
    Normalized,
}

#[derive(Args)]
struct FlowArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "raw")]
    mode: FlowMode,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// `rk4` (fixed step) or `rk45` (adaptive).
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    sample_every: Option<usize>,
    #[arg(long)]
    blowup_norm: Option<f64>,
    /// Add a column with the distance of R/|R_W| to the initial unit Weyl part.
    #[arg(long)]
    weyl_normalize: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON-lines file of full operators, one per `snapshot_every` samples.
    #[arg(long)]
    snapshots: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    snapshot_every: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = FileConfig::load(cli.config.as_deref())?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    if let Some(w) = cli.workers.or(cfg.workers) {
        if w == 0 {
            bail!("--workers must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global()?;
    }
    let policy = cfg.policy();
    policy.validate()?;
    match cli.command {
        Command::Build { model } => build(model, seed, &policy),
        Command::Flow(args) => run_flow(args, &cfg, &policy),
        Command::Stability { inputs, out } => run_stability(&inputs, out.as_deref(), &policy),
        Command::Holonomy { inputs, out } => run_holonomy(&inputs, out.as_deref(), &policy),
        Command::Reproduce { target, n, k, out } => {
            let params = reproduce::Params { seed, n, k, policy };
            let outcome = reproduce::run(target, &params)?;
            write_json(out.as_deref(), &serde_json::to_value(&outcome)?)?;
            for c in &outcome.checks {
                eprintln!(
                    "{} {} (value {:e}, tolerance {:e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.tolerance
                );
            }
            let failed = outcome.checks.iter().filter(|c| !c.passed).count();
            eprintln!("{failed} of {} checks failed", outcome.checks.len());
            Ok(if outcome.passed { 0 } else { EXIT_CHECK_FAILED })
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json(out: Option<&Path>, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    match out {
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "{text}")?;
            w.flush()?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn load(path: &Path, policy: &NumericPolicy) -> Result<CurvatureOperator> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let (r, _) = read_operator(BufReader::new(file), policy, false).with_context(|| format!("reading {}", path.display()))?;
    Ok(r)
}

fn summarize(r: &CurvatureOperator) -> Result<()> {
    let parts = r.decompose()?;
    eprintln!("n = {}", r.n());
    eprintln!("s = {}", r.scalar());
    eprintln!("|Ric0| = {}", r.ricci_traceless().norm_squared().sqrt());
    eprintln!("|R_W| = {}", parts.r_w.norm());
    eprintln!("Bianchi residual = {:e}", r.bianchi_residual());
    let mut spec = r.spectrum();
    spec.sort_by(f64::total_cmp);
    eprintln!("spectrum = {spec:?}");
    Ok(())
}

fn build(model: Model, seed: u64, policy: &NumericPolicy) -> Result<u8> {
    let mut meta = Map::new();
    let (r, out) = match model {
        Model::Sphere { n, out } => {
            meta.insert("model".into(), json!(format!("sphere {n}")));
            (models::sphere(n, out.normalize)?, out)
        }
        Model::Product { factors, out } => {
            meta.insert("model".into(), json!(factors.to_string()));
            (models::product(&factors, out.normalize)?, out)
        }
        Model::Cp2 { out } => {
            meta.insert("model".into(), json!("cp2"));
            (models::cp2(out.normalize)?, out)
        }
        Model::Random { n, scale, shift, out } => {
            meta.insert("model".into(), json!("random"));
            meta.insert("seed".into(), json!(seed));
            let r = models::random_bianchi_shifted(n, seed, scale, shift)?;
            (normalize_if(r, out.normalize)?, out)
        }
        Model::Json { input, project, out } => {
            let file = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let (r, m) = read_operator(BufReader::new(file), policy, project)
                .with_context(|| format!("reading {} (pass --project to project onto the Bianchi subspace)", input.display()))?;
            meta = m;
            (normalize_if(r, out.normalize)?, out)
        }
    };
    meta.insert("normalized".into(), json!(out.normalize));
    summarize(&r)?;
    match out.out {
        Some(p) => {
            let mut w = create(&p)?;
            write_operator(&mut w, &r, meta)?;
            w.flush()?;
        }
        None => write_operator(std::io::stdout().lock(), &r, meta)?,
    }
    Ok(0)
}

fn normalize_if(r: CurvatureOperator, normalize: bool) -> Result<CurvatureOperator> {
    if !normalize {
        return Ok(r);
    }
    let s = r.scalar();
    if s <= 0.0 {
        bail!("scalar curvature {s} is not positive; cannot normalize");
    }
    Ok(r.scaled(1.0 / s))
}

fn step_policy(args: &FlowArgs, cfg: &FileConfig) -> Result<StepPolicy> {
    let step = args.step.or(cfg.step).unwrap_or(1e-3);
    let mut p = StepPolicy::rk4(step);
    p.method = match args.method.as_deref().or(cfg.method.as_deref()).unwrap_or("rk4") {
        "rk4" => Method::Rk4,
        "rk45" => Method::Rk45,
        other => bail!("unknown method {other:?}, expected rk4 or rk45"),
    };
    if let Some(t) = args.tolerance.or(cfg.tolerance) {
        p.tolerance = t;
    }
    if let Some(k) = args.sample_every.or(cfg.sample_every) {
        p.sample_every = k;
    }
    if let Some(b) = args.blowup_norm.or(cfg.blowup_norm) {
        p.blowup_norm = b;
    }
    p.validate()?;
    Ok(p)
}

fn run_flow(args: FlowArgs, cfg: &FileConfig, policy: &NumericPolicy) -> Result<u8> {
    let r0 = load(&args.input, policy)?;
    let t_end = args.t_end.or(cfg.t_end).context("--t-end is required (flag or config)")?;
    let sp = step_policy(&args, cfg)?;
    let traj = match args.mode {
        FlowMode::Raw => flow::integrate_raw(&r0, t_end, &sp)?,
        FlowMode::Normalized => flow::integrate_normalized(&r0, t_end, &sp)?,
    };
    let weyl_target = if args.weyl_normalize {
        let w = r0.decompose()?.r_w;
        let norm = w.norm();
        if norm == 0.0 {
            bail!("--weyl-normalize needs an initial operator with nonzero Weyl part");
        }
        Some(w.scaled(1.0 / norm))
    } else {
        None
    };
    match &args.out {
        Some(p) => {
            let mut w = create(p)?;
            write_trajectory(&mut w, &traj, weyl_target.as_ref())?;
            w.flush()?;
        }
        None => write_trajectory(std::io::stdout().lock(), &traj, weyl_target.as_ref())?,
    }
    if let Some(p) = &args.snapshots {
        if args.snapshot_every == 0 {
            bail!("--snapshot-every must be at least 1");
        }
        let mut w = create(p)?;
        for s in traj.samples.iter().step_by(args.snapshot_every) {
            let mut meta = Map::new();
            meta.insert("time".into(), json!(s.time));
            serde_json::to_writer(&mut w, &OperatorFile::from_operator(&s.operator, meta))?;
            writeln!(w)?;
        }
        w.flush()?;
    }
    eprintln!(
        "termination: {:?} at {} after {} samples",
        traj.termination,
        traj.last().time,
        traj.samples.len()
    );
    Ok(match traj.termination {
        Termination::ReachedEnd => 0,
        Termination::BlowUp => EXIT_BLOWUP,
        Termination::StepUnderflow => EXIT_UNDERFLOW,
    })
}

fn write_trajectory<W: Write>(mut w: W, traj: &FlowTrajectory, weyl: Option<&CurvatureOperator>) -> Result<()> {
    let Some(target) = weyl else {
        traj.write_csv(w)?;
        return Ok(());
    };
    let mut buf = Vec::new();
    traj.write_csv(&mut buf)?;
    let text = String::from_utf8(buf)?;
    let mut lines = text.lines();
    writeln!(w, "{},weyl_target_distance", lines.next().unwrap_or_default())?;
    for (line, s) in lines.zip(&traj.samples) {
        let norm_w = s.diagnostics.norm_w;
        let d = if norm_w > 0.0 {
            (&s.operator.scaled(1.0 / norm_w) - target).norm()
        } else {
            f64::NAN
        };
        writeln!(w, "{line},{d:.16e}")?;
    }
    Ok(())
}

fn run_stability(inputs: &[PathBuf], out: Option<&Path>, policy: &NumericPolicy) -> Result<u8> {
    let ops = inputs.iter().map(|p| load(p, policy)).collect::<Result<Vec<_>>>()?;
    for (p, r) in inputs.iter().zip(&ops) {
        let defect = q_tilde_unchecked(r).norm();
        if defect > 1e-6 {
            eprintln!("warning: {} is not a zero of Q~ (|Q~| = {defect:e})", p.display());
        }
    }
    let reports = inputs
        .par_iter()
        .zip(ops.par_iter())
        .map(|(p, r)| stability::analyze_with(r, &p.display().to_string(), policy))
        .collect::<curvflow::Result<Vec<StabilityReport>>>()?;
    for r in &reports {
        eprintln!(
            "{}: {:?}, max Re off orbit {:e}, orbit dim {}, center dim {}",
            r.base_point_ref, r.verdict, r.max_re_off_orbit, r.orbit_dim, r.center_dim
        );
    }
    let v = if reports.len() == 1 {
        serde_json::to_value(&reports[0])?
    } else {
        serde_json::to_value(&reports)?
    };
    write_json(out, &v)?;
    Ok(0)
}

fn run_holonomy(inputs: &[PathBuf], out: Option<&Path>, policy: &NumericPolicy) -> Result<u8> {
    let ops = inputs.iter().map(|p| load(p, policy)).collect::<Result<Vec<_>>>()?;
    let reports = ops
        .par_iter()
        .map(|r| holonomy_preservation_check_with(r, policy.rank_tol))
        .collect::<curvflow::Result<Vec<HolonomyReport>>>()?;
    for (p, r) in inputs.iter().zip(&reports) {
        eprintln!("{}: dim {}, contained {}, defect {:e}", p.display(), r.dim, r.contained, r.defect);
    }
    let v = if reports.len() == 1 {
        serde_json::to_value(&reports[0])?
    } else {
        serde_json::to_value(&reports)?
    };
    write_json(out, &v)?;
    Ok(if reports.iter().all(|r| r.contained) { 0 } else { EXIT_CHECK_FAILED })
}
