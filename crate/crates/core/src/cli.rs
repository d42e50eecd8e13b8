//! Command-line front end. Exit codes: 0 success, 1 validation failure,
//! 2 usage, 3 I/O, 4 applicability, 5 divergence, 6 rank.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};

use crate::bench::{generate_benchmark, run_pipeline, BenchmarkConfig, ExpansionPoint, Experiment, PipelineConfig};
use crate::error::{Error, Result};
use crate::gramian::{collect_snapshots, empirical_gramian, GramianConfig, GramianOutput, GramianType};
use crate::io;
use crate::linalg::relative_frobenius;
use crate::oracle::{lyapunov_ctrb, lyapunov_obsv, sylvester_cross, LinearSystem};
use crate::perturbation::{RotationKind, ScaleKind};
use crate::sim::{InputSignal, IntegratorKind};
use crate::snapshot::CenteringKind;
use crate::system::{SystemModel, TimeGrid};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_APPLICABILITY: i32 = 4;
pub const EXIT_DIVERGENCE: i32 = 5;
pub const EXIT_RANK: i32 = 6;

/// Maps a library error onto the exit code contract.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_IO,
        Error::InvalidArgument(_) | Error::MissingReference => EXIT_USAGE,
        Error::InvalidDimension(_)
        | Error::InvalidSnapshot(_)
        | Error::InvalidBlocks(_)
        | Error::SquareSystemRequired { .. }
        | Error::NoParameters
        | Error::NotHurwitz(_) => EXIT_APPLICABILITY,
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        Error::RankDeficient { .. } | Error::InvalidOrder { .. } => EXIT_RANK,
        Error::UndefinedRelativeError | Error::Solver(_) => EXIT_VALIDATION,
    }
}

#[derive(Debug, Parser)]
#[command(name = "emgram", version, about = "Empirical gramians and gramian-based model reduction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute one of the six empirical gramians.
    Gramian(GramianCmd),
    /// Run a state and/or parameter reduction pipeline and report output errors.
    Reduce(ReduceCmd),
    /// Compare empirical and analytical gramians of a random stable linear system.
    Validate(ValidateCmd),
    /// Run the benchmark experiments and write error series plus a timing summary.
    Benchmark(BenchmarkCmd),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScalesArg {
    Linear,
    Log,
    Geom,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RotationsArg {
    Single,
    Signed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CenteringArg {
    Mean,
    Median,
    Steady,
    Pod,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum IntegratorArg {
    Euler,
    Ab2,
    Leapfrog,
}

impl From<IntegratorArg> for IntegratorKind {
    fn from(a: IntegratorArg) -> Self {
        match a {
            IntegratorArg::Euler => IntegratorKind::Euler,
            IntegratorArg::Ab2 => IntegratorKind::AdamsBashforth2,
            IntegratorArg::Leapfrog => IntegratorKind::Leapfrog,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ExpansionArg {
    Origin,
    Equilibrium,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// `builtin:benchmark`, `builtin:linear`, `builtin:scalar`, or a linear model manifest.
    #[arg(long, default_value = "builtin:benchmark")]
    pub model: String,
    /// State count of built-in models.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Input count of built-in models.
    #[arg(long, default_value_t = 10)]
    pub m: usize,
    /// Output count of `builtin:linear` (defaults to m).
    #[arg(long)]
    pub o: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Base point of the benchmark perturbations.
    #[arg(long, value_enum, default_value = "origin")]
    pub expansion: ExpansionArg,
}

#[derive(Debug, Clone, Args)]
pub struct GramianArgs {
    /// `t0,dt,tf`.
    #[arg(long, default_value = "0,0.01,1")]
    pub time: String,
    #[arg(long = "scales-kind", value_enum, default_value = "linear")]
    pub scales_kind: ScalesArg,
    #[arg(long = "scale-count", default_value_t = 1)]
    pub scale_count: usize,
    #[arg(long, value_enum, default_value = "single")]
    pub rotations: RotationsArg,
    #[arg(long, value_enum, default_value = "steady")]
    pub centering: CenteringArg,
    /// `impulse`, `step`, `zero`, or a matrix file with one column per time step.
    #[arg(long, default_value = "impulse")]
    pub input: String,
    #[arg(long, value_enum, default_value = "euler")]
    pub integrator: IntegratorArg,
    /// Simulation worker threads.
    #[arg(long, env = "EMGRAM_JOBS", default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct GramianCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub gramian: GramianArgs,
    /// c, o, x, s, i or j.
    #[arg(long = "type")]
    pub kind: char,
    /// Snapshot bundle to use instead of simulating.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Write the raw snapshots used for the gramian to this path.
    #[arg(long = "dump-data")]
    pub dump_data: Option<PathBuf>,
    /// Output matrix file; parameter gramians go to `<out>.param` unless `--param-out` is given.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long = "param-out")]
    pub param_out: Option<PathBuf>,
    /// Suppress wall-clock output.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Args)]
pub struct ReduceCmd {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub gramian: GramianArgs,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Reduced state order (defaults to the output count).
    #[arg(long)]
    pub order: Option<usize>,
    /// Reduced parameter order (defaults to the output count).
    #[arg(long = "param-order")]
    pub param_order: Option<usize>,
    /// Error-series CSV of the first seed.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Summary CSV over all seeds.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Number of consecutive seeds starting at `--seed` (built-in benchmark only).
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// Zero the timing columns.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Bt,
    Wx,
    Ws,
    Wi,
    Wj,
}

impl From<MethodArg> for Experiment {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Bt => Experiment::Bt,
            MethodArg::Wx => Experiment::Wx,
            MethodArg::Ws => Experiment::Ws,
            MethodArg::Wi => Experiment::Wi,
            MethodArg::Wj => Experiment::Wj,
        }
    }
}

#[derive(Debug, Args)]
pub struct ValidateCmd {
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 2)]
    pub o: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    /// Horizon; defaults to ten slowest time constants.
    #[arg(long)]
    pub tf: Option<f64>,
    #[arg(long, value_enum, default_value = "euler")]
    pub integrator: IntegratorArg,
    /// Largest accepted relative Frobenius discrepancy.
    #[arg(long, default_value_t = 5e-2)]
    pub tol: f64,
    /// `builtin:scalar` or a linear model manifest instead of a random system.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, env = "EMGRAM_JOBS", default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentArg {
    Bt,
    Wx,
    Ws,
    Wi,
    Wj,
    All,
}

#[derive(Debug, Args)]
pub struct BenchmarkCmd {
    #[arg(long, value_enum, default_value = "all")]
    pub experiment: ExperimentArg,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub m: usize,
    /// Reduced state order (defaults to m).
    #[arg(long)]
    pub order: Option<usize>,
    /// Reduced parameter order (defaults to m).
    #[arg(long = "param-order")]
    pub param_order: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of consecutive seeds starting at `--seed`.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[arg(long, default_value = "0,0.01,1")]
    pub time: String,
    #[arg(long, value_enum, default_value = "euler")]
    pub integrator: IntegratorArg,
    #[arg(long, value_enum, default_value = "origin")]
    pub expansion: ExpansionArg,
    #[arg(long = "out-dir", default_value = "bench-out")]
    pub out_dir: PathBuf,
    /// Zero the timing columns so repeated runs are byte-identical.
    #[arg(long)]
    pub deterministic: bool,
    #[arg(long, env = "EMGRAM_JOBS", default_value_t = 1)]
    pub jobs: usize,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Gramian(c) => cmd_gramian(&c),
        Command::Reduce(c) => cmd_reduce(&c),
        Command::Validate(c) => cmd_validate(&c),
        Command::Benchmark(c) => cmd_benchmark(&c),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn parse_time(s: &str) -> Result<TimeGrid> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidArgument(format!("--time expects t0,dt,tf, got `{s}`")))?;
    match parts.as_slice() {
        [t0, dt, tf] => TimeGrid::new(*t0, *dt, *tf),
        _ => Err(Error::InvalidArgument(format!("--time expects three values, got `{s}`"))),
    }
}

fn scalar_system() -> LinearSystem {
    let one = DMatrix::from_element(1, 1, 1.0);
    LinearSystem { a: -one.clone(), b: one.clone(), c: one }
}

fn linear_model(sys: &LinearSystem) -> Result<SystemModel> {
    io::LinearModel { a: sys.a.clone(), b: sys.b.clone(), c: sys.c.clone(), p: None, f: None }.to_system()
}

/// A loaded model plus the nominal steady state to perturb around.
struct Loaded {
    model: SystemModel,
    steady_state: Option<DVector<f64>>,
}

fn load_model(args: &ModelArgs) -> Result<Loaded> {
    match args.model.as_str() {
        "builtin:benchmark" => {
            let cfg = BenchmarkConfig { seed: args.seed, ..BenchmarkConfig::sized(args.n, args.m) };
            let b = generate_benchmark(&cfg)?;
            let steady_state = match args.expansion {
                ExpansionArg::Origin => None,
                ExpansionArg::Equilibrium => Some(b.equilibrium()?),
            };
            Ok(Loaded { model: b.model, steady_state })
        }
        "builtin:linear" => {
            let sys = LinearSystem::random_symmetric(args.n, args.m, args.o.unwrap_or(args.m), args.seed);
            Ok(Loaded { model: linear_model(&sys)?, steady_state: None })
        }
        "builtin:scalar" => Ok(Loaded { model: linear_model(&scalar_system())?, steady_state: None }),
        other if other.starts_with("builtin:") => Err(Error::InvalidArgument(format!("unknown built-in model `{other}`"))),
        path => Ok(Loaded { model: io::read_manifest(Path::new(path))?.to_system()?, steady_state: None }),
    }
}

fn parse_input(s: &str, inputs: usize, grid: &TimeGrid) -> Result<InputSignal> {
    let sig = match s {
        "impulse" => InputSignal::impulse(inputs),
        "step" => InputSignal::step(inputs),
        "zero" => InputSignal::Zero { channels: inputs },
        path => InputSignal::Sampled { samples: io::read_matrix(Path::new(path))? },
    };
    if sig.channels() != inputs {
        return Err(Error::InvalidDimension(format!("input has {} channels, model has {inputs}", sig.channels())));
    }
    if let InputSignal::Sampled { samples } = &sig {
        if samples.ncols() != grid.steps() {
            return Err(Error::InvalidDimension(format!(
                "input file has {} columns, time grid has {} steps",
                samples.ncols(),
                grid.steps()
            )));
        }
    }
    Ok(sig)
}

fn gramian_config(model: &Loaded, args: &GramianArgs) -> Result<GramianConfig> {
    let grid = parse_time(&args.time)?;
    let dims = model.model.dims();
    let mut cfg = GramianConfig::new(dims, grid);
    let scale_kind = match args.scales_kind {
        ScalesArg::Linear => ScaleKind::Linear,
        ScalesArg::Log => ScaleKind::Logarithmic,
        ScalesArg::Geom => ScaleKind::Geometric,
    };
    let rotation = match args.rotations {
        RotationsArg::Single => RotationKind::Single,
        RotationsArg::Signed => RotationKind::Signed,
    };
    cfg.spec = cfg.spec.with_scales(scale_kind, args.scale_count).with_rotation(rotation);
    if let Some(x) = &model.steady_state {
        cfg.spec.steady_state = x.clone();
    }
    cfg.centering = match args.centering {
        CenteringArg::Mean => CenteringKind::Mean,
        CenteringArg::Median => CenteringKind::Median,
        CenteringArg::Steady => CenteringKind::Steady,
        CenteringArg::Pod => CenteringKind::POD,
    };
    cfg.input = parse_input(&args.input, dims.inputs, &grid)?;
    cfg.integrator = args.integrator.into();
    cfg.jobs = args.jobs;
    Ok(cfg)
}

fn cmd_gramian(c: &GramianCmd) -> Result<i32> {
    let kind = GramianType::from_char(c.kind)
        .ok_or_else(|| Error::InvalidArgument(format!("--type must be one of c,o,x,s,i,j; got `{}`", c.kind)))?;
    let loaded = load_model(&c.model)?;
    let cfg = gramian_config(&loaded, &c.gramian)?;
    kind.check_applicable(loaded.model.dims())?;
    let data = c.data.as_deref().map(io::read_snapshots).transpose()?;

    let clock = Instant::now();
    let out = match (&c.dump_data, &data) {
        (Some(path), None) => {
            let snaps = collect_snapshots(kind, &loaded.model, &cfg)?;
            io::write_snapshots(path, &snaps)?;
            empirical_gramian(kind, &loaded.model, &cfg, Some(&snaps))?
        }
        _ => empirical_gramian(kind, &loaded.model, &cfg, data.as_ref())?,
    };
    let seconds = clock.elapsed().as_secs_f64();

    io::write_matrix(&c.out, &out.state().matrix)?;
    let w = out.state().dim();
    match &out {
        GramianOutput::Single(_) => println!("type {}: {w}x{w} -> {}", kind.as_char(), c.out.display()),
        GramianOutput::Pair { param, .. } => {
            let path = c.param_out.clone().unwrap_or_else(|| {
                let mut s = c.out.clone().into_os_string();
                s.push(".param");
                PathBuf::from(s)
            });
            io::write_matrix(&path, &param.matrix)?;
            let p = param.dim();
            println!("type {}: {w}x{w} -> {}, {p}x{p} -> {}", kind.as_char(), c.out.display(), path.display());
        }
    }
    if !c.deterministic {
        println!("assembly seconds: {seconds:.6}");
    }
    Ok(EXIT_OK)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn cmd_reduce(c: &ReduceCmd) -> Result<i32> {
    let experiment: Experiment = c.method.into();
    if c.seeds == 0 {
        return Err(Error::InvalidArgument("--seeds must be at least 1".into()));
    }
    if c.seeds > 1 && c.model.model != "builtin:benchmark" && c.model.model != "builtin:linear" {
        return Err(Error::InvalidArgument("--seeds applies to built-in models only".into()));
    }
    let mut reports = Vec::new();
    for seed in c.model.seed..c.model.seed + c.seeds {
        let args = ModelArgs { seed, ..c.model.clone() };
        let loaded = load_model(&args)?;
        let dims = loaded.model.dims();
        if experiment.reduces_params() {
            dims.require_params()?;
        }
        let cfg = gramian_config(&loaded, &c.gramian)?;
        let mut pc = PipelineConfig::new(
            &loaded.model,
            cfg.grid,
            c.order.unwrap_or(dims.outputs),
            c.param_order.unwrap_or(dims.outputs),
        );
        pc.test_input = cfg.input.clone();
        pc.gramian = cfg;
        let mut report = run_pipeline(experiment, &loaded.model, &pc)?;
        report.seed = seed;
        if c.deterministic {
            report.strip_timings();
        }
        if reports.is_empty() {
            if let Some(path) = &c.report {
                io::write_error_series(path, &report)?;
            }
        }
        reports.push(report);
    }
    println!("{}", io::SUMMARY_HEADER);
    for r in &reports {
        println!("{}", io::summary_line(r));
    }
    if reports.len() > 1 {
        let mut agg: Vec<f64> = reports.iter().map(|r| r.aggregate).collect();
        println!("median aggregate error: {}", io::fmt_f64(median(&mut agg)));
    }
    if let Some(path) = &c.summary {
        io::write_summary(path, &reports)?;
    }
    Ok(EXIT_OK)
}

fn load_linear(spec: Option<&str>, c: &ValidateCmd) -> Result<LinearSystem> {
    match spec {
        None => Ok(LinearSystem::random_symmetric(c.n, c.m, c.o, c.seed)),
        Some("builtin:scalar") => Ok(scalar_system()),
        Some(other) if other.starts_with("builtin:") => {
            Err(Error::InvalidArgument(format!("validate supports builtin:scalar or a manifest, got `{other}`")))
        }
        Some(path) => {
            let m = io::read_manifest(Path::new(path))?;
            LinearSystem::new(m.a, m.b, m.c)
        }
    }
}

fn cmd_validate(c: &ValidateCmd) -> Result<i32> {
    let sys = load_linear(c.model.as_deref(), c)?;
    sys.check_hurwitz()?;
    let tf = c.tf.unwrap_or_else(|| 10.0 / sys.slowest_rate());
    let grid = TimeGrid::new(0.0, c.dt, tf)?;
    let model = linear_model(&sys)?;
    let mut cfg = GramianConfig::new(model.dims(), grid);
    cfg.integrator = c.integrator.into();
    cfg.jobs = c.jobs;
    println!(
        "system n={} m={} o={} dt={} tf={} steps={}",
        sys.states(),
        sys.inputs(),
        sys.outputs(),
        io::fmt_f64(c.dt),
        io::fmt_f64(tf),
        grid.steps()
    );

    let mut checks: Vec<(&str, DMatrix<f64>, DMatrix<f64>)> = vec![
        (
            "controllability",
            empirical_gramian(GramianType::Controllability, &model, &cfg, None)?.state().matrix.clone(),
            lyapunov_ctrb(&sys.a, &sys.b)?,
        ),
        (
            "observability",
            empirical_gramian(GramianType::Observability, &model, &cfg, None)?.state().matrix.clone(),
            lyapunov_obsv(&sys.a, &sys.c)?,
        ),
    ];
    if sys.inputs() == sys.outputs() {
        checks.push((
            "cross",
            empirical_gramian(GramianType::Cross, &model, &cfg, None)?.state().matrix.clone(),
            sylvester_cross(&sys.a, &sys.b, &sys.c)?,
        ));
    }
    let mut ok = true;
    for (name, emp, exact) in &checks {
        let d = relative_frobenius(emp, exact);
        ok &= d <= c.tol;
        if exact.len() == 1 {
            println!("{name}: analytic {} empirical {} discrepancy {}", exact[0], emp[0], io::fmt_f64(d));
        } else {
            println!("{name}: discrepancy {}", io::fmt_f64(d));
        }
    }
    println!("{} (tolerance {})", if ok { "PASS" } else { "FAIL" }, c.tol);
    Ok(if ok { EXIT_OK } else { EXIT_VALIDATION })
}

fn cmd_benchmark(c: &BenchmarkCmd) -> Result<i32> {
    let experiments: Vec<Experiment> = match c.experiment {
        ExperimentArg::All => Experiment::ALL.to_vec(),
        ExperimentArg::Bt => vec![Experiment::Bt],
        ExperimentArg::Wx => vec![Experiment::Wx],
        ExperimentArg::Ws => vec![Experiment::Ws],
        ExperimentArg::Wi => vec![Experiment::Wi],
        ExperimentArg::Wj => vec![Experiment::Wj],
    };
    if c.seeds == 0 {
        return Err(Error::InvalidArgument("--seeds must be at least 1".into()));
    }
    let grid = parse_time(&c.time)?;
    fs::create_dir_all(&c.out_dir).map_err(|e| Error::Io { path: c.out_dir.display().to_string(), message: e.to_string() })?;
    let mut reports = Vec::new();
    for seed in c.seed..c.seed + c.seeds {
        for &experiment in &experiments {
            let cfg = BenchmarkConfig {
                n: c.n,
                m: c.m,
                seed,
                grid,
                order: c.order.unwrap_or(c.m),
                param_order: c.param_order.unwrap_or(c.m),
                integrator: c.integrator.into(),
                experiment,
                expansion: match c.expansion {
                    ExpansionArg::Origin => ExpansionPoint::Origin,
                    ExpansionArg::Equilibrium => ExpansionPoint::Equilibrium,
                },
                jobs: c.jobs,
                ..BenchmarkConfig::default()
            };
            let mut report = crate::bench::run_experiment(&cfg)?;
            if c.deterministic {
                report.strip_timings();
            }
            let path = c.out_dir.join(format!("{experiment}_seed{seed}.csv"));
            io::write_error_series(&path, &report)?;
            println!("{}", io::summary_line(&report));
            reports.push(report);
        }
    }
    io::write_summary(&c.out_dir.join("summary.csv"), &reports)?;
    Ok(EXIT_OK)
}
