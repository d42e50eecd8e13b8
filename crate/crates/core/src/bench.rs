//! Randomized symmetric nonlinear benchmark
//! `x' = A asinh(x) + B u + p`, `y = C x`, `C = Bᵀ`, and the five reduction
//! pipelines run on it (or on any other model).

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gramian::{empirical_controllability, empirical_cross, empirical_observability, GramianConfig, GramianKind};
use crate::linalg::mirror_upper;
use crate::pgramian::{identifiability_gramian, joint_gramian, sensitivity_gramian};
use crate::reduce::{
    balance, project_model, reduce_parameters_project, reduce_parameters_select, relative_output_error, truncate_cross,
    ParameterProjection,
};
use crate::sim::{integrate, output_trajectory, InputSignal, IntegratorKind};
use crate::snapshot::SnapshotMatrix;
use crate::system::{SystemDims, SystemModel, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    /// Balanced truncation from `W_C` and `W_O`.
    Bt,
    /// Direct truncation with `W_X`.
    Wx,
    /// Parameter selection by `W_S`.
    Ws,
    /// Parameter projection by `W_I`.
    Wi,
    /// Parameter projection by `W_Ï` plus state truncation by `W_X`.
    Wj,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [Experiment::Bt, Experiment::Wx, Experiment::Ws, Experiment::Wi, Experiment::Wj];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Bt => "bt",
            Experiment::Wx => "wx",
            Experiment::Ws => "ws",
            Experiment::Wi => "wi",
            Experiment::Wj => "wj",
        }
    }

    pub fn reduces_states(self) -> bool {
        matches!(self, Experiment::Bt | Experiment::Wx | Experiment::Wj)
    }

    pub fn reduces_params(self) -> bool {
        matches!(self, Experiment::Ws | Experiment::Wi | Experiment::Wj)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown experiment `{s}`")))
    }
}

/// Base point `x̄` of the gramian perturbations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExpansionPoint {
    /// `x̄ = 0`, which is not an equilibrium when `p ≠ 0`.
    #[default]
    Origin,
    /// The equilibrium `x̄ = sinh(−A⁻¹ p)` under zero input.
    Equilibrium,
}

impl FromStr for ExpansionPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "origin" => Ok(ExpansionPoint::Origin),
            "equilibrium" => Ok(ExpansionPoint::Equilibrium),
            _ => Err(Error::InvalidArgument(format!("unknown expansion point `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub n: usize,
    /// Inputs and outputs.
    pub m: usize,
    pub seed: u64,
    pub grid: TimeGrid,
    /// Reduced state order.
    pub order: usize,
    /// Reduced parameter order.
    pub param_order: usize,
    pub integrator: IntegratorKind,
    pub experiment: Experiment,
    /// Nominal parameters are drawn uniformly from this range.
    pub param_range: (f64, f64),
    pub expansion: ExpansionPoint,
    pub jobs: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            n: 100,
            m: 10,
            seed: 0,
            grid: TimeGrid::new(0.0, 0.01, 1.0).expect("valid default grid"),
            order: 10,
            param_order: 10,
            integrator: IntegratorKind::Euler,
            experiment: Experiment::Bt,
            param_range: (0.0, 0.1),
            expansion: ExpansionPoint::Origin,
            jobs: 1,
        }
    }
}

impl BenchmarkConfig {
    /// Defaults at size `n`, `m` with both orders set to `m`.
    pub fn sized(n: usize, m: usize) -> Self {
        Self { n, m, order: m, param_order: m, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.m > self.n {
            return Err(Error::InvalidDimension(format!("benchmark needs 1 ≤ m ≤ n, got n = {}, m = {}", self.n, self.m)));
        }
        for r in [self.order, self.param_order] {
            if r == 0 || r > self.n {
                return Err(Error::InvalidOrder { order: r, dim: self.n });
            }
        }
        let (lo, hi) = self.param_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!("empty parameter range [{lo}, {hi})")));
        }
        Ok(())
    }
}

/// A generated benchmark instance.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub model: SystemModel,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub p: DVector<f64>,
}

impl Benchmark {
    /// `sinh(−A⁻¹ p)`, where `A asinh(x) + p` vanishes.
    pub fn equilibrium(&self) -> Result<DVector<f64>> {
        let z = self.a.clone().lu().solve(&self.p).ok_or_else(|| Error::Solver("singular system matrix".into()))?;
        Ok(z.map(|v| (-v).sinh()))
    }
}

/// Draws `M`, `B` (row-major) and `p` from ChaCha8 seeded with `cfg.seed`.
pub fn generate_benchmark(cfg: &BenchmarkConfig) -> Result<Benchmark> {
    cfg.validate()?;
    let (n, m) = (cfg.n, cfg.m);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut draw = |r: usize, c: usize, lo: f64, hi: f64| {
        let mut out = DMatrix::zeros(r, c);
        for i in 0..r {
            for j in 0..c {
                out[(i, j)] = rng.random_range(lo..hi);
            }
        }
        out
    };
    let mm = draw(n, n, -1.0, 1.0);
    let b = draw(n, m, -1.0, 1.0);
    let (lo, hi) = cfg.param_range;
    let p = DVector::from_column_slice(draw(n, 1, lo, hi).as_slice());

    let mut a = (&mm + mm.transpose()) * 0.5;
    mirror_upper(&mut a);
    let lmax = SymmetricEigen::new(a.clone()).eigenvalues.max();
    for i in 0..n {
        a[(i, i)] -= lmax + 1.0;
    }
    let c = b.transpose();

    let (af, bf, cf) = (a.clone(), b.clone(), c.clone());
    let model = SystemModel::new(
        SystemDims::new(m, n, m, n),
        p.clone(),
        move |x, u, p| {
            let mut dx = &bf * u + p;
            dx.gemv(1.0, &af, &x.map(f64::asinh), 1.0);
            dx
        },
        move |x, _, _| &cf * x,
    )?;
    Ok(Benchmark { model, a, b, c, p })
}

/// Settings for [`run_pipeline`].
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub gramian: GramianConfig,
    pub order: usize,
    pub param_order: usize,
    /// Input used to compare full and reduced outputs.
    pub test_input: InputSignal,
    pub x0: DVector<f64>,
}

impl PipelineConfig {
    /// Default gramian settings, unit impulse test input from `x0 = 0`.
    pub fn new(model: &SystemModel, grid: TimeGrid, order: usize, param_order: usize) -> Self {
        let d = model.dims();
        Self {
            gramian: GramianConfig::new(d, grid),
            order,
            param_order,
            test_input: InputSignal::impulse(d.inputs),
            x0: DVector::zeros(d.states),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub seed: u64,
    /// State order for state reductions, parameter order otherwise.
    pub order: usize,
    pub times: Vec<f64>,
    /// Pointwise relative output error.
    pub series: DVector<f64>,
    pub aggregate: f64,
    pub gramian_seconds: f64,
    pub reduction_seconds: f64,
    /// Reduced-model simulation.
    pub simulation_seconds: f64,
    /// Full-model simulation.
    pub full_simulation_seconds: f64,
    /// Hankel singular values (balanced truncation only).
    pub hankel: Option<DVector<f64>>,
    pub kept_params: Option<Vec<usize>>,
}

impl ExperimentReport {
    /// Zeroes wall-clock fields so reports compare byte-for-byte.
    pub fn strip_timings(&mut self) {
        self.gramian_seconds = 0.0;
        self.reduction_seconds = 0.0;
        self.simulation_seconds = 0.0;
        self.full_simulation_seconds = 0.0;
    }
}

fn simulate_outputs(
    model: &SystemModel,
    pc: &PipelineConfig,
    x0: &DVector<f64>,
    p: &DVector<f64>,
) -> Result<SnapshotMatrix> {
    let grid = &pc.gramian.grid;
    let xs = integrate(model, pc.gramian.integrator, grid, x0, &pc.test_input, p)?;
    output_trajectory(model, &xs, &pc.test_input, p)
}

/// Runs one reduction pipeline on `model` and compares reduced and full
/// outputs under `pc.test_input`.
pub fn run_pipeline(experiment: Experiment, model: &SystemModel, pc: &PipelineConfig) -> Result<ExperimentReport> {
    run_inner(experiment, model, pc).map_err(|e| e.with_context(|| format!("(experiment {experiment})")))
}

fn run_inner(experiment: Experiment, model: &SystemModel, pc: &PipelineConfig) -> Result<ExperimentReport> {
    let cfg = &pc.gramian;
    let nominal = model.params().clone();

    let clock = Instant::now();
    let mut state_gramians = None;
    let mut param_gramian = None;
    match experiment {
        Experiment::Bt => {
            let wc = empirical_controllability(model, cfg)?;
            let wo = empirical_observability(model, cfg)?;
            state_gramians = Some((wc, Some(wo)));
        }
        Experiment::Wx => state_gramians = Some((empirical_cross(model, cfg)?, None)),
        Experiment::Ws => param_gramian = Some(sensitivity_gramian(model, cfg)?.1),
        Experiment::Wi => param_gramian = Some(identifiability_gramian(model, cfg)?.1),
        Experiment::Wj => {
            let (wx, wj) = joint_gramian(model, cfg)?;
            state_gramians = Some((wx, None));
            param_gramian = Some(wj);
        }
    }
    let gramian_seconds = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let mut hankel = None;
    let reduced = match &state_gramians {
        Some((wc, Some(wo))) => {
            let (pair, h) = balance(&wc.matrix, &wo.matrix, pc.order)?;
            hankel = Some(h);
            let mut red = project_model(model, &pair)?;
            red.provenance = vec![GramianKind::Controllability, GramianKind::Observability];
            Some(red)
        }
        Some((wx, None)) => {
            let pair = truncate_cross(&wx.matrix, pc.order)?;
            let mut red = project_model(model, &pair)?;
            red.provenance = vec![GramianKind::Cross];
            Some(red)
        }
        None => None,
    };
    let projection: Option<ParameterProjection> = match (experiment, &param_gramian) {
        (Experiment::Ws, Some(ws)) => Some(reduce_parameters_select(&ws.matrix, pc.param_order)?),
        (_, Some(w)) => Some(reduce_parameters_project(&w.matrix, pc.param_order)?),
        _ => None,
    };
    let reduced_params = match &projection {
        Some(pp) => pp.reconstruct(&nominal),
        None => nominal.clone(),
    };
    let reduction_seconds = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let y_full = simulate_outputs(model, pc, &pc.x0, &nominal)?;
    let full_simulation_seconds = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let y_red = match &reduced {
        Some(red) => simulate_outputs(&red.model, pc, &red.reduce_state(&pc.x0), &reduced_params)?,
        None => simulate_outputs(model, pc, &pc.x0, &reduced_params)?,
    };
    let simulation_seconds = clock.elapsed().as_secs_f64();

    let (series, aggregate) = relative_output_error(&y_full, &y_red)?;
    let grid = &cfg.grid;
    Ok(ExperimentReport {
        experiment,
        seed: 0,
        order: if experiment.reduces_states() { pc.order } else { pc.param_order },
        times: (0..grid.steps()).map(|k| grid.time(k)).collect(),
        series,
        aggregate,
        gramian_seconds,
        reduction_seconds,
        simulation_seconds,
        full_simulation_seconds,
        hankel,
        kept_params: projection.and_then(|p| p.kept),
    })
}

/// Generates the benchmark for `cfg.seed` and runs `cfg.experiment` on it.
pub fn run_experiment(cfg: &BenchmarkConfig) -> Result<ExperimentReport> {
    let bench = generate_benchmark(cfg)?;
    let mut pc = PipelineConfig::new(&bench.model, cfg.grid, cfg.order, cfg.param_order);
    pc.gramian.integrator = cfg.integrator;
    pc.gramian.jobs = cfg.jobs;
    if cfg.expansion == ExpansionPoint::Equilibrium {
        let xbar = bench.equilibrium()?;
        pc.gramian.spec = pc.gramian.spec.with_steady(DVector::zeros(cfg.m), xbar);
    }
    let mut report = run_pipeline(cfg.experiment, &bench.model, &pc)?;
    report.seed = cfg.seed;
    Ok(report)
}
