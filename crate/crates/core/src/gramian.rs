//! Empirical controllability, observability and cross gramians, and the
//! dispatcher over all six gramian types.
//!
//! Every gramian is assembled from two families of simulations:
//!
//! * the *input family*, indexed `(h, i, j)`: scale `c_h`, sign `s_i` and input
//!   channel `j`; the system starts at the steady state `x̄` and is driven by
//!   `ū + s_i c_h e_j u_j(t)`; state snapshots are recorded;
//! * the *state family*, indexed `(k, l, a)`: scale `d_k`, sign `s_l` and state
//!   direction `a`; the system starts at `x̄ + s_l d_k e_a` under constant `ū`;
//!   output snapshots are recorded.
//!
//! Runs are enumerated with the scale index outermost and the channel or
//! direction innermost. Simulations may run on a thread pool, but assembly
//! always consumes them in that fixed order, so results do not depend on the
//! number of workers. Time integrals are left-rectangle sums `dt Σ_t` over the
//! snapshot grid.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::mirror_upper;
use crate::perturbation::PerturbationSpec;
use crate::schur::DEFAULT_SCHUR_TOL;
use crate::sim::{integrate_with, outputs_with, InputSignal, IntegratorKind};
use crate::snapshot::{center_in_place, CenteringKind};
use crate::system::{SystemDims, SystemModel, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramianKind {
    Controllability,
    Observability,
    Cross,
    Sensitivity,
    Identifiability,
    CrossIdentifiability,
}

/// A dense square gramian tagged with its kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Gramian {
    pub matrix: DMatrix<f64>,
    pub kind: GramianKind,
}

impl Gramian {
    pub fn new(matrix: DMatrix<f64>, kind: GramianKind) -> Self {
        Self { matrix, kind }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Knobs shared by every empirical gramian.
#[derive(Debug, Clone)]
pub struct GramianConfig {
    pub grid: TimeGrid,
    pub spec: PerturbationSpec,
    /// Base input `u(t)`; channel `j` of it drives input-family run `j`.
    pub input: InputSignal,
    pub integrator: IntegratorKind,
    pub centering: CenteringKind,
    /// Relative pseudo-inverse cut-off for the Schur complements.
    pub schur_tol: f64,
    /// Use `W_P` in place of the identifiability Schur complement.
    pub approximate_identifiability: bool,
    /// Parameter perturbation signal for the sensitivity gramian.
    pub param_signal: ParamSignal,
    /// Worker threads for simulations; 0 or 1 runs sequentially.
    pub jobs: usize,
}

/// How a parameter acts as an input channel for the sensitivity gramian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParamSignal {
    /// Constant offset held over the whole horizon.
    #[default]
    Step,
    /// Discrete impulse on the first step.
    Impulse,
}

impl GramianConfig {
    /// Impulse input on all channels, Euler, steady-state centering.
    pub fn new(dims: SystemDims, grid: TimeGrid) -> Self {
        Self {
            grid,
            spec: PerturbationSpec::new(dims),
            input: InputSignal::impulse(dims.inputs),
            integrator: IntegratorKind::Euler,
            centering: CenteringKind::Steady,
            schur_tol: DEFAULT_SCHUR_TOL,
            approximate_identifiability: false,
            param_signal: ParamSignal::Step,
            jobs: 1,
        }
    }

    pub(crate) fn check(&self, dims: SystemDims) -> Result<()> {
        self.spec.validate(dims)?;
        self.input.check(dims.inputs, &self.grid)
    }
}

/// Raw (uncentered) snapshots of the simulations behind a gramian, in
/// assembly order. Supplying them back through [`empirical_gramian`] replaces
/// simulation with data.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SnapshotData {
    /// State snapshots of the input family.
    pub state_runs: Vec<DMatrix<f64>>,
    /// Output snapshots of the state family.
    pub output_runs: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Run {
    pub sign: f64,
    pub scale: f64,
    /// Channel or direction index.
    pub index: usize,
}

pub(crate) fn input_runs(spec: &PerturbationSpec) -> Result<Vec<Run>> {
    runs_for(spec, &spec.input_scales)
}

pub(crate) fn state_runs(spec: &PerturbationSpec) -> Result<Vec<Run>> {
    runs_for(spec, &spec.state_scales)
}

pub(crate) fn runs_for(spec: &PerturbationSpec, maxima: &DVector<f64>) -> Result<Vec<Run>> {
    let table = spec.scale_table(maxima)?;
    let mut runs = Vec::with_capacity(table.len() * spec.signs().len() * maxima.len());
    for row in &table {
        for &sign in spec.signs() {
            for (index, &scale) in row.iter().enumerate() {
                runs.push(Run { sign, scale, index });
            }
        }
    }
    Ok(runs)
}

pub(crate) fn par_map<T, R>(jobs: usize, items: &[T], f: impl Fn(usize, &T) -> Result<R> + Sync) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
{
    if jobs <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(|| items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect())
}

pub(crate) fn simulate_input_family(model: &SystemModel, cfg: &GramianConfig) -> Result<Vec<DMatrix<f64>>> {
    let runs = input_runs(&cfg.spec)?;
    let dt = cfg.grid.dt();
    let p = model.params();
    par_map(cfg.jobs, &runs, |n, run| {
        integrate_with(model, cfg.integrator, &cfg.grid, &cfg.spec.steady_state, p, |k, buf| {
            buf.copy_from(&cfg.spec.steady_input);
            buf[run.index] += run.sign * run.scale * cfg.input.channel_value(k, dt, run.index);
        })
        .map_err(|e| e.with_context(|| format!("in input run {n} (channel {})", run.index)))
    })
}

pub(crate) fn simulate_state_family(model: &SystemModel, cfg: &GramianConfig) -> Result<Vec<DMatrix<f64>>> {
    let runs = state_runs(&cfg.spec)?;
    let p = model.params();
    let ubar = &cfg.spec.steady_input;
    par_map(cfg.jobs, &runs, |n, run| {
        let mut x0 = cfg.spec.steady_state.clone();
        x0[run.index] += run.sign * run.scale;
        let states = integrate_with(model, cfg.integrator, &cfg.grid, &x0, p, |_, buf| buf.copy_from(ubar))
            .map_err(|e| e.with_context(|| format!("in state run {n} (direction {})", run.index)))?;
        outputs_with(model, &states, p, |_, buf| buf.copy_from(ubar))
            .map_err(|e| e.with_context(|| format!("in state run {n} (direction {})", run.index)))
    })
}

pub(crate) fn steady_output(model: &SystemModel, spec: &PerturbationSpec) -> DVector<f64> {
    model.eval_g(&spec.steady_state, &spec.steady_input, model.params())
}

fn check_runs(name: &str, got: &[DMatrix<f64>], expected: usize, rows: usize, cols: usize) -> Result<()> {
    if got.len() != expected {
        return Err(Error::InvalidSnapshot(format!("{name}: expected {expected} runs, got {}", got.len())));
    }
    if let Some(bad) = got.iter().position(|m| m.shape() != (rows, cols)) {
        return Err(Error::InvalidSnapshot(format!(
            "{name}: run {bad} has shape {:?}, expected ({rows}, {cols})",
            got[bad].shape()
        )));
    }
    Ok(())
}

fn normalization(spec: &PerturbationSpec) -> f64 {
    (spec.scale_count * spec.signs().len()) as f64
}

pub(crate) fn assemble_controllability(
    model: &SystemModel,
    cfg: &GramianConfig,
    mut snaps: Vec<DMatrix<f64>>,
) -> Result<DMatrix<f64>> {
    let n = model.dims().states;
    let runs = input_runs(&cfg.spec)?;
    check_runs("controllability state runs", &snaps, runs.len(), n, cfg.grid.steps())?;
    let dt = cfg.grid.dt();
    let mut w = DMatrix::zeros(n, n);
    for (run, x) in runs.iter().zip(snaps.iter_mut()) {
        center_in_place(x, cfg.centering, Some(&cfg.spec.steady_state))?;
        let mut prod = &*x * x.transpose();
        mirror_upper(&mut prod);
        w += prod * (dt / (run.scale * run.scale));
    }
    Ok(w / normalization(&cfg.spec))
}

/// Stacks centered output trajectories of one `(k, l)` group as columns
/// `vec(Δy_a) / d_{k,a}` and returns `dt YᵀY`.
pub(crate) fn assemble_observability(
    model: &SystemModel,
    cfg: &GramianConfig,
    mut snaps: Vec<DMatrix<f64>>,
) -> Result<DMatrix<f64>> {
    let dims = model.dims();
    let (n, o, t) = (dims.states, dims.outputs, cfg.grid.steps());
    let runs = state_runs(&cfg.spec)?;
    check_runs("observability output runs", &snaps, runs.len(), o, t)?;
    let ybar = steady_output(model, &cfg.spec);
    let dt = cfg.grid.dt();
    let mut w = DMatrix::zeros(n, n);
    let mut stacked = DMatrix::zeros(o * t, n);
    for (group, chunk) in snaps.chunks_mut(n).enumerate() {
        for (a, y) in chunk.iter_mut().enumerate() {
            let run = runs[group * n + a];
            center_in_place(y, cfg.centering, Some(&ybar))?;
            let inv = 1.0 / run.scale;
            for (dst, src) in stacked.column_mut(a).iter_mut().zip(y.iter()) {
                *dst = src * inv;
            }
        }
        let mut prod = stacked.transpose() * &stacked;
        mirror_upper(&mut prod);
        w += prod * dt;
    }
    Ok(w / normalization(&cfg.spec))
}

/// `W[b, a] += s_i s_l / (c_{h,j} d_{k,a}) dt Σ_t Δx^{hij}_b(t) Δy^{kla}_j(t)`.
///
/// Row `b` indexes the state component of the input-family trajectory and
/// column `a` the perturbed initial-state direction, which makes the result
/// the solution of `A W + W A = −B C` for linear systems.
pub(crate) fn assemble_cross(
    model: &SystemModel,
    cfg: &GramianConfig,
    mut xs: Vec<DMatrix<f64>>,
    mut ys: Vec<DMatrix<f64>>,
) -> Result<DMatrix<f64>> {
    let dims = model.dims();
    dims.require_square()?;
    let (n, m, t) = (dims.states, dims.inputs, cfg.grid.steps());
    let in_runs = input_runs(&cfg.spec)?;
    let st_runs = state_runs(&cfg.spec)?;
    check_runs("cross state runs", &xs, in_runs.len(), n, t)?;
    check_runs("cross output runs", &ys, st_runs.len(), dims.outputs, t)?;
    for x in xs.iter_mut() {
        center_in_place(x, cfg.centering, Some(&cfg.spec.steady_state))?;
    }
    let ybar = steady_output(model, &cfg.spec);
    for y in ys.iter_mut() {
        center_in_place(y, cfg.centering, Some(&ybar))?;
    }
    let dt = cfg.grid.dt();
    let mut w = DMatrix::zeros(n, n);
    // z[j] is T×n with column a = s_l Δy^{kla}_j / d_{k,a}
    let mut z: Vec<DMatrix<f64>> = (0..m).map(|_| DMatrix::zeros(t, n)).collect();
    for (group, chunk) in ys.chunks(n).enumerate() {
        for (a, y) in chunk.iter().enumerate() {
            let run = st_runs[group * n + a];
            let f = run.sign / run.scale;
            for (j, zj) in z.iter_mut().enumerate() {
                for (dst, src) in zj.column_mut(a).iter_mut().zip(y.row(j).iter()) {
                    *dst = src * f;
                }
            }
        }
        for (run, x) in in_runs.iter().zip(xs.iter()) {
            w.gemm(dt * run.sign / run.scale, x, &z[run.index], 1.0);
        }
    }
    Ok(w / (normalization(&cfg.spec) * normalization(&cfg.spec)))
}

/// Empirical controllability gramian `W_C` (n×n).
pub fn empirical_controllability(model: &SystemModel, cfg: &GramianConfig) -> Result<Gramian> {
    let dims = model.dims();
    dims.require_inputs()?;
    cfg.check(dims)?;
    let xs = simulate_input_family(model, cfg)?;
    Ok(Gramian::new(assemble_controllability(model, cfg, xs)?, GramianKind::Controllability))
}

/// Empirical observability gramian `W_O` (n×n).
pub fn empirical_observability(model: &SystemModel, cfg: &GramianConfig) -> Result<Gramian> {
    let dims = model.dims();
    dims.require_outputs()?;
    cfg.check(dims)?;
    let ys = simulate_state_family(model, cfg)?;
    Ok(Gramian::new(assemble_observability(model, cfg, ys)?, GramianKind::Observability))
}

/// Empirical cross gramian `W_X` (n×n) of a square system.
pub fn empirical_cross(model: &SystemModel, cfg: &GramianConfig) -> Result<Gramian> {
    let dims = model.dims();
    dims.require_square()?;
    dims.require_inputs()?;
    cfg.check(dims)?;
    let xs = simulate_input_family(model, cfg)?;
    let ys = simulate_state_family(model, cfg)?;
    Ok(Gramian::new(assemble_cross(model, cfg, xs, ys)?, GramianKind::Cross))
}

/// Gramian selector for [`empirical_gramian`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramianType {
    Controllability,
    Observability,
    Cross,
    Sensitivity,
    Identifiability,
    Joint,
}

impl GramianType {
    pub fn from_char(c: char) -> Option<Self> {
        Some(match c.to_ascii_lowercase() {
            'c' => GramianType::Controllability,
            'o' => GramianType::Observability,
            'x' => GramianType::Cross,
            's' => GramianType::Sensitivity,
            'i' => GramianType::Identifiability,
            'j' => GramianType::Joint,
            _ => return None,
        })
    }

    pub fn as_char(self) -> char {
        match self {
            GramianType::Controllability => 'c',
            GramianType::Observability => 'o',
            GramianType::Cross => 'x',
            GramianType::Sensitivity => 's',
            GramianType::Identifiability => 'i',
            GramianType::Joint => 'j',
        }
    }

    /// Dimension preconditions of the gramian type.
    pub fn check_applicable(self, dims: SystemDims) -> Result<()> {
        match self {
            GramianType::Controllability => dims.require_inputs(),
            GramianType::Observability => dims.require_outputs(),
            GramianType::Cross => {
                dims.require_square()?;
                dims.require_inputs()
            }
            GramianType::Sensitivity => {
                dims.require_params()?;
                dims.require_inputs()
            }
            GramianType::Identifiability => {
                dims.require_params()?;
                dims.require_outputs()
            }
            GramianType::Joint => {
                dims.require_square()?;
                dims.require_params()?;
                dims.require_inputs()
            }
        }
    }
}

/// A single gramian, or a state gramian paired with its parameter gramian.
#[derive(Debug, Clone, PartialEq)]
pub enum GramianOutput {
    Single(Gramian),
    Pair { state: Gramian, param: Gramian },
}

impl GramianOutput {
    pub fn state(&self) -> &Gramian {
        match self {
            GramianOutput::Single(g) => g,
            GramianOutput::Pair { state, .. } => state,
        }
    }

    pub fn param(&self) -> Option<&Gramian> {
        match self {
            GramianOutput::Single(_) => None,
            GramianOutput::Pair { param, .. } => Some(param),
        }
    }
}

/// Computes any of the six gramians. With `data`, the snapshots are taken
/// from it instead of being simulated; see [`collect_snapshots`] for the
/// expected run order.
pub fn empirical_gramian(
    kind: GramianType,
    model: &SystemModel,
    cfg: &GramianConfig,
    data: Option<&SnapshotData>,
) -> Result<GramianOutput> {
    use crate::pgramian;
    kind.check_applicable(model.dims())?;
    cfg.check(model.dims())?;
    let out = match (kind, data) {
        (GramianType::Controllability, None) => GramianOutput::Single(empirical_controllability(model, cfg)?),
        (GramianType::Controllability, Some(d)) => GramianOutput::Single(Gramian::new(
            assemble_controllability(model, cfg, d.state_runs.clone())?,
            GramianKind::Controllability,
        )),
        (GramianType::Observability, None) => GramianOutput::Single(empirical_observability(model, cfg)?),
        (GramianType::Observability, Some(d)) => GramianOutput::Single(Gramian::new(
            assemble_observability(model, cfg, d.output_runs.clone())?,
            GramianKind::Observability,
        )),
        (GramianType::Cross, None) => GramianOutput::Single(empirical_cross(model, cfg)?),
        (GramianType::Cross, Some(d)) => GramianOutput::Single(Gramian::new(
            assemble_cross(model, cfg, d.state_runs.clone(), d.output_runs.clone())?,
            GramianKind::Cross,
        )),
        (GramianType::Sensitivity, d) => {
            let (state, param) = pgramian::sensitivity_from(model, cfg, d)?;
            GramianOutput::Pair { state, param }
        }
        (GramianType::Identifiability, d) => {
            let (state, param) = pgramian::identifiability_from(model, cfg, d)?;
            GramianOutput::Pair { state, param }
        }
        (GramianType::Joint, d) => {
            let (state, param) = pgramian::joint_from(model, cfg, d)?;
            GramianOutput::Pair { state, param }
        }
    };
    Ok(out)
}

/// Runs exactly the simulations `empirical_gramian(kind, ..)` would, and
/// returns their raw snapshots.
pub fn collect_snapshots(kind: GramianType, model: &SystemModel, cfg: &GramianConfig) -> Result<SnapshotData> {
    use crate::pgramian;
    kind.check_applicable(model.dims())?;
    cfg.check(model.dims())?;
    Ok(match kind {
        GramianType::Controllability => SnapshotData { state_runs: simulate_input_family(model, cfg)?, output_runs: vec![] },
        GramianType::Observability => SnapshotData { state_runs: vec![], output_runs: simulate_state_family(model, cfg)? },
        GramianType::Cross => SnapshotData {
            state_runs: simulate_input_family(model, cfg)?,
            output_runs: simulate_state_family(model, cfg)?,
        },
        GramianType::Sensitivity => pgramian::sensitivity_snapshots(model, cfg)?,
        GramianType::Identifiability => {
            let (aug, acfg) = pgramian::observability_setup(model, cfg)?;
            SnapshotData { state_runs: vec![], output_runs: simulate_state_family(aug.model(), &acfg)? }
        }
        GramianType::Joint => {
            let (aug, acfg) = pgramian::joint_setup(model, cfg)?;
            SnapshotData {
                state_runs: simulate_input_family(aug.model(), &acfg)?,
                output_runs: simulate_state_family(aug.model(), &acfg)?,
            }
        }
    })
}
