//! Fixed-step explicit integrators and trajectory sampling.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::snapshot::SnapshotMatrix;
use crate::system::{SystemModel, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntegratorKind {
    /// First order explicit Euler.
    #[default]
    Euler,
    /// Second order two-step Adams-Bashforth, Euler bootstrap.
    AdamsBashforth2,
    /// Two-step explicit midpoint (leapfrog), Euler bootstrap.
    Leapfrog,
}

/// Input signal over a time grid, held constant within each step.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSignal {
    Zero { channels: usize },
    /// `amplitude / dt` on the first step, zero afterwards.
    Impulse { amplitude: DVector<f64> },
    Step { amplitude: DVector<f64> },
    /// One column per grid sample.
    Sampled { samples: DMatrix<f64> },
}

impl InputSignal {
    pub fn impulse(channels: usize) -> Self {
        InputSignal::Impulse { amplitude: DVector::from_element(channels, 1.0) }
    }

    pub fn step(channels: usize) -> Self {
        InputSignal::Step { amplitude: DVector::from_element(channels, 1.0) }
    }

    pub fn channels(&self) -> usize {
        match self {
            InputSignal::Zero { channels } => *channels,
            InputSignal::Impulse { amplitude } | InputSignal::Step { amplitude } => amplitude.len(),
            InputSignal::Sampled { samples } => samples.nrows(),
        }
    }

    /// Value of channel `j` at step `k`.
    pub fn channel_value(&self, k: usize, dt: f64, j: usize) -> f64 {
        match self {
            InputSignal::Zero { .. } => 0.0,
            InputSignal::Impulse { amplitude } => {
                if k == 0 {
                    amplitude[j] / dt
                } else {
                    0.0
                }
            }
            InputSignal::Step { amplitude } => amplitude[j],
            InputSignal::Sampled { samples } => samples[(j, k)],
        }
    }

    pub fn fill(&self, k: usize, dt: f64, out: &mut DVector<f64>) {
        for j in 0..out.len() {
            out[j] = self.channel_value(k, dt, j);
        }
    }

    pub fn value(&self, k: usize, dt: f64) -> DVector<f64> {
        let mut out = DVector::zeros(self.channels());
        self.fill(k, dt, &mut out);
        out
    }

    pub(crate) fn check(&self, channels: usize, grid: &TimeGrid) -> Result<()> {
        if self.channels() != channels {
            return Err(Error::InvalidDimension(format!(
                "input signal has {} channels, model has {channels} inputs",
                self.channels()
            )));
        }
        if let InputSignal::Sampled { samples } = self {
            if samples.ncols() != grid.steps() {
                return Err(Error::InvalidDimension(format!(
                    "sampled input has {} columns, grid has {} samples",
                    samples.ncols(),
                    grid.steps()
                )));
            }
        }
        Ok(())
    }
}

/// Simulates the model and returns the `n×T` state snapshots.
pub fn integrate(
    model: &SystemModel,
    kind: IntegratorKind,
    grid: &TimeGrid,
    x0: &DVector<f64>,
    u: &InputSignal,
    p: &DVector<f64>,
) -> Result<SnapshotMatrix> {
    u.check(model.dims().inputs, grid)?;
    let dt = grid.dt();
    let data = integrate_with(model, kind, grid, x0, p, |k, buf| u.fill(k, dt, buf))?;
    SnapshotMatrix::new(data, *grid)
}

/// Core stepping loop; `input(k, buf)` writes the input held over step `k`.
pub(crate) fn integrate_with(
    model: &SystemModel,
    kind: IntegratorKind,
    grid: &TimeGrid,
    x0: &DVector<f64>,
    p: &DVector<f64>,
    input: impl FnMut(usize, &mut DVector<f64>),
) -> Result<DMatrix<f64>> {
    if p.len() != model.dims().params {
        return Err(Error::InvalidDimension(format!(
            "parameter vector has length {}, expected {}",
            p.len(),
            model.dims().params
        )));
    }
    integrate_varying(model, kind, grid, x0, input, |_, buf| buf.copy_from(p))
}

/// As [`integrate_with`] with a time-varying parameter vector.
pub(crate) fn integrate_varying(
    model: &SystemModel,
    kind: IntegratorKind,
    grid: &TimeGrid,
    x0: &DVector<f64>,
    mut input: impl FnMut(usize, &mut DVector<f64>),
    mut params: impl FnMut(usize, &mut DVector<f64>),
) -> Result<DMatrix<f64>> {
    let dims = model.dims();
    if x0.len() != dims.states {
        return Err(Error::InvalidDimension(format!(
            "initial state has length {}, expected {}",
            x0.len(),
            dims.states
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { step: 0, context: String::new() });
    }
    let steps = grid.steps();
    let dt = grid.dt();
    let mut out = DMatrix::zeros(dims.states, steps);
    out.set_column(0, x0);

    let mut u = DVector::zeros(dims.inputs);
    let mut p = DVector::zeros(dims.params);
    let mut x = x0.clone();
    let mut prev_f: Option<DVector<f64>> = None;
    let mut prev_x: Option<DVector<f64>> = None;

    for k in 0..steps - 1 {
        input(k, &mut u);
        params(k, &mut p);
        let fk = model.eval_f(&x, &u, &p);
        if fk.len() != dims.states {
            return Err(Error::InvalidDimension(format!(
                "vector field returned length {} at step {k}",
                fk.len()
            )));
        }
        let next = match (kind, &prev_f, &prev_x) {
            (IntegratorKind::AdamsBashforth2, Some(fp), _) => {
                let mut nx = x.clone();
                nx.axpy(1.5 * dt, &fk, 1.0);
                nx.axpy(-0.5 * dt, fp, 1.0);
                nx
            }
            (IntegratorKind::Leapfrog, _, Some(xp)) => {
                let mut nx = xp.clone();
                nx.axpy(2.0 * dt, &fk, 1.0);
                nx
            }
            _ => {
                let mut nx = x.clone();
                nx.axpy(dt, &fk, 1.0);
                nx
            }
        };
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: k + 1, context: String::new() });
        }
        out.set_column(k + 1, &next);
        match kind {
            IntegratorKind::Euler => {}
            IntegratorKind::AdamsBashforth2 => prev_f = Some(fk),
            IntegratorKind::Leapfrog => prev_x = Some(x),
        }
        x = next;
    }
    Ok(out)
}

/// Applies the output map column by column.
pub fn output_trajectory(
    model: &SystemModel,
    states: &SnapshotMatrix,
    u: &InputSignal,
    p: &DVector<f64>,
) -> Result<SnapshotMatrix> {
    let grid = *states.grid();
    u.check(model.dims().inputs, &grid)?;
    let dt = grid.dt();
    let data = outputs_with(model, states.data(), p, |k, buf| u.fill(k, dt, buf))?;
    SnapshotMatrix::new(data, grid)
}

pub(crate) fn outputs_with(
    model: &SystemModel,
    states: &DMatrix<f64>,
    p: &DVector<f64>,
    mut input: impl FnMut(usize, &mut DVector<f64>),
) -> Result<DMatrix<f64>> {
    let dims = model.dims();
    if states.nrows() != dims.states {
        return Err(Error::InvalidDimension(format!(
            "state snapshots have {} rows, expected {}",
            states.nrows(),
            dims.states
        )));
    }
    let mut out = DMatrix::zeros(dims.outputs, states.ncols());
    let mut u = DVector::zeros(dims.inputs);
    for k in 0..states.ncols() {
        input(k, &mut u);
        let y = model.eval_g(&states.column(k).into_owned(), &u, p);
        if y.len() != dims.outputs {
            return Err(Error::InvalidDimension(format!("output map returned length {} at step {k}", y.len())));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: k, context: "in output map".into() });
        }
        out.set_column(k, &y);
    }
    Ok(out)
}

/// Result of [`find_steady_state`].
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub state: DVector<f64>,
    pub converged: bool,
}

/// Marches forward with explicit Euler under constant input until
/// `‖f(x, ū, p)‖_∞ ≤ tol`; otherwise returns the final state unconverged.
pub fn find_steady_state(
    model: &SystemModel,
    steady_input: &DVector<f64>,
    p: &DVector<f64>,
    x_guess: &DVector<f64>,
    horizon: &TimeGrid,
    tol: f64,
) -> Result<SteadyState> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let dims = model.dims();
    if x_guess.len() != dims.states || steady_input.len() != dims.inputs {
        return Err(Error::InvalidDimension("steady-state guess or input has wrong length".into()));
    }
    let dt = horizon.dt();
    let mut x = x_guess.clone();
    for k in 0..horizon.steps() {
        let fx = model.eval_f(&x, steady_input, p);
        if fx.amax() <= tol {
            return Ok(SteadyState { state: x, converged: true });
        }
        if k + 1 == horizon.steps() {
            break;
        }
        x.axpy(dt, &fx, 1.0);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: k + 1, context: "while seeking steady state".into() });
        }
    }
    Ok(SteadyState { state: x, converged: false })
}
