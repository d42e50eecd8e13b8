//! System description: dimensions, the vector field and output map, and the
//! uniform time grid simulations run on.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Signature shared by the vector field `f(x, u, p)` and output map `g(x, u, p)`.
pub type SystemFn = dyn Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync;

/// Input, state, output and parameter counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemDims {
    pub inputs: usize,
    pub states: usize,
    pub outputs: usize,
    pub params: usize,
}

impl SystemDims {
    pub fn new(inputs: usize, states: usize, outputs: usize, params: usize) -> Self {
        Self { inputs, states, outputs, params }
    }

    pub fn require_square(&self) -> Result<()> {
        if self.inputs != self.outputs {
            return Err(Error::SquareSystemRequired { inputs: self.inputs, outputs: self.outputs });
        }
        Ok(())
    }

    pub fn require_params(&self) -> Result<()> {
        if self.params == 0 {
            return Err(Error::NoParameters);
        }
        Ok(())
    }

    pub fn require_inputs(&self) -> Result<()> {
        if self.inputs == 0 {
            return Err(Error::InvalidDimension("at least one input is required".into()));
        }
        Ok(())
    }

    pub fn require_outputs(&self) -> Result<()> {
        if self.outputs == 0 {
            return Err(Error::InvalidDimension("at least one output is required".into()));
        }
        Ok(())
    }
}

/// An input-state-output system `x' = f(x, u, p)`, `y = g(x, u, p)` with a
/// nominal parameter vector.
///
/// The callables must be pure; every gramian in this crate assumes repeated
/// evaluation with equal arguments gives bit-identical results.
#[derive(Clone)]
pub struct SystemModel {
    dims: SystemDims,
    f: Arc<SystemFn>,
    g: Arc<SystemFn>,
    params: DVector<f64>,
}

impl fmt::Debug for SystemModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemModel")
            .field("dims", &self.dims)
            .field("params", &self.params.as_slice())
            .finish_non_exhaustive()
    }
}

impl SystemModel {
    /// Builds a model and probes `f` and `g` once at the origin to check the
    /// lengths they return.
    pub fn new<F, G>(dims: SystemDims, params: DVector<f64>, f: F, g: G) -> Result<Self>
    where
        F: Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        G: Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self::from_arcs(dims, params, Arc::new(f), Arc::new(g))
    }

    pub fn from_arcs(dims: SystemDims, params: DVector<f64>, f: Arc<SystemFn>, g: Arc<SystemFn>) -> Result<Self> {
        if dims.states == 0 {
            return Err(Error::InvalidDimension("state count must be at least 1".into()));
        }
        if params.len() != dims.params {
            return Err(Error::InvalidDimension(format!(
                "parameter vector has length {}, expected {}",
                params.len(),
                dims.params
            )));
        }
        let x = DVector::zeros(dims.states);
        let u = DVector::zeros(dims.inputs);
        let dx = f(&x, &u, &params);
        if dx.len() != dims.states {
            return Err(Error::InvalidDimension(format!(
                "vector field returned length {}, expected {}",
                dx.len(),
                dims.states
            )));
        }
        let y = g(&x, &u, &params);
        if y.len() != dims.outputs {
            return Err(Error::InvalidDimension(format!(
                "output map returned length {}, expected {}",
                y.len(),
                dims.outputs
            )));
        }
        Ok(Self { dims, f, g, params })
    }

    pub fn dims(&self) -> SystemDims {
        self.dims
    }

    pub fn params(&self) -> &DVector<f64> {
        &self.params
    }

    /// Same callables with a different nominal parameter vector.
    pub fn with_params(&self, params: DVector<f64>) -> Result<Self> {
        if params.len() != self.dims.params {
            return Err(Error::InvalidDimension(format!(
                "parameter vector has length {}, expected {}",
                params.len(),
                self.dims.params
            )));
        }
        Ok(Self { params, ..self.clone() })
    }

    #[inline]
    pub fn eval_f(&self, x: &DVector<f64>, u: &DVector<f64>, p: &DVector<f64>) -> DVector<f64> {
        (self.f)(x, u, p)
    }

    #[inline]
    pub fn eval_g(&self, x: &DVector<f64>, u: &DVector<f64>, p: &DVector<f64>) -> DVector<f64> {
        (self.g)(x, u, p)
    }

    pub fn vector_field(&self) -> Arc<SystemFn> {
        Arc::clone(&self.f)
    }

    pub fn output_map(&self) -> Arc<SystemFn> {
        Arc::clone(&self.g)
    }
}

/// Uniform time grid `t0, t0 + dt, ..., t0 + (T-1) dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    dt: f64,
    tf: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, tf: f64) -> Result<Self> {
        if dt <= 0.0 || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        if !tf.is_finite() || !t0.is_finite() || tf <= t0 {
            return Err(Error::InvalidArgument(format!("stop time {tf} must exceed start time {t0}")));
        }
        // The relative slack absorbs representation error in ratios like 1/0.01.
        let ratio = (tf - t0) / dt;
        let steps = (ratio * (1.0 + 1e-12)).floor() as usize + 1;
        if steps < 2 {
            return Err(Error::InvalidArgument("time grid must contain at least two samples".into()));
        }
        Ok(Self { t0, dt, tf, steps })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn tf(&self) -> f64 {
        self.tf
    }

    /// Number of samples T.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_step_count() {
        assert_eq!(TimeGrid::new(0.0, 0.01, 1.0).unwrap().steps(), 101);
        assert_eq!(TimeGrid::new(0.0, 0.5, 1.0).unwrap().steps(), 3);
        assert_eq!(TimeGrid::new(0.0, 0.1, 1.0).unwrap().steps(), 11);
        assert_eq!(TimeGrid::new(0.0, 1e-4, 1.0).unwrap().steps(), 10001);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(TimeGrid::new(0.0, 0.0, 1.0).is_err());
        assert!(TimeGrid::new(0.0, -0.1, 1.0).is_err());
        assert!(TimeGrid::new(1.0, 0.1, 1.0).is_err());
        // a single sample is not a trajectory
        assert!(TimeGrid::new(0.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn model_probe_checks_lengths() {
        let dims = SystemDims::new(1, 2, 1, 0);
        let bad = SystemModel::new(dims, DVector::zeros(0), |x, _, _| x.rows(0, 1).into_owned(), |x, _, _| {
            x.rows(0, 1).into_owned()
        });
        assert!(matches!(bad, Err(Error::InvalidDimension(_))));
        let bad_g = SystemModel::new(dims, DVector::zeros(0), |x, _, _| x.clone(), |x, _, _| x.clone());
        assert!(matches!(bad_g, Err(Error::InvalidDimension(_))));
        let ok = SystemModel::new(dims, DVector::zeros(0), |x, _, _| -x, |x, _, _| x.rows(0, 1).into_owned());
        assert!(ok.is_ok());
    }

    #[test]
    fn model_rejects_param_length_mismatch() {
        let dims = SystemDims::new(1, 1, 1, 2);
        let r = SystemModel::new(dims, DVector::zeros(1), |x, _, _| -x, |x, _, _| x.clone());
        assert!(r.is_err());
    }
}
