//! Perturbation sets: unit directions, rotations (restricted to `±I`), and
//! scale subdivisions for inputs, initial states and parameters.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::system::SystemDims;

/// Rotation set applied to each perturbation direction.
///
/// Only `{I}` and `{-I, I}` are supported, so a rotation reduces to a sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RotationKind {
    #[default]
    Single,
    Signed,
}

/// How the interval `(0, s_max]` is subdivided into perturbation scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleKind {
    #[default]
    Linear,
    Logarithmic,
    Geometric,
}

/// Standard basis of `R^dim`.
pub fn make_directions(dim: usize) -> Result<Vec<DVector<f64>>> {
    if dim == 0 {
        return Err(Error::InvalidDimension("direction set needs dim >= 1".into()));
    }
    Ok((0..dim)
        .map(|i| {
            let mut e = DVector::zeros(dim);
            e[i] = 1.0;
            e
        })
        .collect())
}

/// Ascending scales ending exactly at `s_max`.
///
/// Linear: `s_max k / q`; geometric: `s_max 2^(k-q)`; logarithmic:
/// `s_max 10^(k-q)`, for `k = 1..=q`.
pub fn make_scales(s_max: f64, q: usize, kind: ScaleKind) -> Result<Vec<f64>> {
    if s_max <= 0.0 || !s_max.is_finite() {
        return Err(Error::InvalidArgument(format!("scale maximum must be positive, got {s_max}")));
    }
    if q == 0 {
        return Err(Error::InvalidArgument("scale count must be at least 1".into()));
    }
    let scales: Vec<f64> = (1..=q)
        .map(|k| {
            let e = k as i32 - q as i32;
            match kind {
                ScaleKind::Linear => s_max * (k as f64 / q as f64),
                ScaleKind::Geometric => s_max * 2f64.powi(e),
                ScaleKind::Logarithmic => s_max * 10f64.powi(e),
            }
        })
        .collect();
    if scales[0] <= 0.0 {
        return Err(Error::InvalidArgument(format!("{q} {kind:?} subdivisions of {s_max} underflow to zero")));
    }
    Ok(scales)
}

/// Sign factors standing in for the rotation set.
pub fn rotation_signs(kind: RotationKind) -> &'static [f64] {
    match kind {
        RotationKind::Single => &[1.0],
        RotationKind::Signed => &[-1.0, 1.0],
    }
}

/// Everything that defines the perturbation design of an empirical gramian.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    pub rotation: RotationKind,
    pub scale_kind: ScaleKind,
    pub scale_count: usize,
    /// Per-input-channel maximum scale `u_m`.
    pub input_scales: DVector<f64>,
    /// Per-state maximum scale `x_m`.
    pub state_scales: DVector<f64>,
    /// Per-parameter maximum scale.
    pub param_scales: DVector<f64>,
    pub steady_input: DVector<f64>,
    pub steady_state: DVector<f64>,
}

impl PerturbationSpec {
    /// Unit maxima, one scale, no rotation, steady point at the origin.
    pub fn new(dims: SystemDims) -> Self {
        Self {
            rotation: RotationKind::Single,
            scale_kind: ScaleKind::Linear,
            scale_count: 1,
            input_scales: DVector::from_element(dims.inputs, 1.0),
            state_scales: DVector::from_element(dims.states, 1.0),
            param_scales: DVector::from_element(dims.params, 1.0),
            steady_input: DVector::zeros(dims.inputs),
            steady_state: DVector::zeros(dims.states),
        }
    }

    pub fn with_rotation(mut self, rotation: RotationKind) -> Self {
        self.rotation = rotation;
        self
    }

    pub fn with_scales(mut self, kind: ScaleKind, count: usize) -> Self {
        self.scale_kind = kind;
        self.scale_count = count;
        self
    }

    pub fn with_steady(mut self, input: DVector<f64>, state: DVector<f64>) -> Self {
        self.steady_input = input;
        self.steady_state = state;
        self
    }

    pub fn signs(&self) -> &'static [f64] {
        rotation_signs(self.rotation)
    }

    /// Scale table indexed `[h][channel]` for the given per-channel maxima.
    pub(crate) fn scale_table(&self, maxima: &DVector<f64>) -> Result<Vec<Vec<f64>>> {
        let per_channel = maxima
            .iter()
            .map(|&s| make_scales(s, self.scale_count, self.scale_kind))
            .collect::<Result<Vec<_>>>()?;
        Ok((0..self.scale_count).map(|h| per_channel.iter().map(|s| s[h]).collect()).collect())
    }

    pub fn validate(&self, dims: SystemDims) -> Result<()> {
        let check = |name: &str, v: &DVector<f64>, len: usize, positive: bool| -> Result<()> {
            if v.len() != len {
                return Err(Error::InvalidDimension(format!("{name} has length {}, expected {len}", v.len())));
            }
            if positive && v.iter().any(|&s| s <= 0.0 || !s.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be strictly positive")));
            }
            Ok(())
        };
        check("input_scales", &self.input_scales, dims.inputs, true)?;
        check("state_scales", &self.state_scales, dims.states, true)?;
        check("param_scales", &self.param_scales, dims.params, true)?;
        check("steady_input", &self.steady_input, dims.inputs, false)?;
        check("steady_state", &self.steady_state, dims.states, false)?;
        if self.scale_count == 0 {
            return Err(Error::InvalidArgument("scale count must be at least 1".into()));
        }
        Ok(())
    }
}
