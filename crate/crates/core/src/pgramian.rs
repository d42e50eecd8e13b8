//! Parameter-space gramians: sensitivity, identifiability and joint
//! (cross-identifiability).
//!
//! The sensitivity gramian treats each parameter as an extra input channel
//! and keeps the trace of its sub-controllability gramian. The other two
//! append the parameters to the state vector as constant states and read the
//! parameter block off an augmented gramian through a Schur complement.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gramian::{
    assemble_controllability, assemble_cross, assemble_observability, input_runs, par_map, runs_for, simulate_input_family,
    simulate_state_family, Gramian, GramianConfig, GramianKind, GramianType, ParamSignal, Run, SnapshotData,
};
use crate::linalg::mirror_upper;
use crate::schur::{schur_complement, AugmentedBlocks};
use crate::sim::{integrate_varying, InputSignal};
use crate::snapshot::center_in_place;
use crate::system::{SystemDims, SystemModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentationKind {
    /// `x_p' = 0`, outputs unchanged.
    ObservabilityAug,
    /// `x_p' = v` with `P` extra inputs, `x_p` appended to the outputs.
    JointAug,
}

/// A model whose state vector carries the parameters.
#[derive(Debug, Clone)]
pub struct AugmentedModel {
    base: SystemModel,
    model: SystemModel,
    kind: AugmentationKind,
}

impl AugmentedModel {
    pub fn base(&self) -> &SystemModel {
        &self.base
    }

    /// The augmented system; its parameter vector is empty.
    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    pub fn kind(&self) -> AugmentationKind {
        self.kind
    }

    pub fn dims(&self) -> SystemDims {
        self.model.dims()
    }

    /// Initial augmented state `(x0; p)` with `p` the nominal parameters.
    pub fn initial_state(&self, x0: &DVector<f64>) -> DVector<f64> {
        stack(x0, self.base.params())
    }
}

fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}

/// Appends the parameters as constant states.
pub fn augment_for_observability(model: &SystemModel) -> Result<AugmentedModel> {
    let d = model.dims();
    d.require_params()?;
    let (n, np) = (d.states, d.params);
    let f = model.vector_field();
    let g = model.output_map();
    let aug = SystemModel::new(
        SystemDims::new(d.inputs, n + np, d.outputs, 0),
        DVector::zeros(0),
        move |xa: &DVector<f64>, u: &DVector<f64>, _: &DVector<f64>| {
            let x = xa.rows(0, n).into_owned();
            let p = xa.rows(n, np).into_owned();
            let dx = f(&x, u, &p);
            stack(&dx, &DVector::zeros(np))
        },
        move |xa: &DVector<f64>, u: &DVector<f64>, _: &DVector<f64>| {
            let x = xa.rows(0, n).into_owned();
            let p = xa.rows(n, np).into_owned();
            g(&x, u, &p)
        },
    )?;
    Ok(AugmentedModel { base: model.clone(), model: aug, kind: AugmentationKind::ObservabilityAug })
}

/// Appends the parameters as integrator states driven by `P` extra inputs
/// and observed through `P` extra outputs.
pub fn augment_for_joint(model: &SystemModel) -> Result<AugmentedModel> {
    let d = model.dims();
    d.require_params()?;
    d.require_square()?;
    let (n, m, np) = (d.states, d.inputs, d.params);
    let f = model.vector_field();
    let g = model.output_map();
    let aug = SystemModel::new(
        SystemDims::new(m + np, n + np, d.outputs + np, 0),
        DVector::zeros(0),
        move |xa: &DVector<f64>, uv: &DVector<f64>, _: &DVector<f64>| {
            let x = xa.rows(0, n).into_owned();
            let p = xa.rows(n, np).into_owned();
            let u = uv.rows(0, m).into_owned();
            let dx = f(&x, &u, &p);
            stack(&dx, &uv.rows(m, np).into_owned())
        },
        move |xa: &DVector<f64>, uv: &DVector<f64>, _: &DVector<f64>| {
            let x = xa.rows(0, n).into_owned();
            let p = xa.rows(n, np).into_owned();
            let u = uv.rows(0, m).into_owned();
            stack(&g(&x, &u, &p), &p)
        },
    )?;
    Ok(AugmentedModel { base: model.clone(), model: aug, kind: AugmentationKind::JointAug })
}

pub(crate) fn observability_setup(model: &SystemModel, cfg: &GramianConfig) -> Result<(AugmentedModel, GramianConfig)> {
    let aug = augment_for_observability(model)?;
    let mut acfg = cfg.clone();
    acfg.spec.state_scales = stack(&cfg.spec.state_scales, &cfg.spec.param_scales);
    acfg.spec.steady_state = stack(&cfg.spec.steady_state, model.params());
    acfg.spec.param_scales = DVector::zeros(0);
    Ok((aug, acfg))
}

/// The `v` channels of the joint augmentation always receive a unit impulse,
/// so each parameter state jumps by its perturbation and then holds.
pub(crate) fn joint_setup(model: &SystemModel, cfg: &GramianConfig) -> Result<(AugmentedModel, GramianConfig)> {
    let aug = augment_for_joint(model)?;
    let d = model.dims();
    let (m, np) = (d.inputs, d.params);
    let t = cfg.grid.steps();
    let dt = cfg.grid.dt();
    let mut samples = DMatrix::zeros(m + np, t);
    for k in 0..t {
        for j in 0..m {
            samples[(j, k)] = cfg.input.channel_value(k, dt, j);
        }
    }
    for j in m..m + np {
        samples[(j, 0)] = 1.0 / dt;
    }
    let mut acfg = cfg.clone();
    acfg.input = InputSignal::Sampled { samples };
    acfg.spec.input_scales = stack(&cfg.spec.input_scales, &cfg.spec.param_scales);
    acfg.spec.steady_input = stack(&cfg.spec.steady_input, &DVector::zeros(np));
    acfg.spec.state_scales = stack(&cfg.spec.state_scales, &cfg.spec.param_scales);
    acfg.spec.steady_state = stack(&cfg.spec.steady_state, model.params());
    acfg.spec.param_scales = DVector::zeros(0);
    Ok((aug, acfg))
}

/// Indices of parameters whose nominal value is zero; their sensitivity
/// perturbations use the absolute scale instead of a relative one.
pub fn absolute_scale_parameters(p: &DVector<f64>) -> Vec<usize> {
    p.iter().enumerate().filter(|(_, v)| **v == 0.0).map(|(i, _)| i).collect()
}

fn param_runs(cfg: &GramianConfig) -> Result<Vec<Run>> {
    runs_for(&cfg.spec, &cfg.spec.param_scales)
}

fn simulate_param_family(model: &SystemModel, cfg: &GramianConfig) -> Result<Vec<DMatrix<f64>>> {
    let runs = param_runs(cfg)?;
    let p = model.params();
    let dt = cfg.grid.dt();
    let ubar = &cfg.spec.steady_input;
    let signal = cfg.param_signal;
    par_map(cfg.jobs, &runs, |n, run| {
        let amplitude = if p[run.index] != 0.0 { p[run.index] } else { 1.0 };
        let delta = run.sign * run.scale * amplitude;
        integrate_varying(
            model,
            cfg.integrator,
            &cfg.grid,
            &cfg.spec.steady_state,
            |_, buf| buf.copy_from(ubar),
            |k, buf| {
                buf.copy_from(p);
                match signal {
                    ParamSignal::Step => buf[run.index] += delta,
                    ParamSignal::Impulse if k == 0 => buf[run.index] += delta / dt,
                    ParamSignal::Impulse => {}
                }
            },
        )
        .map_err(|e| e.with_context(|| format!("in parameter run {n} (parameter {})", run.index)))
    })
}

pub(crate) fn sensitivity_snapshots(model: &SystemModel, cfg: &GramianConfig) -> Result<SnapshotData> {
    let mut state_runs = simulate_input_family(model, cfg)?;
    state_runs.extend(simulate_param_family(model, cfg)?);
    Ok(SnapshotData { state_runs, output_runs: vec![] })
}

pub(crate) fn sensitivity_from(
    model: &SystemModel,
    cfg: &GramianConfig,
    data: Option<&SnapshotData>,
) -> Result<(Gramian, Gramian)> {
    let dims = model.dims();
    dims.require_params()?;
    dims.require_inputs()?;
    cfg.check(dims)?;
    let mut snaps = match data {
        Some(d) => d.state_runs.clone(),
        None => sensitivity_snapshots(model, cfg)?.state_runs,
    };
    let n_u = input_runs(&cfg.spec)?.len();
    let p_runs = param_runs(cfg)?;
    if snaps.len() != n_u + p_runs.len() {
        return Err(Error::InvalidSnapshot(format!(
            "sensitivity: expected {} runs, got {}",
            n_u + p_runs.len(),
            snaps.len()
        )));
    }
    let tail = snaps.split_off(n_u);
    let mut wc = assemble_controllability(model, cfg, snaps)?;

    let n = dims.states;
    let dt = cfg.grid.dt();
    let norm = (cfg.spec.scale_count * cfg.spec.signs().len()) as f64;
    let mut sub: Vec<DMatrix<f64>> = (0..dims.params).map(|_| DMatrix::zeros(n, n)).collect();
    for (run, mut x) in p_runs.iter().zip(tail) {
        if x.shape() != (n, cfg.grid.steps()) {
            return Err(Error::InvalidSnapshot(format!("sensitivity: run has shape {:?}", x.shape())));
        }
        center_in_place(&mut x, cfg.centering, Some(&cfg.spec.steady_state))?;
        let mut prod = &x * x.transpose();
        mirror_upper(&mut prod);
        sub[run.index] += prod * (dt / (run.scale * run.scale));
    }
    let mut ws = DMatrix::zeros(dims.params, dims.params);
    for (k, w) in sub.into_iter().enumerate() {
        let w = w / norm;
        ws[(k, k)] = w.trace();
        wc += w;
    }
    Ok((Gramian::new(wc, GramianKind::Controllability), Gramian::new(ws, GramianKind::Sensitivity)))
}

pub(crate) fn identifiability_from(
    model: &SystemModel,
    cfg: &GramianConfig,
    data: Option<&SnapshotData>,
) -> Result<(Gramian, Gramian)> {
    let dims = model.dims();
    GramianType::Identifiability.check_applicable(dims)?;
    cfg.check(dims)?;
    let (aug, acfg) = observability_setup(model, cfg)?;
    let ys = match data {
        Some(d) => d.output_runs.clone(),
        None => simulate_state_family(aug.model(), &acfg)?,
    };
    let w = assemble_observability(aug.model(), &acfg, ys)?;
    let blocks = AugmentedBlocks::split(&w, dims.states)?;
    let wi = if cfg.approximate_identifiability {
        blocks.w22.clone()
    } else {
        schur_complement(&blocks, cfg.schur_tol)?
    };
    Ok((
        Gramian::new(blocks.w11, GramianKind::Observability),
        Gramian::new(wi, GramianKind::Identifiability),
    ))
}

pub(crate) fn joint_from(
    model: &SystemModel,
    cfg: &GramianConfig,
    data: Option<&SnapshotData>,
) -> Result<(Gramian, Gramian)> {
    let dims = model.dims();
    GramianType::Joint.check_applicable(dims)?;
    cfg.check(dims)?;
    let (aug, acfg) = joint_setup(model, cfg)?;
    let (xs, ys) = match data {
        Some(d) => (d.state_runs.clone(), d.output_runs.clone()),
        None => (simulate_input_family(aug.model(), &acfg)?, simulate_state_family(aug.model(), &acfg)?),
    };
    let w = assemble_cross(aug.model(), &acfg, xs, ys)?;
    let blocks = AugmentedBlocks::split(&w, dims.states)?;
    let wii = schur_complement(&blocks, cfg.schur_tol)?;
    Ok((
        Gramian::new(blocks.w11, GramianKind::Cross),
        Gramian::new(wii, GramianKind::CrossIdentifiability),
    ))
}

/// Returns `(W_C, W_S)`: the controllability gramian of the input subsystem
/// plus every parameter subsystem, and the diagonal sensitivity gramian
/// holding the trace of each parameter's sub-controllability gramian.
pub fn sensitivity_gramian(model: &SystemModel, cfg: &GramianConfig) -> Result<(Gramian, Gramian)> {
    sensitivity_from(model, cfg, None)
}

/// Returns `(W_O, W_I)` from the observability gramian of the
/// parameter-augmented system.
pub fn identifiability_gramian(model: &SystemModel, cfg: &GramianConfig) -> Result<(Gramian, Gramian)> {
    identifiability_from(model, cfg, None)
}

/// Returns `(W_X, W_Ï)` from the cross gramian of the joint augmentation.
pub fn joint_gramian(model: &SystemModel, cfg: &GramianConfig) -> Result<(Gramian, Gramian)> {
    joint_from(model, cfg, None)
}
