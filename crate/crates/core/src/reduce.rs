//! Projection-based reduction of states and parameters, and output error
//! metrics.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gramian::GramianKind;
use crate::linalg::{svd_sorted, sym_eig_sorted};
use crate::snapshot::SnapshotMatrix;
use crate::system::{SystemDims, SystemModel};

/// Singular values below this fraction of the largest are treated as zero
/// when balancing.
pub const RANK_TOL: f64 = 1e-14;

/// Biorthogonality tolerance for `left · right = I_r`.
const BIORTHO_TOL: f64 = 1e-8;

/// Petrov–Galerkin pair: `x ≈ right · x_r`, `x_r = left · x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPair {
    left: DMatrix<f64>,
    right: DMatrix<f64>,
}

impl ProjectionPair {
    pub fn new(left: DMatrix<f64>, right: DMatrix<f64>) -> Result<Self> {
        let (r, n) = left.shape();
        if right.shape() != (n, r) || r == 0 || r > n {
            return Err(Error::InvalidDimension(format!(
                "left {:?} and right {:?} do not form an r×n / n×r pair",
                left.shape(),
                right.shape()
            )));
        }
        let defect = (&left * &right - DMatrix::identity(r, r)).norm();
        if defect > BIORTHO_TOL {
            return Err(Error::InvalidArgument(format!("left·right deviates from identity by {defect:e}")));
        }
        Ok(Self { left, right })
    }

    pub fn identity(n: usize) -> Self {
        Self { left: DMatrix::identity(n, n), right: DMatrix::identity(n, n) }
    }

    /// `r×n` restriction.
    pub fn left(&self) -> &DMatrix<f64> {
        &self.left
    }

    /// `n×r` prolongation.
    pub fn right(&self) -> &DMatrix<f64> {
        &self.right
    }

    pub fn order(&self) -> usize {
        self.left.nrows()
    }

    pub fn states(&self) -> usize {
        self.left.ncols()
    }
}

/// A Galerkin-projected model together with the pair that produced it.
#[derive(Clone)]
pub struct ReducedModel {
    pub model: SystemModel,
    pub pair: ProjectionPair,
    /// Gramians the projection was computed from.
    pub provenance: Vec<GramianKind>,
}

impl ReducedModel {
    /// `left · x0`.
    pub fn reduce_state(&self, x0: &DVector<f64>) -> DVector<f64> {
        self.pair.left() * x0
    }

    /// `right · x_r`.
    pub fn lift_state(&self, xr: &DVector<f64>) -> DVector<f64> {
        self.pair.right() * xr
    }
}

impl fmt::Debug for ReducedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReducedModel")
            .field("dims", &self.model.dims())
            .field("provenance", &self.provenance)
            .finish()
    }
}

fn check_order(r: usize, n: usize) -> Result<()> {
    if r == 0 || r > n {
        return Err(Error::InvalidOrder { order: r, dim: n });
    }
    Ok(())
}

fn psd_factor(w: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, mut vecs) = sym_eig_sorted(w, |l| l);
    for (j, l) in vals.iter().enumerate() {
        vecs.column_mut(j).scale_mut(l.max(0.0).sqrt());
    }
    vecs
}

/// Square-root balanced truncation. Returns the pair and all Hankel singular
/// values (descending).
pub fn balance(wc: &DMatrix<f64>, wo: &DMatrix<f64>, r: usize) -> Result<(ProjectionPair, DVector<f64>)> {
    let n = wc.nrows();
    if !wc.is_square() || wo.shape() != wc.shape() {
        return Err(Error::InvalidDimension(format!(
            "gramians {:?} and {:?} must be square and equal-sized",
            wc.shape(),
            wo.shape()
        )));
    }
    check_order(r, n)?;
    let lc = psd_factor(wc);
    let lo = psd_factor(wo);
    let (u, s, v) = svd_sorted(&(lo.transpose() * &lc));
    let smax = s.max();
    let feasible = if smax > 0.0 { s.iter().filter(|&&x| x >= RANK_TOL * smax).count() } else { 0 };
    if r > feasible {
        return Err(Error::RankDeficient { requested: r, max_feasible: feasible });
    }
    let scale = DVector::from_iterator(r, s.iter().take(r).map(|x| 1.0 / x.sqrt()));
    let mut right = lc * v.columns(0, r);
    let mut left = u.columns(0, r).transpose() * lo.transpose();
    for j in 0..r {
        right.column_mut(j).scale_mut(scale[j]);
        left.row_mut(j).scale_mut(scale[j]);
    }
    Ok((ProjectionPair { left, right }, s))
}

/// Direct truncation with the leading left singular vectors of `W_X`.
pub fn truncate_cross(wx: &DMatrix<f64>, r: usize) -> Result<ProjectionPair> {
    if !wx.is_square() {
        return Err(Error::InvalidDimension(format!("cross gramian is {:?}", wx.shape())));
    }
    check_order(r, wx.nrows())?;
    let (u, _, _) = svd_sorted(wx);
    let right = u.columns(0, r).into_owned();
    Ok(ProjectionPair { left: right.transpose(), right })
}

/// Parameter-space reduction `p ↦ basis · basisᵀ · p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterProjection {
    /// `P×r` orthonormal basis.
    pub basis: DMatrix<f64>,
    /// Kept indices when the basis is a coordinate selection.
    pub kept: Option<Vec<usize>>,
}

impl ParameterProjection {
    pub fn order(&self) -> usize {
        self.basis.ncols()
    }

    /// Reduced coordinates `basisᵀ · p`.
    pub fn reduce(&self, p: &DVector<f64>) -> DVector<f64> {
        self.basis.tr_mul(p)
    }

    /// Projection of the full parameter vector `p` back into full coordinates.
    pub fn reconstruct(&self, p: &DVector<f64>) -> DVector<f64> {
        match &self.kept {
            Some(kept) => {
                let mut out = DVector::zeros(p.len());
                for &i in kept {
                    out[i] = p[i];
                }
                out
            }
            None => &self.basis * self.reduce(p),
        }
    }
}

/// Keeps the `r` largest diagonal entries (lower index wins ties); the
/// others are frozen at zero.
pub fn reduce_parameters_select(ws: &DMatrix<f64>, r: usize) -> Result<ParameterProjection> {
    let np = ws.nrows();
    check_order(r, np)?;
    let mut order: Vec<usize> = (0..np).collect();
    order.sort_by(|&a, &b| ws[(b, b)].total_cmp(&ws[(a, a)]).then(a.cmp(&b)));
    let mut kept = order[..r].to_vec();
    kept.sort_unstable();
    let mut basis = DMatrix::zeros(np, r);
    for (j, &i) in kept.iter().enumerate() {
        basis[(i, j)] = 1.0;
    }
    Ok(ParameterProjection { basis, kept: Some(kept) })
}

/// Orthogonal projection onto the `r` dominant eigenvectors (by magnitude)
/// of the symmetric part of `w`.
pub fn reduce_parameters_project(w: &DMatrix<f64>, r: usize) -> Result<ParameterProjection> {
    if !w.is_square() {
        return Err(Error::InvalidDimension(format!("parameter gramian is {:?}", w.shape())));
    }
    check_order(r, w.nrows())?;
    let (_, vecs) = sym_eig_sorted(w, f64::abs);
    Ok(ParameterProjection { basis: vecs.columns(0, r).into_owned(), kept: None })
}

/// Galerkin projection `f_r = left · f(right · x_r)`, `g_r = g(right · x_r)`.
pub fn project_model(model: &SystemModel, pair: &ProjectionPair) -> Result<ReducedModel> {
    let d = model.dims();
    if pair.states() != d.states {
        return Err(Error::InvalidDimension(format!(
            "projection acts on {} states, model has {}",
            pair.states(),
            d.states
        )));
    }
    let f = model.vector_field();
    let g = model.output_map();
    let left = Arc::new(pair.left().clone());
    let right = Arc::new(pair.right().clone());
    let right_g = right.clone();
    let reduced = SystemModel::new(
        SystemDims::new(d.inputs, pair.order(), d.outputs, d.params),
        model.params().clone(),
        move |xr, u, p| &*left * f(&(&*right * xr), u, p),
        move |xr, u, p| g(&(&*right_g * xr), u, p),
    )?;
    Ok(ReducedModel { model: reduced, pair: pair.clone(), provenance: vec![] })
}

/// Pointwise `‖Δy_k‖ / max_k ‖y_k‖` and aggregate `‖Δy‖_F / ‖y‖_F`.
pub fn relative_output_error(y_full: &SnapshotMatrix, y_red: &SnapshotMatrix) -> Result<(DVector<f64>, f64)> {
    let (a, b) = (y_full.data(), y_red.data());
    if a.shape() != b.shape() || y_full.grid() != y_red.grid() {
        return Err(Error::InvalidDimension(format!(
            "output snapshots {:?} and {:?} differ in shape or grid",
            a.shape(),
            b.shape()
        )));
    }
    let peak = a.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let total = a.norm();
    if peak == 0.0 || total == 0.0 {
        return Err(Error::UndefinedRelativeError);
    }
    let diff = a - b;
    let series = DVector::from_iterator(a.ncols(), diff.column_iter().map(|c| c.norm() / peak));
    Ok((series, diff.norm() / total))
}
