//! Trajectory snapshots and the centering applied before gramian assembly.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::system::TimeGrid;

/// What a trajectory is centered against before its outer products are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CenteringKind {
    /// Row-wise arithmetic mean over time.
    Mean,
    /// Row-wise median over time.
    Median,
    /// A fixed reference (steady state or steady output).
    #[default]
    Steady,
    /// The rank-`rank` truncated SVD reconstruction of the snapshots.
    Pod { rank: usize },
}

impl CenteringKind {
    pub const POD: CenteringKind = CenteringKind::Pod { rank: 1 };
}

/// A time-sampled trajectory: one column per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: DMatrix<f64>,
    grid: TimeGrid,
}

impl SnapshotMatrix {
    pub fn new(data: DMatrix<f64>, grid: TimeGrid) -> Result<Self> {
        if data.ncols() != grid.steps() {
            return Err(Error::InvalidSnapshot(format!(
                "snapshot has {} columns but the grid has {} samples",
                data.ncols(),
                grid.steps()
            )));
        }
        check_finite(&data)?;
        Ok(Self { data, grid })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }
}

/// The quantity subtracted by [`center`].
#[derive(Debug, Clone, PartialEq)]
pub enum Center {
    Vector(DVector<f64>),
    Matrix(DMatrix<f64>),
}

pub(crate) fn check_finite(data: &DMatrix<f64>) -> Result<()> {
    if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
        let (r, c) = (pos % data.nrows().max(1), pos / data.nrows().max(1));
        return Err(Error::InvalidSnapshot(format!("non-finite entry at row {r}, column {c}")));
    }
    Ok(())
}

/// Centers a snapshot matrix and returns the subtracted center.
pub fn center(
    snapshots: &SnapshotMatrix,
    kind: CenteringKind,
    reference: Option<&DVector<f64>>,
) -> Result<(SnapshotMatrix, Center)> {
    let mut data = snapshots.data.clone();
    let c = center_in_place(&mut data, kind, reference)?;
    Ok((SnapshotMatrix { data, grid: snapshots.grid }, c))
}

pub(crate) fn center_in_place(
    data: &mut DMatrix<f64>,
    kind: CenteringKind,
    reference: Option<&DVector<f64>>,
) -> Result<Center> {
    if data.nrows() == 0 || data.ncols() == 0 {
        return Err(Error::InvalidSnapshot("empty snapshot matrix".into()));
    }
    check_finite(data)?;
    match kind {
        CenteringKind::Mean => {
            let mean = data.column_mean();
            subtract_columnwise(data, &mean);
            Ok(Center::Vector(mean))
        }
        CenteringKind::Median => {
            let med = DVector::from_iterator(data.nrows(), data.row_iter().map(|r| median(r.iter().copied())));
            subtract_columnwise(data, &med);
            Ok(Center::Vector(med))
        }
        CenteringKind::Steady => {
            let r = reference.ok_or(Error::MissingReference)?;
            if r.len() != data.nrows() {
                return Err(Error::InvalidDimension(format!(
                    "steady reference has length {}, snapshots have {} rows",
                    r.len(),
                    data.nrows()
                )));
            }
            subtract_columnwise(data, r);
            Ok(Center::Vector(r.clone()))
        }
        CenteringKind::Pod { rank } => {
            let recon = pod_reconstruction(data, rank)?;
            *data -= &recon;
            Ok(Center::Matrix(recon))
        }
    }
}

fn subtract_columnwise(data: &mut DMatrix<f64>, v: &DVector<f64>) {
    for mut col in data.column_iter_mut() {
        col -= v;
    }
}

fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Leading-`rank` left singular subspace of `data`, applied back to `data`.
///
/// Computed from the eigendecomposition of `data data^T`, which is the small
/// side for snapshot matrices (rows << time samples).
fn pod_reconstruction(data: &DMatrix<f64>, rank: usize) -> Result<DMatrix<f64>> {
    if rank == 0 || rank > data.nrows() {
        return Err(Error::InvalidArgument(format!(
            "POD rank {rank} must lie in 1..={}",
            data.nrows()
        )));
    }
    let corr = data * data.transpose();
    let eig = SymmetricEigen::new(corr);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let basis = DMatrix::from_fn(data.nrows(), rank, |i, j| eig.eigenvectors[(i, order[j])]);
    let coeffs = basis.transpose() * data;
    Ok(basis * coeffs)
}
