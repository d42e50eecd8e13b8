//! Dense linear algebra helpers with deterministic ordering and signs.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

/// Flips each column so its largest-magnitude entry is positive (lower index
/// wins ties). Returns the applied signs.
pub(crate) fn fix_column_signs(m: &mut DMatrix<f64>) -> Vec<f64> {
    let mut signs = Vec::with_capacity(m.ncols());
    for mut col in m.column_iter_mut() {
        let mut best = 0usize;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        let s = if !col.is_empty() && col[best] < 0.0 { -1.0 } else { 1.0 };
        if s < 0.0 {
            col.neg_mut();
        }
        signs.push(s);
    }
    signs
}

/// Thin SVD `m = U diag(s) V^T` with descending singular values and
/// deterministic vector signs.
pub(crate) fn svd_sorted(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let svd = SVD::new(m.clone(), true, true);
    let mut u = svd.u.expect("left singular vectors requested");
    let mut v = svd.v_t.expect("right singular vectors requested").transpose();
    let s = svd.singular_values;
    let signs = fix_column_signs(&mut u);
    for (j, sg) in signs.iter().enumerate() {
        if *sg < 0.0 {
            v.column_mut(j).neg_mut();
        }
    }
    (u, s, v)
}

/// Symmetric eigendecomposition of `(m + m^T)/2` ordered by `key(λ)`
/// descending (ties: lower original index first), with sign-fixed vectors.
pub(crate) fn sym_eig_sorted(m: &DMatrix<f64>, key: impl Fn(f64) -> f64) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        key(eig.eigenvalues[b])
            .total_cmp(&key(eig.eigenvalues[a]))
            .then(a.cmp(&b))
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    fix_column_signs(&mut vectors);
    (values, vectors)
}

/// Pseudo-inverse discarding singular values at or below `tol * σ_max`
/// (and exact zeros).
pub fn pinv(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if m.is_empty() {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let smax = svd.singular_values.max();
    let cut = tol * smax;
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cut && s > 0.0 {
            // out += v_k u_k^T / s
            out.ger(1.0 / s, &vt.row(k).transpose(), &u.column(k), 1.0);
        }
    }
    out
}

/// `‖a − b‖_F / ‖b‖_F` (absolute when `b` vanishes).
pub fn relative_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let nb = b.norm();
    let d = (a - b).norm();
    if nb == 0.0 {
        d
    } else {
        d / nb
    }
}

/// Copies the upper triangle onto the lower one.
pub(crate) fn mirror_upper(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            m[(i, j)] = m[(j, i)];
        }
    }
}
