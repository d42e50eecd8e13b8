//! Analytical gramians of linear time-invariant systems, solved densely by
//! Kronecker vectorization. Intended for desk-scale systems (n ≤ 60), where
//! they serve as ground truth for the empirical gramians.
//!
//! Conventions (all match the time-domain integrals the empirical gramians
//! approximate):
//!
//! * controllability: `A W + W Aᵀ = −B Bᵀ`
//! * observability:   `Aᵀ W + W A = −Cᵀ C`
//! * cross:           `A W + W A = −B C`

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Eigenvalues with real part above `-HURWITZ_TOL` are rejected.
pub const HURWITZ_TOL: f64 = 1e-10;

/// `x' = A x + B u`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() || n == 0 || b.nrows() != n || c.ncols() != n {
            return Err(Error::InvalidDimension(format!(
                "A {:?}, B {:?}, C {:?} are inconsistent",
                a.shape(),
                b.shape(),
                c.shape()
            )));
        }
        Ok(Self { a, b, c })
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Largest real part among the eigenvalues of `A`.
    pub fn spectral_abscissa(&self) -> f64 {
        self.a.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest |real part| among the eigenvalues of `A` (slowest decay rate).
    pub fn slowest_rate(&self) -> f64 {
        self.a.complex_eigenvalues().iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min)
    }

    pub fn check_hurwitz(&self) -> Result<()> {
        let s = self.spectral_abscissa();
        if s > -HURWITZ_TOL {
            return Err(Error::NotHurwitz(s));
        }
        Ok(())
    }

    /// Random stable system with `A = −M Mᵀ / n − I` (symmetric) and uniform
    /// `(−1, 1)` entries in `M`, `B`, `C`, drawn row by row from ChaCha8.
    pub fn random_symmetric(n: usize, m: usize, o: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |r: usize, c: usize| {
            let mut out = DMatrix::zeros(r, c);
            for i in 0..r {
                for j in 0..c {
                    out[(i, j)] = rng.random_range(-1.0..1.0);
                }
            }
            out
        };
        let mm = uniform(n, n);
        let b = uniform(n, m);
        let c = uniform(o, n);
        let mut a = -(&mm * mm.transpose()) / n as f64 - DMatrix::identity(n, n);
        crate::linalg::mirror_upper(&mut a);
        Self { a, b, c }
    }
}

/// Solves `(I ⊗ L + R ⊗ I) vec(W) = −vec(Q)`, i.e. `L W + W Rᵀ = −Q`.
fn kronecker_solve(l: &DMatrix<f64>, r: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = l.nrows();
    let nn = n * n;
    let mut k = DMatrix::zeros(nn, nn);
    // column-major vec: index(i, j) = i + n j
    for j in 0..n {
        for i in 0..n {
            let row = i + n * j;
            for p in 0..n {
                k[(row, p + n * j)] += l[(i, p)];
                k[(row, i + n * p)] += r[(j, p)];
            }
        }
    }
    let rhs = DVector::from_iterator(nn, q.iter().map(|v| -v));
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Solver("singular Kronecker system".into()))?;
    Ok(DMatrix::from_column_slice(n, n, sol.as_slice()))
}

/// Controllability gramian: `A W + W Aᵀ = −B Bᵀ`, symmetrized.
pub fn lyapunov_ctrb(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sys = LinearSystem::new(a.clone(), b.clone(), DMatrix::zeros(0, a.nrows()))?;
    sys.check_hurwitz()?;
    let w = kronecker_solve(a, a, &(b * b.transpose()))?;
    Ok((&w + w.transpose()) * 0.5)
}

/// Observability gramian: `Aᵀ W + W A = −Cᵀ C`, symmetrized.
pub fn lyapunov_obsv(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sys = LinearSystem::new(a.clone(), DMatrix::zeros(a.nrows(), 0), c.clone())?;
    sys.check_hurwitz()?;
    let at = a.transpose();
    let w = kronecker_solve(&at, &at, &(c.transpose() * c))?;
    Ok((&w + w.transpose()) * 0.5)
}

/// Cross gramian: `A W + W A = −B C`, not symmetrized.
pub fn sylvester_cross(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sys = LinearSystem::new(a.clone(), b.clone(), c.clone())?;
    if sys.inputs() != sys.outputs() {
        return Err(Error::SquareSystemRequired { inputs: sys.inputs(), outputs: sys.outputs() });
    }
    sys.check_hurwitz()?;
    kronecker_solve(a, &a.transpose(), &(b * c))
}

/// `sqrt(eig(Wc Wo))`, clamped at zero and sorted descending.
pub fn hankel_values(wc: &DMatrix<f64>, wo: &DMatrix<f64>) -> Result<DVector<f64>> {
    if wc.shape() != wo.shape() || !wc.is_square() {
        return Err(Error::InvalidDimension(format!(
            "gramians {:?} and {:?} differ",
            wc.shape(),
            wo.shape()
        )));
    }
    let prod = wc * wo;
    let mut vals: Vec<f64> = prod.complex_eigenvalues().iter().map(|z| z.re.max(0.0).sqrt()).collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    Ok(DVector::from_vec(vals))
}
