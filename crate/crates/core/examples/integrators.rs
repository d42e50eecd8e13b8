//! Convergence of the three fixed-step integrators on x' = -x.

use emgram::{integrate, InputSignal, IntegratorKind, SystemDims, SystemModel, TimeGrid};
use nalgebra::DVector;

fn max_error(model: &SystemModel, kind: IntegratorKind, dt: f64) -> emgram::Result<f64> {
    let grid = TimeGrid::new(0.0, dt, 1.0)?;
    let x0 = DVector::from_element(1, 1.0);
    let xs = integrate(model, kind, &grid, &x0, &InputSignal::Zero { channels: 1 }, &DVector::zeros(0))?;
    Ok((0..grid.steps()).map(|k| (xs.data()[(0, k)] - (-grid.time(k)).exp()).abs()).fold(0.0, f64::max))
}

fn main() -> emgram::Result<()> {
    let model = SystemModel::new(SystemDims::new(1, 1, 1, 0), DVector::zeros(0), |x, _, _| -x, |x, _, _| x.clone())?;
    for kind in [IntegratorKind::Euler, IntegratorKind::AdamsBashforth2, IntegratorKind::Leapfrog] {
        let coarse = max_error(&model, kind, 0.01)?;
        let fine = max_error(&model, kind, 0.005)?;
        println!("{kind:?}: error {coarse:.3e}, halving dt divides it by {:.2}", coarse / fine);
    }
    Ok(())
}
