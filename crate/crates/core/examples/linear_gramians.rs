//! Empirical gramians of a random stable linear system against the exact
//! Lyapunov and Sylvester solutions.

use emgram::linalg::relative_frobenius;
use emgram::oracle::{lyapunov_ctrb, lyapunov_obsv, sylvester_cross, LinearSystem};
use emgram::{empirical_controllability, empirical_cross, empirical_observability, GramianConfig, SystemDims, SystemModel, TimeGrid};
use nalgebra::DVector;

fn main() -> emgram::Result<()> {
    let sys = LinearSystem::random_symmetric(6, 2, 2, 7);
    let (a, b, c) = (sys.a.clone(), sys.b.clone(), sys.c.clone());
    let model = SystemModel::new(
        SystemDims::new(2, 6, 2, 0),
        DVector::zeros(0),
        move |x, u, _| &a * x + &b * u,
        move |x, _, _| &c * x,
    )?;

    // Ten time constants of the slowest mode.
    let grid = TimeGrid::new(0.0, 1e-4, 10.0 / sys.slowest_rate())?;
    let cfg = GramianConfig { jobs: 4, ..GramianConfig::new(model.dims(), grid) };

    let wc = empirical_controllability(&model, &cfg)?.matrix;
    let wo = empirical_observability(&model, &cfg)?.matrix;
    let wx = empirical_cross(&model, &cfg)?.matrix;

    println!("W_C error {:.2e}", relative_frobenius(&wc, &lyapunov_ctrb(&sys.a, &sys.b)?));
    println!("W_O error {:.2e}", relative_frobenius(&wo, &lyapunov_obsv(&sys.a, &sys.c)?));
    println!("W_X error {:.2e}", relative_frobenius(&wx, &sylvester_cross(&sys.a, &sys.b, &sys.c)?));
    Ok(())
}
