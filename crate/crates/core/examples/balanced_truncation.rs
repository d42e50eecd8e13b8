//! Balanced truncation of the nonlinear benchmark `x' = A asinh(x) + B u + p`.

use emgram::bench::{generate_benchmark, BenchmarkConfig};
use emgram::reduce::{balance, project_model, relative_output_error};
use emgram::{empirical_controllability, empirical_observability, integrate, output_trajectory, GramianConfig, InputSignal};
use nalgebra::DVector;

fn main() -> emgram::Result<()> {
    let cfg = BenchmarkConfig::sized(40, 4);
    let bench = generate_benchmark(&cfg)?;
    let model = &bench.model;
    let gcfg = GramianConfig::new(model.dims(), cfg.grid);

    let wc = empirical_controllability(model, &gcfg)?.matrix;
    let wo = empirical_observability(model, &gcfg)?.matrix;
    let (pair, hsv) = balance(&wc, &wo, 8)?;
    println!("leading Hankel values {:.3e}", hsv.rows(0, 8).transpose());

    let reduced = project_model(model, &pair)?;
    let u = InputSignal::impulse(4);
    let p = model.params().clone();
    let xs = integrate(model, gcfg.integrator, &cfg.grid, &DVector::zeros(40), &u, &p)?;
    let y = output_trajectory(model, &xs, &u, &p)?;
    let xr = integrate(&reduced.model, gcfg.integrator, &cfg.grid, &DVector::zeros(8), &u, &p)?;
    let yr = output_trajectory(&reduced.model, &xr, &u, &p)?;
    let (_, err) = relative_output_error(&y, &yr)?;
    println!("order 40 -> {}: relative output error {err:.3e}", reduced.pair.order());
    Ok(())
}
