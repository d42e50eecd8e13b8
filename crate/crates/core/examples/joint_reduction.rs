//! Combined state and parameter reduction from one joint gramian.

use emgram::bench::{generate_benchmark, run_experiment, BenchmarkConfig, Experiment};
use emgram::joint_gramian;
use emgram::reduce::{reduce_parameters_project, truncate_cross};
use emgram::GramianConfig;

fn main() -> emgram::Result<()> {
    let cfg = BenchmarkConfig::sized(30, 3);
    let bench = generate_benchmark(&cfg)?;
    let (wx, wi) = joint_gramian(&bench.model, &GramianConfig::new(bench.model.dims(), cfg.grid))?;
    println!("cross gramian {}x{}, cross-identifiability {}x{}", wx.dim(), wx.dim(), wi.dim(), wi.dim());

    let states = truncate_cross(&wx.matrix, 6)?;
    let params = reduce_parameters_project(&wi.matrix, 6)?;
    let p = bench.model.params();
    let back = params.reconstruct(p);
    println!("states 30 -> {}, parameters 30 -> {}", states.order(), params.order());
    println!("parameter reconstruction error {:.3e}", (back - p).norm() / p.norm());

    // The same pipeline end to end:
    let r = run_experiment(&BenchmarkConfig { experiment: Experiment::Wj, order: 6, param_order: 6, ..cfg })?;
    println!("wj output error {:.3e}", r.aggregate);
    Ok(())
}
