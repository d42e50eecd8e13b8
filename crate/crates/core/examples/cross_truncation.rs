//! Direct truncation with the cross gramian, one gramian instead of two.

use emgram::bench::{generate_benchmark, run_pipeline, BenchmarkConfig, Experiment, PipelineConfig};

fn main() -> emgram::Result<()> {
    let cfg = BenchmarkConfig::sized(40, 4);
    let bench = generate_benchmark(&cfg)?;
    for order in [2, 4, 8, 16] {
        let pc = PipelineConfig::new(&bench.model, cfg.grid, order, 4);
        let wx = run_pipeline(Experiment::Wx, &bench.model, &pc)?;
        let bt = run_pipeline(Experiment::Bt, &bench.model, &pc)?;
        println!(
            "r={order:2}  wx {:.3e} ({:.3}s)  bt {:.3e} ({:.3}s)",
            wx.aggregate,
            wx.gramian_seconds + wx.reduction_seconds,
            bt.aggregate,
            bt.gramian_seconds + bt.reduction_seconds
        );
    }
    Ok(())
}
