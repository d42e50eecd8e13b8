//! Parameter reduction by sensitivity (keep the largest diagonal entries) and
//! by identifiability (project onto the dominant eigenvectors).

use emgram::bench::{run_experiment, BenchmarkConfig, ExpansionPoint, Experiment};

fn main() -> emgram::Result<()> {
    for expansion in [ExpansionPoint::Origin, ExpansionPoint::Equilibrium] {
        let base = BenchmarkConfig { expansion, jobs: 4, ..BenchmarkConfig::sized(40, 4) };
        let ws = run_experiment(&BenchmarkConfig { experiment: Experiment::Ws, param_order: 8, ..base.clone() })?;
        let wi = run_experiment(&BenchmarkConfig { experiment: Experiment::Wi, param_order: 8, ..base })?;
        println!("{expansion:?}: 40 -> 8 parameters, ws {:.3e}, wi {:.3e}", ws.aggregate, wi.aggregate);
        println!("  sensitivity keeps {:?}", ws.kept_params.unwrap_or_default());
    }
    Ok(())
}
