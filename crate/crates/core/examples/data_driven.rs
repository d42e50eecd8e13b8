//! Gramians from recorded trajectories instead of simulation. Here the data
//! come from the simulator itself; any source with the same run order works.

use emgram::io::{read_snapshots, write_snapshots};
use emgram::oracle::LinearSystem;
use emgram::{collect_snapshots, empirical_gramian, GramianConfig, GramianType, SystemDims, SystemModel, TimeGrid};
use nalgebra::DVector;

fn main() -> emgram::Result<()> {
    let sys = LinearSystem::random_symmetric(5, 2, 2, 3);
    let (a, b, c) = (sys.a, sys.b, sys.c);
    let model = SystemModel::new(
        SystemDims::new(2, 5, 2, 0),
        DVector::zeros(0),
        move |x, u, _| &a * x + &b * u,
        move |x, _, _| &c * x,
    )?;
    let cfg = GramianConfig::new(model.dims(), TimeGrid::new(0.0, 0.01, 5.0)?);

    let data = collect_snapshots(GramianType::Cross, &model, &cfg)?;
    println!("{} state runs, {} output runs", data.state_runs.len(), data.output_runs.len());

    let dir = std::env::temp_dir().join("emgram-data-driven");
    std::fs::create_dir_all(&dir).map_err(|e| emgram::Error::Io { path: dir.display().to_string(), message: e.to_string() })?;
    let path = dir.join("snapshots.txt");
    write_snapshots(&path, &data)?;
    let loaded = read_snapshots(&path)?;

    let simulated = empirical_gramian(GramianType::Cross, &model, &cfg, None)?;
    let from_data = empirical_gramian(GramianType::Cross, &model, &cfg, Some(&loaded))?;
    println!("identical: {}", simulated == from_data);
    Ok(())
}
