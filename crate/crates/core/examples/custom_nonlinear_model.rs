//! A hand-written nonlinear model: two coupled damped pendulums with a
//! friction parameter each.

use emgram::{empirical_gramian, CenteringKind, GramianConfig, GramianType, RotationKind, ScaleKind, SystemDims, SystemModel, TimeGrid};
use nalgebra::{DVector, SymmetricEigen};

fn main() -> emgram::Result<()> {
    // x = (angle1, rate1, angle2, rate2)
    let model = SystemModel::new(
        SystemDims::new(1, 4, 2, 2),
        DVector::from_vec(vec![0.5, 0.8]),
        |x, u, p| {
            let coupling = 0.3 * (x[2] - x[0]);
            DVector::from_vec(vec![
                x[1],
                -x[0].sin() - p[0] * x[1] + coupling + u[0],
                x[3],
                -x[2].sin() - p[1] * x[3] - coupling,
            ])
        },
        |x, _, _| DVector::from_vec(vec![x[0], x[2]]),
    )?;

    let mut cfg = GramianConfig::new(model.dims(), TimeGrid::new(0.0, 0.01, 10.0)?);
    cfg.spec = cfg.spec.with_rotation(RotationKind::Signed).with_scales(ScaleKind::Geometric, 3);
    cfg.centering = CenteringKind::Mean;
    // Perturb around a displaced configuration; at rest friction has no effect.
    cfg.spec = cfg.spec.with_steady(DVector::zeros(1), DVector::from_vec(vec![0.6, 0.0, -0.4, 0.0]));

    let wo = empirical_gramian(GramianType::Observability, &model, &cfg, None)?;
    println!("observability spectrum {:.3e}", SymmetricEigen::new(wo.state().matrix.clone()).eigenvalues.transpose());

    let ws = empirical_gramian(GramianType::Sensitivity, &model, &cfg, None)?;
    println!("parameter sensitivities {:.3e}", ws.param().unwrap().matrix.diagonal().transpose());

    let wi = empirical_gramian(GramianType::Identifiability, &model, &cfg, None)?;
    println!("identifiability\n{:.3e}", wi.param().unwrap().matrix);
    Ok(())
}
