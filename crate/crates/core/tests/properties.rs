use emgram::gramian::GramianType;
use emgram::io::{format_matrix, parse_matrix};
use emgram::linalg::relative_frobenius;
use emgram::oracle::{hankel_values, lyapunov_ctrb, LinearSystem};
use emgram::perturbation::{make_directions, make_scales};
use emgram::pgramian::augment_for_observability;
use emgram::reduce::{balance, relative_output_error, truncate_cross};
use emgram::schur::{schur_complement, AugmentedBlocks};
use emgram::snapshot::center;
use emgram::{
    collect_snapshots, empirical_controllability, empirical_gramian, empirical_observability, identifiability_gramian,
    integrate, sensitivity_gramian, CenteringKind, GramianConfig, InputSignal, IntegratorKind, RotationKind, ScaleKind,
    SnapshotMatrix, SystemDims, SystemModel, TimeGrid,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
    let m = random_matrix(n, n, seed);
    &m * m.transpose() + DMatrix::identity(n, n) * 0.1
}

fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    random_matrix(n, n, seed).qr().q()
}

fn linear(sys: &LinearSystem) -> SystemModel {
    let (a, b, c) = (sys.a.clone(), sys.b.clone(), sys.c.clone());
    SystemModel::new(
        SystemDims::new(b.ncols(), a.nrows(), c.nrows(), 0),
        DVector::zeros(0),
        move |x, u, _| &a * x + &b * u,
        move |x, _, _| &c * x,
    )
    .unwrap()
}

fn min_eig(w: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(w.clone()).eigenvalues.min()
}

fn small_grid() -> TimeGrid {
    TimeGrid::new(0.0, 0.01, 1.0).unwrap()
}

/// `x' = A x + u + p[perm]` in coordinates where state `i` is driven by one parameter.
fn param_model(n: usize, seed: u64, perm: &[usize], p: &DVector<f64>) -> SystemModel {
    let a = LinearSystem::random_symmetric(n, 1, 1, seed).a;
    let perm = perm.to_vec();
    SystemModel::new(
        SystemDims::new(1, n, 1, n),
        p.clone(),
        move |x, u, p| {
            let mut dx = &a * x;
            for i in 0..dx.len() {
                dx[i] += u[0] + p[perm[i]].sin();
            }
            dx
        },
        |x, _, p| DVector::from_element(1, x.sum() + p[0] * x[0]),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn directions_are_orthonormal(dim in 1usize..12) {
        let e = make_directions(dim).unwrap();
        let m = DMatrix::from_columns(&e);
        prop_assert_eq!(m.transpose() * &m, DMatrix::identity(dim, dim));
    }

    #[test]
    fn scales_increase_to_maximum(s_max in 1e-3f64..1e3, q in 1usize..8, k in 0usize..3) {
        let kind = [ScaleKind::Linear, ScaleKind::Geometric, ScaleKind::Logarithmic][k];
        let s = make_scales(s_max, q, kind).unwrap();
        prop_assert_eq!(s.len(), q);
        prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(s[q - 1].to_bits(), s_max.to_bits());
    }

    #[test]
    fn mean_centering_zeroes_row_sums(rows in 1usize..5, cols in 2usize..40, seed in any::<u64>()) {
        let data = random_matrix(rows, cols, seed) * 100.0;
        let grid = TimeGrid::new(0.0, 0.1, 0.1 * (cols - 1) as f64).unwrap();
        prop_assume!(grid.steps() == cols);
        let big = data.amax();
        let (c, _) = center(&SnapshotMatrix::new(data, grid).unwrap(), CenteringKind::Mean, None).unwrap();
        for r in 0..rows {
            prop_assert!(c.data().row(r).sum().abs() <= 1e-12 * cols as f64 * big);
        }
    }

    #[test]
    fn schur_of_spd_is_spd(n in 2usize..8, split in 1usize..7, seed in any::<u64>()) {
        prop_assume!(split < n);
        let s = schur_complement(&AugmentedBlocks::split(&random_spd(n, seed), split).unwrap(), 0.0).unwrap();
        prop_assert!(relative_frobenius(&s, &s.transpose()) < 1e-12);
        prop_assert!(min_eig(&s) > -1e-10 * s.norm());
    }

    #[test]
    fn impulse_integrates_to_amplitude(amp in -10.0f64..10.0, dt in 1e-4f64..0.5) {
        let u = InputSignal::Impulse { amplitude: DVector::from_element(1, amp) };
        let total: f64 = (0..50).map(|k| u.channel_value(k, dt, 0)).sum::<f64>() * dt;
        prop_assert!((total - amp).abs() <= 2.0 * f64::EPSILON * amp.abs());
    }

    #[test]
    fn integration_is_deterministic(n in 1usize..6, seed in any::<u64>(), k in 0usize..3) {
        let kind = [IntegratorKind::Euler, IntegratorKind::AdamsBashforth2, IntegratorKind::Leapfrog][k];
        let model = linear(&LinearSystem::random_symmetric(n, 2, 1, seed));
        let x0 = random_matrix(n, 1, seed).column(0).into_owned();
        let run = || integrate(&model, kind, &small_grid(), &x0, &InputSignal::step(2), &DVector::zeros(0)).unwrap();
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn gramians_symmetric_and_psd(n in 1usize..7, m in 1usize..3, seed in any::<u64>()) {
        let model = linear(&LinearSystem::random_symmetric(n, m, m, seed));
        let cfg = GramianConfig::new(model.dims(), small_grid());
        for w in [empirical_controllability(&model, &cfg).unwrap().matrix, empirical_observability(&model, &cfg).unwrap().matrix] {
            prop_assert_eq!(&w, &w.transpose());
            prop_assert!(min_eig(&w) >= -1e-10 * w.norm());
        }
    }

    #[test]
    fn linear_scale_invariance(n in 1usize..6, seed in any::<u64>()) {
        let model = linear(&LinearSystem::random_symmetric(n, 2, 2, seed));
        let one = GramianConfig::new(model.dims(), small_grid());
        let mut two = one.clone();
        two.spec = two.spec.with_scales(ScaleKind::Linear, 2);
        let a = empirical_controllability(&model, &one).unwrap().matrix;
        let b = empirical_controllability(&model, &two).unwrap().matrix;
        prop_assert!(relative_frobenius(&b, &a) <= 1e-10);
    }

    #[test]
    fn linear_sign_invariance(n in 1usize..6, seed in any::<u64>()) {
        let model = linear(&LinearSystem::random_symmetric(n, 2, 2, seed));
        let single = GramianConfig::new(model.dims(), small_grid());
        let mut signed = single.clone();
        signed.spec = signed.spec.with_rotation(RotationKind::Signed);
        let c = (empirical_controllability(&model, &single).unwrap().matrix, empirical_controllability(&model, &signed).unwrap().matrix);
        let o = (empirical_observability(&model, &single).unwrap().matrix, empirical_observability(&model, &signed).unwrap().matrix);
        prop_assert!(relative_frobenius(&c.1, &c.0) <= 1e-12);
        prop_assert!(relative_frobenius(&o.1, &o.0) <= 1e-12);
    }

    #[test]
    fn data_pathway_is_bit_identical(n in 1usize..6, seed in any::<u64>(), k in 0usize..3) {
        let kind = [GramianType::Controllability, GramianType::Observability, GramianType::Cross][k];
        let model = linear(&LinearSystem::random_symmetric(n, 2, 2, seed));
        let mut cfg = GramianConfig::new(model.dims(), small_grid());
        cfg.centering = CenteringKind::Mean;
        let data = collect_snapshots(kind, &model, &cfg).unwrap();
        let sim = empirical_gramian(kind, &model, &cfg, None).unwrap();
        prop_assert_eq!(empirical_gramian(kind, &model, &cfg, Some(&data)).unwrap(), sim);
    }

    #[test]
    fn parameter_gramian_shapes(n in 1usize..5, seed in any::<u64>()) {
        let p = DVector::from_fn(n, |i, _| 0.1 + 0.2 * i as f64);
        let perm: Vec<usize> = (0..n).collect();
        let model = param_model(n, seed, &perm, &p);
        let cfg = GramianConfig::new(model.dims(), small_grid());
        let (_, ws) = sensitivity_gramian(&model, &cfg).unwrap();
        prop_assert_eq!(ws.matrix.shape(), (n, n));
        for i in 0..n {
            prop_assert!(ws.matrix[(i, i)] >= 0.0);
            for j in 0..n {
                prop_assert!(i == j || ws.matrix[(i, j)] == 0.0);
            }
        }
        let (_, wi) = identifiability_gramian(&model, &cfg).unwrap();
        prop_assert_eq!(wi.matrix.shape(), (n, n));
        prop_assert!(relative_frobenius(&wi.matrix, &wi.matrix.transpose()) <= 1e-10);
    }

    #[test]
    fn sensitivity_is_permutation_equivariant(seed in any::<u64>(), shift in 1usize..3) {
        let n = 3;
        let p = DVector::from_vec(vec![0.05, 0.3, 0.7]);
        let ident: Vec<usize> = (0..n).collect();
        // Parameter k of the permuted model is parameter sigma(k) of the original.
        let sigma: Vec<usize> = (0..n).map(|k| (k + shift) % n).collect();
        let mut inv = vec![0; n];
        for (k, &s) in sigma.iter().enumerate() {
            inv[s] = k;
        }
        let q = DVector::from_fn(n, |k, _| p[sigma[k]]);
        let base = param_model(n, seed, &ident, &p);
        let permuted = param_model(n, seed, &inv, &q);
        let cfg = GramianConfig::new(base.dims(), small_grid());
        let (_, a) = sensitivity_gramian(&base, &cfg).unwrap();
        let (_, b) = sensitivity_gramian(&permuted, &cfg).unwrap();
        for (k, &s) in sigma.iter().enumerate() {
            prop_assert_eq!(b.matrix[(k, k)], a.matrix[(s, s)]);
        }
    }

    #[test]
    fn parameter_states_stay_constant(n in 1usize..5, seed in any::<u64>(), k in 0usize..3) {
        let kind = [IntegratorKind::Euler, IntegratorKind::AdamsBashforth2, IntegratorKind::Leapfrog][k];
        let p = DVector::from_fn(n, |i, _| 0.3 - 0.1 * i as f64);
        let aug = augment_for_observability(&param_model(n, seed, &(0..n).collect::<Vec<_>>(), &p)).unwrap();
        let x0 = aug.initial_state(&DVector::from_element(n, 0.5));
        let xs = integrate(aug.model(), kind, &small_grid(), &x0, &InputSignal::impulse(1), &DVector::zeros(0)).unwrap();
        for r in n..2 * n {
            prop_assert!(xs.data().row(r).iter().all(|v| *v == p[r - n]));
        }
    }

    #[test]
    fn balance_is_biorthogonal(n in 2usize..9, seed in any::<u64>()) {
        let wc = random_spd(n, seed);
        let wo = random_spd(n, seed.wrapping_add(1));
        for r in 1..=n {
            let (pair, _) = balance(&wc, &wo, r).unwrap();
            prop_assert!((pair.left() * pair.right() - DMatrix::identity(r, r)).norm() <= 1e-8);
        }
    }

    #[test]
    fn cross_truncation_is_orthogonal(n in 2usize..9, r in 1usize..9, seed in any::<u64>()) {
        prop_assume!(r <= n);
        let pair = truncate_cross(&random_matrix(n, n, seed), r).unwrap();
        let v = pair.right();
        prop_assert!((v.transpose() * v - DMatrix::identity(r, r)).norm() <= 1e-12);
    }

    #[test]
    fn output_error_is_rotation_invariant(o in 1usize..5, seed in any::<u64>()) {
        let grid = small_grid();
        let t = grid.steps();
        let full = random_matrix(o, t, seed);
        let red = &full + random_matrix(o, t, seed.wrapping_add(1)) * 0.01;
        let q = random_orthogonal(o, seed.wrapping_add(2));
        let snap = |m: DMatrix<f64>| SnapshotMatrix::new(m, grid).unwrap();
        let (_, e0) = relative_output_error(&snap(full.clone()), &snap(red.clone())).unwrap();
        let (_, e1) = relative_output_error(&snap(&q * full), &snap(&q * red)).unwrap();
        prop_assert!((e1 - e0).abs() <= 1e-12 * e0.max(1.0));
    }

    #[test]
    fn hankel_values_similarity_invariant(n in 2usize..7, seed in any::<u64>()) {
        let wc = random_spd(n, seed);
        let wo = random_spd(n, seed.wrapping_add(1));
        let s = random_matrix(n, n, seed.wrapping_add(2)) + DMatrix::identity(n, n) * 3.0;
        let si = s.clone().try_inverse().unwrap();
        let h0 = hankel_values(&wc, &wo).unwrap();
        let h1 = hankel_values(&(&s * &wc * s.transpose()), &(si.transpose() * &wo * &si)).unwrap();
        prop_assert!((&h1 - &h0).norm() <= 1e-6 * h0.norm());
    }

    #[test]
    fn lyapunov_solution_is_psd(n in 1usize..9, m in 1usize..4, seed in any::<u64>()) {
        let sys = LinearSystem::random_symmetric(n, m, 1, seed);
        let w = lyapunov_ctrb(&sys.a, &sys.b).unwrap();
        prop_assert_eq!(&w, &w.transpose());
        prop_assert!(min_eig(&w) >= -1e-10 * w.norm());
    }

    #[test]
    fn matrix_text_round_trip(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>(), exp in -30i32..30) {
        let m = random_matrix(rows, cols, seed) * 10f64.powi(exp);
        prop_assert_eq!(parse_matrix(&format_matrix(&m)).unwrap(), m);
    }
}
