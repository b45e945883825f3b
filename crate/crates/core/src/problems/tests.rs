use super::*;
use crate::linalg::mean_se;

fn harmonic(d: usize) -> f64 {
    (1..=d).map(|k| 1.0 / k as f64).sum()
}

#[test]
fn semi_stochastic_identity_spectrum() {
    let spec = ProblemSpec {
        eigen_decay: EigenDecay::Explicit(vec![1.0]),
        ..ProblemSpec::semi_stochastic(1, 1.0, 1)
    };
    let p = make_problem(&spec).unwrap();
    assert_eq!(p.constants().mu, Some(1.0));
    assert_eq!(p.constants().l, Some(1.0));
    assert_eq!(p.optimum().unwrap(), &[0.0]);
}

#[test]
fn least_squares_inverse_k_constants() {
    let p = make_problem(&ProblemSpec::least_squares(20, 1.0, 3)).unwrap();
    assert_eq!(p.constants().mu, Some(1.0 / 20.0));
    assert_eq!(p.constants().l, Some(1.0));
    let r_sq = p.constants().r_sq.unwrap();
    assert!((r_sq - harmonic(20)).abs() < 1e-12);
    assert!((r_sq - 3.5977).abs() < 1e-3);
    // The optimum is exact for quadratics: full gradient vanishes.
    let g = p.full_gradient(p.optimum().unwrap()).unwrap();
    assert!(crate::linalg::norm(&g) <= 1e-8);
}

#[test]
fn uniformly_convex_tau() {
    let p = make_problem(&ProblemSpec::uniformly_convex(200, 2.5, 2.0, 5)).unwrap();
    assert!((p.constants().uc_tau.unwrap() - 0.2).abs() < 1e-15);
    assert!(p.projection().is_some());
}

#[test]
fn invalid_specs_name_the_field() {
    let bad_dim = ProblemSpec {
        dim: 0,
        ..ProblemSpec::least_squares(1, 1.0, 0)
    };
    match make_problem(&bad_dim).unwrap_err() {
        crate::error::Error::InvalidSpec { field, .. } => assert_eq!(field, "dim"),
        e => panic!("unexpected error {e:?}"),
    }
    let bad_rho = ProblemSpec {
        uc_exponent: Some(2.0),
        ..ProblemSpec::uniformly_convex(4, 2.5, 1.0, 0)
    };
    match make_problem(&bad_rho).unwrap_err() {
        crate::error::Error::InvalidSpec { field, .. } => assert_eq!(field, "uc_exponent"),
        e => panic!("unexpected error {e:?}"),
    }
    let bad_noise = ProblemSpec {
        noise_variance: -1.0,
        ..ProblemSpec::least_squares(4, 1.0, 0)
    };
    match make_problem(&bad_noise).unwrap_err() {
        crate::error::Error::InvalidSpec { field, .. } => assert_eq!(field, "noise_variance"),
        e => panic!("unexpected error {e:?}"),
    }
}

#[test]
fn noiseless_quadratic_gradient_is_exact() {
    let spec = ProblemSpec {
        eigen_decay: EigenDecay::Explicit(vec![1.0, 1.0]),
        ..ProblemSpec::semi_stochastic(2, 0.0, 2)
    };
    let p = make_problem(&spec).unwrap();
    let mut rng = seeded_rng(0);
    let g = p.stochastic_gradient(&[2.0, 0.0], &mut rng).unwrap();
    assert_eq!(g, vec![2.0, 0.0]);
}

#[test]
fn semi_stochastic_gradient_mean_matches_h_theta() {
    let spec = ProblemSpec {
        eigen_decay: EigenDecay::Explicit(vec![1.0, 1.0]),
        ..ProblemSpec::semi_stochastic(2, 1.0, 2)
    };
    let p = make_problem(&spec).unwrap();
    let theta = [0.7, -1.2];
    let mut rng = seeded_rng(42);
    let n = 100_000;
    let mut mean = vec![0.0; 2];
    for _ in 0..n {
        let g = p.stochastic_gradient(&theta, &mut rng).unwrap();
        linalg::axpy(1.0 / n as f64, &g, &mut mean);
    }
    let tol = 4e-2 / (2.0f64).sqrt();
    for i in 0..2 {
        assert!((mean[i] - theta[i]).abs() < tol, "component {i}: {mean:?}");
    }
}

#[test]
fn logistic_single_point_gradient() {
    // σ(0) = ½, so the per-sample gradient at θ = 0 is −½·x.
    let g = finite::logistic_point_gradient(&[1.0, 0.0], 1.0, &[0.0, 0.0], 0.0);
    assert_eq!(g, vec![-0.5, 0.0]);
}

#[test]
fn objective_gap_examples() {
    let spec = ProblemSpec {
        eigen_decay: EigenDecay::Explicit(vec![1.0, 1.0]),
        ..ProblemSpec::semi_stochastic(2, 1.0, 2)
    };
    let p = make_problem(&spec).unwrap();
    let gap = p.objective_gap(&[1.0, 1.0]).unwrap();
    assert!(gap.is_gap);
    assert!((gap.value - 1.0).abs() < 1e-12);

    let p = make_problem(&ProblemSpec::uniformly_convex(3, 2.5, 2.0, 0)).unwrap();
    let theta = [1.0, 0.0, 0.0];
    let gap = p.objective_gap(&theta).unwrap();
    assert!(gap.is_gap);
    assert!((gap.value - 0.4).abs() < 1e-12);
}

#[test]
fn lasso_objective_matches_brute_force() {
    let spec = ProblemSpec {
        dim: 3,
        sparsity: Some(2),
        n_samples: Some(2),
        eigen_decay: EigenDecay::Explicit(vec![1.0, 0.5, 0.25]),
        ..ProblemSpec::lasso(7)
    };
    let p = make_problem(&spec).unwrap();
    let theta = [0.3, -0.7, 0.1];
    let f = p.objective(&theta).unwrap();
    // Independent re-summation over the generated samples.
    let (x, y) = p.samples().unwrap();
    let lambda = p.spec().regularization;
    let mut brute = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let r = yi - linalg::dot(xi, &theta);
        brute += r * r;
    }
    brute /= x.len() as f64;
    brute += lambda * theta.iter().map(|t| t.abs()).sum::<f64>();
    assert!((f - brute).abs() <= 1e-12 * brute.abs().max(1e-300));

    let (p_ref, report) = p.with_reference_optimum().unwrap();
    assert!(report.tolerance_metric <= 1e-6, "report {report:?}");
    let gap = p_ref.objective_gap(&theta).unwrap();
    assert!(gap.is_gap);
    assert!(gap.value >= -1e-12);
}

#[test]
fn project_examples() {
    let ball = Ball {
        center: vec![0.0, 0.0],
        radius: 1.0,
    };
    assert_eq!(project(&ball, &[0.5, 0.0]), vec![0.5, 0.0]);
    let p = project(&ball, &[3.0, 4.0]);
    assert!((p[0] - 0.6).abs() < 1e-15);
    assert!((p[1] - 0.8).abs() < 1e-15);
    let ball = Ball {
        center: vec![1.0, 0.0],
        radius: 2.0,
    };
    assert_eq!(project(&ball, &[1.0, 0.0]), vec![1.0, 0.0]);
}

#[test]
fn unbiasedness_across_kinds() {
    // Empirical mean of stochastic gradients vs the exact full gradient,
    // componentwise within 3 standard errors.
    let problems: Vec<Problem> = vec![
        make_problem(&ProblemSpec::least_squares(4, 1.0, 11)).unwrap(),
        make_problem(&ProblemSpec::semi_stochastic(4, 1.0, 12)).unwrap(),
        make_problem(&ProblemSpec::logistic(4, 13)).unwrap(),
        make_problem(&ProblemSpec::svm(4, 500, 14)).unwrap(),
        make_problem(&ProblemSpec {
            dim: 6,
            sparsity: Some(3),
            n_samples: Some(40),
            eigen_decay: EigenDecay::InverseKCubed,
            ..ProblemSpec::lasso(15)
        })
        .unwrap(),
        make_problem(&ProblemSpec::uniformly_convex(4, 2.5, 2.0, 16)).unwrap(),
    ];
    for p in &problems {
        let d = p.dim();
        let theta: Vec<f64> = (0..d).map(|i| 0.3 * (i as f64 + 1.0) - 0.8).collect();
        let full = p.full_gradient(&theta).unwrap();
        let mut rng = seeded_rng(777);
        let n = 100_000usize;
        let mut sums = vec![0.0; d];
        let mut sq_sums = vec![0.0; d];
        for _ in 0..n {
            let g = p.stochastic_gradient(&theta, &mut rng).unwrap();
            for i in 0..d {
                sums[i] += g[i];
                sq_sums[i] += g[i] * g[i];
            }
        }
        for i in 0..d {
            let mean = sums[i] / n as f64;
            let var = (sq_sums[i] / n as f64 - mean * mean).max(0.0);
            let se = (var / n as f64).sqrt();
            assert!(
                (mean - full[i]).abs() <= 3.0 * se + 1e-12,
                "{:?} component {i}: mean {mean} vs full {} (se {se})",
                p.kind(),
                full[i]
            );
        }
    }
}

#[test]
fn generation_is_deterministic() {
    let spec = ProblemSpec::least_squares(8, 1.0, 99);
    let a = make_problem(&spec).unwrap();
    let b = make_problem(&spec).unwrap();
    assert_eq!(a.optimum().unwrap(), b.optimum().unwrap());
    let mut ra = seeded_rng(5);
    let mut rb = seeded_rng(5);
    let theta = vec![0.1; 8];
    for _ in 0..100 {
        let ga = a.stochastic_gradient(&theta, &mut ra).unwrap();
        let gb = b.stochastic_gradient(&theta, &mut rb).unwrap();
        assert_eq!(ga, gb);
    }
}

#[test]
fn least_squares_noise_bound_consistency() {
    let p = make_problem(&ProblemSpec::least_squares(6, 2.0, 21)).unwrap();
    let sigma_sq = p.constants().sigma_sq.unwrap();
    let theta_star = p.optimum().unwrap().to_vec();
    let mut rng = seeded_rng(1);
    let n = 100_000usize;
    let samples: Vec<f64> = (0..n)
        .map(|_| {
            let g = p.stochastic_gradient(&theta_star, &mut rng).unwrap();
            linalg::norm_sq(&g)
        })
        .collect();
    let (mean, _) = mean_se(&samples);
    assert!(mean <= sigma_sq * (1.0 + 3.0 / (n as f64).sqrt()));
}

#[test]
fn logistic_population_gradient_vanishes_at_optimum() {
    let p = make_problem(&ProblemSpec::logistic(5, 23)).unwrap();
    let g = p.full_gradient(p.optimum().unwrap()).unwrap();
    assert!(
        linalg::norm(&g) <= 1e-10,
        "population gradient at θ*: {g:?}"
    );
}

#[test]
fn svm_reference_certificate() {
    let p = make_problem(&ProblemSpec::svm(4, 400, 31)).unwrap();
    let (p, report) = p.with_reference_optimum().unwrap();
    assert_eq!(report.metric, "duality gap");
    assert!(report.tolerance_metric <= 1e-9, "{report:?}");
    // Any perturbation increases the strongly convex objective.
    let opt = p.optimum().unwrap().to_vec();
    let f_star = p.objective(&opt).unwrap();
    let mut bumped = opt.clone();
    bumped[0] += 0.05;
    assert!(p.objective(&bumped).unwrap() > f_star);
}

#[test]
fn dataset_logistic_streams_one_pass_without_replacement() {
    let n = 16;
    let features: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64, 1.0]).collect();
    let labels: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let data = crate::dataset::Dataset::from_parts(features, labels, 0.5, 3).unwrap();
    let p = Problem::from_dataset(&data, 0.0, 4).unwrap();
    // With λ = 0 and θ = 0 the gradient is −½y·x, so x is recoverable:
    // one pass must visit each training sample exactly once.
    let theta = vec![0.0, 0.0];
    let mut stream = p.stream(seeded_rng(8));
    let mut seen = Vec::new();
    for _ in 0..8 {
        let g = stream.next_gradient(&theta).unwrap();
        // first coordinate of x = ∓2·g[0]
        seen.push((g[0].abs() * 2.0).round() as i64);
    }
    seen.sort_unstable();
    let mut expected: Vec<i64> = data
        .train_indices()
        .iter()
        .map(|&i| data.features(i)[0] as i64)
        .collect();
    expected.sort_unstable();
    assert_eq!(seen, expected);
}

#[test]
fn logistic_objective_quadrature_matches_sampling() {
    // The population risk is evaluated by Gauss-Hermite quadrature; check it
    // against a large empirical average of per-sample losses drawn from the
    // same design.
    use super::logistic_math::LogisticMath;
    use super::synthetic::GaussianDesign;
    let mut rng = seeded_rng(29);
    let eigenvalues = EigenDecay::InverseK.eigenvalues(6).unwrap();
    let basis = super::synthetic::random_basis(6, &mut rng);
    let theta_star = super::synthetic::random_optimum(6, 1.0, &mut rng);
    let design = GaussianDesign::new(eigenvalues, basis);
    let math = LogisticMath::new(&design, theta_star);
    let theta: Vec<f64> = (0..6).map(|i| 0.4 * (i as f64) - 1.0).collect();
    let exact = math.objective(&theta);
    let n = 400_000usize;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n {
        let x = design.sample(&mut rng);
        let y = math.sample_label(&x, &mut rng);
        let loss = crate::quadrature::softplus(-y * linalg::dot(&x, &theta));
        sum += loss;
        sum_sq += loss * loss;
    }
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean).max(0.0);
    let se = (var / n as f64).sqrt();
    assert!(
        (mean - exact).abs() <= 3.0 * se,
        "MC {mean} vs quadrature {exact} (se {se})"
    );
}

#[test]
fn uc_oracle_controller_drives_gamma_down() {
    // Alg-style run with the uniformly convex oracle test: restarts fire
    // once the bias estimate A(1/γn)^{1/τ} drops below Bγ, each scaling γ by
    // exactly r.
    let p = make_problem(&ProblemSpec::uniformly_convex(20, 2.5, 2.0, 9)).unwrap();
    let tau = p.constants().uc_tau.unwrap();
    let g = p.constants().grad_bound.unwrap();
    let controller = crate::engine::ControllerConfig::Diagnostic {
        gamma0: 0.05,
        r: 0.5,
        diagnostic: crate::diagnostics::DiagnosticConfig::UcOracle {
            a: 1.0,
            b: g * g,
            tau,
        },
    };
    let trace = crate::engine::run(
        &p,
        &controller,
        &[0.1; 20],
        20_000,
        3,
        &crate::engine::RunOptions::default(),
    )
    .unwrap();
    assert!(trace.restarts.len() >= 2, "restarts {:?}", trace.restarts);
    // Restart spacing grows like r^{-(τ+1)} per epoch: strictly increasing.
    let gaps: Vec<u64> = std::iter::once(trace.restarts[0])
        .chain(trace.restarts.windows(2).map(|w| w[1] - w[0]))
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] > w[0]), "gaps {gaps:?}");
}

#[test]
fn dataset_objective_is_flagged_ungapped() {
    let n = 12;
    let features: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / n as f64, 1.0]).collect();
    let labels: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
    let data = crate::dataset::Dataset::from_parts(features, labels, 0.5, 3).unwrap();
    let p = Problem::from_dataset(&data, 0.01, 4).unwrap();
    let v = p.objective_gap(&[0.2, -0.1]).unwrap();
    assert!(!v.is_gap);
    assert!(v.value > 0.0);
    // After a reference solve the same point reports a true gap ≥ 0.
    let (p, report) = p.with_reference_optimum().unwrap();
    assert_eq!(report.metric, "gradient norm");
    assert!(report.tolerance_metric <= 1e-6);
    let v = p.objective_gap(&[0.2, -0.1]).unwrap();
    assert!(v.is_gap);
    assert!(v.value >= -1e-12);
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    fn vec3() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-50.0f64..50.0, 3)
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_nonexpansive(
            a in vec3(),
            b in vec3(),
            center in vec3(),
            radius in 0.01f64..20.0,
        ) {
            let ball = Ball { center, radius };
            let pa = project(&ball, &a);
            // Idempotence is exact: a projected point is inside the ball.
            let papa = project(&ball, &pa);
            prop_assert_eq!(papa.as_slice(), pa.as_slice());
            let pb = project(&ball, &b);
            let before = linalg::dist_sq(&a, &b).sqrt();
            let after = linalg::dist_sq(&pa, &pb).sqrt();
            prop_assert!(after <= before + 1e-12);
            prop_assert!(
                linalg::dist_sq(&pa, &ball.center).sqrt() <= ball.radius + 1e-12
            );
        }
    }
}
