//! `verify-quadratic`: Monte Carlo estimates vs closed forms on random
//! quadratic models, one pass/fail line per check.

use crate::{CliResult, Failure};
use sgddiag::linalg::mean_se;
use sgddiag::quadratic_oracle::{
    chi_moments, expected_omega_sq, expected_quadratic_form, simulate_chain_statistics,
    stationary_omega_sq, Horizon, QuadraticModel,
};
use sgddiag::rng::{normal_vec, replication_seed, seeded_rng};

pub(crate) fn verify_quadratic(
    d_max: usize,
    gamma_frac: f64,
    reps: u64,
    models: u64,
    seed: u64,
) -> CliResult<()> {
    if d_max == 0 || !(gamma_frac > 0.0 && gamma_frac < 1.0) {
        return Err(crate::invalid(
            "need d ≥ 1 and --gamma in (0, 1) (fraction of 1/L)",
        ));
    }
    let checkpoints = [1u64, 10, 100, 1000];
    let mut failures = 0usize;
    let mut checks = 0usize;
    println!("model  check                          mc            closed        z      verdict");
    for m in 0..models {
        let mut rng = seeded_rng(replication_seed(seed, m));
        let dim = 1 + (m as usize) % d_max;
        let model = QuadraticModel::random(dim, &mut rng);
        let gamma = gamma_frac / model.l_max();
        let eta0 = normal_vec(&mut rng, dim);
        // One chain per replication, sampled at all checkpoints.
        let mut omega_samples: Vec<Vec<f64>> = vec![Vec::new(); checkpoints.len()];
        let mut form_samples: Vec<Vec<f64>> = vec![Vec::new(); checkpoints.len()];
        for rep in 0..reps {
            let mut chain_rng = seeded_rng(replication_seed(seed ^ 0x5eed, m * reps + rep));
            let (omegas, forms) = simulate_chain_statistics(
                &model,
                gamma,
                &eta0,
                &checkpoints,
                &[0.0, 1.0],
                &mut chain_rng,
            );
            for (i, (o, f)) in omegas.iter().zip(&forms).enumerate() {
                omega_samples[i].push(*o);
                form_samples[i].push(*f);
            }
        }
        for (i, &n) in checkpoints.iter().enumerate() {
            let closed = expected_omega_sq(&model, gamma, &eta0, n).map_err(to_runtime)?;
            checks += 1;
            failures += report_line(m, &format!("E|omega_{n}|^2"), &omega_samples[i], closed);
            let closed =
                expected_quadratic_form(&model, gamma, &eta0, Horizon::Finite(n), &[0.0, 1.0])
                    .map_err(to_runtime)?;
            checks += 1;
            failures += report_line(m, &format!("E<eta,H eta>_{n}"), &form_samples[i], closed);
        }
        // Stationary consistency: closed form at large n vs the limit.
        let far = expected_omega_sq(&model, gamma, &eta0, 2_000_000).map_err(to_runtime)?;
        let stat = stationary_omega_sq(&model, gamma, &eta0).map_err(to_runtime)?;
        let rel = (far - stat).abs() / stat.abs().max(1e-300);
        checks += 1;
        let ok = rel <= 1e-6;
        if !ok {
            failures += 1;
        }
        println!(
            "{m:5}  {:<28} {far:>13.6e} {stat:>13.6e} {rel:>8.1e} {}",
            "stationary-consistency",
            if ok { "pass" } else { "FAIL" }
        );
        // Var(chi_n) against tr(C^2)/n with Gaussian noise.
        let c = model.noise_cov();
        let n_chi = 10u64;
        let moments = chi_moments(&c, n_chi, true);
        let mut chi_samples = Vec::with_capacity(reps as usize);
        let chol = c.cholesky_psd(1e-10).map_err(to_runtime)?;
        for rep in 0..reps {
            let mut chi_rng = seeded_rng(replication_seed(seed ^ 0xc41, m * reps + rep));
            let mut prev = chol.matvec(&normal_vec(&mut chi_rng, dim));
            let mut sum = 0.0;
            for _ in 0..n_chi {
                let next = chol.matvec(&normal_vec(&mut chi_rng, dim));
                sum += sgddiag::linalg::dot(&prev, &next);
                prev = next;
            }
            chi_samples.push(sum / n_chi as f64);
        }
        let (chi_mean, _) = mean_se(&chi_samples);
        let emp_var = chi_samples
            .iter()
            .map(|x| (x - chi_mean) * (x - chi_mean))
            .sum::<f64>()
            / (chi_samples.len() as f64 - 1.0);
        let rel = (emp_var - moments.variance).abs() / moments.variance;
        checks += 1;
        let ok = rel <= 0.10;
        if !ok {
            failures += 1;
        }
        println!(
            "{m:5}  {:<28} {emp_var:>13.6e} {:>13.6e} {rel:>8.1e} {}",
            "Var(chi_n)",
            moments.variance,
            if ok { "pass" } else { "FAIL" }
        );
    }
    println!("verify-quadratic: {checks} checks, {failures} failures");
    if failures > 0 {
        return Err(Failure {
            code: 3,
            message: format!("{failures} of {checks} checks exceeded tolerance"),
        });
    }
    Ok(())
}

fn to_runtime(e: sgddiag::Error) -> Failure {
    crate::runtime(e.to_string())
}

/// Prints one comparison line; returns 1 on failure.
fn report_line(model: u64, label: &str, samples: &[f64], closed: f64) -> usize {
    let (mean, se) = mean_se(samples);
    let se = se.unwrap_or(0.0);
    let z = if se > 0.0 { (mean - closed) / se } else { 0.0 };
    let ok = z.abs() <= 3.0;
    println!(
        "{model:5}  {label:<28} {mean:>13.6e} {closed:>13.6e} {z:>8.2} {}",
        if ok { "pass" } else { "FAIL" }
    );
    usize::from(!ok)
}
