//! Figure presets: each emits the CSVs behind one reproducible figure at
//! desk scale (n = 10⁵ by default, 10⁶ with --full).

use crate::{invalid, runtime, CliResult};
use sgddiag::diagnostics::DiagnosticConfig;
use sgddiag::engine::{run, ControllerConfig, RecordMode, RunOptions, RunTrace};
use sgddiag::harness::export::{export_report, export_sign_curve, export_trace, ExportFormat};
use sgddiag::harness::{pflug_sign_experiment, replicate, ExperimentConfig, InitSpec};
use sgddiag::problems::{make_problem, ProblemSpec};
use sgddiag::schedule::Schedule;
use std::path::{Path, PathBuf};

pub(crate) fn emit(name: &str, out: &Path, full: bool, seed: u64) -> CliResult<()> {
    let dir = out.join(name);
    std::fs::create_dir_all(&dir)
        .map_err(|e| runtime(format!("cannot create `{}`: {e}", dir.display())))?;
    let n = if full { 1_000_000 } else { 100_000 };
    match name {
        "fig2-pflug" => fig2_pflug(&dir, n, seed),
        "fig3-slopes" => fig3_slopes(&dir, n, seed),
        "fig4-logistic" => fig4_logistic(&dir, n, seed),
        "fig7-least-squares" => fig7_least_squares(&dir, n, seed),
        "appA-uc" => app_a_uc(&dir, n, seed),
        "appA-pflug-sign" => app_a_pflug_sign(&dir, n, seed),
        other => Err(invalid(format!(
            "unknown figure `{other}`; available: fig2-pflug, fig3-slopes, fig4-logistic, \
             fig7-least-squares, appA-uc, appA-pflug-sign"
        ))),
    }
}

fn classify(e: sgddiag::Error) -> crate::Failure {
    runtime(e.to_string())
}

fn log_opts(record_gap: bool) -> RunOptions {
    RunOptions {
        record: RecordMode::Log,
        record_gap,
        ..RunOptions::default()
    }
}

fn write_trace(trace: &RunTrace, path: PathBuf) -> CliResult<()> {
    export_trace(trace, &path, ExportFormat::Csv).map_err(classify)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Least-squares: Pflug's diagnostic restarting abusively vs averaged-SGD
/// and the distance-based run.
fn fig2_pflug(dir: &Path, n: u64, seed: u64) -> CliResult<()> {
    let spec = ProblemSpec {
        optimum_norm: 20f64.sqrt(),
        ..ProblemSpec::least_squares(20, 1.0, seed)
    };
    let problem = make_problem(&spec).map_err(classify)?;
    let gamma0 = 1.0 / (2.0 * problem.constants().r_sq.unwrap());
    let theta0 = vec![0.0; 20];
    let opts = log_opts(true);

    let pflug = run(
        &problem,
        &ControllerConfig::Diagnostic {
            gamma0,
            r: 0.25,
            diagnostic: DiagnosticConfig::Pflug { burn_in: 10_000 },
        },
        &theta0,
        n,
        seed,
        &opts,
    )
    .map_err(classify)?;
    write_trace(&pflug, dir.join("pflug.csv"))?;

    let averaged = run(
        &problem,
        &ControllerConfig::Fixed {
            schedule: Schedule::Constant { gamma0 },
        },
        &theta0,
        n,
        seed,
        &RunOptions {
            metrics_on_average: true,
            ..log_opts(true)
        },
    )
    .map_err(classify)?;
    write_trace(&averaged, dir.join("averaged.csv"))?;

    let distance = run(
        &problem,
        &ControllerConfig::Diagnostic {
            gamma0,
            r: 0.5,
            diagnostic: DiagnosticConfig::Distance {
                thresh: 0.6,
                q: 1.5,
                k0: 5,
            },
        },
        &theta0,
        n,
        seed,
        &opts,
    )
    .map_err(classify)?;
    write_trace(&distance, dir.join("distance.csv"))
}

/// Logistic regression: ‖θ_n−θ*‖² and ‖θ_n−θ₀‖² for step sizes 1/2R², 1/20R².
fn fig3_slopes(dir: &Path, n: u64, seed: u64) -> CliResult<()> {
    let spec = ProblemSpec::logistic(20, seed);
    let problem = make_problem(&spec).map_err(classify)?;
    let r_sq = problem.constants().r_sq.unwrap();
    let theta0 = vec![0.0; 20];
    let mut to_opt = String::from("n,gamma,dist_sq\n");
    let mut to_anchor = String::from("n,gamma,dist_anchor_sq\n");
    for gamma in [1.0 / (2.0 * r_sq), 1.0 / (20.0 * r_sq)] {
        let trace = run(
            &problem,
            &ControllerConfig::Fixed {
                schedule: Schedule::Constant { gamma0: gamma },
            },
            &theta0,
            n,
            seed,
            &RunOptions {
                record_anchor_dist: true,
                ..log_opts(false)
            },
        )
        .map_err(classify)?;
        for rec in &trace.records {
            to_opt.push_str(&format!("{},{:?},{:?}\n", rec.n, gamma, rec.dist_sq.unwrap()));
            to_anchor.push_str(&format!(
                "{},{:?},{:?}\n",
                rec.n,
                gamma,
                rec.statistic.unwrap()
            ));
        }
    }
    for (name, contents) in [("dist_to_opt.csv", to_opt), ("dist_to_anchor.csv", to_anchor)] {
        let path = dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| runtime(format!("cannot write `{}`: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn replicate_to(
    dir: &Path,
    name: &str,
    problem: &ProblemSpec,
    controller: ControllerConfig,
    n: u64,
    seed: u64,
    record_gap: bool,
    metrics_on_average: bool,
) -> CliResult<()> {
    let config = ExperimentConfig {
        problem: problem.clone(),
        controller,
        init: InitSpec::Zero,
        n_iters: n,
        n_reps: 10,
        base_seed: seed,
        options: RunOptions {
            metrics_on_average,
            ..log_opts(record_gap)
        },
        outputs: None,
    };
    let report = replicate(&config).map_err(classify)?;
    let path = dir.join(name);
    export_report(&report, &path, ExportFormat::Csv).map_err(classify)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Synthetic logistic: distance-based run vs √n-decay baselines, 10
/// replications averaged.
fn fig4_logistic(dir: &Path, n: u64, seed: u64) -> CliResult<()> {
    let spec = ProblemSpec::logistic(20, seed);
    let problem = make_problem(&spec).map_err(classify)?;
    let r_sq = problem.constants().r_sq.unwrap();
    replicate_to(
        dir,
        "distance.csv",
        &spec,
        ControllerConfig::Diagnostic {
            gamma0: 4.0 / r_sq,
            r: 0.5,
            diagnostic: DiagnosticConfig::Distance {
                thresh: 0.6,
                q: 1.5,
                k0: 5,
            },
        },
        n,
        seed,
        true,
        false,
    )?;
    replicate_to(
        dir,
        "averaged_theory_sqrt.csv",
        &spec,
        ControllerConfig::Fixed {
            schedule: Schedule::InverseSqrt {
                c: 1.0 / (2.0 * r_sq),
            },
        },
        n,
        seed,
        true,
        true,
    )?;
    replicate_to(
        dir,
        "averaged_unit_sqrt.csv",
        &spec,
        ControllerConfig::Fixed {
            schedule: Schedule::InverseSqrt { c: 1.0 },
        },
        n,
        seed,
        true,
        true,
    )
}

/// Least-squares: distance-based runs across r and thresh values vs the
/// 1/μn schedule and constant-step averaging.
fn fig7_least_squares(dir: &Path, n: u64, seed: u64) -> CliResult<()> {
    let spec = ProblemSpec {
        optimum_norm: 20f64.sqrt(),
        ..ProblemSpec::least_squares(20, 1.0, seed)
    };
    let problem = make_problem(&spec).map_err(classify)?;
    let r_sq = problem.constants().r_sq.unwrap();
    let mu = problem.constants().mu.unwrap();
    let gamma0 = 1.0 / (2.0 * r_sq);
    for (name, r, thresh) in [
        ("distance_r2_t06.csv", 0.5, 0.6),
        ("distance_r4_t06.csv", 0.25, 0.6),
        ("distance_r8_t06.csv", 0.125, 0.6),
        ("distance_r2_t04.csv", 0.5, 0.4),
        ("distance_r2_t10.csv", 0.5, 1.0),
    ] {
        replicate_to(
            dir,
            name,
            &spec,
            ControllerConfig::Diagnostic {
                gamma0,
                r,
                diagnostic: DiagnosticConfig::Distance {
                    thresh,
                    q: 1.5,
                    k0: 5,
                },
            },
            n,
            seed,
            true,
            false,
        )?;
    }
    replicate_to(
        dir,
        "inverse_mu_n.csv",
        &spec,
        ControllerConfig::Fixed {
            schedule: Schedule::InverseMuN {
                mu,
                offset: 1.0 / (mu * gamma0) - 1.0,
            },
        },
        n,
        seed,
        true,
        false,
    )?;
    replicate_to(
        dir,
        "averaged_constant.csv",
        &spec,
        ControllerConfig::Fixed {
            schedule: Schedule::Constant { gamma0 },
        },
        n,
        seed,
        true,
        true,
    )
}

/// Uniformly convex f = (1/ρ)‖θ‖^ρ: distance-based adaptation vs 1/√n and
/// the τ-optimal fixed-horizon step.
fn app_a_uc(dir: &Path, n: u64, seed: u64) -> CliResult<()> {
    let spec = ProblemSpec::uniformly_convex(200, 2.5, 2.0, seed);
    let problem = make_problem(&spec).map_err(classify)?;
    let l = problem.constants().l.unwrap();
    let tau = problem.constants().uc_tau.unwrap();
    let gamma0 = 1.0 / (4.0 * l);
    let init = InitSpec::OptimumOffset {
        dist_sq: 1.0,
        along_min_eigenvector: false,
    };
    for (name, r) in [
        ("distance_r2.csv", 0.5),
        ("distance_r4.csv", 0.25),
        ("distance_r8.csv", 0.125),
    ] {
        let config = ExperimentConfig {
            problem: spec.clone(),
            controller: ControllerConfig::Diagnostic {
                gamma0,
                r,
                diagnostic: DiagnosticConfig::Distance {
                    thresh: 1.0,
                    q: 1.5,
                    k0: 5,
                },
            },
            init: init.clone(),
            n_iters: n,
            n_reps: 10,
            base_seed: seed,
            options: log_opts(true),
            outputs: None,
        };
        let report = replicate(&config).map_err(classify)?;
        let path = dir.join(name);
        export_report(&report, &path, ExportFormat::Csv).map_err(classify)?;
        println!("wrote {}", path.display());
    }
    for (name, schedule) in [
        (
            "inverse_sqrt.csv",
            Schedule::InverseSqrt { c: gamma0 },
        ),
        (
            "uc_optimal.csv",
            Schedule::UcOptimal { tau, horizon: n },
        ),
    ] {
        let config = ExperimentConfig {
            problem: spec.clone(),
            controller: ControllerConfig::Fixed { schedule },
            init: init.clone(),
            n_iters: n,
            n_reps: 10,
            base_seed: seed,
            options: log_opts(true),
            outputs: None,
        };
        let report = replicate(&config).map_err(classify)?;
        let path = dir.join(name);
        export_report(&report, &path, ExportFormat::Csv).map_err(classify)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// The sign experiment behind the failure of Pflug's statistic.
fn app_a_pflug_sign(dir: &Path, n: u64, seed: u64) -> CliResult<()> {
    let spec = ProblemSpec::least_squares(20, 1.0, seed);
    let problem = make_problem(&spec).map_err(classify)?;
    let gamma_old = 1.0 / (5.0 * problem.constants().r_sq.unwrap());
    let n_max = (n / 10).max(1000);
    let curve = pflug_sign_experiment(&problem, gamma_old, 0.1, n_max, 1000, seed)
        .map_err(classify)?;
    let path = dir.join("sign_fraction.csv");
    export_sign_curve(&curve, &path, ExportFormat::Csv).map_err(classify)?;
    println!("wrote {}", path.display());
    Ok(())
}
