//! Drive the resolved scenario: one row per (user count, mode), then the
//! table and any requested files.
//!
//! A blown enumeration budget is not a hard error: the sweep stops, whatever
//! finished is still printed and written (the CSV gains a trailing
//! `# aborted` comment), and the process exits with code 3 so callers can
//! tell a truncated sweep from a clean one.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use irsa_core::asymptotic::asymptotic_plr;
use irsa_core::montecarlo::simulate;
use irsa_core::plr::{exact_plr, mlv_plr, oracle_plr};
use irsa_core::rational::to_f64;
use irsa_core::{
    DeConfig, EngineOptions, EnumBudget, Error, MlvConfig, PlrReport, SimConfig, SystemConfig,
};

use crate::cli::{ModeArg, Resolved};
use crate::output::{self, ResultRow};

pub fn execute(resolved: &Resolved) -> Result<ExitCode> {
    let mut rows: Vec<ResultRow> = Vec::new();
    let mut aborted: Option<String> = None;

    'sweep: for &k in &resolved.ks {
        let cfg = SystemConfig::new(k, resolved.t)?;
        for &mode in &resolved.modes {
            match compute_row(&cfg, mode, resolved) {
                Ok(row) => {
                    for warning in &row.warnings {
                        eprintln!("warning: k={k} {}: {warning}", row.mode);
                    }
                    rows.push(row);
                }
                Err(err) if is_budget_error(&err) => {
                    aborted = Some(err.to_string());
                    break 'sweep;
                }
                Err(err) => return Err(err),
            }
        }
    }

    output::print_table(&rows, resolved.decimals);
    if let Some(msg) = &aborted {
        eprintln!("aborted: {msg}");
    }

    if let Some(path) = &resolved.out {
        output::write_rows(path, &rows, aborted.as_deref())?;
    }
    if let Some(path) = &resolved.compare_out {
        output::write_compare(path, &rows, &resolved.modes)?;
        println!();
        output::print_compare(&rows, &resolved.modes);
    }

    Ok(if aborted.is_some() {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    })
}

fn is_budget_error(err: &anyhow::Error) -> bool {
    matches!(
        err.downcast_ref::<Error>(),
        Some(Error::BudgetExceeded { .. })
    )
}

fn engine_options(resolved: &Resolved) -> EngineOptions {
    let mut options = EngineOptions::default();
    if let Some(budget) = resolved.budget {
        options.budget = EnumBudget { max_nodes: budget };
        options.oracle_matrix_budget = budget;
    }
    options
}

fn compute_row(cfg: &SystemConfig, mode: ModeArg, resolved: &Resolved) -> Result<ResultRow> {
    let start = Instant::now();
    match mode {
        ModeArg::Exact => {
            let report = exact_plr(&resolved.lambda, cfg, &engine_options(resolved))?;
            Ok(report_row(cfg, "exact", report, start))
        }
        ModeArg::Mlv => {
            let mlv = MlvConfig::new(resolved.mlv_threshold.clone())?;
            let report = mlv_plr(&resolved.lambda, cfg, &mlv, &engine_options(resolved))?;
            Ok(report_row(cfg, "mlv", report, start))
        }
        ModeArg::Oracle => {
            let report = oracle_plr(&resolved.lambda, cfg, &engine_options(resolved))?;
            Ok(report_row(cfg, "oracle", report, start))
        }
        ModeArg::Simulate => {
            let sim = SimConfig {
                trials: resolved.trials,
                master_seed: resolved.seed,
                ..SimConfig::default()
            };
            let estimate = simulate(&resolved.lambda, cfg, &sim)?;
            Ok(ResultRow {
                k: cfg.k,
                t: cfg.t,
                mode: "simulate",
                plr: estimate.plr_hat,
                throughput: (1.0 - estimate.plr_hat) * f64::from(cfg.k) / f64::from(cfg.t),
                pmf: estimate.pmf_hat,
                coverage: None,
                stderr: Some(estimate.stderr),
                plr_exact: None,
                pmf_exact: None,
                coverage_exact: None,
                wall_time_ms: start.elapsed().as_millis() as u64,
                warnings: vec![],
            })
        }
        ModeArg::Asymptotic => {
            let g = f64::from(cfg.k) / f64::from(cfg.t);
            let outcome = asymptotic_plr(&resolved.lambda, &DeConfig::new(g)?)?;
            let mut warnings = Vec::new();
            if !outcome.converged {
                warnings.push(format!(
                    "density evolution stopped after {} iterations with residual {:.3e}",
                    outcome.iterations, outcome.fixed_point_residual
                ));
            }
            Ok(ResultRow {
                k: cfg.k,
                t: cfg.t,
                mode: "asymptotic",
                plr: outcome.plr,
                throughput: (1.0 - outcome.plr) * g,
                pmf: BTreeMap::new(),
                coverage: None,
                stderr: None,
                plr_exact: None,
                pmf_exact: None,
                coverage_exact: None,
                wall_time_ms: start.elapsed().as_millis() as u64,
                warnings,
            })
        }
    }
}

fn report_row(cfg: &SystemConfig, name: &'static str, report: PlrReport, start: Instant) -> ResultRow {
    ResultRow {
        k: cfg.k,
        t: cfg.t,
        mode: name,
        plr: report.plr_f64(),
        throughput: report.throughput(),
        pmf: report.pmf_f64(),
        coverage: Some(to_f64(&report.coverage)),
        stderr: None,
        plr_exact: Some(report.plr),
        pmf_exact: Some(report.pmf),
        coverage_exact: Some(report.coverage),
        wall_time_ms: start.elapsed().as_millis() as u64,
        warnings: report.warnings,
    }
}
