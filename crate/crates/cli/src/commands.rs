//! The subcommands. CSV floats are written as `{:.16e}` so reruns are
//! byte-identical.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use rsnl_core::analysis::{amplification_spectrum, verify_kernel_bounds};
use rsnl_core::kernel::{eval_b, eval_db_dt};
use rsnl_core::nonlocal::{classify, solve_nonlocal, verify_solution};
use rsnl_core::oracle::{solve_step_halving, TimeGrid};

use crate::config::RunConfig;
use crate::CliError;

/// Sobolev index of the forcing regularity reported by `solve`.
const FORCING_EPS: f64 = 0.5;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut w = create(out, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn eval_kernel(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let grid = &cfg.kernel_grid;
    if grid.lambda.is_empty() || grid.t.is_empty() {
        return Err(CliError::Config(
            "kernel_grid needs at least one lambda and one t".into(),
        ));
    }
    let rows: Vec<Vec<String>> = grid
        .lambda
        .par_iter()
        .map(|&lambda| {
            grid.t
                .iter()
                .map(|&t| {
                    let b = eval_b(&cfg.params, lambda, t, &cfg.quadrature)?;
                    let db = if t == 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        eval_db_dt(&cfg.params, lambda, t, &cfg.quadrature)?.value
                    };
                    Ok(format!(
                        "{},{},{},{},{}\n",
                        num(lambda),
                        num(t),
                        num(b.value),
                        num(b.est_error),
                        num(db)
                    ))
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<_, _>>()?;
    let mut w = create(out, &cfg.outputs.kernel)?;
    w.write_all(b"lambda,t,B,est_error,dBdt\n")?;
    for line in rows.iter().flatten() {
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn verify_bounds(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let b = &cfg.bounds;
    let t_end = b
        .t_end
        .or_else(|| b.t.iter().copied().reduce(f64::max))
        .ok_or_else(|| CliError::Config("bounds.t must not be empty".into()))?;
    let reports = verify_kernel_bounds(&cfg.params, &b.lambda, &b.t, t_end, &cfg.quadrature)?;
    write_json(out, &cfg.outputs.bounds, &reports)?;
    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.id.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::BoundViolation(failed.join(", ")))
    }
}

pub fn solve(cfg: &RunConfig, base: &Path, out: &Path) -> Result<(), CliError> {
    let a = cfg.assemble(base)?;
    let grid = cfg.output_grid()?;
    let sol = solve_nonlocal(&a.spec, &a.spectrum, &grid, &a.solver, &cfg.free_values)?;

    let trajectories: Vec<Vec<f64>> = (1..=a.spectrum.len())
        .into_par_iter()
        .map(|k| sol.trajectory(k))
        .collect::<Result<_, _>>()?;
    let mut w = create(out, &cfg.outputs.solution)?;
    w.write_all(b"t,k,u_k\n")?;
    for (i, traj) in trajectories.iter().enumerate() {
        for (j, u) in traj.iter().enumerate() {
            writeln!(w, "{},{},{}", num(grid.node(j)), i + 1, num(*u))?;
        }
    }
    w.flush()?;

    let oracle_grid = TimeGrid::new(a.spec.t_end, cfg.oracle.n_steps)?;
    let report = verify_solution(
        &sol.series,
        Some(&sol.omega),
        &a.spec,
        &a.spectrum,
        &oracle_grid,
    )?;
    let forcing_norm = a
        .spec
        .forcing
        .max_sobolev_norm(&a.spectrum, &grid, FORCING_EPS)?;
    let summary = json!({
        "beta": a.spec.beta,
        "t0": a.spec.t0,
        "T": a.spec.t_end,
        "K": a.spectrum.len(),
        "regime": sol.regime,
        "h": sol.series.h(),
        "free_indices": sol.series.free_indices(),
        "psi": sol.psi.as_slice(),
        "residuals": report,
        "max_equation_residual": report.max_equation_residual(),
        "max_equation_residual_refined": report.max_equation_residual_refined(),
        "forcing_regularity": {"eps": FORCING_EPS, "max_norm": forcing_norm},
    });
    write_json(out, &cfg.outputs.residuals, &summary)
}

pub fn sweep_beta(cfg: &RunConfig, base: &Path, out: &Path) -> Result<(), CliError> {
    if cfg.betas.is_empty() {
        return Err(CliError::Config(
            "sweep-beta needs a non-empty `betas` list".into(),
        ));
    }
    let spectrum = cfg.spectrum(base)?;
    let t0 = cfg.problem()?.t0;
    let solver = cfg.solver()?;
    let mut w = create(out, &cfg.outputs.sweep)?;
    w.write_all(b"beta,k,lambda,B,gap,amplification,resonant\n")?;
    for &beta in &cfg.betas {
        let table = amplification_spectrum(beta, t0, &spectrum, &cfg.params, &solver)?;
        for r in &table.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                num(beta),
                r.k,
                num(r.lambda),
                num(r.b_at_t0),
                num(r.gap),
                num(r.amplification),
                r.resonant
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn find_k0(cfg: &RunConfig, base: &Path, out: &Path) -> Result<(), CliError> {
    let a = cfg.assemble(base)?;
    let regime = classify(&a.spec, &a.spectrum, &a.solver)?;
    let summary = json!({
        "beta": a.spec.beta,
        "t0": a.spec.t0,
        "tag": regime.tag,
        "k0": regime.k0_set,
        "min_gap": regime.min_gap,
        "k0_tol": regime.k0_tol,
        "warnings": regime.warnings,
    });
    write_json(out, &cfg.outputs.k0, &summary)
}

pub fn oracle_compare(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let o = &cfg.oracle;
    let t_end = o
        .times
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or_else(|| CliError::Config("oracle.times must not be empty".into()))?;
    if o.lambdas.is_empty() {
        return Err(CliError::Config("oracle.lambdas must not be empty".into()));
    }
    let rows: Vec<Vec<String>> = o
        .lambdas
        .par_iter()
        .map(|&lambda| {
            let run = solve_step_halving(
                &cfg.params,
                lambda,
                1.0,
                |_| 0.0,
                t_end,
                o.n_steps,
                o.n_max,
                o.tol,
            )?;
            let n = run.series.grid().n_steps();
            o.times
                .iter()
                .map(|&t| {
                    let b = eval_b(&cfg.params, lambda, t, &cfg.quadrature)?.value;
                    let y = run.series.at(t);
                    let rel = (y - b).abs() / b.abs();
                    Ok(format!(
                        "{},{},{},{},{},{},{}\n",
                        num(lambda),
                        num(t),
                        num(b),
                        num(y),
                        num(rel),
                        n,
                        run.converged
                    ))
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<_, _>>()?;
    let mut w = create(out, &cfg.outputs.oracle)?;
    w.write_all(b"lambda,t,B_quadrature,B_oracle,rel_error,n_steps,converged\n")?;
    for line in rows.iter().flatten() {
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}
