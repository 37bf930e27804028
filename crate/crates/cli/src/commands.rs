//! Command implementations: solve, probe, check, oracle, pipeline.

use std::path::Path;
use std::time::Instant;

use plaplab::continuity::{check_structure, dini_integral, SamplingPlan};
use plaplab::grid::{gradient_field, ScalarField};
use plaplab::probe::{
    cluster_singular_points, default_grad_tol, dyadic_profile, fit_exponent, probe_at,
    singular_set, theoretical_alpha, DecayProfile, FitMode, ProbePoint,
};
use plaplab::solver::solve_dirichlet;
use plaplab::Error;

use crate::config::{CheckCmd, OracleCmd, PipelineCmd, ProbeCmd, SolveCmd};
use crate::report::{
    write_profile_csv, DiniSection, KnownDecaySection, ProbeSection, RunReport, SolverSection,
};
use crate::CliError;

pub struct Ctx<'a> {
    pub out_dir: &'a Path,
    pub threads: usize,
    pub seed: Option<u64>,
}

fn ensure_out(ctx: &Ctx) -> Result<(), CliError> {
    std::fs::create_dir_all(ctx.out_dir)
        .map_err(|e| CliError::Io(format!("cannot create `{}`: {e}", ctx.out_dir.display())))
}

fn echo<T: serde::Serialize>(cfg: &T) -> serde_json::Value {
    serde_json::to_value(cfg).unwrap_or(serde_json::Value::Null)
}

pub fn cmd_solve(cfg: &SolveCmd, ctx: &Ctx) -> Result<RunReport, CliError> {
    let mut report = RunReport::new("solve", echo(cfg));
    ensure_out(ctx)?;
    let (field, _) = run_solve_stage(cfg, ctx, &mut report)?;
    drop(field);
    report.write(ctx.out_dir)?;
    Ok(report)
}

/// Shared solve stage; on solver failure the diagnostic report is still
/// written before the error propagates.
fn run_solve_stage(
    cfg: &SolveCmd,
    ctx: &Ctx,
    report: &mut RunReport,
) -> Result<(ScalarField, String), CliError> {
    let spec = cfg.problem.to_spec()?;
    if !spec.within_structural_range() {
        report.warn_once(format!(
            "exponent p = {} lies outside the structural exponent window (2 - 1/n, n) = ({}, {}); results are reported anyway",
            spec.p,
            2.0 - 1.0 / spec.n as f64,
            spec.n
        ));
    }
    let grid = cfg.grid.build()?;
    let model = cfg.coefficient.model(cfg.problem.p);
    let mu = cfg.source.sample(grid)?;
    let boundary = cfg.boundary.sample(grid)?;
    let solve_cfg = cfg.solver.unwrap_or_default().build();

    let t0 = Instant::now();
    let outcome = solve_dirichlet(&model, &mu, &boundary, &solve_cfg);
    report.timings.insert("solve_s".into(), t0.elapsed().as_secs_f64());

    match outcome {
        Ok(sol) => {
            let path = ctx.out_dir.join(&cfg.output_field);
            sol.u.write_file(&path).map_err(CliError::from)?;
            report.solver = Some(SolverSection {
                converged: true,
                reference_residual: sol.diagnostics.reference_residual,
                final_residual: sol.diagnostics.final_residual,
                continuation_levels: sol.diagnostics.levels.len(),
                diagnostics: Some(sol.diagnostics),
                failure_history: None,
                output_field: Some(cfg.output_field.clone()),
            });
            Ok((sol.u, cfg.output_field.clone()))
        }
        Err(Error::SolverNonConvergence { eps, residual, iterations, history, .. }) => {
            report.solver = Some(SolverSection {
                converged: false,
                reference_residual: f64::NAN,
                final_residual: residual,
                continuation_levels: 0,
                diagnostics: None,
                failure_history: Some(history),
                output_field: None,
            });
            report.warn_once(format!(
                "solver stopped at eps = {eps} after {iterations} iterations, residual {residual:.3e}"
            ));
            report.write(ctx.out_dir)?;
            Err(CliError::Solver(format!(
                "no convergence at eps = {eps}: residual {residual:.3e} after {iterations} iterations"
            )))
        }
        Err(e) => Err(CliError::from(e)),
    }
}

pub fn cmd_probe(cfg: &ProbeCmd, ctx: &Ctx) -> Result<RunReport, CliError> {
    let mut report = RunReport::new("probe", echo(cfg));
    ensure_out(ctx)?;
    let path = cfg.field.as_ref().ok_or_else(|| {
        CliError::Validation("probe config needs a `field` path outside a pipeline".into())
    })?;
    let u = ScalarField::read_file(path).map_err(CliError::from)?;
    run_probe_stage(cfg, &u, ctx, &mut report)?;
    report.write(ctx.out_dir)?;
    Ok(report)
}

fn run_probe_stage(
    cfg: &ProbeCmd,
    u: &ScalarField,
    ctx: &Ctx,
    report: &mut RunReport,
) -> Result<(), CliError> {
    let spec = cfg.problem.to_spec()?;
    if !spec.within_structural_range() {
        report.warn_once(format!(
            "exponent p = {} lies outside the structural exponent window (2 - 1/n, n) = ({}, {}); results are reported anyway",
            spec.p,
            2.0 - 1.0 / spec.n as f64,
            spec.n
        ));
    }
    let target = theoretical_alpha(&spec, cfg.alpha_m).map_err(CliError::from)?;
    let fit_p = cfg.fit_p.unwrap_or(cfg.problem.p);

    let t0 = Instant::now();
    let du = gradient_field(u);
    let tol = cfg.grad_tol.unwrap_or_else(|| default_grad_tol(&du));
    let detected = singular_set(&du, tol);
    let mut points = cluster_singular_points(&detected, &u.grid);
    for &[i, j] in &cfg.extra_points {
        if i >= u.grid.nx || j >= u.grid.ny {
            return Err(CliError::Validation(format!(
                "extra point ({i}, {j}) outside the {}x{} grid",
                u.grid.nx, u.grid.ny
            )));
        }
        points.push(probe_at(&du, i, j, tol));
    }
    report.timings.insert("detect_s".into(), t0.elapsed().as_secs_f64());

    if points.is_empty() {
        report.warn_once("no singular points detected and none supplied".into());
        report.probes = Some(Vec::new());
        return Ok(());
    }

    let t1 = Instant::now();
    let profiles = profile_points(u, &points, cfg.rho, cfg.levels, fit_p, ctx.threads);
    report.timings.insert("probe_s".into(), t1.elapsed().as_secs_f64());

    let mut sections = Vec::new();
    for (pt, prof) in points.iter().zip(profiles) {
        let prof = prof.map_err(CliError::from)?;
        if prof.truncated {
            report.warn_once(format!(
                "profile at node ({}, {}) truncated to {} scales by the grid resolution",
                pt.i,
                pt.j,
                prof.entries.len()
            ));
        }
        let sup = fit_exponent(&prof, FitMode::Sup, target.value, cfg.slack).map_err(CliError::from)?;
        let p_mean =
            fit_exponent(&prof, FitMode::PMean, target.value, cfg.slack).map_err(CliError::from)?;
        let profile_csv = if cfg.write_profiles {
            let name = format!("profile_{}_{}.csv", pt.i, pt.j);
            write_profile_csv(&prof, &ctx.out_dir.join(&name))?;
            Some(name)
        } else {
            None
        };
        sections.push(ProbeSection {
            point: *pt,
            sup,
            p_mean,
            target,
            truncated: prof.truncated,
            profile_csv,
        });
    }
    report.probes = Some(sections);
    Ok(())
}

/// Profile many points, optionally across threads. Results keep the input
/// order, so the output is independent of scheduling.
fn profile_points(
    u: &ScalarField,
    points: &[ProbePoint],
    rho: f64,
    levels: usize,
    p: f64,
    threads: usize,
) -> Vec<Result<DecayProfile, Error>> {
    if threads <= 1 || points.len() <= 1 {
        return points.iter().map(|pt| dyadic_profile(u, pt, rho, levels, p)).collect();
    }
    let chunk = points.len().div_ceil(threads);
    let mut out: Vec<Option<Result<DecayProfile, Error>>> = Vec::new();
    out.resize_with(points.len(), || None);
    std::thread::scope(|scope| {
        for (slot, pts) in out.chunks_mut(chunk).zip(points.chunks(chunk)) {
            scope.spawn(move || {
                for (o, pt) in slot.iter_mut().zip(pts) {
                    *o = Some(dyadic_profile(u, pt, rho, levels, p));
                }
            });
        }
    });
    out.into_iter().map(|o| o.expect("all chunks filled")).collect()
}

pub fn cmd_check(cfg: &CheckCmd, ctx: &Ctx) -> Result<RunReport, CliError> {
    let mut report = RunReport::new("check", echo(cfg));
    ensure_out(ctx)?;
    run_check_stage(cfg, ctx, &mut report)?;
    report.write(ctx.out_dir)?;
    Ok(report)
}

fn run_check_stage(cfg: &CheckCmd, ctx: &Ctx, report: &mut RunReport) -> Result<(), CliError> {
    let spec = cfg.problem.to_spec()?;

    if let Some(dini) = &cfg.dini {
        let t0 = Instant::now();
        let result = dini_integral(&cfg.modulus, spec.p, dini.big_r, dini.sigma)
            .map_err(CliError::from)?;
        report.timings.insert("dini_s".into(), t0.elapsed().as_secs_f64());
        let (regime, exponent) = if spec.p >= 2.0 {
            ("degenerate".to_string(), 2.0 / spec.p)
        } else {
            ("singular".to_string(), 1.0 - dini.sigma)
        };
        report.dini = Some(DiniSection {
            regime,
            exponent,
            big_r: dini.big_r,
            admissible: result.value().is_some(),
            result,
        });
    }

    if let Some(sc) = &cfg.structure {
        let t0 = Instant::now();
        let plan = SamplingPlan {
            domain_min: sc.domain_min,
            domain_max: sc.domain_max,
            x_pairs: sc.x_pairs,
            shells: sc.shells,
            directions: sc.directions,
            shell_range: (1e-6, 1e3),
            seed: ctx.seed.unwrap_or(sc.seed),
            tol: sc.tol,
        };
        let coeff = sc.coefficient.callable();
        let p = spec.p;
        let a = move |x: [f64; 2], xi: [f64; 2]| {
            let norm = xi[0].hypot(xi[1]);
            if norm == 0.0 {
                return [0.0, 0.0];
            }
            let s = coeff(x) * norm.powf(p - 2.0);
            [s * xi[0], s * xi[1]]
        };
        let rep = check_structure(&a, &spec, &cfg.modulus, &plan).map_err(CliError::from)?;
        report.timings.insert("structure_s".into(), t0.elapsed().as_secs_f64());
        report.structure = Some(rep);
    }
    Ok(())
}

pub fn cmd_oracle(cfg: &OracleCmd, ctx: &Ctx) -> Result<RunReport, CliError> {
    let mut report = RunReport::new("oracle", echo(cfg));
    ensure_out(ctx)?;
    if matches!(cfg.oracle, crate::config::FieldSpec::File { .. }) {
        return Err(CliError::Validation(
            "the oracle command samples analytic families; `file` is not an oracle".into(),
        ));
    }
    let grid = cfg.grid.build()?;
    let t0 = Instant::now();
    let field = cfg.oracle.sample(grid)?;
    let path = ctx.out_dir.join(&cfg.output_field);
    field.write_file(&path).map_err(CliError::from)?;
    report.timings.insert("sample_s".into(), t0.elapsed().as_secs_f64());
    report.known_decay = cfg.oracle.known_decay().map(|d| KnownDecaySection {
        center: d.center,
        prefactor: d.prefactor,
        exponent: d.exponent,
    });
    report.write(ctx.out_dir)?;
    Ok(report)
}

pub fn cmd_pipeline(cfg: &PipelineCmd, ctx: &Ctx) -> Result<RunReport, CliError> {
    let mut report = RunReport::new("pipeline", echo(cfg));
    ensure_out(ctx)?;

    let (field, _) = match run_solve_stage(&cfg.solve, ctx, &mut report) {
        Ok(v) => v,
        Err(e) => {
            // partial report already on disk for solver failures
            report.verdict = Some("aborted".into());
            report.write(ctx.out_dir)?;
            return Err(e);
        }
    };

    if let Err(e) = run_probe_stage(&cfg.probe, &field, ctx, &mut report) {
        report.verdict = Some("aborted".into());
        report.write(ctx.out_dir)?;
        return Err(e);
    }

    if let Some(check) = &cfg.check {
        if let Err(e) = run_check_stage(check, ctx, &mut report) {
            report.verdict = Some("aborted".into());
            report.write(ctx.out_dir)?;
            return Err(e);
        }
    }

    // Aggregate: every probed point must meet the theoretical target in the
    // headline (sup) mode.
    let all_pass = report
        .probes
        .as_ref()
        .map(|ps| {
            !ps.is_empty()
                && ps.iter().all(|s| s.sup.verdict != plaplab::probe::Verdict::Fail)
        })
        .unwrap_or(false);
    report.verdict = Some(if all_pass { "pass".into() } else { "fail".into() });
    report.write(ctx.out_dir)?;
    Ok(report)
}
