//! Dirichlet solver for `-div(ς(X) |Du|^{p-2} Du) = μ` on 2D grids and the
//! exactly-integrable 1D counterpart.
//!
//! The degeneracy at `Du = 0` is removed by the regularization
//! `(|Du|^2 + ε^2)^{(p-2)/2}`; a geometric continuation drives ε from
//! `eps0` down to `eps_min`, warm-starting each level. Each level runs a
//! damped Newton iteration on the discrete energy, with a frozen-coefficient
//! (Picard) fallback once a Newton step fails the line search twice.
//! Linear sub-solves use matrix-free conjugate gradients with a diagonal
//! preconditioner at relative tolerance 1e-10.

mod oned;
mod pcg;
mod scheme;

pub use oned::{solve_1d, Profile1d};
pub use scheme::energy;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::problem::{ModelField, SolveConfig};
use scheme::Scheme;

const PCG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Newton,
    Picard,
}

/// One accepted damped step.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IterRecord {
    pub kind: StepKind,
    pub step: f64,
    pub residual: f64,
    pub energy: f64,
    pub pcg_iters: usize,
}

/// Trace of one continuation level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelTrace {
    pub eps: f64,
    pub iterations: Vec<IterRecord>,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    /// Linear warm-start trace (`p != 2` only).
    pub init_linear: Option<LevelTrace>,
    pub levels: Vec<LevelTrace>,
    /// Residual norm of the initial iterate at the final regularization;
    /// the convergence target is `newton_tol` times this.
    pub reference_residual: f64,
    pub final_residual: f64,
}

impl SolveDiagnostics {
    pub fn residual_history(&self) -> Vec<f64> {
        self.levels
            .iter()
            .flat_map(|l| l.iterations.iter().map(|it| it.residual))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub u: ScalarField,
    pub diagnostics: SolveDiagnostics,
}

struct LevelOutcome {
    trace: LevelTrace,
    residual: f64,
}

/// Solve the Dirichlet problem. `boundary` supplies values on boundary
/// nodes (interior entries are ignored); `mu` is the source sampled at
/// nodes. Returns the solution with the full iteration trace, or a
/// non-convergence error carrying the residual history and last iterate.
pub fn solve_dirichlet(
    model: &ModelField,
    mu: &ScalarField,
    boundary: &ScalarField,
    cfg: &SolveConfig,
) -> Result<Solution> {
    mu.same_grid(boundary)?;
    cfg.validate()?;
    if !(model.p > 1.0) {
        return Err(Error::InvalidSpec(format!("solver needs p > 1, got {}", model.p)));
    }
    let grid = mu.grid;
    let scheme = Scheme::new(model, mu)?;

    // Initial iterate: boundary data on the boundary, zero inside.
    let mut u = vec![0.0; grid.len()];
    for i in 0..grid.nx {
        u[grid.idx(i, 0)] = boundary.at(i, 0);
        u[grid.idx(i, grid.ny - 1)] = boundary.at(i, grid.ny - 1);
    }
    for j in 0..grid.ny {
        u[grid.idx(0, j)] = boundary.at(0, j);
        u[grid.idx(grid.nx - 1, j)] = boundary.at(grid.nx - 1, j);
    }

    let mut work = vec![0.0; grid.len()];
    scheme.residual(&u, cfg.eps_min, &mut work);
    let reference_residual = pcg::norm(&work);
    if !reference_residual.is_finite() {
        return Err(Error::NonFinite("residual of the initial iterate".into()));
    }
    let target = cfg.newton_tol * reference_residual;

    let mut diagnostics = SolveDiagnostics {
        init_linear: None,
        levels: Vec::new(),
        reference_residual,
        final_residual: reference_residual,
    };
    if reference_residual == 0.0 {
        let u = ScalarField::new(grid, u)?;
        return Ok(Solution { u, diagnostics });
    }

    // Warm start for p != 2: one linear solve with the same coefficient.
    if model.p != 2.0 {
        let linear_model = ModelField::new(2.0, {
            let m = model.clone();
            move |x| m.coeff_at(x)
        });
        let linear = Scheme::new(&linear_model, mu)?;
        let out = run_level(&linear, &mut u, 0.0, f64::NEG_INFINITY, 1, cfg)?;
        diagnostics.init_linear = Some(out.trace);
    }

    // Continuation levels.
    let mut levels = Vec::new();
    if model.p == 2.0 {
        levels.push(cfg.eps_min);
    } else {
        let mut e = cfg.eps0;
        while e > cfg.eps_min * (1.0 + 1e-12) {
            levels.push(e);
            e *= cfg.continuation_factor;
        }
        levels.push(cfg.eps_min);
    }

    let mut final_residual = reference_residual;
    for &eps in &levels {
        let out = run_level(&scheme, &mut u, eps, target, cfg.max_newton, cfg)?;
        final_residual = out.residual;
        let converged = out.trace.converged;
        diagnostics.levels.push(out.trace);
        if !converged {
            diagnostics.final_residual = final_residual;
            return Err(Error::SolverNonConvergence {
                eps,
                residual: final_residual,
                iterations: cfg.max_newton,
                history: diagnostics.residual_history(),
                last_iterate: u,
            });
        }
    }
    diagnostics.final_residual = final_residual;
    Ok(Solution { u: ScalarField::new(grid, u)?, diagnostics })
}

/// Damped Newton at a fixed regularization level. `target` is the absolute
/// residual norm to reach (`-inf` runs exactly `max_iters` accepted steps,
/// used for the linear warm start).
fn run_level(
    scheme: &Scheme,
    u: &mut [f64],
    eps: f64,
    target: f64,
    max_iters: usize,
    cfg: &SolveConfig,
) -> Result<LevelOutcome> {
    let n = u.len();
    let mut residual = vec![0.0; n];
    let mut direction = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut trial = vec![0.0; n];

    let mut trace = LevelTrace { eps, iterations: Vec::new(), converged: false };
    let pcg_cap = 20_000.max(40 * scheme.grid.nx.max(scheme.grid.ny));

    scheme.residual(u, eps, &mut residual);
    let mut r_norm = pcg::norm(&residual);
    if !r_norm.is_finite() {
        return Err(Error::NonFinite(format!("residual at eps = {eps}")));
    }

    let run_to_target = target.is_finite();
    let mut failures = 0usize;
    // Number of upcoming iterations forced onto the frozen-coefficient
    // operator after Newton rejections; Newton resumes afterwards for the
    // quadratic endgame.
    let mut picard_budget = 0usize;

    while (!run_to_target && trace.iterations.len() < max_iters)
        || (run_to_target && r_norm > target)
    {
        if run_to_target && trace.iterations.len() >= max_iters {
            return Ok(LevelOutcome { trace, residual: r_norm });
        }

        let cache = scheme.step_cache(u, eps);
        let curvature = picard_budget == 0;
        scheme.jdiag(&cache, curvature, &mut diag);
        let diag_floor = 1e-300 + diag.iter().cloned().fold(0.0f64, f64::max) * 1e-14;
        for d in diag.iter_mut() {
            if *d < diag_floor {
                *d = diag_floor;
            }
        }
        for k in 0..n {
            rhs[k] = -residual[k];
        }
        let pcg_out = pcg::pcg(
            |v, out| scheme.japply(&cache, curvature, v, out),
            &diag,
            &rhs,
            &mut direction,
            PCG_TOL,
            pcg_cap,
        );

        let mut slope = pcg::dot(&residual, &direction);
        if !(slope < 0.0) || (!pcg_out.converged && pcg_out.relative_residual > 0.5) {
            // Fall back to the preconditioned gradient, always a descent
            // direction for a positive diagonal.
            for k in 0..n {
                direction[k] = rhs[k] / diag[k];
            }
            slope = pcg::dot(&residual, &direction);
        }

        let e0 = scheme.energy(u, eps);
        if !e0.is_finite() {
            return Err(Error::NonFinite(format!("energy at eps = {eps}")));
        }
        let mut step = 1.0f64;
        let mut accepted = false;
        let mut e_new = e0;
        if cfg.armijo_c * slope.abs() <= 1e4 * f64::EPSILON * e0.abs() {
            // The predicted decrease is below the rounding noise of the
            // energy sum; comparing energies would reject good steps at
            // random. Take the full step and let the residual decide.
            for k in 0..n {
                trial[k] = u[k] + direction[k];
            }
            e_new = scheme.energy(&trial, eps);
            accepted = e_new.is_finite();
        } else {
            let allowance = 32.0 * f64::EPSILON * e0.abs();
            for _ in 0..45 {
                for k in 0..n {
                    trial[k] = u[k] + step * direction[k];
                }
                e_new = scheme.energy(&trial, eps);
                if e_new.is_finite() && e_new <= e0 + cfg.armijo_c * step * slope + allowance {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
        }

        if !accepted {
            failures += 1;
            if failures >= 2 && picard_budget == 0 {
                // Two rejected Newton steps: run a burst on the frozen
                // coefficients (which majorize the energy for p < 2),
                // then let Newton finish.
                picard_budget = 3;
            }
            if failures > 6 {
                return Ok(LevelOutcome { trace, residual: r_norm });
            }
            continue;
        }

        u.copy_from_slice(&trial);
        scheme.residual(u, eps, &mut residual);
        r_norm = pcg::norm(&residual);
        if !r_norm.is_finite() || !e_new.is_finite() {
            return Err(Error::NonFinite(format!("after step at eps = {eps}")));
        }
        trace.iterations.push(IterRecord {
            kind: if picard_budget > 0 { StepKind::Picard } else { StepKind::Newton },
            step,
            residual: r_norm,
            energy: e_new,
            pcg_iters: pcg_out.iterations,
        });
        if std::env::var_os("PLAPLAB_TRACE").is_some() {
            eprintln!(
                "eps {eps:9.3e} it {:3} {:?} step {step:8.2e} r {r_norm:10.4e} pcg {} rel {:8.2e} conv {} slope {slope:9.2e}",
                trace.iterations.len(),
                trace.iterations.last().unwrap().kind,
                pcg_out.iterations,
                pcg_out.relative_residual,
                pcg_out.converged,
            );
        }
        picard_budget = picard_budget.saturating_sub(1);
    }
    trace.converged = true;
    Ok(LevelOutcome { trace, residual: r_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gradient_field, Grid2D, ScalarField};

    fn saddle_setup(n: usize) -> (ModelField, ScalarField, ScalarField) {
        let grid = Grid2D::covering(n, n, -1.0, 1.0, -1.0, 1.0).unwrap();
        let model = ModelField::constant(2.0);
        let mu = ScalarField::zeros(grid);
        let boundary = ScalarField::from_fn(grid, |p| p[0] * p[0] - p[1] * p[1]);
        (model, mu, boundary)
    }

    #[test]
    fn laplace_saddle_is_discrete_exact() {
        // x^2 - y^2 is a discrete harmonic for the five-point stencil, so the
        // only error left is the linear-solver tolerance, far below the
        // O(h^2) truncation a non-exact solution would show.
        let (model, mu, boundary) = saddle_setup(33);
        let cfg = SolveConfig { newton_tol: 1e-10, ..SolveConfig::default() };
        let sol = solve_dirichlet(&model, &mu, &boundary, &cfg).unwrap();
        assert_eq!(sol.diagnostics.levels.len(), 1, "p = 2 must run one level");
        let exact = ScalarField::from_fn(mu.grid, |p| p[0] * p[0] - p[1] * p[1]);
        let err = sol
            .u
            .values
            .iter()
            .zip(&exact.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-6, "max error {err}");
    }

    #[test]
    fn residual_consistency_bound() {
        let (model, mu, boundary) = saddle_setup(17);
        let cfg = SolveConfig::default();
        let sol = solve_dirichlet(&model, &mu, &boundary, &cfg).unwrap();
        let d = &sol.diagnostics;
        assert!(d.final_residual <= cfg.newton_tol * d.reference_residual);
    }

    #[test]
    fn variable_coefficient_symmetry_preserved() {
        // ς even under (x, y) -> (-x, -y), boundary odd in each variable:
        // the discrete solution inherits u(-X) = -u(X) about the center.
        let grid = Grid2D::covering(33, 33, -1.0, 1.0, -1.0, 1.0).unwrap();
        let model = ModelField::new(2.0, |x| 1.0 + 0.5 * x[0].hypot(x[1]).powf(0.1));
        let mu = ScalarField::zeros(grid);
        let boundary = ScalarField::from_fn(grid, |p| p[0] * p[1]);
        let cfg = SolveConfig::default();
        let sol = solve_dirichlet(&model, &mu, &boundary, &cfg).unwrap();
        let n = grid.nx;
        let scale = sol.u.values.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
        for j in 0..n {
            for i in 0..n {
                let a = sol.u.at(i, j);
                let b = sol.u.at(n - 1 - i, n - 1 - j);
                assert!(
                    (a - b).abs() <= 10.0 * cfg.newton_tol * scale.max(1.0),
                    "asymmetry at ({i},{j}): {a} vs {b}"
                );
            }
        }
        // The gradient vanishes at the center by symmetry.
        let du = gradient_field(&sol.u);
        let c = (n - 1) / 2;
        assert!(du.norm_at(c, c) <= 1e-6);
    }

    #[test]
    fn p_18_manufactured_radial_converges_first_order() {
        // u* solves -div(|Du|^{p-2} Du) = 1 with u*(R) = 0; boundary from u*.
        let p = 1.8;
        let pp = p / (p - 1.0);
        let c = (p - 1.0) / p * (2.0f64).powf(-1.0 / (p - 1.0));
        let exact = move |x: [f64; 2]| {
            let r = x[0].hypot(x[1]);
            c * (1.0f64.powf(pp) - r.powf(pp))
        };
        let mut errs = Vec::new();
        for &n in &[17usize, 33] {
            let grid = Grid2D::covering(n, n, -1.0, 1.0, -1.0, 1.0).unwrap();
            let model = ModelField::constant(p);
            let mu = ScalarField::from_fn(grid, |_| 1.0);
            let boundary = ScalarField::from_fn(grid, exact);
            let cfg = SolveConfig { eps0: 1e-2, eps_min: 1e-8, ..SolveConfig::default() };
            let sol = solve_dirichlet(&model, &mu, &boundary, &cfg).unwrap();
            assert!(sol.diagnostics.levels.len() >= 3, "continuation trace expected");
            let uex = ScalarField::from_fn(grid, exact);
            let err = sol
                .u
                .values
                .iter()
                .zip(&uex.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            errs.push(err);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 0.8, "observed order {order}, errors {errs:?}");
    }

    #[test]
    fn energy_descends_along_accepted_steps() {
        let p = 3.0;
        let grid = Grid2D::covering(17, 17, -1.0, 1.0, -1.0, 1.0).unwrap();
        let model = ModelField::constant(p);
        let mu = ScalarField::from_fn(grid, |_| 1.0);
        let boundary = ScalarField::zeros(grid);
        let sol = solve_dirichlet(&model, &mu, &boundary, &SolveConfig::default()).unwrap();
        for level in &sol.diagnostics.levels {
            for pair in level.iterations.windows(2) {
                assert!(
                    pair[1].energy <= pair[0].energy + 1e-12 * pair[0].energy.abs().max(1.0),
                    "energy increased within a level: {pair:?}"
                );
            }
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let (model, mu, _) = saddle_setup(17);
        let other = Grid2D::covering(9, 9, -1.0, 1.0, -1.0, 1.0).unwrap();
        let boundary = ScalarField::zeros(other);
        assert!(matches!(
            solve_dirichlet(&model, &mu, &boundary, &SolveConfig::default()),
            Err(Error::GridMismatch(_))
        ));
    }
}
