//! Pointwise regularity probing around critical points.
//!
//! The probe detects the singular set `{|Du| <= tol}`, records the dyadic
//! oscillation profile `(r_k, τ_k, E_k)` with `r_k = r_0 ϱ^k`,
//! `τ_k = argmin_τ ⨍_{B_{r_k}} |u - τ|^p`, and fits the decay exponent from
//! the log-log slope of `E` against `r`: a field with
//! `sup_{B_r} |u - u(x_0)| ~ r^{1+α}` yields slope `1 + α`. The measured
//! `α̂` is then compared against the pointwise target
//! `min{α_M, (q-n)/((p-1)q)}`.
//!
//! `normalize_at` reduces a field around a critical point to the unit-scale
//! smallness regime via `v(X) = (u(x_0 + ζX) - u(x_0)) / κ` with
//! `ζ = min{1, dist/2, (ε_0/‖μ‖)^{1/(p-n/q)}, ω^{-1}(Λ̃^{-1} ε_0)}` and
//! `κ = max{1, (ζ^{-n} ⨍ |u - u(x_0)|^p)^{1/p}}`.

use serde::{Deserialize, Serialize};

use crate::continuity::{inverse_modulus, Modulus};
use crate::error::{Error, Result};
use crate::grid::{gradient_field, Grid2D, ScalarField, VectorField};
use crate::problem::ProblemSpec;

/// Relative slack used for ball-membership and radius comparisons, so that
/// nodes sitting exactly on a dyadic radius are kept regardless of rounding.
const GEOM_SLACK: f64 = 1e-12;

/// A grid node selected for probing.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProbePoint {
    pub i: usize,
    pub j: usize,
    pub position: [f64; 2],
    pub grad_norm: f64,
    pub is_singular: bool,
}

/// Build a probe point at a grid node, reading `|Du|` off the field.
pub fn probe_at(du: &VectorField, i: usize, j: usize, grad_tol: f64) -> ProbePoint {
    let grad_norm = du.norm_at(i, j);
    ProbePoint {
        i,
        j,
        position: du.grid.pos(i, j),
        grad_norm,
        is_singular: grad_norm <= grad_tol,
    }
}

/// Scale-aware default tolerance for singular-set detection:
/// `10 h L`, where `L` estimates the Lipschitz constant of `Du`.
pub fn default_grad_tol(du: &VectorField) -> f64 {
    let g = &du.grid;
    let mut lip = 0.0f64;
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let k = g.idx(i, j);
            let dxx = (du.vx[k + 1] - du.vx[k - 1]).abs() / (2.0 * g.hx);
            let dxy = (du.vx[k + g.nx] - du.vx[k - g.nx]).abs() / (2.0 * g.hy);
            let dyx = (du.vy[k + 1] - du.vy[k - 1]).abs() / (2.0 * g.hx);
            let dyy = (du.vy[k + g.nx] - du.vy[k - g.nx]).abs() / (2.0 * g.hy);
            lip = lip.max(dxx).max(dxy).max(dyx).max(dyy);
        }
    }
    10.0 * g.max_spacing() * lip
}

/// All interior nodes with `|Du| <= grad_tol`, at least `4 h` from the
/// boundary, sorted by gradient norm ascending. Empty output is not an
/// error.
pub fn singular_set(du: &VectorField, grad_tol: f64) -> Vec<ProbePoint> {
    let g = &du.grid;
    let margin = 4.0 * g.max_spacing() * (1.0 - GEOM_SLACK);
    let mut out = Vec::new();
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            if g.dist_to_boundary(g.pos(i, j)) < margin {
                continue;
            }
            let norm = du.norm_at(i, j);
            if norm <= grad_tol {
                out.push(ProbePoint {
                    i,
                    j,
                    position: g.pos(i, j),
                    grad_norm: norm,
                    is_singular: true,
                });
            }
        }
    }
    out.sort_by(|a, b| a.grad_norm.total_cmp(&b.grad_norm));
    out
}

/// Collapse clusters of detected nodes (8-connected components) to their
/// minimum-gradient representative. A coarse tolerance flags a blob of
/// nodes around each true critical point; one probe per blob suffices.
pub fn cluster_singular_points(points: &[ProbePoint], grid: &Grid2D) -> Vec<ProbePoint> {
    fn root(c: &mut [usize], mut k: usize) -> usize {
        while c[k] != k {
            c[k] = c[c[k]];
            k = c[k];
        }
        k
    }
    let by_node: std::collections::BTreeMap<usize, usize> =
        points.iter().enumerate().map(|(k, p)| (grid.idx(p.i, p.j), k)).collect();
    let mut component: Vec<usize> = (0..points.len()).collect();
    for (k, p) in points.iter().enumerate() {
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                let (ni, nj) = (p.i as i64 + di, p.j as i64 + dj);
                if ni < 0 || nj < 0 || ni >= grid.nx as i64 || nj >= grid.ny as i64 {
                    continue;
                }
                if let Some(&other) = by_node.get(&grid.idx(ni as usize, nj as usize)) {
                    let (ra, rb) = (root(&mut component, k), root(&mut component, other));
                    component[ra] = rb;
                }
            }
        }
    }
    let mut reps: std::collections::BTreeMap<usize, ProbePoint> = Default::default();
    for (k, p) in points.iter().enumerate() {
        let r = root(&mut component, k);
        let entry = reps.entry(r).or_insert(*p);
        if p.grad_norm < entry.grad_norm {
            *entry = *p;
        }
    }
    let mut best: Vec<ProbePoint> = reps.into_values().collect();
    best.sort_by(|a, b| a.grad_norm.total_cmp(&b.grad_norm));
    best
}

/// Oscillation measure over a discrete ball.
#[derive(Debug, Clone, Copy)]
pub enum OscMode {
    /// `max_{B_r} |u - u(x_0)|`
    Sup,
    /// `(⨍_{B_r} |u - tau|^p)^{1/p}`
    PMean { tau: f64, p: f64 },
}

fn ball_indices(grid: &Grid2D, center: [f64; 2], r: f64) -> Vec<usize> {
    let rr = r * (1.0 + GEOM_SLACK);
    let i_lo = (((center[0] - rr) - grid.x0) / grid.hx).floor().max(0.0) as usize;
    let i_hi = ((((center[0] + rr) - grid.x0) / grid.hx).ceil() as usize).min(grid.nx - 1);
    let j_lo = (((center[1] - rr) - grid.y0) / grid.hy).floor().max(0.0) as usize;
    let j_hi = ((((center[1] + rr) - grid.y0) / grid.hy).ceil() as usize).min(grid.ny - 1);
    let mut out = Vec::new();
    for j in j_lo..=j_hi {
        for i in i_lo..=i_hi {
            let p = grid.pos(i, j);
            if (p[0] - center[0]).hypot(p[1] - center[1]) <= rr {
                out.push(grid.idx(i, j));
            }
        }
    }
    out
}

fn check_ball(u: &ScalarField, x0: &ProbePoint, r: f64) -> Result<()> {
    if r < 4.0 * u.grid.max_spacing() * (1.0 - GEOM_SLACK) {
        return Err(Error::Precondition(format!(
            "radius {r} below 4 grid spacings; discretization error would dominate"
        )));
    }
    if u.grid.dist_to_boundary(x0.position) < r * (1.0 - GEOM_SLACK) {
        return Err(Error::Geometry(format!(
            "ball of radius {r} at {:?} exits the domain",
            x0.position
        )));
    }
    Ok(())
}

/// Oscillation of `u` over the discrete ball `B_r(x_0)`.
pub fn oscillation(u: &ScalarField, x0: &ProbePoint, r: f64, mode: OscMode) -> Result<f64> {
    check_ball(u, x0, r)?;
    let idx = ball_indices(&u.grid, x0.position, r);
    Ok(oscillation_over(&u.values, &idx, u.values[u.grid.idx(x0.i, x0.j)], mode))
}

fn oscillation_over(values: &[f64], idx: &[usize], center_value: f64, mode: OscMode) -> f64 {
    match mode {
        OscMode::Sup => idx
            .iter()
            .map(|&k| (values[k] - center_value).abs())
            .fold(0.0, f64::max),
        OscMode::PMean { tau, p } => {
            let sum: f64 = idx.iter().map(|&k| (values[k] - tau).abs().powf(p)).sum();
            (sum / idx.len() as f64).powf(1.0 / p)
        }
    }
}

/// Golden-section minimizer for strictly convex 1D objectives.
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// The constant minimizing the discrete `⨍_{B_r} |u - τ|^p`: the ball mean
/// for `p = 2`, otherwise found by golden-section search on
/// `[min u, max u]` to tolerance `1e-12 (max - min)`.
pub fn best_tau(u: &ScalarField, x0: &ProbePoint, r: f64, p: f64) -> Result<f64> {
    check_ball(u, x0, r)?;
    let idx = ball_indices(&u.grid, x0.position, r);
    Ok(best_tau_over(&u.values, &idx, p))
}

fn best_tau_over(values: &[f64], idx: &[usize], p: f64) -> f64 {
    if p == 2.0 {
        return idx.iter().map(|&k| values[k]).sum::<f64>() / idx.len() as f64;
    }
    let lo = idx.iter().map(|&k| values[k]).fold(f64::INFINITY, f64::min);
    let hi = idx.iter().map(|&k| values[k]).fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return lo;
    }
    // Optimize in coordinates centered at the interval midpoint; the
    // objective is translation-equivariant and this keeps it that way
    // numerically.
    let mid = 0.5 * (lo + hi);
    let obj = |s: f64| -> f64 {
        idx.iter().map(|&k| (values[k] - mid - s).abs().powf(p)).sum()
    };
    let half = 0.5 * (hi - lo);
    mid + golden_min(obj, -half, half, 1e-12 * (hi - lo))
}

/// One scale of a decay profile.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub k: usize,
    pub r: f64,
    pub tau: f64,
    pub e_sup: f64,
    pub e_pmean: f64,
}

/// Dyadic oscillation profile at a probe point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayProfile {
    pub center: ProbePoint,
    pub center_value: f64,
    pub rho: f64,
    pub p: f64,
    pub entries: Vec<ProfileEntry>,
    /// Set when the grid could not supply all requested scales.
    pub truncated: bool,
}

impl DecayProfile {
    /// Drop the `skip` largest scales (for restricted-range fits).
    pub fn restricted(&self, skip: usize) -> DecayProfile {
        DecayProfile {
            center: self.center,
            center_value: self.center_value,
            rho: self.rho,
            p: self.p,
            entries: self.entries.iter().skip(skip).cloned().collect(),
            truncated: self.truncated,
        }
    }

    pub fn tau_increments(&self) -> Vec<f64> {
        self.entries.windows(2).map(|w| (w[1].tau - w[0].tau).abs()).collect()
    }
}

/// Record `(r_k, τ_k, E_k)` for `r_k = r_0 ϱ^k`, `k = 0..=levels`, where
/// `r_0` is the largest ball around `x_0` inside the domain. Scales below
/// four grid spacings are dropped and flagged as truncation.
pub fn dyadic_profile(
    u: &ScalarField,
    x0: &ProbePoint,
    rho: f64,
    levels: usize,
    p: f64,
) -> Result<DecayProfile> {
    if !(rho > 0.0 && rho <= 0.5) {
        return Err(Error::Precondition(format!("dyadic ratio {rho} must lie in (0, 1/2]")));
    }
    if levels < 4 {
        return Err(Error::Precondition(format!("need at least 4 dyadic levels, got {levels}")));
    }
    let r0 = u.grid.dist_to_boundary(x0.position);
    let floor = 4.0 * u.grid.max_spacing() * (1.0 - GEOM_SLACK);
    if r0 < floor {
        return Err(Error::Geometry(format!(
            "probe point {:?} too close to the boundary (r0 = {r0})",
            x0.position
        )));
    }
    let center_value = u.values[u.grid.idx(x0.i, x0.j)];
    let mut entries = Vec::new();
    let mut truncated = false;
    for k in 0..=levels {
        let r = r0 * rho.powi(k as i32);
        if r < floor {
            truncated = true;
            break;
        }
        let idx = ball_indices(&u.grid, x0.position, r);
        let tau = best_tau_over(&u.values, &idx, p);
        let e_pmean = oscillation_over(&u.values, &idx, center_value, OscMode::PMean { tau, p });
        let e_sup = oscillation_over(&u.values, &idx, center_value, OscMode::Sup);
        entries.push(ProfileEntry { k, r, tau, e_sup, e_pmean });
    }
    Ok(DecayProfile { center: *x0, center_value, rho, p, entries, truncated })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    Sup,
    PMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// All oscillations vanished: nothing to fit, decay is unbounded.
    Flat,
}

/// Fitted decay exponent with its quality and verdict.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExponentReport {
    pub alpha_hat: f64,
    pub r_squared: f64,
    pub alpha_target: f64,
    pub slack: f64,
    pub verdict: Verdict,
    pub mode: FitMode,
}

/// Least-squares slope of `log E` against `log r`; `α̂ = slope - 1`.
/// Zero entries are dropped; an all-zero profile short-circuits to the
/// `Flat` verdict with an infinite exponent sentinel.
pub fn fit_exponent(
    profile: &DecayProfile,
    mode: FitMode,
    alpha_target: f64,
    slack: f64,
) -> Result<ExponentReport> {
    let pick = |e: &ProfileEntry| match mode {
        FitMode::Sup => e.e_sup,
        FitMode::PMean => e.e_pmean,
    };
    let usable: Vec<(f64, f64)> = profile
        .entries
        .iter()
        .filter(|e| pick(e) > 0.0)
        .map(|e| (e.r.ln(), pick(e).ln()))
        .collect();
    if usable.is_empty() && !profile.entries.is_empty() {
        return Ok(ExponentReport {
            alpha_hat: f64::INFINITY,
            r_squared: 1.0,
            alpha_target,
            slack,
            verdict: Verdict::Flat,
            mode,
        });
    }
    if usable.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} usable scales; need at least 4 for a slope fit",
            usable.len()
        )));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|v| v.0).sum::<f64>() / n;
    let my = usable.iter().map(|v| v.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|v| (v.0 - mx) * (v.0 - mx)).sum();
    let sxy: f64 = usable.iter().map(|v| (v.0 - mx) * (v.1 - my)).sum();
    let slope = sxy / sxx;
    let ss_tot: f64 = usable.iter().map(|v| (v.1 - my) * (v.1 - my)).sum();
    let ss_res: f64 = usable
        .iter()
        .map(|v| {
            let pred = my + slope * (v.0 - mx);
            (v.1 - pred) * (v.1 - pred)
        })
        .sum();
    let r_squared = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    let alpha_hat = slope - 1.0;
    let verdict = if alpha_hat >= alpha_target - slack { Verdict::Pass } else { Verdict::Fail };
    Ok(ExponentReport { alpha_hat, r_squared, alpha_target, slack, verdict, mode })
}

/// Theoretical pointwise exponent target.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TheoreticalAlpha {
    pub value: f64,
    /// True when the `α_M` branch attains the minimum; that side is an open
    /// bound (any `α < α_M` is achievable, `α_M` itself is not claimed).
    pub exclusive: bool,
}

/// `min{α_M, (q-n)/((p-1)q)}`, with the `α_M` side flagged as exclusive.
pub fn theoretical_alpha(spec: &ProblemSpec, alpha_m: f64) -> Result<TheoreticalAlpha> {
    if !(alpha_m > 0.0 && alpha_m <= 1.0) {
        return Err(Error::Precondition(format!("alpha_M = {alpha_m} must lie in (0, 1]")));
    }
    let source = spec.source_exponent();
    Ok(TheoreticalAlpha { value: alpha_m.min(source), exclusive: alpha_m <= source })
}

/// Sample `v(X) = (u(x0 + ζ X) - u(x0)) / κ` on its own grid, bilinearly
/// interpolated. The sampling spacing is `h/ζ` so that, when radii align,
/// v-nodes land exactly on source nodes.
pub fn sample_rescaled(
    u: &ScalarField,
    x0: &ProbePoint,
    zeta: f64,
    kappa: f64,
    radius: f64,
) -> Result<ScalarField> {
    if !(zeta > 0.0 && kappa > 0.0 && radius > 0.0) {
        return Err(Error::Precondition("zeta, kappa, radius must be positive".into()));
    }
    let hv = u.grid.max_spacing() / zeta;
    let dist = u.grid.dist_to_boundary(x0.position);
    // Round the extent up to cover the requested radius, then pull it back
    // inside the source ball if the probe point sits close to the boundary.
    let mut half = (radius / hv).ceil() as usize;
    while half > 0 && zeta * (half as f64) * hv > dist * (1.0 + GEOM_SLACK) {
        half -= 1;
    }
    if half < 4 {
        return Err(Error::Geometry(format!(
            "rescaled sampling would have only {half} nodes per half-axis; grid too coarse for zeta = {zeta}"
        )));
    }
    let m = 2 * half + 1;
    let grid = Grid2D::new(m, m, hv, hv, -(half as f64) * hv, -(half as f64) * hv)?;
    let u0 = u.values[u.grid.idx(x0.i, x0.j)];
    let mut values = Vec::with_capacity(grid.len());
    for j in 0..m {
        for i in 0..m {
            let xv = grid.pos(i, j);
            let src = [x0.position[0] + zeta * xv[0], x0.position[1] + zeta * xv[1]];
            values.push((u.interp(src)? - u0) / kappa);
        }
    }
    ScalarField::new(grid, values)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub zeta: f64,
    pub kappa: f64,
    pub eps0: f64,
}

/// Numerical verification of the smallness conclusions after rescaling.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SmallnessChecks {
    /// `|Dv(0)|` and the tolerance it is held against (`ε_0` plus a
    /// discretization allowance).
    pub dv0: f64,
    pub dv0_bound: f64,
    pub dv0_ok: bool,
    /// Rescaled source norm `ζ^{p-n/q} κ^{1-p} ‖μ‖` against `ε_0`.
    pub source: f64,
    pub source_ok: bool,
    /// Coefficient oscillation `Λ̃ ω(ζ)` against `ε_0`.
    pub coeff_osc: f64,
    pub coeff_osc_ok: bool,
}

/// Outcome of the reduction to the smallness regime.
#[derive(Debug, Clone)]
pub struct Normalization {
    pub params: NormalizationParams,
    /// The rescaled field, sampled on `[-2, 2]^2` around the probe point.
    pub view: ScalarField,
    pub rescaled_mu_norm: f64,
    pub rescaled_modulus: Option<Modulus>,
    /// Set when the modulus inverse saturated at its domain cap.
    pub omega_saturated: bool,
    pub checks: SmallnessChecks,
}

/// Compute the scaling parameters `ζ, κ` at a probe point and return the
/// rescaled view together with the numerically verified smallness bounds.
pub fn normalize_at(
    u: &ScalarField,
    x0: &ProbePoint,
    mu_norm: f64,
    omega: Option<&Modulus>,
    spec: &ProblemSpec,
    eps0: f64,
) -> Result<Normalization> {
    if !(eps0 > 0.0) {
        return Err(Error::Precondition(format!("eps0 = {eps0} must be positive")));
    }
    if mu_norm < 0.0 {
        return Err(Error::Precondition("mu_norm must be nonnegative".into()));
    }
    let grid = &u.grid;
    let dist = grid.dist_to_boundary(x0.position);
    let floor = 4.0 * grid.max_spacing();
    if dist < floor {
        return Err(Error::Geometry(format!(
            "probe point {:?} too close to the boundary for normalization",
            x0.position
        )));
    }

    let nf = spec.n as f64;
    let n_over_q = if spec.q.is_infinite() { 0.0 } else { nf / spec.q };

    let mut zeta = 1.0f64.min(0.5 * dist);
    if mu_norm > 0.0 {
        zeta = zeta.min((eps0 / mu_norm).powf(1.0 / (spec.p - n_over_q)));
    }
    let mut omega_saturated = false;
    if let Some(w) = omega {
        let inv = inverse_modulus(w, eps0 / spec.lambda_tilde)?;
        omega_saturated = inv.saturated;
        zeta = zeta.min(inv.t);
    }

    // κ from the centered p-mean over B_min(1, dist).
    let r_bar = 1.0f64.min(dist);
    let u0 = u.values[grid.idx(x0.i, x0.j)];
    let idx = ball_indices(grid, x0.position, r_bar);
    let mean_p: f64 =
        idx.iter().map(|&k| (u.values[k] - u0).abs().powf(spec.p)).sum::<f64>() / idx.len() as f64;
    let kappa = 1.0f64.max((zeta.powf(-nf) * mean_p).powf(1.0 / spec.p));

    let view = sample_rescaled(u, x0, zeta, kappa, 2.0)?;

    // Smallness checks on the view.
    let dv = gradient_field(&view);
    let c = (view.grid.nx - 1) / 2;
    let dv0 = dv.norm_at(c, c);
    let hv = view.grid.max_spacing();
    let lip = {
        let vc = view.at(c, c);
        let d2x = (view.at(c + 1, c) - 2.0 * vc + view.at(c - 1, c)).abs() / (hv * hv);
        let d2y = (view.at(c, c + 1) - 2.0 * vc + view.at(c, c - 1)).abs() / (hv * hv);
        d2x.max(d2y)
    };
    let dv0_bound = eps0 + 10.0 * hv * lip.max(1.0);
    let rescaled_mu_norm = zeta.powf(spec.p - n_over_q) * kappa.powf(1.0 - spec.p) * mu_norm;
    let coeff_osc = match omega {
        Some(w) => spec.lambda_tilde * w.eval(zeta.min(w.t_max()))?,
        None => 0.0,
    };
    let slack = 1.0 + GEOM_SLACK;
    let checks = SmallnessChecks {
        dv0,
        dv0_bound,
        dv0_ok: dv0 <= dv0_bound,
        source: rescaled_mu_norm,
        source_ok: rescaled_mu_norm <= eps0 * slack,
        coeff_osc,
        coeff_osc_ok: coeff_osc <= eps0 * slack,
    };

    Ok(Normalization {
        params: NormalizationParams { zeta, kappa, eps0 },
        view,
        rescaled_mu_norm,
        rescaled_modulus: omega.map(|w| w.dilated(zeta)),
        omega_saturated,
        checks,
    })
}

/// One-step decay test: with `⨍_{B_1(x_0)} |u|^p <= 1`, does the optimal
/// constant at radius ϱ achieve `⨍_{B_ϱ} |u - τ|^p <= ϱ^{p(1+α)}`?
pub fn one_step_decay(u: &ScalarField, x0: &ProbePoint, rho: f64, alpha: f64, p: f64) -> Result<bool> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Precondition(format!("rho = {rho} must lie in (0, 1)")));
    }
    let grid = &u.grid;
    if grid.dist_to_boundary(x0.position) < 1.0 - GEOM_SLACK {
        return Err(Error::Geometry("unit ball does not fit inside the domain".into()));
    }
    let idx = ball_indices(grid, x0.position, 1.0);
    let norm_p: f64 = idx.iter().map(|&k| u.values[k].abs().powf(p)).sum::<f64>() / idx.len() as f64;
    if norm_p > 1.0 + 1e-9 {
        return Err(Error::Precondition(format!(
            "field is not normalized: mean |u|^p over the unit ball is {norm_p}"
        )));
    }
    let idx_rho = ball_indices(grid, x0.position, rho);
    let tau = best_tau_over(&u.values, &idx_rho, p);
    let mean: f64 =
        idx_rho.iter().map(|&k| (u.values[k] - tau).abs().powf(p)).sum::<f64>() / idx_rho.len() as f64;
    Ok(mean <= rho.powf(p * (1.0 + alpha)) * (1.0 + GEOM_SLACK))
}

/// Cauchy-budget check on the constants `τ_k`: when the profile decays as
/// `E_k <= ϱ^{k(1+α)}` (relative to `r_0`), the increments must respect
/// `|τ_{k+1} - τ_k| <= C ϱ^{k(1+α)}` with the tested budget
/// `C = 2^{1+1/p} (1 + ϱ^{-n/p})`, and the limit `τ_k -> u(x_0)` holds at
/// the geometric rate `C/(1-ϱ) ϱ^{k(1+α)}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CauchyCheck {
    pub budget: f64,
    pub max_increment_ratio: f64,
    pub within_budget: bool,
    /// Whether the profile satisfied the decay hypothesis at every scale.
    pub decay_hypothesis: bool,
    /// Measured constant in `|τ_K - u(x_0)| <= C' ϱ^{K(1+α)}`.
    pub tau_limit_constant: f64,
}

pub fn cauchy_check(profile: &DecayProfile, alpha: f64, n: u32) -> CauchyCheck {
    let p = profile.p;
    let rho = profile.rho;
    let budget = 2.0f64.powf(1.0 + 1.0 / p) * (1.0 + rho.powf(-(n as f64) / p));
    let mut decay = true;
    for e in &profile.entries {
        if e.e_pmean > rho.powf(e.k as f64 * (1.0 + alpha)) * (1.0 + 1e-9) {
            decay = false;
        }
    }
    let mut max_ratio = 0.0f64;
    for w in profile.entries.windows(2) {
        let denom = rho.powf(w[0].k as f64 * (1.0 + alpha));
        max_ratio = max_ratio.max((w[1].tau - w[0].tau).abs() / denom);
    }
    let tau_limit_constant = match profile.entries.last() {
        Some(last) => {
            (last.tau - profile.center_value).abs() / rho.powf(last.k as f64 * (1.0 + alpha))
        }
        None => 0.0,
    };
    CauchyCheck {
        budget,
        max_increment_ratio: max_ratio,
        within_budget: max_ratio <= budget,
        decay_hypothesis: decay,
        tau_limit_constant,
    }
}

/// Radially sampled profile `u(r)` in dimension `dim`, for analytic
/// oracles in dimensions the grid solver does not cover.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub dim: u32,
    /// Uniform mesh starting at 0.
    pub rs: Vec<f64>,
    pub us: Vec<f64>,
}

impl RadialProfile {
    pub fn spacing(&self) -> f64 {
        self.rs[1] - self.rs[0]
    }

    fn samples_within(&self, r: f64) -> usize {
        let rr = r * (1.0 + GEOM_SLACK);
        self.rs.partition_point(|&s| s <= rr)
    }

    /// n-dimensional p-mean over `B_r`: trapezoid quadrature of
    /// `|u - τ|^p s^{n-1}` normalized by the ball volume factor.
    fn weighted_mean_p(&self, m: usize, tau: f64, p: f64) -> f64 {
        let nf = self.dim as f64 - 1.0;
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..m {
            let w = if k == 0 || k == m - 1 { 0.5 } else { 1.0 };
            let s = self.rs[k].powf(nf);
            num += w * (self.us[k] - tau).abs().powf(p) * s;
            den += w * s;
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }
}

pub fn oscillation_radial(profile: &RadialProfile, r: f64, mode: OscMode) -> Result<f64> {
    let m = profile.samples_within(r);
    if m < 2 {
        return Err(Error::InsufficientData(format!("radius {r} below the radial resolution")));
    }
    match mode {
        OscMode::Sup => Ok(profile.us[..m]
            .iter()
            .map(|&v| (v - profile.us[0]).abs())
            .fold(0.0, f64::max)),
        OscMode::PMean { tau, p } => Ok(profile.weighted_mean_p(m, tau, p).powf(1.0 / p)),
    }
}

pub fn best_tau_radial(profile: &RadialProfile, r: f64, p: f64) -> Result<f64> {
    let m = profile.samples_within(r);
    if m < 2 {
        return Err(Error::InsufficientData(format!("radius {r} below the radial resolution")));
    }
    let lo = profile.us[..m].iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = profile.us[..m].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Ok(lo);
    }
    if p == 2.0 {
        // weighted mean minimizes the quadratic objective
        let nf = profile.dim as f64 - 1.0;
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..m {
            let w = if k == 0 || k == m - 1 { 0.5 } else { 1.0 };
            let s = profile.rs[k].powf(nf);
            num += w * profile.us[k] * s;
            den += w * s;
        }
        return Ok(num / den);
    }
    let mid = 0.5 * (lo + hi);
    let obj = |s: f64| profile.weighted_mean_p(m, mid + s, p);
    let half = 0.5 * (hi - lo);
    Ok(mid + golden_min(obj, -half, half, 1e-12 * (hi - lo)))
}

/// Dyadic profile of a radial field around the origin.
pub fn dyadic_profile_radial(
    profile: &RadialProfile,
    rho: f64,
    levels: usize,
    p: f64,
) -> Result<DecayProfile> {
    if !(rho > 0.0 && rho <= 0.5) {
        return Err(Error::Precondition(format!("dyadic ratio {rho} must lie in (0, 1/2]")));
    }
    if levels < 4 {
        return Err(Error::Precondition(format!("need at least 4 dyadic levels, got {levels}")));
    }
    let r0 = *profile.rs.last().unwrap();
    let floor = 4.0 * profile.spacing() * (1.0 - GEOM_SLACK);
    let center = ProbePoint {
        i: 0,
        j: 0,
        position: [0.0, 0.0],
        grad_norm: 0.0,
        is_singular: true,
    };
    let mut entries = Vec::new();
    let mut truncated = false;
    for k in 0..=levels {
        let r = r0 * rho.powi(k as i32);
        if r < floor {
            truncated = true;
            break;
        }
        let tau = best_tau_radial(profile, r, p)?;
        let e_pmean = oscillation_radial(profile, r, OscMode::PMean { tau, p })?;
        let e_sup = oscillation_radial(profile, r, OscMode::Sup)?;
        entries.push(ProfileEntry { k, r, tau, e_sup, e_pmean });
    }
    Ok(DecayProfile {
        center,
        center_value: profile.us[0],
        rho,
        p,
        entries,
        truncated,
    })
}
