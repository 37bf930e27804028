//! Closed-form solutions used to calibrate the solver and make exponent
//! claims exactly checkable.
//!
//! The radial family solves `-div(|Du|^{p-2} Du) = 1` on `B_R`: integrating
//! `(r^{n-1} |u'|^{p-2} u')' = -r^{n-1}` gives `u'(r) = -(r/n)^{1/(p-1)}`,
//! hence
//!
//! `u(r) = ((p-1)/p) n^{-1/(p-1)} (R^{p/(p-1)} - r^{p/(p-1)})`.
//!
//! The gradient vanishes at the origin, so the origin is a critical point
//! with decay exponent exactly `1 + 1/(p-1)` — the sharpness case for the
//! source-limited exponent as `q -> ∞`.

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField};
use crate::probe::RadialProfile;
use crate::problem::ModelField;
use crate::quad;

/// Exact decay law `sup_{B_r} |u - u(center)| = prefactor * r^exponent`.
#[derive(Debug, Clone, Copy)]
pub struct KnownDecay {
    pub center: [f64; 2],
    pub prefactor: f64,
    pub exponent: f64,
}

/// A closed-form 2D solution with its problem data.
pub trait Oracle2d {
    fn value(&self, x: [f64; 2]) -> f64;
    fn gradient(&self, x: [f64; 2]) -> [f64; 2];
    fn known_decay(&self) -> Option<KnownDecay>;

    fn sample(&self, grid: Grid2D) -> ScalarField {
        ScalarField::from_fn(grid, |p| self.value(p))
    }
}

/// Radial solution of `-Δ_p u = 1` on `B_R` with `u = 0` on the sphere.
#[derive(Debug, Clone, Copy)]
pub struct RadialPPoisson {
    pub p: f64,
    pub n: u32,
    pub radius: f64,
}

impl RadialPPoisson {
    pub fn new(p: f64, n: u32, radius: f64) -> Result<Self> {
        if !(p > 1.0) || n < 2 || !(radius > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "radial oracle needs p > 1, n >= 2, R > 0; got p = {p}, n = {n}, R = {radius}"
            )));
        }
        Ok(Self { p, n, radius })
    }

    /// `p/(p-1)`, the decay exponent `1 + α` at the origin.
    pub fn decay_exponent(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// `((p-1)/p) n^{-1/(p-1)}`
    pub fn prefactor(&self) -> f64 {
        (self.p - 1.0) / self.p * (self.n as f64).powf(-1.0 / (self.p - 1.0))
    }

    pub fn value_radial(&self, r: f64) -> f64 {
        let pp = self.decay_exponent();
        self.prefactor() * (self.radius.powf(pp) - r.powf(pp))
    }

    /// `u'(r) = -(r/n)^{1/(p-1)}`
    pub fn deriv_radial(&self, r: f64) -> f64 {
        -(r / self.n as f64).powf(1.0 / (self.p - 1.0))
    }

    /// Radial sampling on a uniform mesh of `m` nodes over `[0, rmax]`.
    pub fn sample_radial(&self, m: usize, rmax: f64) -> RadialProfile {
        let rs: Vec<f64> = (0..m).map(|k| rmax * k as f64 / (m - 1) as f64).collect();
        let us = rs.iter().map(|&r| self.value_radial(r)).collect();
        RadialProfile { dim: self.n, rs, us }
    }

    /// The constant source of the problem.
    pub fn mu(&self) -> f64 {
        1.0
    }
}

impl Oracle2d for RadialPPoisson {
    fn value(&self, x: [f64; 2]) -> f64 {
        self.value_radial(x[0].hypot(x[1]))
    }

    fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let r = x[0].hypot(x[1]);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let d = self.deriv_radial(r);
        [d * x[0] / r, d * x[1] / r]
    }

    fn known_decay(&self) -> Option<KnownDecay> {
        Some(KnownDecay {
            center: [0.0, 0.0],
            prefactor: self.prefactor(),
            exponent: self.decay_exponent(),
        })
    }
}

/// Harmonic polynomials with a critical point at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarmonicKind {
    /// `x^2 - y^2`: gradient vanishes at the origin, decay exponent 2.
    Saddle,
    /// `x^3 - 3xy^2 = r^3 cos(3θ)`: gradient and Hessian vanish, exponent 3.
    Degree3,
}

#[derive(Debug, Clone, Copy)]
pub struct HarmonicPolynomial {
    pub kind: HarmonicKind,
}

impl HarmonicPolynomial {
    pub fn saddle() -> Self {
        Self { kind: HarmonicKind::Saddle }
    }

    pub fn degree3() -> Self {
        Self { kind: HarmonicKind::Degree3 }
    }
}

impl Oracle2d for HarmonicPolynomial {
    fn value(&self, x: [f64; 2]) -> f64 {
        match self.kind {
            HarmonicKind::Saddle => x[0] * x[0] - x[1] * x[1],
            HarmonicKind::Degree3 => x[0] * x[0] * x[0] - 3.0 * x[0] * x[1] * x[1],
        }
    }

    fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        match self.kind {
            HarmonicKind::Saddle => [2.0 * x[0], -2.0 * x[1]],
            HarmonicKind::Degree3 => {
                [3.0 * (x[0] * x[0] - x[1] * x[1]), -6.0 * x[0] * x[1]]
            }
        }
    }

    fn known_decay(&self) -> Option<KnownDecay> {
        let exponent = match self.kind {
            HarmonicKind::Saddle => 2.0,
            HarmonicKind::Degree3 => 3.0,
        };
        Some(KnownDecay { center: [0.0, 0.0], prefactor: 1.0, exponent })
    }
}

/// 1D contrast construction: `a(x) = 1 + |x - x1|^eps` limits the gradient
/// regularity to `C^{0,eps}` at the bump `x1`, while the flux
/// `F(x) = x - x0` vanishes at `x0`, forcing near-Lipschitz gradient decay
/// there. `u' = F/a` is exact; `u` follows by quadrature.
#[derive(Debug, Clone, Copy)]
pub struct Contrast1d {
    pub eps_coeff: f64,
    pub x_bump: f64,
    pub x_zero: f64,
}

impl Contrast1d {
    pub fn new(eps_coeff: f64, x_bump: f64, x_zero: f64) -> Result<Self> {
        if !(eps_coeff > 0.0 && eps_coeff < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "coefficient exponent {eps_coeff} must lie in (0, 1)"
            )));
        }
        if x_bump == x_zero || x_bump.abs() >= 1.0 || x_zero.abs() >= 1.0 {
            return Err(Error::InvalidSpec(
                "bump and zero must be distinct interior points of (-1, 1)".into(),
            ));
        }
        Ok(Self { eps_coeff, x_bump, x_zero })
    }

    pub fn coeff(&self, x: f64) -> f64 {
        1.0 + (x - self.x_bump).abs().powf(self.eps_coeff)
    }

    pub fn flux(&self, x: f64) -> f64 {
        x - self.x_zero
    }

    pub fn u_prime(&self, x: f64) -> f64 {
        self.flux(x) / self.coeff(x)
    }

    pub fn value(&self, x: f64) -> f64 {
        quad::integrate(|s| self.u_prime(s), self.x_zero, x)
    }

    /// Log-log fit of `|u'(x) - u'(x1)|` against `|x - x1|` on a window of
    /// offsets small enough that the coefficient kink dominates.
    pub fn measured_gradient_holder_exponent(&self) -> f64 {
        let d0 = self.u_prime(self.x_bump);
        let mut pts = Vec::new();
        for side in [-1.0, 1.0] {
            for k in 0..25 {
                // offsets 1e-12 .. 1e-6, geometric
                let d = 1e-12 * 10f64.powf(6.0 * k as f64 / 24.0) * side;
                let x = self.x_bump + d;
                let diff = (self.u_prime(x) - d0).abs();
                if diff > 0.0 {
                    pts.push(((x - self.x_bump).abs().ln(), diff.ln()));
                }
            }
        }
        slope(&pts)
    }

    /// Log-log fit of `|u(x) - u(x0)|` against `|x - x0|`; the fitted decay
    /// exponent is the slope, `α̂ = slope - 1`.
    pub fn measured_decay_exponent_at_zero(&self) -> f64 {
        let mut pts = Vec::new();
        for side in [-1.0, 1.0] {
            for k in 0..25 {
                // offsets 1e-4 .. 0.2, geometric
                let d = 1e-4 * (0.2f64 / 1e-4).powf(k as f64 / 24.0) * side;
                let x = self.x_zero + d;
                if x.abs() >= 1.0 {
                    continue;
                }
                let diff = self.value(x).abs();
                if diff > 0.0 {
                    pts.push((d.abs().ln(), diff.ln()));
                }
            }
        }
        slope(&pts)
    }
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|v| v.0).sum::<f64>() / n;
    let my = pts.iter().map(|v| v.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|v| (v.0 - mx) * (v.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|v| (v.0 - mx) * (v.1 - my)).sum();
    sxy / sxx
}

/// Manufactured source for a model/solution pair:
/// `μ = -div(ς(X) |Du*|^{p-2} Du*)`, formed by second-order central
/// differences (step `h/2`) of the analytic flux.
#[derive(Debug, Clone)]
pub struct Manufactured {
    pub mu: ScalarField,
    /// Nodes where `p < 2` met a degenerate gradient and the flux was
    /// regularized with ε = 1e-8.
    pub flagged: Vec<(usize, usize)>,
}

pub fn manufactured(model: &ModelField, exact: &dyn Oracle2d, grid: Grid2D) -> Result<Manufactured> {
    let p = model.p;
    let flux = |x: [f64; 2], eps: f64| -> [f64; 2] {
        let g = exact.gradient(x);
        let norm = g[0].hypot(g[1]);
        let scale = if eps > 0.0 {
            model.coeff_at(x) * (norm * norm + eps * eps).powf(0.5 * p - 1.0)
        } else if norm == 0.0 {
            0.0
        } else {
            model.coeff_at(x) * norm.powf(p - 2.0)
        };
        [scale * g[0], scale * g[1]]
    };

    let mut values = Vec::with_capacity(grid.len());
    let mut flagged = Vec::new();
    let (dx, dy) = (0.5 * grid.hx, 0.5 * grid.hy);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let x = grid.pos(i, j);
            let stencil = [
                [x[0] + dx, x[1]],
                [x[0] - dx, x[1]],
                [x[0], x[1] + dy],
                [x[0], x[1] - dy],
            ];
            let mut eps = 0.0;
            if p < 2.0 {
                let degenerate = stencil.iter().any(|&s| {
                    let g = exact.gradient(s);
                    g[0].hypot(g[1]) <= 1e-8
                });
                if degenerate {
                    eps = 1e-8;
                    flagged.push((i, j));
                }
            }
            let fe = flux(stencil[0], eps)[0];
            let fw = flux(stencil[1], eps)[0];
            let fn_ = flux(stencil[2], eps)[1];
            let fs = flux(stencil[3], eps)[1];
            values.push(-((fe - fw) / grid.hx + (fn_ - fs) / grid.hy));
        }
    }
    Ok(Manufactured { mu: ScalarField::new(grid, values)?, flagged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::{dyadic_profile_radial, fit_exponent, FitMode};

    #[test]
    fn radial_p2_closed_form() {
        // p = 2, n = 2: u = (R^2 - r^2)/4, exponent 2, prefactor 1/4
        let o = RadialPPoisson::new(2.0, 2, 1.0).unwrap();
        assert!((o.prefactor() - 0.25).abs() < 1e-15);
        assert!((o.decay_exponent() - 2.0).abs() < 1e-15);
        for &r in &[0.0, 0.3, 0.9] {
            assert!((o.value_radial(r) - (1.0 - r * r) / 4.0).abs() < 1e-15);
            assert!((o.deriv_radial(r) + r / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn radial_p3_exponent_and_origin() {
        let o = RadialPPoisson::new(3.0, 2, 1.0).unwrap();
        assert!((o.decay_exponent() - 1.5).abs() < 1e-15);
        for &(p, n) in &[(1.8, 2u32), (2.0, 3), (3.0, 3)] {
            let o = RadialPPoisson::new(p, n, 1.0).unwrap();
            let g = o.gradient([0.0, 0.0]);
            assert_eq!(g, [0.0, 0.0], "Du(0) must vanish for p = {p}, n = {n}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let oracles: Vec<Box<dyn Oracle2d>> = vec![
            Box::new(RadialPPoisson::new(1.8, 2, 1.0).unwrap()),
            Box::new(RadialPPoisson::new(3.0, 2, 1.0).unwrap()),
            Box::new(HarmonicPolynomial::saddle()),
            Box::new(HarmonicPolynomial::degree3()),
        ];
        let h = 1e-5;
        for o in &oracles {
            for _ in 0..20 {
                let x = [rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9)];
                let g = o.gradient(x);
                let fx = (o.value([x[0] + h, x[1]]) - o.value([x[0] - h, x[1]])) / (2.0 * h);
                let fy = (o.value([x[0], x[1] + h]) - o.value([x[0], x[1] - h])) / (2.0 * h);
                assert!((g[0] - fx).abs() < 1e-7, "{:?}", x);
                assert!((g[1] - fy).abs() < 1e-7, "{:?}", x);
            }
        }
    }

    #[test]
    fn known_decay_is_exact_on_analytic_sampling() {
        // sup over the sphere of radius r, sampled densely including θ = 0
        // where the polynomial maxima sit.
        let oracles: Vec<(Box<dyn Oracle2d>, f64)> = vec![
            (Box::new(RadialPPoisson::new(3.0, 2, 1.0).unwrap()), 0.5),
            (Box::new(HarmonicPolynomial::saddle()), 0.5),
            (Box::new(HarmonicPolynomial::degree3()), 0.5),
        ];
        for (o, r) in &oracles {
            let decay = o.known_decay().unwrap();
            let u0 = o.value(decay.center);
            let mut sup = 0.0f64;
            for k in 0..=3600 {
                let th = std::f64::consts::TAU * k as f64 / 3600.0;
                let x = [decay.center[0] + r * th.cos(), decay.center[1] + r * th.sin()];
                sup = sup.max((o.value(x) - u0).abs());
            }
            let expected = decay.prefactor * r.powf(decay.exponent);
            assert!(
                (sup - expected).abs() <= 1e-10 * expected.max(1.0),
                "sup {sup} vs {expected}"
            );
        }
    }

    #[test]
    fn radial_pde_identity_discrete_divergence() {
        // plug the analytic gradient into the radial discrete divergence:
        // (r^{n-1} |u'|^{p-2} u')' = -r^{n-1}, so the discrete flux ratio
        // recovers 1 with O(h^2) away from the origin.
        for &(p, n) in &[(1.8, 2u32), (2.0, 2), (3.0, 2), (1.8, 3), (2.0, 3), (3.0, 3)] {
            let o = RadialPPoisson::new(p, n, 1.0).unwrap();
            let h = 1e-3;
            for &r in &[0.2, 0.5, 0.8] {
                let flux = |s: f64| -> f64 {
                    let d = o.deriv_radial(s);
                    s.powi(n as i32 - 1) * d.abs().powf(p - 2.0) * d
                };
                let div = (flux(r + h) - flux(r - h)) / (2.0 * h);
                let mu = -div / r.powi(n as i32 - 1);
                assert!(
                    (mu - 1.0).abs() < 1e-4,
                    "p = {p}, n = {n}, r = {r}: mu = {mu}"
                );
            }
        }
    }

    #[test]
    fn radial_profile_fit_recovers_exponent_in_3d() {
        let o = RadialPPoisson::new(3.0, 3, 1.0).unwrap();
        let prof = o.sample_radial(8193, 1.0);
        let dp = dyadic_profile_radial(&prof, 0.5, 7, o.p).unwrap();
        let rep = fit_exponent(&dp, FitMode::Sup, 0.5, 0.05).unwrap();
        assert!((rep.alpha_hat - 0.5).abs() < 0.02, "alpha_hat = {}", rep.alpha_hat);
    }

    #[test]
    fn harmonic_polynomials_are_discrete_harmonic() {
        // five-point stencil: exact on the saddle, O(h^2) on the cubic
        let grid = Grid2D::covering(33, 33, -1.0, 1.0, -1.0, 1.0).unwrap();
        let h = grid.hx;
        for (oracle, tol) in [
            (HarmonicPolynomial::saddle(), 1e-12),
            (HarmonicPolynomial::degree3(), 1e-11),
        ] {
            let u = oracle.sample(grid);
            for j in 1..grid.ny - 1 {
                for i in 1..grid.nx - 1 {
                    let lap = (u.at(i + 1, j) + u.at(i - 1, j) + u.at(i, j + 1) + u.at(i, j - 1)
                        - 4.0 * u.at(i, j))
                        / (h * h);
                    assert!(lap.abs() < tol, "{:?} at ({i},{j}): {lap}", oracle.kind);
                }
            }
        }
    }

    #[test]
    fn manufactured_flags_degenerate_nodes_for_singular_p() {
        // p < 2 and a half-step stencil point landing exactly on the
        // critical point: the node is regularized and flagged.
        let grid = Grid2D::new(4, 3, 1.0, 1.0, -1.5, -1.0).unwrap();
        let o = RadialPPoisson::new(1.8, 2, 2.0).unwrap();
        let m = manufactured(&ModelField::constant(1.8), &o, grid).unwrap();
        assert!(
            m.flagged.contains(&(1, 1)) && m.flagged.contains(&(2, 1)),
            "flagged: {:?}",
            m.flagged
        );
        for &(i, j) in &m.flagged {
            assert!(m.mu.at(i, j).is_finite());
        }
    }

    #[test]
    fn manufactured_radial_source_is_one() {
        let grid = Grid2D::covering(65, 65, -1.0, 1.0, -1.0, 1.0).unwrap();
        let o = RadialPPoisson::new(2.0, 2, 1.0).unwrap();
        let m = manufactured(&ModelField::constant(2.0), &o, grid).unwrap();
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let x = grid.pos(i, j);
                let r = x[0].hypot(x[1]);
                if r > 0.1 {
                    let v = m.mu.at(i, j);
                    assert!((v - 1.0).abs() < 1e-3, "mu = {v} at r = {r}");
                }
            }
        }
    }

    #[test]
    fn manufactured_saddle_is_harmonic() {
        let grid = Grid2D::covering(33, 33, -1.0, 1.0, -1.0, 1.0).unwrap();
        let m = manufactured(&ModelField::constant(2.0), &HarmonicPolynomial::saddle(), grid).unwrap();
        for v in &m.mu.values {
            assert!(v.abs() < 1e-11, "mu = {v}");
        }
    }

    #[test]
    fn manufactured_variable_coefficient_cross_check() {
        // ς = 1 + x, p = 2, u = x^2 - y^2:
        // μ = -div((1+x) Du) = -(∂x((1+x) 2x) - ∂y((1+x) 2y))
        //   = -(2 + 4x - 2 - 2x) = -2x
        let grid = Grid2D::covering(33, 33, -0.4, 0.4, -0.4, 0.4).unwrap();
        let model = ModelField::new(2.0, |x| 1.0 + x[0]);
        let m = manufactured(&model, &HarmonicPolynomial::saddle(), grid).unwrap();
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let x = grid.pos(i, j);
                assert!(
                    (m.mu.at(i, j) + 2.0 * x[0]).abs() < 1e-10,
                    "at {:?}: {} vs {}",
                    x,
                    m.mu.at(i, j),
                    -2.0 * x[0]
                );
            }
        }
    }

    #[test]
    fn contrast_oracle_reproduces_both_exponents() {
        let c = Contrast1d::new(0.1, 0.5, -0.5).unwrap();
        // ellipticity by construction
        for k in 0..=100 {
            let x = -1.0 + 2.0 * k as f64 / 100.0;
            assert!(c.coeff(x) >= 1.0);
        }
        let holder = c.measured_gradient_holder_exponent();
        assert!(
            (holder - 0.1).abs() <= 0.03,
            "coefficient-limited exponent {holder}"
        );
        let decay = c.measured_decay_exponent_at_zero();
        assert!(decay - 1.0 >= 0.9, "decay slope {decay}");
    }
}
