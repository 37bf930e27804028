//! Structural data of the equation and solver settings.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid2D;

/// Structural constants of the vector field and the source integrability
/// exponent. `n` is the ambient dimension (2 for the grid solver, any
/// `n >= 2` for analytic radial work), `p` the growth exponent, and
/// `lambda <= Lambda` the ellipticity/growth constants. `lambda_tilde`
/// scales the coefficient oscillation bound and `q > n` is the Lebesgue
/// exponent of the source.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub n: u32,
    pub p: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub lambda_tilde: f64,
    /// Source integrability exponent; `f64::INFINITY` means a bounded source.
    pub q: f64,
}

impl ProblemSpec {
    pub fn new(n: u32, p: f64, lambda: f64, big_lambda: f64, lambda_tilde: f64, q: f64) -> Result<Self> {
        let spec = Self { n, p, lambda, big_lambda, lambda_tilde, q };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidSpec(format!("dimension n = {} must be >= 2", self.n)));
        }
        let p_floor = 2.0 - 1.0 / self.n as f64;
        if !(self.p > p_floor) {
            return Err(Error::InvalidSpec(format!(
                "exponent p = {} must exceed 2 - 1/n = {p_floor}",
                self.p
            )));
        }
        if !(self.lambda > 0.0 && self.big_lambda >= self.lambda) {
            return Err(Error::InvalidSpec(format!(
                "need 0 < lambda <= Lambda, got lambda = {}, Lambda = {}",
                self.lambda, self.big_lambda
            )));
        }
        if !(self.lambda_tilde >= 1.0) {
            return Err(Error::InvalidSpec(format!(
                "lambda_tilde = {} must be >= 1",
                self.lambda_tilde
            )));
        }
        if !(self.q > self.n as f64) {
            return Err(Error::InvalidSpec(format!(
                "source integrability exponent q = {} must exceed the dimension n = {}; \
                 gradient control needs a source in L^q with q > n",
                self.q, self.n
            )));
        }
        Ok(())
    }

    /// True iff `2 - 1/n < p < n`, the exponent window of the structural
    /// assumptions. Problems outside it are accepted but reports carry a
    /// warning; the exponent formula is still evaluated.
    pub fn within_structural_range(&self) -> bool {
        let n = self.n as f64;
        self.p > 2.0 - 1.0 / n && self.p < n
    }

    /// The source-limited exponent `(q - n)/((p - 1) q)`, with the bounded
    /// source limit `1/(p-1)` when `q` is infinite.
    pub fn source_exponent(&self) -> f64 {
        if self.q.is_infinite() {
            1.0 / (self.p - 1.0)
        } else {
            (self.q - self.n as f64) / ((self.p - 1.0) * self.q)
        }
    }
}

type CoeffFn = dyn Fn([f64; 2]) -> f64 + Send + Sync;

/// The model vector field `a(X, xi) = ς(X) |xi|^{p-2} xi`: a spatially
/// varying coefficient together with the growth exponent.
#[derive(Clone)]
pub struct ModelField {
    coeff: Arc<CoeffFn>,
    pub p: f64,
}

impl fmt::Debug for ModelField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelField").field("p", &self.p).finish()
    }
}

impl ModelField {
    pub fn new(p: f64, coeff: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        Self { coeff: Arc::new(coeff), p }
    }

    /// Constant-coefficient model `|xi|^{p-2} xi`.
    pub fn constant(p: f64) -> Self {
        Self::new(p, |_| 1.0)
    }

    #[inline]
    pub fn coeff_at(&self, x: [f64; 2]) -> f64 {
        (self.coeff)(x)
    }

    /// Evaluate the vector field itself.
    pub fn eval(&self, x: [f64; 2], xi: [f64; 2]) -> [f64; 2] {
        let norm = xi[0].hypot(xi[1]);
        if norm == 0.0 {
            return [0.0, 0.0];
        }
        let scale = self.coeff_at(x) * norm.powf(self.p - 2.0);
        [scale * xi[0], scale * xi[1]]
    }

    /// Check that the coefficient is bounded between positive constants on
    /// the grid (sampled at all nodes and edge midpoints).
    pub fn check_on_grid(&self, grid: &Grid2D) -> Result<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut probe = |x: [f64; 2]| -> Result<()> {
            let v = self.coeff_at(x);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("coefficient at {x:?}")));
            }
            lo = lo.min(v);
            hi = hi.max(v);
            Ok(())
        };
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let p = grid.pos(i, j);
                probe(p)?;
                if i + 1 < grid.nx {
                    probe([p[0] + 0.5 * grid.hx, p[1]])?;
                }
                if j + 1 < grid.ny {
                    probe([p[0], p[1] + 0.5 * grid.hy])?;
                }
            }
        }
        if lo <= 0.0 {
            return Err(Error::EllipticityViolation { x: f64::NAN, value: lo });
        }
        Ok((lo, hi))
    }
}

/// Regularization continuation and Newton settings for the grid solver.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Initial gradient regularization.
    pub eps0: f64,
    /// Final regularization level.
    pub eps_min: f64,
    /// Geometric reduction factor for the continuation, in (0, 1).
    pub continuation_factor: f64,
    /// Relative residual target, measured against the residual of the
    /// initial iterate at the final regularization level.
    pub newton_tol: f64,
    /// Iteration cap per continuation level.
    pub max_newton: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo_c: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            eps0: 1e-2,
            eps_min: 1e-8,
            continuation_factor: 0.25,
            newton_tol: 1e-8,
            max_newton: 60,
            armijo_c: 1e-4,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_min > 0.0 && self.eps_min <= self.eps0) {
            return Err(Error::InvalidSpec(format!(
                "need 0 < eps_min <= eps0, got eps_min = {}, eps0 = {}",
                self.eps_min, self.eps0
            )));
        }
        if !(self.continuation_factor > 0.0 && self.continuation_factor < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "continuation factor {} must lie in (0, 1)",
                self.continuation_factor
            )));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::InvalidSpec("newton_tol must be positive".into()));
        }
        if self.max_newton == 0 {
            return Err(Error::InvalidSpec("max_newton must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(ProblemSpec::new(2, 1.8, 1.0, 2.0, 1.0, 4.0).is_ok());
        // q <= n rejected
        assert!(ProblemSpec::new(2, 1.8, 1.0, 2.0, 1.0, 2.0).is_err());
        // p at or below 2 - 1/n rejected
        assert!(ProblemSpec::new(2, 1.5, 1.0, 2.0, 1.0, 4.0).is_err());
        // lambda_tilde below 1 rejected
        assert!(ProblemSpec::new(2, 2.0, 1.0, 2.0, 0.5, 4.0).is_err());
        // infinite q allowed
        assert!(ProblemSpec::new(2, 2.0, 1.0, 2.0, 1.0, f64::INFINITY).is_ok());
    }

    #[test]
    fn structural_range_flag() {
        let inside = ProblemSpec::new(2, 1.8, 1.0, 2.0, 1.0, 4.0).unwrap();
        assert!(inside.within_structural_range());
        // p = 3 >= n = 2: accepted, flagged
        let outside = ProblemSpec::new(2, 3.0, 1.0, 2.0, 1.0, 4.0).unwrap();
        assert!(!outside.within_structural_range());
    }

    #[test]
    fn source_exponent_limits() {
        let s = ProblemSpec::new(2, 3.0, 1.0, 2.0, 1.0, 4.0).unwrap();
        assert!((s.source_exponent() - 0.25).abs() < 1e-15);
        let s = ProblemSpec::new(2, 3.0, 1.0, 2.0, 1.0, f64::INFINITY).unwrap();
        assert!((s.source_exponent() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn model_coefficient_bounds() {
        let g = Grid2D::covering(5, 5, -1.0, 1.0, -1.0, 1.0).unwrap();
        let m = ModelField::new(2.0, |x| 1.0 + 0.5 * x[0].hypot(x[1]).powf(0.1));
        let (lo, hi) = m.check_on_grid(&g).unwrap();
        assert!(lo >= 1.0 && hi <= 2.0);
        let bad = ModelField::new(2.0, |x| x[0]);
        assert!(bad.check_on_grid(&g).is_err());
    }
}
