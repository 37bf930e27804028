//! Exact 1D solver for `(a(x) u')' = f` on `[-1, 1]`.
//!
//! The equation integrates in closed form: `a u' = F` with `F' = f`, so
//! `u' = F / a` and two nested quadratures recover `u`. The free constant
//! in `F` is fixed by the Dirichlet values.

use crate::error::{Error, Result};
use crate::quad;

/// Solution profile on a fine uniform mesh.
#[derive(Debug, Clone)]
pub struct Profile1d {
    pub xs: Vec<f64>,
    pub us: Vec<f64>,
    /// `u'` at the mesh nodes, exact up to quadrature tolerance.
    pub du: Vec<f64>,
}

const REL: f64 = 1e-12;
const ABS: f64 = 1e-14;

/// Solve `(a u')' = f` on `[-1, 1]` with `u(-1) = bc.0`, `u(1) = bc.1`,
/// sampled on a uniform mesh with `nodes` points.
pub fn solve_1d(
    a: impl Fn(f64) -> f64,
    f: impl Fn(f64) -> f64,
    bc: (f64, f64),
    nodes: usize,
) -> Result<Profile1d> {
    if nodes < 3 {
        return Err(Error::Precondition("need at least 3 mesh nodes".into()));
    }
    let n = nodes;
    let h = 2.0 / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| -1.0 + i as f64 * h).collect();

    // Ellipticity: a must stay positive (sampled at nodes and midpoints).
    for i in 0..n {
        let check = |x: f64| -> Result<()> {
            let v = a(x);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::EllipticityViolation { x, value: v });
            }
            Ok(())
        };
        check(xs[i])?;
        if i + 1 < n {
            check(xs[i] + 0.5 * h)?;
        }
    }

    // Cumulative antiderivative of f on the mesh.
    let mut f_cum = vec![0.0; n];
    for i in 1..n {
        f_cum[i] = f_cum[i - 1] + quad::adaptive(&mut |x| f(x), xs[i - 1], xs[i], REL, ABS);
    }

    // I1 = ∫ 1/a, I2 = ∫ F_raw/a, cumulative; the inner antiderivative is
    // re-integrated adaptively from the nearest mesh node.
    let mut i1 = vec![0.0; n];
    let mut i2 = vec![0.0; n];
    for i in 1..n {
        let x_lo = xs[i - 1];
        let f_lo = f_cum[i - 1];
        i1[i] = i1[i - 1] + quad::adaptive(&mut |x| 1.0 / a(x), x_lo, xs[i], REL, ABS);
        let mut integrand = |x: f64| {
            let f_raw = f_lo + quad::adaptive(&mut |t| f(t), x_lo, x, REL, ABS);
            f_raw / a(x)
        };
        i2[i] = i2[i - 1] + quad::adaptive(&mut integrand, x_lo, xs[i], REL, ABS);
    }

    let denom = i1[n - 1];
    let f0 = (bc.1 - bc.0 - i2[n - 1]) / denom;

    let us: Vec<f64> = (0..n).map(|i| bc.0 + f0 * i1[i] + i2[i]).collect();
    let du: Vec<f64> = (0..n).map(|i| (f0 + f_cum[i]) / a(xs[i])).collect();
    Ok(Profile1d { xs, us, du })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplace_is_linear_interpolant() {
        let p = solve_1d(|_| 1.0, |_| 0.0, (0.0, 1.0), 101).unwrap();
        for (x, u) in p.xs.iter().zip(&p.us) {
            assert!((u - (x + 1.0) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_source_quadratic() {
        // u'' = 1 with u(-1) = 0, u(1) = 0: u = (x^2 - 1)/2
        let p = solve_1d(|_| 1.0, |_| 1.0, (0.0, 0.0), 201).unwrap();
        for (x, u) in p.xs.iter().zip(&p.us) {
            let exact = (x * x - 1.0) / 2.0;
            assert!((u - exact).abs() < 1e-9, "at {x}: {u} vs {exact}");
        }
    }

    #[test]
    fn holder_coefficient_linear_gradient_decay_at_zero() {
        // a = 1 + |x|^{1/10} is only C^{0,1/10}, yet with F(0) = 0 the
        // gradient decays linearly at the origin: u' = F/a, F(x) = x.
        let p = solve_1d(|x: f64| 1.0 + x.abs().powf(0.1), |_| 1.0, (0.0, 0.0), 2001).unwrap();
        let mid = p.xs.len() / 2;
        assert!(p.du[mid].abs() < 1e-9, "u'(0) = {}", p.du[mid]);
        for (x, d) in p.xs.iter().zip(&p.du) {
            assert!(d.abs() <= x.abs() + 1e-9, "at {x}: u' = {d}");
        }
    }

    #[test]
    fn nonpositive_coefficient_rejected() {
        let r = solve_1d(|x: f64| x, |_| 0.0, (0.0, 1.0), 51);
        assert!(matches!(r, Err(Error::EllipticityViolation { .. })));
    }
}
