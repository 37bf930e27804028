//! Moduli of continuity and the Dini admissibility integrals.
//!
//! A modulus bounds the coefficient oscillation of the vector field,
//! `|a(X, xi) - a(Y, xi)| <= Λ̃ ω(|X - Y|) |xi|^{p-1}`. Admissibility for
//! pointwise C^1 estimates is the integrability of `ω(τ)^{2/p} / τ`
//! (degenerate regime, `p >= 2`) or `ω(τ)^{1-σ} / τ` (singular regime,
//! `2 - 1/n < p < 2`) near zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// A modulus of continuity: nondecreasing, positive for `t > 0`, with
/// `ω(0+) = 0`. Evaluation is defined on `(0, t_max()]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Modulus {
    /// `ω(t) = t^eps`, defined for every `t > 0`.
    Holder { eps: f64 },
    /// `ω(t) = log(1/t)^{-beta}` on `(0, t_max]` with `t_max < 1`.
    LogPower { beta: f64, t_max: f64 },
    /// `ω(t) = c * inner(t)`.
    Scaled { c: f64, inner: Box<Modulus> },
    /// `ω(t) = inner(factor * t)`; produced when a field is rescaled.
    Dilated { factor: f64, inner: Box<Modulus> },
    /// Piecewise-linear table `(t_i, w_i)`, extended linearly to 0 below
    /// the first knot.
    Custom { ts: Vec<f64>, ws: Vec<f64> },
}

impl Modulus {
    pub fn holder(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidSpec(format!("holder exponent {eps} must lie in (0, 1]")));
        }
        Ok(Modulus::Holder { eps })
    }

    pub fn log_power(beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidSpec(format!("log-power exponent {beta} must be positive")));
        }
        Ok(Modulus::LogPower { beta, t_max: 0.5 })
    }

    pub fn scaled(c: f64, inner: Modulus) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidSpec(format!("scale factor {c} must be positive")));
        }
        Ok(Modulus::Scaled { c, inner: Box::new(inner) })
    }

    pub fn custom(ts: Vec<f64>, ws: Vec<f64>) -> Result<Self> {
        if ts.len() != ws.len() || ts.len() < 2 {
            return Err(Error::InvalidSpec("custom modulus needs >= 2 knots".into()));
        }
        if !ts.windows(2).all(|w| w[1] > w[0]) || ts[0] <= 0.0 {
            return Err(Error::InvalidSpec("custom modulus knots must be positive increasing".into()));
        }
        if !ws.windows(2).all(|w| w[1] >= w[0]) || ws[0] <= 0.0 {
            return Err(Error::ModulusNotMonotone);
        }
        Ok(Modulus::Custom { ts, ws })
    }

    /// The modulus seen by the rescaled field `X -> x0 + zeta X`.
    pub fn dilated(&self, factor: f64) -> Self {
        Modulus::Dilated { factor, inner: Box::new(self.clone()) }
    }

    /// Upper end of the evaluation domain (`+inf` for pure powers).
    pub fn t_max(&self) -> f64 {
        match self {
            Modulus::Holder { .. } => f64::INFINITY,
            Modulus::LogPower { t_max, .. } => *t_max,
            Modulus::Scaled { inner, .. } => inner.t_max(),
            Modulus::Dilated { factor, inner } => inner.t_max() / factor,
            Modulus::Custom { ts, .. } => *ts.last().unwrap(),
        }
    }

    /// Evaluate `ω(t)`; `t` must lie in `(0, t_max()]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || t > self.t_max() * (1.0 + 1e-12) {
            return Err(Error::ModulusDomain { t, t_max: self.t_max() });
        }
        Ok(self.eval_unchecked(t))
    }

    fn eval_unchecked(&self, t: f64) -> f64 {
        match self {
            Modulus::Holder { eps } => t.powf(*eps),
            Modulus::LogPower { beta, .. } => (1.0 / t).ln().powf(-beta),
            Modulus::Scaled { c, inner } => c * inner.eval_unchecked(t),
            Modulus::Dilated { factor, inner } => inner.eval_unchecked(factor * t),
            Modulus::Custom { ts, ws } => {
                if t <= ts[0] {
                    // linear extension to ω(0+) = 0
                    return ws[0] * t / ts[0];
                }
                let idx = ts.partition_point(|&x| x < t).min(ts.len() - 1);
                let (t0, t1) = (ts[idx - 1], ts[idx]);
                let (w0, w1) = (ws[idx - 1], ws[idx]);
                w0 + (w1 - w0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Evaluate `ω(e^{-s})` stably in log coordinates; `s` may be large
    /// enough that `e^{-s}` underflows.
    fn eval_log(&self, s: f64) -> f64 {
        match self {
            Modulus::Holder { eps } => (-eps * s).exp(),
            Modulus::LogPower { beta, .. } => s.powf(-beta),
            Modulus::Scaled { c, inner } => c * inner.eval_log(s),
            Modulus::Dilated { factor, inner } => inner.eval_log(s - factor.ln()),
            Modulus::Custom { ts, .. } => {
                let t = (-s).exp();
                if t == 0.0 {
                    // below representable range the linear extension vanishes
                    0.0
                } else {
                    self.eval_unchecked(t.min(*ts.last().unwrap()))
                }
            }
        }
    }

    /// Sampled monotonicity check on a geometric mesh.
    fn strictly_increasing_on(&self, hi: f64) -> bool {
        let lo = hi * 1e-12;
        let n = 64;
        let ratio = (hi / lo).powf(1.0 / n as f64);
        let mut prev = self.eval_unchecked(lo);
        if !(prev > 0.0) {
            return false;
        }
        let mut t = lo;
        for _ in 0..n {
            t *= ratio;
            let w = self.eval_unchecked(t.min(hi));
            if w <= prev {
                return false;
            }
            prev = w;
        }
        true
    }
}

/// Result of inverting a modulus: the argument `t` with `ω(t) = s`, or the
/// domain cap with `saturated` set when `s` exceeds `ω(t_max)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModulusInverse {
    pub t: f64,
    pub saturated: bool,
}

/// Invert a strictly increasing modulus by bisection in log coordinates,
/// to `|ω(t) - s| <= 1e-12 s`.
pub fn inverse_modulus(omega: &Modulus, s: f64) -> Result<ModulusInverse> {
    if !(s > 0.0) {
        return Err(Error::Precondition(format!("inverse target s = {s} must be positive")));
    }
    // Upper bracket: the domain cap, or grow from 1 for unbounded domains.
    let mut hi = omega.t_max();
    if hi.is_infinite() {
        hi = 1.0;
        let mut guard = 0;
        while omega.eval_unchecked(hi) < s && guard < 4200 {
            hi *= 2.0;
            guard += 1;
        }
    }
    if !omega.strictly_increasing_on(hi.min(1e12)) {
        return Err(Error::ModulusNotMonotone);
    }
    if omega.eval_unchecked(hi) < s {
        return Ok(ModulusInverse { t: hi, saturated: true });
    }
    let (mut la, mut lb) = ((1e-300f64).ln(), hi.ln());
    for _ in 0..260 {
        let lm = 0.5 * (la + lb);
        let w = omega.eval_unchecked(lm.exp());
        if (w - s).abs() <= 1e-12 * s {
            return Ok(ModulusInverse { t: lm.exp(), saturated: false });
        }
        if w < s {
            la = lm;
        } else {
            lb = lm;
        }
    }
    Ok(ModulusInverse { t: (0.5 * (la + lb)).exp(), saturated: false })
}

/// Outcome of a Dini admissibility integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DiniResult {
    Convergent { value: f64 },
    Divergent,
}

impl DiniResult {
    pub fn value(&self) -> Option<f64> {
        match self {
            DiniResult::Convergent { value } => Some(*value),
            DiniResult::Divergent => None,
        }
    }
}

/// Compute `∫_0^R ω(τ)^e dτ/τ` with `e = 2/p` for `p >= 2` and
/// `e = 1 - σ` for `p < 2`.
///
/// The substitution `τ = e^{-s}` maps the integral to `∫_{log(1/R)}^∞` of
/// `ω(e^{-s})^e ds`, summed over unit segments with Gauss–Kronrod panels.
/// Divergence is decided from the partial integrals over `[e^{-k}, R]` for
/// `k = 10, 20, 40, 80`: the run is declared divergent when the last
/// doubling increment stays above 1e-8 and the increments do not shrink.
/// Convergent tails beyond the summation cap are extrapolated geometrically.
pub fn dini_integral(omega: &Modulus, p: f64, big_r: f64, sigma: f64) -> Result<DiniResult> {
    if !(big_r > 0.0) {
        return Err(Error::Precondition(format!("upper limit R = {big_r} must be positive")));
    }
    if big_r > omega.t_max() * (1.0 + 1e-12) {
        return Err(Error::ModulusDomain { t: big_r, t_max: omega.t_max() });
    }
    let exponent = if p >= 2.0 {
        2.0 / p
    } else {
        if !(sigma > 0.0) {
            return Err(Error::Precondition(format!(
                "singular regime p = {p} < 2 needs sigma > 0, got {sigma}"
            )));
        }
        1.0 - sigma
    };

    let s0 = (1.0 / big_r).ln();
    let mut g = |s: f64| omega.eval_log(s).powf(exponent);

    // Detection ladder; shifted when R is already tiny.
    let base = if s0 < 9.0 { 0.0 } else { s0.ceil() };
    let ladder = [base + 10.0, base + 20.0, base + 40.0, base + 80.0];

    let mut partials = [0.0f64; 4];
    let mut acc = 0.0;
    let mut lo = s0;
    for (slot, &k) in ladder.iter().enumerate() {
        while lo < k {
            let hi = (lo + 1.0).min(k);
            acc += quad::adaptive(&mut g, lo, hi, 1e-12, 1e-15);
            lo = hi;
        }
        partials[slot] = acc;
    }
    let d2 = partials[2] - partials[1];
    let d3 = partials[3] - partials[2];
    if d3 > 1e-8 && d3 >= d2 * (1.0 - 1e-6) {
        return Ok(DiniResult::Divergent);
    }

    // Convergent: keep summing unit segments, then extrapolate the tail.
    let cap = base + 1200.0;
    let mut prev_inc = d3.max(1e-300);
    let mut last_inc = prev_inc;
    let mut quiet = 0;
    while lo < cap {
        let hi = lo + 1.0;
        let inc = quad::adaptive(&mut g, lo, hi, 1e-12, 1e-15);
        acc += inc;
        lo = hi;
        prev_inc = last_inc;
        last_inc = inc;
        if inc <= 1e-16 * acc.abs().max(1e-300) {
            quiet += 1;
            if quiet >= 2 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    if last_inc > 0.0 && prev_inc > 0.0 {
        let ratio = last_inc / prev_inc;
        if ratio < 1.0 {
            acc += last_inc * ratio / (1.0 - ratio);
        }
    }
    Ok(DiniResult::Convergent { value: acc })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holder_eval_examples() {
        let m = Modulus::holder(0.5).unwrap();
        assert!((m.eval(0.25).unwrap() - 0.5).abs() < 1e-15);
        let lip = Modulus::holder(1.0).unwrap();
        for &t in &[0.1, 0.37, 0.99] {
            assert!((lip.eval(t).unwrap() - t).abs() < 1e-15);
        }
        let s = Modulus::scaled(2.0, Modulus::holder(0.1).unwrap()).unwrap();
        assert!((s.eval(1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(m.eval(0.0).is_err());
        assert!(m.eval(-1.0).is_err());
    }

    #[test]
    fn log_power_domain() {
        let m = Modulus::log_power(1.0).unwrap();
        assert!(m.eval(0.6).is_err()); // beyond t_max = 0.5
        let v = m.eval(0.5).unwrap();
        assert!((v - 1.0 / (2.0f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn inverse_examples() {
        let m = Modulus::holder(0.5).unwrap();
        let inv = inverse_modulus(&m, 0.5).unwrap();
        assert!(!inv.saturated);
        assert!((inv.t - 0.25).abs() < 1e-12);

        let lip = Modulus::holder(1.0).unwrap();
        assert!((inverse_modulus(&lip, 0.3).unwrap().t - 0.3).abs() < 1e-12);

        let s = Modulus::scaled(2.0, Modulus::holder(1.0).unwrap()).unwrap();
        assert!((inverse_modulus(&s, 1.0).unwrap().t - 0.5).abs() < 1e-12);
    }

    #[test]
    fn inverse_saturates_on_bounded_domains() {
        let m = Modulus::log_power(1.0).unwrap(); // ω(0.5) ≈ 1.44
        let inv = inverse_modulus(&m, 5.0).unwrap();
        assert!(inv.saturated);
        assert_eq!(inv.t, 0.5);
    }

    #[test]
    fn inverse_rejects_non_monotone() {
        let flat = Modulus::Custom { ts: vec![0.1, 0.2, 0.3], ws: vec![1.0, 1.0, 1.0] };
        assert!(matches!(inverse_modulus(&flat, 0.5), Err(Error::ModulusNotMonotone)));
    }

    #[test]
    fn inverse_of_eval_roundtrip() {
        let cases = [
            Modulus::holder(0.5).unwrap(),
            Modulus::holder(0.1).unwrap(),
            Modulus::scaled(3.0, Modulus::holder(0.7).unwrap()).unwrap(),
        ];
        for m in &cases {
            for &t in &[1e-6, 1e-3, 0.04, 0.5, 0.9] {
                let s = m.eval(t).unwrap();
                let back = inverse_modulus(m, s).unwrap();
                assert!(!back.saturated);
                assert!(
                    (back.t - t).abs() <= 1e-10 * t.max(1e-30),
                    "t = {t}, got {}",
                    back.t
                );
            }
        }
    }

    #[test]
    fn dini_holder_closed_form() {
        // ∫_0^R τ^{2ε/p - 1} dτ = (p / 2ε) R^{2ε/p}
        let m = Modulus::holder(0.5).unwrap();
        let v = dini_integral(&m, 2.0, 1.0, 0.0).unwrap().value().unwrap();
        assert!((v - 2.0).abs() < 1e-6 * 2.0, "got {v}");

        for &eps in &[0.1, 0.3, 0.75, 1.0] {
            for &p in &[2.0, 2.7, 4.0] {
                for &r in &[0.25, 0.5, 1.0] {
                    let m = Modulus::holder(eps).unwrap();
                    let v = dini_integral(&m, p, r, 0.0).unwrap().value().unwrap();
                    let exact = p / (2.0 * eps) * r.powf(2.0 * eps / p);
                    assert!(
                        ((v - exact) / exact).abs() < 1e-6,
                        "eps={eps} p={p} R={r}: {v} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn dini_singular_regime_closed_form() {
        // For p < 2 the exponent is 1 - σ: ∫_0^R τ^{ε(1-σ)-1} = R^{ε(1-σ)}/(ε(1-σ))
        for &eps in &[0.2, 0.5, 1.0] {
            for &sigma in &[0.1, 0.3] {
                let m = Modulus::holder(eps).unwrap();
                let v = dini_integral(&m, 1.8, 0.5, sigma).unwrap().value().unwrap();
                let a = eps * (1.0 - sigma);
                let exact = 0.5f64.powf(a) / a;
                assert!(((v - exact) / exact).abs() < 1e-6, "eps={eps} sigma={sigma}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn dini_borderline_log_modulus_diverges() {
        // ω(τ) = log(1/τ)^{-1}, p = 2: integrand 1/(τ log(1/τ)) diverges.
        let m = Modulus::log_power(1.0).unwrap();
        assert_eq!(dini_integral(&m, 2.0, 0.5, 0.0).unwrap(), DiniResult::Divergent);
    }

    #[test]
    fn dini_supercritical_log_modulus_converges() {
        // ω = log(1/τ)^{-3}, p = 2: integrand s^{-3}, convergent.
        let m = Modulus::log_power(3.0).unwrap();
        let v = dini_integral(&m, 2.0, 0.5, 0.0).unwrap().value();
        assert!(v.is_some());
        // exact: ∫_{ln 2}^∞ s^{-3} ds = 1/(2 ln(2)^2)
        let exact = 0.5 / (2.0f64.ln().powi(2));
        let v = v.unwrap();
        assert!(((v - exact) / exact).abs() < 1e-4, "got {v}, exact {exact}");
    }

    #[test]
    fn dini_needs_sigma_in_singular_regime() {
        let m = Modulus::holder(0.5).unwrap();
        assert!(dini_integral(&m, 1.8, 0.5, 0.0).is_err());
    }
}
