//! Matrix-free preconditioned conjugate gradients with a diagonal
//! preconditioner. Vectors live on the full grid with boundary entries
//! pinned to zero by the operator.

#[derive(Debug, Clone, Copy)]
pub struct PcgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

pub fn pcg(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    tol_rel: f64,
    max_iter: usize,
) -> PcgOutcome {
    let n = b.len();
    let bnorm = norm(b);
    x.iter_mut().for_each(|v| *v = 0.0);
    if bnorm == 0.0 {
        return PcgOutcome { iterations: 0, relative_residual: 0.0, converged: true };
    }
    let inv_diag: Vec<f64> = diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 }).collect();

    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, m)| a * m).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);

    for it in 0..max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) || !pap.is_finite() {
            return PcgOutcome { iterations: it, relative_residual: norm(&r) / bnorm, converged: false };
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rel = norm(&r) / bnorm;
        if rel <= tol_rel {
            return PcgOutcome { iterations: it + 1, relative_residual: rel, converged: true };
        }
        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    PcgOutcome { iterations: max_iter, relative_residual: norm(&r) / bnorm, converged: false }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd_system() {
        // A = tridiag(-1, 4, -1), n = 50
        let n = 50;
        let apply = |v: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let mut s = 4.0 * v[i];
                if i > 0 {
                    s -= v[i - 1];
                }
                if i + 1 < n {
                    s -= v[i + 1];
                }
                out[i] = s;
            }
        };
        let diag = vec![4.0; n];
        let xstar: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        apply(&xstar, &mut b);
        let mut x = vec![0.0; n];
        let out = pcg(apply, &diag, &b, &mut x, 1e-12, 500);
        assert!(out.converged);
        for (xa, xb) in x.iter().zip(&xstar) {
            assert!((xa - xb).abs() < 1e-9);
        }
    }
}
