//! Central-difference derivatives with the crate-wide step policy
//! h_i = cbrt(machine epsilon) * max(1, |x_i|).

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// cbrt(f64::EPSILON) ~ 6.06e-6.
pub fn step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

pub fn gradient(f: &dyn Fn(&[f64]) -> Result<f64>, x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut buf = x.to_vec();
    for i in 0..n {
        let h = step(x[i]);
        buf[i] = x[i] + h;
        let fp = f(&buf)?;
        buf[i] = x[i] - h;
        let fm = f(&buf)?;
        buf[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
        if !g[i].is_finite() {
            return Err(Error::numerical(format!(
                "non-finite derivative in coordinate {i}"
            )));
        }
    }
    Ok(g)
}

pub fn hessian(f: &dyn Fn(&[f64]) -> Result<f64>, x: &[f64]) -> Result<DMatrix<f64>> {
    let n = x.len();
    let f0 = f(x)?;
    let mut h_mat = DMatrix::zeros(n, n);
    let mut buf = x.to_vec();
    for i in 0..n {
        let hi = step(x[i]);
        buf[i] = x[i] + hi;
        let fp = f(&buf)?;
        buf[i] = x[i] - hi;
        let fm = f(&buf)?;
        buf[i] = x[i];
        h_mat[(i, i)] = (fp - 2.0 * f0 + fm) / (hi * hi);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let hi = step(x[i]);
            let hj = step(x[j]);
            let mut eval = |si: f64, sj: f64| -> Result<f64> {
                buf[i] = x[i] + si * hi;
                buf[j] = x[j] + sj * hj;
                let v = f(&buf);
                buf[i] = x[i];
                buf[j] = x[j];
                v
            };
            let v = (eval(1.0, 1.0)? - eval(1.0, -1.0)? - eval(-1.0, 1.0)? + eval(-1.0, -1.0)?)
                / (4.0 * hi * hj);
            h_mat[(i, j)] = v;
            h_mat[(j, i)] = v;
        }
    }
    if h_mat.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite Hessian entry"));
    }
    Ok(h_mat)
}

/// Second derivative of t -> f(t) at t = 0 by a central stencil with the
/// given step.
pub fn second_directional(f: &dyn Fn(f64) -> Result<f64>, h: f64) -> Result<f64> {
    let fp = f(h)?;
    let f0 = f(0.0)?;
    let fm = f(-h)?;
    let d = (fp - 2.0 * f0 + fm) / (h * h);
    if !d.is_finite() {
        return Err(Error::numerical("non-finite second directional derivative"));
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_quadratic() {
        let f = |x: &[f64]| Ok(x[0] * x[0] + 3.0 * x[1]);
        let g = gradient(&f, &[2.0, 5.0]).unwrap();
        assert!((g[0] - 4.0).abs() < 1e-8);
        assert!((g[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn hessian_of_coupled_quadratic() {
        let f = |x: &[f64]| Ok(x[0] * x[0] + 4.0 * x[0] * x[1] + x[1] * x[1]);
        let h = hessian(&f, &[0.3, -0.7]).unwrap();
        assert!((h[(0, 0)] - 2.0).abs() < 1e-4);
        assert!((h[(0, 1)] - 4.0).abs() < 1e-4);
        assert!((h[(1, 1)] - 2.0).abs() < 1e-4);
    }
}
