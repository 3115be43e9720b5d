//! Roots of low-degree real polynomials from the eigenvalues of a balanced
//! companion matrix, refined by Newton's method.
//!
//! Coefficients are stored in ascending order: `c[0] + c[1] x + c[2] x^2 + ...`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Two real roots closer than `MULTIPLICITY_TOL * scale` are reported as one
/// root of multiplicity two (or higher), where `scale = 1 + max |root|`.
pub const MULTIPLICITY_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealRoot {
    pub value: f64,
    pub multiplicity: usize,
}

pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub fn poly_eval_complex(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect()
}

fn trimmed(coeffs: &[f64]) -> Result<&[f64]> {
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("polynomial coefficients must be finite"));
    }
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Err(Error::ZeroPolynomial);
    }
    let mut n = coeffs.len();
    while n > 0 && coeffs[n - 1].abs() <= 1e-300 * scale.max(1.0) {
        n -= 1;
    }
    Ok(&coeffs[..n])
}

// Parlett–Reinsch balancing with powers of two.
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let radix = 2.0f64;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix * radix;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

fn polish_complex(coeffs: &[f64], deriv: &[f64], mut z: Complex64) -> Complex64 {
    let mut best = poly_eval_complex(coeffs, z).norm();
    for _ in 0..8 {
        let d = poly_eval_complex(deriv, z);
        if d.norm() == 0.0 {
            break;
        }
        let next = z - poly_eval_complex(coeffs, z) / d;
        let r = poly_eval_complex(coeffs, next).norm();
        if !(r < best) {
            break;
        }
        best = r;
        z = next;
    }
    z
}

/// All complex roots, each refined by Newton's method.
pub fn complex_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let c = trimmed(coeffs)?;
    let degree = c.len() - 1;
    match degree {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![Complex64::new(-c[0] / c[1], 0.0)]),
        _ => {}
    }
    let lead = c[degree];
    let mut m = DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..degree {
        m[(i, degree - 1)] = -c[i] / lead;
    }
    balance(&mut m);
    let eig = m.complex_eigenvalues();
    let deriv = derivative(c);
    Ok(eig.iter().map(|&z| polish_complex(c, &deriv, z)).collect())
}

/// Sorted real roots with multiplicity estimates.
///
/// Near-real conjugate pairs produced by the eigenvalue solver at a double
/// root are folded back onto the real axis before clustering.
pub fn real_roots(coeffs: &[f64]) -> Result<Vec<RealRoot>> {
    let c = trimmed(coeffs)?;
    let all = complex_roots(c)?;
    if all.is_empty() {
        return Ok(Vec::new());
    }
    let scale = 1.0 + all.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let thresh = MULTIPLICITY_TOL * scale;
    let mut real: Vec<f64> = all.iter().filter(|z| z.im.abs() <= thresh).map(|z| z.re).collect();
    real.sort_by(f64::total_cmp);

    let mut clusters: Vec<(f64, usize)> = Vec::new();
    for x in real {
        match clusters.last_mut() {
            Some((sum, count)) if (x - *sum / *count as f64).abs() < thresh => {
                *sum += x;
                *count += 1;
            }
            _ => clusters.push((x, 1)),
        }
    }

    let deriv = derivative(c);
    let deriv2 = derivative(&deriv);
    let mut out = Vec::with_capacity(clusters.len());
    for (sum, count) in clusters {
        let x0 = sum / count as f64;
        // a multiple root is a simple root of the derivative
        let (target, slope) = if count == 1 { (c, &deriv[..]) } else { (&deriv[..], &deriv2[..]) };
        let value = polish_real(c, target, slope, x0);
        out.push(RealRoot { value, multiplicity: count });
    }
    Ok(out)
}

fn polish_real(p: &[f64], target: &[f64], slope: &[f64], mut x: f64) -> f64 {
    let mut best = poly_eval(p, x).abs();
    for _ in 0..8 {
        let d = poly_eval(slope, x);
        if d == 0.0 {
            break;
        }
        let next = x - poly_eval(target, x) / d;
        let r = poly_eval(p, next).abs();
        if !(r <= best) || next == x {
            break;
        }
        best = r;
        x = next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cubic_three_roots() {
        let r = real_roots(&[0.0, -1.0, 0.0, 1.0]).unwrap();
        let v: Vec<f64> = r.iter().map(|r| r.value).collect();
        assert_eq!(v.len(), 3);
        for (got, want) in v.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!(r.iter().all(|r| r.multiplicity == 1));
    }

    #[test]
    fn double_root() {
        let r = real_roots(&[4.0, -4.0, 1.0]).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].multiplicity, 2);
        assert!((r[0].value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_critical_cubic() {
        let beta: f64 = 0.5;
        let r = real_roots(&[0.0, 2.0 * (beta * beta - 1.0), 0.0, 2.0]).unwrap();
        let s = 0.75f64.sqrt();
        let v: Vec<f64> = r.iter().map(|r| r.value).collect();
        assert_eq!(v.len(), 3);
        assert!((v[0] + s).abs() < 1e-14 && v[1].abs() < 1e-14 && (v[2] - s).abs() < 1e-14);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(real_roots(&[0.0, 0.0]), Err(Error::ZeroPolynomial)));
        assert!(real_roots(&[3.0]).unwrap().is_empty());
        assert!(real_roots(&[1.0, 0.0, 1.0]).unwrap().is_empty());
        // trailing zeros are trimmed
        let r = real_roots(&[-2.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].value - 2.0).abs() < 1e-15);
    }

    #[test]
    fn triple_root() {
        // (x - 0.5)^3
        let r = real_roots(&[-0.125, 0.75, -1.5, 1.0]).unwrap();
        // a triple root splits at the cube root of rounding; one real survivor
        assert!(!r.is_empty());
        assert!(r.iter().all(|r| (r.value - 0.5).abs() < 1e-4));
    }

    proptest! {
        #[test]
        fn quintic_residuals(roots in proptest::collection::vec(-3.0f64..3.0, 5)) {
            let mut sorted = roots.clone();
            sorted.sort_by(f64::total_cmp);
            prop_assume!(sorted.windows(2).all(|w| w[1] - w[0] > 1e-2));
            let mut c = vec![1.0];
            for &r in &roots {
                let mut next = vec![0.0; c.len() + 1];
                for (k, &ck) in c.iter().enumerate() {
                    next[k] -= r * ck;
                    next[k + 1] += ck;
                }
                c = next;
            }
            let found = real_roots(&c).unwrap();
            prop_assert_eq!(found.len(), 5);
            for (f, want) in found.iter().zip(&sorted) {
                prop_assert!((f.value - want).abs() < 1e-8);
                let scale: f64 = c.iter().map(|v| v.abs()).sum::<f64>() * 250.0;
                prop_assert!(poly_eval(&c, f.value).abs() <= 1e-12 * scale);
            }
        }
    }
}
