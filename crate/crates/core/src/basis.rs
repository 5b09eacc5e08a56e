//! Massless Dirac eigenbasis on the unit interval,
//! `ψ_n(y) = (sin nπy, −i cos nπy)`, `n ∈ ℤ`, with `ψ_{n,1}(0) = ψ_{n,1}(1) = 0`,
//! and the closed-form matrix elements of `y` and `β` in that basis.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A two-component spinor.
pub type Spinor = [Complex64; 2];

/// `ψ_n(y)`.
pub fn eigenfunction(n: i64, y: f64) -> Result<Spinor> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::OutOfDomain { value: y, lo: 0.0, hi: 1.0 });
    }
    Ok(eigenfunction_unchecked(n, y))
}

#[inline]
pub(crate) fn eigenfunction_unchecked(n: i64, y: f64) -> Spinor {
    let (s, c) = (n as f64 * PI * y).sin_cos();
    [Complex64::new(s, 0.0), Complex64::new(0.0, -c)]
}

/// `dψ_n/dy = nπ (cos nπy, i sin nπy)`.
#[inline]
pub(crate) fn eigenfunction_derivative(n: i64, y: f64) -> Spinor {
    let k = n as f64 * PI;
    let (s, c) = (k * y).sin_cos();
    [Complex64::new(k * c, 0.0), Complex64::new(0.0, k * s)]
}

/// `V(j) = ∫₀¹ y cos(jπy) dy`, the y-matrix element for index difference `j`.
#[inline]
pub fn position_kernel(j: i64) -> f64 {
    if j == 0 {
        0.5
    } else {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let jf = j as f64;
        (sign - 1.0) / (PI * PI * jf * jf)
    }
}

/// `V_{nk} = ∫₀¹ ψ_n† y ψ_k dy`.
pub fn position_matrix_element(n: i64, k: i64) -> f64 {
    position_kernel(n - k)
}

/// `∫₀¹ ψ_n† β ψ_k dy = −δ_{n,−k}`.
pub fn beta_matrix_element(n: i64, k: i64) -> f64 {
    if n == -k {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;
    use approx::assert_abs_diff_eq;

    fn inner<F: Fn(&Spinor, &Spinor) -> Complex64>(n: i64, k: i64, f: F) -> Complex64 {
        let pts = GaussLegendre::new(16).composite_points(0.0, 1.0, 32);
        pts.iter()
            .map(|&(y, w)| {
                let a = eigenfunction(n, y).unwrap();
                let b = eigenfunction(k, y).unwrap();
                f(&a, &b) * w
            })
            .sum()
    }

    #[test]
    fn eigenfunction_examples() {
        let v = eigenfunction(0, 0.37).unwrap();
        assert_eq!(v[0], Complex64::new(0.0, 0.0));
        assert_eq!(v[1], Complex64::new(0.0, -1.0));
        let v = eigenfunction(1, 0.5).unwrap();
        assert_abs_diff_eq!(v[0].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1].norm(), 0.0, epsilon = 1e-15);
        for n in -5..=5 {
            assert_abs_diff_eq!(eigenfunction(n, 0.0).unwrap()[0].norm(), 0.0);
            assert_abs_diff_eq!(eigenfunction(n, 1.0).unwrap()[0].norm(), 0.0, epsilon = 1e-14);
        }
        assert!(eigenfunction(1, 1.01).is_err());
    }

    #[test]
    fn basis_is_orthonormal_by_quadrature() {
        for n in -8..=8 {
            for k in -8..=8 {
                let v = inner(n, k, |a, b| a[0].conj() * b[0] + a[1].conj() * b[1]);
                let expect = if n == k { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(v.re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn massless_operator_eigenvalue() {
        // −iα ∂_y ψ_n = nπ ψ_n: α swaps the components.
        for n in -4..=4 {
            let y = 0.23;
            let d = eigenfunction_derivative(n, y);
            let lhs = [-Complex64::i() * d[1], -Complex64::i() * d[0]];
            let psi = eigenfunction(n, y).unwrap();
            for c in 0..2 {
                assert_abs_diff_eq!((lhs[c] - psi[c] * (n as f64 * PI)).norm(), 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn position_elements() {
        assert_eq!(position_matrix_element(3, 3), 0.5);
        assert_abs_diff_eq!(position_matrix_element(2, 1), -2.0 / (PI * PI), epsilon = 1e-16);
        assert_abs_diff_eq!(position_matrix_element(1, 2), -0.202_642_367_284_675_5, epsilon = 1e-15);
        assert_eq!(position_matrix_element(5, 3), 0.0);
        for n in -8..=8 {
            for k in -8..=8 {
                assert_eq!(position_matrix_element(n, k), position_matrix_element(k, n));
            }
        }
    }

    #[test]
    fn position_elements_match_quadrature() {
        let pts = GaussLegendre::new(16).composite_points(0.0, 1.0, 32);
        for n in -6..=6 {
            for k in -6..=6 {
                let q: Complex64 = pts
                    .iter()
                    .map(|&(y, w)| {
                        let a = eigenfunction(n, y).unwrap();
                        let b = eigenfunction(k, y).unwrap();
                        (a[0].conj() * b[0] + a[1].conj() * b[1]) * y * w
                    })
                    .sum();
                assert_abs_diff_eq!(q.re, position_matrix_element(n, k), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn beta_elements() {
        assert_eq!(beta_matrix_element(1, -1), -1.0);
        assert_eq!(beta_matrix_element(1, 1), 0.0);
        assert_eq!(beta_matrix_element(0, 0), -1.0);
        for n in -8..=8 {
            for k in -8..=8 {
                let q = inner(n, k, |a, b| a[0].conj() * b[0] - a[1].conj() * b[1]);
                assert_abs_diff_eq!(q.re, beta_matrix_element(n, k), epsilon = 1e-12);
                assert_abs_diff_eq!(q.im, 0.0, epsilon = 1e-12);
            }
        }
    }
}
