//! Numerical building blocks shared by the channel model.

mod quadrature;
mod special;

pub use quadrature::{disk_quadrature, integrate_adaptive, DiskQuadrature, DEFAULT_REL_TOL};
pub use special::{bessel_i0, bessel_i0_scaled, erf, erfc};

/// A real symmetric 2×2 matrix `[[a11, a12], [a12, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymMatrix2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl SymMatrix2 {
    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Self { a11, a12, a22 }
    }

    pub const fn diag(a11: f64, a22: f64) -> Self {
        Self { a11, a12: 0.0, a22 }
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.a11 * s, self.a12 * s, self.a22 * s)
    }

    pub fn is_zero(&self) -> bool {
        self.a11 == 0.0 && self.a12 == 0.0 && self.a22 == 0.0
    }

    /// Positive semidefinite up to `tol` (relative to the squared diagonal scale).
    pub fn is_psd(&self, tol: f64) -> bool {
        let scale = self.a11.abs().max(self.a22.abs()).max(self.a12.abs());
        self.a11 >= -tol * scale && self.a22 >= -tol * scale && self.det() >= -tol * scale * scale
    }
}

/// Eigenvalues `(λ₁, λ₂)` with `λ₁ ≥ λ₂` of a symmetric 2×2 matrix.
///
/// The larger-magnitude root comes from the characteristic polynomial and
/// the other from `det/λ`, which keeps the product accurate when the
/// eigenvalues differ by many orders of magnitude.
pub fn eig_sym2(m: SymMatrix2) -> (f64, f64) {
    let mean = 0.5 * (m.a11 + m.a22);
    let radius = (0.5 * (m.a11 - m.a22)).hypot(m.a12);
    if mean >= 0.0 {
        let l1 = mean + radius;
        let l2 = if l1 != 0.0 { m.det() / l1 } else { 0.0 };
        (l1, l2.min(l1))
    } else {
        let l2 = mean - radius;
        let l1 = m.det() / l2;
        (l1.max(l2), l2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn eig_examples() {
        assert_eq!(eig_sym2(SymMatrix2::diag(3.0, 5.0)), (5.0, 3.0));
        assert_eq!(eig_sym2(SymMatrix2::diag(1.0, 1.0)), (1.0, 1.0));
        let (l1, l2) = eig_sym2(SymMatrix2::new(2.0, 1.0, 2.0));
        assert_relative_eq!(l1, 3.0, max_relative = 1e-15);
        assert_relative_eq!(l2, 1.0, max_relative = 1e-15);
        assert_eq!(eig_sym2(SymMatrix2::default()), (0.0, 0.0));
        let (l1, l2) = eig_sym2(SymMatrix2::diag(-1.0, -4.0));
        assert_relative_eq!(l1, -1.0);
        assert_relative_eq!(l2, -4.0);
    }

    #[test]
    fn eig_ill_conditioned_product() {
        // λ ≈ (1, 1e-14): the small root must keep its relative accuracy.
        let m = SymMatrix2::new(0.5 + 0.5e-14, 0.5 - 0.5e-14, 0.5 + 0.5e-14);
        let (l1, l2) = eig_sym2(m);
        assert_relative_eq!(l1, 1.0, max_relative = 1e-14);
        assert_relative_eq!(l1 * l2, m.det(), max_relative = 1e-12);
    }

    #[test]
    fn psd_check() {
        assert!(SymMatrix2::new(2.0, 1.0, 2.0).is_psd(1e-12));
        assert!(!SymMatrix2::new(1.0, 2.0, 1.0).is_psd(1e-12));
        assert!(SymMatrix2::default().is_psd(1e-12));
    }

    proptest! {
        #[test]
        fn eig_trace_det_and_characteristic_residual(
            a11 in -1e3f64..1e3, a12 in -1e3f64..1e3, a22 in -1e3f64..1e3,
        ) {
            let m = SymMatrix2::new(a11, a12, a22);
            let (l1, l2) = eig_sym2(m);
            prop_assert!(l1 >= l2);
            let scale = l1.abs().max(l2.abs()).max(1e-300);
            prop_assert!((l1 + l2 - m.trace()).abs() <= 1e-12 * scale * 4.0);
            prop_assert!((l1 * l2 - m.det()).abs() <= 1e-12 * scale * scale * 4.0);
            // det(M − λI) = 0 for each root
            for l in [l1, l2] {
                let r = (a11 - l) * (a22 - l) - a12 * a12;
                prop_assert!(r.abs() <= 1e-12 * scale * scale * 8.0);
            }
        }
    }
}
