//! Tensor-product Wendland kernels and their integrals over the unit cube.
//!
//! The one-dimensional factor is Wendland's `phi_{1,k}`, normalized so that
//! `phi(0) = 1`:
//!
//! | k | `phi_{1,k}(r)` on `[0, 1]`  |
//! |---|-----------------------------|
//! | 0 | `(1 - r)`                   |
//! | 1 | `(1 - r)^3 (3r + 1)`        |
//! | 2 | `(1 - r)^5 (8r^2 + 5r + 1)` |
//!
//! and zero for `r >= 1`. The d-dimensional kernel is the product of the
//! factors applied to `|x_i - y_i| / rho` along each axis, where `rho` is the
//! per-axis support radius. Because the factors are polynomials on their
//! support, single and double integrals over `[0, 1]^d` reduce to
//! evaluating two frozen antiderivatives.
//!
//! For `k = 0` the radial Wendland function is only known to be positive
//! definite on `R^d` for small `d`; here it is only ever used in one
//! dimension per tensor factor.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::points::PointSet;

/// Smoothness index `k` of the Wendland factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Smoothness {
    K0,
    K1,
    K2,
}

impl Smoothness {
    pub const ALL: [Smoothness; 3] = [Smoothness::K0, Smoothness::K1, Smoothness::K2];

    pub fn from_index(k: u32) -> Result<Self> {
        match k {
            0 => Ok(Smoothness::K0),
            1 => Ok(Smoothness::K1),
            2 => Ok(Smoothness::K2),
            other => Err(Error::UnsupportedSmoothness(other)),
        }
    }

    pub fn index(self) -> u32 {
        self as u32
    }

    /// Coefficients of `phi` on `[0, 1]`, lowest degree first.
    pub fn coefficients(self) -> &'static [f64] {
        PHI[self as usize]
    }
}

// phi_{1,k} expanded in powers of r.
const PHI: [&[f64]; 3] = [
    &[1.0, -1.0],
    &[1.0, 0.0, -6.0, 8.0, -3.0],
    &[1.0, 0.0, -7.0, 0.0, 35.0, -56.0, 35.0, -8.0],
];

// Phi(a) = int_0^a phi(t) dt.
const PHI_INT: [&[f64]; 3] = [
    &[0.0, 1.0, -0.5],
    &[0.0, 1.0, 0.0, -2.0, 2.0, -0.6],
    &[0.0, 1.0, 0.0, -7.0 / 3.0, 0.0, 7.0, -28.0 / 3.0, 5.0, -1.0],
];

// Psi(b) = int_0^b Phi(a) da, for b in [0, 1].
const PHI_INT2: [&[f64]; 3] = [
    &[0.0, 0.0, 0.5, -1.0 / 6.0],
    &[0.0, 0.0, 0.5, 0.0, -0.5, 0.4, -0.1],
    &[
        0.0,
        0.0,
        0.5,
        0.0,
        -7.0 / 12.0,
        0.0,
        7.0 / 6.0,
        -4.0 / 3.0,
        0.625,
        -1.0 / 9.0,
    ],
];

#[inline]
fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// `phi_{1,k}(r)` for `r >= 0`, without argument checks.
#[inline]
pub fn phi(k: Smoothness, r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        horner(PHI[k as usize], r)
    }
}

/// `int_0^a phi(t) dt`, constant for `a >= 1`.
#[inline]
fn phi_integral(k: Smoothness, a: f64) -> f64 {
    horner(PHI_INT[k as usize], a.min(1.0))
}

/// `int_0^b int_0^a phi(t) dt da`.
#[inline]
fn phi_double_integral(k: Smoothness, b: f64) -> f64 {
    let c = k as usize;
    if b <= 1.0 {
        horner(PHI_INT2[c], b)
    } else {
        horner(PHI_INT2[c], 1.0) + horner(PHI_INT[c], 1.0) * (b - 1.0)
    }
}

/// Wendland's `phi_{1,k}(r)` normalized to one at the origin.
pub fn wendland_1d(k: u32, r: f64) -> Result<f64> {
    let k = Smoothness::from_index(k)?;
    if !(r >= 0.0) {
        return Err(invalid("radius", "must be non-negative"));
    }
    Ok(phi(k, r))
}

/// Tensor-product Wendland kernel on `[0, 1]^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub smoothness: Smoothness,
    pub dim: usize,
    /// Per-axis support radius in `(0, 1]`.
    pub support_radius: f64,
}

impl KernelSpec {
    pub fn new(smoothness: Smoothness, dim: usize, support_radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if !(support_radius > 0.0 && support_radius <= 1.0) {
            return Err(invalid("support radius", "must lie in (0, 1]"));
        }
        Ok(KernelSpec {
            smoothness,
            dim,
            support_radius,
        })
    }

    /// Unit support radius.
    pub fn with_unit_support(smoothness: Smoothness, dim: usize) -> Result<Self> {
        Self::new(smoothness, dim, 1.0)
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `K(x, y)`, assuming both points have the right dimension.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let inv = 1.0 / self.support_radius;
        let mut value = 1.0;
        for (a, b) in x.iter().zip(y) {
            let r = (a - b).abs() * inv;
            if r >= 1.0 {
                return 0.0;
            }
            value *= horner(PHI[self.smoothness as usize], r);
        }
        value
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.eval_unchecked(x, y))
    }

    /// `int_0^1 K(x, y) dx` along one axis.
    #[inline]
    pub fn integral_1d_unchecked(&self, y: f64) -> f64 {
        let rho = self.support_radius;
        rho * (phi_integral(self.smoothness, y / rho)
            + phi_integral(self.smoothness, (1.0 - y) / rho))
    }

    /// `int_{[0,1]^d} K(x, y) dx`.
    pub fn integral(&self, y: &[f64]) -> Result<f64> {
        self.check(y)?;
        if let Some(&value) = y.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutsideUnitCube { value });
        }
        Ok(self.integral_unchecked(y))
    }

    #[inline]
    pub fn integral_unchecked(&self, y: &[f64]) -> f64 {
        y.iter().map(|&yi| self.integral_1d_unchecked(yi)).product()
    }

    /// `int int_{[0,1]^d x [0,1]^d} K(x, y) dx dy`.
    pub fn double_integral(&self) -> f64 {
        let rho = self.support_radius;
        let one_axis = 2.0 * rho * rho * phi_double_integral(self.smoothness, 1.0 / rho);
        (0..self.dim).fold(1.0, |acc, _| acc * one_axis)
    }
}

/// `int_0^1 phi_{1,k}(|x - y| / rho) dx` for `y` in `[0, 1]`.
pub fn kernel_integral_1d(k: Smoothness, support_radius: f64, y: f64) -> Result<f64> {
    let spec = KernelSpec::new(k, 1, support_radius)?;
    spec.integral(&[y])
}

/// Gram matrix `K(u_i, u_j) + jitter [i = j]`.
///
/// With zero jitter, coincident nodes make the matrix singular and are
/// reported as an error.
pub fn gram(spec: &KernelSpec, nodes: &PointSet, jitter: f64) -> Result<Matrix> {
    if nodes.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if nodes.dim() != spec.dim {
        return Err(Error::DimensionMismatch {
            expected: spec.dim,
            found: nodes.dim(),
        });
    }
    if !(jitter >= 0.0) {
        return Err(invalid("jitter", "must be non-negative"));
    }
    let m = nodes.len();
    if jitter == 0.0 {
        if let Some((first, second)) = find_duplicate(nodes) {
            return Err(Error::DuplicateNodes { first, second });
        }
    }
    let mut g = Matrix::zeros(m, m);
    for i in 0..m {
        let ui = nodes.point(i);
        g.set(i, i, 1.0 + jitter);
        for j in 0..i {
            let v = spec.eval_unchecked(ui, nodes.point(j));
            g.set(i, j, v);
            g.set(j, i, v);
        }
    }
    Ok(g)
}

fn find_duplicate(nodes: &PointSet) -> Option<(usize, usize)> {
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| {
        nodes
            .point(a)
            .partial_cmp(nodes.point(b))
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    order
        .windows(2)
        .find(|w| nodes.point(w[0]) == nodes.point(w[1]))
        .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::{Generator, Provenance};

    #[test]
    fn antiderivative_tables_match_phi() {
        // d/da of each antiderivative reproduces the previous table.
        for k in Smoothness::ALL {
            let c = k as usize;
            let p = PHI[c];
            let pi = PHI_INT[c];
            let pii = PHI_INT2[c];
            assert_eq!(pi.len(), p.len() + 1);
            assert_eq!(pii.len(), pi.len() + 1);
            for (i, &coef) in p.iter().enumerate() {
                assert!((pi[i + 1] * (i + 1) as f64 - coef).abs() < 1e-14);
            }
            for (i, &coef) in pi.iter().enumerate() {
                assert!((pii[i + 1] * (i + 1) as f64 - coef).abs() < 1e-14);
            }
            assert_eq!(pi[0], 0.0);
            assert_eq!(pii[0], 0.0);
        }
    }

    #[test]
    fn wendland_examples() {
        for k in 0..3 {
            assert_eq!(wendland_1d(k, 0.0).unwrap(), 1.0);
            assert_eq!(wendland_1d(k, 1.0).unwrap(), 0.0);
            assert_eq!(wendland_1d(k, 3.7).unwrap(), 0.0);
        }
        assert!((wendland_1d(1, 0.5).unwrap() - 0.3125).abs() < 1e-15);
        assert_eq!(wendland_1d(3, 0.1), Err(Error::UnsupportedSmoothness(3)));
        assert!(wendland_1d(1, -0.1).is_err());
    }

    #[test]
    fn closed_forms_match_factored_forms() {
        for i in 0..=200 {
            let r = i as f64 / 200.0;
            let s = 1.0 - r;
            assert!((phi(Smoothness::K1, r) - s.powi(3) * (3.0 * r + 1.0)).abs() < 1e-14);
            assert!(
                (phi(Smoothness::K2, r) - s.powi(5) * (8.0 * r * r + 5.0 * r + 1.0)).abs() < 1e-14
            );
        }
    }

    #[test]
    fn k1_has_vanishing_derivative_at_the_support_edge() {
        let mut last = f64::INFINITY;
        for e in [1e-2, 1e-3, 1e-4, 1e-5] {
            let slope = (phi(Smoothness::K1, 1.0) - phi(Smoothness::K1, 1.0 - e)) / e;
            assert!(slope.abs() < last);
            last = slope.abs();
        }
        assert!(last < 1e-8);
    }

    #[test]
    fn kernel_eval_examples() {
        let spec = KernelSpec::new(Smoothness::K0, 2, 1.0).unwrap();
        assert_eq!(spec.eval(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 1.0);
        assert_eq!(spec.eval(&[0.0, 0.0], &[0.5, 0.5]).unwrap(), 0.25);
        let narrow = KernelSpec::new(Smoothness::K2, 2, 0.25).unwrap();
        assert_eq!(narrow.eval(&[0.0, 0.5], &[0.25, 0.5]).unwrap(), 0.0);
        assert!(spec.eval(&[0.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn kernel_is_symmetric_and_bounded() {
        let mut r = crate::rng::stream(3, &[]);
        use rand::Rng;
        for k in Smoothness::ALL {
            let spec = KernelSpec::new(k, 3, 0.7).unwrap();
            for _ in 0..200 {
                let x: Vec<f64> = (0..3).map(|_| r.gen()).collect();
                let y: Vec<f64> = (0..3).map(|_| r.gen()).collect();
                let a = spec.eval_unchecked(&x, &y);
                assert_eq!(a, spec.eval_unchecked(&y, &x));
                assert!((0.0..=1.0).contains(&a));
            }
        }
    }

    #[test]
    fn integral_examples() {
        assert_eq!(kernel_integral_1d(Smoothness::K0, 1.0, 0.0).unwrap(), 0.5);
        assert_eq!(kernel_integral_1d(Smoothness::K0, 1.0, 0.5).unwrap(), 0.75);
        assert!(kernel_integral_1d(Smoothness::K0, 1.0, 1.5).is_err());
        let spec = KernelSpec::new(Smoothness::K0, 2, 1.0).unwrap();
        assert!((spec.integral(&[0.5, 0.5]).unwrap() - 0.5625).abs() < 1e-15);
        assert!((spec.integral(&[0.0, 0.5]).unwrap() - 0.375).abs() < 1e-15);
        for k in Smoothness::ALL {
            for rho in [0.1, 0.5, 1.0] {
                for i in 0..=20 {
                    let v = kernel_integral_1d(k, rho, i as f64 / 20.0).unwrap();
                    assert!(v > 0.0 && v <= 1.0);
                }
            }
        }
    }

    #[test]
    fn double_integral_examples() {
        let one = KernelSpec::new(Smoothness::K0, 1, 1.0)
            .unwrap()
            .double_integral();
        assert!((one - 2.0 / 3.0).abs() < 1e-15);
        for k in Smoothness::ALL {
            let d1 = KernelSpec::new(k, 1, 0.6).unwrap().double_integral();
            let d3 = KernelSpec::new(k, 3, 0.6).unwrap().double_integral();
            assert!((d3 - d1.powi(3)).abs() < 1e-15);
        }
        let half = KernelSpec::new(Smoothness::K0, 1, 0.5)
            .unwrap()
            .double_integral();
        assert!(half < one);
    }

    #[test]
    fn gram_examples() {
        let prov = || Provenance::new(Generator::External("t".into()), 0);
        let spec = KernelSpec::new(Smoothness::K1, 2, 0.2).unwrap();
        let one = PointSet::from_points(&[alloc::vec![0.3, 0.3]], prov()).unwrap();
        assert_eq!(gram(&spec, &one, 0.5).unwrap().as_slice(), &[1.5]);
        let far = PointSet::from_points(
            &[
                alloc::vec![0.0, 0.0],
                alloc::vec![0.5, 0.5],
                alloc::vec![1.0, 1.0],
            ],
            prov(),
        )
        .unwrap();
        let g = gram(&spec, &far, 1e-3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(g.get(i, j), if i == j { 1.001 } else { 0.0 });
            }
        }
        let dup = PointSet::from_points(
            &[
                alloc::vec![0.1, 0.2],
                alloc::vec![0.3, 0.3],
                alloc::vec![0.1, 0.2],
            ],
            prov(),
        )
        .unwrap();
        assert_eq!(
            gram(&spec, &dup, 0.0),
            Err(Error::DuplicateNodes {
                first: 0,
                second: 2
            })
        );
        assert!(gram(&spec, &dup, 1e-8).is_ok());
    }
}
