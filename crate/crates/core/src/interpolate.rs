//! Kernel interpolation of an integrand and the resulting control functional.
//!
//! Given nodes `u_1..u_M` and values `f(u_n)`, the interpolant is
//! `f_M(x) = sum_n beta_n K(x, u_n)` with `beta` solving
//! `(G + jitter I) beta = f(u)`. Its integral over the cube is available in
//! closed form, and `psi(x) = f_M(x) - I[f_M]` integrates to zero.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::kernels::{gram, KernelSpec};
use crate::linalg::{self, Matrix};
use crate::points::PointSet;

/// Nugget used when the caller does not choose one: `1e-10 * M`.
pub fn default_jitter(nodes: usize) -> f64 {
    1e-10 * nodes as f64
}

/// Something that went wrong during a fit without preventing it.
#[derive(Debug, Clone, PartialEq)]
pub enum FitWarning {
    /// Cholesky failed and the pivoted least-squares solver was used.
    LeastSquaresFallback { condition: f64, rank: usize },
    /// The node residual exceeds the recorded tolerance.
    ResidualAboveTolerance { residual: f64, tolerance: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interpolant {
    spec: KernelSpec,
    nodes: PointSet,
    beta: Vec<f64>,
    exact_integral: f64,
    jitter: f64,
    residual_norm: f64,
    tolerance: f64,
    warnings: Vec<FitWarning>,
}

/// Fits `f_M` to `values` at `nodes`.
pub fn fit(
    spec: &KernelSpec,
    nodes: &PointSet,
    values: &[f64],
    jitter: f64,
) -> Result<Interpolant> {
    if values.len() != nodes.len() {
        return Err(Error::DimensionMismatch {
            expected: nodes.len(),
            found: values.len(),
        });
    }
    let g = gram(spec, nodes, jitter)?;
    let mut warnings = Vec::new();
    let beta = match linalg::solve_spd(&g, values, 2) {
        Ok((beta, _)) => beta,
        Err(Error::Factorization { condition }) => {
            let (beta, rank) = linalg::lstsq_pivoted(&g, values);
            if beta.iter().any(|b| !b.is_finite()) {
                return Err(Error::Factorization { condition });
            }
            warnings.push(FitWarning::LeastSquaresFallback { condition, rank });
            beta
        }
        Err(e) => return Err(e),
    };
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tolerance = 1e-8 * (1.0 + scale);
    let residual_norm = node_residual(&g, jitter, &beta, values);
    if !(residual_norm <= tolerance) {
        warnings.push(FitWarning::ResidualAboveTolerance {
            residual: residual_norm,
            tolerance,
        });
    }
    Ok(Interpolant {
        exact_integral: integral_of(spec, nodes, &beta),
        spec: *spec,
        nodes: nodes.clone(),
        beta,
        jitter,
        residual_norm,
        tolerance,
        warnings,
    })
}

// max_n |f_M(u_n) - f(u_n)|; the Gram matrix carries the jitter on its diagonal.
fn node_residual(g: &Matrix, jitter: f64, beta: &[f64], values: &[f64]) -> f64 {
    g.mul_vec(beta)
        .iter()
        .zip(beta)
        .zip(values)
        .map(|((gb, b), v)| (gb - jitter * b - v).abs())
        .fold(0.0, f64::max)
}

fn integral_of(spec: &KernelSpec, nodes: &PointSet, beta: &[f64]) -> f64 {
    nodes
        .iter()
        .zip(beta)
        .map(|(u, b)| b * spec.integral_unchecked(u))
        .sum()
}

impl Interpolant {
    /// Rebuilds an interpolant from stored coefficients, recomputing the
    /// exact integral. The residual is taken on trust from the record.
    pub fn from_parts(
        spec: KernelSpec,
        nodes: PointSet,
        beta: Vec<f64>,
        jitter: f64,
        residual_norm: f64,
    ) -> Result<Self> {
        if nodes.dim() != spec.dim {
            return Err(Error::DimensionMismatch {
                expected: spec.dim,
                found: nodes.dim(),
            });
        }
        if beta.len() != nodes.len() {
            return Err(Error::DimensionMismatch {
                expected: nodes.len(),
                found: beta.len(),
            });
        }
        if !(jitter >= 0.0) {
            return Err(invalid("jitter", "must be non-negative"));
        }
        Ok(Interpolant {
            exact_integral: integral_of(&spec, &nodes, &beta),
            spec,
            nodes,
            beta,
            jitter,
            residual_norm,
            tolerance: f64::NAN,
            warnings: Vec::new(),
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn nodes(&self) -> &PointSet {
        &self.nodes
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// `I[f_M]`.
    pub fn exact_integral(&self) -> f64 {
        self.exact_integral
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `max_n |f_M(u_n) - f(u_n)|` reached by the fit.
    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    /// Residual tolerance in force when the interpolant was fitted.
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn warnings(&self) -> &[FitWarning] {
        &self.warnings
    }

    /// `beta^T G beta`, the squared native-space norm of `f_M`.
    pub fn native_norm_squared(&self) -> f64 {
        let m = self.nodes.len();
        let mut total = 0.0;
        for i in 0..m {
            let ui = self.nodes.point(i);
            total += self.beta[i] * self.beta[i];
            for j in 0..i {
                total += 2.0
                    * self.beta[i]
                    * self.beta[j]
                    * self.spec.eval_unchecked(ui, self.nodes.point(j));
            }
        }
        total
    }

    #[inline]
    pub fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        let rho = self.spec.support_radius;
        let windowed = rho < 1.0;
        let mut sum = 0.0;
        for (u, b) in self.nodes.iter().zip(&self.beta) {
            if windowed && x.iter().zip(u).any(|(a, c)| (a - c).abs() >= rho) {
                continue;
            }
            sum += b * self.spec.eval_unchecked(x, u);
        }
        sum
    }

    /// `f_M(x)`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.spec.dim {
            return Err(Error::DimensionMismatch {
                expected: self.spec.dim,
                found: x.len(),
            });
        }
        if let Some(&value) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutsideUnitCube { value });
        }
        Ok(self.evaluate_unchecked(x))
    }

    /// `psi(x) = f_M(x) - I[f_M]`.
    pub fn control_functional(&self, x: &[f64]) -> Result<f64> {
        Ok(self.evaluate(x)? - self.exact_integral)
    }

    /// `f_M` at every point of `ps`.
    pub fn evaluate_all(&self, ps: &PointSet) -> Result<Vec<f64>> {
        if ps.dim() != self.spec.dim {
            return Err(Error::DimensionMismatch {
                expected: self.spec.dim,
                found: ps.dim(),
            });
        }
        let mut out = vec![0.0; ps.len()];
        for (o, x) in out.iter_mut().zip(ps.iter()) {
            *o = self.evaluate_unchecked(x);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Smoothness;
    use crate::points::{midpoint_grid, Generator, Provenance};
    use alloc::vec;

    fn prov() -> Provenance {
        Provenance::new(Generator::External("t".into()), 0)
    }

    #[test]
    fn single_node() {
        let spec = KernelSpec::new(Smoothness::K1, 2, 1.0).unwrap();
        let nodes = PointSet::from_points(&[vec![0.3, 0.6]], prov()).unwrap();
        let f = fit(&spec, &nodes, &[2.5], 0.0).unwrap();
        assert_eq!(f.beta(), &[2.5]);
        assert_eq!(
            f.exact_integral(),
            2.5 * spec.integral(&[0.3, 0.6]).unwrap()
        );
        let x = [0.5, 0.5];
        assert_eq!(
            f.evaluate(&x).unwrap(),
            2.5 * spec.eval(&x, &[0.3, 0.6]).unwrap()
        );
    }

    #[test]
    fn zero_values_give_zero_interpolant() {
        let spec = KernelSpec::new(Smoothness::K2, 2, 1.0).unwrap();
        let nodes = midpoint_grid(4, 2).unwrap();
        let f = fit(&spec, &nodes, &[0.0; 16], 1e-10).unwrap();
        assert!(f.beta().iter().all(|&b| b == 0.0));
        assert_eq!(f.exact_integral(), 0.0);
        assert_eq!(f.control_functional(&[0.2, 0.9]).unwrap(), 0.0);
    }

    #[test]
    fn reproducing_column_gives_unit_vector() {
        let spec = KernelSpec::new(Smoothness::K1, 1, 1.0).unwrap();
        let nodes = midpoint_grid(6, 1).unwrap();
        let values: Vec<f64> = nodes
            .iter()
            .map(|u| spec.eval_unchecked(u, nodes.point(0)))
            .collect();
        let f = fit(&spec, &nodes, &values, 0.0).unwrap();
        assert!((f.beta()[0] - 1.0).abs() < 1e-12);
        assert!(f.beta()[1..].iter().all(|b| b.abs() < 1e-12));
    }

    #[test]
    fn evaluate_examples() {
        let spec = KernelSpec::new(Smoothness::K0, 1, 1.0).unwrap();
        let nodes = PointSet::from_points(&[vec![0.5]], prov()).unwrap();
        let f = Interpolant::from_parts(spec, nodes, vec![1.0], 0.0, 0.0).unwrap();
        assert_eq!(f.evaluate(&[0.75]).unwrap(), 0.75);
        assert!(f.evaluate(&[0.75, 0.1]).is_err());
        assert!(f.evaluate(&[1.5]).is_err());

        let narrow = KernelSpec::new(Smoothness::K1, 2, 0.2).unwrap();
        let nodes = PointSet::from_points(&[vec![0.1, 0.1], vec![0.2, 0.25]], prov()).unwrap();
        let f = fit(&narrow, &nodes, &[1.0, -2.0], 0.0).unwrap();
        assert_eq!(f.evaluate(&[0.9, 0.9]).unwrap(), 0.0);
        assert_eq!(f.evaluate(&[0.11, 0.95]).unwrap(), 0.0);
    }

    #[test]
    fn control_functional_is_shifted_surrogate() {
        let spec = KernelSpec::new(Smoothness::K1, 2, 1.0).unwrap();
        let nodes = midpoint_grid(5, 2).unwrap();
        let values: Vec<f64> = nodes
            .iter()
            .map(|u| (3.0 * u[0]).sin() + u[1] * u[1])
            .collect();
        let f = fit(&spec, &nodes, &values, default_jitter(25)).unwrap();
        for x in [[0.1, 0.2], [0.77, 0.31], [1.0, 0.0]] {
            let psi = f.control_functional(&x).unwrap();
            assert!((psi + f.exact_integral() - f.evaluate(&x).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn duplicated_nodes_fit_with_jitter() {
        let spec = KernelSpec::new(Smoothness::K1, 1, 1.0).unwrap();
        let nodes = PointSet::from_points(&[vec![0.2], vec![0.2], vec![0.7]], prov()).unwrap();
        let f = fit(&spec, &nodes, &[1.0, 1.0, 3.0], 1e-8).unwrap();
        assert!(f.beta().iter().all(|b| b.is_finite()));
        assert!(matches!(
            fit(&spec, &nodes, &[1.0, 1.0, 3.0], 0.0),
            Err(Error::DuplicateNodes { .. })
        ));
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let spec = KernelSpec::new(Smoothness::K1, 1, 1.0).unwrap();
        let nodes = midpoint_grid(3, 1).unwrap();
        assert!(matches!(
            fit(&spec, &nodes, &[1.0], 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
