//! Gaussian-process prediction with hyper-parameters integrated out.
//!
//! The covariance is `c(z, z'; theta) = theta_1 exp(-|z - z'|^2 / (2 theta_2^2))`
//! with independent `Gamma(2, scale)` priors on both parameters. Mapping the
//! unit square through the prior quantile functions turns the posterior
//! predictive mean into an integral over `[0, 1]^2`, which is handed to the
//! estimators.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::estimators::{
    cf_estimate, qmc_estimate, split_budget, EstimateReport, Integrand, Method,
};
use crate::interpolate::default_jitter;
use crate::kernels::{KernelSpec, Smoothness};
use crate::linalg::{dot, solve_spd, Cholesky, Matrix};
use crate::math;
use crate::points::{halton, midpoint_grid, random_shift, Point, PointSet};
use crate::rng;

/// Per-column affine map applied to covariates, plus the response offset.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub response_mean: f64,
}

impl Standardization {
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

/// Standardized training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    covariates: Matrix,
    responses: Vec<f64>,
    standardization: Standardization,
}

impl Dataset {
    /// Standardizes raw data: covariate columns to mean zero and unit
    /// (population) variance, responses to mean zero. Constant columns are
    /// centred and left unscaled.
    pub fn from_raw(covariates: Matrix, responses: Vec<f64>) -> Result<Self> {
        let (n, p) = (covariates.rows(), covariates.cols());
        if n == 0 {
            return Err(Error::EmptyPointSet);
        }
        if p == 0 {
            return Err(Error::ZeroDimension);
        }
        if responses.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: responses.len(),
            });
        }
        if covariates
            .as_slice()
            .iter()
            .chain(&responses)
            .any(|v| !v.is_finite())
        {
            return Err(invalid("dataset", "non-finite value"));
        }
        let nf = n as f64;
        let mut means = vec![0.0; p];
        let mut scales = vec![1.0; p];
        for j in 0..p {
            let m = (0..n).map(|i| covariates.get(i, j)).sum::<f64>() / nf;
            let var = (0..n)
                .map(|i| math::powi(covariates.get(i, j) - m, 2))
                .sum::<f64>()
                / nf;
            means[j] = m;
            if var > 0.0 {
                scales[j] = math::sqrt(var);
            }
        }
        let response_mean = responses.iter().sum::<f64>() / nf;
        let standardization = Standardization {
            means,
            scales,
            response_mean,
        };
        let covariates = Matrix::from_fn(n, p, |i, j| {
            (covariates.get(i, j) - standardization.means[j]) / standardization.scales[j]
        });
        let responses = responses.iter().map(|y| y - response_mean).collect();
        Ok(Dataset {
            covariates,
            responses,
            standardization,
        })
    }

    /// Wraps data that is already standardized.
    pub fn from_standardized(covariates: Matrix, responses: Vec<f64>) -> Result<Self> {
        let p = covariates.cols();
        if responses.len() != covariates.rows() {
            return Err(Error::DimensionMismatch {
                expected: covariates.rows(),
                found: responses.len(),
            });
        }
        Ok(Dataset {
            covariates,
            responses,
            standardization: Standardization {
                means: vec![0.0; p],
                scales: vec![1.0; p],
                response_mean: 0.0,
            },
        })
    }

    pub fn n(&self) -> usize {
        self.covariates.rows()
    }

    pub fn p(&self) -> usize {
        self.covariates.cols()
    }

    pub fn covariates(&self) -> &Matrix {
        &self.covariates
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn standardization(&self) -> &Standardization {
        &self.standardization
    }

    /// Replaces the responses, keeping the covariates.
    pub fn with_responses(mut self, responses: Vec<f64>) -> Result<Self> {
        if responses.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: responses.len(),
            });
        }
        self.responses = responses;
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpConfig {
    /// Observation noise standard deviation.
    pub sigma: f64,
    /// Gamma shape of the `theta_1` prior; only 2 is supported.
    pub shape1: f64,
    pub scale1: f64,
    /// Gamma shape of the `theta_2` prior; only 2 is supported.
    pub shape2: f64,
    pub scale2: f64,
    /// Subset-of-regressors size `n'`.
    pub n_subset: usize,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            sigma: 0.1,
            shape1: 2.0,
            scale1: 2.0,
            shape2: 2.0,
            scale2: 2.0,
            n_subset: 50,
        }
    }
}

impl GpConfig {
    pub fn validate(&self, data: &Dataset) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(invalid("sigma", "must be positive"));
        }
        if !(self.scale1 > 0.0 && self.scale2 > 0.0) {
            return Err(invalid("prior scale", "must be positive"));
        }
        if self.shape1 != 2.0 || self.shape2 != 2.0 {
            return Err(invalid("prior shape", "only shape 2 is supported"));
        }
        if self.n_subset == 0 || self.n_subset > data.n() {
            return Err(invalid("n_subset", "must lie in 1..=n"));
        }
        Ok(())
    }

    /// Hyper-parameters for a point of the unit square.
    pub fn theta(&self, x: &[f64]) -> Result<(f64, f64)> {
        let clamp = |t: f64| t.clamp(THETA_EPS, 1.0 - THETA_EPS);
        Ok((
            gamma2_inverse_cdf(clamp(x[0]), self.scale1)?,
            gamma2_inverse_cdf(clamp(x[1]), self.scale2)?,
        ))
    }
}

/// Unit-square coordinates are clamped to `[THETA_EPS, 1 - THETA_EPS]`
/// before the quantile map, so shifted points on the boundary stay finite.
pub const THETA_EPS: f64 = 1e-12;

/// `Gamma(2, scale)` CDF, `1 - (1 + t/scale) e^{-t/scale}`.
pub fn gamma2_cdf(t: f64, scale: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let s = t / scale;
    if s < 1e-3 {
        // s^2/2 - s^3/3 + s^4/8 - s^5/30
        return s * s * (0.5 - s * (1.0 / 3.0 - s * (0.125 - s / 30.0)));
    }
    -math::expm1(-s) - s * math::exp(-s)
}

/// Quantile function of `Gamma(2, scale)` by safeguarded Newton iteration.
pub fn gamma2_inverse_cdf(q: f64, scale: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::ProbabilityOutOfRange(q));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(invalid("scale", "must be positive"));
    }
    // Work in s = t / scale with P(s) = 1 - (1 + s) e^{-s}, P'(s) = s e^{-s}.
    let p = |s: f64| gamma2_cdf(s, 1.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while p(hi) < q {
        lo = hi;
        hi *= 2.0;
    }
    // Small q: P(s) ~ s^2/2. Large q: take the bracket midpoint.
    let mut s = if q < 0.1 {
        math::sqrt(2.0 * q)
    } else {
        0.5 * (lo + hi)
    };
    s = s.clamp(lo, hi);
    for _ in 0..200 {
        let f = p(s) - q;
        if f == 0.0 {
            break;
        }
        if f < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let deriv = s * math::exp(-s);
        let mut next = s - f / deriv;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() <= 1e-16 * s.max(1e-300) || hi - lo <= 1e-16 * hi {
            s = next;
            break;
        }
        s = next;
    }
    Ok(scale * s)
}

fn sq_exp(theta: (f64, f64), a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    theta.0 * math::exp(-0.5 * d2 / (theta.1 * theta.1))
}

fn check_theta(theta: (f64, f64)) -> Result<()> {
    if !(theta.0 > 0.0 && theta.1 > 0.0 && theta.0.is_finite() && theta.1.is_finite()) {
        return Err(invalid("theta", "both hyper-parameters must be positive"));
    }
    Ok(())
}

fn check_point(data: &Dataset, z_star: &[f64]) -> Result<()> {
    if z_star.len() != data.p() {
        return Err(Error::DimensionMismatch {
            expected: data.p(),
            found: z_star.len(),
        });
    }
    Ok(())
}

/// `C_{*,n} (C_n + sigma^2 I)^{-1} y`.
pub fn gp_predictive_mean_full(
    data: &Dataset,
    cfg: &GpConfig,
    theta: (f64, f64),
    z_star: &[f64],
) -> Result<f64> {
    check_theta(theta)?;
    check_point(data, z_star)?;
    let x = &data.covariates;
    let n = data.n();
    let mut c = Matrix::from_fn(n, n, |i, j| sq_exp(theta, x.row(i), x.row(j)));
    c.add_diagonal(cfg.sigma * cfg.sigma);
    let (w, _) = solve_spd(&c, &data.responses, 1)?;
    let k_star: Vec<f64> = (0..n).map(|i| sq_exp(theta, z_star, x.row(i))).collect();
    Ok(dot(&k_star, &w))
}

/// Subset-of-regressors mean
/// `C_{*,n'} (C_{n',n} C_{n,n'} + sigma^2 C_{n'})^{-1} C_{n',n} y`.
///
/// With `C_{n'} = L L^T` (plus a jitter of `1e-10 trace / n'`) and
/// `A = L^{-1} C_{n',n}`, the system matrix is `L (A A^T + sigma^2 I) L^T`,
/// so only the well-conditioned middle factor is inverted.
pub fn gp_predictive_mean_sor(
    data: &Dataset,
    cfg: &GpConfig,
    theta: (f64, f64),
    z_star: &[f64],
    subset: &[usize],
) -> Result<f64> {
    check_theta(theta)?;
    check_point(data, z_star)?;
    check_subset(data.n(), subset)?;
    let x = &data.covariates;
    let (n, m) = (data.n(), subset.len());
    let mut c_sub = Matrix::from_fn(m, m, |a, b| {
        sq_exp(theta, x.row(subset[a]), x.row(subset[b]))
    });
    c_sub.add_diagonal(1e-10 * theta.0);
    let chol = Cholesky::new(&c_sub)?;
    // Rows of A^T, one per training point.
    let at: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let col: Vec<f64> = subset
                .iter()
                .map(|&s| sq_exp(theta, x.row(s), x.row(i)))
                .collect();
            chol.solve_lower(&col)
        })
        .collect();
    let mut b = Matrix::zeros(m, m);
    for row in &at {
        for (a, &ra) in row.iter().enumerate() {
            if ra == 0.0 {
                continue;
            }
            for (c, &rc) in row[..=a].iter().enumerate() {
                b.set(a, c, b.get(a, c) + ra * rc);
            }
        }
    }
    for a in 0..m {
        for c in 0..a {
            b.set(c, a, b.get(a, c));
        }
    }
    b.add_diagonal(cfg.sigma * cfg.sigma);
    let mut ay = vec![0.0; m];
    for (row, y) in at.iter().zip(&data.responses) {
        for (acc, r) in ay.iter_mut().zip(row) {
            *acc += r * y;
        }
    }
    let (w, _) = solve_spd(&b, &ay, 1)?;
    let k_star: Vec<f64> = subset
        .iter()
        .map(|&i| sq_exp(theta, z_star, x.row(i)))
        .collect();
    Ok(dot(&chol.solve_lower(&k_star), &w))
}

fn check_subset(n: usize, subset: &[usize]) -> Result<()> {
    if subset.is_empty() || subset.len() > n {
        return Err(invalid("subset", "size must lie in 1..=n"));
    }
    let mut seen = vec![false; n];
    for &i in subset {
        if i >= n || seen[i] {
            return Err(invalid("subset", "indices must be distinct and in range"));
        }
        seen[i] = true;
    }
    Ok(())
}

/// `count` distinct indices from `0..n`, uniformly without replacement, in
/// the order drawn.
pub fn choose_subset(n: usize, count: usize, seed: u64) -> Vec<usize> {
    let count = count.min(n);
    let mut idx: Vec<usize> = (0..n).collect();
    let mut r = rng::stream(seed, &[0x5b5e7]);
    for i in 0..count {
        let j = r.gen_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(count);
    idx
}

/// A reproducible synthetic regression problem.
#[derive(Debug, Clone)]
pub struct SyntheticProblem {
    pub data: Dataset,
    /// Test inputs on the standardized scale.
    pub test_points: Vec<Vec<f64>>,
}

/// The smooth response surface used for synthetic data.
pub fn synthetic_response(z: &[f64]) -> f64 {
    let mut y = math::sin(z[0]);
    if z.len() > 1 {
        y += 0.5 * math::cos(1.5 * z[1]);
    }
    if z.len() > 2 {
        y += 0.3 * z[2] * z.get(3).copied().unwrap_or(1.0);
    }
    for (j, &v) in z.iter().enumerate().skip(4) {
        y += 0.1 * math::sin(v + j as f64);
    }
    y
}

fn normal(r: &mut rng::Stream) -> f64 {
    // Box-Muller; the uniform is mapped to (0, 1].
    let u = 1.0 - r.gen::<f64>();
    let v: f64 = r.gen();
    math::sqrt(-2.0 * math::ln(u)) * math::cos(2.0 * core::f64::consts::PI * v)
}

/// `n` training points with standard-normal covariates in `p` dimensions and
/// responses `synthetic_response(z) + noise * eps`, plus `n_test` test
/// inputs drawn from the same covariate distribution.
pub fn synthetic_problem(
    n: usize,
    p: usize,
    noise: f64,
    n_test: usize,
    seed: u64,
) -> Result<SyntheticProblem> {
    let mut r = rng::stream(seed, &[0x9d7a]);
    let raw = Matrix::from_fn(n, p, |_, _| normal(&mut r));
    let responses: Vec<f64> = (0..n)
        .map(|i| synthetic_response(raw.row(i)) + noise * normal(&mut r))
        .collect();
    let data = Dataset::from_raw(raw, responses)?;
    let test_points = (0..n_test)
        .map(|_| {
            let z: Vec<f64> = (0..p).map(|_| normal(&mut r)).collect();
            data.standardization.apply(&z)
        })
        .collect();
    Ok(SyntheticProblem { data, test_points })
}

/// Posterior predictive mean at `z_star` with the hyper-parameters
/// integrated against their prior, estimated with `method` on `budget`
/// evaluations. CF methods use a `k = 1` Wendland kernel with unit support
/// and give half the budget to the fitting grid.
pub fn marginal_prediction(
    data: &Dataset,
    cfg: &GpConfig,
    subset: &[usize],
    z_star: &[f64],
    method: Method,
    budget: usize,
    seed: u64,
) -> Result<EstimateReport> {
    cfg.validate(data)?;
    check_point(data, z_star)?;
    check_subset(data.n(), subset)?;
    let f = Integrand::new(2, |x: &[f64]| match cfg.theta(x) {
        Ok(theta) => gp_predictive_mean_sor(data, cfg, theta, z_star, subset).unwrap_or(f64::NAN),
        Err(_) => f64::NAN,
    });
    let mut r = rng::stream(seed, &[0x6a9]);
    let shift = Point::uniform(2, &mut r);
    let mut report = EstimateReport {
        method,
        estimate: 0.0,
        n_total: budget,
        m_nodes: 0,
        discarded: 0,
        seed,
        wall_time_secs: None,
    };
    let mc_points = |n| PointSet::uniform(n, 2, &mut rng::stream(seed, &[0x3c]));
    report.estimate = match method {
        Method::Qmc => qmc_estimate(&f, &random_shift(&halton(budget, 2, true)?, &shift)?)?,
        Method::Mc => qmc_estimate(&f, &mc_points(budget)?)?,
        Method::QmcCf | Method::McCf => {
            let split = split_budget(budget, 0.5, true, 2)?;
            let nodes = midpoint_grid(split.per_axis, 2)?;
            let eval = if method == Method::QmcCf {
                random_shift(&halton(split.eval, 2, true)?, &shift)?
            } else {
                mc_points(split.eval)?
            };
            let spec = KernelSpec::new(Smoothness::K1, 2, 1.0)?;
            report.m_nodes = split.nodes;
            report.discarded = split.discarded;
            cf_estimate(&f, &nodes, &eval, &spec, default_jitter(split.nodes))?.0
        }
        Method::QmcCfFolded => {
            return Err(invalid(
                "method",
                "QMC+CF-folded is not offered for the GP application",
            ))
        }
    };
    if !report.estimate.is_finite() {
        return Err(invalid(
            "estimate",
            "predictive mean failed for some hyper-parameters",
        ));
    }
    debug_assert_eq!(f.eval_count() as usize, report.evaluations());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_quantile_examples() {
        let med = gamma2_inverse_cdf(0.5, 2.0).unwrap();
        assert!((med - 3.35669).abs() < 1e-5, "{med}");
        for i in 1..100 {
            let q = i as f64 / 100.0;
            let t = gamma2_inverse_cdf(q, 2.0).unwrap();
            assert!((gamma2_cdf(t, 2.0) - q).abs() <= 1e-12, "q = {q}");
        }
        assert!(gamma2_inverse_cdf(1e-12, 2.0).unwrap() < 1e-5);
        assert!(gamma2_inverse_cdf(0.0, 2.0).is_err());
        assert!(gamma2_inverse_cdf(1.0, 2.0).is_err());
        let far = gamma2_inverse_cdf(1.0 - 1e-12, 2.0).unwrap();
        assert!(far.is_finite() && far > 50.0);
    }

    #[test]
    fn one_point_mean_by_hand() {
        let data =
            Dataset::from_standardized(Matrix::from_fn(1, 2, |_, j| j as f64), vec![0.7]).unwrap();
        let cfg = GpConfig {
            n_subset: 1,
            ..GpConfig::default()
        };
        let m = gp_predictive_mean_full(&data, &cfg, (1.5, 0.8), &[0.0, 1.0]).unwrap();
        assert!((m - 1.5 / (1.5 + 0.01) * 0.7).abs() < 1e-14);
    }

    #[test]
    fn zero_responses_and_vanishing_scale() {
        let prob = synthetic_problem(30, 3, 0.1, 2, 4).unwrap();
        let cfg = GpConfig {
            n_subset: 10,
            ..GpConfig::default()
        };
        let zeros = prob.data.clone().with_responses(vec![0.0; 30]).unwrap();
        let subset = choose_subset(30, 10, 1);
        let z = &prob.test_points[0];
        assert_eq!(
            gp_predictive_mean_full(&zeros, &cfg, (2.0, 1.0), z).unwrap(),
            0.0
        );
        assert_eq!(
            gp_predictive_mean_sor(&zeros, &cfg, (2.0, 1.0), z, &subset).unwrap(),
            0.0
        );
        let tiny = gp_predictive_mean_full(&prob.data, &cfg, (1e-12, 1.0), z).unwrap();
        assert!(tiny.abs() < 1e-9);
    }

    #[test]
    fn sor_with_full_subset_matches_full() {
        let prob = synthetic_problem(40, 4, 0.1, 3, 9).unwrap();
        let cfg = GpConfig {
            n_subset: 40,
            ..GpConfig::default()
        };
        let subset: Vec<usize> = (0..40).collect();
        for z in &prob.test_points {
            let a = gp_predictive_mean_full(&prob.data, &cfg, (2.0, 1.5), z).unwrap();
            let b = gp_predictive_mean_sor(&prob.data, &cfg, (2.0, 1.5), z, &subset).unwrap();
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-3), "{a} vs {b}");
        }
    }

    #[test]
    fn standardization_invariants() {
        let prob = synthetic_problem(200, 4, 0.1, 0, 1).unwrap();
        let d = &prob.data;
        for j in 0..d.p() {
            let m = (0..d.n()).map(|i| d.covariates().get(i, j)).sum::<f64>() / d.n() as f64;
            let v = (0..d.n())
                .map(|i| d.covariates().get(i, j).powi(2))
                .sum::<f64>()
                / d.n() as f64;
            assert!(m.abs() <= 1e-10);
            assert!((v - 1.0).abs() <= 1e-8);
        }
        assert!((d.responses().iter().sum::<f64>() / d.n() as f64).abs() <= 1e-10);
    }

    #[test]
    fn subsets_are_deterministic_and_distinct() {
        let a = choose_subset(100, 20, 5);
        assert_eq!(a, choose_subset(100, 20, 5));
        let mut s = a.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 20);
        assert_eq!(choose_subset(5, 10, 1).len(), 5);
    }

    #[test]
    fn qmc_and_cf_spend_the_same_budget() {
        let prob = synthetic_problem(40, 2, 0.1, 1, 2).unwrap();
        let cfg = GpConfig {
            n_subset: 15,
            ..GpConfig::default()
        };
        let subset = choose_subset(40, 15, 3);
        let z = &prob.test_points[0];
        let a = marginal_prediction(&prob.data, &cfg, &subset, z, Method::Qmc, 64, 8).unwrap();
        let b = marginal_prediction(&prob.data, &cfg, &subset, z, Method::QmcCf, 64, 8).unwrap();
        assert_eq!(a.evaluations() + a.discarded, b.evaluations() + b.discarded);
        assert!((a.estimate - b.estimate).abs() < 0.1);
        let zeros = prob.data.clone().with_responses(vec![0.0; 40]).unwrap();
        let c = marginal_prediction(&zeros, &cfg, &subset, z, Method::QmcCf, 64, 8).unwrap();
        assert_eq!(c.estimate, 0.0);
    }
}
