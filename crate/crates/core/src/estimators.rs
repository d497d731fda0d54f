//! Integration estimators: the plain QMC average, the control-functional
//! (CF) estimator and its folded variant, the kernel worst-case error and
//! the rule for splitting an evaluation budget between fitting and
//! averaging.
//!
//! Estimators take point sets rather than generators. Which shift or
//! scramble is used is decided by the caller, so that paired comparisons
//! can share randomness.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;
use core::sync::atomic::{AtomicU64, Ordering};

use crate::error::{invalid, Error, Result};
use crate::interpolate::{self, Interpolant};
use crate::kernels::KernelSpec;
use crate::math;
use crate::points::{baker_fold, random_shift, Point, PointSet};

/// A black-box integrand on `[0, 1]^dim` that counts its evaluations.
///
/// The counter is atomic, so a shared integrand can be evaluated from
/// several threads.
pub struct Integrand<F> {
    dim: usize,
    f: F,
    count: AtomicU64,
}

impl<F: Fn(&[f64]) -> f64> Integrand<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Integrand {
            dim,
            f,
            count: AtomicU64::new(0),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.count.fetch_add(1, Ordering::Relaxed);
        (self.f)(x)
    }

    pub fn eval_count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    fn check(&self, ps: &PointSet) -> Result<()> {
        if ps.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: ps.dim(),
            });
        }
        Ok(())
    }
}

impl<F> fmt::Debug for Integrand<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Integrand")
            .field("dim", &self.dim)
            .field("eval_count", &self.count.load(Ordering::Relaxed))
            .finish_non_exhaustive()
    }
}

/// Estimator tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Mc,
    Qmc,
    QmcCf,
    QmcCfFolded,
    McCf,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Mc,
        Method::Qmc,
        Method::QmcCf,
        Method::QmcCfFolded,
        Method::McCf,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Mc => "MC",
            Method::Qmc => "QMC",
            Method::QmcCf => "QMC+CF",
            Method::QmcCfFolded => "QMC+CF-folded",
            Method::McCf => "MC+CF",
        }
    }

    pub fn uses_cf(self) -> bool {
        matches!(self, Method::QmcCf | Method::QmcCfFolded | Method::McCf)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid("method", String::from(s)))
    }
}

/// One integration result.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub method: Method,
    pub estimate: f64,
    /// Evaluation budget allotted to the run.
    pub n_total: usize,
    /// Nodes used to fit the control functional (0 for plain methods).
    pub m_nodes: usize,
    /// Budget left unspent because the node count was snapped to a grid.
    pub discarded: usize,
    pub seed: u64,
    /// Filled in by callers that have a clock.
    pub wall_time_secs: Option<f64>,
}

impl EstimateReport {
    /// Evaluations actually spent.
    pub fn evaluations(&self) -> usize {
        self.n_total - self.discarded
    }
}

/// `Q[f] = (1/N) sum_n f(x_n)`.
pub fn qmc_estimate<F: Fn(&[f64]) -> f64>(f: &Integrand<F>, ps: &PointSet) -> Result<f64> {
    f.check(ps)?;
    if ps.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    Ok(ps.iter().map(|x| f.eval(x)).sum::<f64>() / ps.len() as f64)
}

/// CF estimator `I[f_M] + Q[f - f_M; v]`, with `f_M` interpolating `f` on
/// `nodes` and the average taken over `eval_points`.
///
/// Spends exactly `|nodes| + |eval_points|` evaluations of `f`.
pub fn cf_estimate<F: Fn(&[f64]) -> f64>(
    f: &Integrand<F>,
    nodes: &PointSet,
    eval_points: &PointSet,
    spec: &KernelSpec,
    jitter: f64,
) -> Result<(f64, Interpolant)> {
    f.check(nodes)?;
    f.check(eval_points)?;
    if eval_points.is_empty() || nodes.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let values: alloc::vec::Vec<f64> = nodes.iter().map(|u| f.eval(u)).collect();
    let surrogate = interpolate::fit(spec, nodes, &values, jitter)?;
    let residual_mean = eval_points
        .iter()
        .map(|v| f.eval(v) - surrogate.evaluate_unchecked(v))
        .sum::<f64>()
        / eval_points.len() as f64;
    Ok((surrogate.exact_integral() + residual_mean, surrogate))
}

/// Folded CF estimator: the average runs over `b(z_n + shift)` where `b` is
/// the baker's transformation.
pub fn cf_estimate_folded<F: Fn(&[f64]) -> f64>(
    f: &Integrand<F>,
    nodes: &PointSet,
    lattice_points: &PointSet,
    shift: &Point,
    spec: &KernelSpec,
    jitter: f64,
) -> Result<f64> {
    let folded = baker_fold(&random_shift(lattice_points, shift)?);
    cf_estimate(f, nodes, &folded, spec, jitter).map(|(e, _)| e)
}

/// Squared worst-case error below which a negative value is treated as
/// cancellation noise.
pub const WCE_CLAMP: f64 = 1e-14;

/// Worst-case error of the equal-weight rule on `ps` in the kernel's RKHS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCaseError {
    pub value: f64,
    /// The squared error before clamping.
    pub squared_raw: f64,
    /// Set when the raw square was more negative than `-WCE_CLAMP`.
    pub suspicious: bool,
}

/// Closed-form worst-case error
/// `e^2 = iint K - (2/N) sum_n int K(x_n, .) + (1/N^2) sum_{m,n} K(x_n, x_m)`.
pub fn worst_case_error_detailed(spec: &KernelSpec, ps: &PointSet) -> Result<WorstCaseError> {
    if ps.dim() != spec.dim {
        return Err(Error::DimensionMismatch {
            expected: spec.dim,
            found: ps.dim(),
        });
    }
    if ps.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let n = ps.len() as f64;
    let single: f64 = ps.iter().map(|x| spec.integral_unchecked(x)).sum();
    let mut pairs = 0.0;
    for i in 0..ps.len() {
        let xi = ps.point(i);
        let mut row = 0.0;
        for j in 0..i {
            row += spec.eval_unchecked(xi, ps.point(j));
        }
        pairs += 2.0 * row + 1.0;
    }
    let squared_raw = spec.double_integral() - 2.0 * single / n + pairs / (n * n);
    let suspicious = squared_raw < -WCE_CLAMP;
    Ok(WorstCaseError {
        value: math::sqrt(squared_raw.max(0.0)),
        squared_raw,
        suspicious,
    })
}

pub fn worst_case_error(spec: &KernelSpec, ps: &PointSet) -> Result<f64> {
    worst_case_error_detailed(spec, ps).map(|w| w.value)
}

/// Asymptotically optimal fraction of the budget spent on fitting nodes,
/// `(alpha - alpha_L) / alpha`.
pub fn optimal_split(alpha: f64, alpha_l: f64) -> Result<f64> {
    if !(alpha_l > 0.0) {
        return Err(invalid("alpha_L", "must be positive"));
    }
    if !(alpha > alpha_l) || !alpha.is_finite() {
        return Err(Error::SplitUndefined { alpha, alpha_l });
    }
    Ok((alpha - alpha_l) / alpha)
}

/// How an evaluation budget is divided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetSplit {
    pub n_total: usize,
    /// Grid nodes per axis.
    pub per_axis: usize,
    /// Fitting nodes, `per_axis^dim`.
    pub nodes: usize,
    /// Averaging points.
    pub eval: usize,
    /// Budget not spent because the node count was snapped to a grid.
    pub discarded: usize,
}

impl BudgetSplit {
    /// Node count before snapping to the grid.
    pub fn nodes_before_snap(&self) -> usize {
        self.nodes + self.discarded
    }
}

/// Largest `m` with `m^dim <= value`.
pub fn integer_root(value: usize, dim: usize) -> usize {
    if dim == 1 || value == 0 {
        return value;
    }
    let mut m = math::floor(math::pow(value as f64, 1.0 / dim as f64)) as usize;
    let fits = |m: usize| {
        u32::try_from(dim)
            .ok()
            .and_then(|d| m.checked_pow(d))
            .is_some_and(|p| p <= value)
    };
    while m > 0 && !fits(m) {
        m -= 1;
    }
    while fits(m + 1) {
        m += 1;
    }
    m
}

/// Splits `n_total` evaluations into grid nodes and averaging points.
///
/// With `pow2_eval`, the averaging set is the largest power of two not
/// exceeding `(1 - fraction) n_total` and the nodes take the rest. Without
/// it, the node count is `round(fraction n_total)`. Either way the node
/// count is then snapped down to `m^dim` and the difference is reported as
/// discarded.
pub fn split_budget(
    n_total: usize,
    fraction: f64,
    pow2_eval: bool,
    dim: usize,
) -> Result<BudgetSplit> {
    if n_total < 4 {
        return Err(Error::BudgetTooSmall { budget: n_total });
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(invalid("split fraction", "must lie in (0, 1)"));
    }
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    let (raw_nodes, eval) = if pow2_eval {
        let target = math::floor((1.0 - fraction) * n_total as f64) as usize;
        if target == 0 {
            return Err(Error::BudgetTooSmall { budget: n_total });
        }
        let eval = 1usize << (usize::BITS - 1 - target.leading_zeros());
        (n_total - eval, eval)
    } else {
        let nodes = (math::round(fraction * n_total as f64) as usize).clamp(1, n_total - 1);
        (nodes, n_total - nodes)
    };
    let per_axis = integer_root(raw_nodes, dim);
    if per_axis == 0 {
        return Err(Error::BudgetTooSmall { budget: n_total });
    }
    let nodes = per_axis.pow(dim as u32);
    Ok(BudgetSplit {
        n_total,
        per_axis,
        nodes,
        eval,
        discarded: raw_nodes - nodes,
    })
}
