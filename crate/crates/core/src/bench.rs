//! Convergence campaigns over Genz integrands.
//!
//! A campaign is a grid of cells `(family, dim, method, k)` evaluated at
//! every budget `N` in the grid, each replicated `R` times. Work is split
//! into [`Job`]s, one per `(family, dim, replicate)`: a job draws the
//! integrand instance and the randomization once and runs every method and
//! budget against them, so that QMC and QMC+CF in the same replicate see the
//! same shift. [`aggregate`] reduces job output in canonical order, so the
//! table does not depend on the order in which jobs ran.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::estimators::{
    cf_estimate, optimal_split, qmc_estimate, split_budget, EstimateReport, Integrand, Method,
};
use crate::genz::{random_genz, GenzFamily, GenzInstance};
use crate::interpolate::default_jitter;
use crate::kernels::{KernelSpec, Smoothness};
use crate::math;
use crate::points::{
    baker_fold, golden_lattice_generator, halton, lattice, midpoint_grid, random_shift,
    sobol_with_shift, DirectionTable, Point, PointSet,
};
use crate::rng;

/// Fewest usable grid points for a reported slope.
pub const MIN_SLOPE_POINTS: usize = 4;

const LABEL_INSTANCE: u64 = 0x1257;
const LABEL_SHIFT: u64 = 0x5817;
const LABEL_MC: u64 = 0x3c;

/// The low-discrepancy construction and its randomization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sequence {
    /// Reverse-radix scrambled Halton plus a uniform shift modulo one.
    HaltonRrShift,
    /// Sobol with a random digital shift.
    SobolDshift,
    /// Rank-1 lattice plus a uniform shift modulo one.
    Lattice,
}

impl Sequence {
    pub const ALL: [Sequence; 3] = [
        Sequence::HaltonRrShift,
        Sequence::SobolDshift,
        Sequence::Lattice,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Sequence::HaltonRrShift => "halton-rr-shift",
            Sequence::SobolDshift => "sobol-dshift",
            Sequence::Lattice => "lattice",
        }
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Sequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Sequence::ALL
            .into_iter()
            .find(|q| q.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid("sequence", String::from(s)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub families: Vec<GenzFamily>,
    pub dims: Vec<usize>,
    pub methods: Vec<Method>,
    pub sequence: Sequence,
    pub k_values: Vec<Smoothness>,
    pub support_radius: f64,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    /// Smoothness assumed for the integrand; when set, the node fraction is
    /// `optimal_split(alpha, 1)` instead of one half.
    pub assumed_alpha: Option<f64>,
    pub seed_base: u64,
    /// Per-family overrides of the total difficulty `sum a_i`.
    pub difficulty: BTreeMap<GenzFamily, f64>,
}

impl CampaignConfig {
    /// A single-cell campaign with the usual defaults: Halton, `k = 1`,
    /// unit support, `N = 2^4..2^12`, ten replicates.
    pub fn new(
        families: Vec<GenzFamily>,
        dims: Vec<usize>,
        methods: Vec<Method>,
        seed_base: u64,
    ) -> Self {
        CampaignConfig {
            families,
            dims,
            methods,
            sequence: Sequence::HaltonRrShift,
            k_values: vec![Smoothness::K1],
            support_radius: 1.0,
            n_grid: (4..=12).map(|e| 1usize << e).collect(),
            replicates: 10,
            assumed_alpha: None,
            seed_base,
            difficulty: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(invalid("families", "at least one family is needed"));
        }
        if self.methods.is_empty() {
            return Err(invalid("methods", "at least one method is needed"));
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(invalid("dims", "need at least one positive dimension"));
        }
        if self.methods.iter().any(|m| m.uses_cf()) && self.k_values.is_empty() {
            return Err(invalid(
                "k_values",
                "CF methods need at least one kernel smoothness",
            ));
        }
        if !(self.support_radius > 0.0 && self.support_radius <= 1.0) {
            return Err(invalid("support_radius", "must lie in (0, 1]"));
        }
        if self.n_grid.is_empty() {
            return Err(invalid("n_grid", "at least one budget is needed"));
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| !n.is_power_of_two() || n < 4) {
            return Err(invalid(
                "n_grid",
                alloc::format!("{n} is not a power of two >= 4"),
            ));
        }
        if self.replicates < 2 {
            return Err(invalid(
                "replicates",
                "need at least two for a standard error",
            ));
        }
        self.split_fraction()?;
        for (family, &d) in self.difficulty.iter() {
            if !(d > 0.0 && d.is_finite()) {
                return Err(invalid(
                    "difficulty",
                    alloc::format!("{family}: must be positive"),
                ));
            }
        }
        if self.sequence == Sequence::SobolDshift {
            let available = DirectionTable::builtin().dims();
            if let Some(&d) = self.dims.iter().find(|&&d| d > available) {
                return Err(Error::DirectionTableDimensions {
                    requested: d,
                    available,
                });
            }
        }
        Ok(())
    }

    /// Fraction of the budget spent on fitting nodes.
    pub fn split_fraction(&self) -> Result<f64> {
        match self.assumed_alpha {
            Some(alpha) => optimal_split(alpha, 1.0),
            None => Ok(0.5),
        }
    }

    pub fn difficulty_for(&self, family: GenzFamily) -> f64 {
        self.difficulty
            .get(&family)
            .copied()
            .unwrap_or_else(|| family.default_difficulty())
    }

    /// Every `(method, k)` pair run per budget. Plain methods have no `k`.
    pub fn method_variants(&self) -> Vec<(Method, Option<Smoothness>)> {
        let mut out = Vec::new();
        for &m in &self.methods {
            if m.uses_cf() {
                out.extend(self.k_values.iter().map(|&k| (m, Some(k))));
            } else {
                out.push((m, None));
            }
        }
        out
    }

    pub fn jobs(&self) -> Vec<Job> {
        let mut jobs = Vec::new();
        for &family in &self.families {
            for &dim in &self.dims {
                for replicate in 0..self.replicates {
                    jobs.push(Job {
                        family,
                        dim,
                        replicate,
                    });
                }
            }
        }
        jobs
    }
}

/// One `(family, dim, replicate)` work item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Job {
    pub family: GenzFamily,
    pub dim: usize,
    pub replicate: usize,
}

/// Identifies a table row up to the budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellKey {
    pub family: GenzFamily,
    pub dim: usize,
    pub method: Method,
    pub k: Option<Smoothness>,
}

impl CellKey {
    /// Canonical ordering: textual tags first, then dimension.
    fn sort_key(&self) -> (&'static str, usize, &'static str, i64) {
        (
            self.family.tag(),
            self.dim,
            self.method.tag(),
            self.k.map_or(-1, |k| k.index() as i64),
        )
    }

    /// `"-"` for plain methods.
    pub fn k_label(&self) -> String {
        self.k.map_or_else(|| "-".into(), |k| k.index().to_string())
    }
}

impl PartialOrd for CellKey {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CellKey {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

/// Result of one method at one budget in one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub key: CellKey,
    pub n_total: usize,
    pub replicate: usize,
    pub m_nodes: usize,
    pub discarded: usize,
    /// Integrand evaluations actually spent.
    pub evaluations: u64,
    /// The shared randomization, as a point of `[0, 1)^d`. Digital shifts
    /// are logged as `word / 2^32`. Empty for plain Monte Carlo.
    pub randomization: Vec<f64>,
    /// `estimate - exact`, or the error message if the run failed.
    pub outcome: core::result::Result<f64, String>,
}

fn instance_for(cfg: &CampaignConfig, job: &Job) -> Result<GenzInstance> {
    let seed = rng::derive_seed(
        cfg.seed_base,
        &[
            LABEL_INSTANCE,
            job.family as u64,
            job.dim as u64,
            job.replicate as u64,
        ],
    );
    random_genz(job.family, job.dim, seed, cfg.difficulty_for(job.family))
}

/// The randomization shared by all QMC-type methods in a job.
enum SharedShift {
    Uniform(Point),
    Digital(Vec<u32>),
}

impl SharedShift {
    fn draw(cfg: &CampaignConfig, job: &Job) -> SharedShift {
        let mut r = rng::stream(
            cfg.seed_base,
            &[
                LABEL_SHIFT,
                job.family as u64,
                job.dim as u64,
                job.replicate as u64,
            ],
        );
        match cfg.sequence {
            Sequence::SobolDshift => {
                SharedShift::Digital((0..job.dim).map(|_| r.gen::<u32>()).collect())
            }
            _ => SharedShift::Uniform(Point::uniform(job.dim, &mut r)),
        }
    }

    fn log(&self) -> Vec<f64> {
        match self {
            SharedShift::Uniform(p) => p.coords().to_vec(),
            SharedShift::Digital(w) => w.iter().map(|&x| x as f64 / 4_294_967_296.0).collect(),
        }
    }

    /// The uniform part used by the folded lattice; a digital shift is
    /// reinterpreted as a point of the cube.
    fn as_point(&self) -> Point {
        match self {
            SharedShift::Uniform(p) => p.clone(),
            SharedShift::Digital(_) => Point::new(self.log()).expect("words map into [0, 1)"),
        }
    }
}

fn qmc_points(seq: Sequence, n: usize, dim: usize, shift: &SharedShift) -> Result<PointSet> {
    match (seq, shift) {
        (Sequence::SobolDshift, SharedShift::Digital(words)) => {
            sobol_with_shift(n, dim, &DirectionTable::builtin(), words)
        }
        (Sequence::Lattice, SharedShift::Uniform(p)) => {
            random_shift(&lattice(n, &golden_lattice_generator(n, dim))?, p)
        }
        (_, s) => random_shift(&halton(n, dim, true)?, &s.as_point()),
    }
}

struct RunOutput {
    estimate: f64,
    m_nodes: usize,
    discarded: usize,
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    cfg: &CampaignConfig,
    job: &Job,
    instance: &GenzInstance,
    shift: &SharedShift,
    method: Method,
    k: Option<Smoothness>,
    n: usize,
    f: &Integrand<impl Fn(&[f64]) -> f64>,
) -> Result<RunOutput> {
    let dim = job.dim;
    let mc_stream = || {
        rng::stream(
            cfg.seed_base,
            &[
                LABEL_MC,
                instance.family() as u64,
                dim as u64,
                job.replicate as u64,
                n as u64,
            ],
        )
    };
    let plain = |estimate| RunOutput {
        estimate,
        m_nodes: 0,
        discarded: 0,
    };
    match method {
        Method::Mc => {
            let ps = PointSet::uniform(n, dim, &mut mc_stream())?;
            qmc_estimate(f, &ps).map(plain)
        }
        Method::Qmc => qmc_estimate(f, &qmc_points(cfg.sequence, n, dim, shift)?).map(plain),
        Method::QmcCf | Method::QmcCfFolded | Method::McCf => {
            let k = k.ok_or_else(|| invalid("k", "CF methods need a kernel smoothness"))?;
            let split = split_budget(n, cfg.split_fraction()?, true, dim)?;
            let nodes = midpoint_grid(split.per_axis, dim)?;
            let eval = match method {
                Method::QmcCf => qmc_points(cfg.sequence, split.eval, dim, shift)?,
                Method::QmcCfFolded => {
                    let lat = lattice(split.eval, &golden_lattice_generator(split.eval, dim))?;
                    baker_fold(&random_shift(&lat, &shift.as_point())?)
                }
                _ => PointSet::uniform(split.eval, dim, &mut mc_stream())?,
            };
            let spec = KernelSpec::new(k, dim, cfg.support_radius)?;
            let (estimate, _) = cf_estimate(f, &nodes, &eval, &spec, default_jitter(split.nodes))?;
            Ok(RunOutput {
                estimate,
                m_nodes: split.nodes,
                discarded: split.discarded,
            })
        }
    }
}

/// Runs one method at one budget for a job, without the campaign-level
/// validation. `n` need not be a power of two for the plain methods.
pub fn run_single(
    cfg: &CampaignConfig,
    job: &Job,
    method: Method,
    k: Option<Smoothness>,
    n: usize,
) -> Result<(GenzInstance, EstimateReport)> {
    let instance = instance_for(cfg, job)?;
    let shift = SharedShift::draw(cfg, job);
    let f = Integrand::new(job.dim, |x: &[f64]| instance.eval(x));
    let r = run_one(cfg, job, &instance, &shift, method, k, n, &f)?;
    let report = EstimateReport {
        method,
        estimate: r.estimate,
        n_total: n,
        m_nodes: r.m_nodes,
        discarded: r.discarded,
        seed: cfg.seed_base,
        wall_time_secs: None,
    };
    debug_assert_eq!(f.eval_count() as usize, report.evaluations());
    Ok((instance, report))
}

/// Runs every method and budget of one job. Failures are recorded, not
/// propagated.
pub fn run_job(cfg: &CampaignConfig, job: &Job) -> Vec<ReplicateRecord> {
    let variants = cfg.method_variants();
    let mut out = Vec::with_capacity(variants.len() * cfg.n_grid.len());
    let instance = instance_for(cfg, job);
    let shift = SharedShift::draw(cfg, job);
    for &(method, k) in &variants {
        let key = CellKey {
            family: job.family,
            dim: job.dim,
            method,
            k,
        };
        let randomization = if method == Method::Mc || method == Method::McCf {
            Vec::new()
        } else {
            shift.log()
        };
        for &n in &cfg.n_grid {
            let mut record = ReplicateRecord {
                key,
                n_total: n,
                replicate: job.replicate,
                m_nodes: 0,
                discarded: 0,
                evaluations: 0,
                randomization: randomization.clone(),
                outcome: Err(String::new()),
            };
            match &instance {
                Err(e) => record.outcome = Err(e.to_string()),
                Ok(inst) => {
                    let f = Integrand::new(job.dim, |x: &[f64]| inst.eval(x));
                    match run_one(cfg, job, inst, &shift, method, k, n, &f) {
                        Ok(r) => {
                            record.m_nodes = r.m_nodes;
                            record.discarded = r.discarded;
                            record.outcome = if r.estimate.is_finite() {
                                Ok(r.estimate - inst.exact())
                            } else {
                                Err("non-finite estimate".into())
                            };
                        }
                        Err(e) => record.outcome = Err(e.to_string()),
                    }
                    record.evaluations = f.eval_count();
                }
            }
            out.push(record);
        }
    }
    out
}

/// A row of the convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub key: CellKey,
    pub support_radius: f64,
    pub sequence: Sequence,
    pub n_total: usize,
    pub m_nodes: usize,
    /// Replicates that succeeded and entered the statistics.
    pub replicates: usize,
    pub rmse: f64,
    /// Delta-method standard error of the RMSE.
    pub stderr: f64,
    pub mean_error: f64,
    pub seed_base: u64,
    pub failures: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in `log2` units.
    pub residual: f64,
    /// Points dropped because their RMSE was zero.
    pub excluded: usize,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeRow {
    pub key: CellKey,
    pub fit: SlopeFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub key: CellKey,
    pub n_total: usize,
    pub replicate: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub slopes: Vec<SlopeRow>,
    pub failures: Vec<Failure>,
    /// All replicate records in canonical order.
    pub records: Vec<ReplicateRecord>,
}

impl ConvergenceTable {
    pub fn slope(&self, key: &CellKey) -> Option<&SlopeFit> {
        self.slopes.iter().find(|s| &s.key == key).map(|s| &s.fit)
    }

    pub fn rows_for(&self, key: &CellKey) -> impl Iterator<Item = &ConvergenceRow> + '_ {
        let key = *key;
        self.rows.iter().filter(move |r| r.key == key)
    }
}

/// Ordinary least squares of `log2 rmse` on `log2 N`. Points with zero
/// RMSE are dropped and counted in `excluded`.
pub fn fit_slope(points: &[(usize, f64)]) -> Result<SlopeFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|&(n, e)| (math::log2(n as f64), math::log2(e)))
        .collect();
    let excluded = points.len() - usable.len();
    if usable.len() < 2 {
        return Err(Error::TooFewPoints(usable.len()));
    }
    let m = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / m;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(invalid("points", "all budgets are equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = usable
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    Ok(SlopeFit {
        slope,
        intercept,
        residual: math::sqrt(sse / m),
        excluded,
        points: usable.len(),
    })
}

/// Reduces replicate records into the convergence table. The result does
/// not depend on the order of `records`.
pub fn aggregate(cfg: &CampaignConfig, mut records: Vec<ReplicateRecord>) -> ConvergenceTable {
    records.sort_by_key(|r| (r.key, r.n_total, r.replicate));
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut start = 0;
    while start < records.len() {
        let head = &records[start];
        let end = start
            + records[start..]
                .iter()
                .take_while(|r| r.key == head.key && r.n_total == head.n_total)
                .count();
        let group = &records[start..end];
        let errors: Vec<f64> = group
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().copied())
            .collect();
        for r in group {
            if let Err(message) = &r.outcome {
                failures.push(Failure {
                    key: r.key,
                    n_total: r.n_total,
                    replicate: r.replicate,
                    message: message.clone(),
                });
            }
        }
        let (rmse, stderr, mean_error) = summarize(&errors);
        rows.push(ConvergenceRow {
            key: head.key,
            support_radius: cfg.support_radius,
            sequence: cfg.sequence,
            n_total: head.n_total,
            m_nodes: group.iter().map(|r| r.m_nodes).max().unwrap_or(0),
            replicates: errors.len(),
            rmse,
            stderr,
            mean_error,
            seed_base: cfg.seed_base,
            failures: group.len() - errors.len(),
        });
        start = end;
    }

    let mut slopes = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let key = rows[i].key;
        let cell: Vec<(usize, f64)> = rows[i..]
            .iter()
            .take_while(|r| r.key == key)
            .filter(|r| r.replicates > 0)
            .map(|r| (r.n_total, r.rmse))
            .collect();
        i += rows[i..].iter().take_while(|r| r.key == key).count();
        if let Ok(fit) = fit_slope(&cell) {
            if fit.points >= MIN_SLOPE_POINTS {
                slopes.push(SlopeRow { key, fit });
            }
        }
    }
    ConvergenceTable {
        rows,
        slopes,
        failures,
        records,
    }
}

/// `(rmse, stderr of rmse, mean error)`; NaN when there are no errors.
fn summarize(errors: &[f64]) -> (f64, f64, f64) {
    if errors.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let r = errors.len() as f64;
    let mean_error = errors.iter().sum::<f64>() / r;
    let squares: Vec<f64> = errors.iter().map(|e| e * e).collect();
    let mse = squares.iter().sum::<f64>() / r;
    let rmse = math::sqrt(mse);
    let stderr = if errors.len() < 2 || rmse == 0.0 {
        0.0
    } else {
        let var = squares.iter().map(|s| (s - mse) * (s - mse)).sum::<f64>() / (r - 1.0);
        math::sqrt(var / r) / (2.0 * rmse)
    };
    (rmse, stderr, mean_error)
}

/// Runs the whole campaign serially.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<ConvergenceTable> {
    cfg.validate()?;
    let records = cfg
        .jobs()
        .iter()
        .flat_map(|job| run_job(cfg, job))
        .collect();
    Ok(aggregate(cfg, records))
}
