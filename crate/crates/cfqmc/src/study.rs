//! Parallel drivers for bench campaigns and the GP prediction study.
//!
//! Both split the work into independent items, run them on the rayon pool
//! and sort the results into canonical order, so output does not depend on
//! the number of threads.

use std::fmt::Write as _;

use rayon::prelude::*;

use cfqmc_core::bench::{aggregate, run_job, CampaignConfig, ConvergenceTable};
use cfqmc_core::gp::{marginal_prediction, Dataset, GpConfig};
use cfqmc_core::rng::derive_seed;
use cfqmc_core::Method;

use crate::error::Result;
use crate::formats::fmt_f64;

/// Same result as `cfqmc_core::bench::run_campaign`, with jobs run in
/// parallel.
pub fn run_campaign_parallel(cfg: &CampaignConfig) -> Result<ConvergenceTable> {
    cfg.validate()?;
    let records = cfg
        .jobs()
        .par_iter()
        .flat_map_iter(|job| run_job(cfg, job))
        .collect();
    Ok(aggregate(cfg, records))
}

/// Marginal GP predictions at several test inputs, replicated over seeds.
#[derive(Debug, Clone)]
pub struct GpStudy {
    pub data: Dataset,
    pub config: GpConfig,
    pub subset: Vec<usize>,
    pub test_points: Vec<Vec<f64>>,
    pub methods: Vec<Method>,
    pub budget: usize,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub test_index: usize,
    pub method: Method,
    pub n_total: usize,
    pub seed: u64,
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadSummary {
    pub test_index: usize,
    pub method: Method,
    /// Sample standard deviation of the estimates over seeds.
    pub sd_over_seeds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpResults {
    pub predictions: Vec<Prediction>,
    pub summaries: Vec<SpreadSummary>,
}

impl GpStudy {
    /// Seed actually handed to the estimator for a test point; every
    /// method sees the same one, so QMC and QMC+CF share their shift.
    pub fn point_seed(seed: u64, test_index: usize) -> u64 {
        derive_seed(seed, &[test_index as u64])
    }

    pub fn run(&self) -> Result<GpResults> {
        let items: Vec<(usize, Method, u64)> = (0..self.test_points.len())
            .flat_map(|t| {
                self.methods
                    .iter()
                    .flat_map(move |&m| self.seeds.iter().map(move |&s| (t, m, s)))
            })
            .collect();
        let predictions = items
            .par_iter()
            .map(|&(t, method, seed)| {
                let report = marginal_prediction(
                    &self.data,
                    &self.config,
                    &self.subset,
                    &self.test_points[t],
                    method,
                    self.budget,
                    Self::point_seed(seed, t),
                )?;
                Ok(Prediction {
                    test_index: t,
                    method,
                    n_total: self.budget,
                    seed,
                    estimate: report.estimate,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let summaries = summarize(&predictions);
        Ok(GpResults {
            predictions,
            summaries,
        })
    }
}

fn summarize(predictions: &[Prediction]) -> Vec<SpreadSummary> {
    let mut out: Vec<SpreadSummary> = Vec::new();
    let mut i = 0;
    while i < predictions.len() {
        let (t, m) = (predictions[i].test_index, predictions[i].method);
        let group: Vec<f64> = predictions[i..]
            .iter()
            .take_while(|p| p.test_index == t && p.method == m)
            .map(|p| p.estimate)
            .collect();
        i += group.len();
        let n = group.len() as f64;
        let mean = group.iter().sum::<f64>() / n;
        let sd = if group.len() > 1 {
            (group.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        out.push(SpreadSummary {
            test_index: t,
            method: m,
            sd_over_seeds: sd,
        });
    }
    out
}

pub fn predictions_csv(results: &GpResults) -> String {
    let mut s = String::from("test_index,method,N,seed,estimate\n");
    for p in &results.predictions {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            p.test_index,
            p.method.tag(),
            p.n_total,
            p.seed,
            fmt_f64(p.estimate)
        );
    }
    s
}

pub fn summary_csv(results: &GpResults) -> String {
    let mut s = String::from("test_index,method,sd_over_seeds\n");
    for r in &results.summaries {
        let _ = writeln!(
            s,
            "{},{},{}",
            r.test_index,
            r.method.tag(),
            fmt_f64(r.sd_over_seeds)
        );
    }
    s
}
