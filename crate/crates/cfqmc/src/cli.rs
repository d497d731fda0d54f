//! The `cfqmc` command line.
//!
//! Exit status is 0 on success, 1 for usage errors (bad flags, malformed
//! input files, unknown config keys) and 2 for failures while running.
//! Every subcommand prints its resolved configuration, seeds included, as
//! `# key: value` lines before any result.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cfqmc_core::bench::{run_campaign, run_single, CampaignConfig, Job, Sequence};
use cfqmc_core::estimators::worst_case_error_detailed;
use cfqmc_core::gp::{choose_subset, synthetic_problem, GpConfig};
use cfqmc_core::points::{
    baker_fold, default_fill_resolution, geometry, golden_lattice_generator, halton, lattice,
    midpoint_grid, random_shift, sobol, DirectionTable, Point, PointSet,
};
use cfqmc_core::rng::stream;
use cfqmc_core::{GenzFamily, KernelSpec, Method, Smoothness};

use crate::config::{load_campaign_config, render_campaign_config};
use crate::data::load_dataset;
use crate::error::{Error, Result};
use crate::formats::{emit, genz_csv, load_direction_table, load_points, points_csv, write_file};
use crate::report::{bench_csv, bench_svg, legend_label};
use crate::study::{predictions_csv, run_campaign_parallel, summary_csv, GpStudy};

#[derive(Debug, Parser)]
#[command(
    name = "cfqmc",
    version,
    about = "Quasi-Monte Carlo integration with kernel control functionals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a point set and write it as CSV.
    Points(PointsArgs),
    /// Worst-case error of the equal-weight rule on a point set.
    Wce(WceArgs),
    /// Integrate one Genz instance with one method.
    Integrate(IntegrateArgs),
    /// Run a convergence campaign from a config file.
    Bench(BenchArgs),
    /// Marginal GP predictions with hyper-parameters integrated out.
    Gp(GpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeqKind {
    Halton,
    Sobol,
    Lattice,
    Grid,
    Uniform,
}

#[derive(Debug, Args)]
pub struct PointsArgs {
    #[arg(long, value_enum)]
    pub seq: SeqKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub dim: usize,
    #[command(flatten)]
    pub randomize: RandomizeArgs,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also print fill distance, separation radius and mesh ratio.
    #[arg(long)]
    pub metrics: bool,
    /// Grid resolution per axis for the fill distance.
    #[arg(long)]
    pub fill_resolution: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RandomizeArgs {
    /// Reverse-radix permutation for Halton, digital shift for Sobol.
    #[arg(long)]
    pub scramble: bool,
    /// Seed for the Sobol digital shift and for uniform points.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Add a uniform random shift modulo one drawn from this seed.
    #[arg(long)]
    pub shift_seed: Option<u64>,
    /// Apply the baker's transformation after the shift.
    #[arg(long)]
    pub fold: bool,
    /// Sobol direction-number file instead of the built-in table.
    #[arg(long)]
    pub directions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WceArgs {
    /// Point CSV to evaluate.
    #[arg(long = "in", conflicts_with_all = ["seq", "n", "dim"])]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, required_unless_present = "input")]
    pub seq: Option<SeqKind>,
    #[arg(long, required_unless_present = "input")]
    pub n: Option<usize>,
    #[arg(long, required_unless_present = "input")]
    pub dim: Option<usize>,
    #[command(flatten)]
    pub randomize: RandomizeArgs,
    #[arg(long, default_value_t = 1)]
    pub kernel_k: u32,
    #[arg(long, default_value_t = 1.0)]
    pub support: f64,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    #[arg(long, value_parser = parse_family)]
    pub family: GenzFamily,
    #[arg(long)]
    pub dim: usize,
    #[arg(long, value_parser = parse_method)]
    pub method: Method,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    #[arg(long, default_value_t = 1.0)]
    pub support: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "halton-rr-shift", value_parser = parse_sequence)]
    pub seq: Sequence,
    /// Assumed integrand smoothness; sets the node fraction.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Total difficulty `sum a_i`; the family default when omitted.
    #[arg(long)]
    pub difficulty: Option<f64>,
    /// Write the report row as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the drawn Genz instance as CSV.
    #[arg(long)]
    pub instance_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Run jobs on one thread.
    #[arg(long)]
    pub serial: bool,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["data", "synthetic"])))]
pub struct GpArgs {
    /// Dataset CSV: covariates, then the response.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Use the built-in synthetic regression problem.
    #[arg(long)]
    pub synthetic: bool,
    #[arg(long, default_value_t = 20)]
    pub n_test: usize,
    #[arg(long, value_delimiter = ',', default_value = "QMC,QMC+CF,MC+CF", value_parser = parse_method)]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 256)]
    pub budget: usize,
    /// Replicate seeds: `1..10` or a comma list.
    #[arg(long, value_parser = parse_seeds)]
    pub seeds: SeedList,
    /// Seed for the synthetic data, training subset and SoR subset.
    #[arg(long)]
    pub data_seed: u64,
    /// Training rows (synthetic size, or cap on rows read from --data).
    #[arg(long, default_value_t = 200)]
    pub n_train: usize,
    /// Covariate dimension of the synthetic problem.
    #[arg(long, default_value_t = 12)]
    pub p: usize,
    #[arg(long, default_value_t = 50)]
    pub n_subset: usize,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

fn parse_family(s: &str) -> std::result::Result<GenzFamily, String> {
    s.parse().map_err(|e: cfqmc_core::Error| e.to_string())
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: cfqmc_core::Error| e.to_string())
}

fn parse_sequence(s: &str) -> std::result::Result<Sequence, String> {
    s.parse().map_err(|e: cfqmc_core::Error| e.to_string())
}

fn parse_seeds(s: &str) -> std::result::Result<SeedList, String> {
    let bad = || format!("expected `a..b` or a comma list of integers, got `{s}`");
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok(SeedList((a..=b).collect()));
    }
    let seeds = s
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| bad()))
        .collect::<std::result::Result<Vec<u64>, String>>()?;
    Ok(SeedList(seeds))
}

/// Writes one line to standard output. A closed pipe (as in `| head`) ends
/// the process quietly instead of panicking.
macro_rules! say {
    ($($arg:tt)*) => {
        write_stdout(format_args!($($arg)*), true)
    };
}

fn write_stdout(args: std::fmt::Arguments<'_>, newline: bool) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let written = out.write_fmt(args).and_then(|()| {
        if newline {
            out.write_all(b"\n")
        } else {
            Ok(())
        }
    });
    if let Err(e) = written {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: cannot write to standard output: {e}");
        std::process::exit(2);
    }
}

fn show(key: &str, value: impl std::fmt::Display) {
    say!("# {key}: {value}");
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".into(), |x| x.to_string())
}

fn generate(seq: SeqKind, n: usize, dim: usize, r: &RandomizeArgs) -> Result<PointSet> {
    if n == 0 || dim == 0 {
        return Err(Error::Usage("--n and --dim must be positive".into()));
    }
    let ps = match seq {
        SeqKind::Halton => halton(n, dim, r.scramble)?,
        SeqKind::Sobol => {
            let table = match &r.directions {
                Some(p) => load_direction_table(p)?,
                None => DirectionTable::builtin(),
            };
            if r.scramble && r.seed.is_none() {
                return Err(Error::Usage(
                    "--scramble with --seq sobol needs --seed".into(),
                ));
            }
            sobol(n, dim, &table, r.scramble, r.seed)?
        }
        SeqKind::Lattice => lattice(n, &golden_lattice_generator(n, dim))?,
        SeqKind::Grid => {
            let m = cfqmc_core::estimators::integer_root(n, dim);
            if m.checked_pow(dim as u32) != Some(n) {
                return Err(Error::Usage(format!("--seq grid needs --n = m^{dim}")));
            }
            midpoint_grid(m, dim)?
        }
        SeqKind::Uniform => {
            let seed = r
                .seed
                .ok_or_else(|| Error::Usage("--seq uniform needs --seed".into()))?;
            PointSet::uniform(n, dim, &mut stream(seed, &[0x0f])).map(|p| p.with_seed(seed))?
        }
    };
    let ps = match r.shift_seed {
        Some(s) => random_shift(&ps, &Point::uniform(dim, &mut stream(s, &[0x5f])))
            .map(|p| p.with_seed(s))?,
        None => ps,
    };
    Ok(if r.fold { baker_fold(&ps) } else { ps })
}

fn show_randomization(seq: SeqKind, n: usize, dim: usize, r: &RandomizeArgs) {
    show("seq", format!("{seq:?}").to_lowercase());
    show("n", n);
    show("dim", dim);
    show("scramble", r.scramble);
    show("seed", opt(&r.seed));
    show("shift_seed", opt(&r.shift_seed));
    show("fold", r.fold);
    show(
        "directions",
        r.directions
            .as_ref()
            .map_or_else(|| "builtin".into(), |p| p.display().to_string()),
    );
}

fn cmd_points(a: &PointsArgs) -> Result<()> {
    say!("# command: points");
    show_randomization(a.seq, a.n, a.dim, &a.randomize);
    show(
        "out",
        a.out
            .as_ref()
            .map_or_else(|| "stdout".into(), |p| p.display().to_string()),
    );
    let ps = generate(a.seq, a.n, a.dim, &a.randomize)?;
    show("randomization", ps.provenance().randomization_name());
    if a.metrics {
        let res = a
            .fill_resolution
            .unwrap_or_else(|| default_fill_resolution(a.dim));
        let g = geometry(&ps, res)?;
        show("fill_resolution", res);
        show("fill_distance", g.fill_distance);
        show("separation_radius", g.separation_radius);
        show("mesh_ratio", opt(&g.mesh_ratio));
    }
    emit(a.out.as_deref(), &points_csv(&ps))
}

fn cmd_wce(a: &WceArgs) -> Result<()> {
    say!("# command: wce");
    let ps = match &a.input {
        Some(p) => {
            show("in", p.display());
            load_points(p)?
        }
        None => {
            // clap guarantees these when --in is absent
            let (seq, n, dim) = (a.seq.unwrap(), a.n.unwrap(), a.dim.unwrap());
            show_randomization(seq, n, dim, &a.randomize);
            generate(seq, n, dim, &a.randomize)?
        }
    };
    show("kernel_k", a.kernel_k);
    show("support", a.support);
    show("points", ps.len());
    let k = Smoothness::from_index(a.kernel_k).map_err(|e| Error::Usage(e.to_string()))?;
    let spec = KernelSpec::new(k, ps.dim(), a.support).map_err(|e| Error::Usage(e.to_string()))?;
    let w = worst_case_error_detailed(&spec, &ps)?;
    say!("wce: {}", w.value);
    say!("wce_squared_raw: {}", w.squared_raw);
    if w.suspicious {
        eprintln!(
            "warning: squared worst-case error {} is negative beyond rounding",
            w.squared_raw
        );
    }
    Ok(())
}

fn cmd_integrate(a: &IntegrateArgs) -> Result<()> {
    say!("# command: integrate");
    show("family", a.family);
    show("dim", a.dim);
    show("method", a.method);
    show("n", a.n);
    show("k", a.k);
    show("support", a.support);
    show("seed", a.seed);
    show("seq", a.seq);
    show("alpha", opt(&a.alpha));
    let difficulty = a
        .difficulty
        .unwrap_or_else(|| a.family.default_difficulty());
    show("difficulty", difficulty);
    if a.dim == 0 {
        return Err(Error::Usage("--dim must be positive".into()));
    }
    let k = Smoothness::from_index(a.k).map_err(|e| Error::Usage(e.to_string()))?;
    let mut cfg = CampaignConfig::new(vec![a.family], vec![a.dim], vec![a.method], a.seed);
    cfg.sequence = a.seq;
    cfg.k_values = vec![k];
    cfg.support_radius = a.support;
    cfg.assumed_alpha = a.alpha;
    cfg.difficulty.insert(a.family, difficulty);
    let job = Job {
        family: a.family,
        dim: a.dim,
        replicate: 0,
    };
    let k = a.method.uses_cf().then_some(k);
    let started = Instant::now();
    let (instance, report) = run_single(&cfg, &job, a.method, k, a.n)?;
    let elapsed = started.elapsed().as_secs_f64();
    let error = report.estimate - instance.exact();
    let header = "family,dim,method,k,sequence,N_total,M_nodes,discarded,evaluations,seed,estimate,exact,error";
    let row = format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        a.family.tag(),
        a.dim,
        a.method.tag(),
        k.map_or_else(|| "-".into(), |k| k.index().to_string()),
        a.seq.tag(),
        report.n_total,
        report.m_nodes,
        report.discarded,
        report.evaluations(),
        report.seed,
        crate::formats::fmt_f64(report.estimate),
        crate::formats::fmt_f64(instance.exact()),
        crate::formats::fmt_f64(error),
    );
    say!("{header}");
    say!("{row}");
    eprintln!("wall time: {elapsed:.3} s");
    if let Some(p) = &a.out {
        write_file(p, &format!("{header}\n{row}\n"))?;
    }
    if let Some(p) = &a.instance_out {
        write_file(p, &genz_csv(&instance))?;
    }
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    say!("# command: bench");
    let cfg = load_campaign_config(&a.config)?;
    for line in render_campaign_config(&cfg).lines() {
        say!("# {line}");
    }
    show("out_dir", a.out_dir.display());
    let table = if a.serial {
        run_campaign(&cfg)?
    } else {
        run_campaign_parallel(&cfg)?
    };
    write_file(&a.out_dir.join("bench.csv"), &bench_csv(&table))?;
    write_file(&a.out_dir.join("bench.svg"), &bench_svg(&table))?;
    write_file(&a.out_dir.join("config.txt"), &render_campaign_config(&cfg))?;
    for s in &table.slopes {
        say!(
            "slope {} d={} {}: {:.3} (residual {:.3})",
            s.key.family,
            s.key.dim,
            legend_label(&s.key),
            s.fit.slope,
            s.fit.residual
        );
    }
    if !table.failures.is_empty() {
        eprintln!(
            "{} replicate runs failed; see bench.csv",
            table.failures.len()
        );
    }
    Ok(())
}

fn cmd_gp(a: &GpArgs) -> Result<()> {
    say!("# command: gp");
    if let Some(m) = a.methods.iter().find(|m| **m == Method::QmcCfFolded) {
        return Err(Error::Usage(format!("method {m} is not available for gp")));
    }
    if a.seeds.0.is_empty() {
        return Err(Error::Usage("--seeds is empty".into()));
    }
    let (data, test_points, source) = match &a.data {
        Some(path) => {
            let loaded = load_dataset(path, a.n_train, a.data_seed)?;
            if loaded.held_out.len() < a.n_test {
                return Err(Error::Usage(format!(
                    "{} has {} rows left after training; --n-test is {}",
                    path.display(),
                    loaded.held_out.len(),
                    a.n_test
                )));
            }
            let st = loaded.dataset.standardization().clone();
            let tests = loaded.held_out[..a.n_test]
                .iter()
                .map(|z| st.apply(z))
                .collect();
            (loaded.dataset, tests, path.display().to_string())
        }
        None => {
            let prob = synthetic_problem(a.n_train, a.p, 0.1, a.n_test, a.data_seed)?;
            (prob.data, prob.test_points, "synthetic".to_string())
        }
    };
    let config = GpConfig {
        sigma: a.sigma,
        n_subset: a.n_subset,
        ..GpConfig::default()
    };
    config
        .validate(&data)
        .map_err(|e| Error::Usage(e.to_string()))?;
    show("data", &source);
    show("n_train", data.n());
    show("p", data.p());
    show("n_test", test_points.len());
    show("n_subset", config.n_subset);
    show("sigma", config.sigma);
    show("prior", "theta_1 ~ Gamma(2, 2), theta_2 ~ Gamma(2, 2)");
    show(
        "methods",
        a.methods
            .iter()
            .map(|m| m.tag())
            .collect::<Vec<_>>()
            .join(","),
    );
    show("budget", a.budget);
    show(
        "seeds",
        a.seeds
            .0
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    show("data_seed", a.data_seed);
    let study = GpStudy {
        subset: choose_subset(data.n(), config.n_subset, a.data_seed),
        data,
        config,
        test_points,
        methods: a.methods.clone(),
        budget: a.budget,
        seeds: a.seeds.0.clone(),
    };
    let results = study.run()?;
    let summary = summary_csv(&results);
    write_stdout(format_args!("{summary}"), false);
    if let Some(dir) = &a.out_dir {
        write_file(&dir.join("gp_predictions.csv"), &predictions_csv(&results))?;
        write_file(&dir.join("gp_summary.csv"), &summary)?;
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Points(a) => cmd_points(a),
        Command::Wce(a) => cmd_wce(a),
        Command::Integrate(a) => cmd_integrate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Gp(a) => cmd_gp(a),
    }
}

/// Parses `args`, runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
