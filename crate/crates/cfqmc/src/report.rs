//! Convergence-table output: CSV with a slope summary, and a static SVG
//! with one log-log panel per `(family, dim)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use cfqmc_core::bench::{CellKey, ConvergenceTable};
use cfqmc_core::Method;

use crate::error::{Error, Result};
use crate::formats::fmt_f64;

pub const BENCH_HEADER: &str =
    "family,dim,method,k,support_radius,sequence,N_total,M_nodes,replicates,rmse,stderr,mean_error,seed_base";
pub const SLOPE_MARKER: &str = "#slope";
pub const SLOPE_HEADER: &str = "family,dim,method,k,slope,intercept,residual";
pub const FAILURE_MARKER: &str = "#failures";
pub const FAILURE_HEADER: &str = "family,dim,method,k,N_total,replicate,error";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Rows in canonical order, then the `#slope` block and, if any replicate
/// failed, a `#failures` block. An empty table gives the header alone.
pub fn bench_csv(table: &ConvergenceTable) -> String {
    let mut s = String::new();
    s.push_str(BENCH_HEADER);
    s.push('\n');
    for r in &table.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.key.family.tag(),
            r.key.dim,
            r.key.method.tag(),
            r.key.k_label(),
            fmt_f64(r.support_radius),
            r.sequence.tag(),
            r.n_total,
            r.m_nodes,
            r.replicates,
            fmt_f64(r.rmse),
            fmt_f64(r.stderr),
            fmt_f64(r.mean_error),
            r.seed_base
        );
    }
    if !table.slopes.is_empty() {
        s.push_str(SLOPE_MARKER);
        s.push('\n');
        s.push_str(SLOPE_HEADER);
        s.push('\n');
        for sl in &table.slopes {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                sl.key.family.tag(),
                sl.key.dim,
                sl.key.method.tag(),
                sl.key.k_label(),
                fmt_f64(sl.fit.slope),
                fmt_f64(sl.fit.intercept),
                fmt_f64(sl.fit.residual)
            );
        }
    }
    if !table.failures.is_empty() {
        s.push_str(FAILURE_MARKER);
        s.push('\n');
        s.push_str(FAILURE_HEADER);
        s.push('\n');
        for f in &table.failures {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                f.key.family.tag(),
                f.key.dim,
                f.key.method.tag(),
                f.key.k_label(),
                f.n_total,
                f.replicate,
                csv_field(&f.message)
            );
        }
    }
    s
}

/// A bench CSV read back as text fields and numbers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchCsv {
    pub rows: Vec<BenchCsvRow>,
    pub slopes: Vec<BenchCsvSlope>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchCsvRow {
    pub family: String,
    pub dim: usize,
    pub method: String,
    pub k: String,
    pub support_radius: f64,
    pub sequence: String,
    pub n_total: usize,
    pub m_nodes: usize,
    pub replicates: usize,
    pub rmse: f64,
    pub stderr: f64,
    pub mean_error: f64,
    pub seed_base: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchCsvSlope {
    pub family: String,
    pub dim: usize,
    pub method: String,
    pub k: String,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

pub fn parse_bench_csv(text: &str, path: &Path) -> Result<BenchCsv> {
    let mut out = BenchCsv::default();
    let mut section = 0;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h == BENCH_HEADER => {}
        _ => return Err(Error::parse(path, 1, "missing bench header")),
    }
    let p = |v: &str, line: usize| -> Result<f64> {
        v.parse()
            .map_err(|_| Error::parse(path, line, format!("cannot parse `{v}`")))
    };
    let u = |v: &str, line: usize| -> Result<u64> {
        v.parse()
            .map_err(|_| Error::parse(path, line, format!("cannot parse `{v}`")))
    };
    while let Some((line, l)) = lines.next() {
        if l == SLOPE_MARKER || l == FAILURE_MARKER {
            section = if l == SLOPE_MARKER { 1 } else { 2 };
            lines.next();
            continue;
        }
        let f: Vec<&str> = l.split(',').collect();
        match section {
            0 => {
                if f.len() != 13 {
                    return Err(Error::parse(path, line, "expected 13 fields"));
                }
                out.rows.push(BenchCsvRow {
                    family: f[0].into(),
                    dim: u(f[1], line)? as usize,
                    method: f[2].into(),
                    k: f[3].into(),
                    support_radius: p(f[4], line)?,
                    sequence: f[5].into(),
                    n_total: u(f[6], line)? as usize,
                    m_nodes: u(f[7], line)? as usize,
                    replicates: u(f[8], line)? as usize,
                    rmse: p(f[9], line)?,
                    stderr: p(f[10], line)?,
                    mean_error: p(f[11], line)?,
                    seed_base: u(f[12], line)?,
                });
            }
            1 => {
                if f.len() != 7 {
                    return Err(Error::parse(path, line, "expected 7 slope fields"));
                }
                out.slopes.push(BenchCsvSlope {
                    family: f[0].into(),
                    dim: u(f[1], line)? as usize,
                    method: f[2].into(),
                    k: f[3].into(),
                    slope: p(f[4], line)?,
                    intercept: p(f[5], line)?,
                    residual: p(f[6], line)?,
                });
            }
            _ => out.failures += 1,
        }
    }
    Ok(out)
}

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 130.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 40.0;

fn colour(method: Method) -> &'static str {
    match method {
        Method::Mc | Method::McCf => "#7f7f7f",
        Method::Qmc | Method::QmcCf => "#1f77b4",
        Method::QmcCfFolded => "#2ca02c",
    }
}

/// Extra hue per kernel smoothness so several `k` stay distinguishable.
fn k_colour(key: &CellKey) -> &'static str {
    match (key.method.uses_cf(), key.k.map(|k| k.index())) {
        (true, Some(0)) => "#ff7f0e",
        (true, Some(2)) => "#9467bd",
        (true, _) if key.method == Method::QmcCf => "#d62728",
        _ => colour(key.method),
    }
}

pub fn legend_label(key: &CellKey) -> String {
    match key.k {
        Some(k) => format!("{} (k={})", key.method.tag(), k.index()),
        None => key.method.tag().to_string(),
    }
}

/// Static SVG: one panel per `(family, dim)`, `log2 N` against `log2 rmse`.
/// Plain methods are solid, CF methods dashed; bars span one standard error.
pub fn bench_svg(table: &ConvergenceTable) -> String {
    let mut panels: BTreeMap<(&'static str, usize), Vec<CellKey>> = BTreeMap::new();
    for r in &table.rows {
        let cells = panels.entry((r.key.family.tag(), r.key.dim)).or_default();
        if !cells.contains(&r.key) {
            cells.push(r.key);
        }
    }
    let cols = panels.len().clamp(1, 2);
    let nrows = panels.len().div_ceil(cols).max(1);
    let (w, h) = (PANEL_W * cols as f64, PANEL_H * nrows as f64);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for (i, ((family, dim), cells)) in panels.iter().enumerate() {
        let ox = (i % cols) as f64 * PANEL_W;
        let oy = (i / cols) as f64 * PANEL_H;
        panel(&mut s, table, family, *dim, cells, ox, oy);
    }
    s.push_str("</svg>\n");
    s
}

fn panel(
    s: &mut String,
    table: &ConvergenceTable,
    family: &str,
    dim: usize,
    cells: &[CellKey],
    ox: f64,
    oy: f64,
) {
    let rows: Vec<_> = table
        .rows
        .iter()
        .filter(|r| cells.contains(&r.key) && r.rmse > 0.0 && r.rmse.is_finite())
        .collect();
    let (x0, x1) = (ox + MARGIN_L, ox + PANEL_W - MARGIN_R);
    let (y0, y1) = (oy + MARGIN_T, oy + PANEL_H - MARGIN_B);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{family}, d = {dim}</text>"#,
        (x0 + x1) / 2.0,
        oy + 18.0
    );
    let _ = writeln!(
        s,
        r##"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="#333"/>"##,
        x1 - x0,
        y1 - y0
    );
    if rows.is_empty() {
        return;
    }
    let lx = |n: usize| (n as f64).log2();
    let xs: Vec<f64> = rows.iter().map(|r| lx(r.n_total)).collect();
    let (xmin, xmax) = bounds(&xs);
    let ys: Vec<f64> = rows
        .iter()
        .flat_map(|r| {
            let lo = (r.rmse - r.stderr).max(r.rmse * 0.05);
            [lo.log2(), (r.rmse + r.stderr).log2()]
        })
        .collect();
    let (ymin, ymax) = bounds(&ys);
    let (ymin, ymax) = (ymin.floor(), ymax.ceil());
    let (xmin, xmax) = if xmax > xmin {
        (xmin, xmax)
    } else {
        (xmin - 1.0, xmax + 1.0)
    };
    let (ymin, ymax) = if ymax > ymin {
        (ymin, ymax)
    } else {
        (ymin - 1.0, ymax + 1.0)
    };
    let px = |x: f64| x0 + 10.0 + (x - xmin) / (xmax - xmin) * (x1 - x0 - 20.0);
    let py = |y: f64| y1 - (y - ymin) / (ymax - ymin) * (y1 - y0);

    let mut grid: Vec<usize> = rows.iter().map(|r| r.n_total).collect();
    grid.sort_unstable();
    grid.dedup();
    for n in &grid {
        let x = px(lx(*n));
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{}" stroke="#333"/><text x="{x:.2}" y="{}" text-anchor="middle">2^{}</text>"##,
            y1 + 4.0,
            y1 + 16.0,
            lx(*n).round()
        );
    }
    let step = ((ymax - ymin) / 8.0).ceil().max(1.0);
    let mut e = ymin;
    while e <= ymax + 1e-9 {
        let y = py(e);
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="#333"/><text x="{}" y="{:.2}" text-anchor="end">2^{}</text>"##,
            x0 - 4.0,
            x0 - 6.0,
            y + 4.0,
            e
        );
        e += step;
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">N</text>"#,
        (x0 + x1) / 2.0,
        y1 + 32.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">RMSE</text>"#,
        ox + 14.0,
        (y0 + y1) / 2.0,
        ox + 14.0,
        (y0 + y1) / 2.0
    );

    for (j, key) in cells.iter().enumerate() {
        let pts: Vec<_> = rows.iter().filter(|r| r.key == *key).collect();
        let c = k_colour(key);
        let dash = if key.method.uses_cf() {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        if !pts.is_empty() {
            let path: Vec<String> = pts
                .iter()
                .map(|r| format!("{:.2},{:.2}", px(lx(r.n_total)), py(r.rmse.log2())))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.6"{dash}/>"#,
                path.join(" ")
            );
            for r in &pts {
                let x = px(lx(r.n_total));
                let lo = (r.rmse - r.stderr).max(r.rmse * 0.05);
                let _ = writeln!(
                    s,
                    r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{c}"/><circle cx="{x:.2}" cy="{:.2}" r="2.5" fill="{c}"/>"#,
                    py(lo.log2()),
                    py((r.rmse + r.stderr).log2()),
                    py(r.rmse.log2())
                );
            }
        }
        let ly = y0 + 12.0 + 16.0 * j as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{c}" stroke-width="1.6"{dash}/><text x="{}" y="{}">{}</text>"#,
            x1 + 8.0,
            x1 + 30.0,
            x1 + 34.0,
            ly + 4.0,
            legend_label(key)
        );
    }
}

fn bounds(v: &[f64]) -> (f64, f64) {
    v.iter()
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}
