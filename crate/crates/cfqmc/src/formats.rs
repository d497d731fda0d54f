//! Plain-text formats: point sets, fitted interpolants, Genz instances and
//! Sobol direction-number files.
//!
//! Floating-point values are written with 17 significant digits so every
//! value reads back bit for bit. Lines starting with `#` are comments.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use cfqmc_core::genz::GenzInstance;
use cfqmc_core::interpolate::Interpolant;
use cfqmc_core::kernels::{KernelSpec, Smoothness};
use cfqmc_core::points::{DirectionTable, Generator, PointSet, Provenance};
use cfqmc_core::GenzFamily;

use crate::error::{Error, Result};

/// Round-trip decimal rendering with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn read_file(path: &Path) -> Result<String> {
    let mut s = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|e| Error::io(path, e))?;
    Ok(s)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .flexible(true)
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("writing to memory cannot fail");
    String::from_utf8(bytes).expect("csv output is UTF-8")
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

/// Numbered records of a CSV text, skipping comments.
fn records(text: &str, path: &Path) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut out = Vec::new();
    for rec in reader(text).records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        out.push((line, rec));
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(field: &str, what: &str, path: &Path, line: usize) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::parse(path, line, format!("{what}: cannot parse `{field}`")))
}

/// CSV with header `dim,index,x1,...,xd`.
pub fn points_csv(ps: &PointSet) -> String {
    let mut w = writer();
    let d = ps.dim();
    let mut header = vec!["dim".to_string(), "index".to_string()];
    header.extend((1..=d).map(|j| format!("x{j}")));
    w.write_record(&header).expect("in-memory write");
    let start = ps.provenance().index_start;
    for (i, p) in ps.iter().enumerate() {
        let mut row = vec![d.to_string(), (start + i as u64).to_string()];
        row.extend(p.iter().map(|&x| fmt_f64(x)));
        w.write_record(&row).expect("in-memory write");
    }
    finish(w)
}

/// Reads the format written by [`points_csv`], or a headerless file with
/// one point per row and only coordinates.
pub fn parse_points(text: &str, path: &Path) -> Result<PointSet> {
    let recs = records(text, path)?;
    let Some(((hline, header), rows)) = recs.split_first() else {
        return Err(Error::parse(path, 1, "empty point file"));
    };
    if header.get(0).is_some_and(|f| f.parse::<f64>().is_ok()) {
        return parse_bare_points(&recs, path);
    }
    if header.get(0) != Some("dim") || header.get(1) != Some("index") || header.len() < 3 {
        return Err(Error::parse(
            path,
            *hline,
            "expected header `dim,index,x1,...`",
        ));
    }
    let d = header.len() - 2;
    if rows.is_empty() {
        return Err(Error::parse(path, *hline, "point file has no points"));
    }
    let mut coords = Vec::with_capacity(rows.len() * d);
    let mut index_start = 0;
    for (k, (line, rec)) in rows.iter().enumerate() {
        if rec.len() != d + 2 {
            return Err(Error::parse(
                path,
                *line,
                format!("expected {} fields, found {}", d + 2, rec.len()),
            ));
        }
        let dim: usize = num(&rec[0], "dim", path, *line)?;
        if dim != d {
            return Err(Error::parse(
                path,
                *line,
                format!("dim {dim} does not match the header"),
            ));
        }
        let index: u64 = num(&rec[1], "index", path, *line)?;
        if k == 0 {
            index_start = index;
        }
        for field in rec.iter().skip(2) {
            coords.push(num::<f64>(field, "coordinate", path, *line)?);
        }
    }
    let provenance = Provenance::new(Generator::External(path.display().to_string()), index_start);
    PointSet::from_coords(d, coords, provenance).map_err(|e| Error::parse(path, 0, e.to_string()))
}

fn parse_bare_points(recs: &[(usize, csv::StringRecord)], path: &Path) -> Result<PointSet> {
    let d = recs[0].1.len();
    let mut coords = Vec::with_capacity(recs.len() * d);
    for (line, rec) in recs {
        if rec.len() != d {
            return Err(Error::parse(
                path,
                *line,
                format!("expected {d} coordinates, found {}", rec.len()),
            ));
        }
        for field in rec {
            coords.push(num::<f64>(field, "coordinate", path, *line)?);
        }
    }
    let provenance = Provenance::new(Generator::External(path.display().to_string()), 0);
    PointSet::from_coords(d, coords, provenance).map_err(|e| Error::parse(path, 0, e.to_string()))
}

pub fn load_points(path: &Path) -> Result<PointSet> {
    parse_points(&read_file(path)?, path)
}

/// Two CSV blocks: the kernel and fit metadata, then one row per node.
pub fn interpolant_csv(f: &Interpolant) -> String {
    let mut w = writer();
    let spec = f.spec();
    w.write_record([
        "k",
        "dim",
        "support_radius",
        "jitter",
        "residual_norm",
        "exact_integral",
    ])
    .expect("in-memory write");
    w.write_record([
        spec.smoothness.index().to_string(),
        spec.dim.to_string(),
        fmt_f64(spec.support_radius),
        fmt_f64(f.jitter()),
        fmt_f64(f.residual_norm()),
        fmt_f64(f.exact_integral()),
    ])
    .expect("in-memory write");
    let mut header = vec!["index".to_string(), "beta".to_string()];
    header.extend((1..=spec.dim).map(|j| format!("x{j}")));
    w.write_record(&header).expect("in-memory write");
    for (i, (node, b)) in f.nodes().iter().zip(f.beta()).enumerate() {
        let mut row = vec![i.to_string(), fmt_f64(*b)];
        row.extend(node.iter().map(|&x| fmt_f64(x)));
        w.write_record(&row).expect("in-memory write");
    }
    finish(w)
}

/// Rebuilds an interpolant and checks the stored integral against the
/// recomputed one.
pub fn parse_interpolant(text: &str, path: &Path) -> Result<Interpolant> {
    let recs = records(text, path)?;
    if recs.len() < 4 {
        return Err(Error::parse(path, 1, "interpolant file is truncated"));
    }
    let (line, meta) = &recs[1];
    if meta.len() != 6 {
        return Err(Error::parse(path, *line, "expected 6 metadata fields"));
    }
    let k: u32 = num(&meta[0], "k", path, *line)?;
    let dim: usize = num(&meta[1], "dim", path, *line)?;
    let rho: f64 = num(&meta[2], "support_radius", path, *line)?;
    let jitter: f64 = num(&meta[3], "jitter", path, *line)?;
    let residual: f64 = num(&meta[4], "residual_norm", path, *line)?;
    let stored: f64 = num(&meta[5], "exact_integral", path, *line)?;
    let spec = KernelSpec::new(Smoothness::from_index(k)?, dim, rho)?;
    let mut beta = Vec::new();
    let mut nodes = Vec::new();
    for (line, rec) in &recs[3..] {
        if rec.len() != dim + 2 {
            return Err(Error::parse(
                path,
                *line,
                format!("expected {} fields", dim + 2),
            ));
        }
        beta.push(num::<f64>(&rec[1], "beta", path, *line)?);
        let node = rec
            .iter()
            .skip(2)
            .map(|v| num::<f64>(v, "node", path, *line))
            .collect::<Result<Vec<_>>>()?;
        nodes.push(node);
    }
    let provenance = Provenance::new(Generator::External(path.display().to_string()), 0);
    let nodes = PointSet::from_points(&nodes, provenance)?;
    let f = Interpolant::from_parts(spec, nodes, beta, jitter, residual)?;
    if (f.exact_integral() - stored).abs() > 1e-12 * (1.0 + stored.abs()) {
        return Err(Error::parse(
            path,
            recs[1].0,
            format!(
                "stored integral {stored} disagrees with recomputed {}",
                f.exact_integral()
            ),
        ));
    }
    Ok(f)
}

/// Header `family,dim,exact,a1..ad,u1..ud` and one row.
pub fn genz_csv(g: &GenzInstance) -> String {
    let mut w = writer();
    let d = g.dim();
    let mut header = vec!["family".to_string(), "dim".into(), "exact".into()];
    header.extend((1..=d).map(|j| format!("a{j}")));
    header.extend((1..=d).map(|j| format!("u{j}")));
    w.write_record(&header).expect("in-memory write");
    let mut row = vec![
        g.family().tag().to_string(),
        d.to_string(),
        fmt_f64(g.exact()),
    ];
    row.extend(g.a().iter().chain(g.u()).map(|&x| fmt_f64(x)));
    w.write_record(&row).expect("in-memory write");
    finish(w)
}

pub fn parse_genz(text: &str, path: &Path) -> Result<GenzInstance> {
    let recs = records(text, path)?;
    let Some((line, rec)) = recs.get(1) else {
        return Err(Error::parse(
            path,
            1,
            "expected a header and one instance row",
        ));
    };
    let family: GenzFamily = rec
        .get(0)
        .unwrap_or("")
        .parse()
        .map_err(|e: cfqmc_core::Error| Error::parse(path, *line, e.to_string()))?;
    let d: usize = num(rec.get(1).unwrap_or(""), "dim", path, *line)?;
    if rec.len() != 3 + 2 * d {
        return Err(Error::parse(
            path,
            *line,
            format!("expected {} fields", 3 + 2 * d),
        ));
    }
    let vals = rec
        .iter()
        .skip(3)
        .map(|v| num::<f64>(v, "parameter", path, *line))
        .collect::<Result<Vec<_>>>()?;
    let g = GenzInstance::new(family, vals[..d].to_vec(), vals[d..].to_vec())?;
    Ok(g)
}

/// Loads a direction-number file, reporting parse errors with the path.
pub fn load_direction_table(path: &Path) -> Result<DirectionTable> {
    let text = read_file(path)?;
    DirectionTable::parse(&text).map_err(|e| match e {
        cfqmc_core::Error::DirectionParse { line, message } => Error::parse(path, line, message),
        other => other.into(),
    })
}

/// Writes `text` to `out`, or to standard output when `out` is `None`.
pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_file(p, text),
        None => match std::io::stdout().write_all(text.as_bytes()) {
            // The reader went away (`| head`); nothing left to do.
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            other => other.map_err(|e| Error::io("<stdout>", e)),
        },
    }
}
