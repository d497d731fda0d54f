//! Campaign configuration files.
//!
//! One `key = value` pair per line; `#` starts a comment. List values are
//! comma-separated, and `n_grid` also accepts a power range such as
//! `2^4..2^12`. Unknown and repeated keys are rejected.
//!
//! ```text
//! families = gaussian, oscillatory
//! dims = 1, 2
//! methods = QMC, QMC+CF
//! sequence = halton-rr-shift
//! k_values = 1
//! support_radius = 1
//! n_grid = 2^4..2^12
//! replicates = 10
//! assumed_alpha = none
//! seed_base = 2024
//! difficulty = gaussian:7.03
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use cfqmc_core::bench::{CampaignConfig, Sequence};
use cfqmc_core::{GenzFamily, Method, Smoothness};

use crate::error::{Error, Result};

pub const KEYS: [&str; 11] = [
    "families",
    "dims",
    "methods",
    "sequence",
    "k_values",
    "support_radius",
    "n_grid",
    "replicates",
    "assumed_alpha",
    "seed_base",
    "difficulty",
];

/// Keys without a default.
const REQUIRED: [&str; 4] = ["families", "dims", "methods", "seed_base"];

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_list<T: FromStr>(value: &str, key: &str, path: &Path, line: usize) -> Result<Vec<T>> {
    list(value)
        .map(|v| {
            v.parse()
                .map_err(|_| Error::parse(path, line, format!("{key}: cannot parse `{v}`")))
        })
        .collect()
}

fn parse_one<T: FromStr>(value: &str, key: &str, path: &Path, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::parse(path, line, format!("{key}: cannot parse `{value}`")))
}

fn power(term: &str) -> Option<usize> {
    match term.split_once('^') {
        Some((base, exp)) => {
            let base: usize = base.trim().parse().ok()?;
            let exp: u32 = exp.trim().parse().ok()?;
            base.checked_pow(exp)
        }
        None => term.trim().parse().ok(),
    }
}

/// `16, 32, 64`, `2^4, 2^5` or `2^4..2^12` (every power of two in between).
pub fn parse_n_grid(value: &str) -> Option<Vec<usize>> {
    if let Some((lo, hi)) = value.split_once("..") {
        let (lo, hi) = (power(lo)?, power(hi)?);
        if !lo.is_power_of_two() || !hi.is_power_of_two() || lo > hi {
            return None;
        }
        let mut out = Vec::new();
        let mut n = lo;
        while n <= hi {
            out.push(n);
            n *= 2;
        }
        return Some(out);
    }
    list(value).map(power).collect()
}

pub fn parse_campaign_config(text: &str, path: &Path) -> Result<CampaignConfig> {
    let mut seen: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::parse(path, line, "expected `key = value`"));
        };
        let key = key.trim();
        let Some(&known) = KEYS.iter().find(|k| **k == key) else {
            return Err(Error::UnknownKey {
                path: path.into(),
                line,
                key: key.into(),
            });
        };
        if seen.insert(known, (line, value.trim())).is_some() {
            return Err(Error::parse(path, line, format!("`{key}` given twice")));
        }
    }
    for key in REQUIRED {
        if !seen.contains_key(key) {
            return Err(Error::parse(
                path,
                0,
                format!("missing required key `{key}`"),
            ));
        }
    }
    let get = |key: &str| seen[key];

    let (l, v) = get("families");
    let families: Vec<GenzFamily> = parse_list(v, "families", path, l)?;
    let (l, v) = get("dims");
    let dims: Vec<usize> = parse_list(v, "dims", path, l)?;
    let (l, v) = get("methods");
    let methods: Vec<Method> = parse_list(v, "methods", path, l)?;
    let (l, v) = get("seed_base");
    let seed_base: u64 = parse_one(v, "seed_base", path, l)?;
    let mut cfg = CampaignConfig::new(families, dims, methods, seed_base);

    if let Some(&(l, v)) = seen.get("sequence") {
        cfg.sequence = parse_one::<Sequence>(v, "sequence", path, l)?;
    }
    if let Some(&(l, v)) = seen.get("k_values") {
        let ks: Vec<u32> = parse_list(v, "k_values", path, l)?;
        cfg.k_values = ks
            .into_iter()
            .map(|k| Smoothness::from_index(k).map_err(|e| Error::parse(path, l, e.to_string())))
            .collect::<Result<_>>()?;
    }
    if let Some(&(l, v)) = seen.get("support_radius") {
        cfg.support_radius = parse_one(v, "support_radius", path, l)?;
    }
    if let Some(&(l, v)) = seen.get("n_grid") {
        cfg.n_grid = parse_n_grid(v)
            .ok_or_else(|| Error::parse(path, l, format!("n_grid: cannot parse `{v}`")))?;
    }
    if let Some(&(l, v)) = seen.get("replicates") {
        cfg.replicates = parse_one(v, "replicates", path, l)?;
    }
    if let Some(&(l, v)) = seen.get("assumed_alpha") {
        cfg.assumed_alpha = if v.eq_ignore_ascii_case("none") {
            None
        } else {
            Some(parse_one(v, "assumed_alpha", path, l)?)
        };
    }
    if let Some(&(l, v)) = seen.get("difficulty") {
        for item in list(v) {
            let (family, value) = item.split_once(':').ok_or_else(|| {
                Error::parse(
                    path,
                    l,
                    format!("difficulty: expected `family:value`, got `{item}`"),
                )
            })?;
            let family: GenzFamily = parse_one(family.trim(), "difficulty", path, l)?;
            cfg.difficulty
                .insert(family, parse_one(value.trim(), "difficulty", path, l)?);
        }
    }
    cfg.validate()
        .map_err(|e| Error::parse(path, 0, e.to_string()))?;
    Ok(cfg)
}

pub fn load_campaign_config(path: &Path) -> Result<CampaignConfig> {
    parse_campaign_config(&crate::formats::read_file(path)?, path)
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(", ")
}

/// Renders a configuration in the file format; parsing the result gives
/// back the same configuration.
pub fn render_campaign_config(cfg: &CampaignConfig) -> String {
    let mut s = String::new();
    let mut put = |k: &str, v: String| {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(&v);
        s.push('\n');
    };
    put("families", join(&cfg.families, |f| f.tag().into()));
    put("dims", join(&cfg.dims, |d| d.to_string()));
    put("methods", join(&cfg.methods, |m| m.tag().into()));
    put("sequence", cfg.sequence.tag().into());
    put("k_values", join(&cfg.k_values, |k| k.index().to_string()));
    put("support_radius", format!("{:?}", cfg.support_radius));
    put("n_grid", join(&cfg.n_grid, |n| n.to_string()));
    put("replicates", cfg.replicates.to_string());
    put(
        "assumed_alpha",
        cfg.assumed_alpha
            .map_or_else(|| "none".into(), |a| format!("{a:?}")),
    );
    put("seed_base", cfg.seed_base.to_string());
    let difficulty: Vec<(GenzFamily, f64)> = cfg.difficulty.iter().map(|(f, d)| (*f, *d)).collect();
    put(
        "difficulty",
        join(&difficulty, |(f, d)| format!("{}:{d:?}", f.tag())),
    );
    s
}
