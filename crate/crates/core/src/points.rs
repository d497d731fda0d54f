//! Low-discrepancy point sets, randomizations and node-set geometry.
//!
//! All generators are pure functions of their parameters (and an explicit
//! seed where randomness is involved). Every point set carries a
//! [`Provenance`] record that is enough to regenerate it bit for bit.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::math;

/// A point of the closed unit cube `[0, 1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::ZeroDimension);
        }
        check_unit(&coords)?;
        Ok(Point(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim.max(1)])
    }

    /// A uniformly distributed point of `[0, 1)^d`.
    pub fn uniform<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Point((0..dim.max(1)).map(|_| rng.gen::<f64>()).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

fn check_unit(coords: &[f64]) -> Result<()> {
    match coords.iter().find(|c| !(0.0..=1.0).contains(*c)) {
        Some(&value) => Err(Error::OutsideUnitCube { value }),
        None => Ok(()),
    }
}

/// The deterministic construction a point set starts from.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// Halton sequence, optionally with reverse-radix digit scrambling.
    Halton {
        scrambled: bool,
    },
    Sobol,
    /// Rank-1 lattice with generating vector `z`.
    Lattice {
        z: Vec<u64>,
    },
    /// Midpoint square grid with `per_axis` points along each axis.
    MidpointGrid {
        per_axis: usize,
    },
    /// Independent uniform draws.
    Uniform,
    /// Points read from a file or supplied by the caller.
    External(String),
}

impl Generator {
    pub fn name(&self) -> String {
        match self {
            Generator::Halton { scrambled: false } => "halton".into(),
            Generator::Halton { scrambled: true } => "halton-rr".into(),
            Generator::Sobol => "sobol".into(),
            Generator::Lattice { z } => {
                let z: Vec<String> = z.iter().map(|v| v.to_string()).collect();
                format!("lattice[{}]", z.join(" "))
            }
            Generator::MidpointGrid { per_axis } => format!("grid[{per_axis}]"),
            Generator::Uniform => "uniform".into(),
            Generator::External(name) => format!("external[{name}]"),
        }
    }
}

/// A transformation applied after generation, in order of application.
#[derive(Debug, Clone, PartialEq)]
pub enum Randomization {
    /// Additive shift modulo one.
    Shift(Vec<f64>),
    /// Per-dimension XOR of the 32-bit binary expansion.
    DigitalShift(Vec<u32>),
    /// Baker's (tent) transformation.
    BakerFold,
}

impl fmt::Display for Randomization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Randomization::Shift(_) => f.write_str("shift"),
            Randomization::DigitalShift(_) => f.write_str("digital-shift"),
            Randomization::BakerFold => f.write_str("baker-fold"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub generator: Generator,
    pub randomizations: Vec<Randomization>,
    /// Seed that drew the randomization, when one was drawn.
    pub seed: Option<u64>,
    /// Sequence index of the first point.
    pub index_start: u64,
}

impl Provenance {
    pub fn new(generator: Generator, index_start: u64) -> Self {
        Provenance {
            generator,
            randomizations: Vec::new(),
            seed: None,
            index_start,
        }
    }

    pub fn randomization_name(&self) -> String {
        if self.randomizations.is_empty() {
            return "none".into();
        }
        let names: Vec<String> = self.randomizations.iter().map(|r| r.to_string()).collect();
        names.join("+")
    }
}

/// Ordered points of `[0, 1]^dim`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    provenance: Provenance,
}

impl PointSet {
    /// Builds a point set from row-major coordinates, validating the cube.
    pub fn from_coords(dim: usize, coords: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: coords.len() % dim,
            });
        }
        check_unit(&coords)?;
        Ok(PointSet {
            dim,
            coords,
            provenance,
        })
    }

    pub fn from_points(points: &[Vec<f64>], provenance: Provenance) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or(Error::EmptyPointSet)?;
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::from_coords(dim, coords, provenance)
    }

    /// `n` independent uniform points.
    pub fn uniform<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        let coords = (0..n * dim).map(|_| rng.gen::<f64>()).collect();
        Ok(PointSet {
            dim,
            coords,
            provenance: Provenance::new(Generator::Uniform, 0),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.provenance.seed = Some(seed);
        self
    }

    /// The first `n` points (or all of them, when fewer exist).
    pub fn truncated(&self, n: usize) -> PointSet {
        let n = n.min(self.len());
        PointSet {
            dim: self.dim,
            coords: self.coords[..n * self.dim].to_vec(),
            provenance: self.provenance.clone(),
        }
    }

    /// Appends the points of `other`, which must share the dimension.
    pub fn extend(&mut self, other: &PointSet) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        self.coords.extend_from_slice(&other.coords);
        Ok(())
    }
}

/// Radical inverse of `n` in `base`, with an optional digit permutation.
///
/// Writes `n = sum_j a_j base^j` and returns `sum_j sigma(a_j) base^(-j-1)`.
pub fn radical_inverse(n: u64, base: u64, permutation: Option<&[u64]>) -> Result<f64> {
    if base < 2 {
        return Err(Error::InvalidBase(base));
    }
    if let Some(perm) = permutation {
        check_permutation(perm, base)?;
    }
    Ok(radical_inverse_unchecked(n, base, permutation))
}

fn check_permutation(perm: &[u64], base: u64) -> Result<()> {
    let mut seen = vec![false; base as usize];
    if perm.len() as u64 != base {
        return Err(Error::InvalidPermutation { base });
    }
    for &p in perm {
        if p >= base || seen[p as usize] {
            return Err(Error::InvalidPermutation { base });
        }
        seen[p as usize] = true;
    }
    Ok(())
}

fn radical_inverse_unchecked(mut n: u64, base: u64, permutation: Option<&[u64]>) -> f64 {
    let inv_base = 1.0 / base as f64;
    let mut scale = inv_base;
    let mut value = 0.0;
    while n > 0 {
        let digit = n % base;
        let digit = permutation.map_or(digit, |p| p[digit as usize]);
        value += digit as f64 * scale;
        scale *= inv_base;
        n /= base;
    }
    // Digits of a permuted expansion can round the sum up to exactly one.
    value.min(1.0 - f64::EPSILON / 2.0)
}

/// The first `count` primes.
pub fn first_primes(count: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes
            .iter()
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| candidate % p != 0)
        {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

/// Reverse-radix digit permutation for `base` (Kocis and Whiten's RR2).
///
/// The integers `0..2^k` (with `2^k >= base`) are listed in bit-reversed
/// order and those not below `base` are dropped.
pub fn reverse_radix_permutation(base: u64) -> Vec<u64> {
    let mut bits = 0u32;
    while (1u64 << bits) < base {
        bits += 1;
    }
    (0..1u64 << bits)
        .map(|i| {
            if bits == 0 {
                0
            } else {
                i.reverse_bits() >> (64 - bits)
            }
        })
        .filter(|&r| r < base)
        .collect()
}

/// Halton points with indices `1..=n` in the first `dim` prime bases.
///
/// With `scramble`, each base's digits go through the deterministic
/// reverse-radix permutation. No randomness is involved.
pub fn halton(n: usize, dim: usize, scramble: bool) -> Result<PointSet> {
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    let bases = first_primes(dim);
    let perms: Vec<Option<Vec<u64>>> = bases
        .iter()
        .map(|&b| scramble.then(|| reverse_radix_permutation(b)))
        .collect();
    let mut coords = Vec::with_capacity(n * dim);
    for index in 1..=n as u64 {
        for (base, perm) in bases.iter().zip(&perms) {
            coords.push(radical_inverse_unchecked(index, *base, perm.as_deref()));
        }
    }
    Ok(PointSet {
        dim,
        coords,
        provenance: Provenance::new(
            Generator::Halton {
                scrambled: scramble,
            },
            1,
        ),
    })
}

/// Word size of the Sobol construction.
pub const SOBOL_BITS: u32 = 32;

/// One primitive polynomial with its initial direction numbers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionEntry {
    /// Degree of the primitive polynomial.
    pub degree: u32,
    /// Interior coefficients of the polynomial, packed as bits.
    pub coefficients: u32,
    /// Initial direction numbers `m_1..m_degree`.
    pub initial: Vec<u32>,
}

/// Sobol direction numbers in the Joe–Kuo layout.
///
/// Dimension 1 is the van der Corput sequence and is implicit; entry `i`
/// describes dimension `i + 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionTable {
    entries: Vec<DirectionEntry>,
}

/// First seven rows of Joe and Kuo's `new-joe-kuo-6.21201` table.
const BUILTIN_DIRECTIONS: &str = "\
d       s       a       m_i
2       1       0       1
3       2       1       1 3
4       3       1       1 3 1
5       3       2       1 1 1
6       4       1       1 1 3 3
7       4       4       1 3 5 13
8       5       2       1 1 5 5 17
";

impl DirectionTable {
    /// Small table covering dimensions 1 through 8.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_DIRECTIONS).expect("built-in direction table is well formed")
    }

    /// Parses the whitespace-separated `d s a m_1 .. m_s` format.
    ///
    /// Blank lines and `#` comments are ignored, as is a leading header line
    /// starting with `d`. Dimensions must appear in order starting from 2.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() || (entries.is_empty() && line.starts_with('d')) {
                continue;
            }
            let err = |message: String| Error::DirectionParse {
                line: lineno + 1,
                message,
            };
            let fields = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<u64>()
                        .map_err(|_| err(format!("`{t}` is not a non-negative integer")))
                })
                .collect::<Result<Vec<u64>>>()?;
            if fields.len() < 3 {
                return Err(err("expected `d s a m_1 .. m_s`".into()));
            }
            let (d, s, a) = (fields[0], fields[1], fields[2]);
            let expected_dim = entries.len() as u64 + 2;
            if d != expected_dim {
                return Err(err(format!("expected dimension {expected_dim}, found {d}")));
            }
            if s == 0 || s > SOBOL_BITS as u64 {
                return Err(err(format!("degree {s} out of range")));
            }
            if a >= 1 << (s - 1) {
                return Err(err(format!("coefficient word {a} does not fit degree {s}")));
            }
            let m = &fields[3..];
            if m.len() as u64 != s {
                return Err(err(format!(
                    "expected {s} direction numbers, found {}",
                    m.len()
                )));
            }
            for (i, &mi) in m.iter().enumerate() {
                if mi % 2 == 0 || mi >= 1 << (i + 1) {
                    return Err(err(format!(
                        "m_{} = {mi} must be odd and below 2^{}",
                        i + 1,
                        i + 1
                    )));
                }
            }
            entries.push(DirectionEntry {
                degree: s as u32,
                coefficients: a as u32,
                initial: m.iter().map(|&v| v as u32).collect(),
            });
        }
        Ok(DirectionTable { entries })
    }

    /// Number of dimensions covered, including the implicit first one.
    pub fn dims(&self) -> usize {
        self.entries.len() + 1
    }

    /// Direction numbers `v_1..v_bits` of dimension `dim` (1-based), scaled
    /// to a 32-bit word.
    pub fn directions(&self, dim: usize, bits: u32) -> Result<Vec<u32>> {
        if dim == 0 || dim > self.dims() {
            return Err(Error::DirectionTableDimensions {
                requested: dim,
                available: self.dims(),
            });
        }
        if bits > SOBOL_BITS {
            return Err(Error::DirectionTableBits {
                dim,
                required: bits,
                available: SOBOL_BITS,
            });
        }
        let bits = bits as usize;
        if dim == 1 {
            return Ok((1..=bits)
                .map(|i| 1u32 << (SOBOL_BITS as usize - i))
                .collect());
        }
        let entry = &self.entries[dim - 2];
        let s = entry.degree as usize;
        let mut v = vec![0u32; bits.max(s)];
        for (i, &m) in entry.initial.iter().enumerate() {
            v[i] = m << (SOBOL_BITS as usize - i - 1);
        }
        for i in s..bits {
            let mut value = v[i - s] ^ (v[i - s] >> s);
            for k in 1..s {
                if (entry.coefficients >> (s - 1 - k)) & 1 == 1 {
                    value ^= v[i - k];
                }
            }
            v[i] = value;
        }
        v.truncate(bits);
        Ok(v)
    }
}

/// Sobol points with indices `1..=n` in natural (binary) order.
///
/// With `digital_shift`, each dimension's 32-bit expansion is XORed with a
/// word drawn from `seed`. A missing seed with `digital_shift` is an error.
pub fn sobol(
    n: usize,
    dim: usize,
    table: &DirectionTable,
    digital_shift: bool,
    seed: Option<u64>,
) -> Result<PointSet> {
    let shifts = if digital_shift {
        let seed = seed.ok_or_else(|| invalid("seed", "digital shift needs a seed"))?;
        let mut rng = crate::rng::stream(seed, &[0x50b0]);
        (0..dim).map(|_| rng.gen::<u32>()).collect()
    } else {
        vec![0; dim]
    };
    let mut ps = sobol_with_shift(n, dim, table, &shifts)?;
    if digital_shift {
        ps.provenance.seed = seed;
    }
    Ok(ps)
}

/// Sobol points XOR-shifted by an explicit word per dimension.
pub fn sobol_with_shift(
    n: usize,
    dim: usize,
    table: &DirectionTable,
    shifts: &[u32],
) -> Result<PointSet> {
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    if shifts.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: shifts.len(),
        });
    }
    let bits = u64::BITS - (n as u64).leading_zeros();
    let directions = (1..=dim)
        .map(|j| table.directions(j, bits))
        .collect::<Result<Vec<_>>>()?;
    let scale = 1.0 / (1u64 << SOBOL_BITS) as f64;
    let mut coords = Vec::with_capacity(n * dim);
    for index in 1..=n as u64 {
        for (v, shift) in directions.iter().zip(shifts) {
            let mut word = 0u32;
            let mut rest = index;
            let mut bit = 0;
            while rest > 0 {
                if rest & 1 == 1 {
                    word ^= v[bit];
                }
                rest >>= 1;
                bit += 1;
            }
            coords.push((word ^ shift) as f64 * scale);
        }
    }
    let mut provenance = Provenance::new(Generator::Sobol, 1);
    if shifts.iter().any(|&s| s != 0) {
        provenance
            .randomizations
            .push(Randomization::DigitalShift(shifts.to_vec()));
    }
    Ok(PointSet {
        dim,
        coords,
        provenance,
    })
}

/// Rank-1 lattice: point `n` is `frac(n z / count)` for `n = 0..count`.
pub fn lattice(count: usize, z: &[u64]) -> Result<PointSet> {
    if z.is_empty() {
        return Err(Error::ZeroDimension);
    }
    let modulus = count as u128;
    let mut coords = Vec::with_capacity(count * z.len());
    for n in 0..modulus {
        for &zi in z {
            coords.push(((n * zi as u128) % modulus) as f64 / count as f64);
        }
    }
    Ok(PointSet {
        dim: z.len(),
        coords,
        provenance: Provenance::new(Generator::Lattice { z: z.to_vec() }, 0),
    })
}

/// A fixed odd generating vector for an `n`-point lattice in `dim` dimensions.
///
/// `z_0 = 1` and `z_i` is the odd integer nearest to `n / phi^i`, where
/// `phi` is the positive root of `x^d = x + 1` (the golden ratio for
/// `d = 2`, giving a Fibonacci-like lattice). This is a reasonable default,
/// not the result of a quality search.
pub fn golden_lattice_generator(n: usize, dim: usize) -> Vec<u64> {
    let mut phi = 2.0f64;
    if dim > 1 {
        for _ in 0..200 {
            phi = math::pow(1.0 + phi, 1.0 / dim as f64);
        }
    }
    (0..dim)
        .map(|i| {
            if i == 0 || n < 4 {
                return 1;
            }
            let mut z = math::round(n as f64 / math::powi(phi, i as i32)) as u64;
            if z % 2 == 0 {
                z += 1;
            }
            z % n as u64
        })
        .collect()
}

/// Adds `shift` to every point modulo one.
pub fn random_shift(ps: &PointSet, shift: &Point) -> Result<PointSet> {
    if shift.dim() != ps.dim {
        return Err(Error::DimensionMismatch {
            expected: ps.dim,
            found: shift.dim(),
        });
    }
    let s = shift.coords();
    let coords = ps
        .coords
        .chunks_exact(ps.dim)
        .flat_map(|p| p.iter().zip(s).map(|(x, d)| math::frac(x + d)))
        .collect();
    let mut provenance = ps.provenance.clone();
    provenance
        .randomizations
        .push(Randomization::Shift(s.to_vec()));
    Ok(PointSet {
        dim: ps.dim,
        coords,
        provenance,
    })
}

/// The tent map `t -> 1 - |2t - 1|`.
#[inline]
pub fn baker(t: f64) -> f64 {
    1.0 - (2.0 * t - 1.0).abs()
}

/// Applies the baker's transformation to every coordinate.
pub fn baker_fold(ps: &PointSet) -> PointSet {
    let coords = ps.coords.iter().map(|&t| baker(t)).collect();
    let mut provenance = ps.provenance.clone();
    provenance.randomizations.push(Randomization::BakerFold);
    PointSet {
        dim: ps.dim,
        coords,
        provenance,
    }
}

/// Square grid of `per_axis^dim` midpoints `(2i - 1) / (2 per_axis)`.
///
/// Points are listed with the last coordinate varying fastest.
pub fn midpoint_grid(per_axis: usize, dim: usize) -> Result<PointSet> {
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    if per_axis == 0 {
        return Err(invalid("points per axis", "must be at least 1"));
    }
    let total = u32::try_from(dim)
        .ok()
        .and_then(|d| per_axis.checked_pow(d))
        .filter(|t| t.checked_mul(dim).is_some())
        .ok_or(Error::GridOverflow { per_axis, dim })?;
    let axis: Vec<f64> = (1..=per_axis)
        .map(|i| (2 * i - 1) as f64 / (2 * per_axis) as f64)
        .collect();
    let mut coords = Vec::with_capacity(total * dim);
    let mut digits = vec![0usize; dim];
    for _ in 0..total {
        coords.extend(digits.iter().map(|&i| axis[i]));
        for slot in digits.iter_mut().rev() {
            *slot += 1;
            if *slot < per_axis {
                break;
            }
            *slot = 0;
        }
    }
    Ok(PointSet {
        dim,
        coords,
        provenance: Provenance::new(Generator::MidpointGrid { per_axis }, 0),
    })
}

/// Fill distance, separation radius and mesh ratio of a node set.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryMetrics {
    /// Largest distance from a point of the evaluation grid to its nearest
    /// node. A lower bound on the true fill distance.
    pub fill_distance: f64,
    /// Half the smallest pairwise distance; `+inf` for a single point.
    pub separation_radius: f64,
    /// `fill_distance / separation_radius`, when the radius is positive and finite.
    pub mesh_ratio: Option<f64>,
    /// Cells per axis of the evaluation grid used for the fill distance.
    pub fill_resolution: usize,
    /// Set when the separation radius is undefined because there is one point.
    pub single_point: bool,
}

/// Fill-distance grid resolution used when none is requested.
pub fn default_fill_resolution(dim: usize) -> usize {
    match dim {
        0..=2 => 256,
        3 => 64,
        4 => 32,
        5 => 16,
        _ => 8,
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Separation radius `min_{j != k} |u_j - u_k| / 2`, exact.
pub fn separation_radius(ps: &PointSet) -> f64 {
    let mut best = f64::INFINITY;
    for j in 0..ps.len() {
        for k in j + 1..ps.len() {
            best = best.min(squared_distance(ps.point(j), ps.point(k)));
        }
    }
    0.5 * math::sqrt(best)
}

/// Fill distance `sup_x min_n |x - u_n|`, with the supremum taken over the
/// grid `{0, 1/r, .., 1}^d` for resolution `r`.
pub fn fill_distance(ps: &PointSet, resolution: usize) -> Result<f64> {
    if ps.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if resolution == 0 {
        return Err(invalid("fill resolution", "must be at least 1"));
    }
    let dim = ps.dim;
    let per_axis = resolution + 1;
    let total = u32::try_from(dim)
        .ok()
        .and_then(|d| per_axis.checked_pow(d))
        .ok_or(Error::GridOverflow { per_axis, dim })?;
    let mut x = vec![0.0; dim];
    let mut digits = vec![0usize; dim];
    let mut worst = 0.0f64;
    for _ in 0..total {
        for (xi, &di) in x.iter_mut().zip(&digits) {
            *xi = di as f64 / resolution as f64;
        }
        let mut nearest = f64::INFINITY;
        for p in ps.iter() {
            nearest = nearest.min(squared_distance(&x, p));
            // This grid point can no longer raise the maximum.
            if nearest <= worst {
                break;
            }
        }
        worst = worst.max(nearest);
        for slot in digits.iter_mut().rev() {
            *slot += 1;
            if *slot < per_axis {
                break;
            }
            *slot = 0;
        }
    }
    Ok(math::sqrt(worst))
}

pub fn geometry(ps: &PointSet, fill_resolution: usize) -> Result<GeometryMetrics> {
    let fill = fill_distance(ps, fill_resolution)?;
    let single_point = ps.len() == 1;
    let separation = separation_radius(ps);
    let mesh_ratio = (separation > 0.0 && separation.is_finite()).then(|| fill / separation);
    Ok(GeometryMetrics {
        fill_distance: fill,
        separation_radius: separation,
        mesh_ratio,
        fill_resolution,
        single_point,
    })
}
