//! Genz's test integrand families with closed-form integrals over `[0, 1]^d`.
//!
//! | family        | integrand                                             |
//! |---------------|-------------------------------------------------------|
//! | oscillatory   | `cos(2 pi u_1 + sum a_i x_i)`                         |
//! | product peak  | `prod (a_i^-2 + (x_i - u_i)^2)^-1`                    |
//! | corner peak   | `(1 + sum a_i x_i)^-(d+1)`                            |
//! | gaussian      | `exp(-sum a_i^2 (x_i - u_i)^2)`                       |
//! | continuous    | `exp(-sum a_i abs(x_i - u_i))`                        |
//! | discontinuous | `exp(sum a_i x_i)` if `x_1 <= u_1` and `x_2 <= u_2`, else 0 |
//!
//! In one dimension the discontinuous family only tests `x_1 <= u_1`.
//! A `constant` family (`f = 1`) is included for debugging harnesses.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GenzFamily {
    Oscillatory,
    ProductPeak,
    CornerPeak,
    Gaussian,
    Continuous,
    Discontinuous,
    Constant,
}

/// Largest dimension for which the corner-peak integral is evaluated; the
/// inclusion-exclusion formula has `2^d` terms.
pub const CORNER_PEAK_MAX_DIM: usize = 6;

impl GenzFamily {
    pub const ALL: [GenzFamily; 7] = [
        GenzFamily::Oscillatory,
        GenzFamily::ProductPeak,
        GenzFamily::CornerPeak,
        GenzFamily::Gaussian,
        GenzFamily::Continuous,
        GenzFamily::Discontinuous,
        GenzFamily::Constant,
    ];

    /// The six proper test families, without the debug constant.
    pub const GENZ: [GenzFamily; 6] = [
        GenzFamily::Oscillatory,
        GenzFamily::ProductPeak,
        GenzFamily::CornerPeak,
        GenzFamily::Gaussian,
        GenzFamily::Continuous,
        GenzFamily::Discontinuous,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            GenzFamily::Oscillatory => "oscillatory",
            GenzFamily::ProductPeak => "product_peak",
            GenzFamily::CornerPeak => "corner_peak",
            GenzFamily::Gaussian => "gaussian",
            GenzFamily::Continuous => "continuous",
            GenzFamily::Discontinuous => "discontinuous",
            GenzFamily::Constant => "constant",
        }
    }

    /// Classic total difficulty `sum a_i` for the family.
    pub fn default_difficulty(self) -> f64 {
        match self {
            GenzFamily::Oscillatory => 9.0,
            GenzFamily::ProductPeak => 7.25,
            GenzFamily::CornerPeak => 1.85,
            GenzFamily::Gaussian => 7.03,
            GenzFamily::Continuous => 20.4,
            GenzFamily::Discontinuous => 4.3,
            GenzFamily::Constant => 1.0,
        }
    }

    /// Whether the integrand has bounded first-order mixed partials.
    pub fn is_smooth(self) -> bool {
        !matches!(self, GenzFamily::Continuous | GenzFamily::Discontinuous)
    }
}

impl fmt::Display for GenzFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for GenzFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GenzFamily::ALL
            .into_iter()
            .find(|f| f.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid("Genz family", String::from(s)))
    }
}

/// A fully parametrized Genz integrand and its exact integral.
#[derive(Debug, Clone, PartialEq)]
pub struct GenzInstance {
    family: GenzFamily,
    a: Vec<f64>,
    u: Vec<f64>,
    exact: f64,
}

impl GenzInstance {
    pub fn new(family: GenzFamily, a: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::ZeroDimension);
        }
        if u.len() != a.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: u.len(),
            });
        }
        if a.iter().any(|&ai| !(ai > 0.0 && ai.is_finite())) {
            return Err(invalid(
                "Genz difficulty",
                "every a_i must be positive and finite",
            ));
        }
        if let Some(&value) = u.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutsideUnitCube { value });
        }
        if family == GenzFamily::CornerPeak && a.len() > CORNER_PEAK_MAX_DIM {
            return Err(invalid(
                "dimension",
                "corner peak integral is only evaluated for d <= 6",
            ));
        }
        let exact = exact_integral(family, &a, &u);
        Ok(GenzInstance {
            family,
            a,
            u,
            exact,
        })
    }

    pub fn family(&self) -> GenzFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// The exact integral over `[0, 1]^d`.
    pub fn exact(&self) -> f64 {
        self.exact
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let (a, u) = (&self.a, &self.u);
        match self.family {
            GenzFamily::Oscillatory => {
                math::cos(2.0 * PI * u[0] + a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>())
            }
            GenzFamily::ProductPeak => a
                .iter()
                .zip(u)
                .zip(x)
                .map(|((ai, ui), xi)| 1.0 / (1.0 / (ai * ai) + (xi - ui) * (xi - ui)))
                .product(),
            GenzFamily::CornerPeak => {
                let s: f64 = a.iter().zip(x).map(|(ai, xi)| ai * xi).sum();
                math::powi(1.0 + s, -(a.len() as i32 + 1))
            }
            GenzFamily::Gaussian => math::exp(
                -a.iter()
                    .zip(u)
                    .zip(x)
                    .map(|((ai, ui), xi)| ai * ai * (xi - ui) * (xi - ui))
                    .sum::<f64>(),
            ),
            GenzFamily::Continuous => math::exp(
                -a.iter()
                    .zip(u)
                    .zip(x)
                    .map(|((ai, ui), xi)| ai * (xi - ui).abs())
                    .sum::<f64>(),
            ),
            GenzFamily::Discontinuous => {
                let inside = x.iter().zip(u).take(2).all(|(xi, ui)| xi <= ui);
                if inside {
                    math::exp(a.iter().zip(x).map(|(ai, xi)| ai * xi).sum())
                } else {
                    0.0
                }
            }
            GenzFamily::Constant => 1.0,
        }
    }
}

/// `(e^t - 1) / t`, accurate for small `t`.
fn expm1_ratio(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        math::expm1(t) / t
    }
}

fn exact_integral(family: GenzFamily, a: &[f64], u: &[f64]) -> f64 {
    let d = a.len();
    match family {
        GenzFamily::Oscillatory => {
            // Re[e^{i 2 pi u_1} prod_j (e^{i a_j} - 1) / (i a_j)]
            let (mut re, mut im) = (math::cos(2.0 * PI * u[0]), math::sin(2.0 * PI * u[0]));
            for &aj in a {
                let half = math::sin(0.5 * aj);
                let (fr, fi) = (math::sin(aj) / aj, 2.0 * half * half / aj);
                let next = re * fr - im * fi;
                im = re * fi + im * fr;
                re = next;
            }
            re
        }
        GenzFamily::ProductPeak => a
            .iter()
            .zip(u)
            .map(|(ai, ui)| ai * (math::atan(ai * (1.0 - ui)) + math::atan(ai * ui)))
            .product(),
        GenzFamily::CornerPeak => {
            // Inclusion-exclusion over the cube's corners.
            let mut total = 0.0;
            for mask in 0u32..(1 << d) {
                let s: f64 = (0..d).filter(|j| mask >> j & 1 == 1).map(|j| a[j]).sum();
                let sign = if mask.count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                total += sign / (1.0 + s);
            }
            let factorial: f64 = (1..=d).map(|j| j as f64).product();
            total / (factorial * a.iter().product::<f64>())
        }
        GenzFamily::Gaussian => a
            .iter()
            .zip(u)
            .map(|(ai, ui)| {
                0.5 * math::sqrt(PI) / ai * (math::erf(ai * (1.0 - ui)) + math::erf(ai * ui))
            })
            .product(),
        GenzFamily::Continuous => a
            .iter()
            .zip(u)
            .map(|(ai, ui)| (-math::expm1(-ai * ui) - math::expm1(-ai * (1.0 - ui))) / ai)
            .product(),
        GenzFamily::Discontinuous => a
            .iter()
            .zip(u)
            .enumerate()
            .map(|(j, (ai, ui))| {
                if j < 2 {
                    ui * expm1_ratio(ai * ui)
                } else {
                    expm1_ratio(*ai)
                }
            })
            .product(),
        GenzFamily::Constant => 1.0,
    }
}

/// Draws `u` uniformly and `a` uniformly on `(0, 1]`, rescaled so that
/// `sum a_i = difficulty`.
pub fn random_genz(
    family: GenzFamily,
    dim: usize,
    seed: u64,
    difficulty: f64,
) -> Result<GenzInstance> {
    if !(difficulty > 0.0 && difficulty.is_finite()) {
        return Err(invalid("difficulty", "must be positive and finite"));
    }
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    let mut r = rng::stream(seed, &[0x6e2, family as u64, dim as u64]);
    let u: Vec<f64> = (0..dim).map(|_| r.gen::<f64>()).collect();
    let raw: Vec<f64> = (0..dim).map(|_| 1.0 - r.gen::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let a = raw.iter().map(|v| v * difficulty / total).collect();
    GenzInstance::new(family, a, u)
}
