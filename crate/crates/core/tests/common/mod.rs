//! Numerical oracles shared by the integration tests. Nothing here calls
//! into the crate under test.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn gl_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(x, w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}

fn adaptive_panel(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    rule: &(Vec<f64>, Vec<f64>),
) -> f64 {
    let m = 0.5 * (a + b);
    let (l, r) = (gl_panel(f, a, m, rule), gl_panel(f, m, b, rule));
    if depth == 0 || (l + r - whole).abs() <= tol {
        return l + r;
    }
    adaptive_panel(f, a, m, l, 0.5 * tol, depth - 1, rule)
        + adaptive_panel(f, m, b, r, 0.5 * tol, depth - 1, rule)
}

/// Adaptive 10-point Gauss-Legendre quadrature of `f` over `[a, b]`, with
/// the interval first cut at every breakpoint inside it.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64]) -> f64 {
    let rule = gauss_legendre(10);
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&t| t > a && t < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2)
        .map(|w| {
            let whole = gl_panel(&f, w[0], w[1], &rule);
            adaptive_panel(&f, w[0], w[1], whole, 1e-14, 30, &rule)
        })
        .sum()
}

/// `int_0^1 int_0^1 f(x, y) dy dx` by nesting [`integrate`].
pub fn integrate_2d(f: impl Fn(f64, f64) -> f64, breaks_x: &[f64], breaks_y: &[f64]) -> f64 {
    integrate(
        |x| integrate(|y| f(x, y), 0.0, 1.0, breaks_y),
        0.0,
        1.0,
        breaks_x,
    )
}

/// Mean and standard error of a sample.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
