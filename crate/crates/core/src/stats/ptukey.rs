//! Studentized range distribution by numerical integration.
//!
//! For `k` groups and `df` error degrees of freedom,
//!
//! ```text
//! P(Q ≤ q) = ∫₀^∞ f(s) · W(q·s) ds
//! W(w)     = k ∫ φ(z) [Φ(z) − Φ(z − w)]^(k−1) dz
//! ```
//!
//! where `f` is the density of `s = sqrt(χ²_df / df)`. Both integrals use
//! composite Gauss–Legendre rules.

use std::sync::OnceLock;

use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

const NODES: usize = 16;
const INNER_PANELS: usize = 8;
const OUTER_PANELS: usize = 12;
const Z_LIMIT: f64 = 8.5;

/// Gauss–Legendre nodes and weights on [−1, 1], by Newton iteration on the
/// Legendre polynomial.
fn gauss_legendre() -> &'static [(f64, f64); NODES] {
    static RULE: OnceLock<[(f64, f64); NODES]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = NODES;
        let mut rule = [(0.0, 0.0); NODES];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for m in 2..=n {
                    let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            rule[i] = (-x, w);
            rule[n - 1 - i] = (x, w);
        }
        rule
    })
}

fn integrate(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_legendre();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for &(x, w) in rule {
            total += w * f(mid + 0.5 * h * x);
        }
    }
    total * 0.5 * h
}

fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Range distribution of `k` standard normals: P(max − min ≤ w).
fn normal_range_cdf(w: f64, k: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let k_f = k as f64;
    let v = integrate(-Z_LIMIT, Z_LIMIT, INNER_PANELS, |z| {
        let band = (norm_cdf(z) - norm_cdf(z - w)).max(0.0);
        norm_pdf(z) * band.powi(k as i32 - 1)
    });
    (k_f * v).clamp(0.0, 1.0)
}

/// CDF of the studentized range for `k ≥ 2` groups and `df > 0` degrees of
/// freedom. `df = f64::INFINITY` gives the range of standard normals.
pub fn ptukey(q: f64, k: usize, df: f64) -> f64 {
    assert!(k >= 2, "studentized range needs k >= 2");
    assert!(df > 0.0, "df must be positive");
    if q <= 0.0 {
        return 0.0;
    }
    if df.is_infinite() {
        return normal_range_cdf(q, k);
    }
    let half = df / 2.0;
    let log_norm = half * df.ln() - ln_gamma(half) - (half - 1.0) * std::f64::consts::LN_2;
    let sd = 1.0 / (2.0 * df).sqrt();
    let lo = (1.0 - 12.0 * sd).max(0.0);
    let hi = 1.0 + 12.0 * sd.max(0.25);
    let p = integrate(lo, hi, OUTER_PANELS, |s| {
        if s <= 0.0 {
            return 0.0;
        }
        let density = (log_norm + (df - 1.0) * s.ln() - half * s * s).exp();
        density * normal_range_cdf(q * s, k)
    });
    p.clamp(0.0, 1.0)
}

/// Quantile of the studentized range: the `q` with `ptukey(q) = p`.
pub fn qtukey(p: f64, k: usize, df: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "p must lie in (0, 1)");
    let f = |q: f64| ptukey(q, k, df) - p;
    let (mut a, mut b) = (0.0, 1.0);
    while f(b) < 0.0 {
        a = b;
        b *= 2.0;
    }
    // Illinois variant of regula falsi
    let (mut fa, mut fb) = (f(a), f(b));
    let mut side = 0;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c);
        if fc.abs() < 1e-13 || (b - a).abs() < 1e-11 * c.max(1.0) {
            return c;
        }
        if (fc < 0.0) == (fa < 0.0) {
            a = c;
            fa = fc;
            if side == -1 {
                fb /= 2.0;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa /= 2.0;
            }
            side = 1;
        }
    }
    (a + b) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let sum: f64 = gauss_legendre().iter().map(|(_, w)| w).sum();
        assert!((sum - 2.0).abs() < 1e-14);
        assert!((integrate(0.0, 2.0, 1, |x| x.powi(7)) - 32.0).abs() < 1e-12);
    }

    #[test]
    fn two_groups_reduce_to_student_t() {
        // With k = 2 the studentized range is √2·|T|.
        for df in [2.0, 4.0, 10.0, 30.0] {
            let t = StudentsT::new(0.0, 1.0, df).unwrap();
            for q in [0.5, 1.0, 2.5, 4.0, 7.0] {
                let want = 2.0 * t.cdf(q / std::f64::consts::SQRT_2) - 1.0;
                assert!((ptukey(q, 2, df) - want).abs() < 1e-8, "df {df} q {q}");
            }
        }
        for q in [0.5, 2.0, 4.0] {
            let want = 2.0 * norm_cdf(q / std::f64::consts::SQRT_2) - 1.0;
            assert!((ptukey(q, 2, f64::INFINITY) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn matches_published_critical_values() {
        // upper 5% points of the studentized range
        for (k, df, q) in [
            (3, 10.0, 3.877),
            (2, 4.0, 3.927),
            (5, 20.0, 4.232),
            (3, 6.0, 4.339),
            (4, 60.0, 3.737),
        ] {
            let got = qtukey(0.95, k, df);
            assert!((got - q).abs() < 1.5e-3, "k {k} df {df}: {got}");
        }
        let q = qtukey(0.99, 3, 12.0);
        assert!((q - 5.046).abs() < 1.5e-3, "{q}");
    }

    #[test]
    fn quantile_inverts_cdf() {
        for (p, k, df) in [(0.5, 3, 5.0), (0.9, 6, 15.0), (0.95, 10, 40.0)] {
            assert!((ptukey(qtukey(p, k, df), k, df) - p).abs() < 1e-9);
        }
    }
}
