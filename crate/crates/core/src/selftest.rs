//! Oracle cross-checks runnable from a release binary.
//!
//! Each check compares two independent routes to the same number; the whole
//! suite takes well under a second.

use crate::detectors::{threshold_balanced, SigmaPair};
use crate::harness::{ExperimentConfig, Runner};
use crate::quadrature::{integrate, integrate_pieces, QuadratureControl};
use crate::specfun::{
    bessel_i0_scaled, gamma_reg_continued_fraction, gamma_reg_series, gauss_2f1, ln_gamma, q_func, upper_gamma_reg,
    Probability, SeriesControl,
};
use crate::theory::{
    ber_floor, outage_probability, outage_probability_quadrature, ratio_cdf, GaussianMoments, OutageModelParams,
};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn check(name: &'static str, worst: f64, tol: f64) -> SelfCheck {
    SelfCheck {
        name,
        passed: worst <= tol,
        detail: format!("worst deviation {worst:.3e} (tolerance {tol:.0e})"),
    }
}

fn q_via_gamma() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..60 {
        let x = 0.2 * f64::from(i);
        worst = worst.max(rel(q_func(x), 0.5 * upper_gamma_reg(0.5, 0.5 * x * x)?));
    }
    Ok(worst)
}

fn gamma_dual() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (a, x) in [(40.0_f64, 40.0), (40.0, 60.0), (40.0, 30.0), (5.5, 3.2), (100.0, 90.0)] {
        worst = worst.max((gamma_reg_series(a, x)? + gamma_reg_continued_fraction(a, x)? - 1.0).abs());
    }
    Ok(worst)
}

// I0(z) e^{-z} = (1/π) ∫₀^π e^{z(cos θ − 1)} dθ
fn bessel_integral() -> Result<f64> {
    let ctl = QuadratureControl::default();
    let mut worst: f64 = 0.0;
    for z in [0.5, 5.0, 25.0, 31.0, 80.0] {
        let v = integrate(|t: f64| (z * (t.cos() - 1.0)).exp(), 0.0, std::f64::consts::PI, &ctl)?.value
            / std::f64::consts::PI;
        worst = worst.max(rel(bessel_i0_scaled(z), v));
    }
    Ok(worst)
}

// Γ(c)/(Γ(b)Γ(c−b)) ∫₀¹ t^{b−1}(1−t)^{c−b−1}(1−zt)^{−a} dt, c > b > 0
fn euler_2f1() -> Result<f64> {
    let ctl = QuadratureControl::default();
    let series = SeriesControl::default();
    let mut worst: f64 = 0.0;
    for (a, b, c, z) in [
        (1.5_f64, 2.0, 3.5, -0.7),
        (2.0, 1.0, 3.0, 0.5),
        (6.0, 3.0, 4.0, -2.0),
        (0.3, 1.2, 2.7, -9.0),
    ] {
        let norm = (ln_gamma::<f64>(c) - ln_gamma(b) - ln_gamma(c - b)).exp();
        let f = |t: f64| t.powf(b - 1.0) * (1.0 - t).powf(c - b - 1.0) * (1.0 - z * t).powf(-a);
        let v = norm * integrate_pieces(f, &[0.0, 0.5, 1.0], &ctl)?.value;
        worst = worst.max(rel(gauss_2f1(a, b, c, z, &series)?, v));
    }
    Ok(worst)
}

fn outage_oracle() -> Result<f64> {
    let p = OutageModelParams::new(1.0, 1.0, 0.5, 2.0, 100.0, 40)?;
    let zeta = Probability::new(0.1)?;
    let s = outage_probability(&p, zeta, &SeriesControl::default())?.value();
    let q = outage_probability_quadrature(&p, zeta, &QuadratureControl::default())?.value();
    Ok(rel(s, q))
}

// ρ = ½: F_X(1) = (1 + 1/√5)/2
fn ratio_closed_form() -> Result<f64> {
    let p = OutageModelParams::from_variances(1.0, 2.0, 10.0, 40)?;
    let f = ratio_cdf(1.0, &p, &SeriesControl::default())?.value();
    Ok(rel(f, 0.5 * (1.0 + 1.0 / 5.0_f64.sqrt())))
}

fn floor_example() -> Result<f64> {
    Ok(rel(ber_floor(2.0, 4.0, 40)?.value(), q_func(40.0_f64.sqrt() * 0.5)))
}

fn balance_identity() -> Result<f64> {
    let s = SigmaPair::new(31.0, 11.0)?;
    let t = threshold_balanced(&s, 40)?;
    let (e0, e1) = GaussianMoments::cg(&s, 40).conditional_errors(&t);
    Ok(rel(e0, e1))
}

fn determinism() -> Result<f64> {
    let cfg = ExperimentConfig::from_json(
        r#"{"sweep": {"snr_db": {"points": [0, 10]}}, "detectors": ["cg-optimal", "psk-noise-aware"],
            "fixed_rcd": 0.5, "trials": 5000, "seed": 2024}"#,
    )?;
    let a = Runner::new(1)?.run_ber_sweep(&cfg)?.to_csv_bytes();
    let b = Runner::new(3)?.run_ber_sweep(&cfg)?.to_csv_bytes();
    Ok(if a == b { 0.0 } else { 1.0 })
}

/// Runs every cross-check. Errors inside a check count as failures.
pub fn run_selftest() -> Vec<SelfCheck> {
    type Probe = fn() -> Result<f64>;
    let probes: [(&'static str, Probe, f64); 9] = [
        ("q-func vs incomplete gamma", q_via_gamma, 1e-12),
        ("incomplete gamma series vs continued fraction", gamma_dual, 1e-12),
        ("bessel I0 vs integral representation", bessel_integral, 1e-9),
        ("2F1 vs Euler integral", euler_2f1, 1e-9),
        ("outage series vs quadrature", outage_oracle, 1e-4),
        ("ratio CDF closed form", ratio_closed_form, 1e-11),
        ("error floor example", floor_example, 1e-15),
        ("balanced threshold equalizes errors", balance_identity, 1e-12),
        ("thread-count determinism", determinism, 0.0),
    ];
    probes
        .into_iter()
        .map(|(name, probe, tol)| match probe() {
            Ok(worst) => check(name, worst, tol),
            Err(e) => SelfCheck {
                name,
                passed: false,
                detail: e.to_string(),
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run_selftest() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
