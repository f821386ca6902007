//! Energy-detection thresholds and the decision rule.
//!
//! Every detector compares the block energy `Z = Σ|y[n]|²` with a threshold;
//! the side that maps to bit 0 depends on which hypothesis has the larger
//! variance.

use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

const EQUALITY_TOL: f64 = 1e-12;

/// The two received-signal variances `(σ0², σ1²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaPair<T> {
    pub sigma0_sq: T,
    pub sigma1_sq: T,
}

impl<T: Real> SigmaPair<T> {
    /// Both variances must be positive and finite. Equality is accepted here
    /// and rejected by the threshold functions.
    pub fn new(sigma0_sq: T, sigma1_sq: T) -> Result<Self> {
        for v in [sigma0_sq, sigma1_sq] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::domain("signal variance", v));
            }
        }
        Ok(Self { sigma0_sq, sigma1_sq })
    }

    pub fn min(&self) -> T {
        self.sigma0_sq.min(self.sigma1_sq)
    }

    pub fn max(&self) -> T {
        self.sigma0_sq.max(self.sigma1_sq)
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            sigma0_sq: self.sigma0_sq * c,
            sigma1_sq: self.sigma1_sq * c,
        }
    }

    /// `true` when the variances agree to a relative 1e-12 (and so cannot
    /// be told apart).
    pub fn is_degenerate(&self) -> bool {
        (self.sigma0_sq - self.sigma1_sq).abs() <= T::c(EQUALITY_TOL) * self.max()
    }

    fn check(&self) -> Result<()> {
        if self.is_degenerate() {
            Err(Error::DetectionUndefined {
                sigma0_sq: self.sigma0_sq.f64(),
                sigma1_sq: self.sigma1_sq.f64(),
            })
        } else {
            Ok(())
        }
    }

    /// `ln(σ1²/σ0²) / (σ1² − σ0²)`, always positive and swap-symmetric.
    fn log_ratio_slope(&self) -> T {
        let d = self.sigma1_sq - self.sigma0_sq;
        (d / self.sigma0_sq).ln_1p() / d
    }
}

/// A threshold and the ordering flag that fixes the decision direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdDecision<T> {
    pub threshold: T,
    /// `true` iff `σ0² > σ1²`, i.e. bit 0 is decided when `Z ≥ threshold`.
    pub zero_above: bool,
}

impl<T: Real> ThresholdDecision<T> {
    fn for_pair(threshold: T, s: &SigmaPair<T>) -> Result<Self> {
        if !(threshold > T::zero() && threshold.is_finite()) {
            return Err(Error::NumericDomain("threshold is not a positive finite number"));
        }
        Ok(Self {
            threshold,
            zero_above: s.sigma0_sq > s.sigma1_sq,
        })
    }
}

fn block_len<T: Real>(n: usize) -> Result<T> {
    if n == 0 {
        return Err(Error::domain("samples per bit", 0));
    }
    Ok(T::from_usize_lossy(n))
}

/// Likelihood-ratio threshold `N σ0²σ1² ln(σ1²/σ0²) / (σ1² − σ0²)`.
pub fn threshold_cg_optimal<T: Real>(s: &SigmaPair<T>, n: usize) -> Result<ThresholdDecision<T>> {
    s.check()?;
    let n = block_len::<T>(n)?;
    ThresholdDecision::for_pair(n * s.sigma0_sq * s.sigma1_sq * s.log_ratio_slope(), s)
}

/// Threshold equalizing the two Gaussian-approximated error terms:
/// `2N σ0²σ1² / (σ0² + σ1²)`.
pub fn threshold_balanced<T: Real>(s: &SigmaPair<T>, n: usize) -> Result<ThresholdDecision<T>> {
    s.check()?;
    let n = block_len::<T>(n)?;
    ThresholdDecision::for_pair(
        T::c(2.0) * n * s.sigma0_sq * s.sigma1_sq / (s.sigma0_sq + s.sigma1_sq),
        s,
    )
}

/// Positive root of the equal-Gaussian-density quadratic.
pub fn threshold_cg_suboptimal<T: Real>(s: &SigmaPair<T>, n: usize) -> Result<ThresholdDecision<T>> {
    s.check()?;
    let nf = block_len::<T>(n)?;
    let c = quadratic_coefficients(s, n)?;
    let disc = c.discriminant();
    if !(disc >= T::zero()) {
        return Err(Error::NumericDomain(
            "negative discriminant in the suboptimal threshold",
        ));
    }
    let sum = s.sigma0_sq + s.sigma1_sq;
    let root = (T::one() + T::c(2.0) * sum * s.log_ratio_slope() / nf).sqrt();
    ThresholdDecision::for_pair(nf * s.sigma0_sq * s.sigma1_sq / sum * (T::one() + root), s)
}

/// Coefficients of `c1 T² + c2 T + c3 = 0`, whose positive root is the
/// suboptimal threshold. Obtained by equating the two Gaussian densities
/// `N(Nσi², Nσi⁴)` and scaling by `N σ0⁴σ1⁴`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCoefficients<T> {
    pub c1: T,
    pub c2: T,
    pub c3: T,
}

impl<T: Real> QuadraticCoefficients<T> {
    pub fn discriminant(&self) -> T {
        self.c2 * self.c2 - T::c(4.0) * self.c1 * self.c3
    }

    pub fn eval(&self, t: T) -> T {
        (self.c1 * t + self.c2) * t + self.c3
    }
}

pub fn quadratic_coefficients<T: Real>(s: &SigmaPair<T>, n: usize) -> Result<QuadraticCoefficients<T>> {
    let nf = block_len::<T>(n)?;
    let (a, b) = (s.sigma0_sq, s.sigma1_sq);
    // (T − Na)²/(Na²) − (T − Nb)²/(Nb²) = ln(b²/a²)
    let c1 = b * b - a * a;
    let c2 = T::c(2.0) * nf * a * b * (a - b);
    let c3 = -T::c(2.0) * nf * a * a * b * b * (b / a).ln();
    Ok(QuadraticCoefficients { c1, c2, c3 })
}

/// Equal-Gaussian-density threshold for PSK sources with known `Nw`.
pub fn threshold_psk_noise_aware<T: Real>(s: &SigmaPair<T>, nw: T, n: usize) -> Result<ThresholdDecision<T>> {
    s.check()?;
    let nf = block_len::<T>(n)?;
    if !(nw > T::zero()) {
        return Err(Error::domain("noise power", nw));
    }
    let a = T::c(2.0) * s.sigma0_sq - nw;
    let b = T::c(2.0) * s.sigma1_sq - nw;
    if !(a > T::zero() && b > T::zero()) {
        return Err(Error::NumericDomain("PSK threshold requires 2*sigma_i^2 > Nw"));
    }
    // 2 ln(a/b)/(a − b) is positive and finite for a ≠ b
    let slope = T::c(2.0) * ((a - b) / b).ln_1p() / (a - b);
    let inner = a * b * (T::one() + T::c(2.0) * nw * slope / nf);
    ThresholdDecision::for_pair(nf * nw * T::c(0.5) + nf * T::c(0.5) * inner.sqrt(), s)
}

/// Noise-free asymptotic PSK threshold `N σ0 σ1`.
pub fn threshold_psk_asymptotic<T: Real>(s: &SigmaPair<T>, n: usize) -> Result<ThresholdDecision<T>> {
    s.check()?;
    let nf = block_len::<T>(n)?;
    ThresholdDecision::for_pair(nf * (s.sigma0_sq * s.sigma1_sq).sqrt(), s)
}

/// Decision rule; ties go to bit 0.
pub fn decide<T: Real>(z: T, t: &ThresholdDecision<T>) -> u8 {
    let zero = if t.zero_above {
        z >= t.threshold
    } else {
        z <= t.threshold
    };
    u8::from(!zero)
}

/// Source family a detector is designed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SourceFamily {
    ComplexGaussian,
    Psk,
}

/// The detectors available to experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorId {
    CgOptimal,
    CgSuboptimal,
    Balanced,
    PskNoiseAware,
    PskAsymptotic,
}

impl DetectorId {
    pub const ALL: [DetectorId; 5] = [
        DetectorId::CgOptimal,
        DetectorId::CgSuboptimal,
        DetectorId::Balanced,
        DetectorId::PskNoiseAware,
        DetectorId::PskAsymptotic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DetectorId::CgOptimal => "cg-optimal",
            DetectorId::CgSuboptimal => "cg-suboptimal",
            DetectorId::Balanced => "balanced",
            DetectorId::PskNoiseAware => "psk-noise-aware",
            DetectorId::PskAsymptotic => "psk-asymptotic",
        }
    }

    pub fn family(self) -> SourceFamily {
        match self {
            DetectorId::CgOptimal | DetectorId::CgSuboptimal | DetectorId::Balanced => SourceFamily::ComplexGaussian,
            DetectorId::PskNoiseAware | DetectorId::PskAsymptotic => SourceFamily::Psk,
        }
    }

    pub fn threshold<T: Real>(self, s: &SigmaPair<T>, nw: T, n: usize) -> Result<ThresholdDecision<T>> {
        match self {
            DetectorId::CgOptimal => threshold_cg_optimal(s, n),
            DetectorId::CgSuboptimal => threshold_cg_suboptimal(s, n),
            DetectorId::Balanced => threshold_balanced(s, n),
            DetectorId::PskNoiseAware => threshold_psk_noise_aware(s, nw, n),
            DetectorId::PskAsymptotic => threshold_psk_asymptotic(s, n),
        }
    }
}

impl std::fmt::Display for DetectorId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DetectorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DetectorId::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown detector `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: f64, b: f64) -> SigmaPair<f64> {
        SigmaPair::new(a, b).unwrap()
    }

    #[test]
    fn optimal_examples() {
        let t = threshold_cg_optimal(&pair(2.0, 1.0), 10).unwrap();
        assert!((t.threshold - 20.0 * 2.0_f64.ln()).abs() < 1e-12);
        assert!(t.zero_above);
        let s = threshold_cg_optimal(&pair(1.0, 2.0), 10).unwrap();
        assert!((s.threshold - t.threshold).abs() < 1e-12);
        assert!(!s.zero_above);
        let near = threshold_cg_optimal(&pair(1.0, 1.0 + 1e-9), 10).unwrap();
        assert!((near.threshold - 10.0).abs() < 1e-7);
    }

    #[test]
    fn balanced_and_asymptotic_examples() {
        assert!((threshold_balanced(&pair(1.0, 3.0), 10).unwrap().threshold - 15.0).abs() < 1e-12);
        assert!((threshold_balanced(&pair(1.0, 2.0), 100).unwrap().threshold - 400.0 / 3.0).abs() < 1e-11);
        assert!((threshold_psk_asymptotic(&pair(1.0, 4.0), 100).unwrap().threshold - 200.0).abs() < 1e-12);
    }

    #[test]
    fn suboptimal_examples() {
        let t = threshold_cg_suboptimal(&pair(1.0, 2.0), 100).unwrap().threshold;
        assert!((t - 134.706).abs() < 1e-3);
        let swapped = threshold_cg_suboptimal(&pair(2.0, 1.0), 100).unwrap().threshold;
        assert!((t - swapped).abs() < 1e-10);
        let big = threshold_cg_suboptimal(&pair(1.0, 2.0), 10_000).unwrap().threshold;
        let ba = threshold_balanced(&pair(1.0, 2.0), 10_000).unwrap().threshold;
        assert!((big - ba).abs() / ba < 0.01);
    }

    #[test]
    fn suboptimal_is_quadratic_root() {
        for &(a, b, n) in &[(1.0, 2.0, 100usize), (31.0, 11.0, 40), (4.0, 2.0, 10)] {
            let s = pair(a, b);
            let t = threshold_cg_suboptimal(&s, n).unwrap().threshold;
            let c = quadratic_coefficients(&s, n).unwrap();
            let scale = c.c1.abs() * t * t + c.c2.abs() * t + c.c3.abs();
            assert!(c.eval(t).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn psk_noise_aware_example() {
        let t = threshold_psk_noise_aware(&pair(1.0, 4.0), 1.0, 100).unwrap().threshold;
        let hand = 50.0 + 50.0 * (7.0 * (1.0 + 2.0 * (1.0_f64 / 7.0).ln() / (100.0 * -3.0))).sqrt();
        assert!((t - hand).abs() < 1e-10);
        assert!((t - 183.14).abs() < 0.01);
        let swapped = threshold_psk_noise_aware(&pair(4.0, 1.0), 1.0, 100).unwrap().threshold;
        assert!((t - swapped).abs() < 1e-10);
        let quiet = threshold_psk_noise_aware(&pair(1.0, 4.0), 1e-9, 100).unwrap().threshold;
        assert!((quiet - 200.0).abs() < 1e-5);
    }

    #[test]
    fn decision_rule() {
        let above = ThresholdDecision {
            threshold: 10.0,
            zero_above: true,
        };
        let below = ThresholdDecision {
            threshold: 10.0,
            zero_above: false,
        };
        assert_eq!(decide(12.0, &above), 0);
        assert_eq!(decide(8.0, &above), 1);
        assert_eq!(decide(10.0, &above), 0);
        assert_eq!(decide(10.0, &below), 0);
        assert_eq!(decide(12.0, &below), 1);
    }

    #[test]
    fn equal_variances_are_rejected() {
        let s = pair(2.0, 2.0 * (1.0 + 1e-14));
        for d in DetectorId::ALL {
            assert!(matches!(
                d.threshold(&s, 1.0, 40),
                Err(Error::DetectionUndefined { .. })
            ));
        }
    }

    #[test]
    fn ids_round_trip() {
        for d in DetectorId::ALL {
            assert_eq!(d.as_str().parse::<DetectorId>().unwrap(), d);
            let json = serde_json::to_string(&d).unwrap();
            assert_eq!(json, format!("\"{}\"", d.as_str()));
        }
        assert!("ml".parse::<DetectorId>().is_err());
    }

    #[test]
    fn single_precision() {
        let s = SigmaPair::new(2.0_f32, 1.0).unwrap();
        let t = threshold_cg_optimal(&s, 10).unwrap();
        assert!((t.threshold - 13.862_944).abs() < 1e-4);
    }
}
