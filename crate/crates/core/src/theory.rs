//! Closed-form BER, outage and error-floor outage probabilities, with an
//! independent quadrature oracle for the outage series.
//!
//! # Correlation parameter
//!
//! With `h1 = h0 + f`, `h0 ~ CN(0, var_h0)`, `f ~ CN(0, var_f)` independent,
//! the power correlation of `|h0|²` and `|h1|²` is `ρ = var_h0 / var_h1`.
//! The bivariate-exponential joint density of the two powers is written in
//! terms of the amplitude correlation `√ρ`: its Bessel argument carries `√ρ`
//! and every `(1 − ρ²)`, `ρ^{2m}` of the textbook form becomes `(1 − ρ)`,
//! `ρ^m`. All series below use that form; the quadrature oracle integrates
//! the same density.

use log::warn;

use crate::detectors::{
    quadratic_coefficients, threshold_balanced, threshold_cg_optimal, threshold_cg_suboptimal, SigmaPair,
    ThresholdDecision,
};
use crate::quadrature::{integrate_pieces, QuadratureControl};
use crate::sigmodel::{ChannelRealization, SystemParams};
use crate::specfun::{
    bessel_i0_scaled, gauss_2f1_scaled, ln_factorial, ln_upper_gamma_reg, lower_gamma_reg, q_func, q_inv,
    upper_gamma_reg, Probability, SeriesControl,
};
use crate::sum::CompensatedSum;
use crate::{Error, Real, Result};

const CLAMP_WARN: f64 = 1e-9;

fn prob<T: Real>(v: T) -> Probability<T> {
    Probability::clamped(v).0
}

/// Gaussian approximation of the energy statistic under each hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMoments<T> {
    pub mu0: T,
    pub mu1: T,
    pub var0: T,
    pub var1: T,
}

impl<T: Real> GaussianMoments<T> {
    /// Complex Gaussian source: `μi = Nσi²`, `vari = Nσi⁴`.
    pub fn cg(s: &SigmaPair<T>, n: usize) -> Self {
        let nf = T::from_usize_lossy(n);
        Self {
            mu0: nf * s.sigma0_sq,
            mu1: nf * s.sigma1_sq,
            var0: nf * s.sigma0_sq * s.sigma0_sq,
            var1: nf * s.sigma1_sq * s.sigma1_sq,
        }
    }

    /// Constant-modulus source: `μi = Nσi²`, `vari = 2N|hi|²PsNw + NNw²`.
    pub fn psk(ch: &ChannelRealization<T>, params: &SystemParams<T>, n: usize) -> Self {
        let nf = T::from_usize_lossy(n);
        let nw = params.noise_power;
        let var = |g: T| T::c(2.0) * nf * g * params.source_power * nw + nf * nw * nw;
        Self {
            mu0: nf * ch.sigma0_sq,
            mu1: nf * ch.sigma1_sq,
            var0: var(ch.h0.norm_sqr()),
            var1: var(ch.h1.norm_sqr()),
        }
    }

    /// `(P(d̂=1 | H0), P(d̂=0 | H1))` at the given decision.
    pub fn conditional_errors(&self, t: &ThresholdDecision<T>) -> (T, T) {
        let z0 = (t.threshold - self.mu0) / self.var0.sqrt();
        let z1 = (t.threshold - self.mu1) / self.var1.sqrt();
        if t.zero_above {
            (q_func(-z0), q_func(z1))
        } else {
            (q_func(z0), q_func(-z1))
        }
    }

    pub fn ber(&self, t: &ThresholdDecision<T>) -> Probability<T> {
        let (e0, e1) = self.conditional_errors(t);
        prob(T::c(0.5) * (e0 + e1))
    }
}

fn decision<T: Real>(s: &SigmaPair<T>, threshold: T) -> ThresholdDecision<T> {
    ThresholdDecision {
        threshold,
        zero_above: s.sigma0_sq > s.sigma1_sq,
    }
}

/// Exact conditional error probabilities of energy detection with a complex
/// Gaussian source (the energy is Gamma(N, σi²) distributed).
pub fn cg_conditional_errors<T: Real>(s: &SigmaPair<T>, n: usize, t: &ThresholdDecision<T>) -> Result<(T, T)> {
    let nf = T::from_usize_lossy(n);
    let x0 = t.threshold / s.sigma0_sq;
    let x1 = t.threshold / s.sigma1_sq;
    if t.zero_above {
        Ok((lower_gamma_reg(nf, x0)?, upper_gamma_reg(nf, x1)?))
    } else {
        Ok((upper_gamma_reg(nf, x0)?, lower_gamma_reg(nf, x1)?))
    }
}

/// Exact BER of an energy detector with arbitrary threshold under a complex
/// Gaussian source: `½[P(N, T/σmax²) + Q(N, T/σmin²)]`.
pub fn ber_cg_exact<T: Real>(s: &SigmaPair<T>, n: usize, threshold: T) -> Result<Probability<T>> {
    let (e0, e1) = cg_conditional_errors(s, n, &decision(s, threshold))?;
    Ok(prob(T::c(0.5) * (e0 + e1)))
}

/// BER of the likelihood-ratio detector.
pub fn ber_cg_optimal<T: Real>(s: &SigmaPair<T>, n: usize) -> Result<Probability<T>> {
    let t = threshold_cg_optimal(s, n)?;
    ber_cg_exact(s, n, t.threshold)
}

/// Exact BER at the balanced threshold.
pub fn ber_cg_balanced<T: Real>(s: &SigmaPair<T>, n: usize) -> Result<Probability<T>> {
    let t = threshold_balanced(s, n)?;
    ber_cg_exact(s, n, t.threshold)
}

/// Large-N two-Q approximation of [`ber_cg_optimal`].
pub fn ber_cg_optimal_approx<T: Real>(s: &SigmaPair<T>, n: usize) -> Result<Probability<T>> {
    threshold_cg_optimal(s, n)?;
    let sqrt_n = T::from_usize_lossy(n).sqrt();
    let d = s.sigma0_sq - s.sigma1_sq;
    // ln(σ0²/σ1²)/(σ0² − σ1²) > 0
    let slope = (d / s.sigma1_sq).ln_1p() / d;
    let a = sqrt_n - sqrt_n * s.min() * slope;
    let b = sqrt_n * s.max() * slope - sqrt_n;
    Ok(prob(T::c(0.5) * (q_func(a) + q_func(b))))
}

/// BER of the suboptimal detector under its Gaussian model.
pub fn ber_cg_suboptimal<T: Real>(s: &SigmaPair<T>, n: usize) -> Result<Probability<T>> {
    let t = threshold_cg_suboptimal(s, n)?;
    Ok(GaussianMoments::cg(s, n).ber(&t))
}

fn nonneg<T: Real>(what: &'static str, v: T) -> Result<T> {
    if v >= T::zero() && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(what, v))
    }
}

/// Large-N BER of the suboptimal detector: `Q(√N Δ / (Σ + 2/γ))`.
pub fn ber_cg_asymptotic<T: Real>(delta: T, sigma_sum: T, gamma: T, n: usize) -> Result<Probability<T>> {
    let delta = nonneg("delta", delta)?;
    let sigma_sum = nonneg("sigma_sum", sigma_sum)?;
    if !(gamma > T::zero()) {
        return Err(Error::domain("SNR", gamma));
    }
    let denom = sigma_sum + T::c(2.0) / gamma;
    Ok(prob(q_func(T::from_usize_lossy(n).sqrt() * delta / denom)))
}

/// Error floor `Q(√N Δ / Σ)`.
pub fn ber_floor<T: Real>(delta: T, sigma_sum: T, n: usize) -> Result<Probability<T>> {
    let delta = nonneg("delta", delta)?;
    if !(sigma_sum > T::zero()) {
        return Err(Error::domain("sigma_sum", sigma_sum));
    }
    Ok(prob(q_func(T::from_usize_lossy(n).sqrt() * delta / sigma_sum)))
}

/// Two-exponential approximation `e^{−x²/2}/12 + e^{−2x²/3}/4` of `Q(x)`,
/// `x ≥ 0`.
pub fn q_exp_approx<T: Real>(x: T) -> T {
    let x2 = x * x;
    (-x2 * T::c(0.5)).exp() / T::c(12.0) + (-x2 * T::c(2.0 / 3.0)).exp() * T::c(0.25)
}

/// [`ber_floor`] through [`q_exp_approx`].
pub fn ber_floor_exp_approx<T: Real>(delta: T, sigma_sum: T, n: usize) -> Result<Probability<T>> {
    let delta = nonneg("delta", delta)?;
    if !(sigma_sum > T::zero()) {
        return Err(Error::domain("sigma_sum", sigma_sum));
    }
    Ok(prob(q_exp_approx(T::from_usize_lossy(n).sqrt() * delta / sigma_sum)))
}

/// BER of a constant-modulus-source energy detector with the given threshold.
pub fn ber_psk<T: Real>(
    ch: &ChannelRealization<T>,
    params: &SystemParams<T>,
    n: usize,
    threshold: T,
) -> Result<Probability<T>> {
    if !(threshold > T::zero()) {
        return Err(Error::domain("threshold", threshold));
    }
    let t = ThresholdDecision {
        threshold,
        zero_above: ch.sigma0_sq > ch.sigma1_sq,
    };
    Ok(GaussianMoments::psk(ch, params, n).ber(&t))
}

/// High-SNR PSK BER `Q(√(Nγ/2) ||h0| − |h1||)`; no error floor.
pub fn ber_psk_asymptotic<T: Real>(h0_mag: T, h1_mag: T, gamma: T, n: usize) -> Result<Probability<T>> {
    if !(gamma > T::zero()) {
        return Err(Error::domain("SNR", gamma));
    }
    let arg = (T::from_usize_lossy(n) * gamma * T::c(0.5)).sqrt() * (h0_mag - h1_mag).abs();
    Ok(prob(q_func(arg)))
}

/// Statistics of the composite channels entering the outage analysis, with
/// the tag–reader link held constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageModelParams<T> {
    /// Variance of `h0`.
    pub var_h0: T,
    /// Variance of `α·h_st·h_tr`.
    pub var_f: T,
    /// `var_h0 + var_f`
    pub var_h1: T,
    /// `var_h0 / var_h1`, the correlation of the two channel powers.
    pub rho: T,
    /// SNR `Ps / Nw`.
    pub gamma: T,
    pub n: usize,
}

impl<T: Real> OutageModelParams<T> {
    pub fn new(var_h0: T, var_st: T, alpha: T, h_tr: T, gamma: T, n: usize) -> Result<Self> {
        let var_f = alpha * alpha * h_tr * h_tr * var_st;
        Self::from_variances(var_h0, var_h0 + var_f, gamma, n)
    }

    pub fn from_system(params: &SystemParams<T>, h_tr: T) -> Result<Self> {
        Self::new(
            params.var_sr,
            params.var_st,
            params.alpha,
            h_tr,
            params.snr(),
            params.samples_per_bit,
        )
    }

    pub fn from_variances(var_h0: T, var_h1: T, gamma: T, n: usize) -> Result<Self> {
        if !(var_h0 > T::zero() && var_h0.is_finite()) {
            return Err(Error::domain("var_h0", var_h0));
        }
        if !(var_h1 > var_h0 && var_h1.is_finite()) {
            return Err(Error::domain("var_h1 (must exceed var_h0)", var_h1));
        }
        if !(gamma > T::zero()) {
            return Err(Error::domain("SNR", gamma));
        }
        if n == 0 {
            return Err(Error::domain("samples per bit", 0));
        }
        Ok(Self {
            var_h0,
            var_f: var_h1 - var_h0,
            var_h1,
            rho: var_h0 / var_h1,
            gamma,
            n,
        })
    }

    /// `Q⁻¹(target)/√N`, or the trivial regime the target falls into.
    fn target_ratio(&self, target: Probability<T>) -> Result<std::result::Result<T, Regime>> {
        let v = target.value();
        let sqrt_n = T::from_usize_lossy(self.n).sqrt();
        if v >= T::c(0.5) {
            return Ok(Err(Regime::Never));
        }
        if v <= q_func(sqrt_n) {
            return Ok(Err(Regime::Always));
        }
        let t = q_inv(v)? / sqrt_n;
        if t >= T::one() {
            return Ok(Err(Regime::Always));
        }
        Ok(Ok(t))
    }

    /// `(λ1, λ2)` for outage target `ζ`.
    pub fn outage_lambdas(&self, zeta: Probability<T>) -> Result<Option<(T, T)>> {
        Ok(self.target_ratio(zeta)?.ok().map(|t| {
            let two = T::c(2.0);
            (
                two * t / (self.gamma * (T::one() - t)),
                -two * t / (self.gamma * (T::one() + t)),
            )
        }))
    }

    /// `(λ3, λ4)` for error-floor target `η`.
    pub fn at_lambdas(&self, eta: Probability<T>) -> Result<Option<(T, T)>> {
        Ok(self.target_ratio(eta)?.ok().map(|t| {
            let two = T::c(2.0);
            (two / (T::one() + t) - T::one(), two / (T::one() - t) - T::one())
        }))
    }
}

/// How a series-valued probability was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Evaluated from the series (or the quadrature oracle).
    Computed,
    /// Target at or below `Q(√N)`: the event is certain.
    Always,
    /// Target at or above ½: the event has probability zero.
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOutcome<T> {
    pub probability: Probability<T>,
    pub regime: Regime,
    /// Distance the raw value lay outside `[0, 1]` before clamping.
    pub clamp_excess: T,
    /// Outer series terms used (0 for trivial regimes and quadrature).
    pub terms: usize,
}

impl<T: Real> SeriesOutcome<T> {
    fn trivial(regime: Regime) -> Self {
        let probability = match regime {
            Regime::Always => Probability::one(),
            _ => Probability::zero(),
        };
        Self {
            probability,
            regime,
            clamp_excess: T::zero(),
            terms: 0,
        }
    }

    fn computed(raw: T, terms: usize, what: &str) -> Self {
        let (probability, clamp_excess) = Probability::clamped(raw);
        if clamp_excess > T::c(CLAMP_WARN) {
            warn!("{what}: raw value {raw} clamped into [0, 1]");
        }
        Self {
            probability,
            regime: Regime::Computed,
            clamp_excess,
            terms,
        }
    }

    pub fn value(&self) -> T {
        self.probability.value()
    }

    /// `true` when clamping moved the value by more than 1e-9.
    pub fn clamped(&self) -> bool {
        self.clamp_excess > T::c(CLAMP_WARN)
    }
}

struct LnFactorials<T>(Vec<T>);

impl<T: Real> LnFactorials<T> {
    fn new() -> Self {
        Self(vec![T::zero()])
    }

    fn get(&mut self, n: usize) -> T {
        while self.0.len() <= n {
            let k = self.0.len();
            self.0.push(ln_factorial(k));
        }
        self.0[n]
    }

    fn ln_binom(&mut self, n: usize, k: usize) -> T {
        self.get(n) - self.get(k) - self.get(n - k)
    }
}

/// Tracks the "three consecutive small contributions" stopping rule.
struct Stopper {
    quiet: usize,
}

impl Stopper {
    fn done<T: Real>(&mut self, contribution: T, total: T, tol: T) -> bool {
        if contribution.abs() <= tol * total.abs() {
            self.quiet += 1;
        } else {
            self.quiet = 0;
        }
        self.quiet >= 3
    }
}

/// Probability that the large-N BER `Q(√N Δ/(Σ + 2/γ))` is at least `ζ`
/// under Rayleigh `h0` and `h1 = h0 + α h_st h_tr` with constant `h_tr`.
///
/// Evaluated as `J1 + J21 − J22`, three nested sums, term by term in log
/// magnitude with explicit signs and compensated accumulation. `J21` carries
/// the upper incomplete gamma factor; in `J22` the matching factor reduces to
/// `(m+k)!` once the second half of `J1` is folded in.
pub fn outage_probability<T: Real>(
    p: &OutageModelParams<T>,
    zeta: Probability<T>,
    ctl: &SeriesControl<T>,
) -> Result<SeriesOutcome<T>> {
    let (l1, l2) = match p.outage_lambdas(zeta)? {
        Some(l) => l,
        None => {
            return Ok(SeriesOutcome::trivial(
                p.target_ratio(zeta)?.err().unwrap_or(Regime::Never),
            ))
        }
    };
    let (s0, s1, rho) = (p.var_h0, p.var_h1, p.rho);
    let om = T::one() - rho;
    let (ln_rho, ln_om, ln_s0, ln_s1) = (rho.ln(), om.ln(), s0.ln(), s1.ln());
    let (ln_l1, ln_l2) = (l1.ln(), (-l2).ln());

    let x1 = l1 / (om * s0);
    let d21 = l1 * s1 - l2 * s0;
    let x21 = d21 / (om * s0 * s1);
    let pre21 = -l2 / (om * s1);
    let ln_d21 = d21.ln();
    let d22 = l2 * s1 - l1 * s0;
    let pre22 = -l1 / (om * s1);
    let ln_d22 = (-d22).ln();

    let mut lf = LnFactorials::new();
    let mut total = CompensatedSum::new();
    let mut stop = Stopper { quiet: 0 };
    for m in 0..ctl.max_terms {
        let mf = T::from_usize_lossy(m);
        let mut part = CompensatedSum::new();
        let ln_pm = mf * ln_rho;
        part.add(om * ln_pm.exp() * lower_gamma_reg(mf + T::one(), x1)?);

        let ln_mfact = lf.get(m);
        for n in 0..=m {
            let nf = T::from_usize_lossy(n);
            let ln_nfact = lf.get(n);
            for k in 0..=n {
                let kf = T::from_usize_lossy(k);
                let a = m + k;
                let common = lf.ln_binom(n, k) + ln_pm + kf * ln_s0 + (mf - nf + kf + T::one()) * ln_s1
                    - ln_mfact
                    - ln_nfact
                    - (nf - kf - T::one()) * ln_om;

                let ln_j21 = pre21 + common + (mf + T::one()) * ln_l1 + nf * ln_l2
                    - T::from_usize_lossy(a + 1) * ln_d21
                    + lf.get(a)
                    + ln_upper_gamma_reg(T::from_usize_lossy(a + 1), x21)?;
                let sign21 = if (k + n) % 2 == 0 { T::one() } else { -T::one() };
                part.add(sign21 * ln_j21.exp());

                let ln_j22 = pre22 + common + nf * ln_l1 + (mf + T::one()) * ln_l2
                    - T::from_usize_lossy(a + 1) * ln_d22
                    + lf.get(a);
                part.add(-ln_j22.exp());
            }
        }
        let c = part.value();
        if !c.is_finite() {
            return Err(Error::NumericDomain("outage series term is not finite"));
        }
        total.add(c);
        if stop.done(c, total.value(), ctl.rel_tol) {
            return Ok(SeriesOutcome::computed(total.value(), m + 1, "outage probability"));
        }
    }
    Err(Error::SeriesTruncation {
        terms: ctl.max_terms,
        last_term: f64::NAN,
    })
}

/// Joint density of `(|h0|², |h1|²)`.
pub fn joint_power_pdf<T: Real>(y1: T, y2: T, p: &OutageModelParams<T>) -> T {
    if y1 < T::zero() || y2 < T::zero() {
        return T::zero();
    }
    let (s0, s1, rho) = (p.var_h0, p.var_h1, p.rho);
    let om = T::one() - rho;
    let z = T::c(2.0) * (rho * y1 * y2 / (s0 * s1)).sqrt() / om;
    let ln_f = -(om * s0 * s1).ln() - (y1 / s0 + y2 / s1) / om + z;
    ln_f.exp() * bessel_i0_scaled(z)
}

/// Independent evaluation of [`outage_probability`]: adaptive nested
/// Gauss–Kronrod integration of [`joint_power_pdf`] over the wedge
/// `λ2 ≤ (1−t)y1 − (1+t)y2`, `(1−t)y2 − (1+t)y1 ≤ …`, written as
/// `y2 ∈ [max(0, λ2 − λ2 y1/λ1), λ1 − λ1 y1/λ2]`.
pub fn outage_probability_quadrature<T: Real>(
    p: &OutageModelParams<T>,
    zeta: Probability<T>,
    ctl: &QuadratureControl<T>,
) -> Result<SeriesOutcome<T>> {
    let (l1, l2) = match p.outage_lambdas(zeta)? {
        Some(l) => l,
        None => {
            return Ok(SeriesOutcome::trivial(
                p.target_ratio(zeta)?.err().unwrap_or(Regime::Never),
            ))
        }
    };
    let inner_ctl = QuadratureControl {
        abs_tol: ctl.abs_tol * T::c(1e-2),
        rel_tol: ctl.rel_tol * T::c(1e-2),
        max_intervals: ctl.max_intervals,
    };
    let failure = std::cell::RefCell::new(None);
    let inner = |y1: T| -> T {
        let lo = if y1 > l1 { l2 * (T::one() - y1 / l1) } else { T::zero() };
        let hi = l1 * (T::one() - y1 / l2);
        let mut points = vec![lo];
        if y1 > lo && y1 < hi {
            points.push(y1);
        }
        points.push(hi);
        match integrate_pieces(|y2| joint_power_pdf(y1, y2, p), &points, &inner_ctl) {
            Ok(e) => e.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                T::nan()
            }
        }
    };
    let upper = l1 + T::c(45.0) * p.var_h0;
    let outer = integrate_pieces(inner, &[T::zero(), l1, upper], ctl);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(SeriesOutcome::computed(outer?.value, 0, "outage quadrature"))
}

/// Constants of the threshold quadratic and of the power-ratio density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppendixConstants<T> {
    /// Quadratic `c1 T² + c2 T + c3 = 0` of the suboptimal threshold.
    pub c1: T,
    pub c2: T,
    pub c3: T,
    /// `1/((1−ρ)var_h0 var_h1)`
    pub big_c1: T,
    /// `1/((1−ρ)var_h0)`
    pub big_c2: T,
    /// `2√ρ/((1−ρ)√(var_h0 var_h1))`
    pub big_c3: T,
    rho: T,
}

impl<T: Real> AppendixConstants<T> {
    pub fn new(s: &SigmaPair<T>, n: usize, p: &OutageModelParams<T>) -> Result<Self> {
        let q = quadratic_coefficients(s, n)?;
        let om = T::one() - p.rho;
        Ok(Self {
            c1: q.c1,
            c2: q.c2,
            c3: q.c3,
            big_c1: (om * p.var_h0 * p.var_h1).recip(),
            big_c2: (om * p.var_h0).recip(),
            big_c3: T::c(2.0) * p.rho.sqrt() / (om * (p.var_h0 * p.var_h1).sqrt()),
            rho: p.rho,
        })
    }

    /// `ln C4m`, `C4m = (1−ρ)/ρ · (2m+1)!/(m!)²`.
    pub fn ln_c4(&self, m: usize) -> T {
        (T::one() - self.rho).ln() - self.rho.ln() + ln_factorial::<T>(2 * m + 1) - T::c(2.0) * ln_factorial::<T>(m)
    }

    pub fn c4(&self, m: usize) -> T {
        self.ln_c4(m).exp()
    }
}

/// Density of `X = |h0|²/|h1|²`: `Σ C4m x^m / (1 + x/ρ)^{2m+2}`.
pub fn ratio_pdf<T: Real>(x: T, p: &OutageModelParams<T>, ctl: &SeriesControl<T>) -> Result<T> {
    if x < T::zero() {
        return Ok(T::zero());
    }
    let rho = p.rho;
    let om = T::one() - rho;
    let ln_base = om.ln() - rho.ln();
    let ln_x = x.ln();
    let ln_den = (x / rho).ln_1p();
    let mut sum = CompensatedSum::new();
    let mut stop = Stopper { quiet: 0 };
    for m in 0..ctl.max_terms {
        let mf = T::from_usize_lossy(m);
        let ln_c4 = ln_base + ln_factorial::<T>(2 * m + 1) - T::c(2.0) * ln_factorial::<T>(m);
        let power = if m == 0 { T::zero() } else { mf * ln_x };
        let term = (ln_c4 + power - (T::c(2.0) * mf + T::c(2.0)) * ln_den).exp();
        sum.add(term);
        if stop.done(term, sum.value(), ctl.rel_tol) {
            return Ok(sum.value());
        }
    }
    Err(Error::SeriesTruncation {
        terms: ctl.max_terms,
        last_term: f64::NAN,
    })
}

/// CDF of `X = |h0|²/|h1|²`:
/// `Σ C4m x^{m+1}/(m+1) · ₂F₁(2m+2, m+1; m+2; −x/ρ)`.
pub fn ratio_cdf<T: Real>(x: T, p: &OutageModelParams<T>, ctl: &SeriesControl<T>) -> Result<SeriesOutcome<T>> {
    if !(x >= T::zero()) {
        return Err(Error::domain("ratio argument", x));
    }
    if x == T::zero() {
        return Ok(SeriesOutcome::computed(T::zero(), 0, "ratio CDF"));
    }
    if x.is_infinite() {
        return Ok(SeriesOutcome::computed(T::one(), 0, "ratio CDF"));
    }
    let rho = p.rho;
    let ln_base = (T::one() - rho).ln() - rho.ln();
    let ln_x = x.ln();
    let z = -x / rho;
    let mut sum = CompensatedSum::new();
    let mut stop = Stopper { quiet: 0 };
    for m in 0..ctl.max_terms {
        let mf = T::from_usize_lossy(m);
        let (ln_scale, v) = gauss_2f1_scaled(T::c(2.0) * mf + T::c(2.0), mf + T::one(), mf + T::c(2.0), z, ctl)?;
        let ln_c4 = ln_base + ln_factorial::<T>(2 * m + 1) - T::c(2.0) * ln_factorial::<T>(m);
        let term = if v > T::zero() {
            (ln_c4 + (mf + T::one()) * ln_x - (mf + T::one()).ln() + ln_scale + v.ln()).exp()
        } else {
            T::zero()
        };
        sum.add(term);
        if stop.done(term, sum.value(), ctl.rel_tol) {
            return Ok(SeriesOutcome::computed(sum.value(), m + 1, "ratio CDF"));
        }
    }
    Err(Error::SeriesTruncation {
        terms: ctl.max_terms,
        last_term: f64::NAN,
    })
}

/// Probability that the error floor `Q(√N Δ/Σ)` is at least `η`:
/// `F_X(λ4) − F_X(λ3)`.
pub fn at_probability<T: Real>(
    p: &OutageModelParams<T>,
    eta: Probability<T>,
    ctl: &SeriesControl<T>,
) -> Result<SeriesOutcome<T>> {
    let (l3, l4) = match p.at_lambdas(eta)? {
        Some(l) => l,
        None => {
            return Ok(SeriesOutcome::trivial(
                p.target_ratio(eta)?.err().unwrap_or(Regime::Never),
            ))
        }
    };
    let hi = ratio_cdf(l4, p, ctl)?;
    let lo = ratio_cdf(l3, p, ctl)?;
    Ok(SeriesOutcome::computed(
        hi.value() - lo.value(),
        hi.terms.max(lo.terms),
        "AT probability",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: f64, b: f64) -> SigmaPair<f64> {
        SigmaPair::new(a, b).unwrap()
    }

    fn pr(v: f64) -> Probability<f64> {
        Probability::new(v).unwrap()
    }

    #[test]
    fn optimal_limits_and_monotonicity() {
        let near = ber_cg_optimal(&pair(1.0, 1.0 + 1e-7), 40).unwrap().value();
        assert!((near - 0.5).abs() < 1e-3);
        let mut prev = 1.0;
        for n in [10, 20, 40, 80] {
            let b = ber_cg_optimal(&pair(31.0, 11.0), n).unwrap().value();
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn optimal_not_worse_than_suboptimal() {
        for &(a, b) in &[(31.0, 11.0), (1.0, 2.0), (4.0, 2.0), (1.0, 1.3)] {
            for n in [10, 40, 100] {
                let opt = ber_cg_optimal(&pair(a, b), n).unwrap().value();
                let sub_exact = ber_cg_exact(
                    &pair(a, b),
                    n,
                    threshold_cg_suboptimal(&pair(a, b), n).unwrap().threshold,
                )
                .unwrap()
                .value();
                assert!(opt <= sub_exact + 1e-15);
            }
        }
        assert!(
            ber_cg_suboptimal(&pair(31.0, 11.0), 40).unwrap().value()
                >= ber_cg_optimal(&pair(31.0, 11.0), 40).unwrap().value()
        );
    }

    #[test]
    fn approximation_gap_is_reported_honestly() {
        // The two-Q form is a large-N approximation; at moderate N it is far
        // from the incomplete-gamma value for strongly separated variances.
        let exact = ber_cg_optimal(&pair(1.0, 2.0), 10).unwrap().value();
        let approx = ber_cg_optimal_approx(&pair(1.0, 2.0), 10).unwrap().value();
        assert!(((approx - exact) / exact).abs() < 0.01);
        let exact = ber_cg_optimal(&pair(31.0, 11.0), 40).unwrap().value();
        let approx = ber_cg_optimal_approx(&pair(31.0, 11.0), 40).unwrap().value();
        assert!(approx > exact);
        let near = ber_cg_optimal_approx(&pair(1.0, 1.0 + 1e-9), 40).unwrap().value();
        assert!((near - 0.5).abs() < 1e-6);
    }

    #[test]
    fn asymptotic_and_floor() {
        let v = ber_cg_asymptotic(2.0_f64, 4.0, 10.0, 40).unwrap().value();
        assert!((v - 0.0012989759264574934).abs() < 1e-15);
        assert_eq!(ber_cg_asymptotic(0.0_f64, 4.0, 10.0, 40).unwrap().value(), 0.5);
        let floor = ber_floor(2.0_f64, 4.0, 40).unwrap().value();
        assert!((floor - 7.826e-4).abs() < 1e-6);
        assert!((ber_cg_asymptotic(2.0, 4.0, 1e300, 40).unwrap().value() - floor).abs() < 1e-18);
        let top = ber_floor(1.0_f64, 1.0, 40).unwrap().value();
        assert!((top / 1.2698e-10 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn exponential_q_approximation() {
        // Worst relative error on [1, 4] is about 26%, at the left end the
        // error is 12.7% and at x = 4 it is 6.6%.
        let mut worst: f64 = 0.0;
        for i in 0..=300 {
            let x = 1.0 + 3.0 * i as f64 / 300.0;
            worst = worst.max((q_exp_approx(x) / q_func(x) - 1.0).abs());
        }
        assert!(worst > 0.2 && worst < 0.3, "worst = {worst}");
        assert!((q_exp_approx(1.0_f64) / q_func(1.0) - 1.0).abs() < 0.13);
    }

    #[test]
    fn psk_examples() {
        let v = ber_psk_asymptotic(3.0_f64.sqrt(), 1.0, 1.0, 40).unwrap().value();
        assert!((v - q_func(20.0_f64.sqrt() * (3.0_f64.sqrt() - 1.0))).abs() < 1e-15);
        assert!((v - 5.3e-4).abs() < 0.1e-4);
        assert_eq!(ber_psk_asymptotic(1.0, 1.0, 10.0, 40).unwrap().value(), 0.5);
        // No floor: the BER keeps falling with SNR.
        let mut prev = 1.0;
        for g in [1e-2, 1e-1, 1.0, 10.0] {
            let b = ber_psk_asymptotic(3.0_f64.sqrt(), 1.0, g, 40).unwrap().value();
            assert!(b < prev);
            prev = b;
        }
        assert!(prev < 1e-24);

        let params = SystemParams::<f64>::default();
        let ch = ChannelRealization::from_power_gains(3.0, 1.0, &params);
        let s = pair(ch.sigma0_sq, ch.sigma1_sq);
        let t = crate::detectors::threshold_psk_noise_aware(&s, 1.0, 40)
            .unwrap()
            .threshold;
        let psk = ber_psk(&ch, &params, 40, t).unwrap().value();
        assert!(psk < ber_cg_suboptimal(&s, 40).unwrap().value());
        let same = ChannelRealization::from_power_gains(2.0, 2.0, &params);
        assert_eq!(ber_psk(&same, &params, 40, 50.0).unwrap().value(), 0.5);
    }

    #[test]
    fn balance_identity_under_gaussian_moments() {
        for &(a, b) in &[(31.0, 11.0), (1.0, 2.0), (5.0, 7.5)] {
            let s = pair(a, b);
            let t = threshold_balanced(&s, 40).unwrap();
            let (e0, e1) = GaussianMoments::cg(&s, 40).conditional_errors(&t);
            assert!((e0 - e1).abs() <= 1e-12 * e0.max(e1));
            let sub = GaussianMoments::cg(&s, 40).ber(&t).value();
            let single = q_func(40.0_f64.sqrt() * (a - b).abs() / (a + b));
            assert!((sub - single).abs() <= 1e-12 * single);
            let opt = threshold_cg_optimal(&s, 40).unwrap();
            let (o0, o1) = cg_conditional_errors(&s, 40, &opt).unwrap();
            assert!((o0 - o1).abs() > 1e-6 * o0.max(o1));
        }
    }

    #[test]
    fn scale_invariance() {
        for c in [0.25, 3.0, 1e3] {
            let s = pair(31.0, 11.0);
            let v = ber_cg_optimal(&s, 40).unwrap().value();
            let w = ber_cg_optimal(&s.scaled(c), 40).unwrap().value();
            assert!((v - w).abs() <= 1e-12 * v);
            let v = ber_cg_suboptimal(&s, 40).unwrap().value();
            let w = ber_cg_suboptimal(&s.scaled(c), 40).unwrap().value();
            assert!((v - w).abs() <= 1e-12 * v);
        }
    }

    fn outage_params(h_tr: f64, gamma: f64) -> OutageModelParams<f64> {
        OutageModelParams::new(1.0, 1.0, 0.5, h_tr, gamma, 40).unwrap()
    }

    #[test]
    fn outage_trivial_regimes() {
        let p = outage_params(2.0, 100.0);
        let ctl = SeriesControl::default();
        let one = outage_probability(&p, pr(q_func(40.0_f64.sqrt()) * 0.5), &ctl).unwrap();
        assert_eq!((one.value(), one.regime), (1.0, Regime::Always));
        let zero = outage_probability(&p, pr(0.5), &ctl).unwrap();
        assert_eq!((zero.value(), zero.regime), (0.0, Regime::Never));
        let almost = outage_probability(&p, pr(0.4999), &ctl).unwrap().value();
        assert!(almost < 1e-3);
    }

    #[test]
    fn outage_series_reference_points() {
        // Values checked against the quadrature oracle and 2·10⁶-draw simulation.
        let ctl = SeriesControl::default();
        let cases = [
            (2.0, 10.0, 0.1, 0.254373),
            (2.0, 100.0, 0.1, 0.222728),
            (-5.0, 10.0, 0.05, 0.122917),
            (-5.0, 100.0, 0.2, 0.054845),
        ];
        for (h_tr, gamma, zeta, want) in cases {
            let got = outage_probability(&outage_params(h_tr, gamma), pr(zeta), &ctl).unwrap();
            assert!(
                (got.value() - want).abs() < 2e-6,
                "{h_tr} {gamma} {zeta}: {}",
                got.value()
            );
            assert!(!got.clamped());
        }
    }

    #[test]
    fn outage_series_matches_quadrature() {
        let ctl = SeriesControl::default();
        let qc = QuadratureControl::default();
        let p = outage_params(2.0, 100.0);
        let s = outage_probability(&p, pr(0.1), &ctl).unwrap().value();
        let q = outage_probability_quadrature(&p, pr(0.1), &qc).unwrap().value();
        assert!((s - q).abs() <= (1e-4 * q).max(1e-8));
    }

    #[test]
    fn joint_pdf_is_normalized() {
        let p = outage_params(2.0, 10.0);
        let qc = QuadratureControl::default();
        let inner = |y1: f64| {
            integrate_pieces(|y2| joint_power_pdf(y1, y2, &p), &[0.0, y1, y1 + 60.0 * p.var_h1], &qc)
                .unwrap()
                .value
        };
        let mass = integrate_pieces(inner, &[0.0, 1.0, 45.0 * p.var_h0], &qc)
            .unwrap()
            .value;
        assert!((mass - 1.0).abs() < 1e-6, "mass = {mass}");
    }

    fn p_half() -> OutageModelParams<f64> {
        OutageModelParams::from_variances(1.0, 2.0, 10.0, 40).unwrap()
    }

    #[test]
    fn ratio_cdf_reference_and_limits() {
        let ctl = SeriesControl::default();
        let p = p_half();
        assert_eq!(ratio_cdf(0.0, &p, &ctl).unwrap().value(), 0.0);
        for (x, want) in [
            (0.3, 0.3285014148574912),
            (1.0, 0.7236067977499788),
            (1.7, 0.8385995887898601),
        ] {
            assert!(
                (ratio_cdf(x, &p, &ctl).unwrap().value() - want).abs() < 1e-11,
                "x = {x}"
            );
        }
        assert!((ratio_cdf(1e4, &p, &ctl).unwrap().value() - 1.0).abs() < 1e-3);
        let mut prev = 0.0;
        for i in 1..200 {
            let v = ratio_cdf(i as f64 * 0.05, &p, &ctl).unwrap().value();
            assert!(v >= prev);
            prev = v;
        }
    }

    // F_X(x) = Σ (1−ρ) ρ^m I_w(m+1, m+1), w = x/(x+ρ); the regularized incomplete
    // beta with integer arguments is a binomial tail.
    fn ratio_cdf_beta(x: f64, rho: f64) -> f64 {
        let w = x / (x + rho);
        let mut total = 0.0;
        for m in 0..400usize {
            let n = 2 * m + 1;
            let mut tail = 0.0;
            for j in (m + 1)..=n {
                let ln_c = ln_factorial::<f64>(n) - ln_factorial::<f64>(j) - ln_factorial::<f64>(n - j);
                tail += (ln_c + j as f64 * w.ln() + (n - j) as f64 * (1.0 - w).ln()).exp();
            }
            total += (1.0 - rho) * rho.powi(m as i32) * tail;
        }
        total
    }

    #[test]
    fn ratio_cdf_matches_incomplete_beta_form() {
        let ctl = SeriesControl::default();
        for &(v0, v1) in &[(1.0, 2.0), (1.0, 7.25), (1.0, 1.25)] {
            let p = OutageModelParams::from_variances(v0, v1, 10.0, 40).unwrap();
            for &x in &[0.05, 0.4, 1.0, 2.5, 9.0] {
                let a = ratio_cdf(x, &p, &ctl).unwrap().value();
                let b = ratio_cdf_beta(x, p.rho);
                assert!((a - b).abs() < 1e-10, "rho = {} x = {x}: {a} vs {b}", p.rho);
            }
        }
    }

    #[test]
    fn ratio_pdf_matches_joint_density() {
        let p = p_half();
        let ctl = SeriesControl::default();
        let qc = QuadratureControl::default();
        for &x in &[0.2, 1.0, 3.0] {
            let direct = integrate_pieces(|y| y * joint_power_pdf(x * y, y, &p), &[0.0, 2.0, 80.0], &qc)
                .unwrap()
                .value;
            let series = ratio_pdf(x, &p, &ctl).unwrap();
            assert!((series - direct).abs() < 1e-9 * direct, "x = {x}");
        }
        let k = AppendixConstants::new(&pair(31.0, 11.0), 40, &p).unwrap();
        assert!((k.c4(0) - 1.0).abs() < 1e-14);
        assert!((k.c4(2) - 120.0 / 4.0).abs() < 1e-10);
    }

    #[test]
    fn at_probability_structure() {
        let ctl = SeriesControl::default();
        let p = p_half();
        assert_eq!(at_probability(&p, pr(0.5), &ctl).unwrap().value(), 0.0);
        assert_eq!(at_probability(&p, pr(1e-12), &ctl).unwrap().value(), 1.0);
        let (l3, l4) = p.at_lambdas(pr(0.1)).unwrap().unwrap();
        assert!(l3 > 0.0 && l3 < 1.0 && l4 > 1.0);
        let at = at_probability(&p, pr(0.1), &ctl).unwrap().value();
        let diff = ratio_cdf(l4, &p, &ctl).unwrap().value() - ratio_cdf(l3, &p, &ctl).unwrap().value();
        assert_eq!(at, diff);
    }

    #[test]
    fn single_precision() {
        let s = SigmaPair::new(31.0_f32, 11.0).unwrap();
        let v = ber_cg_optimal(&s, 40).unwrap().value();
        let w = ber_cg_optimal(&pair(31.0, 11.0), 40).unwrap().value();
        assert!(((v as f64) - w).abs() < 1e-5 * w.max(1e-3));
        let p = OutageModelParams::<f32>::from_variances(1.0, 2.0, 10.0, 40).unwrap();
        let c = ratio_cdf(1.0_f32, &p, &SeriesControl::default()).unwrap().value();
        assert!((c - 0.723_606_8).abs() < 1e-4);
    }
}
