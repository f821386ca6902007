//! Three-node signal model: channel draws and received-signal synthesis.
//!
//! Under tag bit `d` the reader sees `y[n] = h_d·s[n] + w[n]` with
//! `h0 = h_sr` and `h1 = h_sr + α·h_st·h_tr`. Tag-side noise is neglected.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// Ambient source family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[derive(Default)]
pub enum SourceKind {
    #[default]
    ComplexGaussian,
    /// Constant-modulus M-PSK. The order only selects phases; energy
    /// statistics do not depend on it.
    Psk { constellation_order: u32 },
}

fn default_source_power<T: Real>() -> T {
    T::c(10.0)
}
fn default_one<T: Real>() -> T {
    T::one()
}
fn default_alpha<T: Real>() -> T {
    T::c(0.5)
}
fn default_var_tr<T: Real>() -> T {
    T::c(10.0)
}
fn default_samples_per_bit() -> usize {
    40
}

/// Static scenario description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    bound(serialize = "T: Serialize", deserialize = "T: Real + Deserialize<'de>")
)]
pub struct SystemParams<T> {
    /// `Ps`, linear.
    #[serde(default = "default_source_power")]
    pub source_power: T,
    /// `Nw`, linear.
    #[serde(default = "default_one")]
    pub noise_power: T,
    /// Tag reflection coefficient.
    #[serde(default = "default_alpha")]
    pub alpha: T,
    /// `N`, samples per tag bit.
    #[serde(default = "default_samples_per_bit")]
    pub samples_per_bit: usize,
    #[serde(default)]
    pub source_kind: SourceKind,
    #[serde(default = "default_one")]
    pub var_st: T,
    #[serde(default = "default_one")]
    pub var_sr: T,
    #[serde(default = "default_var_tr")]
    pub var_tr: T,
}

impl<T: Real> Default for SystemParams<T> {
    fn default() -> Self {
        Self {
            source_power: default_source_power(),
            noise_power: T::one(),
            alpha: default_alpha(),
            samples_per_bit: default_samples_per_bit(),
            source_kind: SourceKind::ComplexGaussian,
            var_st: T::one(),
            var_sr: T::one(),
            var_tr: default_var_tr(),
        }
    }
}

impl<T: Real> SystemParams<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("source_power", self.source_power),
            ("noise_power", self.noise_power),
            ("var_st", self.var_st),
            ("var_sr", self.var_sr),
            ("var_tr", self.var_tr),
        ];
        for (name, v) in positive {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.alpha > T::zero() && self.alpha <= T::one()) {
            return Err(Error::Config(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if self.samples_per_bit < 2 || !self.samples_per_bit.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "samples_per_bit must be even and at least 2, got {}",
                self.samples_per_bit
            )));
        }
        if let SourceKind::Psk { constellation_order } = self.source_kind {
            if constellation_order < 2 {
                return Err(Error::Config(format!(
                    "PSK constellation order must be at least 2, got {constellation_order}"
                )));
            }
        }
        Ok(())
    }

    /// `γ = Ps / Nw`.
    pub fn snr(&self) -> T {
        self.source_power / self.noise_power
    }

    /// Sets `Ps` so that `Ps / Nw` equals `snr_db` decibels.
    pub fn with_snr_db(mut self, snr_db: T) -> Self {
        self.source_power = self.noise_power * T::c(10.0).powf(snr_db / T::c(10.0));
        self
    }

    pub fn with_source(mut self, kind: SourceKind) -> Self {
        self.source_kind = kind;
        self
    }
}

/// One fading draw with all derived quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRealization<T> {
    pub h_st: Complex<T>,
    pub h_sr: Complex<T>,
    pub h_tr: Complex<T>,
    pub h0: Complex<T>,
    pub h1: Complex<T>,
    pub sigma0_sq: T,
    pub sigma1_sq: T,
    /// `||h0|² − |h1|²|`
    pub delta: T,
    /// `|h0|² + |h1|²`
    pub sigma_sum: T,
    /// `delta / sigma_sum`; `None` when both gains vanish.
    pub rcd: Option<T>,
}

impl<T: Real> ChannelRealization<T> {
    /// Builds the realization from the three link coefficients.
    pub fn from_links(h_st: Complex<T>, h_sr: Complex<T>, h_tr: Complex<T>, params: &SystemParams<T>) -> Self {
        let h0 = h_sr;
        let h1 = h_sr + h_st * h_tr * params.alpha;
        let mut ch = Self {
            h_st,
            h_sr,
            h_tr,
            h0,
            h1,
            sigma0_sq: T::zero(),
            sigma1_sq: T::zero(),
            delta: T::zero(),
            sigma_sum: T::zero(),
            rcd: None,
        };
        ch.refresh(params);
        ch
    }

    /// Builds a realization with prescribed composite channels. The link
    /// coefficients are back-filled as `h_tr = 1`, `h_st = (h1 − h0)/α`.
    pub fn from_gains(h0: Complex<T>, h1: Complex<T>, params: &SystemParams<T>) -> Self {
        let h_st = (h1 - h0) / params.alpha;
        let mut ch = Self::from_links(h_st, h0, Complex::new(T::one(), T::zero()), params);
        // Keep h1 bit-exact rather than reconstructed through α.
        ch.h1 = h1;
        ch.refresh(params);
        ch
    }

    /// Real, nonnegative channels with the given power gains.
    pub fn from_power_gains(h0_sq: T, h1_sq: T, params: &SystemParams<T>) -> Self {
        Self::from_gains(
            Complex::new(h0_sq.sqrt(), T::zero()),
            Complex::new(h1_sq.sqrt(), T::zero()),
            params,
        )
    }

    /// Recomputes the derived fields, e.g. after a change of `Ps`.
    pub fn refresh(&mut self, params: &SystemParams<T>) {
        let g0 = self.h0.norm_sqr();
        let g1 = self.h1.norm_sqr();
        self.sigma0_sq = g0 * params.source_power + params.noise_power;
        self.sigma1_sq = g1 * params.source_power + params.noise_power;
        self.delta = (g0 - g1).abs();
        self.sigma_sum = g0 + g1;
        self.rcd = (self.sigma_sum > T::zero()).then(|| self.delta / self.sigma_sum);
    }

    pub fn gain(&self, bit: u8) -> Complex<T> {
        if bit == 0 {
            self.h0
        } else {
            self.h1
        }
    }
}

/// `CN(0, var)` draw.
pub fn complex_normal<T: Real, R: Rng + ?Sized>(var: T, rng: &mut R) -> Complex<T> {
    let scale = (var * T::c(0.5)).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(T::c(re) * scale, T::c(im) * scale)
}

fn unit_phase<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let phi: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    Complex::new(T::c(phi.cos()), T::c(phi.sin()))
}

/// Independent Rayleigh draws of all three links.
pub fn sample_channels<T: Real, R: Rng + ?Sized>(params: &SystemParams<T>, rng: &mut R) -> ChannelRealization<T> {
    let h_st = complex_normal(params.var_st, rng);
    let h_sr = complex_normal(params.var_sr, rng);
    let h_tr = complex_normal(params.var_tr, rng);
    ChannelRealization::from_links(h_st, h_sr, h_tr, params)
}

/// As [`sample_channels`] with the tag–reader link held at a real constant.
pub fn sample_channels_fixed_htr<T: Real, R: Rng + ?Sized>(
    params: &SystemParams<T>,
    h_tr: T,
    rng: &mut R,
) -> ChannelRealization<T> {
    let h_st = complex_normal(params.var_st, rng);
    let h_sr = complex_normal(params.var_sr, rng);
    ChannelRealization::from_links(h_st, h_sr, Complex::new(h_tr, T::zero()), params)
}

/// `|h1|²` that puts the pair at relative channel difference `r`, on the
/// smaller or larger side of `|h0|²`.
pub fn rcd_partner_gain<T: Real>(h0_sq: T, r: T, larger: bool) -> T {
    if larger {
        h0_sq * (T::one() + r) / (T::one() - r)
    } else {
        h0_sq * (T::one() - r) / (T::one() + r)
    }
}

/// Draws `h0` as configured, then places `h1` at the requested relative
/// channel difference (either side with equal probability, uniform phase).
/// `h_tr` is drawn (or fixed) and `h_st` back-computed so every invariant of
/// [`ChannelRealization`] holds.
pub fn sample_channels_with_rcd<T: Real, R: Rng + ?Sized>(
    params: &SystemParams<T>,
    target_rcd: T,
    fixed_h_tr: Option<T>,
    rng: &mut R,
) -> Result<ChannelRealization<T>> {
    if !(target_rcd >= T::zero() && target_rcd < T::one()) {
        return Err(Error::domain("target RCD", target_rcd));
    }
    let h0 = loop {
        let h = complex_normal(params.var_sr, rng);
        if h.norm_sqr() > T::zero() {
            break h;
        }
    };
    let larger = rng.random::<bool>();
    let g1 = rcd_partner_gain(h0.norm_sqr(), target_rcd, larger);
    let h1 = unit_phase(rng) * g1.sqrt();
    let h_tr = match fixed_h_tr {
        Some(v) => Complex::new(v, T::zero()),
        None => loop {
            let h = complex_normal(params.var_tr, rng);
            if h.norm_sqr() > T::zero() {
                break h;
            }
        },
    };
    let h_st = (h1 - h0) / (h_tr * params.alpha);
    let mut ch = ChannelRealization::from_links(h_st, h0, h_tr, params);
    ch.h1 = h1;
    ch.refresh(params);
    Ok(ch)
}

/// `N` received samples for one tag bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalBlock<T> {
    pub samples: Vec<Complex<T>>,
    pub true_bit: u8,
    /// `Σ|y[n]|²`
    pub energy: T,
}

fn source_symbol<T: Real, R: Rng + ?Sized>(params: &SystemParams<T>, rng: &mut R) -> Complex<T> {
    match params.source_kind {
        SourceKind::ComplexGaussian => complex_normal(params.source_power, rng),
        SourceKind::Psk { constellation_order } => {
            let k = rng.random_range(0..constellation_order.max(1));
            let phi = std::f64::consts::TAU * f64::from(k) / f64::from(constellation_order.max(1));
            Complex::new(T::c(phi.cos()), T::c(phi.sin())) * params.source_power.sqrt()
        }
    }
}

fn sample<T: Real, R: Rng + ?Sized>(h: Complex<T>, params: &SystemParams<T>, rng: &mut R) -> Complex<T> {
    h * source_symbol(params, rng) + complex_normal(params.noise_power, rng)
}

pub fn synth_block<T: Real, R: Rng + ?Sized>(
    ch: &ChannelRealization<T>,
    bit: u8,
    params: &SystemParams<T>,
    rng: &mut R,
) -> SignalBlock<T> {
    let h = ch.gain(bit);
    let samples: Vec<_> = (0..params.samples_per_bit).map(|_| sample(h, params, rng)).collect();
    let energy = samples.iter().map(|y| y.norm_sqr()).sum();
    SignalBlock {
        samples,
        true_bit: bit,
        energy,
    }
}

/// Energy of a block without keeping its samples. Consumes the random
/// stream exactly as [`synth_block`] does.
pub fn synth_energy<T: Real, R: Rng + ?Sized>(
    ch: &ChannelRealization<T>,
    bit: u8,
    params: &SystemParams<T>,
    rng: &mut R,
) -> T {
    let h = ch.gain(bit);
    (0..params.samples_per_bit)
        .map(|_| sample(h, params, rng).norm_sqr())
        .sum()
}

/// Data blocks plus training blocks, all under one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame<T> {
    pub data_blocks: Vec<SignalBlock<T>>,
    pub training_blocks: Vec<SignalBlock<T>>,
}

pub fn synth_frame<T: Real, R: Rng + ?Sized>(
    ch: &ChannelRealization<T>,
    bits: &[u8],
    training_count: usize,
    training_bit: u8,
    params: &SystemParams<T>,
    rng: &mut R,
) -> Result<Frame<T>> {
    if bits.is_empty() || !bits.len().is_multiple_of(2) {
        return Err(Error::Config(format!(
            "frame length must be even and positive, got {}",
            bits.len()
        )));
    }
    let data_blocks = bits.iter().map(|&b| synth_block(ch, b, params, rng)).collect();
    let training_blocks = (0..training_count)
        .map(|_| synth_block(ch, training_bit, params, rng))
        .collect();
    Ok(Frame {
        data_blocks,
        training_blocks,
    })
}
