use log::{debug, warn};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, SigmaSource, Sweep};
use super::curve::{Curve, CurveRow};
use super::rng::substream;
use crate::detectors::{decide, DetectorId, SigmaPair, SourceFamily};
use crate::estimator::estimate_from_normalized;
use crate::sigmodel::{
    sample_channels, sample_channels_fixed_htr, sample_channels_with_rcd, synth_energy, ChannelRealization, SourceKind,
    SystemParams,
};
use crate::specfun::{Probability, SeriesControl};
use crate::theory::{
    at_probability, ber_cg_asymptotic, ber_floor, cg_conditional_errors, outage_probability, GaussianMoments,
    OutageModelParams,
};
use crate::{Error, Result};

/// Trials (or frames) per work unit. Fixed so that the merge order, and with
/// it every floating-point sum, is independent of the thread count.
pub const CHUNK: u64 = 2048;

const TAG_CHANNEL: u64 = 0;
const TAG_BITS: u64 = 1;

fn family_tag(f: SourceFamily) -> u64 {
    match f {
        SourceFamily::ComplexGaussian => 2,
        SourceFamily::Psk => 3,
    }
}

fn family_index(f: SourceFamily) -> usize {
    match f {
        SourceFamily::ComplexGaussian => 0,
        SourceFamily::Psk => 1,
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    hits: [u64; 2],
    counted: u64,
    skipped: u64,
    theory: [f64; 2],
}

impl Tally {
    fn merge(&mut self, o: &Tally) {
        self.hits[0] += o.hits[0];
        self.hits[1] += o.hits[1];
        self.counted += o.counted;
        self.skipped += o.skipped;
        self.theory[0] += o.theory[0];
        self.theory[1] += o.theory[1];
    }

    fn row(&self, x: f64, label: String, slot: usize) -> CurveRow {
        if self.skipped > 0 {
            warn!(
                "{label} at x = {x}: {} decisions skipped (indistinguishable variances)",
                self.skipped
            );
        }
        let theory = self.theory[slot] / self.counted as f64;
        CurveRow::from_counts(x, label, theory, self.hits[slot], self.counted, self.skipped)
    }
}

/// Parameters in force at one sweep point.
struct Point {
    index: u64,
    x: f64,
    params: SystemParams<f64>,
    rcd: Option<f64>,
    sigma: SigmaSource,
    target: Option<f64>,
}

fn points(cfg: &ExperimentConfig) -> Vec<Point> {
    cfg.sweep
        .points()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut p = Point {
                index: i as u64,
                x,
                params: cfg.scenario,
                rcd: cfg.fixed_rcd,
                sigma: cfg.sigma_source,
                target: cfg.target_ber,
            };
            match cfg.sweep {
                Sweep::SnrDb { .. } => p.params = p.params.with_snr_db(x),
                Sweep::BlockLen { .. } => p.params.samples_per_bit = x as usize,
                Sweep::Rcd { .. } => p.rcd = Some(x),
                Sweep::TrainingCount { .. } => {
                    if let SigmaSource::Estimated {
                        ref mut training_blocks,
                        ..
                    } = p.sigma
                    {
                        *training_blocks = x as usize;
                    }
                }
                Sweep::TargetBer { .. } => p.target = Some(x),
            }
            p
        })
        .collect()
}

fn family_params(params: &SystemParams<f64>, f: SourceFamily) -> SystemParams<f64> {
    match (f, params.source_kind) {
        (SourceFamily::ComplexGaussian, _) => params.with_source(SourceKind::ComplexGaussian),
        (SourceFamily::Psk, SourceKind::Psk { .. }) => *params,
        (SourceFamily::Psk, _) => params.with_source(SourceKind::Psk { constellation_order: 4 }),
    }
}

fn draw_channel<R: Rng>(cfg: &ExperimentConfig, pt: &Point, rng: &mut R) -> Result<ChannelRealization<f64>> {
    if let Some(fc) = cfg.fixed_channel {
        return Ok(ChannelRealization::from_power_gains(fc.h0_sq, fc.h1_sq, &pt.params));
    }
    if let Some(r) = pt.rcd {
        return sample_channels_with_rcd(&pt.params, r, cfg.fixed_h_tr, rng);
    }
    Ok(match cfg.fixed_h_tr {
        Some(h) => sample_channels_fixed_htr(&pt.params, h, rng),
        None => sample_channels(&pt.params, rng),
    })
}

/// Conditional `(P(d̂=1|H0), P(d̂=0|H1))` predicted for `det` on this channel
/// with true variances; `None` when the variances coincide.
fn conditional_theory(
    det: DetectorId,
    ch: &ChannelRealization<f64>,
    params: &SystemParams<f64>,
) -> Result<Option<(f64, f64)>> {
    let s = SigmaPair::new(ch.sigma0_sq, ch.sigma1_sq)?;
    if s.is_degenerate() {
        return Ok(None);
    }
    let n = params.samples_per_bit;
    let t = det.threshold(&s, params.noise_power, n)?;
    let pair = match det {
        DetectorId::CgOptimal | DetectorId::Balanced => cg_conditional_errors(&s, n, &t)?,
        DetectorId::CgSuboptimal => GaussianMoments::cg(&s, n).conditional_errors(&t),
        DetectorId::PskNoiseAware | DetectorId::PskAsymptotic => {
            GaussianMoments::psk(ch, &family_params(params, SourceFamily::Psk), n).conditional_errors(&t)
        }
    };
    Ok(Some(pair))
}

fn families(dets: &[DetectorId]) -> [bool; 2] {
    let mut present = [false; 2];
    for d in dets {
        present[family_index(d.family())] = true;
    }
    present
}

fn require_detectors(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.detectors.is_empty() {
        return Err(Error::Config("no detectors selected".into()));
    }
    Ok(())
}

/// Thread pool wrapper; results never depend on the pool size.
pub struct Runner {
    pool: rayon::ThreadPool,
}

impl Runner {
    /// `threads == 0` picks rayon's default.
    pub fn new(threads: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Runs `unit(i, tallies)` for `i in 0..units`, chunked and merged in order.
    fn tally<F>(&self, units: u64, width: usize, unit: F) -> Result<Vec<Tally>>
    where
        F: Fn(u64, &mut [Tally]) -> Result<()> + Sync,
    {
        let chunks = units.div_ceil(CHUNK);
        let parts: Vec<Result<Vec<Tally>>> = self.pool.install(|| {
            (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut t = vec![Tally::default(); width];
                    for i in c * CHUNK..((c + 1) * CHUNK).min(units) {
                        unit(i, &mut t)?;
                    }
                    Ok(t)
                })
                .collect()
        });
        let mut total = vec![Tally::default(); width];
        for part in parts {
            for (acc, t) in total.iter_mut().zip(part?.iter()) {
                acc.merge(t);
            }
        }
        Ok(total)
    }

    fn perfect_point(&self, cfg: &ExperimentConfig, pt: &Point) -> Result<Vec<Tally>> {
        let present = families(&cfg.detectors);
        let fparams = [
            family_params(&pt.params, SourceFamily::ComplexGaussian),
            family_params(&pt.params, SourceFamily::Psk),
        ];
        let n = pt.params.samples_per_bit;
        self.tally(cfg.trials, cfg.detectors.len(), |t, tallies| {
            let ch = draw_channel(cfg, pt, &mut substream(cfg.seed, pt.index, t, TAG_CHANNEL))?;
            let bit = u8::from(substream(cfg.seed, pt.index, t, TAG_BITS).random::<bool>());
            let mut energy = [0.0; 2];
            for f in [SourceFamily::ComplexGaussian, SourceFamily::Psk] {
                let k = family_index(f);
                if present[k] {
                    let mut rng = substream(cfg.seed, pt.index, t, family_tag(f));
                    energy[k] = synth_energy(&ch, bit, &fparams[k], &mut rng);
                }
            }
            let s = SigmaPair::new(ch.sigma0_sq, ch.sigma1_sq)?;
            for (det, tally) in cfg.detectors.iter().zip(tallies.iter_mut()) {
                let Some((e0, e1)) = conditional_theory(*det, &ch, &pt.params)? else {
                    debug!("trial {t}: equal variances, {det} skipped");
                    tally.skipped += 1;
                    continue;
                };
                let thr = det.threshold(&s, pt.params.noise_power, n)?;
                tally.counted += 1;
                tally.hits[0] += u64::from(decide(energy[family_index(det.family())], &thr) != bit);
                tally.theory[0] += 0.5 * (e0 + e1);
            }
            Ok(())
        })
    }

    fn estimated_point(
        &self,
        cfg: &ExperimentConfig,
        pt: &Point,
        m: usize,
        mt: usize,
        training_bit: u8,
    ) -> Result<Vec<Tally>> {
        let present = families(&cfg.detectors);
        let fparams = [
            family_params(&pt.params, SourceFamily::ComplexGaussian),
            family_params(&pt.params, SourceFamily::Psk),
        ];
        let n = pt.params.samples_per_bit;
        let nf = n as f64;
        let frames = cfg.trials.div_ceil(m as u64);
        let mf = m as u64;
        self.tally(frames, cfg.detectors.len(), |f, tallies| {
            let ch = draw_channel(cfg, pt, &mut substream(cfg.seed, pt.index, f, TAG_CHANNEL))?;
            let mut bit_rng = substream(cfg.seed, pt.index, f, TAG_BITS);
            let bits: Vec<u8> = if cfg.balanced_bits {
                let mut b: Vec<u8> = (0..m).map(|i| u8::from(i >= m / 2)).collect();
                b.shuffle(&mut bit_rng);
                b
            } else {
                (0..m).map(|_| u8::from(bit_rng.random::<bool>())).collect()
            };
            let mut energies: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
            let mut estimates = [None, None];
            for fam in [SourceFamily::ComplexGaussian, SourceFamily::Psk] {
                let k = family_index(fam);
                if !present[k] {
                    continue;
                }
                let mut rng = substream(cfg.seed, pt.index, f, family_tag(fam));
                let data: Vec<f64> = bits
                    .iter()
                    .map(|&b| synth_energy(&ch, b, &fparams[k], &mut rng))
                    .collect();
                let training: Vec<f64> = (0..mt)
                    .map(|_| synth_energy(&ch, training_bit, &fparams[k], &mut rng) / nf)
                    .collect();
                let normalized: Vec<f64> = data.iter().map(|e| e / nf).collect();
                let est = estimate_from_normalized(&normalized, &training, training_bit)?;
                estimates[k] = Some(SigmaPair::new(est.sigma0_sq_hat, est.sigma1_sq_hat)?);
                energies[k] = data;
            }
            for (det, tally) in cfg.detectors.iter().zip(tallies.iter_mut()) {
                let k = family_index(det.family());
                let s_hat = estimates[k].expect("family energies synthesized");
                let thr = match det.threshold(&s_hat, pt.params.noise_power, n) {
                    Ok(t) => t,
                    Err(e @ (Error::DetectionUndefined { .. } | Error::NumericDomain(_))) => {
                        debug!("frame {f}: {det} skipped: {e}");
                        tally.skipped += mf;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let theory = match conditional_theory(*det, &ch, &pt.params)? {
                    Some((e0, e1)) => 0.5 * (e0 + e1),
                    None => 0.5,
                };
                let errors = bits
                    .iter()
                    .zip(&energies[k])
                    .filter(|(&b, &z)| decide(z, &thr) != b)
                    .count();
                tally.counted += mf;
                tally.hits[0] += errors as u64;
                tally.theory[0] += theory * m as f64;
            }
            Ok(())
        })
    }

    fn ber_point(&self, cfg: &ExperimentConfig, pt: &Point) -> Result<Vec<Tally>> {
        match pt.sigma {
            SigmaSource::Perfect => self.perfect_point(cfg, pt),
            SigmaSource::Estimated {
                data_blocks,
                training_blocks,
                training_bit,
            } => self.estimated_point(cfg, pt, data_blocks, training_blocks, training_bit),
        }
    }

    /// BER of every configured detector across the sweep; the theory column
    /// averages the matched conditional BER over the realized channels.
    pub fn run_ber_sweep(&self, cfg: &ExperimentConfig) -> Result<Curve> {
        cfg.validate()?;
        require_detectors(cfg)?;
        if matches!(cfg.sweep, Sweep::TargetBer { .. }) {
            return Err(Error::Config("a BER sweep cannot run over target_ber".into()));
        }
        let mut rows = Vec::new();
        for pt in points(cfg) {
            let tallies = self.ber_point(cfg, &pt)?;
            for (det, t) in cfg.detectors.iter().zip(&tallies) {
                rows.push(t.row(pt.x, det.to_string(), 0));
            }
        }
        Ok(Curve { rows })
    }

    /// Conditional error rates under each hypothesis, with true variances.
    /// Every trial synthesizes one block per hypothesis on the same channel.
    pub fn run_balance_sweep(&self, cfg: &ExperimentConfig) -> Result<Curve> {
        cfg.validate()?;
        require_detectors(cfg)?;
        if cfg.sigma_source != SigmaSource::Perfect {
            return Err(Error::Config(
                "the balance sweep uses true variances; set sigma_source to perfect".into(),
            ));
        }
        if matches!(cfg.sweep, Sweep::TargetBer { .. } | Sweep::TrainingCount { .. }) {
            return Err(Error::Config(
                "the balance sweep needs an snr_db, block_len or rcd sweep".into(),
            ));
        }
        let present = families(&cfg.detectors);
        let mut rows = Vec::new();
        for pt in points(cfg) {
            let fparams = [
                family_params(&pt.params, SourceFamily::ComplexGaussian),
                family_params(&pt.params, SourceFamily::Psk),
            ];
            let n = pt.params.samples_per_bit;
            let tallies = self.tally(cfg.trials, cfg.detectors.len(), |t, tallies| {
                let ch = draw_channel(cfg, &pt, &mut substream(cfg.seed, pt.index, t, TAG_CHANNEL))?;
                let mut energy = [[0.0; 2]; 2];
                for f in [SourceFamily::ComplexGaussian, SourceFamily::Psk] {
                    let k = family_index(f);
                    if present[k] {
                        let mut rng = substream(cfg.seed, pt.index, t, family_tag(f));
                        energy[k][0] = synth_energy(&ch, 0, &fparams[k], &mut rng);
                        energy[k][1] = synth_energy(&ch, 1, &fparams[k], &mut rng);
                    }
                }
                let s = SigmaPair::new(ch.sigma0_sq, ch.sigma1_sq)?;
                for (det, tally) in cfg.detectors.iter().zip(tallies.iter_mut()) {
                    let Some((e0, e1)) = conditional_theory(*det, &ch, &pt.params)? else {
                        tally.skipped += 1;
                        continue;
                    };
                    let thr = det.threshold(&s, pt.params.noise_power, n)?;
                    let z = energy[family_index(det.family())];
                    tally.counted += 1;
                    tally.hits[0] += u64::from(decide(z[0], &thr) != 0);
                    tally.hits[1] += u64::from(decide(z[1], &thr) != 1);
                    tally.theory[0] += e0;
                    tally.theory[1] += e1;
                }
                Ok(())
            })?;
            for (det, t) in cfg.detectors.iter().zip(&tallies) {
                rows.push(t.row(pt.x, format!("{det}:h0"), 0));
                rows.push(t.row(pt.x, format!("{det}:h1"), 1));
            }
        }
        Ok(Curve { rows })
    }

    /// Empirical probability that the large-N BER (`outage` rows) or the
    /// error floor (`at` rows) of a channel draw reaches the target, against
    /// the series values. Needs `fixed_h_tr`.
    pub fn run_outage_sweep(&self, cfg: &ExperimentConfig) -> Result<Curve> {
        cfg.validate()?;
        let h_tr = cfg
            .fixed_h_tr
            .ok_or_else(|| Error::Config("the outage sweep needs fixed_h_tr".into()))?;
        if matches!(cfg.sweep, Sweep::Rcd { .. } | Sweep::TrainingCount { .. }) {
            return Err(Error::Config(
                "the outage sweep needs an snr_db, block_len or target_ber sweep".into(),
            ));
        }
        let ctl = SeriesControl::default();
        let mut rows = Vec::new();
        for pt in points(cfg) {
            let target = pt
                .target
                .ok_or_else(|| Error::Config("the outage sweep needs target_ber".into()))?;
            let model = OutageModelParams::from_system(&pt.params, h_tr)?;
            let zeta = Probability::new(target)?;
            let theory = [
                outage_probability(&model, zeta, &ctl)?.value(),
                at_probability(&model, zeta, &ctl)?.value(),
            ];
            let gamma = pt.params.snr();
            let n = pt.params.samples_per_bit;
            let tallies = self.tally(cfg.trials, 2, |t, tallies| {
                let mut rng = substream(cfg.seed, pt.index, t, TAG_CHANNEL);
                let ch = sample_channels_fixed_htr(&pt.params, h_tr, &mut rng);
                let ber = ber_cg_asymptotic(ch.delta, ch.sigma_sum, gamma, n)?.value();
                tallies[0].counted += 1;
                tallies[0].hits[0] += u64::from(ber >= target);
                if ch.sigma_sum > 0.0 {
                    let floor = ber_floor(ch.delta, ch.sigma_sum, n)?.value();
                    tallies[1].counted += 1;
                    tallies[1].hits[0] += u64::from(floor >= target);
                } else {
                    tallies[1].skipped += 1;
                }
                Ok(())
            })?;
            for (k, label) in ["outage", "at"].into_iter().enumerate() {
                let t = &tallies[k];
                rows.push(CurveRow::from_counts(
                    pt.x, label, theory[k], t.hits[0], t.counted, t.skipped,
                ));
            }
        }
        Ok(Curve { rows })
    }

    /// BER against the number of training blocks. Each point carries the
    /// estimated-variance rows (`<id>`) and a perfect-variance reference
    /// (`<id>:perfect`) under the same scenario.
    pub fn run_training_sweep(&self, cfg: &ExperimentConfig) -> Result<Curve> {
        cfg.validate()?;
        require_detectors(cfg)?;
        if !matches!(cfg.sweep, Sweep::TrainingCount { .. }) {
            return Err(Error::Config("the training sweep needs a training_count sweep".into()));
        }
        let mut rows = Vec::new();
        for pt in points(cfg) {
            let est = self.ber_point(cfg, &pt)?;
            let perfect = self.perfect_point(cfg, &pt)?;
            for (det, t) in cfg.detectors.iter().zip(&est) {
                rows.push(t.row(pt.x, det.to_string(), 0));
            }
            for (det, t) in cfg.detectors.iter().zip(&perfect) {
                rows.push(t.row(pt.x, format!("{det}:perfect"), 0));
            }
        }
        Ok(Curve { rows })
    }
}

fn default_runner() -> Result<Runner> {
    Runner::new(0)
}

pub fn run_ber_sweep(cfg: &ExperimentConfig) -> Result<Curve> {
    default_runner()?.run_ber_sweep(cfg)
}

pub fn run_balance_sweep(cfg: &ExperimentConfig) -> Result<Curve> {
    default_runner()?.run_balance_sweep(cfg)
}

pub fn run_outage_sweep(cfg: &ExperimentConfig) -> Result<Curve> {
    default_runner()?.run_outage_sweep(cfg)
}

pub fn run_training_sweep(cfg: &ExperimentConfig) -> Result<Curve> {
    default_runner()?.run_training_sweep(cfg)
}
