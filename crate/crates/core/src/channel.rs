//! K-user Gaussian and quasi-static Rayleigh fading multiple access channels.
//!
//! Powers and SNRs are linear everywhere in this module; conversion to
//! decibels happens only through [`db_to_linear`] / [`linear_to_db`] at the
//! edges. The base unit is one complex channel use.

use std::ops::{Deref, DerefMut};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};

/// Relative slack applied to the power-constraint comparison.
pub const POWER_TOLERANCE: f64 = 1e-9;

/// A finite sequence of complex samples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComplexSignal(Vec<Complex64>);

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>) -> Self {
        Self(samples)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len])
    }

    /// Σ|x_i|².
    pub fn energy(&self) -> f64 {
        energy(&self.0)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    /// Returns a copy with every sample multiplied by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self(self.0.iter().map(|&x| x * factor).collect())
    }
}

impl Deref for ComplexSignal {
    type Target = [Complex64];
    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl DerefMut for ComplexSignal {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }
}

impl From<Vec<Complex64>> for ComplexSignal {
    fn from(v: Vec<Complex64>) -> Self {
        Self(v)
    }
}

impl FromIterator<Complex64> for ComplexSignal {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

pub fn energy(x: &[Complex64]) -> f64 {
    x.iter().map(|s| s.norm_sqr()).sum()
}

/// Anything that can be placed on the channel as one user's input.
pub trait Waveform {
    /// Length in complex channel uses.
    fn len(&self) -> usize;
    fn energy(&self) -> f64;
    /// Adds `gain * self` into `out`, which has length `self.len()`.
    fn accumulate(&self, out: &mut [Complex64], gain: Complex64);

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Waveform for ComplexSignal {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn energy(&self) -> f64 {
        ComplexSignal::energy(self)
    }

    fn accumulate(&self, out: &mut [Complex64], gain: Complex64) {
        for (o, &x) in out.iter_mut().zip(&self.0) {
            *o += gain * x;
        }
    }
}

impl<T: Waveform + ?Sized> Waveform for &T {
    fn len(&self) -> usize {
        (**self).len()
    }

    fn energy(&self) -> f64 {
        (**self).energy()
    }

    fn accumulate(&self, out: &mut [Complex64], gain: Complex64) {
        (**self).accumulate(out, gain)
    }
}

/// A mostly-idle frame: a few non-overlapping blocks inside a long zero signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    len: usize,
    blocks: Vec<(usize, ComplexSignal)>,
}

impl SparseSignal {
    pub fn new(len: usize) -> Self {
        Self { len, blocks: Vec::new() }
    }

    /// Places `block` at `offset`. Blocks must not overlap.
    pub fn place(&mut self, offset: usize, block: ComplexSignal) -> Result<()> {
        let end = offset + block.len();
        if end > self.len {
            return Err(config_err(format!(
                "block [{offset}, {end}) exceeds frame length {}",
                self.len
            )));
        }
        if self.blocks.iter().any(|(o, b)| offset < o + b.len() && *o < end) {
            return Err(config_err(format!("block at {offset} overlaps an existing block")));
        }
        self.blocks.push((offset, block));
        self.blocks.sort_by_key(|(o, _)| *o);
        Ok(())
    }

    pub fn blocks(&self) -> &[(usize, ComplexSignal)] {
        &self.blocks
    }

    pub fn to_dense(&self) -> ComplexSignal {
        let mut out = ComplexSignal::zeros(self.len);
        self.accumulate(&mut out, Complex64::new(1.0, 0.0));
        out
    }
}

impl Waveform for SparseSignal {
    fn len(&self) -> usize {
        self.len
    }

    fn energy(&self) -> f64 {
        self.blocks.iter().map(|(_, b)| b.energy()).sum()
    }

    fn accumulate(&self, out: &mut [Complex64], gain: Complex64) {
        for (offset, block) in &self.blocks {
            block.accumulate(&mut out[*offset..*offset + block.len()], gain);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelModel {
    Awgn,
    Rayleigh,
}

impl ChannelModel {
    pub fn name(self) -> &'static str {
        match self {
            ChannelModel::Awgn => "awgn",
            ChannelModel::Rayleigh => "rayleigh",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    /// σ² per complex sample.
    pub noise_power: f64,
    /// P per complex sample.
    pub power_limit: f64,
    pub model: ChannelModel,
    /// Skips the noise draw entirely (the σ² → 0 limit).
    pub noiseless: bool,
}

impl ChannelConfig {
    pub fn new(noise_power: f64, power_limit: f64, model: ChannelModel) -> Result<Self> {
        let cfg = Self { noise_power, power_limit, model, noiseless: false };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Unit power limit with σ² set from an SNR in dB.
    pub fn from_snr_db(snr_db: f64, model: ChannelModel) -> Result<Self> {
        Self::new(1.0 / db_to_linear(snr_db), 1.0, model)
    }

    pub fn noiseless(mut self) -> Self {
        self.noiseless = true;
        self
    }

    pub fn snr(&self) -> f64 {
        self.power_limit / self.noise_power
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(config_err(format!("noise power must be positive, got {}", self.noise_power)));
        }
        if !(self.power_limit > 0.0 && self.power_limit.is_finite()) {
            return Err(config_err(format!("power limit must be positive, got {}", self.power_limit)));
        }
        Ok(())
    }
}

/// One complex gain per active user, constant over the frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingRealization {
    pub gains: Vec<Complex64>,
}

impl FadingRealization {
    /// Draws `k` i.i.d. CN(0, 1) gains.
    pub fn sample<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        Self { gains: (0..k).map(|_| complex_normal(rng, 1.0)).collect() }
    }

    pub fn unit(k: usize) -> Self {
        Self { gains: vec![Complex64::new(1.0, 0.0); k] }
    }
}

/// One CN(0, variance) draw.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// True iff ‖x‖² ≤ n·P up to a relative rounding slack.
pub fn check_power<W: Waveform + ?Sized>(x: &W, cfg: &ChannelConfig) -> bool {
    let budget = x.len() as f64 * cfg.power_limit;
    x.energy() <= budget * (1.0 + POWER_TOLERANCE)
}

fn validate_inputs<W: Waveform>(inputs: &[W], cfg: &ChannelConfig) -> Result<Option<usize>> {
    cfg.validate()?;
    let Some(first) = inputs.first() else {
        return Ok(None);
    };
    let n = first.len();
    for x in inputs {
        if x.len() != n {
            return Err(Error::Dimension { expected: n, got: x.len() });
        }
        if !check_power(x, cfg) {
            return Err(Error::PowerConstraint { energy: x.energy(), budget: n as f64 * cfg.power_limit });
        }
    }
    Ok(Some(n))
}

fn add_noise<R: Rng + ?Sized>(y: &mut [Complex64], cfg: &ChannelConfig, rng: &mut R) {
    if cfg.noiseless {
        return;
    }
    let s = (cfg.noise_power / 2.0).sqrt();
    for v in y.iter_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *v += Complex64::new(s * re, s * im);
    }
}

/// Y = Σ x_i + Z with Z ~ CN(0, σ² I).
///
/// With no inputs the output length must come from `len_if_empty`.
pub fn awgn_mac_transmit<W: Waveform, R: Rng + ?Sized>(
    inputs: &[W],
    len_if_empty: usize,
    cfg: &ChannelConfig,
    rng: &mut R,
) -> Result<ComplexSignal> {
    let n = validate_inputs(inputs, cfg)?.unwrap_or(len_if_empty);
    let mut y = ComplexSignal::zeros(n);
    let one = Complex64::new(1.0, 0.0);
    for x in inputs {
        x.accumulate(&mut y, one);
    }
    add_noise(&mut y, cfg, rng);
    Ok(y)
}

/// Y = Σ H_i x_i + Z with the supplied gains.
pub fn fading_mac_transmit_with<W: Waveform, R: Rng + ?Sized>(
    inputs: &[W],
    len_if_empty: usize,
    realization: &FadingRealization,
    cfg: &ChannelConfig,
    rng: &mut R,
) -> Result<ComplexSignal> {
    if realization.gains.len() != inputs.len() {
        return Err(Error::Dimension { expected: inputs.len(), got: realization.gains.len() });
    }
    let n = validate_inputs(inputs, cfg)?.unwrap_or(len_if_empty);
    let mut y = ComplexSignal::zeros(n);
    for (x, &h) in inputs.iter().zip(&realization.gains) {
        x.accumulate(&mut y, h);
    }
    add_noise(&mut y, cfg, rng);
    Ok(y)
}

/// Samples one gain per user, then transmits. The realization is returned
/// for genie use only.
pub fn fading_mac_transmit<W: Waveform, R: Rng + ?Sized>(
    inputs: &[W],
    len_if_empty: usize,
    cfg: &ChannelConfig,
    rng: &mut R,
) -> Result<(ComplexSignal, FadingRealization)> {
    if cfg.model != ChannelModel::Rayleigh {
        return Err(config_err("fading transmission requires the rayleigh channel model"));
    }
    let realization = FadingRealization::sample(inputs.len(), rng);
    let y = fading_mac_transmit_with(inputs, len_if_empty, &realization, cfg, rng)?;
    Ok((y, realization))
}

/// Eb/N0 = nP / (2σ² log₂M) in dB, with `n` counted in real degrees of freedom.
pub fn ebn0_db(n: usize, cfg: &ChannelConfig, log2_m: f64) -> Result<f64> {
    if !(log2_m > 0.0) {
        return Err(config_err(format!("payload must be positive, got {log2_m} bits")));
    }
    cfg.validate()?;
    Ok(linear_to_db(n as f64 * cfg.power_limit / (2.0 * cfg.noise_power * log2_m)))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
