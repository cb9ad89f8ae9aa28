use serde::{Deserialize, Serialize};

use super::patterns::binomial;
use crate::channel::ChannelModel;
use crate::codec::CodecSpec;
use crate::error::{config_err, Result};
use crate::sequences::PreambleSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mapping {
    /// One preamble per access pattern.
    OneToOne,
    /// Several preambles per pattern, told apart by their pilot.
    ManyToOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyPolicy {
    /// Each of the ρ copies carries 1/ρ of the single-copy energy.
    #[default]
    SplitAcrossCopies,
    /// Every copy is sent at full power.
    PerCopyFull,
}

/// Message-A layout of two-step random access.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStepConfig {
    pub preamble: PreambleSpec,
    pub n_occasions: usize,
    /// Channel uses per occasion: pilot plus codeword.
    pub occasion_len: usize,
    pub pilot_len: usize,
    pub codec: CodecSpec,
    pub mapping: Mapping,
    pub channel: ChannelModel,
}

impl TwoStepConfig {
    pub fn n_preambles(&self) -> usize {
        self.preamble.size
    }

    pub fn preamble_region_len(&self) -> usize {
        self.preamble.column_len()
    }

    pub fn frame_len(&self) -> usize {
        self.preamble_region_len() + self.n_occasions * self.occasion_len
    }

    pub fn occasion_offset(&self, occasion: usize) -> usize {
        self.preamble_region_len() + occasion * self.occasion_len
    }

    pub fn validate(&self) -> Result<()> {
        SbidmaConfig::from(self.clone()).validate()
    }
}

/// Two-step access with each packet repeated over a ρ-subset of occasions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbidmaConfig {
    pub base: TwoStepConfig,
    pub rho: usize,
    pub energy_policy: EnergyPolicy,
}

impl From<TwoStepConfig> for SbidmaConfig {
    fn from(base: TwoStepConfig) -> Self {
        Self { base, rho: 1, energy_policy: EnergyPolicy::SplitAcrossCopies }
    }
}

impl SbidmaConfig {
    /// C(N, ρ).
    pub fn pattern_space_size(&self) -> u64 {
        binomial(self.base.n_occasions, self.rho)
    }

    /// Size of the pilot dictionary: preamble j uses pilot j div N.
    pub fn pilot_count(&self) -> usize {
        self.base.n_preambles().div_ceil(self.base.n_occasions.max(1))
    }

    pub fn copy_amplitude(&self) -> f64 {
        match self.energy_policy {
            EnergyPolicy::SplitAcrossCopies => 1.0 / (self.rho as f64).sqrt(),
            EnergyPolicy::PerCopyFull => 1.0,
        }
    }

    /// Transmitted energy per user at unit power.
    pub fn user_energy(&self) -> f64 {
        let a = self.copy_amplitude();
        self.base.preamble.column_energy() + self.rho as f64 * a * a * self.base.occasion_len as f64
    }

    pub fn frame_len(&self) -> usize {
        self.base.frame_len()
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.base;
        b.preamble.validate()?;
        b.codec.validate()?;
        if b.n_occasions == 0 {
            return Err(config_err("at least one occasion is required"));
        }
        if b.occasion_len != b.pilot_len + b.codec.channel_uses() {
            return Err(config_err(format!(
                "occasion length {} must equal pilot length {} plus codeword channel uses {}",
                b.occasion_len,
                b.pilot_len,
                b.codec.channel_uses()
            )));
        }
        if self.rho == 0 || self.rho > b.n_occasions {
            return Err(config_err(format!("rho must lie in 1..={}, got {}", b.n_occasions, self.rho)));
        }
        let patterns = self.pattern_space_size();
        let n_pre = b.n_preambles() as u64;
        let per_pattern = if self.rho == 1 { n_pre == patterns } else { n_pre <= patterns };
        match b.mapping {
            Mapping::OneToOne if !per_pattern => {
                return Err(config_err(format!(
                    "one_to_one mapping with rho {} needs {} preambles for {patterns} access patterns, got {n_pre}",
                    self.rho,
                    if self.rho == 1 { "exactly" } else { "at most" },
                )))
            }
            Mapping::ManyToOne if self.rho == 1 && n_pre < patterns => {
                return Err(config_err(format!("many_to_one mapping needs at least {patterns} preambles, got {n_pre}")))
            }
            _ => {}
        }
        if b.channel == ChannelModel::Rayleigh && b.pilot_len == 0 {
            return Err(config_err("the rayleigh channel needs pilot_len > 0 for channel estimation"));
        }
        if self.user_energy() > self.frame_len() as f64 * (1.0 + crate::channel::POWER_TOLERANCE) {
            return Err(config_err(format!(
                "user energy {} exceeds the frame budget {}",
                self.user_energy(),
                self.frame_len()
            )));
        }
        Ok(())
    }
}
