//! Experiment configuration files.
//!
//! A config is a TOML document with top-level run keys and four sections:
//!
//! ```toml
//! scenario = "two_step"          # slotted_aloha | two_step | sbidma
//! channel = "awgn"               # awgn | rayleigh
//! seed = 1
//! target_pupe = 0.05
//! ka_list = [2, 8, 14]
//!
//! [protocol]
//! n_preambles = 64
//! # ...
//! [codec]
//! payload_bits = 100
//! # ...
//! [receiver]
//! receiver_mode = "tin"
//! [search]
//! snr_lo_db = -6.0
//! # ...
//! ```
//!
//! Key names are unique across sections, so every key may also be written
//! at top level; it is moved into its section before parsing. Unknown keys
//! are rejected and all missing required keys are reported together.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::codec::{CodecModel, CodecSpec, SlotSelection, SlottedAlohaConfig, LDPC_LIKE_OFFSET_DB};
use crate::error::{Error, Result};
use crate::montecarlo::{SearchParams, TrialsSchedule};
use crate::protocols::{
    AccessSystem, EnergyPolicy, Mapping, ProtocolKind, ReceiverConfig, ReceiverMode, SbidmaConfig, TwoStepConfig,
};
use crate::seeding::derive_seed;
use crate::sequences::{DictionaryKind, PreambleSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub scenario: ProtocolKind,
    pub channel: ChannelModel,
    pub seed: u64,
    pub target_pupe: f64,
    pub ka_list: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_curve_path: Option<PathBuf>,
    #[serde(default)]
    pub protocol: ProtocolSection,
    pub codec: CodecSection,
    pub receiver: ReceiverSection,
    pub search: SearchSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_preambles: Option<usize>,
    /// Base sequence length before repetition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preamble_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preamble_reps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preamble_kind: Option<DictionaryKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preamble_power_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zc_cyclic_shift: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_occasions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occasion_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pilot_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping: Option<Mapping>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_policy: Option<EnergyPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot_selection: Option<SlotSelection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodecSection {
    pub payload_bits: u32,
    pub codeword_bits: usize,
    pub codec_model: CodecModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codec_offset_db: Option<f64>,
    /// Block error rate of the oracle threshold; defaults to `target_pupe`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codec_target_eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverSection {
    pub receiver_mode: ReceiverMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omp_iters_per_user: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omp_residual_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_gate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub snr_lo_db: f64,
    pub snr_hi_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_db: Option<f64>,
    pub trials_coarse: u64,
    pub trials_fine: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fine_below_db: Option<f64>,
}

const TOP_KEYS: &[&str] = &["name", "scenario", "channel", "seed", "target_pupe", "ka_list", "reference_curve_path"];
const PROTOCOL_KEYS: &[&str] = &[
    "n_preambles",
    "preamble_len",
    "preamble_reps",
    "preamble_kind",
    "preamble_power_scale",
    "zc_cyclic_shift",
    "n_occasions",
    "occasion_len",
    "pilot_len",
    "mapping",
    "rho",
    "energy_policy",
    "slots",
    "slot_selection",
];
const CODEC_KEYS: &[&str] = &["payload_bits", "codeword_bits", "codec_model", "codec_offset_db", "codec_target_eps"];
const RECEIVER_KEYS: &[&str] = &["receiver_mode", "omp_iters_per_user", "omp_residual_factor", "energy_gate"];
const SEARCH_KEYS: &[&str] = &["snr_lo_db", "snr_hi_db", "tol_db", "trials_coarse", "trials_fine", "fine_below_db"];

const SECTIONS: &[(&str, &[&str])] = &[
    ("protocol", PROTOCOL_KEYS),
    ("codec", CODEC_KEYS),
    ("receiver", RECEIVER_KEYS),
    ("search", SEARCH_KEYS),
];

const DEFAULT_TOL_DB: f64 = 0.1;
const DEFAULT_FINE_BELOW_DB: f64 = 1.0;

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn required_keys(scenario: Option<&str>) -> Vec<String> {
    let mut keys: Vec<String> = ["scenario", "channel", "seed", "target_pupe", "ka_list"].map(String::from).to_vec();
    let sec = |s: &str, k: &[&str]| k.iter().map(|k| format!("{s}.{k}")).collect::<Vec<_>>();
    keys.extend(sec("codec", &["payload_bits", "codeword_bits", "codec_model"]));
    keys.extend(sec("receiver", &["receiver_mode"]));
    keys.extend(sec("search", &["snr_lo_db", "snr_hi_db", "trials_coarse", "trials_fine"]));
    let layout = [
        "n_preambles",
        "preamble_len",
        "preamble_reps",
        "preamble_kind",
        "n_occasions",
        "occasion_len",
        "pilot_len",
        "mapping",
    ];
    match scenario {
        Some("slotted_aloha") => keys.extend(sec("protocol", &["slots", "pilot_len"])),
        Some("two_step") => keys.extend(sec("protocol", &layout)),
        Some("sbidma") => {
            keys.extend(sec("protocol", &layout));
            keys.push("protocol.rho".into());
        }
        _ => {}
    }
    keys
}

/// Moves flat keys into their sections, rejects unknown keys and reports
/// every missing required key at once.
fn normalize(mut doc: toml::Table) -> Result<toml::Table> {
    let mut unknown = Vec::new();
    let flat: Vec<String> = doc.keys().cloned().collect();
    for key in flat {
        if TOP_KEYS.contains(&key.as_str()) || SECTIONS.iter().any(|(s, _)| *s == key) {
            continue;
        }
        match SECTIONS.iter().find(|(_, keys)| keys.contains(&key.as_str())) {
            Some((section, _)) => {
                let value = doc.remove(&key).expect("key listed from the table");
                let entry = doc.entry(section.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
                let Some(table) = entry.as_table_mut() else {
                    return Err(invalid(format!("{section}: expected a table")));
                };
                if table.insert(key.clone(), value).is_some() {
                    return Err(invalid(format!("{section}.{key}: given both at top level and in [{section}]")));
                }
            }
            None => unknown.push(key),
        }
    }
    for (section, keys) in SECTIONS {
        if let Some(toml::Value::Table(t)) = doc.get(*section) {
            unknown.extend(t.keys().filter(|k| !keys.contains(&k.as_str())).map(|k| format!("{section}.{k}")));
        }
    }
    if !unknown.is_empty() {
        return Err(invalid(format!("unknown keys: {}", unknown.join(", "))));
    }
    let scenario = doc.get("scenario").and_then(|v| v.as_str()).map(str::to_owned);
    let missing: Vec<String> = required_keys(scenario.as_deref())
        .into_iter()
        .filter(|path| {
            let mut parts = path.split('.');
            let first = parts.next().unwrap_or_default();
            match (doc.get(first), parts.next()) {
                (None, _) => true,
                (Some(_), None) => false,
                (Some(v), Some(k)) => v.get(k).is_none(),
            }
        })
        .collect();
    if !missing.is_empty() {
        return Err(invalid(format!("missing required keys: {}", missing.join(", "))));
    }
    Ok(doc)
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| invalid(format!("malformed document: {e}")))?;
    let doc = normalize(doc)?;
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(toml::Value::Table(doc))
        .map_err(|e| invalid(format!("{}: {}", e.path(), e.inner())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a config file from disk.
pub fn load_config(path: impl AsRef<std::path::Path>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_config(&text)
}

impl ExperimentConfig {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| invalid(format!("cannot serialize config: {e}")))
    }

    /// Label used in the CSV `scenario` column.
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.scenario.name().to_owned())
    }

    pub fn codec_spec(&self) -> CodecSpec {
        CodecSpec {
            codeword_bits: self.codec.codeword_bits,
            payload_bits: self.codec.payload_bits,
            model: self.codec.codec_model,
            offset_db: self.codec.codec_offset_db.unwrap_or(LDPC_LIKE_OFFSET_DB),
            target_eps: self.codec.codec_target_eps.unwrap_or(self.target_pupe),
        }
    }

    pub fn receiver_config(&self) -> ReceiverConfig {
        let mut rx = ReceiverConfig::new(self.receiver.receiver_mode);
        if let Some(v) = self.receiver.omp_iters_per_user {
            rx.omp_iters_per_user = v;
        }
        if let Some(v) = self.receiver.omp_residual_factor {
            rx.omp_residual_factor = v;
        }
        if let Some(v) = self.receiver.energy_gate {
            rx.energy_gate = v;
        }
        rx
    }

    pub fn schedule(&self) -> TrialsSchedule {
        TrialsSchedule {
            coarse: self.search.trials_coarse,
            fine: self.search.trials_fine,
            fine_below_db: self.search.fine_below_db.unwrap_or(DEFAULT_FINE_BELOW_DB),
        }
    }

    /// Search parameters with all trial counts multiplied by `trials_scale`.
    pub fn search_params(&self, trials_scale: f64) -> SearchParams {
        SearchParams {
            target_pupe: self.target_pupe,
            snr_lo_db: self.search.snr_lo_db,
            snr_hi_db: self.search.snr_hi_db,
            tol_db: self.search.tol_db.unwrap_or(DEFAULT_TOL_DB),
            schedule: self.schedule().scaled(trials_scale),
        }
    }

    fn need<T: Copy>(&self, v: Option<T>, key: &str) -> Result<T> {
        v.ok_or_else(|| invalid(format!("protocol.{key}: required for scenario {}", self.scenario.name())))
    }

    pub fn two_step_config(&self) -> Result<TwoStepConfig> {
        let p = &self.protocol;
        Ok(TwoStepConfig {
            preamble: PreambleSpec {
                size: self.need(p.n_preambles, "n_preambles")?,
                base_length: self.need(p.preamble_len, "preamble_len")?,
                repetitions: self.need(p.preamble_reps, "preamble_reps")?,
                power_scale: p.preamble_power_scale.unwrap_or(1.0),
                kind: self.need(p.preamble_kind, "preamble_kind")?,
                zc_cyclic_shift: p.zc_cyclic_shift.unwrap_or(0),
            },
            n_occasions: self.need(p.n_occasions, "n_occasions")?,
            occasion_len: self.need(p.occasion_len, "occasion_len")?,
            pilot_len: self.need(p.pilot_len, "pilot_len")?,
            codec: self.codec_spec(),
            mapping: self.need(p.mapping, "mapping")?,
            channel: self.channel,
        })
    }

    pub fn sbidma_config(&self) -> Result<SbidmaConfig> {
        Ok(SbidmaConfig {
            base: self.two_step_config()?,
            rho: self.need(self.protocol.rho, "rho")?,
            energy_policy: self.protocol.energy_policy.unwrap_or_default(),
        })
    }

    pub fn slotted_aloha_config(&self) -> Result<SlottedAlohaConfig> {
        let p = &self.protocol;
        Ok(SlottedAlohaConfig {
            slots: self.need(p.slots, "slots")?,
            pilot_len: self.need(p.pilot_len, "pilot_len")?,
            codec: self.codec_spec(),
            slot_selection: p.slot_selection.unwrap_or(SlotSelection::UniformRandom),
        })
    }

    /// Builds the protocol instance; shared dictionaries and codebooks are
    /// drawn from `seed`.
    pub fn build_system(&self, seed: u64) -> Result<AccessSystem> {
        let rx = self.receiver_config();
        let system_seed = derive_seed(seed, &[u64::MAX]);
        match self.scenario {
            ProtocolKind::TwoStep => AccessSystem::two_step(&self.two_step_config()?, rx, system_seed),
            ProtocolKind::Sbidma => AccessSystem::sbidma(&self.sbidma_config()?, rx, system_seed),
            ProtocolKind::SlottedAloha => {
                AccessSystem::slotted_aloha(&self.slotted_aloha_config()?, self.channel, rx, system_seed)
            }
        }
    }

    /// Checks run parameters and the frame-arithmetic invariants.
    pub fn validate(&self) -> Result<()> {
        if !(self.target_pupe > 0.0 && self.target_pupe <= 1.0) {
            return Err(invalid(format!("target_pupe: must lie in (0, 1], got {}", self.target_pupe)));
        }
        if self.ka_list.iter().any(|&k| k == 0) {
            return Err(invalid("ka_list: active-user counts must be positive"));
        }
        if self.seed > i64::MAX as u64 {
            return Err(invalid("seed: must fit in a signed 64-bit integer"));
        }
        self.search_params(1.0).validate().map_err(|e| invalid(format!("search: {e}")))?;
        let relevant: &[&str] = match self.scenario {
            ProtocolKind::SlottedAloha => &["slots", "pilot_len", "slot_selection"],
            ProtocolKind::TwoStep => &PROTOCOL_KEYS[..10],
            ProtocolKind::Sbidma => &PROTOCOL_KEYS[..12],
        };
        let given = self.protocol_keys_present();
        if let Some(k) = given.iter().find(|k| !relevant.contains(k)) {
            return Err(invalid(format!("protocol.{k}: not used by scenario {}", self.scenario.name())));
        }
        let checked = match self.scenario {
            ProtocolKind::TwoStep => self.two_step_config()?.validate(),
            ProtocolKind::Sbidma => self.sbidma_config()?.validate(),
            ProtocolKind::SlottedAloha => {
                let c = self.slotted_aloha_config()?;
                c.validate().and_then(|_| {
                    if self.channel == ChannelModel::Rayleigh && c.pilot_len == 0 {
                        Err(invalid("the rayleigh channel needs pilot_len > 0"))
                    } else {
                        Ok(())
                    }
                })
            }
        };
        checked.map_err(|e| match e {
            Error::InvalidConfig(_) => e,
            other => invalid(format!("protocol: {other}")),
        })?;
        self.receiver_config().validate().map_err(|e| invalid(format!("receiver: {e}")))
    }

    fn protocol_keys_present(&self) -> Vec<&'static str> {
        let p = &self.protocol;
        let flags = [
            p.n_preambles.is_some(),
            p.preamble_len.is_some(),
            p.preamble_reps.is_some(),
            p.preamble_kind.is_some(),
            p.preamble_power_scale.is_some(),
            p.zc_cyclic_shift.is_some(),
            p.n_occasions.is_some(),
            p.occasion_len.is_some(),
            p.pilot_len.is_some(),
            p.mapping.is_some(),
            p.rho.is_some(),
            p.energy_policy.is_some(),
            p.slots.is_some(),
            p.slot_selection.is_some(),
        ];
        PROTOCOL_KEYS.iter().zip(flags).filter(|(_, f)| *f).map(|(k, _)| *k).collect()
    }
}

/// Shipped presets, embedded at build time.
pub const PRESETS: &[(&str, &str)] = &[
    ("twostep_awgn_baseline", include_str!("../presets/twostep_awgn_baseline.toml")),
    ("twostep_awgn_mini", include_str!("../presets/twostep_awgn_mini.toml")),
    ("twostep_rayleigh_64", include_str!("../presets/twostep_rayleigh_64.toml")),
    ("twostep_rayleigh_1024", include_str!("../presets/twostep_rayleigh_1024.toml")),
    ("sbidma_rayleigh_1024", include_str!("../presets/sbidma_rayleigh_1024.toml")),
    ("sbidma_tuned", include_str!("../presets/sbidma_tuned.toml")),
    ("slotted_aloha_mini", include_str!("../presets/slotted_aloha_mini.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| invalid(format!("unknown preset '{name}'")))?;
    parse_config(text)
}

/// Keys grouped by section, for documentation and diagnostics.
pub fn key_reference() -> BTreeMap<&'static str, &'static [&'static str]> {
    let mut m: BTreeMap<&'static str, &'static [&'static str]> = SECTIONS.iter().copied().collect();
    m.insert("top", TOP_KEYS);
    m
}
