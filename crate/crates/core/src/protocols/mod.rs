//! End-to-end encoders and receivers.
//!
//! Two-step random access, SB-IDMA and slotted Aloha share one receiver
//! core ([`AccessSystem`]): a frame is an optional preamble region followed
//! by N occasions, each holding an optional pilot and a codeword. Two-step
//! is SB-IDMA with ρ = 1; slotted Aloha has no preamble region and detects
//! activity per slot by energy.

mod patterns;
mod system;
mod twostep;

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::SparseSignal;
use crate::codec::Message;

pub use patterns::{binomial, pattern_from_index, pattern_rank};
pub use system::{AccessSystem, ProtocolKind};
pub use twostep::{EnergyPolicy, Mapping, SbidmaConfig, TwoStepConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverMode {
    /// One detection/decoding pass, interference treated as noise.
    Tin,
    /// Repeat detection after ideal cancellation of decoded users.
    TinSic,
}

impl ReceiverMode {
    pub fn label(self) -> &'static str {
        match self {
            ReceiverMode::Tin => "TIN",
            ReceiverMode::TinSic => "TIN-SIC",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverConfig {
    pub mode: ReceiverMode,
    /// OMP iteration budget per still-undecoded active user.
    #[serde(default = "default_iters_per_user")]
    pub omp_iters_per_user: f64,
    /// OMP stops when residual energy falls below this multiple of the
    /// expected noise energy of the preamble region.
    #[serde(default = "default_residual_factor")]
    pub omp_residual_factor: f64,
    /// Slotted Aloha: a slot is examined only when its mean sample energy
    /// exceeds this multiple of σ². Zero disables the gate.
    #[serde(default = "default_energy_gate")]
    pub energy_gate: f64,
}

fn default_iters_per_user() -> f64 {
    2.0
}
fn default_residual_factor() -> f64 {
    1.1
}
fn default_energy_gate() -> f64 {
    1.5
}

impl ReceiverConfig {
    pub fn new(mode: ReceiverMode) -> Self {
        Self {
            mode,
            omp_iters_per_user: default_iters_per_user(),
            omp_residual_factor: default_residual_factor(),
            energy_gate: default_energy_gate(),
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.omp_iters_per_user > 0.0
            && self.omp_iters_per_user.is_finite()
            && self.omp_residual_factor >= 0.0
            && self.omp_residual_factor.is_finite()
            && self.energy_gate >= 0.0
            && self.energy_gate.is_finite();
        if ok {
            Ok(())
        } else {
            Err(crate::error::config_err("receiver factors must be finite and non-negative"))
        }
    }
}

/// Ground truth for one active user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRecord {
    pub message: Message,
    /// Preamble index, or slot index for slotted Aloha.
    pub preamble: usize,
    /// Occasions carrying a copy of the packet, ascending.
    pub occasions: Vec<usize>,
    pub pilot: usize,
    /// Per-copy amplitude applied to pilot and codeword.
    pub amplitude: f64,
    /// Channel gain; set after the channel is drawn.
    pub gain: Complex64,
    pub signal: SparseSignal,
}

/// Genie-side ground truth of a trial, one entry per active user.
pub type TransmissionRecord = Vec<UserRecord>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoundDiagnostics {
    pub detected: usize,
    pub false_alarms: usize,
    pub collisions: usize,
    pub decoded_new: usize,
    pub cancelled: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub decoded_messages: BTreeSet<Message>,
    pub detected_preambles: BTreeSet<usize>,
    pub sic_rounds: usize,
    pub rounds: Vec<RoundDiagnostics>,
}
