use std::collections::BTreeSet;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::patterns::pattern_from_index;
use super::{DecodeOutcome, ReceiverConfig, ReceiverMode, RoundDiagnostics, SbidmaConfig, TransmissionRecord, TwoStepConfig, UserRecord};
use crate::channel::{
    energy, fading_mac_transmit_with, ChannelConfig, ChannelModel, ComplexSignal, FadingRealization, SparseSignal,
    Waveform,
};
use crate::codec::{select_slot, Codec, DecodeInput, Message, Observation, SlottedAlohaCode, SlottedAlohaConfig};
use crate::detection::{energy_detect, ls_channel_estimate, omp_detect, OmpStop};
use crate::error::{config_err, Result};
use crate::montecarlo::{PupeScenario, TrialCounts};
use crate::seeding::{derive_seed, rng_from_seed, stream_rng, Stream};
use crate::sequences::{build_pilot_dictionary, build_preamble_dictionary, Dictionary, DictionaryKind};

/// Relative tolerance under which two received powers count as equal.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    SlottedAloha,
    TwoStep,
    Sbidma,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::SlottedAloha => "slotted_aloha",
            ProtocolKind::TwoStep => "two_step",
            ProtocolKind::Sbidma => "sbidma",
        }
    }
}

#[derive(Debug, Clone)]
struct Layout {
    preamble_len: usize,
    n_occasions: usize,
    occasion_len: usize,
    pilot_len: usize,
    rho: usize,
    patterns: u64,
    /// Preambles (or slots) a user chooses from.
    choices: usize,
    amplitude: f64,
    user_energy: f64,
}

impl Layout {
    fn frame_len(&self) -> usize {
        self.preamble_len + self.n_occasions * self.occasion_len
    }

    fn occasion_offset(&self, o: usize) -> usize {
        self.preamble_len + o * self.occasion_len
    }
}

#[derive(Debug, Clone)]
enum Detector {
    Omp(Arc<Dictionary>),
    /// Per-slot energy test (slotted Aloha); carries the slot selection rule.
    EnergyGate(SlottedAlohaConfig),
}

/// A constructed protocol instance: shared dictionaries, codec and receiver.
#[derive(Debug, Clone)]
pub struct AccessSystem {
    kind: ProtocolKind,
    channel: ChannelModel,
    layout: Layout,
    detector: Detector,
    pilots: Option<Arc<Dictionary>>,
    codec: Codec,
    receiver: ReceiverConfig,
}

impl AccessSystem {
    /// Two-step random access (message A). Equivalent to SB-IDMA with ρ = 1.
    pub fn two_step(cfg: &TwoStepConfig, receiver: ReceiverConfig, seed: u64) -> Result<Self> {
        let mut sys = Self::sbidma(&SbidmaConfig::from(cfg.clone()), receiver, seed)?;
        sys.kind = ProtocolKind::TwoStep;
        Ok(sys)
    }

    /// SB-IDMA: the packet is repeated over the ρ occasions of the access
    /// pattern selected by the preamble. `seed` fixes the shared dictionaries.
    pub fn sbidma(cfg: &SbidmaConfig, receiver: ReceiverConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        receiver.validate()?;
        let b = &cfg.base;
        let preambles = build_preamble_dictionary(&b.preamble, &mut rng_from_seed(derive_seed(seed, &[1])))?;
        let pilots = if b.pilot_len > 0 {
            let d = build_pilot_dictionary(cfg.pilot_count(), b.pilot_len, &mut rng_from_seed(derive_seed(seed, &[2])))?;
            Some(Arc::new(d))
        } else {
            None
        };
        let codec = Codec::new(b.codec, derive_seed(seed, &[3]))?;
        Ok(Self {
            kind: ProtocolKind::Sbidma,
            channel: b.channel,
            layout: Layout {
                preamble_len: b.preamble_region_len(),
                n_occasions: b.n_occasions,
                occasion_len: b.occasion_len,
                pilot_len: b.pilot_len,
                rho: cfg.rho,
                patterns: cfg.pattern_space_size(),
                choices: b.n_preambles(),
                amplitude: cfg.copy_amplitude(),
                user_energy: cfg.user_energy(),
            },
            detector: Detector::Omp(Arc::new(preambles)),
            pilots,
            codec,
            receiver,
        })
    }

    /// Slotted Aloha with the shared inner code and an optional common pilot.
    pub fn slotted_aloha(
        cfg: &SlottedAlohaConfig,
        channel: ChannelModel,
        receiver: ReceiverConfig,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        receiver.validate()?;
        if channel == ChannelModel::Rayleigh && cfg.pilot_len == 0 {
            return Err(config_err("the rayleigh channel needs pilot_len > 0 for channel estimation"));
        }
        let code = SlottedAlohaCode::new(*cfg, seed)?;
        let pilots = match code.pilot() {
            Some(p) => Some(Arc::new(Dictionary::from_columns(DictionaryKind::GaussianNormalized, vec![p.clone()])?)),
            None => None,
        };
        Ok(Self {
            kind: ProtocolKind::SlottedAloha,
            channel,
            layout: Layout {
                preamble_len: 0,
                n_occasions: cfg.slots,
                occasion_len: cfg.slot_len(),
                pilot_len: cfg.pilot_len,
                rho: 1,
                patterns: cfg.slots as u64,
                choices: cfg.slots,
                amplitude: 1.0,
                user_energy: cfg.slot_len() as f64,
            },
            detector: Detector::EnergyGate(*cfg),
            pilots,
            codec: code.codec().clone(),
            receiver,
        })
    }

    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    pub fn channel(&self) -> ChannelModel {
        self.channel
    }

    pub fn codec(&self) -> &Codec {
        &self.codec
    }

    pub fn receiver(&self) -> &ReceiverConfig {
        &self.receiver
    }

    pub fn with_mode(&self, mode: ReceiverMode) -> Self {
        let mut s = self.clone();
        s.receiver.mode = mode;
        s
    }

    pub fn frame_len(&self) -> usize {
        self.layout.frame_len()
    }

    pub fn payload_bits(&self) -> u32 {
        self.codec.spec().payload_bits
    }

    /// Energy a user transmits per frame at unit power.
    pub fn user_energy(&self) -> f64 {
        self.layout.user_energy
    }

    pub fn preamble_dictionary(&self) -> Option<&Dictionary> {
        match &self.detector {
            Detector::Omp(d) => Some(d),
            Detector::EnergyGate(_) => None,
        }
    }

    /// Occasions of the access pattern announced by preamble (or slot) `j`.
    pub fn pattern(&self, j: usize) -> Result<Vec<usize>> {
        match self.detector {
            Detector::EnergyGate(_) => Ok(vec![j]),
            Detector::Omp(_) => pattern_from_index(j as u64 % self.layout.patterns, self.layout.n_occasions, self.layout.rho),
        }
    }

    pub fn pilot_index(&self, j: usize) -> usize {
        match self.detector {
            Detector::EnergyGate(_) => 0,
            Detector::Omp(_) => j / self.layout.n_occasions,
        }
    }

    /// Draws the preamble (or slot) and builds the user's frame.
    pub fn encode<R: Rng + ?Sized>(&self, message: Message, rng: &mut R) -> Result<UserRecord> {
        let j = match &self.detector {
            Detector::EnergyGate(cfg) => select_slot(cfg, &message, rng),
            Detector::Omp(_) => rng.random_range(0..self.layout.choices),
        };
        self.encode_with_index(message, j)
    }

    /// Builds the frame of a user that picked preamble (or slot) `j`.
    pub fn encode_with_index(&self, message: Message, j: usize) -> Result<UserRecord> {
        if j >= self.layout.choices {
            return Err(config_err(format!("index {j} out of range 0..{}", self.layout.choices)));
        }
        let l = &self.layout;
        let occasions = self.pattern(j)?;
        let pilot = self.pilot_index(j);
        let mut frame = SparseSignal::new(l.frame_len());
        if let Detector::Omp(d) = &self.detector {
            frame.place(0, d.column(j).to_vec().into())?;
        }
        let codeword = self.codec.encode(&message)?;
        let a = Complex64::new(l.amplitude, 0.0);
        let pilot_seq: &[Complex64] = self.pilots.as_ref().map_or(&[], |d| d.column(pilot));
        let block: ComplexSignal = pilot_seq.iter().chain(codeword.iter()).map(|x| a * x).collect();
        for &o in &occasions {
            frame.place(l.occasion_offset(o), block.clone())?;
        }
        Ok(UserRecord {
            message,
            preamble: j,
            occasions,
            pilot,
            amplitude: l.amplitude,
            gain: Complex64::new(1.0, 0.0),
            signal: frame,
        })
    }

    /// Encodes `ka` random users and passes them through the channel.
    /// Streams are drawn from `trial_seed` so that probes at different SNR
    /// share messages, preambles, gains and noise shape.
    pub fn transmit(&self, ka: usize, channel: &ChannelConfig, trial_seed: u64) -> Result<(TransmissionRecord, ComplexSignal)> {
        let mut users = stream_rng(trial_seed, Stream::Users);
        let k = self.payload_bits();
        let mut records = (0..ka)
            .map(|_| self.encode(Message::random(k, &mut users)?, &mut users))
            .collect::<Result<Vec<_>>>()?;
        let realization = match channel.model {
            ChannelModel::Awgn => FadingRealization::unit(ka),
            ChannelModel::Rayleigh => FadingRealization::sample(ka, &mut stream_rng(trial_seed, Stream::Fading)),
        };
        let signals: Vec<&SparseSignal> = records.iter().map(|r| &r.signal).collect();
        let y = fading_mac_transmit_with(
            &signals,
            self.frame_len(),
            &realization,
            channel,
            &mut stream_rng(trial_seed, Stream::Noise),
        )?;
        for (r, g) in records.iter_mut().zip(realization.gains) {
            r.gain = g;
        }
        Ok((records, y))
    }

    /// Runs the configured receiver. `genie` is used only for the oracle
    /// SINR, target selection and ideal cancellation.
    pub fn receive(&self, y: &[Complex64], channel: &ChannelConfig, genie: &[UserRecord]) -> Result<DecodeOutcome> {
        if y.len() != self.frame_len() {
            return Err(crate::Error::Dimension { expected: self.frame_len(), got: y.len() });
        }
        let sigma2 = channel.noise_power;
        let mut residual = y.to_vec();
        let mut cancelled = vec![false; genie.len()];
        let mut out = DecodeOutcome::default();
        let max_rounds = match self.receiver.mode {
            ReceiverMode::Tin => 1,
            ReceiverMode::TinSic => genie.len() + 1,
        };
        for _ in 0..max_rounds {
            let remaining = cancelled.iter().filter(|c| !**c).count();
            if remaining == 0 && out.sic_rounds > 0 {
                break;
            }
            let detected = self.detect(&residual, remaining.max(1), sigma2)?;
            let mut diag = RoundDiagnostics { detected: detected.len(), ..Default::default() };
            out.detected_preambles.extend(detected.iter().copied());
            let mut successes = Vec::new();
            for &j in &detected {
                let attempt = self.attempt(j, &residual, sigma2, genie, &cancelled)?;
                match attempt.target {
                    Target::None => diag.false_alarms += 1,
                    Target::User { contenders, .. } if contenders > 1 => diag.collisions += 1,
                    Target::User { .. } => {}
                }
                if let Some(m) = attempt.message {
                    if out.decoded_messages.insert(m) {
                        diag.decoded_new += 1;
                    }
                    if let Target::User { user: u, .. } = attempt.target {
                        if genie[u].message == m {
                            successes.push(u);
                        }
                    }
                }
            }
            out.sic_rounds += 1;
            if self.receiver.mode == ReceiverMode::TinSic {
                for &u in &successes {
                    genie[u].signal.accumulate(&mut residual, -genie[u].gain);
                    cancelled[u] = true;
                }
                diag.cancelled = successes.len();
            }
            out.rounds.push(diag);
            if successes.is_empty() {
                break;
            }
        }
        Ok(out)
    }

    fn detect(&self, residual: &[Complex64], remaining: usize, sigma2: f64) -> Result<Vec<usize>> {
        let l = &self.layout;
        match &self.detector {
            Detector::Omp(dict) => {
                let region = &residual[..l.preamble_len];
                let total = energy(region);
                let stop = OmpStop {
                    max_iters: (self.receiver.omp_iters_per_user * remaining as f64).ceil().max(1.0) as usize,
                    residual_threshold: if total > 0.0 {
                        self.receiver.omp_residual_factor * l.preamble_len as f64 * sigma2 / total
                    } else {
                        0.0
                    },
                };
                let mut idx = omp_detect(region, dict, stop)?.indices;
                idx.sort_unstable();
                Ok(idx)
            }
            Detector::EnergyGate(_) => {
                let gate = self.receiver.energy_gate;
                let mut slots = Vec::new();
                for s in 0..l.n_occasions {
                    let off = l.occasion_offset(s);
                    if gate == 0.0 || energy_detect(&residual[off..off + l.occasion_len], gate, sigma2)? {
                        slots.push(s);
                    }
                }
                Ok(slots)
            }
        }
    }

    fn attempt(
        &self,
        j: usize,
        residual: &[Complex64],
        sigma2: f64,
        genie: &[UserRecord],
        cancelled: &[bool],
    ) -> Result<Attempt> {
        let l = &self.layout;
        let target = strongest(genie, cancelled, j);
        let occasions = self.pattern(j)?;
        let pilot = self.pilots.as_ref().map(|d| d.column(self.pilot_index(j)));
        let mut windows = Vec::with_capacity(occasions.len());
        let mut sinr = 0.0;
        for &o in &occasions {
            let off = l.occasion_offset(o);
            let data = &residual[off + l.pilot_len..off + l.occasion_len];
            let h_hat = match pilot {
                Some(p) => ls_channel_estimate(&residual[off..off + l.pilot_len], p)? / l.amplitude,
                None => Complex64::new(1.0, 0.0),
            };
            windows.push((data, h_hat * l.amplitude));
            if let Target::User { user: u, .. } = target {
                sinr += genie_sinr(genie, cancelled, u, o, h_hat, data.len() as f64, sigma2);
            }
        }
        let observations: Vec<Observation<'_>> =
            windows.iter().map(|&(samples, gain)| Observation { samples, gain }).collect();
        let genie_message = match target {
            Target::User { user, .. } => Some(genie[user].message),
            _ => None,
        };
        let result = self.codec.decode(&DecodeInput { observations: &observations, genie_sinr: sinr, genie_message });
        Ok(Attempt { target, sinr, message: if result.success { result.message } else { None } })
    }

    /// One Monte-Carlo trial: transmit, receive, count missed messages.
    pub fn run_trial(&self, ka: usize, channel: &ChannelConfig, trial_seed: u64) -> Result<TrialCounts> {
        let (records, y) = self.transmit(ka, channel, trial_seed)?;
        let outcome = self.receive(&y, channel, &records)?;
        let missed = records.iter().filter(|r| !outcome.decoded_messages.contains(&r.message)).count();
        let distinct: BTreeSet<Message> = records.iter().map(|r| r.message).collect();
        Ok(TrialCounts { active: ka as u64, missed: missed as u64, clashes: (ka - distinct.len()) as u64 })
    }
}

impl PupeScenario for AccessSystem {
    fn run_trial(&self, ka: usize, snr_db: f64, trial_seed: u64) -> Result<TrialCounts> {
        let channel = ChannelConfig::from_snr_db(snr_db, self.channel)?;
        AccessSystem::run_trial(self, ka, &channel, trial_seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    /// Nobody uncancelled sent this preamble.
    None,
    /// The user whose packet the decoder locks onto.
    User { user: usize, contenders: usize },
}

struct Attempt {
    target: Target,
    /// Combined genie SINR over all copies.
    #[cfg_attr(not(test), allow(dead_code))]
    sinr: f64,
    message: Option<Message>,
}

/// The uncancelled user of preamble `j` with the largest received power.
/// Equal powers (within `TIE_TOLERANCE`) are broken by the smaller message
/// value, which depends only on what was sent, not on user order.
fn strongest(genie: &[UserRecord], cancelled: &[bool], j: usize) -> Target {
    let power = |r: &UserRecord| r.gain.norm_sqr() * r.amplitude * r.amplitude;
    let users: Vec<usize> = (0..genie.len()).filter(|&u| !cancelled[u] && genie[u].preamble == j).collect();
    let Some(top) = users.iter().map(|&u| power(&genie[u])).max_by(f64::total_cmp) else {
        return Target::None;
    };
    let user = users
        .iter()
        .copied()
        .filter(|&u| top - power(&genie[u]) <= TIE_TOLERANCE * top)
        .min_by_key(|&u| genie[u].message)
        .expect("the strongest user is within tolerance of itself");
    Target::User { user, contenders: users.len() }
}

/// SINR of user `u` in occasion `o`: interference from every other
/// uncancelled copy in the occasion plus the channel-estimation error.
fn genie_sinr(
    genie: &[UserRecord],
    cancelled: &[bool],
    u: usize,
    o: usize,
    h_hat: Complex64,
    n_data: f64,
    sigma2: f64,
) -> f64 {
    let me = &genie[u];
    let a2 = me.amplitude * me.amplitude;
    let signal = me.gain.norm_sqr() * a2 * n_data;
    let mut terms: Vec<f64> = genie
        .iter()
        .enumerate()
        .filter(|&(v, r)| v != u && !cancelled[v] && r.occasions.contains(&o))
        .map(|(_, r)| r.gain.norm_sqr() * r.amplitude * r.amplitude * n_data)
        .collect();
    // fixed summation order keeps the result independent of user order
    terms.sort_by(f64::total_cmp);
    let interference: f64 = terms.iter().sum();
    let estimation = (h_hat - me.gain).norm_sqr() * a2 * n_data;
    signal / (sigma2 * n_data + interference + estimation)
}
