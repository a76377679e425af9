//! Frame-based queue dynamics and max-weight code selection.
//!
//! Time is slotted; a frame runs one coding action for its full frame
//! length. Queues update as
//!
//!   Q_m[r+1] = max(Q_m[r] - mu_m(a[r]), 0) + arrivals_m[r]
//!
//! with Bernoulli per-slot arrivals counted over the frame. Service never
//! sees the frame's own arrivals. Draining an empty queue wastes the slot
//! (a null packet) and is recorded as such.
//!
//! Two selection rules are provided: a rate-aware weight
//! `sum_m Q_m (mu_m - lambda_m T)` and a rate-oblivious ratio weight
//! `sum_m Q_m mu_m / T`. Ties break toward the smallest action id, and
//! template entries bind each leg to the largest eligible backlog.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::actions::{ActionEntry, ActionKind, ActionSet, TrafficSpec};

/// Final backlog ratio below which a run is declared rate stable.
pub const STABLE_MAX_QR: f64 = 0.01;
/// Total backlog ratio above which a run is declared unstable.
pub const UNSTABLE_TOTAL_QR: f64 = 0.05;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("bad simulation config: {0}")]
    Config(String),
}

/// Per-type queues at a frame boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueueState {
    pub frame: usize,
    pub slot: u64,
    pub backlogs: Vec<u64>,
    /// FIFO of packet handles per type; lengths always match `backlogs`.
    pub pending: Vec<VecDeque<u64>>,
    next_handle: u64,
}

impl QueueState {
    pub fn new(num_types: usize) -> Self {
        QueueState {
            frame: 0,
            slot: 0,
            backlogs: vec![0; num_types],
            pending: vec![VecDeque::new(); num_types],
            next_handle: 0,
        }
    }

    pub fn total_backlog(&self) -> u64 {
        self.backlogs.iter().sum()
    }

    pub fn lyapunov(&self) -> f64 {
        0.5 * self
            .backlogs
            .iter()
            .map(|&q| (q as f64) * (q as f64))
            .sum::<f64>()
    }
}

/// What one frame did.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub action_id: usize,
    pub frame_len: usize,
    pub arrivals: Vec<u32>,
    pub served: Vec<u32>,
    pub wasted: Vec<u32>,
    /// 0.5 * sum of squared backlogs at the frame start.
    pub lyapunov: f64,
}

/// Independent Bernoulli arrival generator per traffic type, derived from
/// one master seed with one stream per type, so adding types never
/// perturbs the earlier streams.
#[derive(Debug, Clone)]
pub struct ArrivalStream {
    rngs: Vec<ChaCha8Rng>,
    rates: Vec<f64>,
}

impl ArrivalStream {
    pub fn new(seed: u64, rates: Vec<f64>) -> Self {
        let rngs = (0..rates.len())
            .map(|m| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(m as u64);
                rng
            })
            .collect();
        ArrivalStream { rngs, rates }
    }

    /// Arrival counts per type over `slots` consecutive slots.
    pub fn draw(&mut self, slots: usize) -> Vec<u32> {
        self.rngs
            .iter_mut()
            .zip(&self.rates)
            .map(|(rng, &rate)| {
                let mut count = 0u32;
                for _ in 0..slots {
                    if rate > 0.0 && rng.gen_bool(rate) {
                        count += 1;
                    }
                }
                count
            })
            .collect()
    }
}

/// Apply one frame to the queues: serve first from the frame-start
/// backlog, then admit the frame's arrivals.
fn apply_frame(
    state: &mut QueueState,
    action_id: usize,
    frame_len: usize,
    clearance: &[(usize, u32)],
    arrivals: &[u32],
) -> FrameRecord {
    let m = state.backlogs.len();
    let lyapunov = state.lyapunov();
    let mut served = vec![0u32; m];
    let mut wasted = vec![0u32; m];
    for &(ty, mu) in clearance {
        let s = (state.backlogs[ty]).min(mu as u64) as u32;
        served[ty] = s;
        wasted[ty] = mu - s;
        state.backlogs[ty] -= s as u64;
        for _ in 0..s {
            state.pending[ty].pop_front();
        }
    }
    for (ty, &count) in arrivals.iter().enumerate() {
        for _ in 0..count {
            state.pending[ty].push_back(state.next_handle);
            state.next_handle += 1;
        }
        state.backlogs[ty] += count as u64;
    }
    state.frame += 1;
    state.slot += frame_len as u64;
    debug_assert!(state
        .backlogs
        .iter()
        .zip(&state.pending)
        .all(|(&q, f)| q == f.len() as u64));
    FrameRecord {
        action_id,
        frame_len,
        arrivals: arrivals.to_vec(),
        served,
        wasted,
        lyapunov,
    }
}

/// One frame step with an explicit action binding; returns the new state
/// and the frame record.
pub fn step_frame(
    state: &QueueState,
    entry: &ActionEntry,
    arrivals: &mut ArrivalStream,
) -> (QueueState, FrameRecord) {
    let (frame_len, clearance) = entry.bind(&state.backlogs);
    let counts = arrivals.draw(frame_len);
    let mut next = state.clone();
    let record = apply_frame(&mut next, entry.id(), frame_len, &clearance, &counts);
    (next, record)
}

/// Rate-aware max-weight rule: maximize
/// `sum_m Q_m (mu_m(a) - lambda_m T(a))`; smallest id wins ties.
pub fn mw1_select(backlogs: &[u64], rates: &[f64], actions: &ActionSet) -> usize {
    debug_assert_eq!(backlogs.len(), rates.len());
    let q_dot_lambda: f64 = backlogs
        .iter()
        .zip(rates)
        .map(|(&q, &l)| q as f64 * l)
        .sum();
    let mut best = (f64::NEG_INFINITY, 0usize);
    for entry in actions.entries() {
        let (t, mu) = entry.bind(backlogs);
        let service: f64 = mu.iter().map(|&(m, c)| backlogs[m] as f64 * c as f64).sum();
        let weight = service - q_dot_lambda * t as f64;
        if weight > best.0 {
            best = (weight, entry.id());
        }
    }
    best.1
}

/// Rate-oblivious ratio rule: maximize `sum_m Q_m mu_m(a) / T(a)`,
/// compared exactly by cross-multiplication; smallest id wins ties.
pub fn mw2_select(backlogs: &[u64], actions: &ActionSet) -> usize {
    let mut best: Option<(u128, u128, usize)> = None;
    for entry in actions.entries() {
        let (t, mu) = entry.bind(backlogs);
        let num: u128 = mu
            .iter()
            .map(|&(m, c)| backlogs[m] as u128 * c as u128)
            .sum();
        let den = t as u128;
        let improves = match &best {
            None => true,
            Some((bn, bd, _)) => num * bd > bn * den,
        };
        if improves {
            best = Some((num, den, entry.id()));
        }
    }
    best.expect("action sets are nonempty").2
}

/// Code selection policy for a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    /// Rate-aware max weight.
    Mw1,
    /// Ratio max weight; needs no rates.
    Mw2,
    /// Direct transmissions only, longest queue first.
    Uncoded,
    /// Draw an action id independently each frame from this distribution.
    Stationary(BTreeMap<usize, f64>),
}

impl Algorithm {
    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::Mw1 => "mw1",
            Algorithm::Mw2 => "mw2",
            Algorithm::Uncoded => "uncoded",
            Algorithm::Stationary(_) => "stationary",
        }
    }
}

/// Rate-stability verdict of a finished run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    Inconclusive,
}

impl Stability {
    pub fn classify(max_qr: f64, total_qr: f64) -> Stability {
        if total_qr > UNSTABLE_TOTAL_QR {
            Stability::Unstable
        } else if max_qr < STABLE_MAX_QR {
            Stability::Stable
        } else {
            Stability::Inconclusive
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Inconclusive => "inconclusive",
        }
    }
}

/// A fully specified simulation run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub spec: TrafficSpec,
    pub actions: ActionSet,
    pub algorithm: Algorithm,
    /// Arrival rate per type, packets/slot.
    pub rates: Vec<f64>,
    pub frames: usize,
    pub seed: u64,
    /// Reporting value of the run (for example the per-user rate scale).
    pub lambda_label: f64,
}

/// Aggregate results of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    pub lambda: f64,
    pub algorithm: String,
    pub seed: u64,
    pub frames: usize,
    pub slots: u64,
    /// Frame-averaged total backlog.
    pub total_avg_backlog: f64,
    pub per_type_avg_backlog: Vec<f64>,
    pub final_backlogs: Vec<u64>,
    /// Final Q_m / frame count, per type.
    pub qr_ratios: Vec<f64>,
    pub max_qr_ratio: f64,
    pub total_qr_ratio: f64,
    /// Null-packet transmissions over the whole run.
    pub wasted: u64,
    /// Subsampled (frame, L) points of the quadratic backlog function.
    pub lyapunov_trace: Vec<(usize, f64)>,
    pub stability: Stability,
}

fn validate(config: &SimConfig) -> Result<(), SimError> {
    let m = config.spec.num_types();
    if config.frames == 0 {
        return Err(SimError::Config("frame count must be at least 1".into()));
    }
    if config.rates.len() != m {
        return Err(SimError::Config(format!(
            "expected {m} rates, got {}",
            config.rates.len()
        )));
    }
    if config
        .rates
        .iter()
        .any(|r| !r.is_finite() || !(0.0..=1.0).contains(r))
    {
        return Err(SimError::Config("rates must lie in [0,1]".into()));
    }
    if config.actions.num_types() != m {
        return Err(SimError::Config(
            "action set was generated for a different spec".into(),
        ));
    }
    if config.actions.is_empty() {
        return Err(SimError::Config("action set is empty".into()));
    }
    if let Algorithm::Stationary(probs) = &config.algorithm {
        if probs.is_empty() {
            return Err(SimError::Config("stationary distribution is empty".into()));
        }
        let total: f64 = probs.values().sum();
        if (total - 1.0).abs() > 1e-6 || probs.values().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(SimError::Config(
                "stationary distribution must sum to 1".into(),
            ));
        }
        if probs.keys().any(|&id| id >= config.actions.len()) {
            return Err(SimError::Config("stationary id out of range".into()));
        }
    }
    Ok(())
}

pub fn run_simulation(config: &SimConfig) -> Result<SimStats, SimError> {
    run_impl(config, None)
}

/// Like [`run_simulation`] but also returns every frame record; intended
/// for short runs.
pub fn run_recorded(config: &SimConfig) -> Result<(SimStats, Vec<FrameRecord>), SimError> {
    let mut records = Vec::with_capacity(config.frames);
    let stats = run_impl(config, Some(&mut records))?;
    Ok((stats, records))
}

fn run_impl(config: &SimConfig, mut trace: Option<&mut Vec<FrameRecord>>) -> Result<SimStats, SimError> {
    validate(config)?;
    let m = config.spec.num_types();
    let mut arrivals = ArrivalStream::new(config.seed, config.rates.clone());
    // the policy stream must never collide with a per-type stream
    let mut policy_rng = ChaCha8Rng::seed_from_u64(config.seed);
    policy_rng.set_stream(u64::MAX);
    let direct_ids: Vec<usize> = config
        .actions
        .entries()
        .iter()
        .filter(|e| matches!(e, ActionEntry::Concrete(a) if a.kind() == ActionKind::Direct))
        .map(|e| e.id())
        .collect();
    let stationary_cdf: Option<Vec<(f64, usize)>> = match &config.algorithm {
        Algorithm::Stationary(probs) => {
            let mut acc = 0.0;
            Some(
                probs
                    .iter()
                    .map(|(&id, &p)| {
                        acc += p;
                        (acc, id)
                    })
                    .collect(),
            )
        }
        _ => None,
    };

    let mut state = QueueState::new(m);
    let mut per_type_sums = vec![0.0f64; m];
    let mut total_sum = 0.0f64;
    let mut wasted_total = 0u64;
    let stride = (config.frames / 512).max(1);
    let mut lyapunov_trace = Vec::new();

    for r in 0..config.frames {
        let id = match &config.algorithm {
            Algorithm::Mw1 => mw1_select(&state.backlogs, &config.rates, &config.actions),
            Algorithm::Mw2 => mw2_select(&state.backlogs, &config.actions),
            Algorithm::Uncoded => {
                let mut best = direct_ids[0];
                let mut best_q = 0u64;
                for &id in &direct_ids {
                    let (_, mu) = config.actions.get(id).bind(&state.backlogs);
                    let q = mu
                        .iter()
                        .map(|&(ty, c)| state.backlogs[ty] * c as u64)
                        .sum::<u64>();
                    if q > best_q {
                        best_q = q;
                        best = id;
                    }
                }
                best
            }
            Algorithm::Stationary(_) => {
                let cdf = stationary_cdf.as_ref().unwrap();
                let u: f64 = policy_rng.gen_range(0.0..1.0);
                cdf.iter()
                    .find(|(acc, _)| u < *acc)
                    .map(|&(_, id)| id)
                    .unwrap_or(cdf.last().unwrap().1)
            }
        };
        let entry = config.actions.get(id);
        let (frame_len, clearance) = entry.bind(&state.backlogs);

        for ty in 0..m {
            per_type_sums[ty] += state.backlogs[ty] as f64;
        }
        total_sum += state.total_backlog() as f64;
        if r % stride == 0 {
            lyapunov_trace.push((r, state.lyapunov()));
        }

        let counts = arrivals.draw(frame_len);
        let record = apply_frame(&mut state, id, frame_len, &clearance, &counts);
        wasted_total += record.wasted.iter().map(|&w| w as u64).sum::<u64>();
        if let Some(sink) = trace.as_deref_mut() {
            sink.push(record);
        }
    }

    let frames = config.frames as f64;
    let qr_ratios: Vec<f64> = state.backlogs.iter().map(|&q| q as f64 / frames).collect();
    let max_qr_ratio = qr_ratios.iter().copied().fold(0.0, f64::max);
    let total_qr_ratio = state.total_backlog() as f64 / frames;
    Ok(SimStats {
        lambda: config.lambda_label,
        algorithm: config.algorithm.label().to_string(),
        seed: config.seed,
        frames: config.frames,
        slots: state.slot,
        total_avg_backlog: total_sum / frames,
        per_type_avg_backlog: per_type_sums.iter().map(|s| s / frames).collect(),
        final_backlogs: state.backlogs.clone(),
        qr_ratios,
        max_qr_ratio,
        total_qr_ratio,
        wasted: wasted_total,
        lyapunov_trace,
        stability: Stability::classify(max_qr_ratio, total_qr_ratio),
    })
}
