//! Stopping rules for path reconstruction.
//!
//! * [`StoppingPolicy::Basic`] stops as soon as the collected edges form a
//!   full subpath (exactly `{1, ..., i}`) of length at least 2.
//! * [`StoppingPolicy::EpsilonTimed`] additionally requires that, after `l`
//!   packets, the chance of having missed edge `i + 1` is small:
//!   `l >= waiting_threshold(i, epsilon)`. See [`TimedCheck`] for when the
//!   test is made.
//! * [`StoppingPolicy::FixedPackets`] stops after a predetermined number of
//!   packets; [`swka_stop_count`] and [`ss_stop_count`] give the two counts
//!   used in the literature.
//!
//! Several policies can be evaluated on one shared packet stream with a
//! [`StreamEvaluator`].

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{AttackModel, CollectorState, FlowEvent};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StoppingPolicy {
    Basic,
    EpsilonTimed { epsilon: f64, check: TimedCheck },
    FixedPackets { count: u64 },
}

/// When an epsilon-timed policy tests its waiting condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TimedCheck {
    /// Test a full subpath on the packet that completes it. A subpath that
    /// is too young is dropped; only the complete path is re-tested on every
    /// later packet. This is the rule behind the published reference tables.
    #[default]
    OnFormation,
    /// Re-test the current full subpath after every packet, marked or not.
    EveryPacket,
}

impl std::str::FromStr for TimedCheck {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "on_formation" => Ok(TimedCheck::OnFormation),
            "every_packet" => Ok(TimedCheck::EveryPacket),
            other => Err(Error::InvalidPolicy(format!(
                "unknown timed check {other:?}"
            ))),
        }
    }
}

impl StoppingPolicy {
    pub fn epsilon_timed(epsilon: f64) -> Result<Self> {
        StoppingPolicy::epsilon_timed_with(epsilon, TimedCheck::OnFormation)
    }

    pub fn epsilon_timed_with(epsilon: f64, check: TimedCheck) -> Result<Self> {
        let policy = StoppingPolicy::EpsilonTimed { epsilon, check };
        policy.validate()?;
        Ok(policy)
    }

    pub fn fixed_packets(count: u64) -> Result<Self> {
        let policy = StoppingPolicy::FixedPackets { count };
        policy.validate()?;
        Ok(policy)
    }

    pub fn swka(model: &AttackModel) -> Self {
        StoppingPolicy::FixedPackets {
            count: swka_stop_count(model),
        }
    }

    pub fn ss(model: &AttackModel) -> Self {
        StoppingPolicy::FixedPackets {
            count: ss_stop_count(model),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StoppingPolicy::Basic => Ok(()),
            StoppingPolicy::EpsilonTimed { epsilon, .. } if epsilon > 0.0 && epsilon < 1.0 => {
                Ok(())
            }
            StoppingPolicy::EpsilonTimed { epsilon, .. } => Err(Error::InvalidPolicy(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            ))),
            StoppingPolicy::FixedPackets { count } if count >= 1 => Ok(()),
            StoppingPolicy::FixedPackets { .. } => Err(Error::InvalidPolicy(
                "fixed packet count must be at least 1".into(),
            )),
        }
    }
}

impl fmt::Display for StoppingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StoppingPolicy::Basic => f.write_str("basic"),
            StoppingPolicy::EpsilonTimed {
                epsilon,
                check: TimedCheck::OnFormation,
            } => write!(f, "epsilon_timed({epsilon})"),
            StoppingPolicy::EpsilonTimed {
                epsilon,
                check: TimedCheck::EveryPacket,
            } => write!(f, "epsilon_timed_every_packet({epsilon})"),
            StoppingPolicy::FixedPackets { count } => write!(f, "fixed_packets({count})"),
        }
    }
}

/// What the collected edge set looks like when a policy stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OutcomeClass {
    /// All `n` edges: the true path.
    FullPath,
    /// `{1, ..., i}` with `i < n`: a consistent but truncated path.
    StrictFullSubpath,
    /// Anything else; the reconstruction has a gap.
    Hole,
}

impl OutcomeClass {
    pub const ALL: [OutcomeClass; 3] = [
        OutcomeClass::FullPath,
        OutcomeClass::StrictFullSubpath,
        OutcomeClass::Hole,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// `floor(ln n / (p q^(n-1)))`.
pub fn swka_stop_count(model: &AttackModel) -> u64 {
    swka_time(model).floor() as u64
}

fn swka_time(model: &AttackModel) -> f64 {
    let n = model.n();
    f64::from(n).ln() / (model.p() * model.q().powi(n as i32 - 1))
}

/// The SWKA time plus a third of the standard deviation of the
/// reconstruction time, floored.
///
/// The cumulative sums run over the edge probabilities in increasing order,
/// `C_i = sum_{j=1..i} p q^(n-j)`.
pub fn ss_stop_count(model: &AttackModel) -> u64 {
    let n = model.n();
    let (p, q) = (model.p(), model.q());
    let mut cumulative = 0.0;
    let mut variance = 0.0;
    for j in 1..=n {
        cumulative += p * q.powi((n - j) as i32);
        variance += (1.0 - cumulative) / (cumulative * cumulative);
    }
    (swka_time(model) + variance.sqrt() / 3.0).floor() as u64
}

/// Least `l` with `(1 - p q^j)^l <= epsilon`.
///
/// Returns 0 for `epsilon >= 1`.
pub fn waiting_threshold(model: &AttackModel, j: u32, epsilon: f64) -> Result<u64> {
    if j == 0 || j > model.n() {
        return Err(Error::domain("prefix length", j));
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::domain("epsilon", epsilon));
    }
    Ok(threshold_unchecked(model, j, epsilon))
}

fn threshold_unchecked(model: &AttackModel, j: u32, epsilon: f64) -> u64 {
    if epsilon >= 1.0 {
        return 0;
    }
    let miss = 1.0 - model.p() * model.q().powi(j as i32);
    (epsilon.ln() / miss.ln()).ceil() as u64
}

/// Classifies the edge set present when a fixed-count policy stops.
pub fn classify_fixed_outcome(state: &CollectorState, n: u32) -> OutcomeClass {
    match state.full_subpath_length() {
        Some(i) if i == n => OutcomeClass::FullPath,
        Some(_) => OutcomeClass::StrictFullSubpath,
        None => OutcomeClass::Hole,
    }
}

/// Result of one policy on one stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationRecord {
    pub packets_used: u64,
    /// Length of the returned full subpath, 0 when the stop left a hole.
    pub returned_length: u32,
    pub success: bool,
    /// Each full-subpath length (>= 2) seen, in order of first appearance.
    pub subpath_lengths: Vec<u32>,
    pub outcome_class: OutcomeClass,
}

impl IterationRecord {
    pub fn subpath_count(&self) -> usize {
        self.subpath_lengths.len()
    }
}

/// Where a single policy stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyStop {
    pub packets_used: u64,
    pub returned_length: u32,
    pub outcome: OutcomeClass,
}

/// The collected set first became `{1, ..., length}` at packet `packet`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubpathEvent {
    pub length: u32,
    pub packet: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMode {
    /// Stop reading once every policy has stopped.
    UntilStop,
    /// Keep reading until all edges are collected (and every policy stopped).
    FullCollection,
}

/// Everything observed on one stream.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StreamTrace {
    /// One entry per evaluator policy, in evaluator order.
    pub stops: Vec<Option<PolicyStop>>,
    pub subpaths: Vec<SubpathEvent>,
    /// Packet at which the last missing edge arrived.
    pub full_collection_time: Option<u64>,
    /// Distinct proper edges in order of first arrival.
    pub arrival_order: Vec<u32>,
    pub packets_read: u64,
}

impl StreamTrace {
    fn reset(&mut self, policies: usize) {
        self.stops.clear();
        self.stops.resize(policies, None);
        self.subpaths.clear();
        self.full_collection_time = None;
        self.arrival_order.clear();
        self.packets_read = 0;
    }

    /// Packet at which the collected set was first exactly `{1, ..., i}`
    /// with `i >= 2`: the point where [`StoppingPolicy::Basic`] stops.
    pub fn first_subpath(&self) -> Option<SubpathEvent> {
        self.subpaths.first().copied()
    }

    /// The record for policy `index`, or `None` if it never stopped.
    pub fn record(&self, index: usize, n: u32, mode: TraceMode) -> Option<IterationRecord> {
        let stop = self.stops.get(index).copied().flatten()?;
        let subpath_lengths = self
            .subpaths
            .iter()
            .filter(|s| mode == TraceMode::FullCollection || s.packet <= stop.packets_used)
            .map(|s| s.length)
            .collect();
        Some(IterationRecord {
            packets_used: stop.packets_used,
            returned_length: stop.returned_length,
            success: stop.returned_length == n,
            subpath_lengths,
            outcome_class: stop.outcome,
        })
    }
}

#[derive(Debug, Clone)]
enum Rule {
    Basic,
    // thresholds[j] = waiting threshold for a full subpath of length j.
    Timed {
        thresholds: Vec<u64>,
        every_packet: bool,
    },
    Fixed {
        count: u64,
    },
}

impl Rule {
    #[inline]
    fn check(&self, state: &CollectorState, new_edge: bool) -> Option<PolicyStop> {
        let n = state.n();
        let stop_on_prefix = |len: u32| PolicyStop {
            packets_used: state.packets_seen(),
            returned_length: len,
            outcome: if len == n {
                OutcomeClass::FullPath
            } else {
                OutcomeClass::StrictFullSubpath
            },
        };
        match self {
            Rule::Basic => state
                .full_subpath_length()
                .filter(|&len| len >= 2)
                .map(stop_on_prefix),
            Rule::Timed {
                thresholds,
                every_packet,
            } => state
                .full_subpath_length()
                .filter(|&len| {
                    len >= 2
                        && (*every_packet || new_edge || len == n)
                        && state.packets_seen() >= thresholds[len as usize]
                })
                .map(stop_on_prefix),
            Rule::Fixed { count } => (state.packets_seen() == *count).then(|| PolicyStop {
                packets_used: *count,
                returned_length: state.full_subpath_length().unwrap_or(0),
                outcome: classify_fixed_outcome(state, n),
            }),
        }
    }
}

/// Runs a fixed set of policies side by side over one packet stream.
#[derive(Debug, Clone)]
pub struct StreamEvaluator {
    n: u32,
    rules: Vec<Rule>,
}

impl StreamEvaluator {
    pub fn new(model: &AttackModel, policies: &[StoppingPolicy]) -> Result<Self> {
        let rules = policies
            .iter()
            .map(|policy| {
                policy.validate()?;
                Ok(match *policy {
                    StoppingPolicy::Basic => Rule::Basic,
                    StoppingPolicy::EpsilonTimed { epsilon, check } => Rule::Timed {
                        every_packet: check == TimedCheck::EveryPacket,
                        thresholds: (0..=model.n())
                            .map(|j| {
                                if j == 0 {
                                    0
                                } else {
                                    threshold_unchecked(model, j, epsilon)
                                }
                            })
                            .collect(),
                    },
                    StoppingPolicy::FixedPackets { count } => Rule::Fixed { count },
                })
            })
            .collect::<Result<_>>()?;
        Ok(StreamEvaluator {
            n: model.n(),
            rules,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn policy_count(&self) -> usize {
        self.rules.len()
    }

    /// Evaluates every policy on `events`. Returns `None` if the events run
    /// out before the requested trace is complete.
    pub fn evaluate<I>(&self, events: I, mode: TraceMode) -> Option<StreamTrace>
    where
        I: IntoIterator<Item = FlowEvent>,
    {
        let mut trace = StreamTrace::default();
        self.evaluate_into(events, mode, &mut trace)
            .then_some(trace)
    }

    /// Like [`evaluate`](Self::evaluate) but reuses `trace`'s buffers.
    /// Returns whether the trace was completed.
    pub fn evaluate_into<I>(&self, events: I, mode: TraceMode, trace: &mut StreamTrace) -> bool
    where
        I: IntoIterator<Item = FlowEvent>,
    {
        trace.reset(self.rules.len());
        let mut state = CollectorState::new(self.n);
        let mut pending = self.rules.len();
        let done = |pending: usize, state: &CollectorState| {
            pending == 0 && (mode == TraceMode::UntilStop || state.is_complete())
        };
        if done(pending, &state) {
            return true;
        }
        for event in events {
            let new_edge = state.ingest(event);
            if new_edge {
                trace.arrival_order.push(event.edge_index());
                if let Some(length) = state.full_subpath_length().filter(|&len| len >= 2) {
                    trace.subpaths.push(SubpathEvent {
                        length,
                        packet: state.packets_seen(),
                    });
                }
                if state.is_complete() {
                    trace.full_collection_time = Some(state.packets_seen());
                }
            }
            if pending > 0 {
                for (rule, slot) in self.rules.iter().zip(trace.stops.iter_mut()) {
                    if slot.is_none() {
                        if let Some(stop) = rule.check(&state, new_edge) {
                            *slot = Some(stop);
                            pending -= 1;
                        }
                    }
                }
            }
            if done(pending, &state) {
                trace.packets_read = state.packets_seen();
                return true;
            }
        }
        trace.packets_read = state.packets_seen();
        false
    }
}

/// Runs `policy` on a freshly sampled stream until it stops.
pub fn run_iteration<R: Rng + ?Sized>(
    model: &AttackModel,
    policy: StoppingPolicy,
    rng: &mut R,
) -> Result<IterationRecord> {
    run_sampled(model, policy, rng, TraceMode::UntilStop)
}

/// As [`run_iteration`], but keeps reading until every edge is collected so
/// that `subpath_lengths` covers the whole collection process.
pub fn run_iteration_traced<R: Rng + ?Sized>(
    model: &AttackModel,
    policy: StoppingPolicy,
    rng: &mut R,
) -> Result<IterationRecord> {
    run_sampled(model, policy, rng, TraceMode::FullCollection)
}

fn run_sampled<R: Rng + ?Sized>(
    model: &AttackModel,
    policy: StoppingPolicy,
    rng: &mut R,
    mode: TraceMode,
) -> Result<IterationRecord> {
    let evaluator = StreamEvaluator::new(model, &[policy])?;
    let sampler = model.sampler();
    let trace = evaluator
        .evaluate(sampler.stream(rng), mode)
        .expect("sampled streams are endless");
    Ok(trace
        .record(0, model.n(), mode)
        .expect("every policy stops on an endless stream"))
}

/// Runs `policy` over a finite scripted stream; `None` if it never stops.
pub fn run_on_events<I>(
    model: &AttackModel,
    policy: StoppingPolicy,
    events: I,
) -> Result<Option<IterationRecord>>
where
    I: IntoIterator<Item = FlowEvent>,
{
    let evaluator = StreamEvaluator::new(model, &[policy])?;
    let mut trace = StreamTrace::default();
    evaluator.evaluate_into(events, TraceMode::UntilStop, &mut trace);
    Ok(trace.record(0, model.n(), TraceMode::UntilStop))
}
