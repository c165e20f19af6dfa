use std::collections::BTreeMap;
use std::fs;
use std::ops::Range;

use rayon::prelude::*;

use super::config::{ExperimentConfig, NamedPolicy, PolicyKind, Workers};
use super::rng::substream;
use crate::error::{Error, Result};
use crate::model::{AttackModel, EventSampler};
use crate::policy::{OutcomeClass, StoppingPolicy, StreamEvaluator, StreamTrace, TraceMode};

/// Iterations handled per work unit. Fixed so that the split does not depend
/// on the worker count.
const BLOCK: u64 = 2048;

/// Raw integer counters; merging is exact, so the totals do not depend on
/// the order in which blocks finish.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tally {
    pub iterations: u64,
    pub policy_packets: Vec<u128>,
    pub policy_successes: Vec<u64>,
    pub policy_outcomes: Vec<[u64; 3]>,
    pub full_collection_packets: u128,
    /// Indexed by number of full subpaths met in an iteration.
    pub subpath_counts: Vec<u64>,
    /// Indexed by length of the first full subpath (what the basic policy returns).
    pub first_subpath_lengths: Vec<u64>,
    /// Indexed by length; iterations in which that full subpath appeared.
    pub encountered_lengths: Vec<u64>,
    /// Indexed by edge - 1.
    pub location_sums: Vec<u64>,
    pub disruption_sums: Vec<u64>,
}

impl Tally {
    pub fn new(n: u32, policies: usize) -> Self {
        let n = n as usize;
        Tally {
            iterations: 0,
            policy_packets: vec![0; policies],
            policy_successes: vec![0; policies],
            policy_outcomes: vec![[0; 3]; policies],
            full_collection_packets: 0,
            subpath_counts: vec![0; n + 1],
            first_subpath_lengths: vec![0; n + 1],
            encountered_lengths: vec![0; n + 1],
            location_sums: vec![0; n],
            disruption_sums: vec![0; n],
        }
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        fn add<T: Copy + std::ops::AddAssign>(a: &mut [T], b: &[T]) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += *y);
        }
        self.iterations += other.iterations;
        add(&mut self.policy_packets, &other.policy_packets);
        add(&mut self.policy_successes, &other.policy_successes);
        for (a, b) in self.policy_outcomes.iter_mut().zip(&other.policy_outcomes) {
            add(a, b);
        }
        self.full_collection_packets += other.full_collection_packets;
        add(&mut self.subpath_counts, &other.subpath_counts);
        add(
            &mut self.first_subpath_lengths,
            &other.first_subpath_lengths,
        );
        add(&mut self.encountered_lengths, &other.encountered_lengths);
        add(&mut self.location_sums, &other.location_sums);
        add(&mut self.disruption_sums, &other.disruption_sums);
        self
    }

    fn record_stop(&mut self, k: usize, packets: u64, outcome: OutcomeClass) {
        self.policy_packets[k] += u128::from(packets);
        self.policy_successes[k] += u64::from(outcome == OutcomeClass::FullPath);
        self.policy_outcomes[k][outcome.index()] += 1;
    }

    fn record_trace(&mut self, trace: &StreamTrace, order_stats: bool, ranks: &mut [u32]) {
        self.iterations += 1;
        self.full_collection_packets += u128::from(
            trace
                .full_collection_time
                .expect("trace ran to full collection"),
        );
        self.subpath_counts[trace.subpaths.len()] += 1;
        if let Some(first) = trace.first_subpath() {
            self.first_subpath_lengths[first.length as usize] += 1;
        }
        for s in &trace.subpaths {
            self.encountered_lengths[s.length as usize] += 1;
        }
        if order_stats {
            for (rank, &edge) in trace.arrival_order.iter().enumerate() {
                ranks[edge as usize - 1] = rank as u32;
                self.location_sums[edge as usize - 1] += rank as u64 + 1;
            }
            // A disruption is a pair i < j with j arriving first; it counts for both.
            for i in 0..ranks.len() {
                for j in i + 1..ranks.len() {
                    if ranks[j] < ranks[i] {
                        self.disruption_sums[i] += 1;
                        self.disruption_sums[j] += 1;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub label: String,
    pub kind: PolicyKind,
    pub policy: StoppingPolicy,
    pub mean_packets: f64,
    pub success_rate: f64,
    /// Frequencies of full path, strict full subpath and hole, in that order.
    pub outcome_frequencies: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubpathLengthStat {
    pub length: u32,
    pub prob_returned_by_basic: f64,
    pub prob_encountered: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub model: AttackModel,
    pub iterations: u64,
    pub base_seed: u64,
    pub policies: Vec<PolicySummary>,
    pub mean_full_collection_time: f64,
    pub subpath_count_distribution: BTreeMap<u32, f64>,
    /// Lengths `2..=n`.
    pub subpath_length_stats: Vec<SubpathLengthStat>,
    /// Per edge `1..=n`; absent when order statistics were not collected.
    pub location_means: Option<Vec<f64>>,
    pub disruption_means: Option<Vec<f64>>,
    pub tally: Tally,
}

impl AggregateReport {
    pub fn policy(&self, label: &str) -> Option<&PolicySummary> {
        self.policies.iter().find(|p| p.label == label)
    }

    fn from_tally(
        config: &ExperimentConfig,
        policies: &[NamedPolicy],
        tally: Tally,
    ) -> Result<Self> {
        let model = config.model()?;
        let runs = tally.iterations as f64;
        let freq = |count: u64| count as f64 / runs;
        let summaries = policies
            .iter()
            .enumerate()
            .map(|(k, named)| PolicySummary {
                label: named.label.clone(),
                kind: named.kind,
                policy: named.policy,
                mean_packets: tally.policy_packets[k] as f64 / runs,
                success_rate: freq(tally.policy_successes[k]),
                outcome_frequencies: tally.policy_outcomes[k].map(freq),
            })
            .collect();
        let subpath_count_distribution = tally
            .subpath_counts
            .iter()
            .enumerate()
            .skip(1)
            .take(model.n() as usize - 1)
            .map(|(count, &c)| (count as u32, freq(c)))
            .collect();
        let subpath_length_stats = (2..=model.n())
            .map(|len| SubpathLengthStat {
                length: len,
                prob_returned_by_basic: freq(tally.first_subpath_lengths[len as usize]),
                prob_encountered: freq(tally.encountered_lengths[len as usize]),
            })
            .collect();
        let means = |sums: &[u64]| sums.iter().map(|&s| s as f64 / runs).collect::<Vec<_>>();
        Ok(AggregateReport {
            model,
            iterations: tally.iterations,
            base_seed: config.base_seed,
            policies: summaries,
            mean_full_collection_time: tally.full_collection_packets as f64 / runs,
            subpath_count_distribution,
            subpath_length_stats,
            location_means: config.order_stats.then(|| means(&tally.location_sums)),
            disruption_means: config.order_stats.then(|| means(&tally.disruption_sums)),
            tally,
        })
    }
}

struct Campaign {
    config: ExperimentConfig,
    model: AttackModel,
    sampler: EventSampler,
    policies: Vec<NamedPolicy>,
    shared: StreamEvaluator,
    // One evaluator per policy when streams are not shared.
    separate: Vec<StreamEvaluator>,
}

impl Campaign {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let model = config.model()?;
        let policies = config.resolved_policies()?;
        let plain: Vec<StoppingPolicy> = policies.iter().map(|p| p.policy).collect();
        let (shared, separate) = if config.shared_stream {
            (StreamEvaluator::new(&model, &plain)?, Vec::new())
        } else {
            (
                StreamEvaluator::new(&model, &[])?,
                plain
                    .iter()
                    .map(|p| StreamEvaluator::new(&model, std::slice::from_ref(p)))
                    .collect::<Result<_>>()?,
            )
        };
        Ok(Campaign {
            config: config.clone(),
            model,
            sampler: model.sampler(),
            policies,
            shared,
            separate,
        })
    }

    fn run_block(&self, range: Range<u64>) -> Tally {
        let n = self.model.n();
        let seed = self.config.base_seed;
        let mut tally = Tally::new(n, self.policies.len());
        let mut trace = StreamTrace::default();
        let mut side = StreamTrace::default();
        let mut ranks = vec![0u32; n as usize];
        for it in range {
            let mut rng = substream(seed, 0, it);
            let complete = self.shared.evaluate_into(
                self.sampler.stream(&mut rng),
                TraceMode::FullCollection,
                &mut trace,
            );
            debug_assert!(complete);
            tally.record_trace(&trace, self.config.order_stats, &mut ranks);
            if self.separate.is_empty() {
                for (k, stop) in trace.stops.iter().enumerate() {
                    let stop = stop.expect("policy stopped");
                    tally.record_stop(k, stop.packets_used, stop.outcome);
                }
            } else {
                for (k, evaluator) in self.separate.iter().enumerate() {
                    let mut rng = substream(seed, k as u64 + 1, it);
                    evaluator.evaluate_into(
                        self.sampler.stream(&mut rng),
                        TraceMode::UntilStop,
                        &mut side,
                    );
                    let stop = side.stops[0].expect("policy stopped");
                    tally.record_stop(k, stop.packets_used, stop.outcome);
                }
            }
        }
        tally
    }

    fn run(&self) -> Result<Tally> {
        let iterations = self.config.iterations;
        let blocks = iterations.div_ceil(BLOCK);
        let n = self.model.n();
        let count = self.policies.len();
        let work = || {
            (0..blocks)
                .into_par_iter()
                .map(|b| self.run_block(b * BLOCK..((b + 1) * BLOCK).min(iterations)))
                .reduce(|| Tally::new(n, count), Tally::merge)
        };
        let threads = match self.config.workers {
            Workers::Auto => 0,
            Workers::Fixed(k) => k.get(),
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        Ok(pool.install(work))
    }
}

/// Runs the Monte-Carlo campaign described by `config` without touching the
/// filesystem.
pub fn simulate(config: &ExperimentConfig) -> Result<AggregateReport> {
    let campaign = Campaign::new(config)?;
    let tally = campaign.run()?;
    AggregateReport::from_tally(config, &campaign.policies, tally)
}

/// Checks that the output directory is writable, then runs [`simulate`].
pub fn run_experiment(config: &ExperimentConfig) -> Result<AggregateReport> {
    config.validate()?;
    ensure_writable(&config.output_dir)?;
    simulate(config)
}

pub(crate) fn ensure_writable(dir: &std::path::Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".ppmlab-write-check");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}
