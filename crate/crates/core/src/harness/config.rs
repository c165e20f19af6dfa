use std::fmt;
use std::fs;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::AttackModel;
use crate::policy::{ss_stop_count, swka_stop_count, StoppingPolicy, TimedCheck};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Basic,
    /// Expands to one policy per configured epsilon.
    EpsilonTimed,
    SwkaFixed,
    SsFixed,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Basic,
        PolicyKind::EpsilonTimed,
        PolicyKind::SwkaFixed,
        PolicyKind::SsFixed,
    ];
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "basic" => Ok(PolicyKind::Basic),
            "epsilon" | "epsilon_timed" | "timed" => Ok(PolicyKind::EpsilonTimed),
            "swka" => Ok(PolicyKind::SwkaFixed),
            "ss" | "s&s" => Ok(PolicyKind::SsFixed),
            other => Err(Error::Config(format!("unknown policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Workers {
    #[default]
    Auto,
    Fixed(NonZeroUsize),
}

impl Workers {
    pub fn fixed(count: usize) -> Result<Self> {
        NonZeroUsize::new(count)
            .map(Workers::Fixed)
            .ok_or_else(|| Error::Config("workers must be positive".into()))
    }
}

impl FromStr for Workers {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Workers::Auto);
        }
        let count = s.parse::<usize>().map_err(|_| {
            Error::Config(format!(
                "workers must be a positive integer or auto, got {s:?}"
            ))
        })?;
        Workers::fixed(count)
    }
}

impl fmt::Display for Workers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Workers::Auto => f.write_str("auto"),
            Workers::Fixed(k) => write!(f, "{k}"),
        }
    }
}

/// One concrete policy in an experiment, with its report label.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedPolicy {
    pub label: String,
    pub kind: PolicyKind,
    pub policy: StoppingPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: u32,
    pub p: f64,
    pub iterations: u64,
    pub base_seed: u64,
    pub epsilons: Vec<f64>,
    /// When the epsilon-timed policies test their waiting condition.
    pub timed_check: TimedCheck,
    pub policies: Vec<PolicyKind>,
    pub output_dir: PathBuf,
    pub workers: Workers,
    /// Evaluate every policy on the same stream; otherwise each policy
    /// draws its own substream.
    pub shared_stream: bool,
    /// Accumulate per-edge location and disruption means.
    pub order_stats: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 25,
            p: 1.0 / 25.0,
            iterations: 100_000,
            base_seed: 42,
            epsilons: vec![0.1, 0.05],
            timed_check: TimedCheck::OnFormation,
            policies: PolicyKind::ALL.to_vec(),
            output_dir: PathBuf::from("results"),
            workers: Workers::Auto,
            shared_stream: true,
            order_stats: true,
        }
    }
}

impl ExperimentConfig {
    pub fn model(&self) -> Result<AttackModel> {
        AttackModel::new(self.n, self.p)
    }

    pub fn validate(&self) -> Result<()> {
        self.model()?;
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        if let Some(eps) = self.epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::Config(format!(
                "epsilon must lie in (0, 1), got {eps}"
            )));
        }
        if self.policies.contains(&PolicyKind::EpsilonTimed) && self.epsilons.is_empty() {
            return Err(Error::Config(
                "epsilon-timed policy needs at least one epsilon".into(),
            ));
        }
        Ok(())
    }

    /// Concrete policies in report order: basic, one per epsilon, SWKA, S&S.
    pub fn resolved_policies(&self) -> Result<Vec<NamedPolicy>> {
        let model = self.model()?;
        let mut kinds = self.policies.clone();
        kinds.sort();
        kinds.dedup();
        let mut out = Vec::new();
        for kind in kinds {
            match kind {
                PolicyKind::Basic => out.push(NamedPolicy {
                    label: "basic".into(),
                    kind,
                    policy: StoppingPolicy::Basic,
                }),
                PolicyKind::EpsilonTimed => {
                    for &epsilon in &self.epsilons {
                        let policy = StoppingPolicy::epsilon_timed_with(epsilon, self.timed_check)?;
                        out.push(NamedPolicy {
                            label: policy.to_string(),
                            kind,
                            policy,
                        });
                    }
                }
                PolicyKind::SwkaFixed => out.push(NamedPolicy {
                    label: "swka".into(),
                    kind,
                    policy: StoppingPolicy::fixed_packets(swka_stop_count(&model))?,
                }),
                PolicyKind::SsFixed => out.push(NamedPolicy {
                    label: "ss".into(),
                    kind,
                    policy: StoppingPolicy::fixed_packets(ss_stop_count(&model))?,
                }),
            }
        }
        Ok(out)
    }

    /// Reads `key = value` lines from `path` on top of the current values.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text)
    }

    /// Blank lines and `#` comments are skipped. `epsilon` may repeat or hold
    /// a comma-separated list; the first occurrence replaces the defaults.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut epsilons_seen = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| {
                Error::Config(format!("line {}: invalid {what} {value:?}", lineno + 1))
            };
            match key {
                "n" => self.n = value.parse().map_err(|_| bad("n"))?,
                "p" => self.p = value.parse().map_err(|_| bad("p"))?,
                "iterations" => self.iterations = value.parse().map_err(|_| bad("iterations"))?,
                "seed" | "base_seed" => self.base_seed = value.parse().map_err(|_| bad("seed"))?,
                "epsilon" | "epsilons" => {
                    if !epsilons_seen {
                        self.epsilons.clear();
                        epsilons_seen = true;
                    }
                    for part in value.split(',').filter(|s| !s.trim().is_empty()) {
                        self.epsilons
                            .push(part.trim().parse().map_err(|_| bad("epsilon"))?);
                    }
                }
                "timed_check" => self.timed_check = value.parse()?,
                "policies" | "policy" => {
                    self.policies = value
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(str::parse)
                        .collect::<Result<_>>()?;
                }
                "out" | "output_dir" => self.output_dir = PathBuf::from(value),
                "workers" => self.workers = value.parse()?,
                "shared_stream" => self.shared_stream = value.parse().map_err(|_| bad("flag"))?,
                "order_stats" => self.order_stats = value.parse().map_err(|_| bad("flag"))?,
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key {other:?}",
                        lineno + 1
                    )))
                }
            }
        }
        Ok(())
    }
}
