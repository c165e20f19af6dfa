//! Simulation and analysis of edge-sampling probabilistic packet marking.
//!
//! A single attacker sits `n` hops away from the victim. Every router on the
//! path overwrites the packet's mark with probability `p`, so the victim sees
//! edge `e_j` (the edge `j` hops away) with probability `p * q^(j-1)` and an
//! unmarked packet with probability `q^n`, where `q = 1 - p`.
//!
//! The crate is split into:
//!
//! * [`model`]: the attack path, the per-packet mark distribution and the
//!   victim's collected edge set.
//! * [`policy`]: stopping rules that decide when to stop collecting and
//!   report a path.
//! * [`analytics`]: closed-form and limiting statistics of the order in which
//!   distinct edges arrive.
//! * [`oracles`]: brute-force enumerations for small paths, used to check the
//!   closed forms and the simulator.
//! * [`harness`]: seeded, parallel Monte-Carlo campaigns and CSV reports.

pub mod analytics;
pub mod error;
pub mod harness;
pub mod model;
pub mod oracles;
pub mod policy;

pub use error::{Error, Result};
pub use model::{AttackModel, CollectorState, EdgeMark, EventSampler, FlowEvent, VertexId};
pub use policy::{IterationRecord, OutcomeClass, StoppingPolicy, TimedCheck};
