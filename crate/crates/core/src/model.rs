//! The attack path, the victim-side mark distribution and the collected edge set.
//!
//! Edges are indexed by hop distance from the victim: edge `j` (for
//! `1 <= j <= n`) joins `v_{j-1}` and `v_j` and is received with probability
//! `p * q^(j-1)`. Index 0 is the dummy edge, standing for a packet that
//! arrives without a surviving mark, with probability `q^n`.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// Path length and per-router marking probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackModel {
    n: u32,
    p: f64,
}

impl AttackModel {
    /// A path of `n >= 2` edges with marking probability `0 < p < 1`.
    pub fn new(n: u32, p: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidModel(format!(
                "path length must be at least 2, got {n}"
            )));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidModel(format!(
                "marking probability must lie in (0, 1), got {p}"
            )));
        }
        Ok(AttackModel { n, p })
    }

    /// The customary choice `p = 1/n`.
    pub fn with_reciprocal_probability(n: u32) -> Result<Self> {
        AttackModel::new(n, 1.0 / f64::from(n.max(1)))
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn q(&self) -> f64 {
        1.0 - self.p
    }

    /// Probability that a received packet carries edge `j` (0 = unmarked).
    pub fn edge_mark_probability(&self, j: u32) -> Result<f64> {
        if j > self.n {
            return Err(Error::domain("edge index", j));
        }
        Ok(self.mark_probability_unchecked(j))
    }

    #[inline]
    pub(crate) fn mark_probability_unchecked(&self, j: u32) -> f64 {
        if j == 0 {
            self.q().powi(self.n as i32)
        } else {
            self.proper_probability(j)
        }
    }

    /// `p * q^(j-1)` for a proper edge `j >= 1`; no range check.
    #[inline]
    pub(crate) fn proper_probability(&self, j: u32) -> f64 {
        self.p * self.q().powi(j as i32 - 1)
    }

    /// Probabilities of indices `0..=n`.
    pub fn mark_distribution(&self) -> Vec<f64> {
        (0..=self.n)
            .map(|j| self.mark_probability_unchecked(j))
            .collect()
    }

    pub fn sampler(&self) -> EventSampler {
        EventSampler::new(self)
    }
}

impl fmt::Display for AttackModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} p={}", self.n, self.p)
    }
}

/// Hop index of a router on the canonical path; `v_0` is the victim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u32);

/// The effective mark of one received packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FlowEvent(u32);

impl FlowEvent {
    pub const DUMMY: FlowEvent = FlowEvent(0);

    pub fn new(edge_index: u32, model: &AttackModel) -> Result<Self> {
        if edge_index > model.n() {
            return Err(Error::domain("edge index", edge_index));
        }
        Ok(FlowEvent(edge_index))
    }

    #[inline]
    pub fn edge_index(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_dummy(self) -> bool {
        self.0 == 0
    }

    /// The mark triple carried by the packet, if it was marked.
    pub fn mark(self) -> Option<EdgeMark> {
        (!self.is_dummy()).then(|| EdgeMark::for_edge(self.0))
    }
}

/// A mark as written by a router: the two endpoints of an edge, farther
/// vertex first, plus the hop distance of the edge from the victim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeMark {
    pub far_vertex: VertexId,
    pub near_vertex: VertexId,
    pub distance: u32,
}

impl EdgeMark {
    pub fn new(far_vertex: VertexId, near_vertex: VertexId, distance: u32) -> Result<Self> {
        if distance == 0 || far_vertex.0 != distance || near_vertex.0 + 1 != far_vertex.0 {
            return Err(Error::domain(
                "edge mark",
                format!("({}, {}, {distance})", far_vertex.0, near_vertex.0),
            ));
        }
        Ok(EdgeMark {
            far_vertex,
            near_vertex,
            distance,
        })
    }

    /// Mark for edge `e_j = {v_{j-1}, v_j}`; `j` must be at least 1.
    pub fn for_edge(j: u32) -> Self {
        debug_assert!(j >= 1);
        EdgeMark {
            far_vertex: VertexId(j),
            near_vertex: VertexId(j - 1),
            distance: j,
        }
    }
}

/// Inverse-CDF sampler over the `n + 1` mark outcomes.
#[derive(Debug, Clone)]
pub struct EventSampler {
    // cumulative[k] = P(index <= k); the final entry is pinned to 1.
    cumulative: Vec<f64>,
}

impl EventSampler {
    pub fn new(model: &AttackModel) -> Self {
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = model
            .mark_distribution()
            .into_iter()
            .map(|prob| {
                acc += prob;
                acc
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        EventSampler { cumulative }
    }

    #[inline]
    pub fn n(&self) -> u32 {
        (self.cumulative.len() - 1) as u32
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FlowEvent {
        let u: f64 = rng.gen();
        FlowEvent(self.cumulative.partition_point(|&c| c <= u) as u32)
    }

    /// Endless stream of independent draws.
    pub fn stream<'a, R: Rng + ?Sized>(
        &'a self,
        rng: &'a mut R,
    ) -> impl Iterator<Item = FlowEvent> + 'a {
        std::iter::repeat_with(move || self.sample(rng))
    }
}

/// The victim's view: which proper edges have been seen and how many
/// packets have arrived in total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollectorState {
    n: u32,
    words: Vec<u64>,
    distinct: u32,
    // Largest i such that 1..=i are all collected.
    prefix: u32,
    packets_seen: u64,
}

impl CollectorState {
    pub fn new(n: u32) -> Self {
        CollectorState {
            n,
            words: vec![0; (n as usize + 1).div_ceil(64)],
            distinct: 0,
            prefix: 0,
            packets_seen: 0,
        }
    }

    /// Builds a state holding `edges` after `packets_seen` packets.
    pub fn from_edges(n: u32, edges: &[u32], packets_seen: u64) -> Result<Self> {
        let mut state = CollectorState::new(n);
        for &edge in edges {
            if edge == 0 || edge > n {
                return Err(Error::domain("edge index", edge));
            }
            state.insert(edge);
        }
        if u64::from(state.distinct) > packets_seen {
            return Err(Error::domain(
                "packet count",
                format!("{packets_seen} < {} distinct edges", state.distinct),
            ));
        }
        state.packets_seen = packets_seen;
        Ok(state)
    }

    /// Records one packet. Returns `true` when it brought a new proper edge.
    #[inline]
    pub fn ingest(&mut self, event: FlowEvent) -> bool {
        self.packets_seen += 1;
        let j = event.edge_index();
        j != 0 && self.insert(j)
    }

    #[inline]
    fn insert(&mut self, j: u32) -> bool {
        debug_assert!(j >= 1 && j <= self.n);
        let (word, bit) = (j as usize / 64, j % 64);
        if self.words[word] & (1 << bit) != 0 {
            return false;
        }
        self.words[word] |= 1 << bit;
        self.distinct += 1;
        if j == self.prefix + 1 {
            while self.prefix < self.n && self.contains(self.prefix + 1) {
                self.prefix += 1;
            }
        }
        true
    }

    #[inline]
    pub fn contains(&self, j: u32) -> bool {
        j <= self.n && self.words[j as usize / 64] & (1 << (j % 64)) != 0
    }

    /// `Some(i)` when the collected edges are exactly `{1, ..., i}`, `i >= 1`.
    #[inline]
    pub fn full_subpath_length(&self) -> Option<u32> {
        (self.distinct > 0 && self.distinct == self.prefix).then_some(self.prefix)
    }

    #[inline]
    pub fn is_complete(&self) -> bool {
        self.prefix == self.n
    }

    #[inline]
    pub fn packets_seen(&self) -> u64 {
        self.packets_seen
    }

    #[inline]
    pub fn distinct_edges(&self) -> u32 {
        self.distinct
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Collected edges in increasing order.
    pub fn collected(&self) -> impl Iterator<Item = u32> + '_ {
        (1..=self.n).filter(move |&j| self.contains(j))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(n: u32, p: f64) -> AttackModel {
        AttackModel::new(n, p).unwrap()
    }

    #[test]
    fn rejects_degenerate_models() {
        assert!(AttackModel::new(1, 0.5).is_err());
        assert!(AttackModel::new(4, 0.0).is_err());
        assert!(AttackModel::new(4, 1.0).is_err());
        assert!(AttackModel::new(4, f64::NAN).is_err());
    }

    #[test]
    fn mark_probability_examples() {
        let m = model(4, 0.25);
        assert_eq!(m.edge_mark_probability(1).unwrap(), 0.25);
        assert!((m.edge_mark_probability(0).unwrap() - 0.316_406_25).abs() < 1e-15);
        assert!((model(2, 0.5).edge_mark_probability(2).unwrap() - 0.25).abs() < 1e-15);
        assert!(m.edge_mark_probability(5).is_err());
    }

    #[test]
    fn mark_and_vertices_agree() {
        let mark = FlowEvent(3).mark().unwrap();
        assert_eq!(mark.far_vertex, VertexId(3));
        assert_eq!(mark.near_vertex, VertexId(2));
        assert_eq!(mark.distance, 3);
        assert!(FlowEvent::DUMMY.mark().is_none());
        assert!(EdgeMark::new(VertexId(3), VertexId(1), 3).is_err());
        assert!(EdgeMark::new(VertexId(1), VertexId(0), 0).is_err());
        assert_eq!(
            EdgeMark::new(VertexId(1), VertexId(0), 1).unwrap(),
            EdgeMark::for_edge(1)
        );
    }

    #[test]
    fn ingest_examples() {
        let mut s = CollectorState::new(4);
        assert!(s.ingest(FlowEvent(2)));
        assert_eq!(
            (s.collected().collect::<Vec<_>>(), s.packets_seen()),
            (vec![2], 1)
        );
        assert!(!s.ingest(FlowEvent::DUMMY));
        assert_eq!(
            (s.collected().collect::<Vec<_>>(), s.packets_seen()),
            (vec![2], 2)
        );
        assert!(!s.ingest(FlowEvent(2)));
        assert_eq!(
            (s.collected().collect::<Vec<_>>(), s.packets_seen()),
            (vec![2], 3)
        );
    }

    #[test]
    fn full_subpath_examples() {
        let st = |n, e: &[u32]| CollectorState::from_edges(n, e, 100).unwrap();
        assert_eq!(st(4, &[1, 2]).full_subpath_length(), Some(2));
        assert_eq!(st(4, &[1, 2, 4]).full_subpath_length(), None);
        assert_eq!(
            st(25, &(1..=25).collect::<Vec<_>>()).full_subpath_length(),
            Some(25)
        );
        assert_eq!(st(4, &[2, 3]).full_subpath_length(), None);
        assert_eq!(st(4, &[]).full_subpath_length(), None);
        assert!(CollectorState::from_edges(4, &[5], 3).is_err());
        assert!(CollectorState::from_edges(4, &[1, 2], 1).is_err());
    }

    #[test]
    fn wide_paths_use_several_words() {
        let mut s = CollectorState::new(130);
        for j in (1..=130).rev() {
            s.ingest(FlowEvent(j));
            assert_eq!(s.full_subpath_length().is_some(), j == 1);
        }
        assert!(s.is_complete());
        assert_eq!(s.full_subpath_length(), Some(130));
    }

    #[test]
    fn sampler_is_deterministic_for_a_seed() {
        let sampler = model(25, 0.04).sampler();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sampler.stream(&mut rng).take(1000).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn sampler_matches_distribution() {
        const DRAWS: u64 = 1_000_000;
        let m = model(25, 0.04);
        let sampler = m.sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = vec![0u64; 26];
        for _ in 0..DRAWS {
            counts[sampler.sample(&mut rng).edge_index() as usize] += 1;
        }
        let probs = m.mark_distribution();
        let mut chi2 = 0.0;
        for (j, (&c, &pr)) in counts.iter().zip(&probs).enumerate() {
            let expected = pr * DRAWS as f64;
            let se = (DRAWS as f64 * pr * (1.0 - pr)).sqrt();
            assert!(
                (c as f64 - expected).abs() < 4.0 * se,
                "index {j}: {c} vs {expected}"
            );
            chi2 += (c as f64 - expected).powi(2) / expected;
        }
        // Upper 1e-4 quantile of chi-square with 25 degrees of freedom.
        assert!(chi2 < 60.140_291_9, "chi2 = {chi2}");
        let dummy = counts[0] as f64 / DRAWS as f64;
        assert!((dummy - 0.96f64.powi(25)).abs() < 4.0 * (0.36 * 0.64 / DRAWS as f64).sqrt());
        assert!((0.96f64.powi(25) - 0.360).abs() < 5e-4);
    }

    proptest! {
        #[test]
        fn distribution_is_normalized_and_decreasing(n in 2u32..200, p in 1e-4f64..0.9999) {
            let m = model(n, p);
            let dist = m.mark_distribution();
            let total: f64 = dist.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for j in 2..=n as usize {
                // Deep tails underflow to zero when p is close to 1.
                prop_assert!(dist[j] < dist[j - 1] || dist[j - 1] == 0.0);
            }
        }

        #[test]
        fn collector_invariants(n in 2u32..90, edges in prop::collection::vec(0u32..90, 0..300)) {
            let mut s = CollectorState::new(n);
            let mut previous = Vec::new();
            for (k, e) in edges.into_iter().enumerate() {
                let e = e % (n + 1);
                s.ingest(FlowEvent(e));
                let now: Vec<u32> = s.collected().collect();
                prop_assert!(previous.iter().all(|x| now.contains(x)));
                prop_assert_eq!(s.packets_seen(), k as u64 + 1);
                prop_assert!(u64::from(s.distinct_edges()) <= s.packets_seen());
                let expected_prefix = (!now.is_empty() && now.iter().copied().eq(1..=now.len() as u32))
                    .then_some(now.len() as u32);
                prop_assert_eq!(s.full_subpath_length(), expected_prefix);
                if let Some(i) = s.full_subpath_length() {
                    prop_assert_eq!(now.len() as u32, i);
                    prop_assert_eq!(*now.last().unwrap(), i);
                }
                previous = now;
            }
        }
    }
}
