//! Statistics of the order in which distinct edges first reach the victim.
//!
//! Ignoring unmarked packets and repeats, the edges arrive as a random
//! permutation in which edge `j` precedes edge `i` with probability
//! `p_j / (p_i + p_j) = 1 / (1 + q^(i-j))`. The location of an edge is its
//! rank in that permutation, and a disruption is a pair `i < j` where the
//! farther edge `j` shows up first.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::model::AttackModel;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Per-edge expected location and disruption count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderStatRow {
    pub edge_index: u32,
    pub expected_location: f64,
    pub expected_disruptions: f64,
    pub normalized_location: f64,
    pub normalized_disruptions: f64,
}

/// A permutation of `1..=n` describing the order of first arrivals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderingQuery(Vec<u32>);

impl OrderingQuery {
    pub fn new(permutation: Vec<u32>) -> Result<Self> {
        let n = permutation.len();
        let mut seen = vec![false; n + 1];
        for &edge in &permutation {
            let slot = seen.get_mut(edge as usize).filter(|_| edge >= 1);
            match slot {
                Some(s) if !*s => *s = true,
                _ => return Err(Error::domain("permutation", format!("{permutation:?}"))),
            }
        }
        Ok(OrderingQuery(permutation))
    }

    pub fn descending(n: u32) -> Self {
        OrderingQuery((1..=n).collect())
    }

    pub fn ascending(n: u32) -> Self {
        OrderingQuery((1..=n).rev().collect())
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_edge(model: &AttackModel, i: u32) -> Result<()> {
    if i == 0 || i > model.n() {
        return Err(Error::domain("edge index", i));
    }
    Ok(())
}

/// `1 / (1 + q^k)` for a signed exponent.
#[inline]
fn pairwise(q: f64, k: i32) -> f64 {
    1.0 / (1.0 + q.powi(k))
}

/// `E(L_n(i)) = n - sum_{j != i} 1 / (1 + q^(j-i))`.
pub fn expected_location_exact(model: &AttackModel, i: u32) -> Result<f64> {
    check_edge(model, i)?;
    let q = model.q();
    let sum: f64 = (1..=model.n())
        .filter(|&j| j != i)
        .map(|j| pairwise(q, j as i32 - i as i32))
        .sum();
    Ok(f64::from(model.n()) - sum)
}

/// Limit of `E(L_n(i)) / n` for `i ~ beta n`, `p = 1/n`.
pub fn expected_location_limit(beta: f64) -> f64 {
    (1.0 + beta.exp()).ln() - (1.0 + (beta - 1.0).exp()).ln()
}

/// `E(D_n(i))`: expected number of disruptions involving edge `i`.
pub fn expected_disruptions_exact(model: &AttackModel, i: u32) -> Result<f64> {
    check_edge(model, i)?;
    let q = model.q();
    let nearer: f64 = (1..i).map(|j| pairwise(q, j as i32 - i as i32)).sum();
    let farther: f64 = (i..=model.n())
        .map(|j| pairwise(q, i as i32 - j as i32))
        .sum();
    Ok(nearer + farther - 0.5)
}

/// Limit of `E(D_n(i)) / n` for `i ~ beta n`, `p = 1/n`.
pub fn expected_disruptions_limit(beta: f64) -> f64 {
    1.0 + 4f64.ln() - (1.0 + (1.0 - beta).exp()).ln() - (1.0 + beta.exp()).ln()
}

/// Rows for every edge `1..=n`.
pub fn order_stat_table(model: &AttackModel) -> Vec<OrderStatRow> {
    let n = f64::from(model.n());
    (1..=model.n())
        .map(|i| {
            let location = expected_location_exact(model, i).expect("edge in range");
            let disruptions = expected_disruptions_exact(model, i).expect("edge in range");
            OrderStatRow {
                edge_index: i,
                expected_location: location,
                expected_disruptions: disruptions,
                normalized_location: location / n,
                normalized_disruptions: disruptions / n,
            }
        })
        .collect()
}

/// Probability that the distinct edges arrive exactly in `query` order.
pub fn ordering_probability(model: &AttackModel, query: &OrderingQuery) -> Result<f64> {
    let n = model.n();
    if query.len() != n as usize {
        return Err(Error::domain(
            "permutation length",
            format!("{} (n = {n})", query.len()),
        ));
    }
    let probs: Vec<f64> = (1..=n).map(|j| model.proper_probability(j)).collect();
    let mut received = vec![false; n as usize];
    let mut result = 1.0;
    for &edge in query.as_slice() {
        // Mass of the edges still outstanding, summed afresh: the running
        // difference 1 - q^n - p_{i_1} - ... cancels badly late in the order.
        let remaining: f64 = probs
            .iter()
            .zip(&received)
            .filter(|(_, &got)| !got)
            .map(|(&pr, _)| pr)
            .sum();
        let k = edge as usize - 1;
        result *= probs[k] / remaining;
        received[k] = true;
    }
    Ok(result)
}

/// Closed form for the order `1, 2, ..., n` (most probable edge first):
/// `p^n prod_{m=1..n} 1 / (1 - q^m)`.
pub fn descending_order_probability(model: &AttackModel) -> f64 {
    let (p, q, n) = (model.p(), model.q(), model.n() as i32);
    (1..=n).fold(p.powi(n), |acc, m| acc / (1.0 - q.powi(m)))
}

/// Closed form for the order `n, ..., 1`: the descending probability
/// scaled by `q^(n(n-1)/2)`.
pub fn ascending_order_probability(model: &AttackModel) -> f64 {
    let n = model.n() as i32;
    descending_order_probability(model) * model.q().powi(n * (n - 1) / 2)
}

/// `Li_2(x) = sum_{j >= 1} x^j / j^2` on `[0, 1]`.
///
/// Above 1/2 the reflection `Li_2(x) = pi^2/6 - ln(x) ln(1-x) - Li_2(1-x)`
/// keeps the series short.
pub fn dilog(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain("dilogarithm argument", x));
    }
    if x == 1.0 {
        return Ok(PI * PI / 6.0);
    }
    if x > 0.5 {
        return Ok(PI * PI / 6.0 - x.ln() * (1.0 - x).ln() - dilog_series(1.0 - x));
    }
    Ok(dilog_series(x))
}

fn dilog_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut power = x;
    let mut j = 1.0f64;
    loop {
        let term = power / (j * j);
        if term < 1e-17 {
            return sum;
        }
        sum += term;
        power *= x;
        j += 1.0;
    }
}

/// `pi^2/6 - Li_2(1/e)`: the exponential rate in the probability of the
/// most likely arrival order.
pub fn theorem5_growth_constant() -> f64 {
    PI * PI / 6.0 - dilog((-1.0f64).exp()).expect("1/e lies in [0, 1]")
}

/// `e n (ln n - ln ln n + gamma)`: main term of the expected time to collect
/// every edge when `p = 1/n`.
pub fn expected_collection_time_estimate(model: &AttackModel) -> Result<f64> {
    if model.n() < 3 {
        return Err(Error::domain("path length for ln ln n", model.n()));
    }
    let n = f64::from(model.n());
    Ok(E * n * (n.ln() - n.ln().ln() + EULER_GAMMA))
}

/// `e n H_n`, an upper bound on the expected stop time of the basic policy.
pub fn harmonic_bound(model: &AttackModel) -> f64 {
    let n = model.n();
    let harmonic: f64 = (1..=n).map(|k| 1.0 / f64::from(k)).sum();
    E * f64::from(n) * harmonic
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model(n: u32, p: f64) -> AttackModel {
        AttackModel::new(n, p).unwrap()
    }

    #[test]
    fn two_edge_values() {
        let m = model(2, 0.5);
        assert!((expected_location_exact(&m, 1).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((expected_location_exact(&m, 2).unwrap() - 5.0 / 3.0).abs() < 1e-15);
        assert!((expected_disruptions_exact(&m, 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let up = OrderingQuery::new(vec![1, 2]).unwrap();
        let down = OrderingQuery::new(vec![2, 1]).unwrap();
        assert!((ordering_probability(&m, &up).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((ordering_probability(&m, &down).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((descending_order_probability(&m) - 2.0 / 3.0).abs() < 1e-15);
        assert!((ascending_order_probability(&m) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_edges() {
        let m = model(5, 0.2);
        assert!(expected_location_exact(&m, 0).is_err());
        assert!(expected_location_exact(&m, 6).is_err());
        assert!(expected_disruptions_exact(&m, 6).is_err());
        assert!(ordering_probability(&m, &OrderingQuery::descending(4)).is_err());
    }

    #[test]
    fn ordering_query_validation() {
        assert!(OrderingQuery::new(vec![1, 1]).is_err());
        assert!(OrderingQuery::new(vec![0, 1]).is_err());
        assert!(OrderingQuery::new(vec![1, 3]).is_err());
        assert!(OrderingQuery::new(vec![3, 1, 2]).is_ok());
    }

    #[test]
    fn location_limits() {
        assert!((expected_location_limit(1.0) - 0.62).abs() < 5e-3);
        assert!((expected_location_limit(0.0) - 0.38).abs() < 5e-3);
        assert!((expected_location_limit(1.0) - ((E + 1.0) / 2.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn disruption_limit_shape() {
        assert!((expected_disruptions_limit(0.0) - 0.379_885_493_041_722_5).abs() < 1e-12);
        let grid: Vec<f64> = (0..=10_000).map(|k| k as f64 / 10_000.0).collect();
        let values: Vec<f64> = grid
            .iter()
            .map(|&b| expected_disruptions_limit(b))
            .collect();
        let argmax = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(grid[argmax], 0.5);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((values[0] - min).abs() < 1e-15 && (values[10_000] - min).abs() < 1e-15);
    }

    #[test]
    fn dilog_values() {
        assert_eq!(dilog(0.0).unwrap(), 0.0);
        assert!((dilog(1.0).unwrap() - PI * PI / 6.0).abs() < 1e-12);
        // mpmath polylog(2, x) to 30 digits.
        assert!((dilog((-1.0f64).exp()).unwrap() - 0.408_754_287_348_896_3).abs() < 1e-12);
        assert!((dilog(0.5).unwrap() - 0.582_240_526_465_012_5).abs() < 1e-12);
        assert!(dilog(-0.1).is_err());
        assert!(dilog(1.1).is_err());
        assert!(dilog(f64::NAN).is_err());
    }

    #[test]
    fn dilog_is_continuous_at_the_reflection_point() {
        let below = dilog(0.5 - 1e-12).unwrap();
        let above = dilog(0.5 + 1e-12).unwrap();
        assert!((below - above).abs() < 1e-11);
    }

    #[test]
    fn growth_constants() {
        let c = theorem5_growth_constant();
        assert!((c - 1.236_179_779_499_330_2).abs() < 1e-12);
        assert!((c - 1.236_180_6).abs() < 1e-6);
        assert!((c - 0.5 - 0.736_180_6).abs() < 1e-6);
        assert!(c > 0.0);
    }

    #[test]
    fn collection_time_constants() {
        let m = model(25, 0.04);
        let estimate = expected_collection_time_estimate(&m).unwrap();
        assert!((estimate - 178.527_189_880_284_25).abs() < 1e-9);
        assert_eq!(estimate.round(), 179.0);
        let bound = harmonic_bound(&m);
        assert!((bound - 259.321_244_318_676_2).abs() < 1e-9);
        assert!(estimate <= bound);
        assert!(expected_collection_time_estimate(&model(2, 0.5)).is_err());
    }

    #[test]
    fn extremes_ratio_up_to_thirty() {
        for n in 2..=30 {
            for p in [0.05, 1.0 / n as f64, 0.3] {
                let m = model(n, p);
                let ratio = ascending_order_probability(&m) / descending_order_probability(&m);
                let expected = m.q().powi((n * (n - 1) / 2) as i32);
                assert!((ratio / expected - 1.0).abs() < 1e-12, "n={n} p={p}");
                let desc = ordering_probability(&m, &OrderingQuery::descending(n)).unwrap();
                let asc = ordering_probability(&m, &OrderingQuery::ascending(n)).unwrap();
                assert!((desc / descending_order_probability(&m) - 1.0).abs() < 1e-12);
                assert!((asc / ascending_order_probability(&m) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn locations_approach_their_limit() {
        for n in [50u32, 200, 1000] {
            let m = AttackModel::with_reciprocal_probability(n).unwrap();
            let nf = f64::from(n);
            let worst = (1..=n)
                .map(|i| {
                    let exact = expected_location_exact(&m, i).unwrap() / nf;
                    (exact - expected_location_limit(f64::from(i) / nf)).abs() * nf
                })
                .fold(0.0, f64::max);
            assert!(worst <= 3.0, "n={n}: C = {worst}");
        }
    }

    #[test]
    fn table_rows_are_normalized() {
        let m = model(25, 0.04);
        for row in order_stat_table(&m) {
            assert!((row.normalized_location * 25.0 - row.expected_location).abs() < 1e-12);
            assert!((row.normalized_disruptions * 25.0 - row.expected_disruptions).abs() < 1e-12);
            assert!((1.0..=25.0).contains(&row.expected_location));
        }
    }

    proptest! {
        #[test]
        fn location_antisymmetry_and_disruption_symmetry(n in 2u32..120, p in 0.001f64..0.999) {
            let m = model(n, p);
            for i in 1..=n {
                let mirror = n + 1 - i;
                let loc = expected_location_exact(&m, i).unwrap() + expected_location_exact(&m, mirror).unwrap();
                prop_assert!((loc - f64::from(n + 1)).abs() < 1e-10);
                let d = expected_disruptions_exact(&m, i).unwrap() - expected_disruptions_exact(&m, mirror).unwrap();
                prop_assert!(d.abs() < 1e-10);
            }
        }

        #[test]
        fn limit_symmetries(beta in 0.0f64..=1.0) {
            prop_assert!((expected_location_limit(beta) + expected_location_limit(1.0 - beta) - 1.0).abs() < 1e-12);
            prop_assert!((expected_disruptions_limit(beta) - expected_disruptions_limit(1.0 - beta)).abs() < 1e-12);
        }
    }

    /// Composite Simpson on `-ln(1-t)/t`, whose value at 0 is 1.
    fn dilog_quadrature(x: f64) -> f64 {
        let f = |t: f64| if t == 0.0 { 1.0 } else { -(-t).ln_1p() / t };
        let steps = 20_000;
        let h = x / steps as f64;
        let mut acc = f(0.0) + f(x);
        for k in 1..steps {
            acc += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn dilog_matches_quadrature() {
        for k in 0..=19 {
            let x = k as f64 * 0.05;
            let diff = (dilog(x).unwrap() - dilog_quadrature(x)).abs();
            assert!(diff < 1e-9, "x={x}: {diff}");
        }
        for x in [0.97, 0.99] {
            assert!(
                (dilog(x).unwrap() - dilog_quadrature(x)).abs() < 1e-9,
                "x={x}"
            );
        }
    }
}
