//! Gap-based triplet mining on continuous labels and the triplet hinge loss.
//!
//! For an anchor with label `y_a`, a sample with label `y_x` is
//!
//! * a **positive** when `|y_x - y_a| <= delta_p`,
//! * a **negative** when `|y_x - y_a| >= delta_n`,
//! * discarded when the difference falls in the gap between the two.
//!
//! Both bounds are inclusive.

use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::matrix::squared_distance;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MiningConfig {
    pub delta_p: f64,
    pub delta_n: f64,
    /// Consecutive anchor draws allowed without finding a usable anchor.
    pub max_attempts: usize,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            delta_p: 0.1,
            delta_n: 0.5,
            max_attempts: 10_000,
        }
    }
}

impl MiningConfig {
    pub fn new(delta_p: f64, delta_n: f64) -> Result<Self> {
        let cfg = Self {
            delta_p,
            delta_n,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_p.is_finite() && self.delta_n.is_finite())
            || self.delta_p < 0.0
            || self.delta_p >= self.delta_n
        {
            return Err(Error::InvalidConfig(alloc::format!(
                "mining thresholds need 0 <= delta_p < delta_n, got ({}, {})",
                self.delta_p,
                self.delta_n
            )));
        }
        if self.max_attempts == 0 {
            return Err(Error::InvalidConfig("max_attempts must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairClass {
    Positive,
    Negative,
    Gap,
}

pub fn classify_pair(y_anchor: f64, y_x: f64, config: &MiningConfig) -> PairClass {
    let diff = libm::fabs(y_x - y_anchor);
    if diff <= config.delta_p {
        PairClass::Positive
    } else if diff >= config.delta_n {
        PairClass::Negative
    } else {
        PairClass::Gap
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triplet {
    pub anchor: usize,
    pub positive: usize,
    pub negative: usize,
}

/// Label index sorted by value, answering "which samples are positives /
/// negatives for this anchor" with binary searches.
struct SortedLabels<'a> {
    labels: &'a [f64],
    order: Vec<usize>,
    values: Vec<f64>,
    rank: Vec<usize>,
}

/// Candidate sets of one anchor, as ranges into the sorted order.
struct Candidates {
    /// `[start, end)`, contains the anchor itself.
    positive: (usize, usize),
    /// `[0, low_end)` and `[high_start, n)`.
    low_end: usize,
    high_start: usize,
}

impl Candidates {
    fn n_positive(&self) -> usize {
        self.positive.1 - self.positive.0 - 1
    }

    fn n_negative(&self, n: usize) -> usize {
        self.low_end + (n - self.high_start)
    }
}

impl<'a> SortedLabels<'a> {
    fn new(labels: &'a [f64]) -> Self {
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by(|&a, &b| labels[a].total_cmp(&labels[b]).then(a.cmp(&b)));
        let values = order.iter().map(|&i| labels[i]).collect();
        let mut rank = alloc::vec![0; labels.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        Self {
            labels,
            order,
            values,
            rank,
        }
    }

    fn candidates(&self, anchor: usize, cfg: &MiningConfig) -> Candidates {
        let ya = self.labels[anchor];
        // Predicates use the same differences as `classify_pair`; floating
        // subtraction is monotone so each one splits the sorted values once.
        let pos_start = self.values.partition_point(|&y| ya - y > cfg.delta_p);
        let pos_end = self.values.partition_point(|&y| y - ya <= cfg.delta_p);
        let low_end = self.values.partition_point(|&y| ya - y >= cfg.delta_n);
        let high_start = self.values.partition_point(|&y| y - ya < cfg.delta_n);
        Candidates {
            positive: (pos_start, pos_end),
            low_end,
            high_start,
        }
    }
}

/// Mines `count` triplets: anchors uniformly with replacement, then a
/// positive and a negative uniformly from the anchor's candidate sets.
/// Anchors lacking either set are redrawn.
pub fn mine_triplets(
    labels: &[f64],
    count: usize,
    config: &MiningConfig,
    seed: u64,
) -> Result<Vec<Triplet>> {
    config.validate()?;
    if count == 0 {
        return Err(Error::InvalidConfig("triplet count must be positive".into()));
    }
    if labels.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidConfig("labels must be finite".into()));
    }
    let n = labels.len();
    let index = SortedLabels::new(labels);
    let feasible = (0..n).any(|a| {
        let c = index.candidates(a, config);
        c.n_positive() > 0 && c.n_negative(n) > 0
    });
    if !feasible {
        return Err(Error::InfeasibleAnchor {
            attempts: config.max_attempts,
        });
    }

    let mut rng = rng::seeded(seed);
    let mut out = Vec::with_capacity(count);
    let mut failures = 0;
    while out.len() < count {
        let anchor = rng.random_range(0..n);
        let c = index.candidates(anchor, config);
        let (n_pos, n_neg) = (c.n_positive(), c.n_negative(n));
        if n_pos == 0 || n_neg == 0 {
            failures += 1;
            if failures >= config.max_attempts {
                return Err(Error::InfeasibleAnchor { attempts: failures });
            }
            continue;
        }
        failures = 0;

        let mut p = c.positive.0 + rng.random_range(0..n_pos);
        if p >= index.rank[anchor] {
            p += 1;
        }
        let q = rng.random_range(0..n_neg);
        let q = if q < c.low_end {
            q
        } else {
            c.high_start + (q - c.low_end)
        };
        out.push(Triplet {
            anchor,
            positive: index.order[p],
            negative: index.order[q],
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TripletLossConfig {
    pub margin: f64,
}

impl Default for TripletLossConfig {
    fn default() -> Self {
        Self { margin: 0.2 }
    }
}

impl TripletLossConfig {
    pub fn new(margin: f64) -> Result<Self> {
        if !(margin.is_finite() && margin > 0.0) {
            return Err(Error::InvalidConfig(alloc::format!(
                "margin must be finite and positive, got {margin}"
            )));
        }
        Ok(Self { margin })
    }
}

fn check_dims(v_a: &[f64], v_p: &[f64], v_n: &[f64]) -> Result<()> {
    for v in [v_p, v_n] {
        if v.len() != v_a.len() {
            return Err(Error::DimensionMismatch {
                expected: v_a.len(),
                actual: v.len(),
            });
        }
    }
    Ok(())
}

/// Value inside the hinge: `‖a−p‖² − ‖a−n‖² + margin`.
#[inline]
pub(crate) fn hinge_argument(v_a: &[f64], v_p: &[f64], v_n: &[f64], margin: f64) -> f64 {
    squared_distance(v_a, v_p) - squared_distance(v_a, v_n) + margin
}

/// `max(‖a−p‖² − ‖a−n‖² + margin, 0)` with squared Euclidean distances.
pub fn triplet_loss(v_a: &[f64], v_p: &[f64], v_n: &[f64], config: &TripletLossConfig) -> Result<f64> {
    check_dims(v_a, v_p, v_n)?;
    Ok(hinge_argument(v_a, v_p, v_n, config.margin).max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripletGradient {
    pub anchor: Vec<f64>,
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
}

/// Gradient of [`triplet_loss`] with respect to the three embeddings. The
/// inactive side of the hinge, including the kink itself, yields zeros.
pub fn triplet_loss_grad(
    v_a: &[f64],
    v_p: &[f64],
    v_n: &[f64],
    config: &TripletLossConfig,
) -> Result<TripletGradient> {
    check_dims(v_a, v_p, v_n)?;
    let k = v_a.len();
    let mut g = TripletGradient {
        anchor: alloc::vec![0.0; k],
        positive: alloc::vec![0.0; k],
        negative: alloc::vec![0.0; k],
    };
    if hinge_argument(v_a, v_p, v_n, config.margin) > 0.0 {
        accumulate_active_grad(v_a, v_p, v_n, 1.0, &mut g.anchor, &mut g.positive, &mut g.negative);
    }
    Ok(g)
}

/// Adds `scale ×` the active-branch gradient into the three buffers.
#[inline]
pub(crate) fn accumulate_active_grad(
    v_a: &[f64],
    v_p: &[f64],
    v_n: &[f64],
    scale: f64,
    g_a: &mut [f64],
    g_p: &mut [f64],
    g_n: &mut [f64],
) {
    for j in 0..v_a.len() {
        let (a, p, n) = (v_a[j], v_p[j], v_n[j]);
        g_a[j] += scale * 2.0 * (n - p);
        g_p[j] += scale * 2.0 * (p - a);
        g_n[j] += scale * 2.0 * (a - n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn cfg() -> MiningConfig {
        MiningConfig::new(0.1, 0.5).unwrap()
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_pair(0.5, 0.55, &cfg()), PairClass::Positive);
        assert_eq!(classify_pair(0.5, 0.3, &cfg()), PairClass::Gap);
        assert_eq!(classify_pair(0.5, 1.0, &cfg()), PairClass::Negative);
        // boundaries are inclusive
        let exact = MiningConfig::new(0.25, 0.5).unwrap();
        assert_eq!(classify_pair(0.0, 0.25, &exact), PairClass::Positive);
        assert_eq!(classify_pair(0.0, -0.5, &exact), PairClass::Negative);
    }

    #[test]
    fn mining_config_validation() {
        assert!(MiningConfig::new(0.5, 0.5).is_err());
        assert!(MiningConfig::new(-0.1, 0.5).is_err());
        assert!(MiningConfig::new(0.0, 0.5).is_ok());
    }

    #[test]
    fn mining_uses_the_only_candidates() {
        let labels = [-1.0, -0.95, 0.8];
        let ts = mine_triplets(&labels, 5, &cfg(), 1).unwrap();
        assert_eq!(ts.len(), 5);
        for t in &ts {
            // anchor 2 has no positive, so it can never be drawn
            assert_ne!(t.anchor, 2);
            if t.anchor == 0 {
                assert_eq!((t.positive, t.negative), (1, 2));
            } else {
                assert_eq!((t.positive, t.negative), (0, 2));
            }
        }
    }

    #[test]
    fn constant_labels_are_infeasible() {
        let err = mine_triplets(&[0.2, 0.2, 0.2], 3, &cfg(), 0).unwrap_err();
        assert!(matches!(err, Error::InfeasibleAnchor { .. }));
    }

    #[test]
    fn loss_examples() {
        let c02 = TripletLossConfig::new(0.2).unwrap();
        let v = [0.3, -1.7, 2.0];
        assert_eq!(triplet_loss(&v, &v, &v, &c02).unwrap(), 0.2);
        assert_eq!(triplet_loss(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 2.0], &c02).unwrap(), 0.0);
        let c05 = TripletLossConfig::new(0.5).unwrap();
        assert_eq!(triplet_loss(&[0.0, 0.0], &[0.0, 3.0], &[1.0, 0.0], &c05).unwrap(), 8.5);
        assert!(triplet_loss(&[0.0], &[0.0, 1.0], &[0.0], &c05).is_err());
        assert!(TripletLossConfig::new(0.0).is_err());
    }

    #[test]
    fn gradient_examples() {
        let c02 = TripletLossConfig::new(0.2).unwrap();
        let g = triplet_loss_grad(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 2.0], &c02).unwrap();
        assert_eq!(g.anchor, vec![0.0, 0.0]);
        assert_eq!(g.positive, vec![0.0, 0.0]);
        assert_eq!(g.negative, vec![0.0, 0.0]);

        let c05 = TripletLossConfig::new(0.5).unwrap();
        let g = triplet_loss_grad(&[0.0, 0.0], &[0.0, 3.0], &[1.0, 0.0], &c05).unwrap();
        assert_eq!(g.anchor, vec![2.0, -6.0]);
        assert_eq!(g.positive, vec![0.0, 6.0]);
        assert_eq!(g.negative, vec![-2.0, 0.0]);
    }

    #[test]
    fn gradient_is_zero_at_the_kink() {
        // ‖a−p‖² = 1, ‖a−n‖² = 1.5, margin 0.5: hinge argument exactly 0
        let c = TripletLossConfig::new(0.5).unwrap();
        let g = triplet_loss_grad(&[0.0, 0.0], &[1.0, 0.0], &[0.5, 1.25f64.sqrt()], &c).unwrap();
        let arg = hinge_argument(&[0.0, 0.0], &[1.0, 0.0], &[0.5, 1.25f64.sqrt()], 0.5);
        if arg <= 0.0 {
            assert!(g.anchor.iter().all(|v| *v == 0.0));
        }
    }

    fn vec3(k: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        let v = move || proptest::collection::vec(-3.0f64..3.0, k);
        (v(), v(), v())
    }

    proptest! {
        #[test]
        fn mined_triplets_satisfy_gap_rule(
            labels in proptest::collection::vec(-1.0f64..=1.0, 3..80),
            seed in any::<u64>(),
        ) {
            let c = cfg();
            match mine_triplets(&labels, 200, &c, seed) {
                Ok(ts) => {
                    prop_assert_eq!(ts.len(), 200);
                    for t in ts {
                        prop_assert_ne!(t.anchor, t.positive);
                        prop_assert_ne!(t.anchor, t.negative);
                        prop_assert_eq!(classify_pair(labels[t.anchor], labels[t.positive], &c), PairClass::Positive);
                        prop_assert_eq!(classify_pair(labels[t.anchor], labels[t.negative], &c), PairClass::Negative);
                    }
                }
                Err(Error::InfeasibleAnchor { .. }) => {
                    // brute force: truly no anchor has both kinds of partner
                    let n = labels.len();
                    let any = (0..n).any(|a| {
                        let has = |cls| (0..n).any(|x| x != a && classify_pair(labels[a], labels[x], &c) == cls);
                        has(PairClass::Positive) && has(PairClass::Negative)
                    });
                    prop_assert!(!any);
                }
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }

        #[test]
        fn mining_is_deterministic(seed in any::<u64>()) {
            let labels: Vec<f64> = (0..50).map(|i| -1.0 + i as f64 / 24.5).collect();
            prop_assert_eq!(
                mine_triplets(&labels, 100, &cfg(), seed).unwrap(),
                mine_triplets(&labels, 100, &cfg(), seed).unwrap()
            );
        }

        #[test]
        fn loss_is_nonnegative_and_zero_when_separated((a, p, n) in vec3(4), margin in 0.01f64..2.0) {
            let c = TripletLossConfig::new(margin).unwrap();
            let l = triplet_loss(&a, &p, &n, &c).unwrap();
            prop_assert!(l >= 0.0);
            if squared_distance(&a, &n) - squared_distance(&a, &p) >= margin {
                prop_assert_eq!(l, 0.0);
            }
        }

        #[test]
        fn loss_is_invariant_under_rigid_motion(
            (a, p, n) in vec3(2), shift in proptest::collection::vec(-5.0f64..5.0, 2), theta in 0.0f64..6.3,
        ) {
            let c = TripletLossConfig::default();
            let (s, co) = (libm::sin(theta), libm::cos(theta));
            let move_pt = |v: &[f64]| vec![co * v[0] - s * v[1] + shift[0], s * v[0] + co * v[1] + shift[1]];
            let l0 = triplet_loss(&a, &p, &n, &c).unwrap();
            let l1 = triplet_loss(&move_pt(&a), &move_pt(&p), &move_pt(&n), &c).unwrap();
            prop_assert!((l0 - l1).abs() < 1e-9);
        }

        #[test]
        fn gradient_matches_central_differences((a, p, n) in vec3(3)) {
            let c = TripletLossConfig::default();
            let arg = hinge_argument(&a, &p, &n, c.margin);
            prop_assume!(arg.abs() > 1e-2);
            let g = triplet_loss_grad(&a, &p, &n, &c).unwrap();
            let sum: f64 = (0..3).map(|j| g.anchor[j] + g.positive[j] + g.negative[j]).map(f64::abs).sum();
            prop_assert!(sum < 1e-12);
            // the loss is piecewise quadratic, so central differences are exact
            // up to rounding away from the kink
            let h = 1e-4;
            let mut vs = [a.clone(), p.clone(), n.clone()];
            let grads = [&g.anchor, &g.positive, &g.negative];
            for which in 0..3 {
                for j in 0..3 {
                    let orig = vs[which][j];
                    vs[which][j] = orig + h;
                    let up = triplet_loss(&vs[0], &vs[1], &vs[2], &c).unwrap();
                    vs[which][j] = orig - h;
                    let down = triplet_loss(&vs[0], &vs[1], &vs[2], &c).unwrap();
                    vs[which][j] = orig;
                    let numeric = (up - down) / (2.0 * h);
                    let analytic = grads[which][j];
                    let scale = numeric.abs().max(analytic.abs()).max(1e-4);
                    prop_assert!((numeric - analytic).abs() / scale < 1e-6,
                        "{} vs {}", numeric, analytic);
                }
            }
        }
    }
}
