//! Evaluation metrics: obstructed-pair counts, completion degree, and
//! location error against ground truth.

use serde::{Deserialize, Serialize};

use crate::deployment::Network;
use crate::geometry::{segment_blocked, Point2D};
use crate::localization::LocalizationResult;
use crate::partitioning::PartitionMap;

/// Positional error above which a node counts as inaccurate, in meters.
pub const EPS_POS: f64 = 1e-6;

/// Per-trial measurements emitted by the harness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub trial: usize,
    pub seed: u64,
    pub n_nodes: usize,
    pub n_pairs: usize,
    pub z: usize,
    pub spo_before: usize,
    pub spo_after: usize,
    pub acd_term: f64,
    pub mle_m: f64,
    pub inaccurate: usize,
    pub flags: Vec<String>,
    pub runtime_ms: u64,
}

/// Count unordered node pairs within radio range whose straight segment is
/// blocked by an obstacle. With a partition, only pairs sharing an area
/// label are counted (the post-partition residue); without, all such
/// pairs (the pre-partition exposure).
pub fn spo_count(network: &Network, labels: Option<&PartitionMap>) -> usize {
    let n = network.len();
    let mut count = 0;
    for i in 0..n {
        for j in i + 1..n {
            if let Some(pm) = labels {
                if pm.label[i] != pm.label[j] {
                    continue;
                }
            }
            let pi = &network.nodes[i].position;
            let pj = &network.nodes[j].position;
            if pi.dist(pj) <= network.l
                && segment_blocked(&network.scenario, pi, pj).expect("nodes in free space")
            {
                count += 1;
            }
        }
    }
    count
}

/// Unordered node pairs within radio range, blocked or not. Denominator
/// for obstacle-traversal ratios.
pub fn one_hop_pair_count(network: &Network) -> usize {
    let n = network.len();
    let mut count = 0;
    for i in 0..n {
        for j in i + 1..n {
            if network.nodes[i].position.dist(&network.nodes[j].position) <= network.l {
                count += 1;
            }
        }
    }
    count
}

/// Completion term of a single trial. A trial with nothing to fix counts
/// as fully completed.
pub fn acd_term(spo_before: usize, spo_after: usize) -> f64 {
    if spo_before == 0 {
        1.0
    } else {
        1.0 - spo_after as f64 / spo_before as f64
    }
}

/// Average completion degree over a batch of trials.
pub fn acd(trials: &[TrialMetrics]) -> f64 {
    assert!(!trials.is_empty());
    trials
        .iter()
        .map(|t| acd_term(t.spo_before, t.spo_after))
        .sum::<f64>()
        / trials.len() as f64
}

/// Mean location error over all unknown nodes, and the count of
/// inaccurately placed ones.
///
/// Unlocalized nodes contribute the distance from their true position to
/// the area centroid and always count as inaccurate, so degraded runs
/// cannot improve the score by dropping nodes.
pub fn mle(result: &LocalizationResult, network: &Network) -> (f64, usize) {
    let centroid = Point2D::new(network.scenario.width / 2.0, network.scenario.height / 2.0);
    let mut sum = 0.0;
    let mut m = 0usize;
    let mut inaccurate = 0usize;
    for node in &network.nodes {
        if node.is_anchor {
            continue;
        }
        m += 1;
        let err = match result.global_estimate[node.id] {
            Some(est) => est.dist(&node.position),
            None => node.position.dist(&centroid),
        };
        sum += err;
        if err > EPS_POS || result.global_estimate[node.id].is_none() {
            inaccurate += 1;
        }
    }
    if m == 0 {
        return (0.0, 0);
    }
    (sum / m as f64, inaccurate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deployment::{deploy, Network, RangingModel};
    use crate::geometry::{build_scenario, Point2D};
    use crate::localization::{CaseTag, LocalizationResult};
    use crate::partitioning::partition_in_order;

    #[test]
    fn obstacle_free_scenario_has_zero_spo() {
        let s = build_scenario("none").unwrap();
        let net = deploy(&s, 110, 8, 15.0, 3).unwrap();
        assert_eq!(spo_count(&net, None), 0);
    }

    fn straddling_network() -> Network {
        // Two nodes hugging a corner of the rectangular obstacle: within
        // range, blocked segment.
        let s = build_scenario("rectangular").unwrap();
        let positions = [
            (Point2D::new(29.0, 39.0), false),
            (Point2D::new(33.0, 37.0), false),
            (Point2D::new(26.0, 30.0), false),
            (Point2D::new(20.0, 30.0), false),
        ];
        Network::from_positions(s, &positions, 15.0, RangingModel::Exact, 0).unwrap()
    }

    #[test]
    fn blocked_pair_is_counted_and_severed_pairs_drop_out() {
        let net = straddling_network();
        let before = spo_count(&net, None);
        assert_eq!(before, 1);
        // Hand-made partition separating nodes 0 and 1.
        let mut pm = partition_in_order(&net, &[]);
        pm.label = vec![1, 2, 2, 2];
        pm.z = 2;
        assert_eq!(spo_count(&net, Some(&pm)), 0);
        assert_eq!(acd_term(before, 0), 1.0);
    }

    #[test]
    fn same_label_subset_inclusion() {
        let net = straddling_network();
        let pm = partition_in_order(&net, &[]);
        assert!(spo_count(&net, Some(&pm)) <= spo_count(&net, None));
    }

    #[test]
    fn acd_from_counts() {
        let mk = |before, after| TrialMetrics {
            trial: 0,
            seed: 0,
            n_nodes: 0,
            n_pairs: 0,
            z: 1,
            spo_before: before,
            spo_after: after,
            acd_term: acd_term(before, after),
            mle_m: 0.0,
            inaccurate: 0,
            flags: vec![],
            runtime_ms: 0,
        };
        assert_eq!(acd(&[mk(10, 1)]), 0.9);
        assert_eq!(acd(&[mk(0, 0)]), 1.0);
        let same = [mk(8, 2), mk(8, 2), mk(8, 2)];
        assert_eq!(acd(&same), acd_term(8, 2));
    }

    #[test]
    fn exact_estimates_give_zero_mle() {
        let net = straddling_network();
        let result = LocalizationResult {
            subnets: vec![],
            global_estimate: net.nodes.iter().map(|n| Some(n.position)).collect(),
            case_tags: vec![CaseTag::Case1; net.len()],
        };
        assert_eq!(mle(&result, &net), (0.0, 0));
    }

    #[test]
    fn unlocalized_nodes_pay_centroid_distance() {
        let net = straddling_network();
        let mut estimates: Vec<Option<Point2D>> =
            net.nodes.iter().map(|n| Some(n.position)).collect();
        estimates[3] = None;
        let result = LocalizationResult {
            subnets: vec![],
            global_estimate: estimates,
            case_tags: vec![CaseTag::Case1; net.len()],
        };
        let (err, inaccurate) = mle(&result, &net);
        let want = net.nodes[3].position.dist(&Point2D::new(50.0, 50.0)) / 4.0;
        assert!((err - want).abs() < 1e-12);
        assert_eq!(inaccurate, 1);
    }
}
