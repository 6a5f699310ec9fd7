//! Sequential bisector-based network partitioning.
//!
//! Each segmentation pair splits its current area along the set of nodes
//! hop-equidistant from the pair's two nodes. Hop distances are always
//! recomputed on the parent area's induced subgraph, so later splits refine
//! earlier ones and never cross into already-separated areas.

use std::collections::VecDeque;

use crate::deployment::Network;
use crate::pathgraph::OccurrenceTable;
use crate::segmentation::SegPair;

/// Splits that would leave a side with fewer nodes than this are skipped;
/// such slivers cannot host a reference triple plus anchors.
pub const BOUNDARY_GUARD_MIN_SIDE: usize = 12;

/// What happened when one pair was processed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitOutcome {
    /// The parent area was split; side B received `child`.
    Split { child: usize },
    /// The pair's nodes were already in different areas.
    SkippedAlreadySeparated,
    /// One side of the tentative split was empty.
    AbortedEmptySide,
    /// A side would hold fewer than [`BOUNDARY_GUARD_MIN_SIDE`] nodes.
    SkippedBoundaryGuard { side_a: usize, side_b: usize },
}

/// Record of one processed pair.
#[derive(Debug, Clone)]
pub struct SplitRecord {
    pub pair: SegPair,
    pub parent: usize,
    /// Hop-equidistant nodes (the bisector set) at the time of the split.
    pub bisector: Vec<usize>,
    pub outcome: SplitOutcome,
}

/// Final sub-network labels and the split history.
#[derive(Debug, Clone)]
pub struct PartitionMap {
    /// Per-node area label, 1-based and contiguous.
    pub label: Vec<usize>,
    /// Number of sub-networks.
    pub z: usize,
    /// Number of splits performed.
    pub w: usize,
    pub history: Vec<SplitRecord>,
    /// Labels whose induced subgraph ended up disconnected.
    pub disconnected_labels: Vec<usize>,
}

impl PartitionMap {
    /// Node sets per label, sorted by label then id.
    pub fn subnets(&self) -> Vec<(usize, Vec<usize>)> {
        let mut out: Vec<(usize, Vec<usize>)> = Vec::new();
        for lbl in 1..=self.z {
            let members: Vec<usize> = self
                .label
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == lbl)
                .map(|(i, _)| i)
                .collect();
            if !members.is_empty() {
                out.push((lbl, members));
            }
        }
        out
    }

    /// Per-node CSV dump: `node_id,area_label`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("node_id,area_label\n");
        for (i, l) in self.label.iter().enumerate() {
            out.push_str(&format!("{i},{l}\n"));
        }
        out
    }
}

fn bfs_within(network: &Network, src: usize, in_area: &[bool]) -> Vec<u32> {
    let n = network.len();
    let mut dist = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    dist[src] = 0;
    queue.push_back(src);
    while let Some(u) = queue.pop_front() {
        for &v in network.neighbors(u) {
            if in_area[v] && dist[v] == u32::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Partition with pairs processed in descending combined TS (ties broken by
/// smallest id pair).
pub fn partition(
    network: &Network,
    pairs: &[SegPair],
    ts: &OccurrenceTable,
) -> PartitionMap {
    let mut ordered = pairs.to_vec();
    ordered.sort_by(|p, q| {
        let tp = ts.ts[p.a] + ts.ts[p.b];
        let tq = ts.ts[q.a] + ts.ts[q.b];
        tq.cmp(&tp).then((p.a, p.b).cmp(&(q.a, q.b)))
    });
    partition_in_order(network, &ordered)
}

/// Partition processing pairs exactly in the given order.
pub fn partition_in_order(network: &Network, pairs: &[SegPair]) -> PartitionMap {
    let n = network.len();
    let mut label = vec![1usize; n];
    let mut w = 0usize;
    let mut history = Vec::with_capacity(pairs.len());

    for &pair in pairs {
        let (a, b) = (pair.a, pair.b);
        if label[a] != label[b] {
            history.push(SplitRecord {
                pair,
                parent: label[a],
                bisector: Vec::new(),
                outcome: SplitOutcome::SkippedAlreadySeparated,
            });
            continue;
        }
        let parent = label[a];
        let in_area: Vec<bool> = label.iter().map(|&l| l == parent).collect();
        let da = bfs_within(network, a, &in_area);
        let db = bfs_within(network, b, &in_area);

        // 0 = side A (keeps the parent label), 1 = side B, 2 = bisector.
        let mut side = vec![0u8; n];
        let mut bisector = Vec::new();
        let mut size_a = 0usize;
        let mut size_b = 0usize;
        for i in 0..n {
            if !in_area[i] {
                continue;
            }
            let s = if i == a {
                0
            } else if i == b {
                1
            } else {
                match da[i].cmp(&db[i]) {
                    std::cmp::Ordering::Less => 0,
                    std::cmp::Ordering::Greater => 1,
                    std::cmp::Ordering::Equal => 2,
                }
            };
            side[i] = s;
            match s {
                0 => size_a += 1,
                1 => size_b += 1,
                _ => bisector.push(i),
            }
        }
        // Bisector nodes join the side where they have at least as many
        // one-hop neighbors, once the surrounding nodes are settled; ties
        // go to the pair's first node.
        for &u in &bisector {
            let (mut ca, mut cb) = (0usize, 0usize);
            for &v in network.neighbors(u) {
                if !in_area[v] || v == u {
                    continue;
                }
                match side[v] {
                    0 => ca += 1,
                    1 => cb += 1,
                    _ => {}
                }
            }
            if ca >= cb {
                side[u] = 0;
                size_a += 1;
            } else {
                side[u] = 1;
                size_b += 1;
            }
        }

        if size_a == 0 || size_b == 0 {
            history.push(SplitRecord {
                pair,
                parent,
                bisector,
                outcome: SplitOutcome::AbortedEmptySide,
            });
            continue;
        }
        if size_a < BOUNDARY_GUARD_MIN_SIDE || size_b < BOUNDARY_GUARD_MIN_SIDE {
            history.push(SplitRecord {
                pair,
                parent,
                bisector,
                outcome: SplitOutcome::SkippedBoundaryGuard { side_a: size_a, side_b: size_b },
            });
            continue;
        }

        w += 1;
        let child = w + 1;
        for i in 0..n {
            if in_area[i] && side[i] == 1 {
                label[i] = child;
            }
        }
        history.push(SplitRecord {
            pair,
            parent,
            bisector,
            outcome: SplitOutcome::Split { child },
        });
    }

    let z = w + 1;
    let mut disconnected_labels = Vec::new();
    for lbl in 1..=z {
        let in_area: Vec<bool> = label.iter().map(|&l| l == lbl).collect();
        if let Some(src) = (0..n).find(|&i| in_area[i]) {
            let dist = bfs_within(network, src, &in_area);
            if (0..n).any(|i| in_area[i] && dist[i] == u32::MAX) {
                disconnected_labels.push(lbl);
            }
        }
    }

    PartitionMap {
        label,
        z,
        w,
        history,
        disconnected_labels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deployment::{deploy, Network, RangingModel};
    use crate::geometry::{build_scenario, Point2D};
    use crate::pathgraph::{hop_matrix, occurrence_counts};

    fn net_from(points: &[(f64, f64)]) -> Network {
        let scenario = build_scenario("none").unwrap();
        let positions: Vec<(Point2D, bool)> = points
            .iter()
            .map(|&(x, y)| (Point2D::new(x, y), false))
            .collect();
        Network::from_positions(scenario, &positions, 15.0, RangingModel::Exact, 0).unwrap()
    }

    fn barbell() -> (Network, usize, usize) {
        // Two 13-node blobs joined through a 4-node relay chain; the pair
        // sits on the two middle relays.
        let mut pts = Vec::new();
        for &x in &[5.0, 13.0, 21.0] {
            for &y in &[40.0, 48.0, 56.0, 64.0] {
                pts.push((x, y));
            }
        }
        pts.push((13.0, 72.0)); // 13 left nodes: ids 0..=12
        for &x in &[79.0, 87.0, 95.0] {
            for &y in &[40.0, 48.0, 56.0, 64.0] {
                pts.push((x, y));
            }
        }
        pts.push((87.0, 72.0)); // 13 right nodes: ids 13..=25
        let a = pts.len();
        pts.push((34.0, 52.0)); // 26: pair node a
        let b = pts.len();
        pts.push((48.0, 52.0)); // 27: pair node b
        pts.push((62.0, 52.0)); // 28: relay toward the right blob
        pts.push((70.0, 52.0)); // 29: relay toward the right blob
        (net_from(&pts), a, b)
    }

    #[test]
    fn no_pairs_yields_single_area() {
        let (net, _, _) = barbell();
        let pm = partition_in_order(&net, &[]);
        assert_eq!(pm.z, 1);
        assert!(pm.label.iter().all(|&l| l == 1));
        assert_eq!(pm.w, 0);
    }

    #[test]
    fn single_pair_splits_both_blobs() {
        let (net, a, b) = barbell();
        let pm = partition_in_order(&net, &[SegPair { a, b }]);
        assert_eq!(pm.z, 2);
        assert_eq!(pm.w, 1);
        assert_eq!(pm.label[a], 1);
        assert_eq!(pm.label[b], 2);
        for i in 0..13 {
            assert_eq!(pm.label[i], 1, "left blob node {i}");
        }
        for i in 13..26 {
            assert_eq!(pm.label[i], 2, "right blob node {i}");
        }
        assert_eq!(pm.label[28], 2);
        assert_eq!(pm.label[29], 2);
        assert!(pm.disconnected_labels.is_empty());
        assert!(matches!(pm.history[0].outcome, SplitOutcome::Split { child: 2 }));
    }

    #[test]
    fn equidistant_tie_goes_to_first_side() {
        // A node one hop from both pair nodes with equally many neighbors
        // on each side lands with the pair's first node.
        let (mut pts_net, a, b) = barbell();
        let mut pts: Vec<(f64, f64)> = pts_net
            .nodes
            .iter()
            .map(|n| (n.position.x, n.position.y))
            .collect();
        pts.push((41.0, 58.0)); // hears exactly nodes a and b
        let tie = pts.len() - 1;
        pts_net = net_from(&pts);
        assert_eq!(pts_net.degree(tie), 2);
        let pm = partition_in_order(&pts_net, &[SegPair { a, b }]);
        assert!(pm.history[0].bisector.contains(&tie));
        assert_eq!(pm.label[tie], pm.label[a]);
    }

    #[test]
    fn small_side_is_guarded() {
        // 4 nodes on one side is below the guard; the split is skipped.
        let pts = [
            (0.0, 50.0),
            (10.0, 50.0),
            (20.0, 50.0),
            (30.0, 50.0),
            (40.0, 50.0),
            (50.0, 50.0),
            (60.0, 50.0),
            (70.0, 50.0),
            (80.0, 50.0),
            (90.0, 50.0),
            (100.0, 50.0),
            (95.0, 60.0),
            (85.0, 60.0),
            (75.0, 60.0),
        ];
        let net = net_from(&pts);
        let pm = partition_in_order(&net, &[SegPair { a: 1, b: 2 }]);
        assert_eq!(pm.z, 1);
        assert!(matches!(
            pm.history[0].outcome,
            SplitOutcome::SkippedBoundaryGuard { side_a: 2, .. }
        ));
    }

    #[test]
    fn already_separated_pair_is_skipped() {
        let (net, a, b) = barbell();
        // The second pair spans the two blobs once the first split lands.
        let pm = partition_in_order(&net, &[SegPair { a, b }, SegPair { a: 0, b: 13 }]);
        assert_eq!(pm.z, 2);
        assert!(matches!(
            pm.history[1].outcome,
            SplitOutcome::SkippedAlreadySeparated
        ));
    }

    #[test]
    fn pipeline_partition_on_c_shape_is_plausible() {
        let s = build_scenario("c-shape").unwrap();
        let net = deploy(&s, 300, 25, 15.0, 9).unwrap();
        let hops = hop_matrix(&net).unwrap();
        let ts = occurrence_counts(&hops);
        let clustering = crate::segmentation::kmeans_two(&ts).unwrap();
        let seg = crate::segmentation::select_segmentation_nodes(&clustering);
        let pairs = crate::segmentation::form_pairs(&seg, &net);
        let pm = partition(&net, &pairs, &ts);
        assert!(pm.z >= 1);
        assert_eq!(
            pm.label.iter().filter(|&&l| l == 0).count(),
            0,
            "labels are 1-based"
        );
    }
}
