//! Two-center clustering of occurrence counts, segmentation-node selection,
//! and pair formation with redundancy elimination.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::deployment::Network;
use crate::error::{Error, Result};
use crate::pathgraph::OccurrenceTable;

/// Result of the two-center clustering over TS values.
#[derive(Debug, Clone)]
pub struct Clustering {
    pub mu1: f64,
    pub mu2: f64,
    /// Per-node cluster label, 1 or 2.
    pub assignment: Vec<u8>,
    /// Label of the cluster with the larger center (ties go to 1).
    pub high: u8,
}

/// Center initialization for [`kmeans_two_with_init`].
#[derive(Debug, Clone, Copy)]
pub enum KmeansInit {
    /// Deterministic: centers start at min(TS) and max(TS).
    MinMax,
    /// Centers start at the TS values of two random distinct nodes.
    SeededRandom(u64),
}

/// A segmentation-node pair anchoring one bisector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegPair {
    pub a: usize,
    pub b: usize,
}

/// Lloyd iteration with deterministic min/max initialization.
pub fn kmeans_two(ts: &OccurrenceTable) -> Result<Clustering> {
    kmeans_two_with_init(ts, KmeansInit::MinMax)
}

/// Two-center 1-D Lloyd iteration to a fixed point. Assignment ties
/// (equal distance to both centers) go to cluster 1.
pub fn kmeans_two_with_init(ts: &OccurrenceTable, init: KmeansInit) -> Result<Clustering> {
    let values: Vec<f64> = ts.ts.iter().map(|&t| t as f64).collect();
    let n = values.len();
    if n < 2 {
        return Err(Error::DegenerateOccurrences);
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Err(Error::DegenerateOccurrences);
    }
    let (mut mu1, mut mu2) = match init {
        KmeansInit::MinMax => (lo, hi),
        KmeansInit::SeededRandom(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut distinct: Vec<f64> = values.clone();
            distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
            distinct.dedup();
            distinct.shuffle(&mut rng);
            (distinct[0], distinct[1])
        }
    };
    let mut assignment = vec![0u8; n];
    // 1-D Lloyd reaches a fixed point in at most n reassignments.
    for _ in 0..=n {
        let mut changed = false;
        for (i, &v) in values.iter().enumerate() {
            let label = if (v - mu1).abs() <= (v - mu2).abs() { 1 } else { 2 };
            if assignment[i] != label {
                assignment[i] = label;
                changed = true;
            }
        }
        let (mut s1, mut c1, mut s2, mut c2) = (0.0, 0usize, 0.0, 0usize);
        for (i, &v) in values.iter().enumerate() {
            if assignment[i] == 1 {
                s1 += v;
                c1 += 1;
            } else {
                s2 += v;
                c2 += 1;
            }
        }
        if c1 > 0 {
            mu1 = s1 / c1 as f64;
        }
        if c2 > 0 {
            mu2 = s2 / c2 as f64;
        }
        if !changed {
            break;
        }
    }
    let high = if mu1 >= mu2 { 1 } else { 2 };
    Ok(Clustering {
        mu1,
        mu2,
        assignment,
        high,
    })
}

/// Members of the cluster with the higher center.
pub fn select_segmentation_nodes(clustering: &Clustering) -> Vec<usize> {
    clustering
        .assignment
        .iter()
        .enumerate()
        .filter(|(_, &a)| a == clustering.high)
        .map(|(i, _)| i)
        .collect()
}

/// All one-hop pairs within the segmentation-node set, before redundancy
/// elimination.
pub fn candidate_pairs(seg: &[usize], network: &Network) -> Vec<SegPair> {
    let mut sorted = seg.to_vec();
    sorted.sort_unstable();
    let mut out = Vec::new();
    for (idx, &a) in sorted.iter().enumerate() {
        for &b in &sorted[idx + 1..] {
            if network.has_edge(a, b) {
                out.push(SegPair { a, b });
            }
        }
    }
    out
}

/// Pair the segmentation nodes and drop redundant pairs.
///
/// A candidate pair is flagged when each of its nodes also belongs to some
/// other candidate pair (those other pairs are necessarily distinct).
/// Flags are evaluated against the full candidate set, then all flagged
/// pairs are removed at once, so the outcome is order-independent. Pairs
/// sharing exactly one node with others survive.
pub fn form_pairs(seg: &[usize], network: &Network) -> Vec<SegPair> {
    let candidates = candidate_pairs(seg, network);
    let mut occurrences = std::collections::HashMap::<usize, usize>::new();
    for p in &candidates {
        *occurrences.entry(p.a).or_insert(0) += 1;
        *occurrences.entry(p.b).or_insert(0) += 1;
    }
    candidates
        .into_iter()
        .filter(|p| occurrences[&p.a] < 2 || occurrences[&p.b] < 2)
        .collect()
}
