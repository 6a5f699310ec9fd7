//! All-pairs hop distances and shortest-path occurrence counts.

use std::collections::VecDeque;

use crate::deployment::Network;
use crate::error::{Error, Result};

/// Marker for an unreachable pair.
pub const HOP_INF: u16 = u16::MAX;

/// Symmetric table of minimum hop counts between all node pairs.
#[derive(Debug, Clone)]
pub struct HopMatrix {
    n: usize,
    d: Vec<u16>,
}

impl HopMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u16 {
        self.d[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[u16] {
        &self.d[i * self.n..(i + 1) * self.n]
    }
}

/// Per-node count of node pairs whose shortest paths contain the node.
#[derive(Debug, Clone)]
pub struct OccurrenceTable {
    pub ts: Vec<u32>,
}

/// Breadth-first hop distances from `src` over an adjacency-list graph.
pub fn bfs_hops(neighbors: &[Vec<usize>], src: usize) -> Vec<u16> {
    let n = neighbors.len();
    let mut dist = vec![HOP_INF; n];
    let mut queue = VecDeque::new();
    dist[src] = 0;
    queue.push_back(src);
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        for &v in &neighbors[u] {
            if dist[v] == HOP_INF {
                dist[v] = du + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// All-pairs hop matrix from explicit adjacency lists.
pub fn hop_matrix_from_neighbors(neighbors: &[Vec<usize>]) -> Result<HopMatrix> {
    let n = neighbors.len();
    let mut d = vec![HOP_INF; n * n];
    for src in 0..n {
        let row = bfs_hops(neighbors, src);
        if row.iter().any(|&h| h == HOP_INF) {
            return Err(Error::Disconnected);
        }
        d[src * n..(src + 1) * n].copy_from_slice(&row);
    }
    Ok(HopMatrix { n, d })
}

/// All-pairs minimum hop counts of a network (BFS from every source).
pub fn hop_matrix(network: &Network) -> Result<HopMatrix> {
    let lists: Vec<Vec<usize>> = (0..network.len())
        .map(|i| network.neighbors(i).to_vec())
        .collect();
    hop_matrix_from_neighbors(&lists)
}

/// Count, for every node `i`, the unordered pairs `(j, k)` with `j < k`
/// such that `i` lies on at least one minimum-hop path between them
/// (endpoints included): `dist(j,i) + dist(i,k) == dist(j,k)`.
///
/// This distance-sum membership test realizes membership in the union of
/// all tied shortest paths without enumerating them.
pub fn occurrence_counts(hops: &HopMatrix) -> OccurrenceTable {
    let n = hops.len();
    let mut ts = vec![0u32; n];
    for i in 0..n {
        let row_i = hops.row(i);
        let mut count = 0u32;
        for j in 0..n {
            let dji = row_i[j];
            let row_j = hops.row(j);
            for k in j + 1..n {
                if dji + row_i[k] == row_j[k] {
                    count += 1;
                }
            }
        }
        ts[i] = count;
    }
    OccurrenceTable { ts }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn neighbors_from_edges(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let mut lists = vec![Vec::new(); n];
        for &(a, b) in edges {
            lists[a].push(b);
            lists[b].push(a);
        }
        lists
    }

    #[test]
    fn path_graph_hops_and_ts() {
        let g = neighbors_from_edges(3, &[(0, 1), (1, 2)]);
        let h = hop_matrix_from_neighbors(&g).unwrap();
        assert_eq!(h.get(0, 2), 2);
        assert_eq!(h.get(2, 0), 2);
        assert_eq!(h.get(1, 1), 0);
        let ts = occurrence_counts(&h).ts;
        assert_eq!(ts, vec![2, 3, 2]);
    }

    #[test]
    fn triangle_is_all_one_hop() {
        let g = neighbors_from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        let h = hop_matrix_from_neighbors(&g).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(h.get(i, j), u16::from(i != j));
            }
        }
    }

    #[test]
    fn complete_k4_counts_endpoints_only() {
        let g = neighbors_from_edges(
            4,
            &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
        );
        let h = hop_matrix_from_neighbors(&g).unwrap();
        let ts = occurrence_counts(&h).ts;
        assert_eq!(ts, vec![3, 3, 3, 3]);
    }

    #[test]
    fn disconnected_graph_errors() {
        let g = neighbors_from_edges(4, &[(0, 1), (2, 3)]);
        assert!(matches!(
            hop_matrix_from_neighbors(&g),
            Err(Error::Disconnected)
        ));
    }

    fn random_connected_graph(seed: u64, n: usize) -> Vec<Vec<usize>> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        loop {
            let p = rng.gen_range(0.12..0.5);
            let mut edges = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if rng.gen_bool(p) {
                        edges.push((a, b));
                    }
                }
            }
            let lists = neighbors_from_edges(n, &edges);
            if hop_matrix_from_neighbors(&lists).is_ok() {
                return lists;
            }
        }
    }

    #[test]
    fn bfs_matches_floyd_warshall() {
        for seed in 0..200u64 {
            let n = 5 + (seed as usize % 26);
            let g = random_connected_graph(seed, n);
            let h = hop_matrix_from_neighbors(&g).unwrap();
            // Independent all-pairs recomputation.
            let mut fw = vec![vec![u32::MAX / 4; n]; n];
            for (i, row) in fw.iter_mut().enumerate() {
                row[i] = 0;
            }
            for (a, list) in g.iter().enumerate() {
                for &b in list {
                    fw[a][b] = 1;
                }
            }
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let alt = fw[i][k] + fw[k][j];
                        if alt < fw[i][j] {
                            fw[i][j] = alt;
                        }
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(u32::from(h.get(i, j)), fw[i][j]);
                }
            }
        }
    }

    #[test]
    fn ts_lower_bound_and_permutation_equivariance() {
        for seed in 300..320u64 {
            let n = 8 + (seed as usize % 8);
            let g = random_connected_graph(seed, n);
            let h = hop_matrix_from_neighbors(&g).unwrap();
            let ts = occurrence_counts(&h).ts;
            for &t in &ts {
                assert!(t >= (n as u32) - 1);
            }
            // Relabel nodes by rotation and compare.
            let perm: Vec<usize> = (0..n).map(|i| (i + 3) % n).collect();
            let mut pg = vec![Vec::new(); n];
            for (a, list) in g.iter().enumerate() {
                for &b in list {
                    pg[perm[a]].push(perm[b]);
                }
            }
            let pts = occurrence_counts(&hop_matrix_from_neighbors(&pg).unwrap()).ts;
            for i in 0..n {
                assert_eq!(ts[i], pts[perm[i]]);
            }
        }
    }

    #[test]
    fn removing_an_edge_never_shortens_distances() {
        let g = random_connected_graph(777, 12);
        let h = hop_matrix_from_neighbors(&g).unwrap();
        let mut g2 = g.clone();
        // Drop the first edge found.
        let a = g2.iter().position(|l| !l.is_empty()).unwrap();
        let b = g2[a][0];
        g2[a].retain(|&x| x != b);
        g2[b].retain(|&x| x != a);
        if let Ok(h2) = hop_matrix_from_neighbors(&g2) {
            for i in 0..12 {
                for j in 0..12 {
                    assert!(h2.get(i, j) >= h.get(i, j));
                }
            }
        }
    }
}
