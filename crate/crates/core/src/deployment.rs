//! Random node deployment and the LoS-constrained communication graph.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{point_in_free_space, segment_blocked, Point2D, Scenario};

/// One sensor node with its ground-truth position.
#[derive(Debug, Clone)]
pub struct Node {
    pub id: usize,
    pub position: Point2D,
    pub is_anchor: bool,
}

/// Distance measurement model applied to one-hop LoS links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RangingModel {
    /// Measurements return the true Euclidean distance.
    Exact,
    /// Measurements return `max(0, d + N(0, sigma^2))`, with a noise draw
    /// keyed by the deployment seed and the node pair.
    Gaussian { sigma: f64 },
}

/// A deployed network: scenario, node layout, and LoS adjacency.
#[derive(Debug, Clone)]
pub struct Network {
    pub scenario: Scenario,
    pub nodes: Vec<Node>,
    pub l: f64,
    pub ranging: RangingModel,
    /// Seed the layout was drawn from; also keys the ranging noise stream.
    pub seed: u64,
    adj: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
}

/// 64-bit mix used for seed splitting and per-pair noise keys.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const MAX_DEPLOY_ATTEMPTS: usize = 1000;

impl Network {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.nodes.len() + j]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn anchor_ids(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| n.is_anchor)
            .map(|n| n.id)
            .collect()
    }

    pub fn unknown_count(&self) -> usize {
        self.nodes.iter().filter(|n| !n.is_anchor).count()
    }

    /// Build a network from explicit positions (used for reproduction and
    /// tests). Positions must lie in free space; connectivity is not
    /// enforced here.
    pub fn from_positions(
        scenario: Scenario,
        positions: &[(Point2D, bool)],
        l: f64,
        ranging: RangingModel,
        seed: u64,
    ) -> Result<Network> {
        if l <= 0.0 {
            return Err(Error::InvalidDeployment("radio range must be > 0".into()));
        }
        for (p, _) in positions {
            if !point_in_free_space(&scenario, p) {
                return Err(Error::InvalidDeployment(format!(
                    "position ({}, {}) not in free space",
                    p.x, p.y
                )));
            }
        }
        let nodes: Vec<Node> = positions
            .iter()
            .enumerate()
            .map(|(id, (position, is_anchor))| Node {
                id,
                position: *position,
                is_anchor: *is_anchor,
            })
            .collect();
        let (adj, neighbors) = build_adjacency(&scenario, &nodes, l);
        Ok(Network {
            scenario,
            nodes,
            l,
            ranging,
            seed,
            adj,
            neighbors,
        })
    }

    /// Dump the layout as `id x y is_anchor` lines.
    pub fn to_node_list_string(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            out.push_str(&format!(
                "{} {} {} {}\n",
                n.id,
                n.position.x,
                n.position.y,
                u8::from(n.is_anchor)
            ));
        }
        out
    }

    /// Rebuild a network from a node-list dump.
    pub fn from_node_list_str(
        scenario: Scenario,
        text: &str,
        l: f64,
        ranging: RangingModel,
        seed: u64,
    ) -> Result<Network> {
        let mut rows: Vec<(usize, Point2D, bool)> = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("node list line {}: want 4 fields", ln + 1)));
            }
            let id: usize = f[0]
                .parse()
                .map_err(|_| Error::Parse(format!("node list line {}: bad id", ln + 1)))?;
            let x: f64 = f[1]
                .parse()
                .map_err(|_| Error::Parse(format!("node list line {}: bad x", ln + 1)))?;
            let y: f64 = f[2]
                .parse()
                .map_err(|_| Error::Parse(format!("node list line {}: bad y", ln + 1)))?;
            let a = match f[3] {
                "0" => false,
                "1" => true,
                _ => return Err(Error::Parse(format!("node list line {}: bad anchor flag", ln + 1))),
            };
            rows.push((id, Point2D::new(x, y), a));
        }
        rows.sort_by_key(|r| r.0);
        for (expect, row) in rows.iter().enumerate() {
            if row.0 != expect {
                return Err(Error::Parse("node ids must be dense from 0".into()));
            }
        }
        let positions: Vec<(Point2D, bool)> = rows.into_iter().map(|r| (r.1, r.2)).collect();
        Network::from_positions(scenario, &positions, l, ranging, seed)
    }
}

fn build_adjacency(scenario: &Scenario, nodes: &[Node], l: f64) -> (Vec<bool>, Vec<Vec<usize>>) {
    let n = nodes.len();
    let mut adj = vec![false; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let pi = &nodes[i].position;
            let pj = &nodes[j].position;
            if pi.dist(pj) <= l
                && !segment_blocked(scenario, pi, pj).expect("node positions are in free space")
            {
                adj[i * n + j] = true;
                adj[j * n + i] = true;
            }
        }
    }
    let neighbors = (0..n)
        .map(|i| (0..n).filter(|&j| adj[i * n + j]).collect())
        .collect();
    (adj, neighbors)
}

fn is_connected(neighbors: &[Vec<usize>]) -> bool {
    let n = neighbors.len();
    if n == 0 {
        return false;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &neighbors[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

/// Deploy `n_unknown + n_anchor` nodes uniformly at random in free space.
///
/// The whole layout is resampled until the LoS graph is a single connected
/// component with minimum degree 2, so that every node is reachable by the
/// exact solver chain. Deterministic for a given seed.
pub fn deploy(
    scenario: &Scenario,
    n_unknown: usize,
    n_anchor: usize,
    l: f64,
    seed: u64,
) -> Result<Network> {
    deploy_with(scenario, n_unknown, n_anchor, l, seed, RangingModel::Exact)
}

/// [`deploy`] with an explicit ranging model.
pub fn deploy_with(
    scenario: &Scenario,
    n_unknown: usize,
    n_anchor: usize,
    l: f64,
    seed: u64,
    ranging: RangingModel,
) -> Result<Network> {
    let n = n_unknown + n_anchor;
    if n < 4 {
        return Err(Error::InvalidDeployment("need at least 4 nodes".into()));
    }
    if l <= 0.0 {
        return Err(Error::InvalidDeployment("radio range must be > 0".into()));
    }
    if let RangingModel::Gaussian { sigma } = ranging {
        if sigma < 0.0 {
            return Err(Error::InvalidDeployment("sigma must be >= 0".into()));
        }
    }
    if let Some(edge) = scenario.min_polygon_edge() {
        // Standing assumption: obstacle edges exceed the radio range.
        if edge <= l {
            return Err(Error::InvalidDeployment(format!(
                "polygon edge {edge} m does not exceed radio range {l} m"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_DEPLOY_ATTEMPTS {
        let mut nodes = Vec::with_capacity(n);
        for id in 0..n {
            let position = loop {
                let p = Point2D::new(
                    rng.gen_range(0.0..scenario.width),
                    rng.gen_range(0.0..scenario.height),
                );
                if point_in_free_space(scenario, &p) {
                    break p;
                }
            };
            nodes.push(Node {
                id,
                position,
                is_anchor: false,
            });
        }
        for idx in sample(&mut rng, n, n_anchor) {
            nodes[idx].is_anchor = true;
        }
        let (adj, neighbors) = build_adjacency(scenario, &nodes, l);
        let min_degree = neighbors.iter().map(Vec::len).min().unwrap_or(0);
        if min_degree >= 2 && is_connected(&neighbors) {
            return Ok(Network {
                scenario: scenario.clone(),
                nodes,
                l,
                ranging,
                seed,
                adj,
                neighbors,
            });
        }
    }
    Err(Error::Undeployable {
        attempts: MAX_DEPLOY_ATTEMPTS,
    })
}

/// Measure the distance between two one-hop neighbors under the network's
/// ranging model. `i == j` returns 0.
pub fn measure_distance(network: &Network, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Ok(0.0);
    }
    if !network.has_edge(i, j) {
        return Err(Error::NotOneHop(i, j));
    }
    let d = network.nodes[i].position.dist(&network.nodes[j].position);
    match network.ranging {
        RangingModel::Exact => Ok(d),
        RangingModel::Gaussian { sigma } => {
            if sigma == 0.0 {
                return Ok(d);
            }
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            let key = splitmix64(network.seed ^ splitmix64(((a as u64) << 32) | b as u64));
            let mut rng = ChaCha8Rng::seed_from_u64(key);
            let z: f64 = rng.sample(StandardNormal);
            Ok((d + sigma * z).max(0.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_scenario;

    #[test]
    fn seeded_deployments_are_identical() {
        let s = build_scenario("c-shape").unwrap();
        let a = deploy(&s, 150, 10, 15.0, 7).unwrap();
        let b = deploy(&s, 150, 10, 15.0, 7).unwrap();
        for (x, y) in a.nodes.iter().zip(&b.nodes) {
            assert_eq!(x.position, y.position);
            assert_eq!(x.is_anchor, y.is_anchor);
        }
    }

    #[test]
    fn deployment_counts_and_area() {
        let s = build_scenario("none").unwrap();
        let net = deploy(&s, 10, 3, 60.0, 1).unwrap();
        assert_eq!(net.len(), 13);
        assert_eq!(net.anchor_ids().len(), 3);
        for n in &net.nodes {
            assert!(point_in_free_space(&net.scenario, &n.position));
        }
    }

    #[test]
    fn deployments_are_connected_with_valid_edges() {
        let s = build_scenario("c-shape").unwrap();
        for seed in 0..10 {
            let net = deploy(&s, 150, 10, 15.0, seed).unwrap();
            assert!(is_connected(&net.neighbors));
            let n = net.len();
            for i in 0..n {
                assert!(!net.has_edge(i, i));
                assert!(net.degree(i) >= 1);
                for j in 0..n {
                    assert_eq!(net.has_edge(i, j), net.has_edge(j, i));
                    if net.has_edge(i, j) {
                        let pi = &net.nodes[i].position;
                        let pj = &net.nodes[j].position;
                        assert!(pi.dist(pj) <= 15.0);
                        assert!(!segment_blocked(&net.scenario, pi, pj).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn different_seeds_differ() {
        let s = build_scenario("none").unwrap();
        let a = deploy(&s, 20, 4, 60.0, 1).unwrap();
        let b = deploy(&s, 20, 4, 60.0, 2).unwrap();
        assert!(a
            .nodes
            .iter()
            .zip(&b.nodes)
            .any(|(x, y)| x.position != y.position));
    }

    fn two_node_net() -> Network {
        let s = build_scenario("none").unwrap();
        Network::from_positions(
            s,
            &[
                (Point2D::new(0.0, 0.0), false),
                (Point2D::new(3.0, 4.0), false),
                (Point2D::new(50.0, 50.0), false),
            ],
            15.0,
            RangingModel::Exact,
            0,
        )
        .unwrap()
    }

    #[test]
    fn exact_distance_is_euclidean() {
        let net = two_node_net();
        assert_eq!(measure_distance(&net, 0, 1).unwrap(), 5.0);
        assert_eq!(measure_distance(&net, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn non_adjacent_measurement_fails() {
        let net = two_node_net();
        assert!(matches!(
            measure_distance(&net, 0, 2),
            Err(Error::NotOneHop(0, 2))
        ));
    }

    #[test]
    fn zero_sigma_gaussian_matches_exact() {
        let s = build_scenario("none").unwrap();
        let net = deploy_with(&s, 20, 4, 60.0, 3, RangingModel::Gaussian { sigma: 0.0 }).unwrap();
        let exact = deploy_with(&s, 20, 4, 60.0, 3, RangingModel::Exact).unwrap();
        for i in 0..net.len() {
            for &j in net.neighbors(i) {
                assert_eq!(
                    measure_distance(&net, i, j).unwrap(),
                    measure_distance(&exact, i, j).unwrap()
                );
            }
        }
    }

    #[test]
    fn gaussian_noise_is_symmetric_and_deterministic() {
        let s = build_scenario("none").unwrap();
        let net = deploy_with(&s, 20, 4, 60.0, 3, RangingModel::Gaussian { sigma: 0.5 }).unwrap();
        for i in 0..net.len() {
            for &j in net.neighbors(i) {
                let a = measure_distance(&net, i, j).unwrap();
                let b = measure_distance(&net, j, i).unwrap();
                assert_eq!(a, b);
                assert_eq!(a, measure_distance(&net, i, j).unwrap());
            }
        }
    }

    #[test]
    fn node_list_roundtrip() {
        let s = build_scenario("h-shape").unwrap();
        let net = deploy(&s, 120, 10, 15.0, 11).unwrap();
        let dump = net.to_node_list_string();
        let back =
            Network::from_node_list_str(net.scenario.clone(), &dump, 15.0, RangingModel::Exact, 11)
                .unwrap();
        assert_eq!(back.len(), net.len());
        for (a, b) in net.nodes.iter().zip(&back.nodes) {
            assert_eq!(a.position, b.position);
            assert_eq!(a.is_anchor, b.is_anchor);
        }
    }
}
