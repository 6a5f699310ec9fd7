//! Per-sub-network relative localization and calibration to the global
//! frame.
//!
//! Each sub-network picks a central one-hop reference triangle, grows a
//! relative coordinate frame outward from it (trilateration when three or
//! more placed neighbors are in range, two-circle intersection with
//! range-exclusion disambiguation for two, arc-midpoint estimation for
//! one), then fits the six-coefficient affine map onto its anchors to
//! produce global estimates.

use std::collections::VecDeque;

use crate::deployment::{measure_distance, Network, RangingModel};
use crate::error::{Error, Result};
use crate::geometry::Point2D;
use crate::partitioning::PartitionMap;

/// Non-collinearity slack, as a fraction of the radio range.
pub const NONCOLLINEAR_SLACK_FACTOR: f64 = 0.05;
/// Tangency tolerance for the two-circle case, as a fraction of the range.
pub const TANGENCY_TOL_FACTOR: f64 = 1e-9;
/// Accepted trilateration residual, as a fraction of the range.
pub const TRILATERATION_RESIDUAL_FACTOR: f64 = 1e-6;

/// How a node's relative position was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseTag {
    Reference,
    /// Trilateration from three or more placed neighbors.
    Case1,
    /// Two-circle intersection from exactly two placed neighbors.
    Case2,
    /// Arc midpoint from a single placed neighbor.
    Case3,
    Unresolved,
}

impl CaseTag {
    /// Tags whose placements are exact under exact ranging.
    pub fn is_exact(self) -> bool {
        matches!(self, CaseTag::Reference | CaseTag::Case1 | CaseTag::Case2)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::Reference => "reference",
            CaseTag::Case1 => "1",
            CaseTag::Case2 => "2",
            CaseTag::Case3 => "3",
            CaseTag::Unresolved => "unresolved",
        }
    }
}

/// The three mutually one-hop, non-collinear nodes that define a frame.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceTriple {
    pub o: usize,
    pub x: usize,
    pub y: usize,
    pub d_ox: f64,
    pub d_oy: f64,
    pub d_xy: f64,
}

/// Relative coordinates of one sub-network.
#[derive(Debug, Clone)]
pub struct RelativeFrame {
    /// Area label this frame belongs to.
    pub subnet: usize,
    /// Sorted member ids.
    pub members: Vec<usize>,
    /// Relative coordinates, parallel to `members`.
    pub coords: Vec<Option<Point2D>>,
    /// Placement tags, parallel to `members`.
    pub case_tags: Vec<CaseTag>,
    /// Ids in resolution order (the growing known set).
    pub known_order: Vec<usize>,
    /// Ids placed on a fully excluded arc (minimal-violation fallback).
    pub low_confidence: Vec<usize>,
    /// Radio range of the parent network.
    pub l: f64,
}

impl RelativeFrame {
    pub fn member_index(&self, id: usize) -> Option<usize> {
        self.members.binary_search(&id).ok()
    }

    pub fn coord_of(&self, id: usize) -> Option<Point2D> {
        self.member_index(id).and_then(|i| self.coords[i])
    }

    pub fn tag_of(&self, id: usize) -> CaseTag {
        self.member_index(id)
            .map(|i| self.case_tags[i])
            .unwrap_or(CaseTag::Unresolved)
    }
}

/// Affine map from relative to global coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTransform {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub dx: f64,
    pub dy: f64,
}

impl FrameTransform {
    pub const IDENTITY: FrameTransform = FrameTransform {
        r1: 1.0,
        r2: 0.0,
        r3: 0.0,
        r4: 1.0,
        dx: 0.0,
        dy: 0.0,
    };

    pub fn apply(&self, p: Point2D) -> Point2D {
        Point2D::new(
            self.r1 * p.x + self.r2 * p.y + self.dx,
            self.r3 * p.x + self.r4 * p.y + self.dy,
        )
    }

    pub fn det(&self) -> f64 {
        self.r1 * self.r4 - self.r2 * self.r3
    }
}

/// Result of fitting a frame onto anchor correspondences.
#[derive(Debug, Clone, Copy)]
pub struct Calibration {
    pub transform: FrameTransform,
    /// True when arc-placed anchors had to be included in the fit.
    pub anchor_deficient: bool,
}

/// Per-sub-network localization outcome.
#[derive(Debug, Clone)]
pub struct SubnetOutcome {
    pub label: usize,
    pub frame: Option<RelativeFrame>,
    pub transform: Option<FrameTransform>,
    pub anchor_deficient: bool,
    /// Calibrated against neighbor-derived positions instead of own anchors.
    pub recovered: bool,
    pub failure: Option<String>,
}

/// Whole-network localization outcome.
#[derive(Debug, Clone)]
pub struct LocalizationResult {
    pub subnets: Vec<SubnetOutcome>,
    /// Global estimate per node id; `None` when unlocalized.
    pub global_estimate: Vec<Option<Point2D>>,
    /// Placement tag per node id.
    pub case_tags: Vec<CaseTag>,
}

impl LocalizationResult {
    /// CSV dump with one row per node.
    pub fn to_csv_string(&self, network: &Network) -> String {
        let mut out =
            String::from("node_id,subnet,case_tag,x_rel,y_rel,x_glob,y_glob,true_x,true_y,error_m\n");
        let mut subnet_of = vec![0usize; network.len()];
        let mut rel = vec![None; network.len()];
        for s in &self.subnets {
            if let Some(frame) = &s.frame {
                for (i, &id) in frame.members.iter().enumerate() {
                    subnet_of[id] = s.label;
                    rel[id] = frame.coords[i];
                }
            }
        }
        let fmt = |v: Option<f64>| v.map_or(String::from(""), |x| format!("{x}"));
        for node in &network.nodes {
            let id = node.id;
            let g = self.global_estimate[id];
            let err = g.map(|p| p.dist(&node.position));
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                id,
                subnet_of[id],
                self.case_tags[id].as_str(),
                fmt(rel[id].map(|p| p.x)),
                fmt(rel[id].map(|p| p.y)),
                fmt(g.map(|p| p.x)),
                fmt(g.map(|p| p.y)),
                node.position.x,
                node.position.y,
                fmt(err),
            ));
        }
        out
    }
}

fn measured(network: &Network, i: usize, j: usize) -> f64 {
    measure_distance(network, i, j).expect("one-hop link")
}

/// Residual acceptance for trilateration under the network's ranging model.
pub fn residual_tolerance(network: &Network) -> f64 {
    let base = TRILATERATION_RESIDUAL_FACTOR * network.l;
    match network.ranging {
        RangingModel::Exact => base,
        RangingModel::Gaussian { sigma } => base + 8.0 * sigma,
    }
}

/// Slack-based collinearity test: a point set is non-collinear when some
/// triple keeps every triangle-inequality margin at or above `slack`.
fn has_noncollinear_triple(points: &[Point2D], slack: f64) -> bool {
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let a = points[i].dist(&points[j]);
                let b = points[j].dist(&points[k]);
                let c = points[i].dist(&points[k]);
                let margin = (a + b - c).min(a + c - b).min(b + c - a);
                if margin >= slack {
                    return true;
                }
            }
        }
    }
    false
}

fn bfs_within_members(network: &Network, src: usize, member_mask: &[bool]) -> Vec<u32> {
    let n = network.len();
    let mut dist = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    dist[src] = 0;
    queue.push_back(src);
    while let Some(u) = queue.pop_front() {
        for &v in network.neighbors(u) {
            if member_mask[v] && dist[v] == u32::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Choose the reference triple of a sub-network: mutually one-hop,
/// non-collinear with slack, minimizing the worst hop-sum to any member.
/// Ties go to the lexicographically smallest id triple; roles are assigned
/// in ascending id order.
pub fn select_references(network: &Network, subnet: &[usize], label: usize) -> Result<ReferenceTriple> {
    if subnet.len() < 4 {
        return Err(Error::NoReferenceTriple(label));
    }
    let mut members = subnet.to_vec();
    members.sort_unstable();
    let mut mask = vec![false; network.len()];
    for &m in &members {
        mask[m] = true;
    }
    let hops: Vec<Vec<u32>> = members
        .iter()
        .map(|&m| bfs_within_members(network, m, &mask))
        .collect();
    let slack = NONCOLLINEAR_SLACK_FACTOR * network.l;

    let mut best: Option<((u32, (usize, usize, usize)), ReferenceTriple)> = None;
    for (ia, &a) in members.iter().enumerate() {
        for (ib, &b) in members.iter().enumerate().skip(ia + 1) {
            if !network.has_edge(a, b) {
                continue;
            }
            for (ic, &c) in members.iter().enumerate().skip(ib + 1) {
                if !network.has_edge(a, c) || !network.has_edge(b, c) {
                    continue;
                }
                let d_ab = measured(network, a, b);
                let d_ac = measured(network, a, c);
                let d_bc = measured(network, b, c);
                let margin = (d_ab + d_bc - d_ac)
                    .min(d_ab + d_ac - d_bc)
                    .min(d_ac + d_bc - d_ab);
                if margin < slack {
                    continue;
                }
                let mut worst = 0u32;
                for (im, _) in members.iter().enumerate() {
                    let (ha, hb, hc) = (hops[ia][members[im]], hops[ib][members[im]], hops[ic][members[im]]);
                    if ha == u32::MAX || hb == u32::MAX || hc == u32::MAX {
                        continue;
                    }
                    worst = worst.max(ha + hb + hc);
                }
                let key = (worst, (a, b, c));
                if best.as_ref().map_or(true, |(k, _)| key < *k) {
                    best = Some((
                        key,
                        ReferenceTriple {
                            o: a,
                            x: b,
                            y: c,
                            d_ox: d_ab,
                            d_oy: d_ac,
                            d_xy: d_bc,
                        },
                    ));
                }
            }
        }
    }
    best.map(|(_, t)| t).ok_or(Error::NoReferenceTriple(label))
}

/// Least-squares trilateration from three or more known positions.
///
/// The circle equations are linearized against the first known and solved
/// by normal equations; the fit is rejected when the knowns are collinear
/// or the worst distance residual exceeds `residual_tol`.
pub fn trilaterate(knowns: &[Point2D], dists: &[f64], residual_tol: f64) -> Result<Point2D> {
    assert!(knowns.len() >= 3 && knowns.len() == dists.len());
    let k0 = knowns[0];
    let d0 = dists[0];
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for u in 1..knowns.len() {
        let ku = knowns[u];
        let ax = 2.0 * (ku.x - k0.x);
        let ay = 2.0 * (ku.y - k0.y);
        let rhs = d0 * d0 - dists[u] * dists[u] + ku.x * ku.x - k0.x * k0.x + ku.y * ku.y
            - k0.y * k0.y;
        a11 += ax * ax;
        a12 += ax * ay;
        a22 += ay * ay;
        b1 += ax * rhs;
        b2 += ay * rhs;
    }
    let det = a11 * a22 - a12 * a12;
    let scale = 0.5 * (a11 + a22);
    if det <= 1e-12 * scale * scale {
        return Err(Error::CollinearKnowns);
    }
    let x = (b1 * a22 - b2 * a12) / det;
    let y = (b2 * a11 - b1 * a12) / det;
    let p = Point2D::new(x, y);
    let residual = knowns
        .iter()
        .zip(dists)
        .map(|(k, &d)| (p.dist(k) - d).abs())
        .fold(0.0, f64::max);
    if residual > residual_tol {
        return Err(Error::InconsistentTrilateration {
            residual,
            tolerance: residual_tol,
        });
    }
    Ok(p)
}

/// Intersection of two ranging circles.
#[derive(Debug, Clone, Copy)]
enum CircleCross {
    None,
    Tangent(Point2D),
    Pair(Point2D, Point2D),
}

fn circle_intersections(k1: Point2D, d1: f64, k2: Point2D, d2: f64, tol: f64) -> CircleCross {
    let dx = k2.x - k1.x;
    let dy = k2.y - k1.y;
    let dd = dx.hypot(dy);
    if dd <= tol {
        return CircleCross::None;
    }
    if dd > d1 + d2 + tol || dd < (d1 - d2).abs() - tol {
        return CircleCross::None;
    }
    let a = (d1 * d1 - d2 * d2 + dd * dd) / (2.0 * dd);
    let base = Point2D::new(k1.x + a * dx / dd, k1.y + a * dy / dd);
    if dd >= d1 + d2 - tol || dd <= (d1 - d2).abs() + tol {
        return CircleCross::Tangent(base);
    }
    let h2 = d1 * d1 - a * a;
    if h2 <= 0.0 {
        return CircleCross::Tangent(base);
    }
    let h = h2.sqrt();
    let ux = -dy / dd;
    let uy = dx / dd;
    CircleCross::Pair(
        Point2D::new(base.x + h * ux, base.y + h * uy),
        Point2D::new(base.x - h * ux, base.y - h * uy),
    )
}

/// Place a node heard by exactly two knowns: tangent circles give the
/// touch point, otherwise the intersection farther from `third` (a known
/// the node cannot hear) is chosen.
pub fn two_circle_locate(
    k1: Point2D,
    k2: Point2D,
    d1: f64,
    d2: f64,
    third: Point2D,
    l: f64,
) -> Result<Point2D> {
    match circle_intersections(k1, d1, k2, d2, TANGENCY_TOL_FACTOR * l) {
        CircleCross::None => Err(Error::NoCircleIntersection),
        CircleCross::Tangent(p) => Ok(p),
        CircleCross::Pair(p, q) => {
            if third.dist(&p) >= third.dist(&q) {
                Ok(p)
            } else {
                Ok(q)
            }
        }
    }
}

/// Angular interval(s) of the circle `C(k, d)` lying within range `l` of
/// `e`, as `(center, half_width)`; `None` means no exclusion, a half-width
/// of pi means the whole circle.
fn exclusion_interval(k: Point2D, d: f64, e: Point2D, l: f64) -> Option<(f64, f64)> {
    let dx = e.x - k.x;
    let dy = e.y - k.y;
    let dd = dx.hypot(dy);
    if dd == 0.0 {
        return if d <= l { Some((0.0, std::f64::consts::PI)) } else { None };
    }
    let c = (d * d + dd * dd - l * l) / (2.0 * d * dd);
    if c > 1.0 {
        return None;
    }
    let phi = dy.atan2(dx);
    if c < -1.0 {
        return Some((phi, std::f64::consts::PI));
    }
    Some((phi, c.acos()))
}

/// Case-3 placement: on the circle of radius `d` around the only heard
/// known, exclude every arc within range `l` of an unheard known, and take
/// the midpoint of the largest surviving arc (canonical start angle 0 when
/// nothing is excluded). When the whole circle is excluded, the midpoint
/// of the least-violated arc is returned with a low-confidence flag.
pub fn arc_midpoint_locate(
    k: Point2D,
    d: f64,
    excluders: &[Point2D],
    l: f64,
) -> Result<(Point2D, bool)> {
    if d <= 0.0 {
        return Err(Error::InvalidArc("radius must be positive".into()));
    }
    let tau = 2.0 * std::f64::consts::PI;
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    for e in excluders {
        if let Some((phi, half)) = exclusion_interval(k, d, *e, l) {
            let mut start = (phi - half) % tau;
            if start < 0.0 {
                start += tau;
            }
            let end = start + 2.0 * half;
            if end <= tau {
                pieces.push((start, end));
            } else {
                pieces.push((start, tau));
                pieces.push((0.0, end - tau));
            }
        }
    }
    let (theta, low_confidence) = if pieces.is_empty() {
        (0.0, false)
    } else {
        let (mid, min_cover) = largest_min_coverage_arc(&pieces);
        (mid, min_cover > 0)
    };
    Ok((
        Point2D::new(k.x + d * theta.cos(), k.y + d * theta.sin()),
        low_confidence,
    ))
}

/// Midpoint angle of the largest arc with minimal coverage by `pieces`
/// (non-wrapping intervals in `[0, 2pi]`), plus that minimal coverage.
/// Equal-length arcs tie-break to the smaller start angle.
fn largest_min_coverage_arc(pieces: &[(f64, f64)]) -> (f64, usize) {
    let tau = 2.0 * std::f64::consts::PI;
    let mut cuts: Vec<f64> = vec![0.0, tau];
    for &(s, e) in pieces {
        cuts.push(s);
        cuts.push(e);
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    // Coverage per elementary segment, by midpoint containment.
    let mut segs: Vec<(f64, f64, usize)> = Vec::new();
    for w in cuts.windows(2) {
        let (s, e) = (w[0], w[1]);
        if e - s < 1e-15 {
            continue;
        }
        let m = 0.5 * (s + e);
        let cover = pieces.iter().filter(|&&(ps, pe)| ps <= m && m < pe).count();
        segs.push((s, e, cover));
    }
    let min_cover = segs.iter().map(|s| s.2).min().unwrap_or(0);

    // Maximal circular runs of minimal-coverage segments.
    let flags: Vec<bool> = segs.iter().map(|s| s.2 == min_cover).collect();
    let n = segs.len();
    let mut runs: Vec<(f64, f64)> = Vec::new(); // (start angle, length)
    if flags.iter().all(|&f| f) {
        runs.push((segs[0].0, tau));
    } else {
        // Walk circularly starting just past a non-minimal segment so
        // wrap-around runs are collected in one piece.
        let first_non = flags.iter().position(|&f| !f).unwrap();
        let mut idx = first_non;
        let mut steps = 0;
        while steps < n {
            idx = (idx + 1) % n;
            steps += 1;
            if flags[idx] {
                let start = segs[idx].0;
                let mut len = segs[idx].1 - segs[idx].0;
                while steps < n && flags[(idx + 1) % n] {
                    idx = (idx + 1) % n;
                    steps += 1;
                    len += segs[idx].1 - segs[idx].0;
                }
                runs.push((start, len));
            }
        }
    }
    let (start, len) = runs
        .into_iter()
        .max_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .unwrap()
                .then(b.0.partial_cmp(&a.0).unwrap())
        })
        .unwrap();
    let mid = (start + 0.5 * len) % tau;
    (mid, min_cover)
}

struct FrameState<'a> {
    network: &'a Network,
    members: Vec<usize>,
    mask: Vec<bool>,
    coords: Vec<Option<Point2D>>,
    tags: Vec<CaseTag>,
    known_order: Vec<usize>,
    low_confidence: Vec<usize>,
    residual_tol: f64,
}

impl<'a> FrameState<'a> {
    fn idx(&self, id: usize) -> usize {
        self.members.binary_search(&id).unwrap()
    }

    fn place(&mut self, id: usize, p: Point2D, tag: CaseTag) {
        let i = self.idx(id);
        self.coords[i] = Some(p);
        self.tags[i] = tag;
        self.known_order.push(id);
    }

    /// Placed members the node can hear, as (id, position, measured dist).
    fn heard_knowns(&self, id: usize) -> Vec<(usize, Point2D, f64)> {
        self.network
            .neighbors(id)
            .iter()
            .filter(|&&v| self.mask[v])
            .filter_map(|&v| {
                self.coords[self.idx(v)].map(|p| (v, p, measured(self.network, id, v)))
            })
            .collect()
    }

    /// Placed members the node cannot hear.
    fn unheard_known_positions(&self, id: usize) -> Vec<Point2D> {
        let heard: Vec<usize> = self
            .network
            .neighbors(id)
            .iter()
            .copied()
            .filter(|&v| self.mask[v])
            .collect();
        self.members
            .iter()
            .enumerate()
            .filter(|(i, m)| self.coords[*i].is_some() && **m != id && !heard.contains(m))
            .filter_map(|(i, _)| self.coords[i])
            .collect()
    }

    fn centroid_of_knowns(&self) -> Point2D {
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut c = 0usize;
        for p in self.coords.iter().flatten() {
            sx += p.x;
            sy += p.y;
            c += 1;
        }
        Point2D::new(sx / c as f64, sy / c as f64)
    }

    /// A candidate position is infeasible when it sits within radio range
    /// of a placed member the node provably cannot hear.
    fn feasible(&self, id: usize, candidate: Point2D, unheard: &[Point2D]) -> bool {
        let _ = id;
        let l = self.network.l;
        unheard.iter().all(|t| candidate.dist(t) > l - 1e-9)
    }

    fn try_case1(&mut self, id: usize, knowns: &[(usize, Point2D, f64)]) -> bool {
        let pts: Vec<Point2D> = knowns.iter().map(|k| k.1).collect();
        let ds: Vec<f64> = knowns.iter().map(|k| k.2).collect();
        match trilaterate(&pts, &ds, self.residual_tol) {
            Ok(p) => {
                self.place(id, p, CaseTag::Case1);
                true
            }
            Err(Error::CollinearKnowns) => {
                // All in-range knowns lie on a line; fall back to the
                // farthest-apart pair plus exclusion disambiguation.
                let mut best = (0usize, 1usize, 0.0f64);
                for i in 0..knowns.len() {
                    for j in i + 1..knowns.len() {
                        let d = knowns[i].1.dist(&knowns[j].1);
                        if d > best.2 {
                            best = (i, j, d);
                        }
                    }
                }
                self.try_case2(id, knowns[best.0], knowns[best.1])
            }
            Err(_) => false,
        }
    }

    fn try_case2(
        &mut self,
        id: usize,
        k1: (usize, Point2D, f64),
        k2: (usize, Point2D, f64),
    ) -> bool {
        let l = self.network.l;
        let tol = TANGENCY_TOL_FACTOR * l;
        match circle_intersections(k1.1, k1.2, k2.1, k2.2, tol) {
            CircleCross::None => false,
            CircleCross::Tangent(p) => {
                self.place(id, p, CaseTag::Case2);
                true
            }
            CircleCross::Pair(p, q) => {
                let unheard = self.unheard_known_positions(id);
                let fp = self.feasible(id, p, &unheard);
                let fq = self.feasible(id, q, &unheard);
                let pick = match (fp, fq) {
                    (true, false) => p,
                    (false, true) => q,
                    (true, true) => {
                        // Genuinely ambiguous: prefer the candidate on the
                        // populated side of the chord.
                        let c = self.centroid_of_knowns();
                        if c.dist(&p) <= c.dist(&q) {
                            p
                        } else {
                            q
                        }
                    }
                    (false, false) => {
                        let viol = |cand: Point2D| {
                            unheard
                                .iter()
                                .map(|t| cand.dist(t))
                                .fold(f64::INFINITY, f64::min)
                        };
                        if viol(p) >= viol(q) {
                            p
                        } else {
                            q
                        }
                    }
                };
                self.place(id, pick, CaseTag::Case2);
                true
            }
        }
    }

    fn try_case3(&mut self, id: usize, k: (usize, Point2D, f64)) -> bool {
        let excluders = self.unheard_known_positions(id);
        match arc_midpoint_locate(k.1, k.2, &excluders, self.network.l) {
            Ok((p, low)) => {
                self.place(id, p, CaseTag::Case3);
                if low {
                    self.low_confidence.push(id);
                }
                true
            }
            Err(_) => false,
        }
    }
}

/// Grow the relative frame of one sub-network from its reference triple.
///
/// Nodes are resolved in rounds: all nodes hearing three or more placed
/// members first, then one two-known node at a time, and only when no such
/// progress remains, one single-known node via the exclusion arc. Nodes
/// that never hear a placed member stay unresolved.
pub fn localize_subnetwork(
    network: &Network,
    subnet: &[usize],
    refs: &ReferenceTriple,
    label: usize,
) -> RelativeFrame {
    let mut members = subnet.to_vec();
    members.sort_unstable();
    let mut mask = vec![false; network.len()];
    for &m in &members {
        mask[m] = true;
    }
    let n = members.len();
    let mut state = FrameState {
        network,
        members: members.clone(),
        mask,
        coords: vec![None; n],
        tags: vec![CaseTag::Unresolved; n],
        known_order: Vec::with_capacity(n),
        low_confidence: Vec::new(),
        residual_tol: residual_tolerance(network),
    };

    // Reference placement: origin, positive x-axis, positive-y third node.
    let xy = (refs.d_ox * refs.d_ox + refs.d_oy * refs.d_oy - refs.d_xy * refs.d_xy)
        / (2.0 * refs.d_ox);
    let yy = (refs.d_oy * refs.d_oy - xy * xy).max(0.0).sqrt();
    state.place(refs.o, Point2D::new(0.0, 0.0), CaseTag::Reference);
    state.place(refs.x, Point2D::new(refs.d_ox, 0.0), CaseTag::Reference);
    state.place(refs.y, Point2D::new(xy, yy), CaseTag::Reference);

    loop {
        // Saturate unique placements (cases 1 and 2).
        let mut progressed = true;
        while progressed {
            progressed = false;
            // Case 1 fixpoint.
            let mut placed1 = true;
            while placed1 {
                placed1 = false;
                for &id in &members {
                    if state.coords[state.idx(id)].is_some() {
                        continue;
                    }
                    let knowns = state.heard_knowns(id);
                    if knowns.len() >= 3 && state.try_case1(id, &knowns) {
                        placed1 = true;
                        progressed = true;
                    }
                }
            }
            // One two-known placement, then retry case 1.
            for &id in &members {
                if state.coords[state.idx(id)].is_some() {
                    continue;
                }
                let knowns = state.heard_knowns(id);
                if knowns.len() == 2 && state.try_case2(id, knowns[0], knowns[1]) {
                    progressed = true;
                    break;
                }
            }
        }
        // One arc placement, then return to unique placements.
        let mut placed3 = false;
        for &id in &members {
            if state.coords[state.idx(id)].is_some() {
                continue;
            }
            let knowns = state.heard_knowns(id);
            if knowns.len() == 1 && state.try_case3(id, knowns[0]) {
                placed3 = true;
                break;
            }
        }
        if !placed3 {
            break;
        }
    }

    RelativeFrame {
        subnet: label,
        members,
        coords: state.coords,
        case_tags: state.tags,
        known_order: state.known_order,
        low_confidence: state.low_confidence,
        l: network.l,
    }
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [
        [a[0][0], a[0][1], a[0][2], b[0]],
        [a[1][0], a[1][1], a[1][2], b[1]],
        [a[2][0], a[2][1], a[2][2], b[2]],
    ];
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

fn fit_transform(rel: &[Point2D], glob: &[Point2D]) -> Option<FrameTransform> {
    let mut ata = [[0.0f64; 3]; 3];
    let mut bx = [0.0f64; 3];
    let mut by = [0.0f64; 3];
    for (r, g) in rel.iter().zip(glob) {
        let row = [r.x, r.y, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            bx[i] += row[i] * g.x;
            by[i] += row[i] * g.y;
        }
    }
    let sx = solve3(ata, bx)?;
    let sy = solve3(ata, by)?;
    Some(FrameTransform {
        r1: sx[0],
        r2: sx[1],
        dx: sx[2],
        r3: sy[0],
        r4: sy[1],
        dy: sy[2],
    })
}

/// Fit the affine frame-to-global map from anchor correspondences.
///
/// Anchors placed by exact cases (reference/1/2) are preferred; arc-placed
/// anchors are pulled in only when the exact ones are insufficient, which
/// flags the subnet as anchor-deficient. Fewer than three usable anchors
/// or collinear ones fail with `Uncalibratable`.
pub fn calibrate(frame: &RelativeFrame, anchors: &[(usize, Point2D)]) -> Result<Calibration> {
    let slack = NONCOLLINEAR_SLACK_FACTOR * frame.l;
    let gather = |exact_only: bool| -> (Vec<Point2D>, Vec<Point2D>) {
        let mut rel = Vec::new();
        let mut glob = Vec::new();
        for &(id, gpos) in anchors {
            let tag = frame.tag_of(id);
            let usable = if exact_only {
                tag.is_exact()
            } else {
                tag != CaseTag::Unresolved
            };
            if usable {
                if let Some(rpos) = frame.coord_of(id) {
                    rel.push(rpos);
                    glob.push(gpos);
                }
            }
        }
        (rel, glob)
    };

    let attempt = |rel: &[Point2D], glob: &[Point2D]| -> Option<FrameTransform> {
        if rel.len() < 3 || !has_noncollinear_triple(rel, slack) {
            return None;
        }
        let t = fit_transform(rel, glob)?;
        if t.det().abs() <= 1e-9 {
            return None;
        }
        Some(t)
    };

    let (rel, glob) = gather(true);
    if let Some(t) = attempt(&rel, &glob) {
        return Ok(Calibration {
            transform: t,
            anchor_deficient: false,
        });
    }
    let (rel, glob) = gather(false);
    if let Some(t) = attempt(&rel, &glob) {
        return Ok(Calibration {
            transform: t,
            anchor_deficient: true,
        });
    }
    Err(Error::Uncalibratable(frame.subnet))
}

/// Localize every sub-network of a partitioned network and calibrate the
/// frames to the global coordinate system.
///
/// Sub-networks whose own anchors cannot calibrate them get a second
/// chance: members exactly placed in the frame and hearing at least three
/// exactly-localized nodes of calibrated sub-networks obtain global
/// positions by trilateration over those one-hop LoS links, and the frame
/// is then fitted against these stand-in anchors.
pub fn localize_network(network: &Network, partition: &PartitionMap) -> LocalizationResult {
    let n = network.len();
    let mut result = LocalizationResult {
        subnets: Vec::new(),
        global_estimate: vec![None; n],
        case_tags: vec![CaseTag::Unresolved; n],
    };
    let anchor_positions: Vec<(usize, Point2D)> = network
        .nodes
        .iter()
        .filter(|nd| nd.is_anchor)
        .map(|nd| (nd.id, nd.position))
        .collect();

    for (label, members) in partition.subnets() {
        let refs = match select_references(network, &members, label) {
            Ok(r) => r,
            Err(e) => {
                result.subnets.push(SubnetOutcome {
                    label,
                    frame: None,
                    transform: None,
                    anchor_deficient: true,
                    recovered: false,
                    failure: Some(e.to_string()),
                });
                continue;
            }
        };
        let frame = localize_subnetwork(network, &members, &refs, label);
        for (i, &id) in frame.members.iter().enumerate() {
            result.case_tags[id] = frame.case_tags[i];
        }
        let own_anchors: Vec<(usize, Point2D)> = anchor_positions
            .iter()
            .copied()
            .filter(|(id, _)| frame.member_index(*id).is_some())
            .collect();
        match calibrate(&frame, &own_anchors) {
            Ok(cal) => {
                for (i, &id) in frame.members.iter().enumerate() {
                    if let Some(p) = frame.coords[i] {
                        result.global_estimate[id] = Some(cal.transform.apply(p));
                    }
                }
                result.subnets.push(SubnetOutcome {
                    label,
                    frame: Some(frame),
                    transform: Some(cal.transform),
                    anchor_deficient: cal.anchor_deficient,
                    recovered: false,
                    failure: None,
                });
            }
            Err(e) => {
                result.subnets.push(SubnetOutcome {
                    label,
                    frame: Some(frame),
                    transform: None,
                    anchor_deficient: true,
                    recovered: false,
                    failure: Some(e.to_string()),
                });
            }
        }
    }

    // Recovery pass over uncalibrated sub-networks.
    let residual_tol = residual_tolerance(network);
    loop {
        let mut progressed = false;
        for si in 0..result.subnets.len() {
            if result.subnets[si].transform.is_some() {
                continue;
            }
            let Some(frame) = result.subnets[si].frame.clone() else {
                continue;
            };
            let mut pseudo: Vec<(usize, Point2D)> = Vec::new();
            for (i, &id) in frame.members.iter().enumerate() {
                if frame.coords[i].is_none() || !frame.case_tags[i].is_exact() {
                    continue;
                }
                let fixed: Vec<(Point2D, f64)> = network
                    .neighbors(id)
                    .iter()
                    .filter_map(|&v| {
                        result.global_estimate[v].and_then(|g| {
                            if result.case_tags[v].is_exact()
                                && frame.member_index(v).is_none()
                            {
                                Some((g, measured(network, id, v)))
                            } else {
                                None
                            }
                        })
                    })
                    .collect();
                if fixed.len() >= 3 {
                    let pts: Vec<Point2D> = fixed.iter().map(|f| f.0).collect();
                    let ds: Vec<f64> = fixed.iter().map(|f| f.1).collect();
                    if let Ok(g) = trilaterate(&pts, &ds, residual_tol) {
                        pseudo.push((id, g));
                    }
                }
            }
            if pseudo.len() < 3 {
                continue;
            }
            if let Ok(cal) = calibrate(&frame, &pseudo) {
                for (i, &id) in frame.members.iter().enumerate() {
                    if let Some(p) = frame.coords[i] {
                        result.global_estimate[id] = Some(cal.transform.apply(p));
                    }
                }
                let s = &mut result.subnets[si];
                s.transform = Some(cal.transform);
                s.recovered = true;
                s.failure = None;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }

    result
}
