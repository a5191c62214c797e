//! The sausage-intersection graph: one vertex per trajectory, an edge when
//! the two r-sausages meet (segment distance at most 2r). Built through a
//! uniform spatial hash broad phase with exact segment-segment tests.

use crate::brownian::Trajectory;
use crate::error::{Error, Result};
use crate::geom::{segment_segment_dist_sq, BoxRegion, PointT};
use crate::interlacement::WindowSample;
use crate::scalar::Scalar;
use crate::spatial::SegmentSet;
use std::collections::HashSet;

#[derive(Debug, Clone, PartialEq)]
pub struct SausageGraph<F> {
    pub n_vertices: usize,
    /// Sorted, deduplicated (i, j) with i < j; no self-loops.
    pub edges: Vec<(u32, u32)>,
    pub radius_r: F,
}

impl<F: Scalar> SausageGraph<F> {
    pub fn from_edges(n_vertices: usize, mut edges: Vec<(u32, u32)>, radius_r: F) -> Self {
        for e in edges.iter_mut() {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges.retain(|(a, b)| a != b);
        SausageGraph {
            n_vertices,
            edges,
            radius_r,
        }
    }

    pub fn adjacency_lists(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.n_vertices];
        for &(a, b) in &self.edges {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        adj
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search(&key).is_ok()
    }
}

/// Hop distance marker for unreachable vertices.
pub const UNREACHABLE: u32 = u32::MAX;

/// BFS hop distances from one source.
pub fn bfs_distances<F: Scalar>(g: &SausageGraph<F>, source: u32) -> Vec<u32> {
    let adj = g.adjacency_lists();
    bfs_with_adj(&adj, g.n_vertices, source)
}

fn bfs_with_adj(adj: &[Vec<u32>], n: usize, source: u32) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; n];
    let mut queue = std::collections::VecDeque::new();
    dist[source as usize] = 0;
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        let dv = dist[v as usize];
        for &w in &adj[v as usize] {
            if dist[w as usize] == UNREACHABLE {
                dist[w as usize] = dv + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// BFS hop distances from each source; UNREACHABLE marks infinity.
pub fn graph_distances<F: Scalar>(g: &SausageGraph<F>, sources: &[u32]) -> Vec<Vec<u32>> {
    let adj = g.adjacency_lists();
    sources
        .iter()
        .map(|&s| bfs_with_adj(&adj, g.n_vertices, s))
        .collect()
}

/// Adjacency over explicit polylines (one per vertex): spatial hash with
/// cell size 2r over segments, pairs tested only on hash collisions, exact
/// segment-segment distance <= 2r decides.
pub fn build_graph_from_polylines<F: Scalar>(
    polylines: &[Vec<PointT<F>>],
    radius_r: F,
) -> SausageGraph<F> {
    let n = polylines.len();
    let two_r = radius_r + radius_r;
    let mut set = SegmentSet::new(two_r, radius_r);
    for (owner, poly) in polylines.iter().enumerate() {
        if poly.len() == 1 {
            set.insert(poly[0], poly[0], owner as u32);
        }
        for w in poly.windows(2) {
            set.insert(w[0], w[1], owner as u32);
        }
    }
    let limit_sq = two_r * two_r;
    let mut edges: HashSet<(u32, u32)> = HashSet::new();
    set.for_each_bucket(|ids| {
        for (k, &i) in ids.iter().enumerate() {
            let (a1, b1, o1) = *set.segment(i);
            for &j in &ids[k + 1..] {
                let (a2, b2, o2) = *set.segment(j);
                if o1 == o2 {
                    continue;
                }
                let key = if o1 < o2 { (o1, o2) } else { (o2, o1) };
                if edges.contains(&key) {
                    continue;
                }
                if segment_segment_dist_sq(&a1, &b1, &a2, &b2) <= limit_sq {
                    edges.insert(key);
                }
            }
        }
    });
    SausageGraph::from_edges(n, edges.into_iter().collect(), radius_r)
}

/// All-pairs brute force reference (the oracle for the hashed build).
pub fn build_graph_brute_force<F: Scalar>(
    polylines: &[Vec<PointT<F>>],
    radius_r: F,
) -> SausageGraph<F> {
    let n = polylines.len();
    let two_r = radius_r + radius_r;
    let limit_sq = two_r * two_r;
    let mut edges = Vec::new();
    for i in 0..n {
        'pair: for j in i + 1..n {
            for s1 in polylines[i].windows(2) {
                for s2 in polylines[j].windows(2) {
                    if segment_segment_dist_sq(&s1[0], &s1[1], &s2[0], &s2[1]) <= limit_sq {
                        edges.push((i as u32, j as u32));
                        continue 'pair;
                    }
                }
            }
            // degenerate single-point polylines
            if polylines[i].len() == 1 && polylines[j].len() == 1 {
                if polylines[i][0].dist(&polylines[j][0]) <= two_r {
                    edges.push((i as u32, j as u32));
                }
            }
        }
    }
    SausageGraph::from_edges(n, edges, radius_r)
}

/// Build the intersection graph of the level-alpha sausages of a window
/// sample. Legs of one trajectory belong to one vertex; leg boundaries are
/// teleports and never adjacency segments.
pub fn build_graph<F: Scalar>(s: &WindowSample<F>, alpha: F) -> Result<SausageGraph<F>> {
    if alpha < F::zero() || alpha > s.alpha_max {
        return Err(Error::domain("graph level outside the sampled range"));
    }
    // flatten legs per trajectory while keeping leg breaks out of segments
    let kept: Vec<&Trajectory<F>> = s.level_slice(alpha).map(|(_, t)| t).collect();
    let n = kept.len();
    let r = s.radius_r;
    let two_r = r + r;
    let mut set = SegmentSet::new(two_r, r);
    for (owner, traj) in kept.iter().enumerate() {
        for (a, b) in traj.segments() {
            set.insert(*a, *b, owner as u32);
        }
    }
    let limit_sq = two_r * two_r;
    let mut edges: HashSet<(u32, u32)> = HashSet::new();
    set.for_each_bucket(|ids| {
        for (k, &i) in ids.iter().enumerate() {
            let (a1, b1, o1) = *set.segment(i);
            for &j in &ids[k + 1..] {
                let (a2, b2, o2) = *set.segment(j);
                if o1 == o2 {
                    continue;
                }
                let key = if o1 < o2 { (o1, o2) } else { (o2, o1) };
                if edges.contains(&key) {
                    continue;
                }
                if segment_segment_dist_sq(&a1, &b1, &a2, &b2) <= limit_sq {
                    edges.insert(key);
                }
            }
        }
    });
    Ok(SausageGraph::from_edges(
        n,
        edges.into_iter().collect(),
        r,
    ))
}

/// Truncate every leg at its first sampled point outside
/// B(center, rho_esc); prefixes grow with rho_esc, so adjacency between
/// fixed labels is monotone along an escape-radius ladder.
pub fn truncate_at_escape<F: Scalar>(
    traj: &Trajectory<F>,
    center: &PointT<F>,
    rho_esc: F,
) -> Trajectory<F> {
    let mut points = Vec::new();
    let mut leg_starts = Vec::new();
    for range in traj.leg_ranges() {
        let leg = &traj.points[range];
        if leg.is_empty() {
            continue;
        }
        leg_starts.push(points.len());
        for p in leg {
            points.push(*p);
            if p.dist(center) >= rho_esc {
                break;
            }
        }
    }
    Trajectory {
        step_h: traj.step_h,
        points,
        termination: traj.termination,
        leg_starts,
    }
}

/// One ladder row of the finite-size graph-distance probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub rho_esc: f64,
    pub n_vertices: usize,
    pub n_qualifying: usize,
    /// pair counts by hop distance 1, 2, 3, and >3 but finite
    pub pairs_at: [u64; 4],
    pub pairs_unreachable: u64,
    /// fraction of qualifying pairs at hop distance <= s_d (None if < 2)
    pub frac_within_sd: Option<f64>,
    pub frac_unreachable: Option<f64>,
}

/// Probe the graph-distance statistics of trajectories meeting `inner`
/// across a coupled escape-radius ladder: the sample is truncated at each
/// radius, so paths (and edges) only grow along the ladder.
pub fn diameter_probe<F: Scalar>(
    s: &WindowSample<F>,
    alpha: F,
    inner: &BoxRegion<F>,
    escape_ladder: &[F],
) -> Result<Vec<ProbeRow>> {
    if !inner.contained_in(&s.window) {
        return Err(Error::domain("inner region must lie inside the window"));
    }
    let d = s.dim();
    let s_d = crate::geom::s_d(d)?;
    let center = s.window.center;
    let kept: Vec<&Trajectory<F>> = s.level_slice(alpha).map(|(_, t)| t).collect();
    let mut rows = Vec::new();
    for &rho in escape_ladder {
        let truncated: Vec<Trajectory<F>> = kept
            .iter()
            .map(|t| truncate_at_escape(t, &center, rho))
            .collect();
        let polylines: Vec<Vec<PointT<F>>> = truncated
            .iter()
            .map(|t| {
                t.leg_ranges()
                    .flat_map(|r| t.points[r].iter().copied())
                    .collect()
            })
            .collect();
        let graph = build_graph_from_polylines(&polylines, s.radius_r);
        // qualifying vertices: sausage meets the inner region
        let quals: Vec<u32> = truncated
            .iter()
            .enumerate()
            .filter(|(_, t)| {
                t.segments()
                    .any(|(a, b)| crate::geom::segment_region_dist(a, b, inner) <= s.radius_r)
            })
            .map(|(i, _)| i as u32)
            .collect();
        let mut pairs_at = [0u64; 4];
        let mut unreachable = 0u64;
        let mut total = 0u64;
        if quals.len() >= 2 {
            let dists = graph_distances(&graph, &quals);
            for (qi, row) in dists.iter().enumerate() {
                for &qj in &quals[qi + 1..] {
                    total += 1;
                    let dv = row[qj as usize];
                    if dv == UNREACHABLE {
                        unreachable += 1;
                    } else if dv >= 1 {
                        pairs_at[(dv as usize - 1).min(3)] += 1;
                    }
                }
            }
        }
        let (frac_sd, frac_un) = if total > 0 {
            let within: u64 = pairs_at
                .iter()
                .take(s_d.min(3))
                .sum::<u64>();
            (
                Some(within as f64 / total as f64),
                Some(unreachable as f64 / total as f64),
            )
        } else {
            (None, None)
        };
        rows.push(ProbeRow {
            rho_esc: rho.to_f64_c(),
            n_vertices: graph.n_vertices,
            n_qualifying: quals.len(),
            pairs_at,
            pairs_unreachable: unreachable,
            frac_within_sd: frac_sd,
            frac_unreachable: frac_un,
        });
    }
    Ok(rows)
}
