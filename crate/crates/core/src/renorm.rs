//! Dyadic renormalization trees over the scales L_n = L0 * 6^n: proper
//! embeddings into Z^d (children at l-inf distances L_{n-k} and 2L_{n-k}),
//! exact embedding counts, spread-out verification, extraction of an
//! embedding from an annulus-crossing lattice path, leaf-capacity lower
//! bounds, frame capacities and the lattice Green-convolution sums.

use crate::capacity::{
    ball_green_integral, ball_volume, estimate_capacity_mc, green_coeff, CapacityEstimate,
    CapacityMethod, HitRegion,
};
use crate::error::{Error, Result};
use crate::geom::{lattice_dist_sq, lattice_linf, LatticePoint, PointT, MAX_DIM};
use crate::rng::RngSpec;
use crate::scalar::Scalar;
use crate::sim::SimParams;
use num_bigint::BigUint;
use rand::Rng;
use rayon::prelude::*;
use std::collections::HashMap;

// ---------------------------------------------------------------------------
// scales
// ---------------------------------------------------------------------------

/// The geometric scale ladder L_n = L0 * 6^n in exact integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScaleLadder {
    pub l0: i64,
}

impl ScaleLadder {
    pub fn new(l0: i64) -> Result<Self> {
        if l0 < 1 {
            return Err(Error::domain("L0 must be a positive integer"));
        }
        Ok(ScaleLadder { l0 })
    }

    pub fn level(&self, n: usize) -> i64 {
        self.l0
            .checked_mul(6i64.checked_pow(n as u32).expect("scale overflow"))
            .expect("scale overflow")
    }
}

// ---------------------------------------------------------------------------
// child offsets and embedding counts
// ---------------------------------------------------------------------------

/// Number of points of Z^d on the l-inf sphere of the given radius:
/// (2R+1)^d - (2R-1)^d.
pub fn count_sphere_linf(d: usize, radius: i64) -> u64 {
    assert!(radius >= 1 && d >= 1);
    let outer = (2 * radius + 1) as u128;
    let inner = (2 * radius - 1) as u128;
    (outer.pow(d as u32) - inner.pow(d as u32)) as u64
}

/// All z in Z^d with |z|_inf = radius, in lexicographic order.
pub fn enumerate_child_offsets(d: usize, radius: i64) -> Vec<LatticePoint> {
    assert!(radius >= 1 && d >= 1 && d <= MAX_DIM);
    let mut out = Vec::new();
    let mut z = [0i64; MAX_DIM];
    for i in 0..d {
        z[i] = -radius;
    }
    loop {
        if (0..d).map(|i| z[i].abs()).max().unwrap() == radius {
            out.push(z);
        }
        let mut axis = d;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            z[axis] += 1;
            if z[axis] <= radius {
                break;
            }
            z[axis] = -radius;
        }
    }
}

/// The per-internal-node choice count: offsets at l-inf distance L_{n-k}
/// and 2 L_{n-k} on the child lattice reduce to radii 6 and 12 in
/// renormalized units, independent of the level.
pub fn per_node_constant(d: usize) -> u64 {
    count_sphere_linf(d, 6) * count_sphere_linf(d, 12)
}

/// |Lambda_{n,x}| = C^(2^n - 1) with C the per-node constant, in exact
/// big-integer arithmetic.
pub fn count_embeddings(d: usize, n: usize) -> BigUint {
    let c = BigUint::from(per_node_constant(d));
    let internal = (BigUint::from(1u8) << n) - 1u8;
    // big exponent: repeated squaring via modpow is unavailable without a
    // modulus; n stays small in practice, so use pow on u64 exponent
    let e = internal.to_u64_digits();
    let exp = match e.len() {
        0 => 0u64,
        1 => e[0],
        _ => panic!("embedding count exponent too large"),
    };
    c.pow(exp as u32)
}

// ---------------------------------------------------------------------------
// proper embeddings
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedTarget {
    FullLattice,
    /// The plane Z^2 x {0}^(d-2).
    Slab,
}

/// A proper embedding of the depth-n dyadic tree, heap-indexed: node 0 is
/// the root, node i has children 2i+1 (offset L_{n-k}) and 2i+2 (offset
/// 2 L_{n-k}).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProperEmbedding {
    pub d: usize,
    pub depth: usize,
    pub ladder: ScaleLadder,
    pub target: EmbedTarget,
    pub map: Vec<LatticePoint>,
}

impl ProperEmbedding {
    pub fn n_nodes(&self) -> usize {
        (1usize << (self.depth + 1)) - 1
    }

    pub fn root(&self) -> &LatticePoint {
        &self.map[0]
    }

    pub fn node_depth(i: usize) -> usize {
        (usize::BITS - 1 - (i + 1).leading_zeros()) as usize
    }

    pub fn leaves(&self) -> &[LatticePoint] {
        let first = (1usize << self.depth) - 1;
        &self.map[first..]
    }

    /// Lexical distance between two leaf positions (indices into
    /// `leaves()`): the number of generations since the paths diverged.
    pub fn lexical_distance(&self, a: usize, b: usize) -> usize {
        if a == b {
            return 0;
        }
        let diff = a ^ b;
        let highest = usize::BITS - 1 - diff.leading_zeros();
        highest as usize + 1
    }

    /// Exact audit of the defining distance and lattice constraints.
    pub fn verify_invariants(&self) -> bool {
        let n = self.depth;
        for (i, p) in self.map.iter().enumerate() {
            let k = Self::node_depth(i);
            let lat = self.ladder.level(n - k);
            if (0..self.d).any(|c| p[c] % lat != 0) {
                return false;
            }
            if let EmbedTarget::Slab = self.target {
                if (2..self.d).any(|c| p[c] != 0) {
                    return false;
                }
            }
            if k < n {
                let scale = self.ladder.level(n - k);
                let c1 = &self.map[2 * i + 1];
                let c2 = &self.map[2 * i + 2];
                if lattice_linf(c1, p, self.d) != scale {
                    return false;
                }
                if lattice_linf(c2, p, self.d) != 2 * scale {
                    return false;
                }
            }
        }
        true
    }
}

/// Uniform sample of a proper embedding: each child offset drawn uniformly
/// from the l-inf sphere at the required radius of the child lattice
/// (rejection from the cube, equivalent in law to enumerating offsets).
pub fn sample_embedding(
    d: usize,
    n: usize,
    ladder: ScaleLadder,
    root: LatticePoint,
    target: EmbedTarget,
    rng: &RngSpec,
) -> Result<ProperEmbedding> {
    let eff_d = match target {
        EmbedTarget::FullLattice => d,
        EmbedTarget::Slab => 2,
    };
    if eff_d > d {
        return Err(Error::domain("slab target needs d >= 2"));
    }
    let l_n = ladder.level(n);
    if (0..d).any(|c| root[c] % l_n != 0) {
        return Err(Error::domain("root must lie on the level-n lattice"));
    }
    if let EmbedTarget::Slab = target {
        if (2..d).any(|c| root[c] != 0) {
            return Err(Error::domain("slab root must lie in the plane"));
        }
    }
    let mut r = rng.stream(crate::rng::labels::EMBEDDING);
    let mut map = vec![[0i64; MAX_DIM]; (1 << (n + 1)) - 1];
    map[0] = root;
    let draw_offset = |radius: i64, r: &mut rand_chacha::ChaCha12Rng| -> LatticePoint {
        loop {
            let mut z = [0i64; MAX_DIM];
            for c in z.iter_mut().take(eff_d) {
                *c = r.random_range(-radius..=radius);
            }
            if (0..eff_d).map(|i| z[i].abs()).max().unwrap() == radius {
                return z;
            }
        }
    };
    for i in 0..(1usize << n) - 1 {
        let k = ProperEmbedding::node_depth(i);
        let child_lat = ladder.level(n - k - 1);
        for (slot, radius) in [(2 * i + 1, 6i64), (2 * i + 2, 12i64)] {
            let w = draw_offset(radius, &mut r);
            let mut child = map[i];
            for c in 0..eff_d {
                child[c] += child_lat * w[c];
            }
            map[slot] = child;
        }
    }
    Ok(ProperEmbedding {
        d,
        depth: n,
        ladder,
        target,
        map,
    })
}

/// Verify the spread-out property: for every pair of leaves at lexical
/// distance k, any points y, z in the l-inf spheres of radius L0 - 1
/// around them satisfy |y - z| >= L_{k-1}. Checked in exact integer
/// arithmetic via the per-coordinate box gap (a lower bound on the
/// minimal sphere-to-sphere distance).
pub fn verify_spreadout(e: &ProperEmbedding) -> bool {
    let n = e.depth;
    if n == 0 {
        return true;
    }
    let leaves = e.leaves();
    let shell = 2 * (e.ladder.l0 - 1);
    for a in 0..leaves.len() {
        for b in a + 1..leaves.len() {
            let k = e.lexical_distance(a, b);
            let need = e.ladder.level(k - 1) as i128;
            let mut gap_sq: i128 = 0;
            for c in 0..e.d {
                let g = (leaves[a][c] - leaves[b][c]).abs() - shell;
                if g > 0 {
                    gap_sq += (g as i128) * (g as i128);
                }
            }
            if gap_sq < need * need {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// embedding extraction from an annulus-crossing path
// ---------------------------------------------------------------------------

fn path_min_max_linf(path: &[LatticePoint], c: &LatticePoint, d: usize) -> (i64, i64) {
    let mut mn = i64::MAX;
    let mut mx = i64::MIN;
    for p in path {
        let v = lattice_linf(p, c, d);
        mn = mn.min(v);
        mx = mx.max(v);
    }
    (mn, mx)
}

/// Whether the path meets the l-inf sphere S(c, radius). For a *-path this
/// follows from reaching both sides, since the l-inf distance changes by
/// at most one per step.
fn path_meets_sphere(path: &[LatticePoint], c: &LatticePoint, radius: i64, d: usize) -> bool {
    let (mn, mx) = path_min_max_linf(path, c, d);
    mn <= radius && radius <= mx
}

struct Extractor<'a> {
    path: &'a [LatticePoint],
    d: usize,
    ladder: ScaleLadder,
    offsets6: Vec<LatticePoint>,
    offsets12: Vec<LatticePoint>,
    memo: HashMap<(usize, LatticePoint), Option<Vec<LatticePoint>>>,
}

impl Extractor<'_> {
    /// Subtree map (heap order) rooted at `center` with `level` remaining
    /// generations, such that the path meets every leaf sphere.
    fn solve(&mut self, level: usize, center: LatticePoint) -> Option<Vec<LatticePoint>> {
        if let Some(hit) = self.memo.get(&(level, center)) {
            return hit.clone();
        }
        let result = self.solve_inner(level, center);
        self.memo.insert((level, center), result.clone());
        result
    }

    fn solve_inner(&mut self, level: usize, center: LatticePoint) -> Option<Vec<LatticePoint>> {
        if level == 0 {
            let l0 = self.ladder.l0;
            return if path_meets_sphere(self.path, &center, l0 - 1, self.d) {
                Some(vec![center])
            } else {
                None
            };
        }
        let child_lat = self.ladder.level(level - 1);
        // feasibility of a candidate child at scale level-1: the path
        // must come within L_{level-1} - 1 of it and reach 2 L_{level-1}
        let (r_in, r_out) = if level - 1 == 0 {
            (self.ladder.l0 - 1, self.ladder.l0 - 1)
        } else {
            (child_lat - 1, 2 * child_lat)
        };
        let feasible = |path: &[LatticePoint], c: &LatticePoint, d: usize| {
            let (mn, mx) = path_min_max_linf(path, c, d);
            mn <= r_in && mx >= r_out
        };
        let candidates = |offsets: &[LatticePoint], center: &LatticePoint, d: usize| {
            offsets
                .iter()
                .map(|w| {
                    let mut c = *center;
                    for i in 0..d {
                        c[i] += child_lat * w[i];
                    }
                    c
                })
                .collect::<Vec<_>>()
        };
        let cands1 = candidates(&self.offsets6, &center, self.d);
        let cands2 = candidates(&self.offsets12, &center, self.d);
        for c1 in &cands1 {
            if !feasible(self.path, c1, self.d) {
                continue;
            }
            let Some(sub1) = self.solve(level - 1, *c1) else {
                continue;
            };
            for c2 in &cands2 {
                if !feasible(self.path, c2, self.d) {
                    continue;
                }
                let Some(sub2) = self.solve(level - 1, *c2) else {
                    continue;
                };
                // assemble heap order: root, then interleave by depth
                let mut map = vec![center];
                let sub_n = (1usize << level) - 1;
                debug_assert_eq!(sub1.len(), sub_n);
                let mut width = 1usize;
                let mut offset = 0usize;
                while offset < sub_n {
                    map.extend_from_slice(&sub1[offset..offset + width]);
                    map.extend_from_slice(&sub2[offset..offset + width]);
                    offset += width;
                    width *= 2;
                }
                return Some(map);
            }
        }
        None
    }
}

/// Extract a proper embedding whose leaf spheres all meet the given
/// *-path, which must cross the annulus S(root, L_n - 1) to S(root, 2 L_n).
/// The output is re-verified against the defining invariants and the leaf
/// condition before being returned.
pub fn extract_embedding_from_path(
    path: &[LatticePoint],
    root: LatticePoint,
    n: usize,
    ladder: ScaleLadder,
    d: usize,
) -> Result<ProperEmbedding> {
    crate::geom::check_dim(d).or_else(|_| {
        if d == 2 {
            Ok(())
        } else {
            Err(Error::domain("extraction supports d >= 2"))
        }
    })?;
    if path.is_empty() {
        return Err(Error::domain("empty path"));
    }
    // *-path sanity
    for w in path.windows(2) {
        if lattice_linf(&w[0], &w[1], d) > 1 {
            return Err(Error::domain("input is not a *-path"));
        }
    }
    let l_n = ladder.level(n);
    if !path_meets_sphere(path, &root, l_n - 1, d) || !path_meets_sphere(path, &root, 2 * l_n, d)
    {
        return Err(Error::domain(
            "path does not cross the annulus around the root",
        ));
    }
    let mut ex = Extractor {
        path,
        d,
        ladder,
        offsets6: enumerate_child_offsets(d, 6),
        offsets12: enumerate_child_offsets(d, 12),
        memo: HashMap::new(),
    };
    let map = ex
        .solve(n, root)
        .ok_or_else(|| Error::Extraction("no embedding found after exhaustive backtracking".into()))?;
    let embedding = ProperEmbedding {
        d,
        depth: n,
        ladder,
        target: EmbedTarget::FullLattice,
        map,
    };
    // post-verification is part of the contract
    if !embedding.verify_invariants() {
        return Err(Error::Extraction(
            "extracted embedding violates the distance invariants".into(),
        ));
    }
    for leaf in embedding.leaves() {
        if !path_meets_sphere(path, leaf, ladder.l0 - 1, d) {
            return Err(Error::Extraction(
                "extracted embedding misses a leaf sphere".into(),
            ));
        }
    }
    Ok(embedding)
}

// ---------------------------------------------------------------------------
// leaf-capacity lower bound
// ---------------------------------------------------------------------------

/// Variational lower bound on cap(union of unit balls at the leaves) via
/// the explicit Green sum over leaves with exact pairwise lattice
/// distances: Volume / sup-energy, the energy evaluated at leaf centers
/// with the analytic self-ball term.
pub fn embedding_capacity_lb<F: Scalar>(e: &ProperEmbedding) -> Result<CapacityEstimate<F>> {
    let d = e.d;
    crate::geom::check_dim(d)?;
    if e.ladder.l0 != 1 {
        return Err(Error::domain("leaf-capacity bound is pinned to L0 = 1"));
    }
    let leaves = e.leaves();
    // disjointness audit: leaf separation is at least 6 for proper
    // embeddings, so unit balls never overlap
    for a in 0..leaves.len() {
        for b in a + 1..leaves.len() {
            if lattice_dist_sq(&leaves[a], &leaves[b], d) < 4 {
                return Err(Error::domain("overlapping leaf balls"));
            }
        }
    }
    let vol = ball_volume(d);
    let cd = green_coeff(d);
    let self_term = ball_green_integral(d, 1.0);
    let mut sup_energy = f64::NEG_INFINITY;
    for a in 0..leaves.len() {
        let mut acc = self_term;
        for b in 0..leaves.len() {
            if a == b {
                continue;
            }
            let dist = (lattice_dist_sq(&leaves[a], &leaves[b], d) as f64).sqrt();
            acc += vol * cd * dist.powi(2 - d as i32);
        }
        sup_energy = sup_energy.max(acc);
    }
    let value = vol * leaves.len() as f64 / sup_energy;
    Ok(CapacityEstimate {
        value: F::from_f64_c(value),
        std_error: F::zero(),
        n_walkers: 0,
        method: CapacityMethod::GridLower,
        bias_bound: F::zero(),
    })
}

// ---------------------------------------------------------------------------
// frame capacity
// ---------------------------------------------------------------------------

/// The beta-sausage of the discrete square frame S2(0, L) (lattice points
/// of the first-two-coordinates plane at l-inf distance exactly L),
/// embedded in R^d. The distance to the nearest frame lattice point is
/// exact via per-edge closed forms.
#[derive(Debug, Clone, Copy)]
pub struct FrameRegion<F> {
    pub d: usize,
    pub l: i64,
    pub beta: F,
}

impl<F: Scalar> FrameRegion<F> {
    pub fn new(d: usize, l: i64) -> Result<Self> {
        crate::geom::check_dim(d)?;
        let (beta, _) = crate::geom::model_constants::<F>(d)?;
        if F::from_f64_c(l as f64) <= F::from_f64_c(3.0) * beta {
            return Err(Error::domain("frame side must exceed 3 beta"));
        }
        Ok(FrameRegion { d, l, beta })
    }

    /// Distance from p to the nearest lattice point of the frame.
    fn dist_to_frame_points(&self, p: &PointT<F>) -> F {
        let l = self.l as f64;
        let mut tail = F::zero();
        for i in 2..self.d {
            tail += p.coord(i) * p.coord(i);
        }
        let (x, y) = (p.coord(0).to_f64_c(), p.coord(1).to_f64_c());
        let mut best = f64::INFINITY;
        // four edges: clamp-and-round to the nearest lattice point
        for (fixed, along) in [(x, y), (y, x)] {
            for sign in [-1.0, 1.0] {
                let q_along = along.round().clamp(-l, l);
                let dx = fixed - sign * l;
                let dy = along - q_along;
                best = best.min(dx * dx + dy * dy);
            }
        }
        (F::from_f64_c(best) + tail).sqrt()
    }
}

impl<F: Scalar> HitRegion<F> for FrameRegion<F> {
    fn dim(&self) -> usize {
        self.d
    }

    fn center(&self) -> PointT<F> {
        PointT::zero(self.d)
    }

    fn circumradius(&self) -> F {
        let l = F::from_f64_c(self.l as f64);
        l * F::from_f64_c(2.0f64.sqrt()) + self.beta
    }

    fn dist_lower(&self, p: &PointT<F>) -> F {
        (self.dist_to_frame_points(p) - self.beta).max(F::zero())
    }
}

/// Monte Carlo capacity of the inflated frame B(S2(0, L), beta).
pub fn frame_capacity<F: Scalar>(
    d: usize,
    l: i64,
    n_walkers: u64,
    rng: &RngSpec,
) -> Result<CapacityEstimate<F>> {
    let region = FrameRegion::<F>::new(d, l)?;
    let circ = region.circumradius();
    let mut sim = SimParams::for_region(d, circ, region.beta);
    // resolve the beta tube finely enough
    let sigma = region.beta / F::from_f64_c(20.0);
    sim = sim.with_step(sigma * sigma / F::from_f64_c(d as f64), d);
    estimate_capacity_mc(&region, &sim, n_walkers, rng)
}

// ---------------------------------------------------------------------------
// lattice convolution sums
// ---------------------------------------------------------------------------

fn t_lut(d: usize, max_sq: usize) -> Vec<f64> {
    let exp = (2.0 - d as f64) / 2.0;
    let mut lut = vec![0.0; max_sq + 1];
    lut[0] = 1.0;
    for (s, v) in lut.iter_mut().enumerate().skip(1) {
        *v = (s as f64).powf(exp).min(1.0);
    }
    lut
}

/// Counts of squared norms over the cube [-b, b]^k:
/// counts[s] = #{w : |w|^2 = s}, exact in u64.
fn box_norm_counts(k: usize, b: i64) -> Vec<u64> {
    let max_sq = (k as i64 * b * b) as usize;
    let mut counts = vec![0u64; max_sq + 1];
    counts[0] = 1;
    for _ in 0..k {
        let mut next = vec![0u64; max_sq + 1];
        for (s, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for j in -b..=b {
                let ns = s + (j * j) as usize;
                if ns <= max_sq {
                    next[ns] += c;
                }
            }
        }
        counts = next;
    }
    counts
}

/// Exact truncated convolution sum over (x_1 .. x_n) in the cube
/// [-box_cut, box_cut]^d of prod_{i=0..n} min(1, |x_i - x_{i+1}|^(2-d))
/// with x_0 = 0 and x_{n+1} = x. No sampling; n = 0 returns the single
/// factor, n = 1 uses a norm-count reduction when x lies on an axis,
/// higher n enumerates directly under a work guard.
pub fn lattice_convolution(d: usize, n: usize, x: LatticePoint, box_cut: i64) -> Result<f64> {
    crate::geom::check_dim(d)?;
    if box_cut < 1 && n > 0 {
        return Err(Error::domain("box cut must be positive"));
    }
    let t_of = |dist_sq: i128, lut: &[f64]| -> f64 { lut[dist_sq as usize] };
    if n == 0 {
        let s = lattice_dist_sq(&[0; MAX_DIM], &x, d);
        let lut = t_lut(d, s as usize);
        return Ok(t_of(s, &lut));
    }

    // fast exact path: n = 1 with x on a coordinate axis
    let axis = (0..d).filter(|&i| x[i] != 0).collect::<Vec<_>>();
    if n == 1 && axis.len() <= 1 {
        let xv = if axis.is_empty() { 0 } else { x[axis[0]].abs() };
        let b = box_cut;
        let counts = box_norm_counts(d - 1, b);
        let max_sq = ((d as i64) * b * b + xv * xv + 2 * b * xv) as usize + 1;
        let lut = t_lut(d, max_sq);
        let mut total = 0.0f64;
        for z1 in -b..=b {
            let a_sq = (z1 * z1) as usize;
            let c_sq = ((z1 - xv) * (z1 - xv)) as usize;
            let mut inner = 0.0f64;
            for (s, &cnt) in counts.iter().enumerate() {
                if cnt == 0 {
                    continue;
                }
                inner += cnt as f64 * lut[a_sq + s] * lut[c_sq + s];
            }
            total += inner;
        }
        return Ok(total);
    }

    // direct enumeration with a work guard
    let b = box_cut;
    let per_var = (2 * b + 1) as u128;
    let work = per_var.pow((d * n) as u32);
    if work > 2_000_000_000_000u128 {
        return Err(Error::config(format!(
            "convolution enumeration of {work} terms exceeds the work guard"
        )));
    }
    let x_inf = lattice_linf(&x, &[0; MAX_DIM], d);
    let max_sq = ((d as i64) * (4 * b * b + 4 * b * x_inf + x_inf * x_inf)) as usize + 16;
    let lut = t_lut(d, max_sq);

    // recursive odometer over the n intermediate points; parallel over the
    // first coordinate of x_1
    let total: f64 = (-b..=b)
        .into_par_iter()
        .map(|first| {
            let mut pts = vec![[0i64; MAX_DIM]; n];
            pts[0][0] = first;
            sum_over_rest(d, n, b, &x, &mut pts, 0, 1, &lut)
        })
        .sum();
    Ok(total)
}

/// Sum over the remaining free coordinates (var index, coord index) of the
/// product of LUT factors.
fn sum_over_rest(
    d: usize,
    n: usize,
    b: i64,
    x: &LatticePoint,
    pts: &mut Vec<LatticePoint>,
    var: usize,
    coord: usize,
    lut: &[f64],
) -> f64 {
    if var == n {
        let zero = [0i64; MAX_DIM];
        let mut prod = lut[lattice_dist_sq(&zero, &pts[0], d) as usize];
        for w in 0..n - 1 {
            prod *= lut[lattice_dist_sq(&pts[w], &pts[w + 1], d) as usize];
            if prod == 0.0 {
                return 0.0;
            }
        }
        prod *= lut[lattice_dist_sq(&pts[n - 1], x, d) as usize];
        return prod;
    }
    let (next_var, next_coord) = if coord + 1 == d {
        (var + 1, 0)
    } else {
        (var, coord + 1)
    };
    let mut acc = 0.0;
    for v in -b..=b {
        pts[var][coord] = v;
        acc += sum_over_rest(d, n, b, x, pts, next_var, next_coord, lut);
    }
    pts[var][coord] = 0;
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_counts() {
        assert_eq!(count_sphere_linf(2, 6), 48);
        assert_eq!(count_sphere_linf(2, 1), 8);
        assert_eq!(count_sphere_linf(3, 6), 866);
        // enumeration agrees exactly
        assert_eq!(enumerate_child_offsets(2, 6).len(), 48);
        assert_eq!(enumerate_child_offsets(3, 6).len(), 866);
        assert_eq!(enumerate_child_offsets(3, 12).len(), 3458);
        assert_eq!(enumerate_child_offsets(2, 1).len(), 8);
    }

    #[test]
    fn per_node_constants_match_enumeration() {
        assert_eq!(per_node_constant(2), 4608);
        assert_eq!(per_node_constant(3), 2_994_628);
    }

    #[test]
    fn embedding_counts_exact() {
        assert_eq!(count_embeddings(2, 0), BigUint::from(1u8));
        assert_eq!(count_embeddings(2, 1), BigUint::from(4608u64));
        let c = BigUint::from(4608u64);
        assert_eq!(count_embeddings(2, 2), c.pow(3));
        assert_eq!(
            count_embeddings(3, 1),
            BigUint::from(2_994_628u64)
        );
    }

    #[test]
    fn depth1_bruteforce_count_at_raw_scale() {
        // enumerate all depth-1 embeddings directly at raw scale and check
        // each against the invariants (dual computation for n = 1)
        let ladder = ScaleLadder::new(3).unwrap();
        let d = 2;
        let root = [0i64; MAX_DIM];
        let mut count = 0u64;
        for w1 in enumerate_child_offsets(d, 6) {
            for w2 in enumerate_child_offsets(d, 12) {
                let mut map = vec![root; 3];
                for c in 0..d {
                    map[1][c] = root[c] + ladder.level(0) * w1[c];
                    map[2][c] = root[c] + ladder.level(0) * w2[c];
                }
                let e = ProperEmbedding {
                    d,
                    depth: 1,
                    ladder,
                    target: EmbedTarget::FullLattice,
                    map,
                };
                assert!(e.verify_invariants());
                count += 1;
            }
        }
        assert_eq!(BigUint::from(count), count_embeddings(d, 1));
    }

    #[test]
    fn sampled_embeddings_satisfy_invariants_and_spreadout() {
        for d in [2usize, 3] {
            for n in 1..=4usize {
                for rep in 0..50u64 {
                    let ladder = ScaleLadder::new(2).unwrap();
                    let e = sample_embedding(
                        d,
                        n,
                        ladder,
                        [0; MAX_DIM],
                        EmbedTarget::FullLattice,
                        &RngSpec::new(1000 + rep, (d * 10 + n) as u64),
                    )
                    .unwrap();
                    assert!(e.verify_invariants(), "d={d} n={n} rep={rep}");
                    assert!(verify_spreadout(&e), "d={d} n={n} rep={rep}");
                }
            }
        }
    }

    #[test]
    fn slab_embeddings_stay_planar() {
        let ladder = ScaleLadder::new(4).unwrap();
        let e = sample_embedding(
            5,
            3,
            ladder,
            [0; MAX_DIM],
            EmbedTarget::Slab,
            &RngSpec::new(7, 7),
        )
        .unwrap();
        assert!(e.verify_invariants());
        for p in &e.map {
            for c in 2..5 {
                assert_eq!(p[c], 0);
            }
        }
    }

    #[test]
    fn corrupted_embedding_fails_audit() {
        let ladder = ScaleLadder::new(2).unwrap();
        let mut e = sample_embedding(
            2,
            2,
            ladder,
            [0; MAX_DIM],
            EmbedTarget::FullLattice,
            &RngSpec::new(3, 3),
        )
        .unwrap();
        // shift child 1 of the root off the required distance
        e.map[1][0] += ladder.level(1);
        assert!(!e.verify_invariants());
    }

    #[test]
    fn leaf_counts_by_lexical_distance() {
        let ladder = ScaleLadder::new(1).unwrap();
        for n in 1..=4usize {
            let e = sample_embedding(
                2,
                n,
                ladder,
                [0; MAX_DIM],
                EmbedTarget::FullLattice,
                &RngSpec::new(9, n as u64),
            )
            .unwrap();
            let leaves = e.leaves().len();
            for m in 0..leaves {
                let mut by_k = vec![0usize; n + 1];
                for m2 in 0..leaves {
                    if m2 != m {
                        by_k[e.lexical_distance(m, m2)] += 1;
                    }
                }
                for k in 1..=n {
                    assert_eq!(by_k[k], 1 << (k - 1), "n={n} m={m} k={k}");
                }
            }
        }
    }

    #[test]
    fn extraction_from_straight_axis_path() {
        // straight axis path crossing the annulus, d = 2, n = 1, L0 = 1
        let ladder = ScaleLadder::new(1).unwrap();
        let l1 = ladder.level(1);
        let path: Vec<LatticePoint> = (0..=2 * l1 + 1)
            .map(|k| {
                let mut p = [0i64; MAX_DIM];
                p[0] = k;
                p
            })
            .collect();
        let e = extract_embedding_from_path(&path, [0; MAX_DIM], 1, ladder, 2).unwrap();
        assert!(e.verify_invariants());
        for leaf in e.leaves() {
            assert!(path_meets_sphere(&path, leaf, 0, 2));
        }
        // non-crossing path is a precondition error
        let short: Vec<LatticePoint> = path[..3].to_vec();
        assert!(extract_embedding_from_path(&short, [0; MAX_DIM], 1, ladder, 2).is_err());
    }

    #[test]
    fn leaf_capacity_bound_single_ball() {
        // n = 0: a single unit ball; the Green-sum bound equals
        // Volume / int_{B(0,1)} g(0,.) = (2/3) cap(B(0,1)) in d = 3
        let ladder = ScaleLadder::new(1).unwrap();
        let e = ProperEmbedding {
            d: 3,
            depth: 0,
            ladder,
            target: EmbedTarget::FullLattice,
            map: vec![[0; MAX_DIM]],
        };
        let lb = embedding_capacity_lb::<f64>(&e).unwrap();
        let cap = 2.0 * std::f64::consts::PI;
        let ratio = lb.value / cap;
        assert!((ratio - 2.0 / 3.0).abs() < 1e-9, "ratio {ratio}");
        assert!(lb.value <= cap);
    }

    #[test]
    fn leaf_capacity_bound_scales_like_leaf_count() {
        let ladder = ScaleLadder::new(1).unwrap();
        let mut ratios = Vec::new();
        for n in 1..=4usize {
            let e = sample_embedding(
                3,
                n,
                ladder,
                [0; MAX_DIM],
                EmbedTarget::FullLattice,
                &RngSpec::new(4242, n as u64),
            )
            .unwrap();
            let lb = embedding_capacity_lb::<f64>(&e).unwrap();
            let per_leaf = lb.value / (1u64 << n) as f64;
            assert!(lb.value > 0.0);
            ratios.push(per_leaf);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        for r in &ratios {
            assert!(
                (r - mean).abs() / mean < 0.30,
                "per-leaf bound unstable: {ratios:?}"
            );
        }
        // monotone in n for nested constructions: more leaves, more
        // capacity (bound grows with the leaf count)
        let b1 = ratios[0] * 2.0;
        let b4 = ratios[3] * 16.0;
        assert!(b4 > b1);
    }

    #[test]
    fn frame_distance_is_exact() {
        let region = FrameRegion::<f64>::new(3, 32).unwrap();
        // brute force over all frame lattice points
        let mut frame_pts = Vec::new();
        for a in -32i64..=32 {
            for &(x, y) in &[(a, 32i64), (a, -32i64), (32i64, a), (-32i64, a)] {
                frame_pts.push((x, y));
            }
        }
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(21);
        for _ in 0..200 {
            let p = PointT::from_slice(&[
                rng.random::<f64>() * 90.0 - 45.0,
                rng.random::<f64>() * 90.0 - 45.0,
                rng.random::<f64>() * 20.0 - 10.0,
            ]);
            let mut best = f64::INFINITY;
            for &(x, y) in &frame_pts {
                let dx = p.coord(0) - x as f64;
                let dy = p.coord(1) - y as f64;
                let dz = p.coord(2);
                best = best.min((dx * dx + dy * dy + dz * dz).sqrt());
            }
            let got = region.dist_to_frame_points(&p);
            assert!((got - best).abs() < 1e-9, "{got} vs {best} at {p:?}");
        }
    }

    #[test]
    fn convolution_basics() {
        // n = 0: the single factor min(1, |x|^(2-d))
        let mut x = [0i64; MAX_DIM];
        x[0] = 3;
        let v = lattice_convolution(5, 0, x, 1).unwrap();
        assert!((v - 9f64.powf(-1.5)).abs() < 1e-12);
        let v0 = lattice_convolution(5, 0, [0; MAX_DIM], 1).unwrap();
        assert_eq!(v0, 1.0);
    }

    #[test]
    fn convolution_axis_reduction_matches_direct() {
        // the norm-count fast path must equal direct enumeration
        let mut x = [0i64; MAX_DIM];
        x[0] = 4;
        for d in [3usize, 5] {
            for b in [2i64, 4] {
                let fast = lattice_convolution(d, 1, x, b).unwrap();
                // direct: odometer over one point
                let zero = [0i64; MAX_DIM];
                let mut direct = 0.0;
                let mut z = [0i64; MAX_DIM];
                for i in 0..d {
                    z[i] = -b;
                }
                loop {
                    let t1 = {
                        let s = lattice_dist_sq(&zero, &z, d) as f64;
                        if s == 0.0 {
                            1.0
                        } else {
                            s.powf((2.0 - d as f64) / 2.0).min(1.0)
                        }
                    };
                    let t2 = {
                        let s = lattice_dist_sq(&z, &x, d) as f64;
                        if s == 0.0 {
                            1.0
                        } else {
                            s.powf((2.0 - d as f64) / 2.0).min(1.0)
                        }
                    };
                    direct += t1 * t2;
                    let mut axis = d;
                    let mut done = false;
                    loop {
                        if axis == 0 {
                            done = true;
                            break;
                        }
                        axis -= 1;
                        z[axis] += 1;
                        if z[axis] <= b {
                            break;
                        }
                        z[axis] = -b;
                    }
                    if done {
                        break;
                    }
                }
                assert!(
                    (fast - direct).abs() < 1e-9 * direct.max(1.0),
                    "d={d} b={b}: fast {fast} direct {direct}"
                );
            }
        }
    }

    #[test]
    fn convolution_lattice_symmetry() {
        // x on an axis equals the same sum with x along another axis
        let mut x1 = [0i64; MAX_DIM];
        x1[0] = 5;
        let mut x2 = [0i64; MAX_DIM];
        x2[2] = -5;
        let a = lattice_convolution(5, 1, x1, 3).unwrap();
        let b = lattice_convolution(5, 1, x2, 3).unwrap();
        assert!((a - b).abs() < 1e-9 * a);
    }
}
