//! Spatial acceleration: a uniform hash grid over path segments and a
//! pyramid of coarser mark grids for far-field distance lower bounds.
//! These back the sausage-graph broad phase and Monte Carlo hit testing.

use crate::geom::{PointT, MAX_DIM};
use crate::scalar::Scalar;
use std::collections::{HashMap, HashSet};
use std::hash::{BuildHasherDefault, Hasher};

/// Cell key in a uniform grid (unused dimensions stay 0).
pub type CellKey = [i32; MAX_DIM];

/// Cheap multiply-xor hasher for fixed-size integer keys.
#[derive(Default)]
pub struct CellHasher(u64);

impl Hasher for CellHasher {
    fn write(&mut self, bytes: &[u8]) {
        for chunk in bytes.chunks(8) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            let v = u64::from_le_bytes(buf);
            self.0 = (self.0 ^ v).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            self.0 ^= self.0 >> 29;
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

pub type CellMap<V> = HashMap<CellKey, V, BuildHasherDefault<CellHasher>>;
pub type CellSet = HashSet<CellKey, BuildHasherDefault<CellHasher>>;

#[inline]
pub fn cell_of<F: Scalar>(p: &PointT<F>, inv_cell: F) -> CellKey {
    let mut key = [0i32; MAX_DIM];
    for i in 0..p.dim() {
        key[i] = (p.coord(i) * inv_cell).floor().to_f64_c() as i32;
    }
    key
}

/// Distance from a point to the axis cube `[key*cell, (key+1)*cell]`.
#[inline]
pub fn point_cube_dist_sq<F: Scalar>(p: &PointT<F>, key: &CellKey, cell: F) -> F {
    let mut acc = F::zero();
    for i in 0..p.dim() {
        let lo = F::from_f64_c(key[i] as f64) * cell;
        let hi = lo + cell;
        let c = p.coord(i);
        let e = (lo - c).max(c - hi).max(F::zero());
        acc += e * e;
    }
    acc
}

/// Iterate over the integer cell box covering the continuous AABB
/// [lo, hi] at the given cell size.
fn for_each_cell_in_box<F: Scalar>(
    dim: usize,
    lo: &[F],
    hi: &[F],
    cell: F,
    mut f: impl FnMut(&CellKey),
) {
    let inv = F::one() / cell;
    let mut lo_c = [0i64; MAX_DIM];
    let mut hi_c = [0i64; MAX_DIM];
    for i in 0..dim {
        lo_c[i] = (lo[i] * inv).floor().to_f64_c() as i64;
        hi_c[i] = (hi[i] * inv).floor().to_f64_c() as i64;
    }
    let mut key = [0i32; MAX_DIM];
    for i in 0..dim {
        key[i] = lo_c[i] as i32;
    }
    loop {
        f(&key);
        let mut axis = 0;
        loop {
            if axis == dim {
                return;
            }
            key[axis] += 1;
            if i64::from(key[axis]) <= hi_c[axis] {
                break;
            }
            key[axis] = lo_c[axis] as i32;
            axis += 1;
        }
    }
}

/// Polyline segments indexed by a uniform hash grid.
///
/// Each segment is inserted into every cell overlapping its axis-aligned
/// bounding box padded by `reach`. Consequently, if a query point's cell is
/// unlisted, every segment is farther than `reach` from the whole cell.
pub struct SegmentSet<F> {
    pub cell: F,
    pub reach: F,
    segments: Vec<(PointT<F>, PointT<F>, u32)>,
    grid: CellMap<Vec<u32>>,
}

impl<F: Scalar> SegmentSet<F> {
    pub fn new(cell: F, reach: F) -> Self {
        assert!(cell > F::zero() && reach >= F::zero());
        SegmentSet {
            cell,
            reach,
            segments: Vec::new(),
            grid: CellMap::default(),
        }
    }

    pub fn n_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn segment(&self, id: u32) -> &(PointT<F>, PointT<F>, u32) {
        &self.segments[id as usize]
    }

    pub fn insert(&mut self, a: PointT<F>, b: PointT<F>, owner: u32) {
        let idx = self.segments.len() as u32;
        self.segments.push((a, b, owner));
        let d = a.dim();
        let mut lo = [F::zero(); MAX_DIM];
        let mut hi = [F::zero(); MAX_DIM];
        for i in 0..d {
            lo[i] = a.coord(i).min(b.coord(i)) - self.reach;
            hi[i] = a.coord(i).max(b.coord(i)) + self.reach;
        }
        let grid = &mut self.grid;
        for_each_cell_in_box(d, &lo[..d], &hi[..d], self.cell, |key| {
            grid.entry(*key).or_default().push(idx);
        });
    }

    /// Candidate segment ids for the query point's cell.
    pub fn candidates(&self, p: &PointT<F>) -> Option<&[u32]> {
        let key = cell_of(p, F::one() / self.cell);
        self.grid.get(&key).map(|v| v.as_slice())
    }

    /// Exact distance from p to the nearest listed segment; None when the
    /// cell is unlisted (true distance then exceeds `reach`).
    pub fn listed_distance(&self, p: &PointT<F>) -> Option<F> {
        let ids = self.candidates(p)?;
        let mut best = F::infinity();
        for &id in ids {
            let (a, b, _) = &self.segments[id as usize];
            best = best.min(crate::geom::point_segment_dist_sq(p, a, b));
        }
        Some(best.sqrt())
    }

    /// Visit every cell's candidate list (broad phase for pair finding).
    pub fn for_each_bucket(&self, mut f: impl FnMut(&[u32])) {
        for v in self.grid.values() {
            f(v);
        }
    }
}

/// A coarse occupancy grid carrying a clearance certificate: if a query
/// point's cell is unmarked, the target set is farther than `clear_bound`.
pub struct MarkGrid<F> {
    pub cell: F,
    pub clear_bound: F,
    set: CellSet,
}

impl<F: Scalar> MarkGrid<F> {
    pub fn new(cell: F, clear_bound: F) -> Self {
        MarkGrid {
            cell,
            clear_bound,
            set: CellSet::default(),
        }
    }

    /// Mark all cells overlapping the continuous box [lo, hi].
    pub fn mark_box(&mut self, dim: usize, lo: &[F], hi: &[F]) {
        let set = &mut self.set;
        for_each_cell_in_box(dim, lo, hi, self.cell, |key| {
            set.insert(*key);
        });
    }

    pub fn is_marked(&self, p: &PointT<F>) -> bool {
        self.set.contains(&cell_of(p, F::one() / self.cell))
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }
}

/// Decimated points along a polyline family, indexed for distance lower
/// bounds at every range: the finest level stores candidate lists for
/// exact evaluation, coarser levels store one precomputed conservative
/// bound per bucket (O(1) queries), and unlisted buckets certify
/// clearance equal to the level reach.
pub struct LandmarkIndex<F> {
    /// max distance from a polyline point to its nearest landmark
    pub slack: F,
    landmarks: Vec<PointT<F>>,
    fine_cell: F,
    fine_reach: F,
    fine: CellMap<Vec<u32>>,
    /// (cell, reach, per-bucket lower bound on dist(cube, landmarks))
    coarse: Vec<(F, F, CellMap<F>)>,
}

impl<F: Scalar> LandmarkIndex<F> {
    /// Build with landmark spacing `delta` along the polylines; levels use
    /// cells base, 4*base, 16*base.
    pub fn build(polylines: &[Vec<PointT<F>>], delta: F, base: F) -> Self {
        let mut landmarks: Vec<PointT<F>> = Vec::new();
        let mut dim = 1;
        for poly in polylines {
            if poly.is_empty() {
                continue;
            }
            dim = poly[0].dim();
            landmarks.push(poly[0]);
            let mut since = F::zero();
            for w in poly.windows(2) {
                let len = w[0].dist(&w[1]);
                since += len;
                if since >= delta {
                    landmarks.push(w[1]);
                    since = F::zero();
                }
            }
            landmarks.push(*poly.last().unwrap());
        }
        let four = F::from_f64_c(4.0);
        let mut fine: CellMap<Vec<u32>> = CellMap::default();
        let mut coarse: Vec<(F, F, CellMap<F>)> = vec![
            (base * four, base * four, CellMap::default()),
            (base * four * four, base * four * four, CellMap::default()),
        ];
        for (id, lm) in landmarks.iter().enumerate() {
            let mut lo = [F::zero(); MAX_DIM];
            let mut hi = [F::zero(); MAX_DIM];
            for i in 0..dim {
                lo[i] = lm.coord(i) - base;
                hi[i] = lm.coord(i) + base;
            }
            for_each_cell_in_box(dim, &lo[..dim], &hi[..dim], base, |key| {
                fine.entry(*key).or_default().push(id as u32);
            });
            for (cell, reach, grid) in coarse.iter_mut() {
                for i in 0..dim {
                    lo[i] = lm.coord(i) - *reach;
                    hi[i] = lm.coord(i) + *reach;
                }
                let c = *cell;
                for_each_cell_in_box(dim, &lo[..dim], &hi[..dim], c, |key| {
                    let d2 = point_cube_dist_from_point(lm, key, c);
                    grid.entry(*key)
                        .and_modify(|v| *v = v.min(d2))
                        .or_insert(d2);
                });
            }
        }
        LandmarkIndex {
            slack: delta * F::from_f64_c(0.5),
            landmarks,
            fine_cell: base,
            fine_reach: base,
            fine,
            coarse,
        }
    }

    /// Lower bound on the distance from p to the polylines; never above
    /// the true distance, within `slack` of exact when the fine level has
    /// candidates.
    pub fn polyline_distance_lower(&self, p: &PointT<F>) -> F {
        let zero_floor = |v: F| v.max(F::zero());
        let mut bound = F::zero();
        match self.fine.get(&cell_of(p, F::one() / self.fine_cell)) {
            Some(ids) => {
                let mut best = F::infinity();
                for &id in ids {
                    best = best.min(p.dist_sq(&self.landmarks[id as usize]));
                }
                // candidates may all sit past the reach; the unlisted
                // certificate then caps the usable bound
                return zero_floor(best.sqrt().min(self.fine_reach) - self.slack);
            }
            None => bound = bound.max(zero_floor(self.fine_reach - self.slack)),
        }
        for (cell, reach, grid) in &self.coarse {
            match grid.get(&cell_of(p, F::one() / *cell)) {
                Some(&cube_bound) => {
                    bound = bound.max(zero_floor(cube_bound.min(*reach) - self.slack));
                }
                None => bound = bound.max(zero_floor(*reach - self.slack)),
            }
        }
        bound
    }
}

/// Distance from a landmark to the cube of `key` (side `cell`), i.e. the
/// certified clearance of every point of the cube from this landmark.
fn point_cube_dist_from_point<F: Scalar>(lm: &PointT<F>, key: &CellKey, cell: F) -> F {
    point_cube_dist_sq(lm, key, cell).sqrt()
}

/// Pyramid of mark grids with geometrically growing clearance bounds.
/// `lower_bound(p)` returns the largest clearance certified by an unmarked
/// level (zero when every level is marked near p).
pub struct MarkPyramid<F> {
    levels: Vec<MarkGrid<F>>, // finest first
}

impl<F: Scalar> MarkPyramid<F> {
    /// Build levels with cells `base_cell * 4^k` while the cell stays below
    /// `max_extent`. Marking is done by the caller via `mark_segment_box`.
    pub fn new(base_cell: F, max_extent: F) -> Self {
        let four = F::from_f64_c(4.0);
        let two = F::from_f64_c(2.0);
        let mut levels = Vec::new();
        let mut cell = base_cell * four;
        while cell < max_extent && levels.len() < 8 {
            levels.push(MarkGrid::new(cell, two * cell));
            cell = cell * four;
        }
        if levels.is_empty() {
            levels.push(MarkGrid::new(base_cell * four, two * base_cell * four));
        }
        MarkPyramid { levels }
    }

    /// Mark the AABB of [a, b] padded by `radius + clear_bound` on every
    /// level, preserving each level's clearance certificate for the
    /// radius-sausage of the segment.
    pub fn mark_segment(&mut self, a: &PointT<F>, b: &PointT<F>, radius: F) {
        let d = a.dim();
        for level in &mut self.levels {
            let pad = radius + level.clear_bound;
            let mut lo = [F::zero(); MAX_DIM];
            let mut hi = [F::zero(); MAX_DIM];
            for i in 0..d {
                lo[i] = a.coord(i).min(b.coord(i)) - pad;
                hi[i] = a.coord(i).max(b.coord(i)) + pad;
            }
            level.mark_box(d, &lo[..d], &hi[..d]);
        }
    }

    /// Same marking for an axis cube (used by voxel regions).
    pub fn mark_cube(&mut self, dim: usize, cube_lo: &[F], cube_hi: &[F]) {
        for level in &mut self.levels {
            let pad = level.clear_bound;
            let mut lo = [F::zero(); MAX_DIM];
            let mut hi = [F::zero(); MAX_DIM];
            for i in 0..dim {
                lo[i] = cube_lo[i] - pad;
                hi[i] = cube_hi[i] + pad;
            }
            level.mark_box(dim, &lo[..dim], &hi[..dim]);
        }
    }

    pub fn lower_bound(&self, p: &PointT<F>) -> F {
        // coarsest levels certify the largest clearance
        for level in self.levels.iter().rev() {
            if !level.is_marked(p) {
                return level.clear_bound;
            }
        }
        F::zero()
    }
}
