//! Vacant-set percolation experiments: occupancy grids rasterized from
//! window samples, annulus/lattice/slab crossing events evaluated by two
//! independent connectivity implementations, coupled threshold scans and
//! the radius scaling check.

use crate::error::{Error, Result};
use crate::geom::{lattice_round_int, BoxRegion, LatticePoint, Norm, PointT, MAX_DIM};
use crate::interlacement::{
    sample_window_with_cap, window_capacity, WindowSample,
};
use crate::rng::RngSpec;
use crate::scalar::Scalar;
use crate::sim::SimParams;
use crate::stats::{binomial_ci95, interpolate_crossing};
use rayon::prelude::*;

// ---------------------------------------------------------------------------
// occupancy grids
// ---------------------------------------------------------------------------

/// A bit grid over an axis box: cell c covers origin + [c, c+1) * spacing,
/// occupied when the cell center lies within the sausage radius of a kept
/// path point (points are placed along every segment at spacing/2, so the
/// tube criterion is met up to a spacing/4 slack).
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid<F> {
    pub origin: PointT<F>,
    pub spacing: F,
    pub dim: usize,
    pub dims: [usize; MAX_DIM],
    bits: Vec<u64>,
    /// dedupe filter at half resolution: each sub-cell triggers the ball
    /// stencil at most once, since Brownian paths revisit cells heavily
    visited: Vec<u64>,
}

impl<F: Scalar> OccupancyGrid<F> {
    pub fn empty_over(region: &BoxRegion<F>, spacing: F) -> Result<Self> {
        if region.norm != Norm::Linf {
            return Err(Error::domain("occupancy grids need an l-inf box region"));
        }
        if spacing <= F::zero() {
            return Err(Error::domain("spacing must be positive"));
        }
        let d = region.dim();
        let n_axis = (region.half_width + region.half_width) / spacing;
        let n_axis = n_axis.ceil().to_f64_c() as usize;
        if n_axis == 0 {
            return Err(Error::domain("degenerate grid"));
        }
        let mut dims = [1usize; MAX_DIM];
        let mut total = 1usize;
        for i in 0..d {
            dims[i] = n_axis;
            total = total
                .checked_mul(n_axis)
                .ok_or_else(|| Error::config("grid too large"))?;
        }
        if total > (1usize << 34) {
            return Err(Error::config(format!("grid of {total} cells is too large")));
        }
        let mut origin = region.center;
        for i in 0..d {
            origin.set_coord(i, region.center.coord(i) - region.half_width);
        }
        let visited_total: usize = (0..d).map(|i| 2 * dims[i] + 2).product();
        Ok(OccupancyGrid {
            origin,
            spacing,
            dim: d,
            dims,
            bits: vec![0u64; total.div_ceil(64)],
            visited: vec![0u64; visited_total.div_ceil(64)],
        })
    }

    pub fn total_cells(&self) -> usize {
        (0..self.dim).map(|i| self.dims[i]).product()
    }

    pub fn strides(&self) -> [usize; MAX_DIM] {
        let mut s = [0usize; MAX_DIM];
        let mut acc = 1usize;
        for i in (0..self.dim).rev() {
            s[i] = acc;
            acc *= self.dims[i];
        }
        s
    }

    #[inline]
    pub fn occupied(&self, lin: usize) -> bool {
        self.bits[lin >> 6] >> (lin & 63) & 1 == 1
    }

    #[inline]
    fn set(&mut self, lin: usize) {
        self.bits[lin >> 6] |= 1u64 << (lin & 63);
    }

    pub fn occupancy_count(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Integer cell of a continuous point, or None outside the grid.
    pub fn cell_of(&self, p: &PointT<F>) -> Option<[i64; MAX_DIM]> {
        let inv = F::one() / self.spacing;
        let mut c = [0i64; MAX_DIM];
        for i in 0..self.dim {
            let v = ((p.coord(i) - self.origin.coord(i)) * inv).floor();
            let vi = v.to_f64_c() as i64;
            if vi < 0 || vi >= self.dims[i] as i64 {
                return None;
            }
            c[i] = vi;
        }
        Some(c)
    }

    pub fn linear(&self, cell: &[i64; MAX_DIM]) -> Option<usize> {
        let strides = self.strides();
        let mut lin = 0usize;
        for i in 0..self.dim {
            if cell[i] < 0 || cell[i] >= self.dims[i] as i64 {
                return None;
            }
            lin += cell[i] as usize * strides[i];
        }
        Some(lin)
    }

    pub fn cell_center(&self, lin: usize) -> PointT<F> {
        let strides = self.strides();
        let mut rem = lin;
        let half = F::from_f64_c(0.5);
        let mut p = PointT::zero(self.dim);
        for i in 0..self.dim {
            let c = rem / strides[i];
            rem %= strides[i];
            p.set_coord(
                i,
                self.origin.coord(i) + (F::from_f64_c(c as f64) + half) * self.spacing,
            );
        }
        p
    }

    /// Mark all cells whose center lies within `radius` of the point.
    fn mark_ball(&mut self, p: &PointT<F>, radius: F) {
        let Some(base) = self.cell_of(p) else {
            // point outside the grid: it can still touch boundary cells,
            // fall back to a clamped base cell
            let inv = F::one() / self.spacing;
            let mut c = [0i64; MAX_DIM];
            for i in 0..self.dim {
                let v = ((p.coord(i) - self.origin.coord(i)) * inv).floor();
                c[i] = (v.to_f64_c() as i64).clamp(0, self.dims[i] as i64 - 1);
            }
            return self.mark_ball_from(&c, p, radius);
        };
        self.mark_ball_from(&base, p, radius);
    }

    fn mark_ball_from(&mut self, base: &[i64; MAX_DIM], p: &PointT<F>, radius: F) {
        let r_cells = (radius / self.spacing).to_f64_c().ceil() as i64 + 1;
        let rad_sq = radius * radius;
        let d = self.dim;
        let mut offsets = [-r_cells; MAX_DIM];
        let mut cell = [0i64; MAX_DIM];
        loop {
            for i in 0..d {
                cell[i] = base[i] + offsets[i];
            }
            if let Some(lin) = self.linear(&cell) {
                let c = self.cell_center(lin);
                if c.dist_sq(p) <= rad_sq {
                    self.set(lin);
                }
            }
            let mut axis = 0;
            loop {
                if axis == d {
                    return;
                }
                offsets[axis] += 1;
                if offsets[axis] <= r_cells {
                    break;
                }
                offsets[axis] = -r_cells;
                axis += 1;
            }
        }
    }

    /// Rasterize additional trajectories into the grid (cells only turn
    /// on, so label-coupled sweeps are pathwise monotone by construction).
    pub fn mark_trajectories<'a, I>(&mut self, trajectories: I, radius: F)
    where
        I: IntoIterator<Item = &'a crate::brownian::Trajectory<F>>,
        F: 'a,
    {
        let step = self.spacing * F::from_f64_c(0.5);
        // skip segments that cannot reach the grid
        let mut reach_lo = PointT::zero(self.dim);
        let mut reach_hi = PointT::zero(self.dim);
        for i in 0..self.dim {
            reach_lo.set_coord(i, self.origin.coord(i) - radius - self.spacing);
            reach_hi.set_coord(
                i,
                self.origin.coord(i)
                    + F::from_f64_c(self.dims[i] as f64) * self.spacing
                    + radius
                    + self.spacing,
            );
        }
        let dim = self.dim;
        let inside = move |p: &PointT<F>| {
            (0..dim).all(|i| p.coord(i) >= reach_lo.coord(i) && p.coord(i) <= reach_hi.coord(i))
        };
        for traj in trajectories {
            for (a, b) in traj.segments() {
                if !inside(a) && !inside(b) {
                    continue;
                }
                let len = a.dist(b);
                let n = (len / step).to_f64_c().ceil().max(1.0) as usize;
                for k in 0..=n {
                    let t = F::from_f64_c(k as f64) / F::from_f64_c(n as f64);
                    let p = a.add(&b.sub(a).scale(t));
                    if self.mark_visited(&p) {
                        self.mark_ball(&p, radius);
                    }
                }
            }
        }
    }

    /// Half-resolution dedupe: true when this sub-cell is seen first.
    /// Points outside the padded extent share one overflow slot; the ball
    /// stencil radius exceeds the sub-cell diagonal, so coverage loss is
    /// bounded by half a cell diagonal.
    fn mark_visited(&mut self, p: &PointT<F>) -> bool {
        let inv = F::from_f64_c(2.0) / self.spacing;
        let mut lin = 0usize;
        let mut stride = 1usize;
        for i in 0..self.dim {
            let v = ((p.coord(i) - self.origin.coord(i)) * inv).floor();
            let n2 = 2 * self.dims[i];
            let vi = (v.to_f64_c() as i64).clamp(-1, n2 as i64) as usize + 1;
            lin += vi * stride;
            stride *= n2 + 2;
        }
        let word = lin >> 6;
        let mask = 1u64 << (lin & 63);
        if self.visited[word] & mask != 0 {
            return false;
        }
        self.visited[word] |= mask;
        true
    }
}

/// Rasterize the level-alpha sausages of a window sample over `region`.
pub fn rasterize<F: Scalar>(
    s: &WindowSample<F>,
    alpha: F,
    region: &BoxRegion<F>,
    spacing: F,
) -> Result<OccupancyGrid<F>> {
    if !region.contained_in(&s.window) {
        return Err(Error::domain("raster region must lie inside the window"));
    }
    let two = F::from_f64_c(2.0);
    if spacing > s.radius_r / two {
        return Err(Error::domain(
            "spacing too coarse: must be at most r/2 to resolve the tubes",
        ));
    }
    let mut grid = OccupancyGrid::empty_over(region, spacing)?;
    grid.mark_trajectories(s.level_slice(alpha).map(|(_, t)| t), s.radius_r);
    Ok(grid)
}

/// Unit-spacing grid with cells centered on Z^d (the lattice rendering of
/// vacancy at radius r), covering B_inf(0, half_extent).
pub fn rasterize_lattice<F: Scalar>(
    s: &WindowSample<F>,
    alpha: F,
    half_extent: usize,
) -> Result<OccupancyGrid<F>> {
    let d = s.dim();
    let n_axis = 2 * half_extent + 1;
    let mut dims = [1usize; MAX_DIM];
    for i in 0..d {
        dims[i] = n_axis;
    }
    let half = F::from_f64_c(0.5);
    let mut origin = PointT::zero(d);
    for i in 0..d {
        origin.set_coord(i, -F::from_f64_c(half_extent as f64) - half);
    }
    let total: usize = (0..d).map(|i| dims[i]).product();
    let visited_total: usize = (0..d).map(|i| 2 * dims[i] + 2).product();
    let mut grid = OccupancyGrid {
        origin,
        spacing: F::one(),
        dim: d,
        dims,
        bits: vec![0u64; total.div_ceil(64)],
        visited: vec![0u64; visited_total.div_ceil(64)],
    };
    grid.mark_trajectories(s.level_slice(alpha).map(|(_, t)| t), s.radius_r);
    Ok(grid)
}

// ---------------------------------------------------------------------------
// crossing events
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingMode {
    /// Continuous-path rendering: vacant cells from B_inf(c, L) to the
    /// shell at 2L (face adjacency).
    VacantAnnulus,
    /// Same geometry on occupied cells.
    OccupiedAnnulus,
    /// Nearest-neighbor lattice rendering on a unit grid: vacant lattice
    /// sites from the l-inf sphere L-1 to the sphere 2L.
    LatticeVacant,
    /// Occupied crossing restricted to the one-cell slab around the plane
    /// spanned by the first two coordinates.
    SlabOccupied,
}

impl CrossingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CrossingMode::VacantAnnulus => "vacant_annulus",
            CrossingMode::OccupiedAnnulus => "occupied",
            CrossingMode::LatticeVacant => "lattice",
            CrossingMode::SlabOccupied => "slab",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "vacant_annulus" | "vacant" => CrossingMode::VacantAnnulus,
            "occupied" => CrossingMode::OccupiedAnnulus,
            "lattice" => CrossingMode::LatticeVacant,
            "slab" => CrossingMode::SlabOccupied,
            other => return Err(Error::config(format!("unknown crossing mode `{other}`"))),
        })
    }

    fn wants_vacant(&self) -> bool {
        matches!(self, CrossingMode::VacantAnnulus | CrossingMode::LatticeVacant)
    }
}

struct CrossingSets {
    start: Vec<usize>,
    target: Vec<u8>, // 1 marks target cells
    eligible: Vec<u8>,
}

fn classify_cells<F: Scalar>(
    grid: &OccupancyGrid<F>,
    mode: CrossingMode,
    l: F,
    center: &PointT<F>,
) -> Result<CrossingSets> {
    let total = grid.total_cells();
    let a = grid.spacing;
    let half = F::from_f64_c(0.5);
    let two = F::from_f64_c(2.0);
    // the annulus must fit inside the grid
    for i in 0..grid.dim {
        let lo = grid.origin.coord(i);
        let hi = grid.origin.coord(i) + F::from_f64_c(grid.dims[i] as f64) * a;
        if center.coord(i) - two * l < lo - a * half || center.coord(i) + two * l > hi + a * half
        {
            return Err(Error::domain(
                "crossing geometry exceeds the rasterized grid",
            ));
        }
    }
    let mut start = Vec::new();
    let mut target = vec![0u8; total];
    let mut eligible = vec![0u8; total];
    let quarter = a * F::from_f64_c(0.25);
    for lin in 0..total {
        let pass = if mode.wants_vacant() {
            !grid.occupied(lin)
        } else {
            grid.occupied(lin)
        };
        if !pass {
            continue;
        }
        let c = grid.cell_center(lin);
        if matches!(mode, CrossingMode::SlabOccupied) {
            let mut in_slab = true;
            for i in 2..grid.dim {
                if c.coord(i).abs() > a {
                    in_slab = false;
                    break;
                }
            }
            if !in_slab {
                continue;
            }
        }
        eligible[lin] = 1;
        let dist = c.dist_linf(center);
        match mode {
            CrossingMode::LatticeVacant => {
                if (dist - (l - F::one())).abs() <= quarter {
                    start.push(lin);
                }
                if dist >= two * l - quarter {
                    target[lin] = 1;
                }
            }
            _ => {
                if dist <= l {
                    start.push(lin);
                }
                if dist >= two * l - a * half {
                    target[lin] = 1;
                }
            }
        }
    }
    Ok(CrossingSets {
        start,
        target,
        eligible,
    })
}

/// Flood-fill connectivity from the start set to the target shell.
pub fn crossing_event<F: Scalar>(
    grid: &OccupancyGrid<F>,
    mode: CrossingMode,
    l: F,
    center: &PointT<F>,
) -> Result<bool> {
    let sets = classify_cells(grid, mode, l, center)?;
    let strides = grid.strides();
    let total = grid.total_cells();
    let mut seen = vec![false; total];
    let mut queue = std::collections::VecDeque::new();
    for &s in &sets.start {
        if sets.target[s] == 1 {
            return Ok(true);
        }
        if !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    // decode cell coordinates incrementally for neighbor bounds
    while let Some(lin) = queue.pop_front() {
        let mut rem = lin;
        for i in 0..grid.dim {
            let c = rem / strides[i];
            rem %= strides[i];
            for (nc, nlin) in [
                (c as i64 - 1, lin.wrapping_sub(strides[i])),
                (c as i64 + 1, lin + strides[i]),
            ] {
                if nc < 0 || nc >= grid.dims[i] as i64 {
                    continue;
                }
                if seen[nlin] || sets.eligible[nlin] == 0 {
                    continue;
                }
                if sets.target[nlin] == 1 {
                    return Ok(true);
                }
                seen[nlin] = true;
                queue.push_back(nlin);
            }
        }
    }
    Ok(false)
}

/// Disjoint-set forest with path compression and union by rank.
pub struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (ra, rb) = if self.rank[ra as usize] < self.rank[rb as usize] {
            (rb, ra)
        } else {
            (ra, rb)
        };
        self.parent[rb as usize] = ra;
        if self.rank[ra as usize] == self.rank[rb as usize] {
            self.rank[ra as usize] += 1;
        }
        ra != rb
    }
}

/// Independent implementation of the crossing decision via union-find,
/// used to audit the flood fill.
pub fn crossing_event_unionfind<F: Scalar>(
    grid: &OccupancyGrid<F>,
    mode: CrossingMode,
    l: F,
    center: &PointT<F>,
) -> Result<bool> {
    let sets = classify_cells(grid, mode, l, center)?;
    let total = grid.total_cells();
    let strides = grid.strides();
    let mut uf = UnionFind::new(total);
    for lin in 0..total {
        if sets.eligible[lin] == 0 {
            continue;
        }
        let mut rem = lin;
        for i in 0..grid.dim {
            let c = rem / strides[i];
            rem %= strides[i];
            if c + 1 < grid.dims[i] {
                let nlin = lin + strides[i];
                if sets.eligible[nlin] == 1 {
                    uf.union(lin as u32, nlin as u32);
                }
            }
        }
    }
    let mut target_roots = std::collections::HashSet::new();
    for lin in 0..total {
        if sets.target[lin] == 1 {
            target_roots.insert(uf.find(lin as u32));
        }
    }
    for &s in &sets.start {
        if target_roots.contains(&uf.find(s as u32)) {
            return Ok(true);
        }
    }
    Ok(false)
}

// ---------------------------------------------------------------------------
// path discretization (continuous crossing -> nearest-neighbor path)
// ---------------------------------------------------------------------------

/// Collect the lattice points whose unit l-inf box meets the polyline and
/// upgrade the resulting *-connected sequence to a nearest-neighbor path
/// by inserting coordinate-by-coordinate intermediate vertices.
pub fn discretize_path<F: Scalar>(poly: &[PointT<F>]) -> Vec<LatticePoint> {
    if poly.is_empty() {
        return Vec::new();
    }
    let d = poly[0].dim();
    let quarter = F::from_f64_c(0.25);
    let mut star: Vec<LatticePoint> = vec![lattice_round_int(&poly[0])];
    for w in poly.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = a.dist(&b);
        let n = (len / quarter).to_f64_c().ceil().max(1.0) as usize;
        for k in 1..=n {
            let t = F::from_f64_c(k as f64) / F::from_f64_c(n as f64);
            let p = a.add(&b.sub(&a).scale(t));
            let z = lattice_round_int(&p);
            if z != *star.last().unwrap() {
                star.push(z);
            }
        }
    }
    // *-steps to nearest-neighbor chains: flip coordinates in order
    let mut out: Vec<LatticePoint> = vec![star[0]];
    for w in star.windows(2) {
        let (u, v) = (w[0], w[1]);
        debug_assert!(crate::geom::lattice_linf(&u, &v, d) <= 1);
        let mut cur = u;
        for i in 0..d {
            if v[i] != cur[i] {
                cur[i] = v[i];
                out.push(cur);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// crossing probabilities, threshold scans, scaling check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingEstimate {
    pub alpha: f64,
    pub l: f64,
    pub mode: CrossingMode,
    pub p_hat: f64,
    pub ci95: f64,
    pub n_replicas: u64,
}

/// Geometry and resolution of a percolation experiment at scale L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PercolationSetup<F> {
    pub d: usize,
    pub r: F,
    pub l: F,
    pub spacing: F,
    /// per-step displacement scale of the path sampler
    pub step_sigma: F,
    pub cap_walkers: u64,
}

impl<F: Scalar> PercolationSetup<F> {
    pub fn new(d: usize, r: F, l: F) -> Self {
        let four = F::from_f64_c(4.0);
        PercolationSetup {
            d,
            r,
            l,
            spacing: r / four,
            step_sigma: r / four,
            cap_walkers: 20_000,
        }
    }

    /// Exact geometric rescaling (lengths by lambda).
    pub fn scaled(&self, lambda: F) -> Self {
        PercolationSetup {
            d: self.d,
            r: self.r * lambda,
            l: self.l * lambda,
            spacing: self.spacing * lambda,
            step_sigma: self.step_sigma * lambda,
            cap_walkers: self.cap_walkers,
        }
    }

    /// The sampling window: a box just past the outer crossing shell.
    pub fn window(&self) -> BoxRegion<F> {
        let two = F::from_f64_c(2.0);
        let hw = two * self.l + two * self.spacing;
        BoxRegion {
            center: PointT::zero(self.d),
            half_width: hw,
            norm: Norm::Linf,
        }
    }

    /// Grid region: covers the outer shell with one cell of margin.
    pub fn grid_region(&self) -> BoxRegion<F> {
        let two = F::from_f64_c(2.0);
        BoxRegion {
            center: PointT::zero(self.d),
            half_width: two * self.l + self.spacing,
            norm: Norm::Linf,
        }
    }

    pub fn sim(&self) -> SimParams<F> {
        let window = self.window();
        let circ = window.circumradius() + self.r;
        let h = self.step_sigma * self.step_sigma / F::from_f64_c(self.d as f64);
        let mut sim = SimParams::for_region(self.d, circ, self.r);
        sim.step_h = h;
        sim.eps_hit = self.step_sigma;
        sim.rho_esc = sim.rho_big;
        sim
    }
}

/// Sample M independent windows at level alpha and evaluate the crossing.
pub fn crossing_probability<F: Scalar>(
    setup: &PercolationSetup<F>,
    alpha: F,
    mode: CrossingMode,
    m: u64,
    rng: &RngSpec,
) -> Result<CrossingEstimate> {
    if m < 100 {
        return Err(Error::domain("need at least 100 replicas"));
    }
    let curve = threshold_scan(setup, &[alpha], mode, m, rng)?;
    Ok(curve.curve[0])
}

#[derive(Debug, Clone)]
pub struct ThresholdScan {
    pub curve: Vec<CrossingEstimate>,
    /// interpolated level where p_hat crosses 1/2 (None if not bracketed)
    pub alpha_half: Option<f64>,
    /// pathwise monotonicity violations across the coupled sweep (always 0
    /// by construction; recorded for the audit)
    pub monotonicity_violations: u64,
}

/// Coupled threshold scan: each replica is sampled once at the top level
/// and re-rasterized incrementally along the alpha grid, so crossing
/// indicators are pathwise monotone by construction.
pub fn threshold_scan<F: Scalar>(
    setup: &PercolationSetup<F>,
    alpha_grid: &[F],
    mode: CrossingMode,
    m: u64,
    rng: &RngSpec,
) -> Result<ThresholdScan> {
    if alpha_grid.is_empty() {
        return Err(Error::domain("empty alpha grid"));
    }
    if alpha_grid.windows(2).any(|w| w[0] >= w[1]) && alpha_grid.len() > 1 {
        return Err(Error::domain("alpha grid must be increasing"));
    }
    let window = setup.window();
    let grid_region = setup.grid_region();
    let sim = setup.sim();
    let alpha_max = *alpha_grid.last().unwrap();
    let cap = window_capacity(&window, setup.r, &sim, setup.cap_walkers, rng)?;
    let l = setup.l;
    let center = PointT::zero(setup.d);

    let per_replica: Vec<Result<Vec<bool>>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let spec = rng.replica(i.wrapping_add(1));
            let s = sample_window_with_cap(&window, setup.r, alpha_max, &sim, cap, &spec)?;
            // sort trajectories by label for the incremental sweep
            let mut order: Vec<usize> = (0..s.n_trajectories()).collect();
            order.sort_by(|&a, &b| {
                s.trajectories[a]
                    .0
                    .partial_cmp(&s.trajectories[b].0)
                    .unwrap()
            });
            let mut grid = OccupancyGrid::empty_over(&grid_region, setup.spacing)?;
            let mut next = 0usize;
            let mut flags = Vec::with_capacity(alpha_grid.len());
            for &alpha in alpha_grid {
                while next < order.len() && s.trajectories[order[next]].0 <= alpha {
                    grid.mark_trajectories(
                        std::iter::once(&s.trajectories[order[next]].1),
                        setup.r,
                    );
                    next += 1;
                }
                flags.push(crossing_event(&grid, mode, l, &center)?);
            }
            Ok(flags)
        })
        .collect();

    let mut counts = vec![0u64; alpha_grid.len()];
    let mut violations = 0u64;
    for row in per_replica {
        let flags = row?;
        for (k, &f) in flags.iter().enumerate() {
            if f {
                counts[k] += 1;
            }
            if k > 0 {
                let bad = if mode.wants_vacant() {
                    // vacant crossing can only turn off as alpha grows
                    f && !flags[k - 1]
                } else {
                    !f && flags[k - 1]
                };
                if bad {
                    violations += 1;
                }
            }
        }
    }
    let curve: Vec<CrossingEstimate> = alpha_grid
        .iter()
        .zip(&counts)
        .map(|(&alpha, &k)| CrossingEstimate {
            alpha: alpha.to_f64_c(),
            l: l.to_f64_c(),
            mode,
            p_hat: k as f64 / m as f64,
            ci95: binomial_ci95(k, m),
            n_replicas: m,
        })
        .collect();
    let xs: Vec<f64> = curve.iter().map(|c| c.alpha).collect();
    let ys: Vec<f64> = curve.iter().map(|c| c.p_hat).collect();
    let alpha_half = interpolate_crossing(&xs, &ys, 0.5);
    Ok(ThresholdScan {
        curve,
        alpha_half,
        monotonicity_violations: violations,
    })
}

#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub r1: f64,
    pub r2: f64,
    pub alpha_half_1: Option<f64>,
    pub alpha_half_2: Option<f64>,
    /// measured alpha_half(r2)/alpha_half(r1) when both exist
    pub ratio: Option<f64>,
    /// (r2/r1)^(2-d)
    pub target: f64,
}

/// Compare pseudo-thresholds at two sausage radii with proportionally
/// scaled geometry; the scaling law predicts the ratio (r2/r1)^(2-d).
pub fn scaling_check<F: Scalar>(
    setup: &PercolationSetup<F>,
    r2: F,
    alpha_grid: &[F],
    mode: CrossingMode,
    m: u64,
    rng: &RngSpec,
) -> Result<ScalingReport> {
    let d = setup.d;
    if r2 == setup.r {
        let scan = threshold_scan(setup, alpha_grid, mode, m, rng)?;
        return Ok(ScalingReport {
            r1: setup.r.to_f64_c(),
            r2: r2.to_f64_c(),
            alpha_half_1: scan.alpha_half,
            alpha_half_2: scan.alpha_half,
            ratio: scan.alpha_half.map(|_| 1.0),
            target: 1.0,
        });
    }
    let lambda = r2 / setup.r;
    let factor = lambda.powi(2 - d as i32);
    let setup2 = setup.scaled(lambda);
    let grid2: Vec<F> = alpha_grid.iter().map(|&a| a * factor).collect();
    let scan1 = threshold_scan(setup, alpha_grid, mode, m, rng)?;
    // independent seeds for the second radius
    let rng2 = RngSpec::new(rng.master_seed ^ 0x5ca1_ab1e_0000_0001, rng.replica_index);
    let scan2 = threshold_scan(&setup2, &grid2, mode, m, &rng2)?;
    let ratio = match (scan1.alpha_half, scan2.alpha_half) {
        (Some(a), Some(b)) if a != 0.0 => Some(b / a),
        _ => None,
    };
    Ok(ScalingReport {
        r1: setup.r.to_f64_c(),
        r2: r2.to_f64_c(),
        alpha_half_1: scan1.alpha_half,
        alpha_half_2: scan2.alpha_half,
        ratio,
        target: factor.to_f64_c(),
    })
}
