//! Iterated cactus sets: unions of unit-radius Wiener sausages grown from
//! trajectories that hit the previous generation, truncated at
//! min(c0 R^2, exit of B(start, R/2)). Capacity scaling of these sets is
//! probed by Monte Carlo hitting estimates and voxel variational bounds.

use crate::brownian::gaussian_step;
use crate::capacity::{estimate_capacity_mc, CapacityEstimate, SausageRegion};
use crate::error::{Error, Result};
use crate::geom::{BoxRegion, Norm, PointT};
use crate::interlacement::{
    restrict_annulus, sample_window_with_cap, window_capacity, WindowSample,
};
use crate::rng::{labels, RngSpec};
use crate::scalar::Scalar;
use crate::sim::SimParams;
use crate::stats::loglog_fit;
use crate::voxel::VoxelSet;
use rayon::prelude::*;

/// One truncated path of a cactus generation.
#[derive(Debug, Clone, PartialEq)]
pub struct CactusPath<F> {
    /// id of the source trajectory within its window sample (or the start
    /// index for seeded generations)
    pub source: usize,
    pub points: Vec<PointT<F>>,
}

/// A union of unit-radius sausages around truncated paths.
#[derive(Debug, Clone, PartialEq)]
pub struct CactusSet<F> {
    pub paths: Vec<CactusPath<F>>,
    pub generation: usize,
    pub scale_r: F,
}

impl<F: Scalar> CactusSet<F> {
    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn polylines(&self) -> Vec<Vec<PointT<F>>> {
        self.paths.iter().map(|p| p.points.clone()).collect()
    }

    /// Exact-distance hit region for the radius-1 sausage union.
    pub fn region(&self, eps: F) -> Result<SausageRegion<F>> {
        SausageRegion::from_polylines(&self.polylines(), F::one(), eps)
    }

    /// Largest distance of a path point from the origin.
    pub fn max_norm(&self) -> F {
        self.paths
            .iter()
            .flat_map(|p| p.points.iter())
            .map(|p| p.norm())
            .fold(F::zero(), F::max)
    }

    /// Total simulated duration over all paths (steps times h).
    pub fn total_duration(&self, step_h: F) -> F {
        let steps: usize = self.paths.iter().map(|p| p.points.len() - 1).sum();
        F::from_f64_c(steps as f64) * step_h
    }

    /// Voxelization at the given spacing (origin at 0).
    pub fn voxelize(&self, spacing: F) -> VoxelSet<F> {
        let d = self
            .paths
            .first()
            .map(|p| p.points[0].dim())
            .unwrap_or(crate::geom::MIN_DIM);
        let mut set = VoxelSet::new(d, spacing, PointT::zero(d));
        set.mark_polylines(&self.polylines(), F::one());
        set
    }
}

/// Walk from `start` until min(c0 R^2, exit of B(start, R/2)), recording
/// every step at resolution step_h.
fn truncated_path<F: Scalar, R: rand::Rng + ?Sized>(
    start: PointT<F>,
    big_r: F,
    c0: F,
    step_h: F,
    rng: &mut R,
) -> Vec<PointT<F>> {
    let sqrt_h = step_h.sqrt();
    let time_cap = c0 * big_r * big_r;
    let n_cap = (time_cap / step_h).floor().to_f64_c() as usize;
    let half_r = big_r * F::from_f64_c(0.5);
    let half_r_sq = half_r * half_r;
    let mut points = Vec::with_capacity(n_cap.min(1 << 20) + 1);
    points.push(start);
    let mut x = start;
    for _ in 0..n_cap {
        gaussian_step(&mut x, sqrt_h, rng);
        points.push(x);
        if x.dist_sq(&start) >= half_r_sq {
            break;
        }
    }
    points
}

/// Phi: independent truncated paths from the given starts, collected as a
/// unit-sausage union.
pub fn phi<F: Scalar>(
    starts: &[PointT<F>],
    big_r: F,
    c0: F,
    sim: &SimParams<F>,
    rng: &RngSpec,
) -> Result<CactusSet<F>> {
    if big_r <= F::one() {
        return Err(Error::domain("cactus scale R must exceed 1"));
    }
    if c0 <= F::zero() {
        return Err(Error::domain("exit-time constant c0 must be positive"));
    }
    let paths: Vec<CactusPath<F>> = starts
        .par_iter()
        .enumerate()
        .map(|(i, &start)| {
            let mut r = rng.replica(i as u64).stream(labels::TRAJECTORY);
            CactusPath {
                source: i,
                points: truncated_path(start, big_r, c0, sim.step_h, &mut r),
            }
        })
        .collect();
    Ok(CactusSet {
        paths,
        generation: 1,
        scale_r: big_r,
    })
}

/// Psi with a generic membership test: apply Phi to the trajectories of
/// the sample that hit the target, restarted at their first hit points.
/// The continuation reuses the trajectory's own sampled path (the exit of
/// B(entry, R/2) always fires before the leg's escape radius).
pub fn psi_with<F: Scalar>(
    s: &WindowSample<F>,
    hit: impl Fn(&PointT<F>) -> bool + Sync,
    big_r: F,
    c0: F,
) -> Result<CactusSet<F>> {
    if big_r <= F::one() {
        return Err(Error::domain("cactus scale R must exceed 1"));
    }
    let step_h = s.sim.step_h;
    let time_cap_steps = (c0 * big_r * big_r / step_h).floor().to_f64_c() as usize;
    let half_r = big_r * F::from_f64_c(0.5);
    let half_r_sq = half_r * half_r;
    let paths: Vec<CactusPath<F>> = s
        .trajectories
        .par_iter()
        .enumerate()
        .filter_map(|(id, (_, traj))| {
            // first hit across legs, scanning points in order
            for range in traj.leg_ranges() {
                let leg = &traj.points[range];
                for (k, p) in leg.iter().enumerate() {
                    if hit(p) {
                        let entry = *p;
                        let mut points = vec![entry];
                        for q in &leg[k + 1..] {
                            if points.len() > time_cap_steps {
                                break;
                            }
                            points.push(*q);
                            if q.dist_sq(&entry) >= half_r_sq {
                                break;
                            }
                        }
                        return Some(CactusPath { source: id, points });
                    }
                }
            }
            None
        })
        .collect();
    Ok(CactusSet {
        paths,
        generation: 0,
        scale_r: big_r,
    })
}

/// Psi against a voxelized target set.
pub fn psi<F: Scalar>(
    s: &WindowSample<F>,
    target: &VoxelSet<F>,
    big_r: F,
    c0: F,
) -> Result<CactusSet<F>> {
    psi_with(s, |p| target.contains_point(p), big_r, c0)
}

/// Psi against a sausage union (exact membership in the radius-1 tubes).
pub fn psi_sausage<F: Scalar>(
    s: &WindowSample<F>,
    target: &SausageRegion<F>,
    big_r: F,
    c0: F,
) -> Result<CactusSet<F>> {
    psi_with(s, |p| target.hits(p, F::zero()), big_r, c0)
}

/// The iterated cactus A^s(r_in, R): A^1 grows from a single path started
/// at x (after exiting B(0, r_in)); A^k applies Psi with a fresh annulus-
/// restricted window sample, independent across generations by disjoint
/// seed substreams.
pub fn iterate_cactus<F: Scalar>(
    x: &PointT<F>,
    r_in: F,
    big_r: F,
    s_gens: usize,
    alpha: F,
    c0: F,
    sim_step_h: F,
    rng: &RngSpec,
) -> Result<CactusSet<F>> {
    let d = x.dim();
    crate::geom::check_dim(d)?;
    let s_d = crate::geom::s_d(d)?;
    if s_gens > s_d {
        return Err(Error::domain(format!(
            "generation count {s_gens} exceeds s_d = {s_d}"
        )));
    }
    if s_gens == 0 {
        return Err(Error::domain("need at least one generation"));
    }
    if !(F::one() < r_in && r_in < big_r) {
        return Err(Error::domain("need 1 < r_in < R"));
    }
    // A^1: walk from x to the exit of B(0, r_in), then a truncated path
    let gen_spec = rng.replica(1);
    let mut r1 = gen_spec.stream(labels::CACTUS_GENERATION);
    let origin = PointT::zero(d);
    let mut start = *x;
    let sqrt_h = sim_step_h.sqrt();
    while start.dist(&origin) < r_in {
        gaussian_step(&mut start, sqrt_h, &mut r1);
    }
    let mut current = CactusSet {
        paths: vec![CactusPath {
            source: 0,
            points: truncated_path(start, big_r, c0, sim_step_h, &mut r1),
        }],
        generation: 1,
        scale_r: big_r,
    };

    for k in 2..=s_gens {
        // window large enough to contain A^{k-1} plus the next growth
        let window_radius = current.max_norm() + big_r + F::one() + F::one();
        let window = BoxRegion {
            center: origin,
            half_width: window_radius,
            norm: Norm::Euclidean,
        };
        let mut sim = SimParams::for_region(d, window_radius + F::one(), F::one());
        sim.step_h = sim_step_h;
        sim.eps_hit = (sim_step_h * F::from_f64_c(d as f64)).sqrt();
        sim.rho_esc = sim.rho_big;
        let gen_spec = rng.replica(k as u64);
        let cap = window_capacity(&window, F::one(), &sim, 20_000, &gen_spec)?;
        let sample = sample_window_with_cap(&window, F::one(), alpha, &sim, cap, &gen_spec)?;
        let sample = restrict_annulus(&sample, r_in);
        let region = current.region(sim.eps_hit)?;
        let mut next = psi_sausage(&sample, &region, big_r, c0)?;
        next.generation = k;
        current = next;
        if current.is_empty() {
            break;
        }
    }
    Ok(current)
}

// ---------------------------------------------------------------------------
// capacity-scaling experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CactusConfig<F> {
    pub d: usize,
    pub generations: usize,
    /// start counts for the generation-1 scan
    pub n_list: Vec<usize>,
    pub r_list: Vec<F>,
    pub replicas: u64,
    pub alpha: F,
    pub c0: F,
    pub step_h: F,
    /// walkers per Monte Carlo capacity estimate
    pub mc_walkers: u64,
    /// voxel bound computed only when the cell count stays below this
    pub bounds_cell_cap: usize,
}

#[derive(Debug, Clone)]
pub struct CactusRow {
    pub d: usize,
    pub generation: usize,
    pub n_starts: usize,
    pub scale_r: f64,
    pub replica: u64,
    pub n_paths: usize,
    pub cap_mc: f64,
    pub cap_se: f64,
    pub cap_lower: Option<f64>,
    pub cap_upper: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FitRow {
    /// "R" for the scale exponent at fixed N, "N" for the start-count
    /// exponent at fixed R
    pub kind: &'static str,
    pub fixed: f64,
    pub exponent: f64,
    pub r2: f64,
}

/// Capacity of a cactus instance by Monte Carlo hitting on the exact
/// sausage region.
pub fn cactus_capacity_mc<F: Scalar>(
    set: &CactusSet<F>,
    step_h: F,
    n_walkers: u64,
    rng: &RngSpec,
) -> Result<CapacityEstimate<F>> {
    let d = set.paths[0].points[0].dim();
    let eps = (step_h * F::from_f64_c(d as f64)).sqrt();
    let region = set.region(eps)?;
    use crate::capacity::HitRegion;
    // thin sausage unions have capacity far below their circumsphere's;
    // launch close (the spherical-mean identity is exact for any
    // enclosing sphere) so the hit rate stays workable
    let mut sim = SimParams::for_region(d, region.circumradius(), F::one());
    sim.rho_big = region.circumradius() * F::from_f64_c(1.25);
    sim.rho_kill = sim.rho_big * F::from_f64_c(10.0);
    sim.step_h = step_h;
    sim.eps_hit = eps;
    sim.rho_esc = sim.rho_big;
    estimate_capacity_mc(&region, &sim, n_walkers, rng)
}

/// Grid scan over (N, R): per replica, grow a generation-1 cactus from N
/// uniform starts in B(0, R/4), estimate the capacity by MC hitting, and
/// attach voxel variational bounds when affordable. Emits per-replica rows
/// and log-log fits of the mean capacity versus R and versus N.
pub fn cactus_capacity_experiment<F: Scalar>(
    cfg: &CactusConfig<F>,
    rng: &RngSpec,
) -> Result<(Vec<CactusRow>, Vec<FitRow>)> {
    crate::geom::check_dim(cfg.d)?;
    if cfg.generations != 1 {
        return Err(Error::config(
            "the (N, R) scaling scan runs on generation-1 cacti; use iterate-cactus for deeper sets",
        ));
    }
    let mut rows = Vec::new();
    for &n_starts in &cfg.n_list {
        for &big_r in &cfg.r_list {
            let spacing = F::from_f64_c(0.25).min(big_r / F::from_f64_c(64.0));
            let quarter_r = big_r * F::from_f64_c(0.25);
            let batch: Vec<CactusRow> = (0..cfg.replicas)
                .into_par_iter()
                .map(|rep| {
                    let spec = rng
                        .replica(rep)
                        .replica(n_starts as u64)
                        .replica(big_r.to_f64_c().to_bits());
                    let mut start_rng = spec.stream(labels::CACTUS_GENERATION);
                    let starts: Vec<PointT<F>> = (0..n_starts)
                        .map(|_| {
                            crate::capacity::uniform_ball_point::<F, _>(cfg.d, &mut start_rng)
                                .scale(quarter_r)
                        })
                        .collect();
                    let set = phi(&starts, big_r, cfg.c0, &SimParams {
                        step_h: cfg.step_h,
                        rho_big: big_r,
                        rho_kill: big_r * F::from_f64_c(10.0),
                        rho_esc: big_r,
                        max_steps: 50_000_000,
                        eps_hit: (cfg.step_h * F::from_f64_c(cfg.d as f64)).sqrt(),
                    }, &spec)?;
                    let cap = cactus_capacity_mc(&set, cfg.step_h, cfg.mc_walkers, &spec)?;
                    let (lo, hi) = {
                        let vox = set.voxelize(spacing);
                        if vox.len() > 0 && vox.len() <= cfg.bounds_cell_cap {
                            let (l, u) = vox.variational_capacity_bounds()?;
                            (Some(l.value.to_f64_c()), Some(u.value.to_f64_c()))
                        } else {
                            (None, None)
                        }
                    };
                    Ok(CactusRow {
                        d: cfg.d,
                        generation: 1,
                        n_starts,
                        scale_r: big_r.to_f64_c(),
                        replica: rep,
                        n_paths: set.n_paths(),
                        cap_mc: cap.value.to_f64_c(),
                        cap_se: cap.std_error.to_f64_c(),
                        cap_lower: lo,
                        cap_upper: hi,
                    })
                })
                .collect::<Result<_>>()?;
            rows.extend(batch);
        }
    }

    // log-log fits of the mean capacity
    let mean_cap = |n: usize, r: f64| -> f64 {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|row| row.n_starts == n && row.scale_r == r)
            .map(|row| row.cap_mc)
            .collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    };
    let mut fits = Vec::new();
    if cfg.r_list.len() >= 2 {
        for &n in &cfg.n_list {
            let xs: Vec<f64> = cfg.r_list.iter().map(|r| r.to_f64_c()).collect();
            let ys: Vec<f64> = xs.iter().map(|&r| mean_cap(n, r)).collect();
            let (exponent, r2) = loglog_fit(&xs, &ys);
            fits.push(FitRow {
                kind: "R",
                fixed: n as f64,
                exponent,
                r2,
            });
        }
    }
    if cfg.n_list.len() >= 2 {
        for &r in &cfg.r_list {
            let xs: Vec<f64> = cfg.n_list.iter().map(|&n| n as f64).collect();
            let ys: Vec<f64> = cfg
                .n_list
                .iter()
                .map(|&n| mean_cap(n, r.to_f64_c()))
                .collect();
            let (exponent, r2) = loglog_fit(&xs, &ys);
            fits.push(FitRow {
                kind: "N",
                fixed: r.to_f64_c(),
                exponent,
                r2,
            });
        }
    }
    Ok((rows, fits))
}

#[cfg(test)]
mod tests {
    use super::*;

    type F = f64;

    #[test]
    fn phi_empty_and_containment() {
        let sim = SimParams::<F> {
            step_h: 2e-3,
            rho_big: 8.0,
            rho_kill: 80.0,
            rho_esc: 8.0,
            max_steps: 1_000_000,
            eps_hit: 0.1,
        };
        let empty = phi::<F>(&[], 8.0, 0.01, &sim, &RngSpec::new(1, 0)).unwrap();
        assert!(empty.is_empty());

        let starts = vec![PointT::zero(5), PointT::from_slice(&[2.0, 0.0, 0.0, 0.0, 0.0])];
        let set = phi(&starts, 8.0, 0.01, &sim, &RngSpec::new(2, 0)).unwrap();
        assert_eq!(set.n_paths(), 2);
        let overshoot = 3.0 * (sim.step_h * 5.0).sqrt();
        for (path, start) in set.paths.iter().zip(&starts) {
            for p in &path.points {
                assert!(
                    p.dist(start) <= 4.0 + overshoot,
                    "point strayed past R/2 + overshoot"
                );
            }
        }
        assert!(phi::<F>(&starts, 0.5, 0.01, &sim, &RngSpec::new(3, 0)).is_err());
    }

    #[test]
    fn phi_duration_mostly_time_capped() {
        // with c0 at the 1% exit quantile the time cap fires ~99% of the
        // time, so the mean duration sits just under c0 R^2
        let d = 5;
        let h = 2e-3;
        let sim = SimParams::<F> {
            step_h: h,
            rho_big: 1.0,
            rho_kill: 10.0,
            rho_esc: 1.0,
            max_steps: 1_000_000,
            eps_hit: 0.1,
        };
        let c0 = crate::brownian::exit_time_quantile::<F>(d, 0.01, 1e-4, 4000, &RngSpec::new(8, 0))
            .unwrap();
        let big_r = 12.0;
        let mut total = 0.0;
        let reps = 300;
        for rep in 0..reps {
            let set = phi(
                &[PointT::zero(d)],
                big_r,
                c0,
                &sim,
                &RngSpec::new(100 + rep, 0),
            )
            .unwrap();
            total += set.total_duration(h);
        }
        let mean = total / reps as f64;
        let cap = c0 * big_r * big_r;
        let ratio = mean / cap;
        assert!(
            (0.9..=1.0).contains(&ratio),
            "mean duration ratio {ratio} (c0 {c0})"
        );
    }

    #[test]
    fn psi_selection_logic() {
        // synthetic sample with two trajectories; target near only one
        use crate::brownian::{Termination, Trajectory};
        let window = BoxRegion::<F> {
            center: PointT::zero(5),
            half_width: 40.0,
            norm: Norm::Euclidean,
        };
        let sim = SimParams::for_region(5, 41.0, 1.0);
        let mk_traj = |y: f64| {
            let points: Vec<PointT<F>> = (0..200)
                .map(|k| PointT::from_slice(&[k as f64 * 0.1, y, 0.0, 0.0, 0.0]))
                .collect();
            Trajectory {
                step_h: 2e-3,
                points,
                termination: Termination::Escaped { radius: 20.0 },
                leg_starts: vec![0],
            }
        };
        let s = WindowSample {
            window,
            radius_r: 1.0,
            enlarged_cap: crate::capacity::CapacityEstimate {
                value: 1.0,
                std_error: 0.0,
                n_walkers: 1,
                method: crate::capacity::CapacityMethod::McHitting,
                bias_bound: 0.0,
            },
            alpha_max: 1.0,
            trajectories: vec![(0.1, mk_traj(0.0)), (0.2, mk_traj(30.0))],
            escape_radius: 41.0,
            sim,
        };
        // voxel target on the first trajectory's track
        let mut target = VoxelSet::new(5, 0.5, PointT::zero(5));
        target.insert_point(&PointT::from_slice(&[5.0, 0.0, 0.0, 0.0, 0.0]));
        let set = psi(&s, &target, 4.0, 0.05).unwrap();
        assert_eq!(set.n_paths(), 1);
        assert_eq!(set.paths[0].source, 0);
        // entry point is the first sampled point inside the target
        assert!(target.contains_point(&set.paths[0].points[0]));

        // disjoint target selects nothing
        let mut far = VoxelSet::new(5, 0.5, PointT::zero(5));
        far.insert_point(&PointT::from_slice(&[0.0, -30.0, 0.0, 0.0, 0.0]));
        assert!(psi(&s, &far, 4.0, 0.05).unwrap().is_empty());
    }

    #[test]
    fn iterate_cactus_guards_and_containment() {
        let x = PointT::<F>::zero(5);
        // s beyond s_d refuses (s_5 = 2)
        assert!(iterate_cactus(&x, 1.5, 6.0, 3, 0.5, 0.01, 2e-3, &RngSpec::new(4, 0)).is_err());
        assert!(iterate_cactus(&x, 0.5, 6.0, 1, 0.5, 0.01, 2e-3, &RngSpec::new(4, 0)).is_err());
        // single generation: one path, contained in B((s+1)R + slack)
        let set = iterate_cactus(&x, 1.5, 6.0, 1, 0.5, 0.01, 2e-3, &RngSpec::new(5, 0)).unwrap();
        assert_eq!(set.generation, 1);
        assert_eq!(set.n_paths(), 1);
        let slack = 1.5 + 1.0 + 3.0 * (2e-3f64 * 5.0).sqrt();
        assert!(set.max_norm() + 1.0 <= 2.0 * 6.0 + slack);
    }

    #[test]
    fn generation_streams_are_disjoint() {
        use rand::RngCore;
        let spec = RngSpec::new(77, 3);
        let mut a = spec.replica(1).stream(labels::CACTUS_GENERATION);
        let mut b = spec.replica(2).stream(labels::CACTUS_GENERATION);
        assert_ne!(a.next_u64(), b.next_u64());
    }
}
