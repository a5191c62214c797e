//! Brownian potential theory: Green function, ball capacities and hitting
//! probabilities in closed form, Monte Carlo capacity estimation through
//! hitting frequencies from a far launch sphere, equilibrium-measure
//! sampling, and pair Green energies of Wiener sausages.

use crate::brownian::gaussian_step;
use crate::error::{Error, Result};
use crate::geom::{BoxRegion, PointT};
use crate::rng::{labels, RngSpec};
use crate::scalar::Scalar;
use crate::sim::SimParams;
use crate::spatial::{LandmarkIndex, SegmentSet};
use rand::Rng;
use rayon::prelude::*;

// ---------------------------------------------------------------------------
// closed-form constants
// ---------------------------------------------------------------------------

/// Gamma(twice/2) for half-integer arguments, twice >= 1.
pub fn gamma_half_int(twice: u32) -> f64 {
    assert!(twice >= 1);
    if twice % 2 == 0 {
        // integer argument n = twice/2: (n-1)!
        let n = twice / 2;
        (1..n).map(|k| k as f64).product()
    } else {
        // half-integer: Gamma(1/2) = sqrt(pi), Gamma(x+1) = x Gamma(x)
        let mut acc = std::f64::consts::PI.sqrt();
        let mut x = 0.5;
        while (2.0 * x) as u32 != twice {
            acc *= x;
            x += 1.0;
        }
        acc
    }
}

/// pi^(d/2).
pub fn pi_pow_half(d: usize) -> f64 {
    let pi = std::f64::consts::PI;
    if d % 2 == 0 {
        pi.powi((d / 2) as i32)
    } else {
        pi.powi((d / 2) as i32) * pi.sqrt()
    }
}

/// The Green-function coefficient c_d with g(x, y) = c_d |x-y|^(2-d),
/// obtained by integrating the heat kernel (2 pi t)^(-d/2) e^(-r^2/2t)
/// over all time.
pub fn green_coeff(d: usize) -> f64 {
    assert!(d >= 3, "transient dimension required");
    gamma_half_int(d as u32 - 2) / (2.0 * pi_pow_half(d))
}

/// Surface area of the unit (d-1)-sphere.
pub fn sphere_surface(d: usize) -> f64 {
    2.0 * pi_pow_half(d) / gamma_half_int(d as u32)
}

/// Volume of the unit d-ball.
pub fn ball_volume(d: usize) -> f64 {
    pi_pow_half(d) / gamma_half_int(d as u32 + 2)
}

/// g at separation r.
#[inline]
pub fn green_of_dist<F: Scalar>(d: usize, r: F) -> F {
    F::from_f64_c(green_coeff(d)) * r.powi(2 - d as i32)
}

/// Green function g(x, y) = c_d |x-y|^(2-d).
pub fn green<F: Scalar>(x: &PointT<F>, y: &PointT<F>) -> Result<F> {
    let d = x.dim();
    crate::geom::check_dim(d)?;
    let r = x.dist(y);
    if r == F::zero() {
        return Err(Error::domain("green function singular at x = y"));
    }
    Ok(green_of_dist(d, r))
}

/// Integral of g(0, .) over B(0, rho): c_d * S_{d-1} * rho^2 / 2.
pub fn ball_green_integral(d: usize, rho: f64) -> f64 {
    green_coeff(d) * sphere_surface(d) * rho * rho / 2.0
}

// ---------------------------------------------------------------------------
// capacity estimates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapacityMethod {
    McHitting,
    ClosedForm,
    GridLower,
    GridUpper,
}

impl CapacityMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CapacityMethod::McHitting => "mc_hitting",
            CapacityMethod::ClosedForm => "closed_form",
            CapacityMethod::GridLower => "grid_lower",
            CapacityMethod::GridUpper => "grid_upper",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityEstimate<F> {
    pub value: F,
    pub std_error: F,
    pub n_walkers: u64,
    pub method: CapacityMethod,
    /// Absolute bound on the systematic bias (0 for closed forms).
    pub bias_bound: F,
}

/// cap(B(0, R)) = R^(d-2) / c_d.
pub fn cap_ball_closed_form<F: Scalar>(d: usize, radius: F) -> Result<CapacityEstimate<F>> {
    crate::geom::check_dim(d)?;
    if radius <= F::zero() {
        return Err(Error::domain("ball radius must be positive"));
    }
    Ok(CapacityEstimate {
        value: radius.powi(d as i32 - 2) / F::from_f64_c(green_coeff(d)),
        std_error: F::zero(),
        n_walkers: 0,
        method: CapacityMethod::ClosedForm,
        bias_bound: F::zero(),
    })
}

/// P_z[hit B(0, R)] = (R/|z|)^(d-2) for |z| > R.
pub fn hitting_prob_ball<F: Scalar>(z: &PointT<F>, radius: F) -> Result<F> {
    let d = z.dim();
    crate::geom::check_dim(d)?;
    if radius <= F::zero() {
        return Err(Error::domain("ball radius must be positive"));
    }
    let nz = z.norm();
    if nz <= radius {
        return Err(Error::domain("start point must lie outside the ball"));
    }
    Ok((radius / nz).powi(d as i32 - 2))
}

// ---------------------------------------------------------------------------
// hit regions and the capacity walker
// ---------------------------------------------------------------------------

/// A compact target for hitting simulations. `dist_lower` must never
/// overestimate the distance to the set and must be exact near it (within
/// a few eps_hit), so hit detection stays honest while far-field steps
/// can be sized from the bound.
pub trait HitRegion<F: Scalar>: Sync {
    fn dim(&self) -> usize;
    fn center(&self) -> PointT<F>;
    fn circumradius(&self) -> F;
    fn dist_lower(&self, p: &PointT<F>) -> F;
}

impl<F: Scalar> HitRegion<F> for BoxRegion<F> {
    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn center(&self) -> PointT<F> {
        self.center
    }

    fn circumradius(&self) -> F {
        BoxRegion::circumradius(self)
    }

    fn dist_lower(&self, p: &PointT<F>) -> F {
        self.dist(p)
    }
}

/// The r-sausage B(K, r) of a box region K.
#[derive(Debug, Clone, Copy)]
pub struct InflatedRegion<F> {
    pub region: BoxRegion<F>,
    pub r: F,
}

impl<F: Scalar> InflatedRegion<F> {
    pub fn new(region: BoxRegion<F>, r: F) -> Result<Self> {
        if r < F::zero() {
            return Err(Error::domain("inflation radius must be nonnegative"));
        }
        Ok(InflatedRegion { region, r })
    }
}

impl<F: Scalar> HitRegion<F> for InflatedRegion<F> {
    fn dim(&self) -> usize {
        self.region.center.dim()
    }

    fn center(&self) -> PointT<F> {
        self.region.center
    }

    fn circumradius(&self) -> F {
        self.region.circumradius() + self.r
    }

    fn dist_lower(&self, p: &PointT<F>) -> F {
        (self.region.dist(p) - self.r).max(F::zero())
    }
}

/// Union of radius-`radius` sausages around polylines, hash-indexed for
/// exact near-field distances and pyramid-certified far-field clearances.
pub struct SausageRegion<F> {
    pub radius: F,
    dim: usize,
    center: PointT<F>,
    circum: F,
    bbox_lo: PointT<F>,
    bbox_hi: PointT<F>,
    fine: SegmentSet<F>,
    landmarks: LandmarkIndex<F>,
}

impl<F: Scalar> SausageRegion<F> {
    /// Build from polylines; `owner` ids tag which polyline each segment
    /// came from. `eps` is the hit tolerance the region will be probed at.
    pub fn from_polylines(
        polylines: &[Vec<PointT<F>>],
        radius: F,
        eps: F,
    ) -> Result<Self> {
        let mut dim = 0;
        let mut lo = [F::infinity(); crate::geom::MAX_DIM];
        let mut hi = [F::neg_infinity(); crate::geom::MAX_DIM];
        let mut n_pts = 0usize;
        for poly in polylines {
            for p in poly {
                dim = p.dim();
                n_pts += 1;
                for i in 0..dim {
                    lo[i] = lo[i].min(p.coord(i));
                    hi[i] = hi[i].max(p.coord(i));
                }
            }
        }
        if n_pts == 0 {
            return Err(Error::domain("sausage region needs at least one point"));
        }
        let three = F::from_f64_c(3.0);
        let fine_cell = radius.max(eps);
        let reach = radius + three * eps;
        let mut fine = SegmentSet::new(fine_cell, reach);
        let mut extent = F::zero();
        for i in 0..dim {
            extent = extent.max(hi[i] - lo[i]);
        }
        let _ = extent;
        for (owner, poly) in polylines.iter().enumerate() {
            if poly.len() == 1 {
                fine.insert(poly[0], poly[0], owner as u32);
            }
            for w in poly.windows(2) {
                fine.insert(w[0], w[1], owner as u32);
            }
        }
        let half = F::from_f64_c(0.5);
        let landmarks = LandmarkIndex::build(polylines, radius * half, radius + radius);
        let mut center = PointT::zero(dim);
        for i in 0..dim {
            center.set_coord(i, (lo[i] + hi[i]) * half);
        }
        let mut circ_sq = F::zero();
        for i in 0..dim {
            let e = (hi[i] - lo[i]) * half;
            circ_sq += e * e;
        }
        let circum = circ_sq.sqrt() + radius;
        let mut bbox_lo = PointT::zero(dim);
        let mut bbox_hi = PointT::zero(dim);
        for i in 0..dim {
            bbox_lo.set_coord(i, lo[i] - radius);
            bbox_hi.set_coord(i, hi[i] + radius);
        }
        Ok(SausageRegion {
            radius,
            dim,
            center,
            circum,
            bbox_lo,
            bbox_hi,
            fine,
            landmarks,
        })
    }

    fn bbox_dist(&self, p: &PointT<F>) -> F {
        let mut acc = F::zero();
        for i in 0..self.dim {
            let e = (self.bbox_lo.coord(i) - p.coord(i))
                .max(p.coord(i) - self.bbox_hi.coord(i))
                .max(F::zero());
            acc += e * e;
        }
        acc.sqrt()
    }

    /// Exact distance to the sausage whenever it is below reach - radius;
    /// otherwise a certified positive lower bound (landmark-based in the
    /// mid range, bounding box in the far field).
    pub fn distance_bound(&self, p: &PointT<F>) -> F {
        let lm = (self.landmarks.polyline_distance_lower(p) - self.radius).max(F::zero());
        let mut lb = self.bbox_dist(p).max(lm);
        let poly_lb = match self.fine.listed_distance(p) {
            Some(d) if d <= self.fine.reach => d,
            _ => self.fine.reach,
        };
        lb = lb.max((poly_lb - self.radius).max(F::zero()));
        lb
    }

    /// Whether p lies within `tol` of the sausage (exact for tol <= 3 eps).
    pub fn hits(&self, p: &PointT<F>, tol: F) -> bool {
        match self.fine.listed_distance(p) {
            Some(d) => d <= self.radius + tol,
            None => false,
        }
    }

    pub fn n_segments(&self) -> usize {
        self.fine.n_segments()
    }
}

impl<F: Scalar> HitRegion<F> for SausageRegion<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn center(&self) -> PointT<F> {
        self.center
    }

    fn circumradius(&self) -> F {
        self.circum
    }

    fn dist_lower(&self, p: &PointT<F>) -> F {
        self.distance_bound(p)
    }
}

/// Uniform direction on the unit sphere (normalized Gaussian vector).
pub fn uniform_sphere_dir<F: Scalar, R: Rng + ?Sized>(d: usize, rng: &mut R) -> PointT<F> {
    loop {
        let mut v = PointT::zero(d);
        for i in 0..d {
            v.set_coord(i, F::standard_normal(rng));
        }
        let n = v.norm();
        if n > F::zero() {
            return v.scale(F::one() / n);
        }
    }
}

/// Uniform point in the unit ball.
pub fn uniform_ball_point<F: Scalar, R: Rng + ?Sized>(d: usize, rng: &mut R) -> PointT<F> {
    let dir = uniform_sphere_dir::<F, R>(d, rng);
    let u: F = F::unit_uniform(rng);
    let exp = F::one() / F::from_f64_c(d as f64);
    dir.scale(u.powf(exp))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WalkOutcome<F> {
    Hit(PointT<F>),
    Killed,
    Exhausted,
}

/// Fraction of the current clearance used as the far-field step scale.
const FAR_STEP_FRACTION: f64 = 0.2;

/// One launch: start uniform on the sphere of radius rho_big around the
/// region center, walk Gaussian steps until within eps_hit of the region
/// (hit) or past rho_kill (killed). Step variance adapts to the certified
/// clearance so far excursions stay cheap while near-field resolution is
/// fixed by step_h.
pub fn run_capacity_walker<F: Scalar, H: HitRegion<F> + ?Sized, R: Rng + ?Sized>(
    region: &H,
    sim: &SimParams<F>,
    rng: &mut R,
) -> WalkOutcome<F> {
    let d = region.dim();
    let center = region.center();
    let dir = uniform_sphere_dir::<F, R>(d, rng);
    let mut x = center.add(&dir.scale(sim.rho_big));
    let base_sigma = sim.step_sigma(d);
    let theta = F::from_f64_c(FAR_STEP_FRACTION);
    let sqrt_d = F::from_f64_c(d as f64).sqrt();
    for _ in 0..sim.max_steps {
        let dist = region.dist_lower(&x);
        if dist <= sim.eps_hit {
            return WalkOutcome::Hit(x);
        }
        if x.dist(&center) >= sim.rho_kill {
            return WalkOutcome::Killed;
        }
        let sigma = base_sigma.max(theta * dist);
        gaussian_step(&mut x, sigma / sqrt_d, rng);
    }
    WalkOutcome::Exhausted
}

/// Monte Carlo capacity from the far-field hitting identity. The
/// spherical mean of the equilibrium potential over the launch sphere is
/// exactly cap(K) c_d rho^(2-d) once the sphere encloses K, and walkers
/// killed at rho_kill would still hit with probability
/// cap(K) c_d rho_kill^(2-d) to leading order, so
///   cap = p_hit / (c_d (rho_big^(2-d) - p_kill rho_kill^(2-d))).
/// The residual bias is O(circ/rho_kill) relative to the kill term plus
/// the O(h) boundary-offset detection error.
pub fn estimate_capacity_mc<F: Scalar, H: HitRegion<F> + ?Sized>(
    region: &H,
    sim: &SimParams<F>,
    n_walkers: u64,
    rng: &RngSpec,
) -> Result<CapacityEstimate<F>> {
    let d = region.dim();
    crate::geom::check_dim(d)?;
    let circ = region.circumradius();
    sim.validate(circ)?;
    if n_walkers == 0 {
        return Err(Error::config("need at least one walker"));
    }
    let hits: u64 = (0..n_walkers)
        .into_par_iter()
        .map(|i| {
            let mut r = rng.replica(i).stream(labels::CAPACITY_MC);
            match run_capacity_walker(region, sim, &mut r) {
                WalkOutcome::Hit(_) => 1u64,
                _ => 0u64,
            }
        })
        .sum();
    if hits == 0 {
        return Err(Error::config(
            "no hits recorded; hitting probability below resolution (window too small?)",
        ));
    }
    let n = F::from_f64_c(n_walkers as f64);
    let p = F::from_f64_c(hits as f64) / n;
    let p_kill = F::one() - p;
    let cd = F::from_f64_c(green_coeff(d));
    let denom =
        cd * (sim.rho_big.powi(2 - d as i32) - p_kill * sim.rho_kill.powi(2 - d as i32));
    let value = p / denom;
    let se = (p * (F::one() - p) / n).sqrt() / denom;
    // kill-sphere angular correction plus epsilon-shell detection offset
    let rel_bias = (circ / sim.rho_kill).powi(d as i32 - 2) * (circ / sim.rho_big)
        + F::from_f64_c((d - 2) as f64) * sim.eps_hit / circ;
    Ok(CapacityEstimate {
        value,
        std_error: se,
        n_walkers,
        method: CapacityMethod::McHitting,
        bias_bound: value * rel_bias,
    })
}

const MAX_EQUILIBRIUM_ATTEMPTS: usize = 200_000;

/// One draw from the harmonic measure from infinity (the normalized
/// equilibrium measure): relaunch until a walker hits, return the hit
/// location on the eps_hit shell of the region.
pub fn sample_equilibrium_with<F: Scalar, H: HitRegion<F> + ?Sized, R: Rng + ?Sized>(
    region: &H,
    sim: &SimParams<F>,
    rng: &mut R,
) -> Result<PointT<F>> {
    for _ in 0..MAX_EQUILIBRIUM_ATTEMPTS {
        if let WalkOutcome::Hit(p) = run_capacity_walker(region, sim, rng) {
            return Ok(p);
        }
    }
    Err(Error::config(
        "equilibrium acceptance rate below 1e-4; launch sphere far too large",
    ))
}

pub fn sample_equilibrium<F: Scalar, H: HitRegion<F> + ?Sized>(
    region: &H,
    sim: &SimParams<F>,
    rng: &RngSpec,
) -> Result<PointT<F>> {
    sim.validate(region.circumradius())?;
    sample_equilibrium_with(region, sim, &mut rng.stream(labels::EQUILIBRIUM))
}

/// n independent equilibrium draws (parallel, order-stable).
pub fn sample_equilibrium_batch<F: Scalar, H: HitRegion<F> + ?Sized>(
    region: &H,
    sim: &SimParams<F>,
    n: usize,
    rng: &RngSpec,
) -> Result<Vec<PointT<F>>> {
    sim.validate(region.circumradius())?;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut r = rng.replica(i as u64).stream(labels::EQUILIBRIUM);
            sample_equilibrium_with(region, sim, &mut r)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// pair Green energies and pair visit rates
// ---------------------------------------------------------------------------

/// Monte Carlo estimate of the pair Green energy
/// F_L(i,j) = int_{[L/2,L]^2} int int g(x,y) 1_{B(Xi_s,1)}(x) 1_{B(Xj_t,1)}(y) dx dy ds dt
/// by uniform sampling of (s, t) and of the two unit-ball points.
pub fn pair_green_energy<F: Scalar>(
    traj_i: &crate::brownian::Trajectory<F>,
    traj_j: &crate::brownian::Trajectory<F>,
    l: F,
    n_samples: usize,
    rng: &RngSpec,
) -> Result<F> {
    let d = traj_i.dim();
    if d < 5 {
        return Err(Error::domain("pair Green energy requires d >= 5"));
    }
    if l < F::from_f64_c(2.0) {
        return Err(Error::domain("pair Green energy requires L >= 2"));
    }
    if traj_i.duration() < l || traj_j.duration() < l {
        return Err(Error::domain("trajectories must cover [0, L]"));
    }
    let mut r = rng.stream(labels::PAIR_ENERGY);
    let half = F::from_f64_c(0.5);
    let vol = F::from_f64_c(ball_volume(d));
    let mut acc = F::zero();
    let mut used = 0u64;
    for _ in 0..n_samples {
        let s = l * (half + half * F::unit_uniform(&mut r));
        let t = l * (half + half * F::unit_uniform(&mut r));
        let x = traj_i
            .at_time(s)
            .add(&uniform_ball_point::<F, _>(d, &mut r));
        let y = traj_j
            .at_time(t)
            .add(&uniform_ball_point::<F, _>(d, &mut r));
        let dist = x.dist(&y);
        if dist == F::zero() {
            continue;
        }
        acc += green_of_dist(d, dist);
        used += 1;
    }
    if used == 0 {
        return Err(Error::config("all pair-energy samples degenerate"));
    }
    let mean = acc / F::from_f64_c(used as f64);
    let time_box = (l * half) * (l * half);
    Ok(mean * time_box * vol * vol)
}

/// Estimated intensity of trajectories visiting both B(x, 2 rho) and
/// B(y, 2 rho): 2 alpha cap(B(2 rho)) P_eq[hit the second ball], with the
/// start drawn from the equilibrium measure of the first ball. Overlapping
/// balls count a both-ball start as an immediate hit.
pub fn pair_visit_rate<F: Scalar>(
    x: &PointT<F>,
    y: &PointT<F>,
    alpha: F,
    sim: &SimParams<F>,
    n_walkers: u64,
    rng: &RngSpec,
) -> Result<F> {
    let d = x.dim();
    crate::geom::check_dim(d)?;
    if x == y {
        return Err(Error::domain("pair visit rate requires x != y"));
    }
    let (_, rho) = crate::geom::model_constants::<F>(d)?;
    let two = F::from_f64_c(2.0);
    let r2 = two * rho;
    let ball_x = BoxRegion::ball(*x, r2)?;
    let ball_y = BoxRegion::ball(*y, r2)?;
    let sep = x.dist(y);
    // equilibrium launches around the first ball
    let mut sim_eq = *sim;
    sim_eq.rho_big = two * r2;
    sim_eq.rho_kill = sim_eq.rho_big * F::from_f64_c(10.0);
    sim_eq.rho_esc = sim_eq.rho_big;
    sim_eq.validate(r2)?;
    // kill sphere around the midpoint, generous relative to the separation
    let mid = x.add(y).scale(F::from_f64_c(0.5));
    let rho_kill = F::from_f64_c(8.0) * (sep * F::from_f64_c(0.5) + r2);
    let cap1 = cap_ball_closed_form::<F>(d, r2)?.value;
    let theta = F::from_f64_c(FAR_STEP_FRACTION);
    let sqrt_d = F::from_f64_c(d as f64).sqrt();
    let base_sigma = sim.step_sigma(d);

    let hits: u64 = (0..n_walkers)
        .into_par_iter()
        .map(|i| {
            let spec = rng.replica(i);
            let mut r = spec.stream(labels::EQUILIBRIUM);
            let Ok(start) = sample_equilibrium_with(&ball_x, &sim_eq, &mut r) else {
                return 0u64;
            };
            let mut walk_rng = spec.stream(labels::TRAJECTORY);
            let mut p = start;
            for _ in 0..sim.max_steps {
                let dist = ball_y.dist_lower(&p);
                if dist <= sim.eps_hit {
                    return 1u64;
                }
                if p.dist(&mid) >= rho_kill {
                    return 0u64;
                }
                let sigma = base_sigma.max(theta * dist);
                gaussian_step(&mut p, sigma / sqrt_d, &mut walk_rng);
            }
            0u64
        })
        .sum();
    let p_hat = F::from_f64_c(hits as f64) / F::from_f64_c(n_walkers as f64);
    Ok(two * alpha * cap1 * p_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    type F = f64;

    #[test]
    fn green_values_d3() {
        let x = PointT::from_slice(&[0.0, 0.0, 0.0]);
        let y = PointT::from_slice(&[1.0, 0.0, 0.0]);
        // analytic time integral of (2 pi t)^(-3/2) exp(-r^2/2t): 1/(2 pi r)
        let g = green::<F>(&x, &y).unwrap();
        assert!((g - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
        let y2 = PointT::from_slice(&[0.0, 2.0, 0.0]);
        let g2 = green::<F>(&x, &y2).unwrap();
        assert!((g2 - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-12);
        assert!(green::<F>(&x, &x).is_err());
    }

    #[test]
    fn green_quadrature_oracle() {
        // numerically integrate the transition density over time and
        // compare to c_d r^(2-d) for every supported dimension
        for d in 3..=8usize {
            let r: f64 = 1.7;
            // substitution u = r^2/(2t): integral = c_d r^(2-d) exactly;
            // here brute-force the t-integral on a log grid
            let mut acc = 0.0;
            let n = 400_000;
            let t_lo = 1e-6_f64;
            let t_hi = 1e8_f64;
            let ratio = (t_hi / t_lo).powf(1.0 / n as f64);
            let mut t = t_lo;
            for _ in 0..n {
                let t_next = t * ratio;
                let tm = 0.5 * (t + t_next);
                let p = (2.0 * std::f64::consts::PI * tm).powf(-(d as f64) / 2.0)
                    * (-r * r / (2.0 * tm)).exp();
                acc += p * (t_next - t);
                t = t_next;
            }
            let expect = green_of_dist::<F>(d, r);
            assert!(
                (acc - expect).abs() / expect < 1e-3,
                "d={d}: quadrature {acc} vs closed form {expect}"
            );
        }
    }

    #[test]
    fn green_symmetry() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        for _ in 0..50 {
            let d = 3 + (rng.random::<u32>() % 6) as usize;
            let mut a = PointT::<F>::zero(d);
            let mut b = PointT::<F>::zero(d);
            for i in 0..d {
                a.set_coord(i, rng.random::<f64>() * 10.0 - 5.0);
                b.set_coord(i, rng.random::<f64>() * 10.0 - 5.0);
            }
            if a == b {
                continue;
            }
            assert_eq!(green::<F>(&a, &b).unwrap(), green::<F>(&b, &a).unwrap());
        }
    }

    #[test]
    fn ball_capacity_closed_form() {
        let c3 = cap_ball_closed_form::<F>(3, 1.0).unwrap();
        assert!((c3.value - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(c3.method, CapacityMethod::ClosedForm);
        assert_eq!(c3.std_error, 0.0);
        let c5 = cap_ball_closed_form::<F>(5, 1.0).unwrap();
        assert!((c5.value - 4.0 * std::f64::consts::PI.powi(2)).abs() < 1e-9);
        // scaling exponent d-2 is exact
        for d in 3..=8 {
            let c1 = cap_ball_closed_form::<F>(d, 1.0).unwrap().value;
            let c2 = cap_ball_closed_form::<F>(d, 2.0).unwrap().value;
            assert!((c2 / c1 - 2f64.powi(d as i32 - 2)).abs() < 1e-9);
        }
        assert!(cap_ball_closed_form::<F>(3, 0.0).is_err());
    }

    #[test]
    fn hitting_prob_examples() {
        let z = PointT::from_slice(&[2.0, 0.0, 0.0]);
        assert!((hitting_prob_ball::<F>(&z, 1.0).unwrap() - 0.5).abs() < 1e-12);
        // monotone decay to zero
        let mut last = 1.0;
        for k in 1..20 {
            let z = PointT::from_slice(&[1.0 + k as f64, 0.0, 0.0]);
            let p = hitting_prob_ball::<F>(&z, 1.0).unwrap();
            assert!(p < last);
            last = p;
        }
        assert!(last < 0.06);
        // boundary limit: |z| -> R+ gives 1
        let z = PointT::from_slice(&[1.0 + 1e-9, 0.0, 0.0]);
        assert!((hitting_prob_ball::<F>(&z, 1.0).unwrap() - 1.0).abs() < 1e-8);
        let inside = PointT::from_slice(&[0.5, 0.0, 0.0]);
        assert!(hitting_prob_ball::<F>(&inside, 1.0).is_err());
    }

    #[test]
    fn mc_capacity_matches_closed_form_quick() {
        let d = 3;
        let ball = BoxRegion::ball(PointT::<F>::zero(d), 1.0).unwrap();
        let mut sim = SimParams::for_region(d, 1.0, 1.0);
        sim = sim.with_step(2e-5, d);
        let est = estimate_capacity_mc(&ball, &sim, 20_000, &RngSpec::new(2024, 0)).unwrap();
        let truth = 2.0 * std::f64::consts::PI;
        assert!(
            (est.value - truth).abs() < 3.0 * est.std_error + 0.05 * truth,
            "mc {} vs closed form {truth} (se {})",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn mc_capacity_monotone_in_inclusion() {
        let d = 3;
        let small = BoxRegion::ball(PointT::<F>::zero(d), 1.0).unwrap();
        let big = BoxRegion::ball(PointT::<F>::zero(d), 1.3).unwrap();
        let sim = SimParams::for_region(d, 1.3, 1.0).with_step(5e-5, d);
        let e1 = estimate_capacity_mc(&small, &sim, 20_000, &RngSpec::new(5, 0)).unwrap();
        let e2 = estimate_capacity_mc(&big, &sim, 20_000, &RngSpec::new(6, 0)).unwrap();
        let joint = 3.0 * (e1.std_error + e2.std_error);
        assert!(e1.value <= e2.value + joint);
    }

    #[test]
    fn equilibrium_on_ball_uniform_octants() {
        let d = 3;
        let ball = BoxRegion::ball(PointT::<F>::zero(d), 1.0).unwrap();
        let sim = SimParams::for_region(d, 1.0, 1.0).with_step(1e-4, d);
        let n = 8_000;
        let pts = sample_equilibrium_batch(&ball, &sim, n, &RngSpec::new(77, 0)).unwrap();
        let mut counts = [0f64; 8];
        for p in &pts {
            let mut idx = 0;
            for i in 0..3 {
                if p.coord(i) > 0.0 {
                    idx |= 1 << i;
                }
            }
            counts[idx] += 1.0;
        }
        let expect = n as f64 / 8.0;
        let chi2: f64 = counts.iter().map(|c| (c - expect).powi(2) / expect).sum();
        // chi-square with 7 dof at the 1% level
        assert!(chi2 < 18.48, "octant chi2 {chi2}");
        // accepted points sit on a thin shell around the boundary: at
        // most eps_hit outside, and inside only by step-overshoot depth
        for p in &pts {
            let r = p.norm();
            assert!(
                r >= 1.0 - 6.0 * sim.eps_hit && r <= 1.0 + sim.eps_hit + 1e-12,
                "hit radius {r} outside shell (eps {})",
                sim.eps_hit
            );
        }
    }

    #[test]
    fn sausage_region_distances() {
        let path = vec![
            PointT::from_slice(&[0.0, 0.0, 0.0]),
            PointT::from_slice(&[2.0, 0.0, 0.0]),
            PointT::from_slice(&[2.0, 2.0, 0.0]),
        ];
        let region = SausageRegion::from_polylines(&[path], 1.0, 0.05).unwrap();
        // inside the tube
        let p = PointT::from_slice(&[1.0, 0.5, 0.0]);
        assert_eq!(region.dist_lower(&p), 0.0);
        assert!(region.hits(&p, 0.05));
        // just outside (0.3 keeps it 1.7 away from the second segment)
        let q = PointT::from_slice(&[0.3, 1.08, 0.0]);
        let dl: f64 = region.dist_lower(&q);
        assert!((dl - 0.08).abs() < 1e-9, "{dl}");
        // far away: bound positive and below truth
        let far = PointT::from_slice(&[30.0, -40.0, 7.0]);
        let lb = region.dist_lower(&far);
        let truth: f64 = crate::geom::point_segment_dist_sq(
            &far,
            &PointT::from_slice(&[0.0, 0.0, 0.0]),
            &PointT::from_slice(&[2.0, 0.0, 0.0]),
        )
        .sqrt()
        .min(
            crate::geom::point_segment_dist_sq(
                &far,
                &PointT::from_slice(&[2.0, 0.0, 0.0]),
                &PointT::from_slice(&[2.0, 2.0, 0.0]),
            )
            .sqrt(),
        ) - 1.0;
        assert!(lb > 1.0 && lb <= truth + 1e-9, "lb {lb} truth {truth}");
    }
}
