//! Finite-window sampling of the Brownian interlacement via its local
//! picture: trajectories entering B(K, r) form a Poisson process of
//! intensity alpha * cap(B(K, r)) with equilibrium-distributed entry
//! points. Level labels are attached so that restriction and superposition
//! give exact monotone couplings across levels.

use crate::brownian::{gaussian_step, Termination, Trajectory};
use crate::capacity::{
    estimate_capacity_mc, sample_equilibrium_with, CapacityEstimate, HitRegion, InflatedRegion,
};
use crate::error::{Error, Result};
use crate::geom::{segment_region_dist, point_segment_dist_sq, BoxRegion, PointT};
use crate::rng::{labels, RngSpec};
use crate::scalar::Scalar;
use crate::sim::SimParams;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

/// Default walker count for the enlarged-window capacity estimate.
pub const DEFAULT_CAP_WALKERS: u64 = 20_000;

/// A level-labeled Poisson collection of forward trajectories representing
/// the interlacement restricted to a compact window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample<F> {
    pub window: BoxRegion<F>,
    pub radius_r: F,
    pub enlarged_cap: CapacityEstimate<F>,
    pub alpha_max: F,
    /// (level label in [0, alpha_max], trajectory); labels are i.i.d.
    /// uniform, so restricting to labels <= alpha reproduces the law at
    /// level alpha.
    pub trajectories: Vec<(F, Trajectory<F>)>,
    pub escape_radius: F,
    pub sim: SimParams<F>,
}

impl<F: Scalar> WindowSample<F> {
    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn n_trajectories(&self) -> usize {
        self.trajectories.len()
    }

    /// Trajectories with label at most alpha.
    pub fn level_slice(&self, alpha: F) -> impl Iterator<Item = &(F, Trajectory<F>)> {
        self.trajectories.iter().filter(move |(u, _)| *u <= alpha)
    }
}

/// The enlarged window B(K, r) as a hit region.
pub fn enlarged_window<F: Scalar>(window: &BoxRegion<F>, r: F) -> Result<InflatedRegion<F>> {
    InflatedRegion::new(*window, r)
}

/// Estimate cap(B(K, r)) for the window, refusing when the 95% CI is wider
/// than 5% of the value (the Poisson mean would be too uncertain).
pub fn window_capacity<F: Scalar>(
    window: &BoxRegion<F>,
    r: F,
    sim: &SimParams<F>,
    n_walkers: u64,
    rng: &RngSpec,
) -> Result<CapacityEstimate<F>> {
    let region = enlarged_window(window, r)?;
    let cap = estimate_capacity_mc(&region, sim, n_walkers, rng)?;
    let rel_ci = F::from_f64_c(1.96) * cap.std_error / cap.value;
    if rel_ci > F::from_f64_c(0.05) {
        return Err(Error::config(format!(
            "capacity CI wider than 5% ({} relative); raise walker count",
            rel_ci
        )));
    }
    Ok(cap)
}

/// Fraction of the clearance from B(K, r) used as the far-field step
/// scale. Inside the enlarged window the clearance is zero, so steps stay
/// at the configured resolution exactly where window observables live;
/// outside, steps grow with the distance so escape excursions stay cheap.
/// Far segments are therefore coarse, which under-resolves far-field
/// sausage geometry (documented one-sided bias).
const FAR_STEP_FRACTION: f64 = 0.2;

/// One forward trajectory of the local picture: start at an equilibrium
/// point of B(K, r), walk to the escape sphere, then re-enter with the
/// far-field return probability (circ/D)^(d-2) from a fresh equilibrium
/// point, each re-entry opening a new leg.
fn sample_window_trajectory<F: Scalar>(
    region: &InflatedRegion<F>,
    center: &PointT<F>,
    sim: &SimParams<F>,
    spec: &RngSpec,
) -> Result<Trajectory<F>> {
    let d = region.dim();
    let circ = region.circumradius();
    let mut eq_rng = spec.stream(labels::EQUILIBRIUM);
    let mut path_rng = spec.stream(labels::TRAJECTORY);
    let base_sigma = sim.step_sigma(d);
    let theta = F::from_f64_c(FAR_STEP_FRACTION);
    let sqrt_d = F::from_f64_c(d as f64).sqrt();
    let mut points: Vec<PointT<F>> = Vec::new();
    let mut leg_starts: Vec<usize> = Vec::new();

    let termination = 'outer: loop {
        let start = sample_equilibrium_with(region, sim, &mut eq_rng)?;
        leg_starts.push(points.len());
        points.push(start);
        let mut x = start;
        loop {
            if points.len() >= sim.max_steps {
                break 'outer Termination::MaxSteps;
            }
            let sigma = base_sigma.max(theta * region.dist_lower(&x));
            gaussian_step(&mut x, sigma / sqrt_d, &mut path_rng);
            points.push(x);
            let dist = x.dist(center);
            if dist >= sim.rho_esc {
                // probabilistic re-entry
                let p_return = (circ / dist).powi(d as i32 - 2);
                let u: F = F::unit_uniform(&mut path_rng);
                if u < p_return {
                    break; // new leg from a fresh equilibrium point
                }
                break 'outer Termination::Escaped { radius: dist };
            }
        }
    };

    Ok(Trajectory {
        step_h: sim.step_h,
        points,
        termination,
        leg_starts,
    })
}

/// Sample the interlacement local picture on the window at level
/// alpha_max, reusing a precomputed enlarged-window capacity.
pub fn sample_window_with_cap<F: Scalar>(
    window: &BoxRegion<F>,
    r: F,
    alpha_max: F,
    sim: &SimParams<F>,
    cap: CapacityEstimate<F>,
    rng: &RngSpec,
) -> Result<WindowSample<F>> {
    if alpha_max < F::zero() {
        return Err(Error::domain("alpha_max must be nonnegative"));
    }
    if r <= F::zero() {
        return Err(Error::domain("sausage radius must be positive"));
    }
    let region = enlarged_window(window, r)?;
    sim.validate(region.circumradius())?;
    let mean = (alpha_max * cap.value).to_f64_c();
    let n = if mean > 0.0 {
        let poisson = Poisson::new(mean)
            .map_err(|e| Error::config(format!("bad Poisson mean: {e}")))?;
        let mut count_rng = rng.stream(labels::POISSON_COUNT);
        poisson.sample(&mut count_rng) as u64
    } else {
        0
    };
    let center = window.center;
    let trajectories: Vec<(F, Trajectory<F>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let spec = rng.replica(i);
            let label = alpha_max * F::unit_uniform(&mut spec.stream(labels::LEVEL_LABEL));
            let traj = sample_window_trajectory(&region, &center, sim, &spec)?;
            Ok((label, traj))
        })
        .collect::<Result<_>>()?;
    Ok(WindowSample {
        window: *window,
        radius_r: r,
        enlarged_cap: cap,
        alpha_max,
        trajectories,
        escape_radius: sim.rho_esc,
        sim: *sim,
    })
}

/// Sample the window, estimating the enlarged capacity first.
pub fn sample_window<F: Scalar>(
    window: &BoxRegion<F>,
    r: F,
    alpha_max: F,
    sim: &SimParams<F>,
    rng: &RngSpec,
) -> Result<WindowSample<F>> {
    let cap = window_capacity(window, r, sim, DEFAULT_CAP_WALKERS, rng)?;
    sample_window_with_cap(window, r, alpha_max, sim, cap, rng)
}

/// Keep exactly the trajectories with label <= alpha; the result has the
/// law of a window sample at level alpha (exact thinning coupling).
pub fn restrict_level<F: Scalar>(s: &WindowSample<F>, alpha: F) -> Result<WindowSample<F>> {
    if alpha < F::zero() || alpha > s.alpha_max {
        return Err(Error::domain(format!(
            "restriction level {alpha} outside [0, {}]",
            s.alpha_max
        )));
    }
    Ok(WindowSample {
        window: s.window,
        radius_r: s.radius_r,
        enlarged_cap: s.enlarged_cap,
        alpha_max: alpha,
        trajectories: s
            .trajectories
            .iter()
            .filter(|(u, _)| *u <= alpha)
            .cloned()
            .collect(),
        escape_radius: s.escape_radius,
        sim: s.sim,
    })
}

/// Union of two independent samples over the same window geometry; labels
/// of the second are shifted by the first's alpha_max.
pub fn superpose<F: Scalar>(
    s1: &WindowSample<F>,
    s2: &WindowSample<F>,
) -> Result<WindowSample<F>> {
    if s1.window != s2.window || s1.radius_r != s2.radius_r || s1.sim != s2.sim {
        return Err(Error::domain(
            "superposition requires identical window, radius and sim parameters",
        ));
    }
    let mut trajectories = s1.trajectories.clone();
    trajectories.extend(
        s2.trajectories
            .iter()
            .map(|(u, t)| (*u + s1.alpha_max, t.clone())),
    );
    Ok(WindowSample {
        window: s1.window,
        radius_r: s1.radius_r,
        enlarged_cap: s1.enlarged_cap,
        alpha_max: s1.alpha_max + s2.alpha_max,
        trajectories,
        escape_radius: s1.escape_radius,
        sim: s1.sim,
    })
}

/// True iff no trajectory of level <= alpha passes within distance r of
/// K0 (exact segment-to-region distance test on the sampled polylines).
pub fn vacancy_indicator<F: Scalar>(
    s: &WindowSample<F>,
    alpha: F,
    k0: &BoxRegion<F>,
) -> Result<bool> {
    if !k0.contained_in(&s.window) {
        return Err(Error::domain(
            "test region must be contained in the sampled window",
        ));
    }
    let r = s.radius_r;
    for (_, traj) in s.level_slice(alpha) {
        for (a, b) in traj.segments() {
            // cheap prefilter: the segment cannot reach K0 if its start is
            // farther than r plus its length
            let rough = k0.dist(a);
            if rough > r + a.dist(b) {
                continue;
            }
            if segment_region_dist(a, b, k0) <= r {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Keep only trajectories whose sampled path never enters B(center, r_in),
/// the window-centered analogue of the annulus restriction.
pub fn restrict_annulus<F: Scalar>(s: &WindowSample<F>, r_in: F) -> WindowSample<F> {
    let center = s.window.center;
    let kept = s
        .trajectories
        .iter()
        .filter(|(_, traj)| {
            !traj.segments().any(|(a, b)| {
                point_segment_dist_sq(&center, a, b).sqrt() < r_in
            })
        })
        .cloned()
        .collect();
    WindowSample {
        window: s.window,
        radius_r: s.radius_r,
        enlarged_cap: s.enlarged_cap,
        alpha_max: s.alpha_max,
        trajectories: kept,
        escape_radius: s.escape_radius,
        sim: s.sim,
    }
}

/// Deterministic rescaling: geometry by lambda, sausage radius to
/// lambda r, levels by lambda^(2-d), capacity by lambda^(d-2); the result
/// is a valid sample at level alpha lambda^(2-d) with radius lambda r.
pub fn scaling_transport<F: Scalar>(s: &WindowSample<F>, lambda: F) -> Result<WindowSample<F>> {
    if lambda <= F::zero() {
        return Err(Error::domain("scaling factor must be positive"));
    }
    let d = s.dim() as i32;
    let level_factor = lambda.powi(2 - d);
    let cap_factor = lambda.powi(d - 2);
    Ok(WindowSample {
        window: s.window.scaled(lambda),
        radius_r: s.radius_r * lambda,
        enlarged_cap: CapacityEstimate {
            value: s.enlarged_cap.value * cap_factor,
            std_error: s.enlarged_cap.std_error * cap_factor,
            n_walkers: s.enlarged_cap.n_walkers,
            method: s.enlarged_cap.method,
            bias_bound: s.enlarged_cap.bias_bound * cap_factor,
        },
        alpha_max: s.alpha_max * level_factor,
        trajectories: s
            .trajectories
            .iter()
            .map(|(u, t)| (*u * level_factor, t.scaled(lambda)))
            .collect(),
        escape_radius: s.escape_radius * lambda,
        sim: s.sim.scaled(lambda),
    })
}

// ---------------------------------------------------------------------------
// line-based text serialization (replay format)
// ---------------------------------------------------------------------------

/// Serialize to the documented line format. Trajectory legs are emitted as
/// consecutive `traj` records sharing the label; readers group them back.
pub fn write_window_sample<F: Scalar>(
    s: &WindowSample<F>,
    out: &mut impl std::io::Write,
) -> std::io::Result<()> {
    let d = s.dim();
    write!(out, "window {d}")?;
    for i in 0..d {
        write!(out, " {}", s.window.center.coord(i))?;
    }
    let norm = match s.window.norm {
        crate::geom::Norm::Euclidean => "euclidean",
        crate::geom::Norm::Linf => "linf",
    };
    writeln!(out, " {} {}", s.window.half_width, norm)?;
    writeln!(out, "radius {}", s.radius_r)?;
    writeln!(out, "alpha_max {}", s.alpha_max)?;
    writeln!(
        out,
        "cap {} {} {} {}",
        s.enlarged_cap.value,
        s.enlarged_cap.std_error,
        s.enlarged_cap.n_walkers,
        s.enlarged_cap.bias_bound
    )?;
    writeln!(out, "escape {}", s.escape_radius)?;
    writeln!(
        out,
        "sim {} {} {} {} {} {}",
        s.sim.step_h, s.sim.rho_big, s.sim.rho_kill, s.sim.rho_esc, s.sim.max_steps, s.sim.eps_hit
    )?;
    for (label, traj) in &s.trajectories {
        for range in traj.leg_ranges() {
            let pts = &traj.points[range];
            write!(out, "traj {} {} {}", label, traj.step_h, pts.len())?;
            for p in pts {
                for i in 0..d {
                    write!(out, " {}", p.coord(i))?;
                }
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Parse the line format back. Consecutive `traj` records with an equal
/// label are reassembled into one multi-leg trajectory.
pub fn read_window_sample<F: Scalar>(text: &str) -> Result<WindowSample<F>> {
    let mut window: Option<BoxRegion<F>> = None;
    let mut radius = None;
    let mut alpha_max = None;
    let mut cap: Option<CapacityEstimate<F>> = None;
    let mut escape = None;
    let mut sim: Option<SimParams<F>> = None;
    let mut trajectories: Vec<(F, Trajectory<F>)> = Vec::new();

    let parse_f = |tok: &str, line: usize| -> Result<F> {
        tok.parse::<f64>()
            .map(F::from_f64_c)
            .map_err(|_| Error::Parse {
                line,
                msg: format!("bad float `{tok}`"),
            })
    };

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() || toks[0].starts_with('#') {
            continue;
        }
        match toks[0] {
            "window" => {
                let d: usize = toks[1].parse().map_err(|_| Error::Parse {
                    line,
                    msg: "bad dimension".into(),
                })?;
                let mut c = PointT::zero(d);
                for i in 0..d {
                    c.set_coord(i, parse_f(toks[2 + i], line)?);
                }
                let hw = parse_f(toks[2 + d], line)?;
                let norm = match toks[3 + d] {
                    "euclidean" => crate::geom::Norm::Euclidean,
                    "linf" => crate::geom::Norm::Linf,
                    other => {
                        return Err(Error::Parse {
                            line,
                            msg: format!("unknown norm `{other}`"),
                        })
                    }
                };
                window = Some(BoxRegion::new(c, hw, norm)?);
            }
            "radius" => radius = Some(parse_f(toks[1], line)?),
            "alpha_max" => alpha_max = Some(parse_f(toks[1], line)?),
            "cap" => {
                cap = Some(CapacityEstimate {
                    value: parse_f(toks[1], line)?,
                    std_error: parse_f(toks[2], line)?,
                    n_walkers: toks[3].parse().map_err(|_| Error::Parse {
                        line,
                        msg: "bad walker count".into(),
                    })?,
                    method: crate::capacity::CapacityMethod::McHitting,
                    bias_bound: parse_f(toks[4], line)?,
                });
            }
            "escape" => escape = Some(parse_f(toks[1], line)?),
            "sim" => {
                sim = Some(SimParams {
                    step_h: parse_f(toks[1], line)?,
                    rho_big: parse_f(toks[2], line)?,
                    rho_kill: parse_f(toks[3], line)?,
                    rho_esc: parse_f(toks[4], line)?,
                    max_steps: toks[5].parse().map_err(|_| Error::Parse {
                        line,
                        msg: "bad max_steps".into(),
                    })?,
                    eps_hit: parse_f(toks[6], line)?,
                });
            }
            "traj" => {
                let w = window.ok_or_else(|| Error::Parse {
                    line,
                    msg: "traj record before window header".into(),
                })?;
                let d = w.dim();
                let label = parse_f(toks[1], line)?;
                let step_h = parse_f(toks[2], line)?;
                let n_points: usize = toks[3].parse().map_err(|_| Error::Parse {
                    line,
                    msg: "bad point count".into(),
                })?;
                if toks.len() != 4 + n_points * d {
                    return Err(Error::Parse {
                        line,
                        msg: format!(
                            "expected {} coordinates, got {}",
                            n_points * d,
                            toks.len() - 4
                        ),
                    });
                }
                let mut pts = Vec::with_capacity(n_points);
                for k in 0..n_points {
                    let mut p = PointT::zero(d);
                    for i in 0..d {
                        p.set_coord(i, parse_f(toks[4 + k * d + i], line)?);
                    }
                    pts.push(p);
                }
                // merge into the previous trajectory when the label matches
                if let Some((prev_label, prev)) = trajectories.last_mut() {
                    if *prev_label == label {
                        prev.leg_starts.push(prev.points.len());
                        prev.points.extend(pts);
                        continue;
                    }
                }
                let escape_r = pts
                    .last()
                    .map(|p| p.dist(&w.center))
                    .unwrap_or_else(F::zero);
                trajectories.push((
                    label,
                    Trajectory {
                        step_h,
                        points: pts,
                        termination: Termination::Escaped { radius: escape_r },
                        leg_starts: vec![0],
                    },
                ));
            }
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown record `{other}`"),
                })
            }
        }
    }
    let window = window.ok_or_else(|| Error::config("missing window record"))?;
    // recompute escape radii for multi-leg trajectories
    for (_, traj) in trajectories.iter_mut() {
        if let Some(p) = traj.points.last() {
            traj.termination = Termination::Escaped {
                radius: p.dist(&window.center),
            };
        }
    }
    Ok(WindowSample {
        window,
        radius_r: radius.ok_or_else(|| Error::config("missing radius"))?,
        enlarged_cap: cap.ok_or_else(|| Error::config("missing cap"))?,
        alpha_max: alpha_max.ok_or_else(|| Error::config("missing alpha_max"))?,
        trajectories,
        escape_radius: escape.ok_or_else(|| Error::config("missing escape"))?,
        sim: sim.ok_or_else(|| Error::config("missing sim"))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Norm;

    type F = f64;

    fn small_sample(alpha: f64, seed: u64) -> WindowSample<F> {
        let window = BoxRegion::cube(PointT::<F>::zero(3), 0.5).unwrap();
        let region = enlarged_window(&window, 1.0).unwrap();
        let mut sim = SimParams::for_region(3, region.circumradius(), 1.0);
        sim.rho_esc = sim.rho_big;
        let cap = window_capacity(&window, 1.0, &sim, 20_000, &RngSpec::new(900, 0)).unwrap();
        sample_window_with_cap(&window, 1.0, alpha, &sim, cap, &RngSpec::new(seed, 0)).unwrap()
    }

    #[test]
    fn zero_level_is_empty() {
        let s = small_sample(0.0, 1);
        assert_eq!(s.n_trajectories(), 0);
    }

    #[test]
    fn restriction_is_nested_and_exact() {
        let s = small_sample(0.4, 2);
        let r1 = restrict_level(&s, 0.1).unwrap();
        let r2 = restrict_level(&s, 0.3).unwrap();
        assert!(r1.n_trajectories() <= r2.n_trajectories());
        for (u, _) in &r1.trajectories {
            assert!(*u <= 0.1);
            assert!(r2.trajectories.iter().any(|(v, _)| v == u));
        }
        // identity at alpha_max, empty at zero
        let full = restrict_level(&s, s.alpha_max).unwrap();
        assert_eq!(full.n_trajectories(), s.n_trajectories());
        let none = restrict_level(&s, 0.0).unwrap();
        assert_eq!(none.n_trajectories(), 0);
        assert!(restrict_level(&s, 0.5).is_err());
    }

    #[test]
    fn superposition_shifts_labels() {
        let s1 = small_sample(0.2, 3);
        let s2 = small_sample(0.2, 4);
        let sum = superpose(&s1, &s2).unwrap();
        assert_eq!(sum.alpha_max, 0.4);
        assert_eq!(
            sum.n_trajectories(),
            s1.n_trajectories() + s2.n_trajectories()
        );
        // superpose with an empty sample is the identity on trajectories
        let empty = small_sample(0.0, 5);
        let same = superpose(&s1, &empty).unwrap();
        assert_eq!(same.n_trajectories(), s1.n_trajectories());
        // mismatched windows refuse
        let mut other = s2.clone();
        other.radius_r = 2.0;
        assert!(superpose(&s1, &other).is_err());
    }

    #[test]
    fn vacancy_monotone_in_level_pathwise() {
        let s = small_sample(0.6, 6);
        let k0 = BoxRegion::new(PointT::<F>::zero(3), 0.3, Norm::Linf).unwrap();
        let mut last = vacancy_indicator(&s, 0.0, &k0).unwrap();
        assert!(last, "alpha = 0 must be vacant");
        for k in 1..=6 {
            let alpha = 0.1 * k as f64;
            let v = vacancy_indicator(&s, alpha, &k0).unwrap();
            assert!(!(v && !last) || last, "vacancy regained at higher level");
            // once occupied, stays occupied
            if !last {
                assert!(!v);
            }
            last = v;
        }
        // region outside the window is a domain error
        let far = BoxRegion::cube(PointT::from_slice(&[5.0, 0.0, 0.0]), 0.2).unwrap();
        assert!(vacancy_indicator(&s, 0.1, &far).is_err());
    }

    #[test]
    fn annulus_restriction_partitions() {
        let s = small_sample(0.5, 7);
        let kept = restrict_annulus(&s, 1.2);
        // identity at r_in = 0
        let all = restrict_annulus(&s, 0.0);
        assert_eq!(all.n_trajectories(), s.n_trajectories());
        // every kept trajectory stays clear of the ball
        for (_, traj) in &kept.trajectories {
            for (a, b) in traj.segments() {
                let dmin = point_segment_dist_sq(&s.window.center, a, b).sqrt();
                assert!(dmin >= 1.2);
            }
        }
        // kept + removed partitions the list
        let removed = s.n_trajectories() - kept.n_trajectories();
        assert_eq!(kept.n_trajectories() + removed, s.n_trajectories());
        // r_in at the escape radius empties the sample: every trajectory
        // starts on the enlarged window boundary, inside that ball
        let huge = restrict_annulus(&s, s.escape_radius + 1.0);
        assert_eq!(huge.n_trajectories(), 0);
    }

    #[test]
    fn transport_identity_and_determinism() {
        let s = small_sample(0.3, 8);
        let t1 = scaling_transport(&s, 1.0).unwrap();
        assert_eq!(t1, s);
        let t2 = scaling_transport(&s, 2.0).unwrap();
        assert_eq!(t2.radius_r, 2.0);
        assert_eq!(t2.alpha_max, s.alpha_max * 0.5);
        // vacancy of the scaled region under the transported sample equals
        // vacancy of the region under the original, exactly
        let k0 = BoxRegion::new(PointT::<F>::zero(3), 0.3, Norm::Linf).unwrap();
        let k0s = k0.scaled(2.0);
        for alpha in [0.05, 0.1, 0.2] {
            let v1 = vacancy_indicator(&s, alpha, &k0).unwrap();
            let v2 = vacancy_indicator(&t2, alpha * 0.5, &k0s).unwrap();
            assert_eq!(v1, v2);
        }
    }

    #[test]
    fn serialization_round_trip() {
        let s = small_sample(0.4, 9);
        let mut buf = Vec::new();
        write_window_sample(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back: WindowSample<F> = read_window_sample(&text).unwrap();
        assert_eq!(back.alpha_max, s.alpha_max);
        assert_eq!(back.radius_r, s.radius_r);
        assert_eq!(back.n_trajectories(), s.n_trajectories());
        for ((u1, t1), (u2, t2)) in s.trajectories.iter().zip(&back.trajectories) {
            assert_eq!(u1, u2);
            assert_eq!(t1.points, t2.points);
            assert_eq!(t1.leg_starts, t2.leg_starts);
        }
        // and the round trip is byte-stable
        let mut buf2 = Vec::new();
        write_window_sample(&back, &mut buf2).unwrap();
        assert_eq!(text.as_bytes(), buf2.as_slice());
    }
}
