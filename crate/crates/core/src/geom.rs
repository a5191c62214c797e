//! Dimension-generic geometry for d in 3..=8.
//!
//! Points carry their dimension at runtime but store coordinates in a fixed
//! array, so inner loops stay allocation-free.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Hard cap on the ambient dimension.
pub const MAX_DIM: usize = 8;
/// Smallest supported dimension (Brownian motion must be transient).
pub const MIN_DIM: usize = 3;

/// Model parameters shared by every experiment: dimension, level, radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<F> {
    pub d: usize,
    pub alpha: F,
    pub r: F,
}

impl<F: Scalar> ModelParams<F> {
    pub fn new(d: usize, alpha: F, r: F) -> Result<Self> {
        check_dim(d)?;
        if alpha < F::zero() {
            return Err(Error::domain("level alpha must be nonnegative"));
        }
        if r <= F::zero() {
            return Err(Error::domain("sausage radius r must be positive"));
        }
        Ok(ModelParams { d, alpha, r })
    }
}

pub fn check_dim(d: usize) -> Result<()> {
    if !(MIN_DIM..=MAX_DIM).contains(&d) {
        return Err(Error::domain(format!(
            "dimension {d} outside supported range {MIN_DIM}..={MAX_DIM}"
        )));
    }
    Ok(())
}

/// Graph-diameter exponent: the smallest integer >= (d-2)/2.
pub fn s_d(d: usize) -> Result<usize> {
    if d < 3 {
        return Err(Error::domain(format!("s_d requires d >= 3, got {d}")));
    }
    Ok((d - 1) / 2)
}

/// The pair (beta, rho) of lattice-bridging constants:
/// beta = 2*sqrt(d) + 4 and rho = sqrt(d)/2 + 1.
pub fn model_constants<F: Scalar>(d: usize) -> Result<(F, F)> {
    if d < 3 {
        return Err(Error::domain(format!(
            "model constants require d >= 3, got {d}"
        )));
    }
    let sq = F::from_f64_c(d as f64).sqrt();
    let two = F::from_f64_c(2.0);
    let beta = two * sq + F::from_f64_c(4.0);
    let rho = sq / two + F::one();
    Ok((beta, rho))
}

/// A point of R^d, d <= MAX_DIM.
#[derive(Clone, Copy, PartialEq)]
pub struct PointT<F> {
    coords: [F; MAX_DIM],
    dim: u8,
}

impl<F> PointT<F> {
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn as_slice(&self) -> &[F] {
        &self.coords[..self.dim as usize]
    }
}

impl<F: Scalar> PointT<F> {
    pub fn zero(d: usize) -> Self {
        debug_assert!(d >= 1 && d <= MAX_DIM);
        PointT {
            coords: [F::zero(); MAX_DIM],
            dim: d as u8,
        }
    }

    pub fn from_slice(v: &[F]) -> Self {
        assert!(v.len() >= 1 && v.len() <= MAX_DIM, "bad point dimension");
        let mut coords = [F::zero(); MAX_DIM];
        coords[..v.len()].copy_from_slice(v);
        PointT {
            coords,
            dim: v.len() as u8,
        }
    }

    #[inline]
    pub fn coord(&self, i: usize) -> F {
        debug_assert!(i < self.dim());
        self.coords[i]
    }

    #[inline]
    pub fn set_coord(&mut self, i: usize, v: F) {
        debug_assert!(i < self.dim());
        self.coords[i] = v;
    }

    #[inline]
    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..self.dim() {
            out.coords[i] += other.coords[i];
        }
        out
    }

    #[inline]
    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..self.dim() {
            out.coords[i] -= other.coords[i];
        }
        out
    }

    #[inline]
    pub fn scale(&self, s: F) -> Self {
        let mut out = *self;
        for i in 0..self.dim() {
            out.coords[i] *= s;
        }
        out
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> F {
        debug_assert_eq!(self.dim, other.dim);
        let mut acc = F::zero();
        for i in 0..self.dim() {
            acc += self.coords[i] * other.coords[i];
        }
        acc
    }

    #[inline]
    pub fn norm_sq(&self) -> F {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> F {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn norm_linf(&self) -> F {
        let mut m = F::zero();
        for i in 0..self.dim() {
            m = m.max(self.coords[i].abs());
        }
        m
    }

    #[inline]
    pub fn dist(&self, other: &Self) -> F {
        self.sub(other).norm()
    }

    #[inline]
    pub fn dist_sq(&self, other: &Self) -> F {
        self.sub(other).norm_sq()
    }

    #[inline]
    pub fn dist_linf(&self, other: &Self) -> F {
        self.sub(other).norm_linf()
    }
}

impl<F: std::fmt::Debug> std::fmt::Debug for PointT<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.as_slice().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c:?}")?;
        }
        write!(f, ")")
    }
}

/// A point of Z^d (unused coordinates stay 0).
pub type LatticePoint = [i64; MAX_DIM];

pub fn lattice_linf(a: &LatticePoint, b: &LatticePoint, d: usize) -> i64 {
    (0..d).map(|i| (a[i] - b[i]).abs()).max().unwrap_or(0)
}

pub fn lattice_l1(a: &LatticePoint, b: &LatticePoint, d: usize) -> i64 {
    (0..d).map(|i| (a[i] - b[i]).abs()).sum()
}

pub fn lattice_dist_sq(a: &LatticePoint, b: &LatticePoint, d: usize) -> i128 {
    (0..d)
        .map(|i| {
            let e = (a[i] - b[i]) as i128;
            e * e
        })
        .sum()
}

/// Integer-rounded image of a continuous point (ties toward smaller).
pub fn lattice_round_int<F: Scalar>(p: &PointT<F>) -> LatticePoint {
    let half = F::from_f64_c(0.5);
    let mut out = [0i64; MAX_DIM];
    for i in 0..p.dim() {
        out[i] = (p.coord(i) - half).ceil().to_f64_c() as i64;
    }
    out
}

/// Round each coordinate to the nearest integer, ties toward the smaller
/// value, so that |p - round(p)| <= sqrt(d)/2 always holds.
pub fn lattice_round<F: Scalar>(p: &PointT<F>) -> PointT<F> {
    let half = F::from_f64_c(0.5);
    let mut out = *p;
    for i in 0..p.dim() {
        out.coords[i] = (p.coords[i] - half).ceil();
    }
    out
}

/// Which norm a region is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    Euclidean,
    Linf,
}

/// A closed ball in either the Euclidean or the l-infinity norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxRegion<F> {
    pub center: PointT<F>,
    pub half_width: F,
    pub norm: Norm,
}

impl<F: Scalar> BoxRegion<F> {
    pub fn new(center: PointT<F>, half_width: F, norm: Norm) -> Result<Self> {
        if half_width <= F::zero() {
            return Err(Error::domain("region half-width must be positive"));
        }
        Ok(BoxRegion {
            center,
            half_width,
            norm,
        })
    }

    pub fn ball(center: PointT<F>, radius: F) -> Result<Self> {
        Self::new(center, radius, Norm::Euclidean)
    }

    pub fn cube(center: PointT<F>, half_width: F) -> Result<Self> {
        Self::new(center, half_width, Norm::Linf)
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Euclidean circumradius of the region.
    pub fn circumradius(&self) -> F {
        match self.norm {
            Norm::Euclidean => self.half_width,
            Norm::Linf => {
                self.half_width * F::from_f64_c(self.dim() as f64).sqrt()
            }
        }
    }

    pub fn contains(&self, p: &PointT<F>) -> bool {
        match self.norm {
            Norm::Euclidean => p.dist(&self.center) <= self.half_width,
            Norm::Linf => p.dist_linf(&self.center) <= self.half_width,
        }
    }

    /// Euclidean distance from p to the region (0 inside).
    pub fn dist(&self, p: &PointT<F>) -> F {
        match self.norm {
            Norm::Euclidean => {
                (p.dist(&self.center) - self.half_width).max(F::zero())
            }
            Norm::Linf => {
                let mut acc = F::zero();
                for i in 0..p.dim() {
                    let e = ((p.coord(i) - self.center.coord(i)).abs()
                        - self.half_width)
                        .max(F::zero());
                    acc += e * e;
                }
                acc.sqrt()
            }
        }
    }

    /// Whether `self` is contained in `other` (conservative circumradius
    /// test for mixed norms, exact for like norms).
    pub fn contained_in(&self, other: &BoxRegion<F>) -> bool {
        let c = self.center.sub(&other.center);
        match (self.norm, other.norm) {
            (Norm::Euclidean, Norm::Euclidean) => {
                c.norm() + self.half_width <= other.half_width
            }
            (Norm::Linf, Norm::Linf) => {
                c.norm_linf() + self.half_width <= other.half_width
            }
            (Norm::Euclidean, Norm::Linf) => {
                c.norm_linf() + self.half_width <= other.half_width
            }
            (Norm::Linf, Norm::Euclidean) => {
                c.norm() + self.circumradius() <= other.half_width
            }
        }
    }

    pub fn scaled(&self, lambda: F) -> Self {
        BoxRegion {
            center: self.center.scale(lambda),
            half_width: self.half_width * lambda,
            norm: self.norm,
        }
    }
}

/// Squared distance from point `p` to segment [a, b].
pub fn point_segment_dist_sq<F: Scalar>(
    p: &PointT<F>,
    a: &PointT<F>,
    b: &PointT<F>,
) -> F {
    let ab = b.sub(a);
    let ap = p.sub(a);
    let denom = ab.norm_sq();
    if denom == F::zero() {
        return ap.norm_sq();
    }
    let t = (ap.dot(&ab) / denom).max(F::zero()).min(F::one());
    let closest = a.add(&ab.scale(t));
    p.dist_sq(&closest)
}

/// Squared distance between segments [p1, q1] and [p2, q2]
/// (closest-point parametrization with clamping).
pub fn segment_segment_dist_sq<F: Scalar>(
    p1: &PointT<F>,
    q1: &PointT<F>,
    p2: &PointT<F>,
    q2: &PointT<F>,
) -> F {
    let d1 = q1.sub(p1);
    let d2 = q2.sub(p2);
    let r = p1.sub(p2);
    let a = d1.norm_sq();
    let e = d2.norm_sq();
    let f = d2.dot(&r);
    let zero = F::zero();
    let one = F::one();

    if a == zero && e == zero {
        return r.norm_sq();
    }
    let (s, t);
    if a == zero {
        s = zero;
        t = (f / e).max(zero).min(one);
    } else {
        let c = d1.dot(&r);
        if e == zero {
            t = zero;
            s = (-c / a).max(zero).min(one);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s_ = if denom != zero {
                ((b * f - c * e) / denom).max(zero).min(one)
            } else {
                zero
            };
            let mut t_ = (b * s_ + f) / e;
            if t_ < zero {
                t_ = zero;
                s_ = (-c / a).max(zero).min(one);
            } else if t_ > one {
                t_ = one;
                s_ = ((b - c) / a).max(zero).min(one);
            }
            s = s_;
            t = t_;
        }
    }
    let c1 = p1.add(&d1.scale(s));
    let c2 = p2.add(&d2.scale(t));
    c1.dist_sq(&c2)
}

/// Minimal Euclidean distance from segment [a, b] to a region
/// (convex in the segment parameter, so golden-section search is exact
/// up to the tolerance).
pub fn segment_region_dist<F: Scalar>(
    a: &PointT<F>,
    b: &PointT<F>,
    region: &BoxRegion<F>,
) -> F {
    if let Norm::Euclidean = region.norm {
        let d2 = point_segment_dist_sq(&region.center, a, b);
        return (d2.sqrt() - region.half_width).max(F::zero());
    }
    // l-inf box: minimize the convex map t -> dist(a + t*(b-a), region).
    let ab = b.sub(a);
    let eval = |t: F| region.dist(&a.add(&ab.scale(t)));
    let mut lo = F::zero();
    let mut hi = F::one();
    let inv_phi = F::from_f64_c(0.618_033_988_749_894_9);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    for _ in 0..70 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2);
        }
    }
    eval(lo).min(eval(hi)).min(f1).min(f2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type P = PointT<f64>;

    #[test]
    fn s_d_table() {
        assert_eq!(s_d(3).unwrap(), 1);
        assert_eq!(s_d(4).unwrap(), 1);
        assert_eq!(s_d(5).unwrap(), 2);
        assert_eq!(s_d(6).unwrap(), 2);
        assert_eq!(s_d(10).unwrap(), 4);
        assert!(s_d(2).is_err());
    }

    #[test]
    fn s_d_monotone_and_shift() {
        for d in 3..=20usize {
            assert!(s_d(d + 1).unwrap() >= s_d(d).unwrap());
            assert_eq!(s_d(d + 2).unwrap(), s_d(d).unwrap() + 1);
        }
    }

    #[test]
    fn model_constant_values() {
        let (b4, r4) = model_constants::<f64>(4).unwrap();
        assert_eq!(b4, 8.0);
        assert_eq!(r4, 2.0);
        let (b9, r9) = model_constants::<f64>(9).unwrap();
        assert!((b9 - 10.0).abs() < 1e-12);
        assert!((r9 - 2.5).abs() < 1e-12);
        let (b3, r3) = model_constants::<f64>(3).unwrap();
        assert!((b3 - 7.464101615137754).abs() < 1e-12);
        assert!((r3 - 1.8660254037844386).abs() < 1e-12);
    }

    #[test]
    fn lattice_round_examples() {
        let p = P::from_slice(&[0.4, 0.4, 0.4]);
        let q = lattice_round(&p);
        assert_eq!(q.as_slice(), &[0.0, 0.0, 0.0]);
        assert!(p.dist(&q) <= 3f64.sqrt() / 2.0);

        // lattice points map to themselves
        let p = P::from_slice(&[2.0, -3.0, 5.0]);
        assert_eq!(lattice_round(&p).as_slice(), p.as_slice());

        // exact half ties break toward the smaller coordinate; the
        // distance sqrt(d)/2 is attained
        let p = P::from_slice(&[0.5, 0.5, 0.5]);
        let q = lattice_round(&p);
        assert_eq!(q.as_slice(), &[0.0, 0.0, 0.0]);
        // exhaustive check over the 8 corner candidates: none is closer
        let best = (0..8)
            .map(|m| {
                let c = P::from_slice(&[
                    (m & 1) as f64,
                    ((m >> 1) & 1) as f64,
                    ((m >> 2) & 1) as f64,
                ]);
                p.dist(&c)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((p.dist(&q) - best).abs() < 1e-15);
        assert!((p.dist(&q) - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn lattice_round_within_half_diagonal(
            d in 3usize..=8,
            raw in proptest::collection::vec(-1e6f64..1e6, 8),
        ) {
            let p = P::from_slice(&raw[..d]);
            let q = lattice_round(&p);
            for i in 0..d {
                prop_assert_eq!(q.coord(i), q.coord(i).round());
            }
            prop_assert!(p.dist(&q) <= (d as f64).sqrt() / 2.0 + 1e-9);
        }

        #[test]
        fn segment_distance_symmetry(
            a in proptest::collection::vec(-10.0f64..10.0, 3),
            b in proptest::collection::vec(-10.0f64..10.0, 3),
            c in proptest::collection::vec(-10.0f64..10.0, 3),
            e in proptest::collection::vec(-10.0f64..10.0, 3),
        ) {
            let (a, b) = (P::from_slice(&a), P::from_slice(&b));
            let (c, e) = (P::from_slice(&c), P::from_slice(&e));
            let d1 = segment_segment_dist_sq(&a, &b, &c, &e);
            let d2 = segment_segment_dist_sq(&c, &e, &a, &b);
            prop_assert!((d1 - d2).abs() <= 1e-9 * (1.0 + d1.abs()));
            // brute-force sampled lower bound
            let mut best = f64::INFINITY;
            for i in 0..=20 {
                for j in 0..=20 {
                    let s = i as f64 / 20.0;
                    let t = j as f64 / 20.0;
                    let p = a.add(&b.sub(&a).scale(s));
                    let q = c.add(&e.sub(&c).scale(t));
                    best = best.min(p.dist_sq(&q));
                }
            }
            prop_assert!(d1 <= best + 1e-9);
        }
    }

    #[test]
    fn segment_region_dist_box() {
        let boxr = BoxRegion::cube(P::from_slice(&[0.0, 0.0, 0.0]), 1.0).unwrap();
        // segment passing by a face at distance 0.5
        let a = P::from_slice(&[1.5, -3.0, 0.0]);
        let b = P::from_slice(&[1.5, 3.0, 0.0]);
        let d = segment_region_dist(&a, &b, &boxr);
        assert!((d - 0.5).abs() < 1e-6, "got {d}");
        // segment through the box
        let a = P::from_slice(&[-2.0, 0.0, 0.0]);
        let b = P::from_slice(&[2.0, 0.0, 0.0]);
        assert_eq!(segment_region_dist(&a, &b, &boxr), 0.0);
    }
}
