//! Shared simulation parameters.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Boundary-offset coefficient for discrete hit detection: accepting at
/// distance 0.5826 sqrt(h) cancels the leading O(sqrt(h)) first-passage
/// bias of Gaussian stepping against a smooth boundary, leaving O(h).
pub const BOUNDARY_OFFSET: f64 = 0.5826;

/// Knobs for path simulation and Monte Carlo capacity estimation.
///
/// `rho_big` is the launch-sphere radius, `rho_kill` the never-return
/// radius, `rho_esc` the escape radius at which window trajectories stop,
/// `eps_hit` the hit-detection tolerance. All radii are measured from the
/// region / window center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams<F> {
    pub step_h: F,
    pub rho_big: F,
    pub rho_kill: F,
    pub rho_esc: F,
    pub max_steps: usize,
    pub eps_hit: F,
}

impl<F: Scalar> SimParams<F> {
    /// Defaults for a region of the given circumradius and characteristic
    /// length `r_char` (the sausage radius in window experiments): launch
    /// at twice the circumradius, kill at ten launch radii, resolve the
    /// region to r_char/10.
    pub fn for_region(d: usize, circumradius: F, r_char: F) -> Self {
        let two = F::from_f64_c(2.0);
        let rho_big = two * circumradius;
        let sigma = r_char / F::from_f64_c(10.0);
        let step_h = sigma * sigma / F::from_f64_c(d as f64);
        SimParams {
            step_h,
            rho_big,
            rho_kill: F::from_f64_c(10.0) * rho_big,
            rho_esc: rho_big,
            max_steps: 20_000_000,
            eps_hit: F::from_f64_c(BOUNDARY_OFFSET) * step_h.sqrt(),
        }
    }

    /// Typical per-step displacement sqrt(step_h * d).
    pub fn step_sigma(&self, d: usize) -> F {
        (self.step_h * F::from_f64_c(d as f64)).sqrt()
    }

    /// Set the step and the matching boundary-offset hit tolerance.
    pub fn with_step(mut self, step_h: F, _d: usize) -> Self {
        self.step_h = step_h;
        self.eps_hit = F::from_f64_c(BOUNDARY_OFFSET) * step_h.sqrt();
        self
    }

    pub fn validate(&self, circumradius: F) -> Result<()> {
        if self.step_h <= F::zero() {
            return Err(Error::config("step_h must be positive"));
        }
        if !(self.rho_big > circumradius) {
            return Err(Error::config(
                "launch radius rho_big must exceed the region circumradius",
            ));
        }
        if !(self.rho_kill > self.rho_big) {
            return Err(Error::config("rho_kill must exceed rho_big"));
        }
        if self.rho_esc < self.rho_big {
            return Err(Error::config("rho_esc must be at least rho_big"));
        }
        if self.eps_hit <= F::zero() {
            return Err(Error::config("eps_hit must be positive"));
        }
        Ok(())
    }

    /// Exact geometric rescaling: lengths by lambda, time by lambda^2.
    pub fn scaled(&self, lambda: F) -> Self {
        SimParams {
            step_h: self.step_h * lambda * lambda,
            rho_big: self.rho_big * lambda,
            rho_kill: self.rho_kill * lambda,
            rho_esc: self.rho_esc * lambda,
            max_steps: self.max_steps,
            eps_hit: self.eps_hit * lambda,
        }
    }
}
