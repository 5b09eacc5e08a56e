//! Wall trajectories `L(t)` and the reparametrized times
//! `τ(t) = ∫₀ᵗ ds/L(s)` (Dirac frame) and `τ₂(t) = ∫₀ᵗ ds/L(s)²`
//! (Schrödinger frame).
//!
//! A [`WallMotion`] is validated once, against its declared window
//! `[0, window_end]`; every evaluation afterwards only checks that `t` lies
//! in that window.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::adaptive_integrate;
use crate::spline::CubicSpline;

/// Relative tolerance for the τ quadratures.
pub const TAU_REL_TOL: f64 = 1e-12;

const WINDOW_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WallLaw {
    /// `L(t) = A + B t`.
    Linear { a: f64, b: f64 },
    /// `L(t) = A + B sin(ω t)`.
    Oscillating { a: f64, b: f64, omega: f64 },
    /// Natural cubic spline through samples; the first sample is at t = 0.
    Tabulated(CubicSpline),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallMotion {
    law: WallLaw,
    window_end: f64,
}

impl WallMotion {
    pub fn linear(a: f64, b: f64, window_end: f64) -> Result<Self> {
        Self::new(WallLaw::Linear { a, b }, window_end)
    }

    pub fn oscillating(a: f64, b: f64, omega: f64, window_end: f64) -> Result<Self> {
        Self::new(WallLaw::Oscillating { a, b, omega }, window_end)
    }

    /// Tabulated wall; the window is the sample range, which must start at 0.
    pub fn tabulated(times: Vec<f64>, lengths: Vec<f64>) -> Result<Self> {
        let spline = CubicSpline::new(times, lengths)?;
        if spline.start() != 0.0 {
            return Err(Error::InvalidWall("tabulated wall must start at t = 0".into()));
        }
        let end = spline.end();
        Self::new(WallLaw::Tabulated(spline), end)
    }

    pub fn new(law: WallLaw, window_end: f64) -> Result<Self> {
        if !(window_end.is_finite() && window_end >= 0.0) {
            return Err(Error::InvalidWall(format!("window end {window_end} must be finite and non-negative")));
        }
        match &law {
            WallLaw::Linear { a, b } => {
                if !(a.is_finite() && b.is_finite()) {
                    return Err(Error::InvalidWall("A and B must be finite".into()));
                }
                if *a <= 0.0 {
                    return Err(Error::InvalidWall(format!("initial length A = {a} must be positive")));
                }
                let end_length = a + b * window_end;
                if end_length <= 0.0 {
                    return Err(Error::InvalidWall(format!(
                        "wall reaches the origin at t = {} inside the window [0, {window_end}]",
                        a / b.abs()
                    )));
                }
            }
            WallLaw::Oscillating { a, b, omega } => {
                if !(a.is_finite() && b.is_finite() && omega.is_finite()) {
                    return Err(Error::InvalidWall("A, B and omega must be finite".into()));
                }
                if *a <= 0.0 {
                    return Err(Error::InvalidWall(format!("mean length A = {a} must be positive")));
                }
                if *omega <= 0.0 {
                    return Err(Error::InvalidWall(format!("angular frequency {omega} must be positive")));
                }
                if b.abs() >= *a {
                    return Err(Error::InvalidWall(format!("oscillation requires |B| < A (got B = {b}, A = {a})")));
                }
            }
            WallLaw::Tabulated(spline) => {
                if window_end > spline.end() {
                    return Err(Error::InvalidWall(format!(
                        "window end {window_end} exceeds the last sample time {}",
                        spline.end()
                    )));
                }
                let (lo, _) = spline.extrema();
                if lo <= 0.0 {
                    return Err(Error::InvalidWall(format!("interpolated length reaches {lo} <= 0")));
                }
            }
        }
        let wall = Self { law, window_end };
        for w in wall.warnings() {
            warn!("{w}");
        }
        Ok(wall)
    }

    pub fn law(&self) -> &WallLaw {
        &self.law
    }

    pub fn window_end(&self) -> f64 {
        self.window_end
    }

    /// Same law, different window (re-validated).
    pub fn with_window(&self, window_end: f64) -> Result<Self> {
        Self::new(self.law.clone(), window_end)
    }

    /// Non-fatal diagnostics, e.g. wall speeds reaching the speed of light.
    pub fn warnings(&self) -> Vec<String> {
        let max_speed = match &self.law {
            WallLaw::Linear { b, .. } => b.abs(),
            WallLaw::Oscillating { b, omega, .. } => (b * omega).abs(),
            WallLaw::Tabulated(s) => {
                let n = 64 * s.knots().len();
                (0..=n)
                    .map(|i| s.eval(s.end() * i as f64 / n as f64).1.abs())
                    .fold(0.0, f64::max)
            }
        };
        if max_speed >= 1.0 {
            vec![format!("wall speed reaches {max_speed:.4} >= 1 (speed of light)")]
        } else {
            Vec::new()
        }
    }

    fn check(&self, t: f64) -> Result<()> {
        let slack = WINDOW_SLACK * (1.0 + self.window_end);
        if !(t >= -slack && t <= self.window_end + slack) {
            return Err(Error::OutOfWindow { t, end: self.window_end });
        }
        Ok(())
    }

    fn eval_unchecked(&self, t: f64) -> (f64, f64) {
        match &self.law {
            WallLaw::Linear { a, b } => (a + b * t, *b),
            WallLaw::Oscillating { a, b, omega } => {
                let (s, c) = (omega * t).sin_cos();
                (a + b * s, b * omega * c)
            }
            WallLaw::Tabulated(spline) => spline.eval(t),
        }
    }

    pub(crate) fn length_unchecked(&self, t: f64) -> f64 {
        self.eval_unchecked(t).0
    }

    pub fn length(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        let l = self.length_unchecked(t);
        if l <= 0.0 {
            return Err(Error::NonPositiveLength { t, length: l });
        }
        Ok(l)
    }

    pub fn length_rate(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.eval_unchecked(t).1)
    }

    /// Smallest length over the window.
    pub fn min_length(&self) -> f64 {
        match &self.law {
            WallLaw::Linear { a, b } => a.min(a + b * self.window_end),
            WallLaw::Oscillating { a, b, omega } => {
                if omega * self.window_end >= std::f64::consts::TAU {
                    a - b.abs()
                } else {
                    sample_extremum(self, f64::min)
                }
            }
            WallLaw::Tabulated(s) => s.extrema().0,
        }
    }

    /// Largest length over the window.
    pub fn max_length(&self) -> f64 {
        match &self.law {
            WallLaw::Linear { a, b } => a.max(a + b * self.window_end),
            WallLaw::Oscillating { a, b, omega } => {
                if omega * self.window_end >= std::f64::consts::TAU {
                    a + b.abs()
                } else {
                    sample_extremum(self, f64::max)
                }
            }
            WallLaw::Tabulated(s) => s.extrema().1,
        }
    }

    /// `τ(t) = ∫₀ᵗ ds / L(s)`.
    pub fn tau_of_t(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        if t < 0.0 {
            return Err(Error::OutOfWindow { t, end: self.window_end });
        }
        Ok(match &self.law {
            WallLaw::Linear { a, b } => linear_tau(*a, *b, t),
            _ => self.tau_by_quadrature(t),
        })
    }

    /// τ(t) by adaptive quadrature regardless of the law.
    pub fn tau_by_quadrature(&self, t: f64) -> f64 {
        adaptive_integrate(|s| 1.0 / self.length_unchecked(s), 0.0, t, TAU_REL_TOL)
    }

    /// `τ₂(t) = ∫₀ᵗ ds / L(s)²`.
    pub fn tau2_of_t(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        if t < 0.0 {
            return Err(Error::OutOfWindow { t, end: self.window_end });
        }
        Ok(match &self.law {
            WallLaw::Linear { a, b } => t / (a * (a + b * t)),
            _ => self.tau2_by_quadrature(t),
        })
    }

    pub fn tau2_by_quadrature(&self, t: f64) -> f64 {
        adaptive_integrate(
            |s| {
                let l = self.length_unchecked(s);
                1.0 / (l * l)
            },
            0.0,
            t,
            TAU_REL_TOL,
        )
    }

    /// Inverse of [`tau_of_t`](Self::tau_of_t).
    pub fn t_of_tau(&self, tau: f64) -> Result<f64> {
        let tau_max = self.tau_of_t(self.window_end)?;
        let slack = WINDOW_SLACK * (1.0 + tau_max);
        if !(tau >= -slack && tau <= tau_max + slack) {
            return Err(Error::TauOutOfRange { tau, max: tau_max });
        }
        let tau = tau.clamp(0.0, tau_max);
        if let WallLaw::Linear { a, b } = self.law {
            return Ok(linear_t_of_tau(a, b, tau).min(self.window_end));
        }
        // Safeguarded Newton: dτ/dt = 1/L, bracket [lo, hi] kept throughout.
        let (mut lo, mut hi) = (0.0, self.window_end);
        let mut t = (tau * self.length_unchecked(0.0)).clamp(lo, hi);
        for _ in 0..100 {
            let f = self.tau_by_quadrature(t) - tau;
            if f.abs() <= 1e-14 * (1.0 + tau) {
                break;
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let mut next = t - f * self.length_unchecked(t);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-15 * (1.0 + t) {
                t = next;
                break;
            }
            t = next;
        }
        Ok(t)
    }
}

fn sample_extremum(w: &WallMotion, pick: fn(f64, f64) -> f64) -> f64 {
    let n = 4096;
    let mut acc = w.length_unchecked(0.0);
    for i in 1..=n {
        acc = pick(acc, w.length_unchecked(w.window_end * i as f64 / n as f64));
    }
    acc
}

pub(crate) fn linear_tau(a: f64, b: f64, t: f64) -> f64 {
    if b == 0.0 {
        t / a
    } else {
        (b * t / a).ln_1p() / b
    }
}

pub(crate) fn linear_t_of_tau(a: f64, b: f64, tau: f64) -> f64 {
    if b == 0.0 {
        a * tau
    } else {
        a * (b * tau).exp_m1() / b
    }
}
