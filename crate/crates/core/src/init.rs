//! Gaussian spinor packets and their projection onto the truncated basis.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::Spinor;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::wall::WallMotion;

/// Gauss–Legendre nodes per quadrature panel.
pub const PANEL_NODES: usize = 10;

/// Gaussian packet `f(x) (s1, s2)/√(|s1|²+|s2|²)` with
/// `f(x) = (d√(2π))^{-1/2} exp(−(x−x0)²/(4d²) + i v0 x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinorPacket {
    pub d: f64,
    pub x0: f64,
    pub v0: f64,
    pub s1: Complex64,
    pub s2: Complex64,
}

impl SpinorPacket {
    pub fn new(d: f64, x0: f64, v0: f64, s1: Complex64, s2: Complex64) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidPacket(format!("width d = {d} must be positive")));
        }
        if !(x0.is_finite() && v0.is_finite()) {
            return Err(Error::InvalidPacket("x0 and v0 must be finite".into()));
        }
        let spin = s1.norm_sqr() + s2.norm_sqr();
        if !(spin.is_finite() && spin > 0.0) {
            return Err(Error::InvalidPacket("spin amplitudes s1, s2 are both zero".into()));
        }
        Ok(Self { d, x0, v0, s1, s2 })
    }

    /// Normalized spin polarization.
    pub fn spin(&self) -> [Complex64; 2] {
        let norm = (self.s1.norm_sqr() + self.s2.norm_sqr()).sqrt();
        [self.s1 / norm, self.s2 / norm]
    }

    /// Scalar envelope `f(x)`, normalized over the real line.
    pub fn envelope(&self, x: f64) -> Complex64 {
        let amp = 1.0 / (self.d * (2.0 * PI).sqrt()).sqrt();
        let dx = x - self.x0;
        Complex64::from_polar(amp * (-dx * dx / (4.0 * self.d * self.d)).exp(), self.v0 * x)
    }

    /// Probability mass of `|f|²` outside `[0, length]`.
    pub fn tail_mass(&self, length: f64) -> f64 {
        let s = std::f64::consts::SQRT_2 * self.d;
        0.5 * libm::erfc(self.x0 / s) + 0.5 * libm::erfc((length - self.x0) / s)
    }

    fn check_center(&self, length: f64) -> Result<()> {
        if !(self.x0 > 0.0 && self.x0 < length) {
            return Err(Error::InvalidPacket(format!(
                "center x0 = {} must lie inside (0, {length})",
                self.x0
            )));
        }
        Ok(())
    }
}

/// `Ψ(x, 0)` for the packet in a box of length `length`.
pub fn packet_value(p: &SpinorPacket, length: f64, x: f64) -> Result<Spinor> {
    if !(0.0..=length).contains(&x) {
        return Err(Error::OutOfDomain { value: x, lo: 0.0, hi: length });
    }
    let f = p.envelope(x);
    let [u, v] = p.spin();
    Ok([f * u, f * v])
}

/// Amplitudes `a_n`, `|n| ≤ n_max`, of the expansion `Σ a_n ψ_n(y)` at one
/// reparametrized time.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeState {
    pub a0: Complex64,
    /// `pairs[n-1] = (a_n, a_{-n})`.
    pub pairs: Vec<[Complex64; 2]>,
    pub tau: f64,
}

impl ModeState {
    pub fn zeros(n_max: usize) -> Self {
        Self { a0: Complex64::new(0.0, 0.0), pairs: vec![[Complex64::new(0.0, 0.0); 2]; n_max], tau: 0.0 }
    }

    /// Single basis mode `ψ_n` with unit amplitude.
    pub fn basis_mode(n: i64, n_max: usize) -> Self {
        let mut s = Self::zeros(n_max);
        *s.amplitude_mut(n) = Complex64::new(1.0, 0.0);
        s
    }

    /// Builds a state from amplitudes indexed `-n_max..=n_max`.
    pub fn from_fn<F: FnMut(i64) -> Complex64>(n_max: usize, mut f: F) -> Self {
        let mut s = Self::zeros(n_max);
        s.a0 = f(0);
        for n in 1..=n_max {
            s.pairs[n - 1] = [f(n as i64), f(-(n as i64))];
        }
        s
    }

    pub fn n_max(&self) -> usize {
        self.pairs.len()
    }

    /// `a_n`; zero outside the truncation.
    pub fn amplitude(&self, n: i64) -> Complex64 {
        let k = n.unsigned_abs() as usize;
        match k {
            0 => self.a0,
            k if k > self.pairs.len() => Complex64::new(0.0, 0.0),
            k => self.pairs[k - 1][usize::from(n < 0)],
        }
    }

    pub fn amplitude_mut(&mut self, n: i64) -> &mut Complex64 {
        let k = n.unsigned_abs() as usize;
        assert!(k <= self.pairs.len(), "mode {n} outside truncation {}", self.pairs.len());
        if k == 0 {
            &mut self.a0
        } else {
            &mut self.pairs[k - 1][usize::from(n < 0)]
        }
    }

    /// Amplitudes in index order `-n_max..=n_max`.
    pub fn amplitudes(&self) -> Vec<Complex64> {
        let n = self.n_max() as i64;
        (-n..=n).map(|k| self.amplitude(k)).collect()
    }

    /// `|a_n|² + |a_{-n}|²`.
    pub fn pair_norm(&self, n: usize) -> f64 {
        let [p, q] = self.pairs[n - 1];
        p.norm_sqr() + q.norm_sqr()
    }

    /// `|a_0|² + Σ_n (|a_n|² + |a_{-n}|²)`, summed in fixed index order.
    pub fn norm(&self) -> f64 {
        self.pairs
            .iter()
            .fold(self.a0.norm_sqr(), |acc, [p, q]| acc + p.norm_sqr() + q.norm_sqr())
    }

    pub fn scale(&mut self, factor: f64) {
        self.a0 *= factor;
        for pair in &mut self.pairs {
            pair[0] *= factor;
            pair[1] *= factor;
        }
    }

    /// Sup-norm distance between two states of equal truncation.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n_max(), other.n_max());
        self.pairs
            .iter()
            .zip(&other.pairs)
            .flat_map(|(p, q)| [(p[0] - q[0]).norm(), (p[1] - q[1]).norm()])
            .fold((self.a0 - other.a0).norm(), f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions {
    pub renormalize: bool,
    /// Residual above which the projection is rejected as under-resolved.
    pub hard_limit: f64,
    /// Tail mass above which a warning is emitted.
    pub tail_threshold: f64,
    /// Multiplies the default panel count (for convergence checks).
    pub refinement: usize,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self { renormalize: true, hard_limit: 1e-3, tail_threshold: 1e-8, refinement: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub state: ModeState,
    /// `1 − Σ|a_n(0)|²` before any renormalization.
    pub residual: f64,
    pub renormalized: bool,
    pub tail_mass: f64,
    pub warnings: Vec<String>,
}

/// Inner products `(1/√L) ∫₀ᴸ ψ_n†(x/L) Ψ(x) dx` for `|n| ≤ n_max` by
/// composite Gauss–Legendre quadrature. Panels are no wider than half the
/// shortest retained wavelength (`L / n_max`) or the feature scale `width`.
pub(crate) fn project_function<F: Fn(f64) -> Spinor>(
    psi: F,
    length: f64,
    n_max: usize,
    width: f64,
    refinement: usize,
) -> ModeState {
    let panel_width = (length / n_max.max(1) as f64).min(width);
    let panels = ((length / panel_width).ceil() as usize).max(1) * refinement.max(1);
    let points = GaussLegendre::new(PANEL_NODES).composite_points(0.0, length, panels);
    let samples: Vec<(f64, f64, Spinor)> = points.iter().map(|&(x, w)| (x / length, w, psi(x))).collect();
    let scale = 1.0 / length.sqrt();
    let coefficient = |n: i64| -> Complex64 {
        let k = n as f64 * PI;
        let mut acc = Complex64::new(0.0, 0.0);
        for &(y, w, [u, v]) in &samples {
            let (s, c) = (k * y).sin_cos();
            // ψ_n† = (sin nπy, +i cos nπy)
            acc += (u * s + v * Complex64::new(0.0, c)) * w;
        }
        acc * scale
    };
    ModeState::from_fn(n_max, coefficient)
}

/// Projects the packet onto the basis at `τ = 0`, optionally renormalizing.
pub fn project_initial(
    p: &SpinorPacket,
    wall: &WallMotion,
    n_max: usize,
    opts: &ProjectionOptions,
) -> Result<Projection> {
    if n_max < 1 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let length = wall.length(0.0)?;
    p.check_center(length)?;
    let mut warnings = Vec::new();
    let tail_mass = p.tail_mass(length);
    if tail_mass > opts.tail_threshold {
        let msg = format!(
            "packet tail mass {tail_mass:.3e} outside [0, {length}] exceeds threshold {:.1e}",
            opts.tail_threshold
        );
        warn!("{msg}");
        warnings.push(msg);
    }
    let [u, v] = p.spin();
    let mut state = project_function(
        |x| {
            let f = p.envelope(x);
            [f * u, f * v]
        },
        length,
        n_max,
        p.d,
        opts.refinement,
    );
    let captured = state.norm();
    let residual = 1.0 - captured;
    if residual > opts.hard_limit {
        return Err(Error::UnderResolved { residual, limit: opts.hard_limit });
    }
    if opts.renormalize {
        state.scale(1.0 / captured.sqrt());
    }
    Ok(Projection { state, residual, renormalized: opts.renormalize, tail_mass, warnings })
}
