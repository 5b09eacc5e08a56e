//! Nonrelativistic reference: the Schrödinger particle (`ħ = m = 1`) in the
//! same moving box. With the dilation-corrected time derivative the
//! instantaneous box states `√(2/L) sin(nπx/L)` only pick up the phases
//! `exp(−iπ²n² τ₂(t)/2)`, `τ₂ = ∫ ds/L²`, for any wall law.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::basis::position_kernel;
use crate::error::{Error, Result};
use crate::init::{ProjectionOptions, SpinorPacket, PANEL_NODES};
use crate::observables::ObservableRecord;
use crate::quadrature::GaussLegendre;
use crate::wall::WallMotion;

pub const NORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SchrodingerModeState {
    /// `coeffs[n-1] = c_n`, `n = 1..=n_max`.
    pub coeffs: Vec<Complex64>,
    pub tau2: f64,
}

impl SchrodingerModeState {
    pub fn basis_mode(n: usize, n_max: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n_max];
        coeffs[n - 1] = Complex64::new(1.0, 0.0);
        Self { coeffs, tau2: 0.0 }
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Per-mode energies `π²n²|c_n|²/(2L²)`.
    pub fn mode_energies(&self, length: f64) -> Vec<f64> {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = (i + 1) as f64 * PI / length;
                0.5 * k * k * c.norm_sqr()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchrodingerProjection {
    pub state: SchrodingerModeState,
    pub residual: f64,
    pub renormalized: bool,
}

/// `c_n(t) = c_n(t₀) exp(−iπ²n² (τ₂(t) − τ₂(t₀))/2)`.
pub fn schrodinger_evolve(c0: &SchrodingerModeState, wall: &WallMotion, t: f64) -> Result<SchrodingerModeState> {
    let tau2 = wall.tau2_of_t(t)?;
    let dt2 = tau2 - c0.tau2;
    let coeffs = c0
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let n = (i + 1) as f64;
            c * Complex64::from_polar(1.0, -0.5 * PI * PI * n * n * dt2)
        })
        .collect();
    Ok(SchrodingerModeState { coeffs, tau2 })
}

/// Projects an arbitrary scalar function onto the box states at `t = 0`.
pub fn schrodinger_project_fn<F: Fn(f64) -> Complex64>(
    f: F,
    wall: &WallMotion,
    n_max: usize,
    width: f64,
    opts: &ProjectionOptions,
) -> Result<SchrodingerProjection> {
    if n_max < 1 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let length = wall.length(0.0)?;
    let panel = (length / n_max as f64).min(width);
    let panels = ((length / panel).ceil() as usize).max(1) * opts.refinement.max(1);
    let pts = GaussLegendre::new(PANEL_NODES).composite_points(0.0, length, panels);
    let samples: Vec<(f64, f64, Complex64)> = pts.iter().map(|&(x, w)| (x / length, w, f(x))).collect();
    let scale = (2.0 / length).sqrt();
    let mut coeffs: Vec<Complex64> = (1..=n_max)
        .map(|n| {
            let k = n as f64 * PI;
            samples.iter().map(|&(y, w, v)| v * ((k * y).sin() * w)).sum::<Complex64>() * scale
        })
        .collect();
    let captured: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    let residual = 1.0 - captured;
    if residual > opts.hard_limit {
        return Err(Error::UnderResolved { residual, limit: opts.hard_limit });
    }
    if opts.renormalize {
        let s = 1.0 / captured.sqrt();
        coeffs.iter_mut().for_each(|c| *c *= s);
    }
    Ok(SchrodingerProjection {
        state: SchrodingerModeState { coeffs, tau2: 0.0 },
        residual,
        renormalized: opts.renormalize,
    })
}

/// Projects the packet's scalar envelope (spin discarded).
pub fn schrodinger_project(
    p: &SpinorPacket,
    wall: &WallMotion,
    n_max: usize,
    opts: &ProjectionOptions,
) -> Result<SchrodingerProjection> {
    let length = wall.length(0.0)?;
    if !(p.x0 > 0.0 && p.x0 < length) {
        return Err(Error::InvalidPacket(format!("center x0 = {} must lie inside (0, {length})", p.x0)));
    }
    schrodinger_project_fn(|x| p.envelope(x), wall, n_max, p.d, opts)
}

/// `X_{nk} = ∫₀¹ 2y sin(nπy) sin(kπy) dy`.
pub fn sin_position_element(n: usize, k: usize) -> f64 {
    let (n, k) = (n as i64, k as i64);
    position_kernel(n - k) - position_kernel(n + k)
}

/// Energy, mean position and wall force `Σ π²n²|c_n|²/L³` at time `t`.
pub fn schrodinger_observables(s: &SchrodingerModeState, wall: &WallMotion, t: f64) -> Result<ObservableRecord> {
    let norm = s.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidArgument(format!("state is not normalized (norm {norm})")));
    }
    let length = wall.length(t)?;
    let energy: f64 = s.mode_energies(length).iter().sum();
    let mut mean_y = 0.0;
    for (i, a) in s.coeffs.iter().enumerate() {
        for (j, b) in s.coeffs.iter().enumerate() {
            mean_y += (a.conj() * b).re * sin_position_element(i + 1, j + 1);
        }
    }
    Ok(ObservableRecord {
        step: 0,
        t,
        tau: s.tau2,
        length,
        length_rate: wall.length_rate(t)?,
        norm,
        energy,
        mean_y: Some(mean_y),
        mean_x: Some(mean_y * length),
        force: 2.0 * energy / length,
        force_fd: None,
    })
}
