//! Finite-difference cross-check of the spectral solver.
//!
//! The fixed-interval equation `i∂_τ φ = (−iα∂_y + M β) φ` is discretized on
//! a staggered grid: the upper component lives on the interior nodes
//! `y_j = j h` and vanishes at both walls, the lower one on the half nodes
//! `y_{j+1/2}`. Interleaving the two gives a Hermitian tridiagonal operator,
//! advanced with Crank–Nicolson at the midpoint coupling.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::evolution::{Schedule, Trajectory};
use crate::init::{project_initial, ModeState, ProjectionOptions};
use crate::observables::{force_at_length, mean_x_for, Convention, ObservableRecord};

/// Minimum grid points per shortest retained wavelength `2/N_max`.
pub const MIN_POINTS_PER_WAVELENGTH: f64 = 8.0;

/// Interleaved staggered-grid field: `u[2j] = φ₂(y_{j+1/2})`,
/// `u[2j−1] = φ₁(y_j)`.
#[derive(Debug, Clone)]
struct GridField {
    cells: usize,
    u: Vec<Complex64>,
}

impl GridField {
    fn h(&self) -> f64 {
        1.0 / self.cells as f64
    }

    fn y(&self, k: usize) -> f64 {
        // Even entries sit on half nodes, odd ones on full nodes.
        if k.is_multiple_of(2) {
            (k / 2) as f64 * self.h() + 0.5 * self.h()
        } else {
            (k / 2 + 1) as f64 * self.h()
        }
    }

    fn sample(state: &ModeState, cells: usize) -> Self {
        let mut f = Self { cells, u: vec![Complex64::new(0.0, 0.0); 2 * cells - 1] };
        let nmax = state.n_max() as i64;
        for k in 0..f.u.len() {
            let y = f.y(k);
            let mut v = Complex64::new(0.0, 0.0);
            for n in -nmax..=nmax {
                let a = state.amplitude(n);
                let (s, c) = (n as f64 * PI * y).sin_cos();
                v += if k % 2 == 0 { a * Complex64::new(0.0, -c) } else { a * s };
            }
            f.u[k] = v;
        }
        f
    }

    /// Discrete inner products with the sampled basis functions.
    fn modes(&self, n_max: usize) -> ModeState {
        let h = self.h();
        let u = &self.u;
        ModeState::from_fn(n_max, |n| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &v) in u.iter().enumerate() {
                let (s, c) = (n as f64 * PI * self.y(k)).sin_cos();
                // conj of (sin, −i cos) is (sin, i cos).
                acc += if k % 2 == 0 { Complex64::new(0.0, c) * v } else { v * s };
            }
            acc * h
        })
    }

    fn norm(&self) -> f64 {
        self.h() * self.u.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    fn apply_h(&self, coupling: f64) -> Vec<Complex64> {
        let inv_h = 1.0 / self.h();
        let n = self.u.len();
        (0..n)
            .map(|k| {
                let mass = if k % 2 == 0 { -coupling } else { coupling };
                let mut v = self.u[k] * mass;
                if k > 0 {
                    v += Complex64::new(0.0, inv_h) * self.u[k - 1];
                }
                if k + 1 < n {
                    v -= Complex64::new(0.0, inv_h) * self.u[k + 1];
                }
                v
            })
            .collect()
    }

    /// `⟨φ, H φ⟩` split into the derivative part and `⟨β⟩`.
    fn expectations(&self) -> (f64, f64) {
        let h = self.h();
        let free = self.apply_h(0.0);
        let kinetic = h * self.u.iter().zip(&free).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
        let beta = h * self
            .u
            .iter()
            .enumerate()
            .map(|(k, z)| if k % 2 == 0 { -z.norm_sqr() } else { z.norm_sqr() })
            .sum::<f64>();
        (kinetic, beta)
    }

    fn mean_y(&self) -> f64 {
        let h = self.h();
        h * self.u.iter().enumerate().map(|(k, z)| self.y(k) * z.norm_sqr()).sum::<f64>()
    }

    /// One Crank–Nicolson step `(1 + iδH/2) u' = (1 − iδH/2) u`.
    fn crank_nicolson(&mut self, coupling: f64, dtau: f64, scratch: &mut Vec<Complex64>) {
        let n = self.u.len();
        let half = 0.5 * dtau;
        let hu = self.apply_h(coupling);
        let mut rhs: Vec<Complex64> = self.u.iter().zip(&hu).map(|(&u, &v)| u - Complex64::new(0.0, half) * v).collect();
        // (1 + iδH/2): sub = iδ/2 · i/h, super = iδ/2 · (−i/h).
        let sub = Complex64::new(-half / self.h(), 0.0);
        let sup = Complex64::new(half / self.h(), 0.0);
        let diag = |k: usize| {
            let mass = if k.is_multiple_of(2) { -coupling } else { coupling };
            Complex64::new(1.0, half * mass)
        };
        scratch.clear();
        scratch.resize(n, Complex64::new(0.0, 0.0));
        let mut denom = diag(0);
        scratch[0] = sup / denom;
        rhs[0] /= denom;
        for k in 1..n {
            denom = diag(k) - sub * scratch[k - 1];
            scratch[k] = sup / denom;
            rhs[k] = (rhs[k] - sub * rhs[k - 1]) / denom;
        }
        for k in (0..n - 1).rev() {
            rhs[k] = rhs[k] - scratch[k] * rhs[k + 1];
        }
        self.u = rhs;
    }
}

/// Runs the oracle from the configuration's initial packet.
pub fn pde_oracle(cfg: &SimConfig) -> Result<Trajectory> {
    let opts = ProjectionOptions { renormalize: cfg.renormalize_initial, ..Default::default() };
    let state0 = project_initial(&cfg.packet, &cfg.wall, cfg.n_max, &opts)?.state;
    pde_oracle_from(&state0, cfg)
}

/// Runs the oracle from a given mode state. Records line up with the spectral
/// run's recorded steps; each spectral step is split into
/// `cfg.oracle.refine` implicit substeps.
pub fn pde_oracle_from(state0: &ModeState, cfg: &SimConfig) -> Result<Trajectory> {
    let cells = cfg.oracle.grid_points;
    let ppw = 2.0 * cells as f64 / state0.n_max().max(1) as f64;
    if ppw < MIN_POINTS_PER_WAVELENGTH {
        return Err(Error::GridTooCoarse { points_per_wavelength: ppw });
    }
    let refine = cfg.oracle.refine.max(1);
    let (steps, dtau) = cfg.tau_grid()?;
    let sched = Schedule::with_steps(&cfg.wall, cfg.mass, steps * refine, dtau / refine as f64)?;
    let sub_dtau = sched.dtau();

    let every = cfg.record_every;
    let recorded = |s: usize| s.is_multiple_of(every) || s == steps;
    let needed = |s: usize| recorded(s) || (s > 0 && recorded(s - 1)) || (s < steps && recorded(s + 1));

    let mut field = GridField::sample(state0, cells);
    let mut scratch = Vec::new();
    let mut energies = BTreeMap::new();
    let mut records = Vec::new();
    let mut max_norm_drift = 0.0f64;
    let norm0 = field.norm();

    for s in 0..=steps {
        if s > 0 {
            for j in (s - 1) * refine..s * refine {
                field.crank_nicolson(sched.couplings()[j], sub_dtau, &mut scratch);
            }
        }
        if !needed(s) {
            continue;
        }
        let t = sched.t_nodes()[s * refine];
        let length = cfg.wall.length(t)?;
        let (kinetic, beta) = field.expectations();
        let energy = kinetic / length + cfg.mass * beta;
        energies.insert(s, energy);
        if !recorded(s) {
            continue;
        }
        let norm = field.norm();
        max_norm_drift = max_norm_drift.max((norm - norm0).abs());
        let (my, mx) = if cfg.outputs.position {
            let y = field.mean_y();
            (Some(y), Some(mean_x_for(cfg.position_convention, y, length)))
        } else {
            (None, None)
        };
        let force = match cfg.force_convention {
            Convention::Corrected => kinetic / (length * length),
            Convention::PaperLiteral => force_at_length(&field.modes(state0.n_max()), length, Convention::PaperLiteral),
        };
        records.push(ObservableRecord {
            step: s,
            t,
            tau: s as f64 * dtau,
            length,
            length_rate: cfg.wall.length_rate(t)?,
            norm,
            energy,
            mean_y: my,
            mean_x: mx,
            force,
            force_fd: None,
        });
    }

    for rec in &mut records {
        if rec.step == 0 || rec.step == steps || rec.length_rate.abs() <= 1e-12 {
            continue;
        }
        if let (Some(ep), Some(em)) = (energies.get(&(rec.step + 1)), energies.get(&(rec.step - 1))) {
            rec.force_fd = Some(-((ep - em) / (2.0 * dtau) / rec.length) / rec.length_rate);
        }
    }

    let mut final_state = field.modes(state0.n_max());
    final_state.tau = steps as f64 * dtau;
    Ok(Trajectory {
        dtau,
        steps,
        records,
        snapshots: Vec::new(),
        final_state,
        max_pair_drift: f64::NAN,
        max_norm_drift,
    })
}
