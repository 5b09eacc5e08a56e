//! Evolution of mode amplitudes under the fixed-interval Dirac equation with
//! the time-dependent mass `m L(t(τ))`.
//!
//! The Hamiltonian is block diagonal: `a_0` only picks up the phase
//! `e^{imt}`, and each pair `(a_n, a_{−n})` evolves under
//! `H_n = [[nπ, −mL], [−mL, −nπ]]`. One step applies the exact 2×2
//! exponential of `H_n` frozen at the step midpoint (second-order Magnus),
//! so every pair norm is preserved to rounding.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::{eigenfunction_derivative, eigenfunction_unchecked, Spinor};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::init::ModeState;
use crate::observables::{energy_at_length, force_at_length, mean_x_for, mean_y, ObservableRecord};
use crate::wall::{linear_t_of_tau, WallLaw, WallMotion};

/// Per-step pair norm change above which the run is aborted.
pub const STEP_NORM_LIMIT: f64 = 1e-12;
/// Initial-state normalization tolerance accepted by [`evolve`].
pub const INITIAL_NORM_TOL: f64 = 1e-8;

/// `H_n` for a given coupling `M = m L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairHamiltonian {
    pub n: usize,
    pub coupling: f64,
}

impl PairHamiltonian {
    pub fn new(n: usize, mass: f64, length: f64) -> Self {
        Self { n, coupling: mass * length }
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let k = self.n as f64 * PI;
        [[k, -self.coupling], [-self.coupling, -k]]
    }

    /// Positive eigenvalue `√((nπ)² + M²)`.
    pub fn frequency(&self) -> f64 {
        let k = self.n as f64 * PI;
        (k * k + self.coupling * self.coupling).sqrt()
    }

    /// `exp(−i H_n dτ)`; valid for either sign of `dτ`.
    pub fn propagator(&self, dtau: f64) -> [[Complex64; 2]; 2] {
        let k = self.n as f64 * PI;
        let omega = self.frequency();
        if omega == 0.0 {
            let one = Complex64::new(1.0, 0.0);
            let zero = Complex64::new(0.0, 0.0);
            return [[one, zero], [zero, one]];
        }
        let (s, c) = (omega * dtau).sin_cos();
        let (cz, b) = (k / omega, self.coupling / omega);
        let off = Complex64::new(0.0, s * b);
        [[Complex64::new(c, -s * cz), off], [off, Complex64::new(c, s * cz)]]
    }
}

#[inline]
fn apply(u: &[[Complex64; 2]; 2], p: [Complex64; 2]) -> [Complex64; 2] {
    [u[0][0] * p[0] + u[0][1] * p[1], u[1][0] * p[0] + u[1][1] * p[1]]
}

/// Advances one pair from `τ` to `τ + dτ` with `H_n` evaluated at
/// `t(τ + dτ/2)`.
pub fn step_pair(
    n: usize,
    pair: [Complex64; 2],
    tau: f64,
    dtau: f64,
    mass: f64,
    wall: &WallMotion,
) -> Result<[Complex64; 2]> {
    if n < 1 {
        return Err(Error::InvalidArgument("pair index must be >= 1".into()));
    }
    if !(dtau > 0.0 && dtau.is_finite()) {
        return Err(Error::InvalidArgument(format!("dtau must be positive (got {dtau})")));
    }
    let t_mid = wall.t_of_tau(tau + 0.5 * dtau)?;
    let h = PairHamiltonian::new(n, mass, wall.length(t_mid)?);
    Ok(apply(&h.propagator(dtau), pair))
}

/// `a_0(t) = a_0(0) e^{imt}`.
pub fn evolve_a0(a0_init: Complex64, mass: f64, t: f64) -> Complex64 {
    a0_init * Complex64::from_polar(1.0, mass * t)
}

/// Exact massless evolution `a_{±n}(τ) = a_{±n}(0) e^{∓iπnτ}`.
pub fn massless_solution(state0: &ModeState, tau: f64) -> ModeState {
    let mut out = state0.clone();
    for (i, pair) in out.pairs.iter_mut().enumerate() {
        let phase = Complex64::from_polar(1.0, -((i + 1) as f64) * PI * tau);
        pair[0] *= phase;
        pair[1] *= phase.conj();
    }
    out.tau = state0.tau + tau;
    out
}

/// `Ψ(x, t) = L(t)^{-1/2} Σ a_n ψ_n(x / L(t))`.
pub fn reconstruct_wavefunction(s: &ModeState, wall: &WallMotion, t: f64, x: f64) -> Result<Spinor> {
    let length = wall.length(t)?;
    if !(0.0..=length).contains(&x) {
        return Err(Error::OutOfDomain { value: x, lo: 0.0, hi: length });
    }
    Ok(field_at(s, length, x).0)
}

/// Reconstructed field and its x-derivative at `x` in a box of `length`.
pub(crate) fn field_at(s: &ModeState, length: f64, x: f64) -> (Spinor, Spinor) {
    let y = x / length;
    let scale = 1.0 / length.sqrt();
    let (mut psi, mut dpsi) = ([Complex64::new(0.0, 0.0); 2], [Complex64::new(0.0, 0.0); 2]);
    let nmax = s.n_max() as i64;
    for n in -nmax..=nmax {
        let a = s.amplitude(n);
        if a == Complex64::new(0.0, 0.0) {
            continue;
        }
        let e = eigenfunction_unchecked(n, y);
        let de = eigenfunction_derivative(n, y);
        for c in 0..2 {
            psi[c] += a * e[c] * scale;
            dpsi[c] += a * de[c] * (scale / length);
        }
    }
    (psi, dpsi)
}

/// Uniform τ grid with the wall times at nodes and midpoints.
#[derive(Debug, Clone)]
pub struct Schedule {
    mass: f64,
    dtau: f64,
    /// `t(τ_i)`, `i = 0..=steps`.
    t_nodes: Vec<f64>,
    /// `m L(t(τ_i + dτ/2))`, `i = 0..steps`.
    couplings: Vec<f64>,
}

impl Schedule {
    /// Grid from the configuration's step rule; `dt/dτ = L(t)` is integrated
    /// alongside (closed form for linear walls, RK4 otherwise).
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        let (steps, dtau) = cfg.tau_grid()?;
        Self::with_steps(&cfg.wall, cfg.mass, steps, dtau)
    }

    pub fn with_steps(wall: &WallMotion, mass: f64, steps: usize, dtau: f64) -> Result<Self> {
        let mut t_nodes = Vec::with_capacity(steps + 1);
        let mut t_mids = Vec::with_capacity(steps);
        match wall.law() {
            WallLaw::Linear { a, b } => {
                for i in 0..=steps {
                    t_nodes.push(linear_t_of_tau(*a, *b, i as f64 * dtau));
                }
                for i in 0..steps {
                    t_mids.push(linear_t_of_tau(*a, *b, (i as f64 + 0.5) * dtau));
                }
            }
            _ => {
                let rk4 = |t: f64, h: f64| {
                    let f = |s: f64| wall.length_unchecked(s);
                    let k1 = f(t);
                    let k2 = f(t + 0.5 * h * k1);
                    let k3 = f(t + 0.5 * h * k2);
                    let k4 = f(t + h * k3);
                    t + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                };
                let mut t = 0.0;
                t_nodes.push(t);
                for _ in 0..steps {
                    let mid = rk4(t, 0.5 * dtau);
                    t = rk4(mid, 0.5 * dtau);
                    t_mids.push(mid);
                    t_nodes.push(t);
                }
            }
        }
        let couplings = t_mids
            .iter()
            .map(|&t| wall.length(t).map(|l| mass * l))
            .collect::<Result<Vec<_>>>()?;
        // Validates the last node too.
        wall.length(*t_nodes.last().unwrap())?;
        Ok(Self { mass, dtau, t_nodes, couplings })
    }

    pub fn steps(&self) -> usize {
        self.couplings.len()
    }

    pub fn dtau(&self) -> f64 {
        self.dtau
    }

    pub fn t_nodes(&self) -> &[f64] {
        &self.t_nodes
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// Propagates `state` from grid node `from` to node `to`. Going backwards
    /// applies the inverse steps, so a forward/backward round trip is the
    /// identity up to rounding.
    pub fn advance(&self, state: &mut ModeState, from: usize, to: usize) {
        state.a0 = evolve_a0(state.a0, self.mass, self.t_nodes[to] - self.t_nodes[from]);
        for (i, pair) in state.pairs.iter_mut().enumerate() {
            let n = i + 1;
            if to >= from {
                for &m in &self.couplings[from..to] {
                    *pair = apply(&PairHamiltonian { n, coupling: m }.propagator(self.dtau), *pair);
                }
            } else {
                for &m in self.couplings[to..from].iter().rev() {
                    *pair = apply(&PairHamiltonian { n, coupling: m }.propagator(-self.dtau), *pair);
                }
            }
        }
        state.tau += (to as f64 - from as f64) * self.dtau;
    }
}

/// Advances one pair over consecutive steps; returns the largest deviation of
/// the pair norm from `norm0`.
fn advance_pair(n: usize, pair: &mut [Complex64; 2], couplings: &[f64], dtau: f64, norm0: f64) -> Result<f64> {
    let k = n as f64 * PI;
    let mut p = *pair;
    let mut norm = p[0].norm_sqr() + p[1].norm_sqr();
    let mut drift = (norm - norm0).abs();
    for &m in couplings {
        let omega = (k * k + m * m).sqrt();
        let (s, c) = (omega * dtau).sin_cos();
        let (cz, b) = (k / omega, m / omega);
        let off = Complex64::new(0.0, s * b);
        p = [
            Complex64::new(c, -s * cz) * p[0] + off * p[1],
            off * p[0] + Complex64::new(c, s * cz) * p[1],
        ];
        let next = p[0].norm_sqr() + p[1].norm_sqr();
        let step = (next - norm).abs();
        if step > STEP_NORM_LIMIT {
            return Err(Error::NormDrift { n, drift: step, limit: STEP_NORM_LIMIT });
        }
        norm = next;
        drift = drift.max((norm - norm0).abs());
    }
    *pair = p;
    Ok(drift)
}

/// Result of [`evolve`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dtau: f64,
    pub steps: usize,
    pub records: Vec<ObservableRecord>,
    /// `(record index, state)` pairs kept for wavefunction output.
    pub snapshots: Vec<(usize, ModeState)>,
    pub final_state: ModeState,
    /// Largest `| |a^(n)(τ)|² − |a^(n)(0)|² |` over all steps and pairs.
    pub max_pair_drift: f64,
    /// Largest `|Σ|a_n|² − 1|` over the recorded instants.
    pub max_norm_drift: f64,
}

/// Evolves `state0` over `[0, t_final]` and records observables.
pub fn evolve(state0: &ModeState, cfg: &SimConfig) -> Result<Trajectory> {
    evolve_with(state0, cfg, |_, _| {})
}

/// Like [`evolve`], calling `observer(record_index, state)` at every
/// recorded step.
pub fn evolve_with<F: FnMut(usize, &ModeState)>(state0: &ModeState, cfg: &SimConfig, mut observer: F) -> Result<Trajectory> {
    let norm0 = state0.norm();
    if (norm0 - 1.0).abs() > INITIAL_NORM_TOL {
        return Err(Error::InvalidArgument(format!("initial state is not normalized (norm {norm0})")));
    }
    let schedule = Schedule::new(cfg)?;
    let steps = schedule.steps();
    let dtau = schedule.dtau;
    let pool = if cfg.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };

    let every = cfg.record_every;
    let recorded = |s: usize| s.is_multiple_of(every) || s == steps;
    let is_event = |s: usize| recorded(s) || (s > 0 && recorded(s - 1)) || (s < steps && recorded(s + 1));

    let pair_norm0: Vec<f64> = (1..=state0.n_max()).map(|n| state0.pair_norm(n)).collect();
    let mut state = state0.clone();
    state.tau = 0.0;
    let a0_init = state0.a0;
    let mut energies = BTreeMap::new();
    let mut records: Vec<ObservableRecord> = Vec::new();
    let mut snapshots = Vec::new();
    let mut max_pair_drift = 0.0f64;
    let mut max_norm_drift = 0.0f64;
    let mut wanted_snapshots = Vec::new();

    let mut handle = |s: usize, state: &mut ModeState, records: &mut Vec<ObservableRecord>| -> Result<()> {
        let t = schedule.t_nodes[s];
        state.a0 = evolve_a0(a0_init, cfg.mass, t);
        state.tau = s as f64 * dtau;
        let length = cfg.wall.length(t)?;
        let energy = energy_at_length(state, cfg.mass, length);
        energies.insert(s, energy);
        if recorded(s) {
            let norm = state.norm();
            max_norm_drift = max_norm_drift.max((norm - 1.0).abs());
            let (my, mx) = if cfg.outputs.position {
                let y = mean_y(state)?;
                (Some(y), Some(mean_x_for(cfg.position_convention, y, length)))
            } else {
                (None, None)
            };
            let index = records.len();
            records.push(ObservableRecord {
                step: s,
                t,
                tau: state.tau,
                length,
                length_rate: cfg.wall.length_rate(t)?,
                norm,
                energy,
                mean_y: my,
                mean_x: mx,
                force: force_at_length(state, length, cfg.force_convention),
                force_fd: None,
            });
            observer(index, state);
            if cfg.outputs.wavefunction {
                wanted_snapshots.push((index, state.clone()));
            }
        }
        Ok(())
    };

    handle(0, &mut state, &mut records)?;
    let mut s = 0;
    while s < steps {
        let mut next = s + 1;
        while !is_event(next) {
            next += 1;
        }
        let couplings = &schedule.couplings[s..next];
        let run = |(i, pair): (usize, &mut [Complex64; 2])| advance_pair(i + 1, pair, couplings, dtau, pair_norm0[i]);
        let drifts: Vec<Result<f64>> = match &pool {
            Some(pool) => pool.install(|| state.pairs.par_iter_mut().enumerate().map(run).collect()),
            None => state.pairs.iter_mut().enumerate().map(run).collect(),
        };
        for d in drifts {
            max_pair_drift = max_pair_drift.max(d?);
        }
        s = next;
        handle(s, &mut state, &mut records)?;
    }

    for rec in &mut records {
        if rec.step == 0 || rec.step == steps || rec.length_rate.abs() <= 1e-12 {
            continue;
        }
        if let (Some(ep), Some(em)) = (energies.get(&(rec.step + 1)), energies.get(&(rec.step - 1))) {
            let de_dt = (ep - em) / (2.0 * dtau) / rec.length;
            rec.force_fd = Some(-de_dt / rec.length_rate);
        }
    }

    if cfg.outputs.wavefunction {
        let last = records.len().saturating_sub(1);
        snapshots = wanted_snapshots
            .into_iter()
            .filter(|(i, _)| *i == 0 || *i == last || (cfg.snapshot_every > 0 && i % cfg.snapshot_every == 0))
            .collect();
    }

    Ok(Trajectory { dtau, steps, records, snapshots, final_state: state, max_pair_drift, max_norm_drift })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{project_initial, ProjectionOptions};
    use crate::observables::energy_terms;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Scaling-and-squaring exponential of `−i H dτ` with a Taylor core.
    fn expm_oracle(h: [[f64; 2]; 2], dtau: f64) -> [[Complex64; 2]; 2] {
        let mut a = [[c(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                a[i][j] = c(0.0, -h[i][j] * dtau);
            }
        }
        let norm = a.iter().flatten().map(|z| z.norm()).sum::<f64>();
        let squarings = (norm.log2().max(0.0).ceil() as u32) + 4;
        let scale = 0.5f64.powi(squarings as i32);
        let a: Vec<Vec<Complex64>> = a.iter().map(|r| r.iter().map(|z| z * scale).collect()).collect();
        let mul = |x: &[[Complex64; 2]; 2], y: &[[Complex64; 2]; 2]| {
            let mut r = [[c(0.0, 0.0); 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    r[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
                }
            }
            r
        };
        let am = [[a[0][0], a[0][1]], [a[1][0], a[1][1]]];
        let mut result = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        let mut term = result;
        for k in 1..30 {
            term = mul(&term, &am);
            for row in term.iter_mut() {
                for z in row.iter_mut() {
                    *z /= k as f64;
                }
            }
            for i in 0..2 {
                for j in 0..2 {
                    result[i][j] += term[i][j];
                }
            }
        }
        for _ in 0..squarings {
            result = mul(&result, &result);
        }
        result
    }

    #[test]
    fn propagator_matches_scaling_and_squaring() {
        for &(n, m, dt) in &[(1usize, PI, 0.3), (2, 0.0, 0.05), (5, 12.0, 0.01), (3, -7.5, 1.7)] {
            let h = PairHamiltonian { n, coupling: m };
            let u = h.propagator(dt);
            let o = expm_oracle(h.matrix(), dt);
            for i in 0..2 {
                for j in 0..2 {
                    assert_abs_diff_eq!((u[i][j] - o[i][j]).norm(), 0.0, epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn pair_hamiltonian_spectrum() {
        let h = PairHamiltonian::new(2, 1.0, 10.0);
        let m = h.matrix();
        assert_eq!(m[0][1], m[1][0]);
        assert_eq!(m[0][0] + m[1][1], 0.0);
        assert_abs_diff_eq!(h.frequency(), ((2.0 * PI).powi(2) + 100.0).sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn step_pair_examples() {
        let wall = WallMotion::linear(10.0, 0.1, 10.0).unwrap();
        let out = step_pair(3, [c(1.0, 0.0), c(0.0, 0.0)], 0.2, 0.01, 0.0, &wall).unwrap();
        let expect = Complex64::from_polar(1.0, -3.0 * PI * 0.01);
        assert_abs_diff_eq!((out[0] - expect).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(out[1], c(0.0, 0.0));
        // nπ = mL: H ∝ [[1, −1], [−1, −1]] nπ; compare with the oracle.
        let wall = WallMotion::linear(PI, 0.0, 10.0).unwrap();
        let pair = [c(0.3, -0.4), c(0.1, 0.8)];
        let out = step_pair(1, pair, 0.0, 0.2, 1.0, &wall).unwrap();
        let o = apply(&expm_oracle([[PI, -PI], [-PI, -PI]], 0.2), pair);
        for i in 0..2 {
            assert_abs_diff_eq!((out[i] - o[i]).norm(), 0.0, epsilon = 1e-13);
        }
        let before = pair[0].norm_sqr() + pair[1].norm_sqr();
        assert_abs_diff_eq!(out[0].norm_sqr() + out[1].norm_sqr(), before, epsilon = 1e-15);
        assert!(step_pair(1, pair, 0.0, -0.1, 1.0, &wall).is_err());
    }

    #[test]
    fn a0_examples() {
        let a = c(0.3, 0.4);
        let out = evolve_a0(a, 1.0, PI / 2.0);
        assert_abs_diff_eq!((out - a * Complex64::i()).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(evolve_a0(a, 0.0, 17.0), a);
    }

    #[test]
    fn a0_matches_tau_frame_ode() {
        // i da0/dτ = −m L(t(τ)) a0, dt/dτ = L, integrated jointly with RK4.
        let wall = WallMotion::oscillating(5.0, 1.0, 1.3, 20.0).unwrap();
        let m = 0.7;
        let tau_end = wall.tau_of_t(12.0).unwrap();
        let n = 20_000;
        let h = tau_end / n as f64;
        let rhs = |y: (Complex64, f64)| {
            let l = wall.length_unchecked(y.1);
            (Complex64::i() * m * l * y.0, l)
        };
        let mut y = (c(1.0, 0.0), 0.0);
        for _ in 0..n {
            let k1 = rhs(y);
            let k2 = rhs((y.0 + k1.0 * (0.5 * h), y.1 + 0.5 * h * k1.1));
            let k3 = rhs((y.0 + k2.0 * (0.5 * h), y.1 + 0.5 * h * k2.1));
            let k4 = rhs((y.0 + k3.0 * h, y.1 + h * k3.1));
            y.0 += (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (h / 6.0);
            y.1 += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        let t = wall.t_of_tau(tau_end).unwrap();
        assert_abs_diff_eq!((y.0 - evolve_a0(c(1.0, 0.0), m, t)).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn massless_solution_examples() {
        let s = ModeState::basis_mode(1, 3);
        let out = massless_solution(&s, 1.0);
        assert_abs_diff_eq!((out.amplitude(1) - c(-1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        let out = massless_solution(&ModeState::basis_mode(2, 3), 0.5);
        assert_abs_diff_eq!((out.amplitude(2) - c(-1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        let s = ModeState::from_fn(6, |n| c(0.1 * n as f64, 0.2 - 0.03 * n as f64));
        let out = massless_solution(&s, 2.0);
        assert!(out.max_abs_diff(&s) < 1e-13);
    }

    #[test]
    fn reconstruction_examples() {
        let wall = WallMotion::linear(4.0, 0.3, 10.0).unwrap();
        let s = ModeState::from_fn(5, |n| c(0.2 / (1.0 + n.abs() as f64), 0.1 * n as f64));
        let l = wall.length(3.0).unwrap();
        assert_abs_diff_eq!(reconstruct_wavefunction(&s, &wall, 3.0, 0.0).unwrap()[0].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(reconstruct_wavefunction(&s, &wall, 3.0, l).unwrap()[0].norm(), 0.0, epsilon = 1e-14);
        assert!(reconstruct_wavefunction(&s, &wall, 3.0, l + 0.1).is_err());
        let one = ModeState::basis_mode(1, 2);
        let v = reconstruct_wavefunction(&one, &wall, 3.0, 0.3 * l).unwrap();
        let (sn, cs) = (PI * 0.3).sin_cos();
        assert_abs_diff_eq!((v[0] - c(sn / l.sqrt(), 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((v[1] - c(0.0, -cs / l.sqrt())).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn reconstructed_field_is_normalized() {
        use crate::quadrature::GaussLegendre;
        let wall = WallMotion::oscillating(5.0, 0.5, 2.0, 10.0).unwrap();
        let mut s = ModeState::from_fn(8, |n| c((n as f64).cos(), (0.5 * n as f64).sin()));
        s.scale(1.0 / s.norm().sqrt());
        let l = wall.length(2.0).unwrap();
        let total: f64 = GaussLegendre::new(12)
            .composite_points(0.0, l, 40)
            .iter()
            .map(|&(x, w)| {
                let v = reconstruct_wavefunction(&s, &wall, 2.0, x).unwrap();
                w * (v[0].norm_sqr() + v[1].norm_sqr())
            })
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
    }

    fn oscillating_config(t_final: f64) -> SimConfig {
        let wall = WallMotion::oscillating(5.0, 0.1, 2.0, t_final).unwrap();
        SimConfig::new(1.0, wall, t_final).unwrap()
    }

    fn initial(cfg: &SimConfig) -> ModeState {
        project_initial(&cfg.packet, &cfg.wall, cfg.n_max, &ProjectionOptions::default()).unwrap().state
    }

    #[test]
    fn massless_numeric_matches_exact_for_oscillating_wall() {
        let wall = WallMotion::oscillating(5.0, 1.0, 1.7, 20.0).unwrap();
        let mut cfg = SimConfig::new(0.0, wall, 20.0).unwrap();
        cfg.n_max = 32;
        let s0 = initial(&cfg);
        let traj = evolve(&s0, &cfg).unwrap();
        let exact = massless_solution(&s0, traj.final_state.tau);
        assert!(traj.final_state.max_abs_diff(&exact) < 1e-8);
        let l_end = traj.records.last().unwrap().length;
        let e0 = energy_terms(&s0, 0.0, 5.0);
        let e1 = energy_terms(&traj.final_state, 0.0, l_end);
        for (a, b) in e0.iter().zip(&e1) {
            assert_abs_diff_eq!(a * 5.0, b * l_end, epsilon = 1e-10);
        }
    }

    #[test]
    fn t_grid_is_consistent_with_tau() {
        let cfg = oscillating_config(20.0);
        let sched = Schedule::new(&cfg).unwrap();
        let dtau = sched.dtau();
        for i in (0..=sched.steps()).step_by(997) {
            let t = sched.t_nodes()[i];
            assert_abs_diff_eq!(cfg.wall.tau_of_t(t).unwrap(), i as f64 * dtau, epsilon = 1e-9);
        }
    }

    #[test]
    fn norms_are_conserved() {
        let mut cfg = oscillating_config(10.0);
        cfg.n_max = 48;
        let traj = evolve(&initial(&cfg), &cfg).unwrap();
        assert!(traj.max_pair_drift < 1e-13, "{}", traj.max_pair_drift);
        assert!(traj.max_norm_drift < 1e-12);
    }

    #[test]
    fn static_wall_pair_precesses_at_eigenfrequency() {
        let wall = WallMotion::linear(10.0, 0.0, 5.0).unwrap();
        let mut cfg = SimConfig::new(1.0, wall, 5.0).unwrap();
        cfg.n_max = 3;
        let sched = Schedule::new(&cfg).unwrap();
        let h = PairHamiltonian::new(2, 1.0, 10.0);
        let u = crate::observables::pair_eigenvector(2, h.coupling, crate::observables::Branch::Positive);
        let mut s = ModeState::zeros(3);
        s.pairs[1] = u;
        let steps = sched.steps();
        sched.advance(&mut s, 0, steps);
        let overlap = u[0].conj() * s.pairs[1][0] + u[1].conj() * s.pairs[1][1];
        let expect = Complex64::from_polar(1.0, -h.frequency() * s.tau);
        assert_abs_diff_eq!((overlap - expect).norm(), 0.0, epsilon = 1e-11);
    }

    #[test]
    fn forward_then_backward_is_identity() {
        let mut cfg = oscillating_config(10.0);
        cfg.n_max = 48;
        cfg.wall = WallMotion::oscillating(5.0, 2.0, 3.0, 10.0).unwrap();
        let sched = Schedule::new(&cfg).unwrap();
        let s0 = initial(&cfg);
        let mut s = s0.clone();
        sched.advance(&mut s, 0, sched.steps());
        assert!(s.max_abs_diff(&s0) > 1e-3);
        sched.advance(&mut s, sched.steps(), 0);
        assert!(s.max_abs_diff(&s0) < 1e-9);
    }

    #[test]
    fn second_order_in_dtau() {
        let mut cfg = oscillating_config(4.0);
        cfg.n_max = 16;
        cfg.wall = WallMotion::oscillating(5.0, 1.5, 2.0, 4.0).unwrap();
        cfg.mass = 2.0;
        cfg.packet.d = 0.4;
        let s0 = initial(&cfg);
        let run = |steps: usize| {
            let tau_end = cfg.tau_final().unwrap();
            let sched = Schedule::with_steps(&cfg.wall, cfg.mass, steps, tau_end / steps as f64).unwrap();
            let mut s = s0.clone();
            sched.advance(&mut s, 0, steps);
            s
        };
        let (a, b, r) = (run(400), run(800), run(1600));
        let ratio = a.max_abs_diff(&r) / b.max_abs_diff(&r);
        // e(h)/e(h/2) against a reference at h/4: (1 − 1/16)/(1/4 − 1/16) = 5.
        assert!((4.5..5.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn threads_do_not_change_results() {
        let mut cfg = oscillating_config(5.0);
        cfg.n_max = 40;
        let s0 = initial(&cfg);
        let a = evolve(&s0, &cfg).unwrap();
        cfg.threads = 4;
        let b = evolve(&s0, &cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.final_state, b.final_state);
    }

    #[test]
    fn rejects_unnormalized_state() {
        let cfg = oscillating_config(1.0);
        let mut s = ModeState::basis_mode(1, cfg.n_max);
        s.scale(2.0);
        assert!(evolve(&s, &cfg).is_err());
    }
}
