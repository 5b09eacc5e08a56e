//! Expectation values computed from a [`ModeState`]: norm, kinetic energy,
//! mean position, quantum force, and the discrete geometric phase of the
//! pair eigenvectors.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::position_kernel;
use crate::error::{Error, Result};
use crate::init::ModeState;
use crate::wall::WallMotion;

/// Largest tolerated imaginary part of `⟨y⟩` before it is treated as a bug.
pub const IMAGINARY_RESIDUE_LIMIT: f64 = 1e-10;

/// Which prefactor the force series uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// Consistent with `⟨F⟩ = −(1/L̇) d⟨E⟩/dt`; `⟨x⟩ = L ⟨y⟩`.
    #[default]
    Corrected,
    /// As printed: `F_n = (|a_n|²−|a_{−n}|²)/L²`; `⟨x⟩` reported as `⟨y⟩`.
    PaperLiteral,
}

/// One row of observables at a recorded instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableRecord {
    pub step: usize,
    pub t: f64,
    pub tau: f64,
    pub length: f64,
    pub length_rate: f64,
    pub norm: f64,
    pub energy: f64,
    pub mean_y: Option<f64>,
    pub mean_x: Option<f64>,
    pub force: f64,
    /// `−(1/L̇) d⟨E⟩/dt` by centered differences; absent where `L̇ = 0`
    /// or at the ends of the run.
    pub force_fd: Option<f64>,
}

/// `⟨E⟩ = −m|a_0|² + Σ_n [(nπ/L)(|a_n|²−|a_{−n}|²) − 2m Re(ā_n a_{−n})]`.
pub fn energy_at_length(s: &ModeState, mass: f64, length: f64) -> f64 {
    let mut e = -mass * s.a0.norm_sqr();
    for (i, [p, q]) in s.pairs.iter().enumerate() {
        let k = (i + 1) as f64 * PI / length;
        e += k * (p.norm_sqr() - q.norm_sqr()) - 2.0 * mass * (p.conj() * q).re;
    }
    e
}

pub fn kinetic_energy(s: &ModeState, mass: f64, wall: &WallMotion, t: f64) -> Result<f64> {
    Ok(energy_at_length(s, mass, wall.length(t)?))
}

/// Per-mode energy terms `E_n`, `n = 0..=n_max`.
pub fn energy_terms(s: &ModeState, mass: f64, length: f64) -> Vec<f64> {
    std::iter::once(-mass * s.a0.norm_sqr())
        .chain(s.pairs.iter().enumerate().map(|(i, [p, q])| {
            (i + 1) as f64 * PI / length * (p.norm_sqr() - q.norm_sqr()) - 2.0 * mass * (p.conj() * q).re
        }))
        .collect()
}

/// `⟨y⟩ = Σ_{n,k} ā_n a_k V_{nk}`; errors if the imaginary residue exceeds
/// [`IMAGINARY_RESIDUE_LIMIT`].
pub fn mean_y(s: &ModeState) -> Result<f64> {
    let amps = s.amplitudes();
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, an) in amps.iter().enumerate() {
        let an = an.conj();
        let mut row = Complex64::new(0.0, 0.0);
        for (j, ak) in amps.iter().enumerate() {
            row += ak * position_kernel(i as i64 - j as i64);
        }
        acc += an * row;
    }
    if acc.im.abs() > IMAGINARY_RESIDUE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "mean position has imaginary residue {:.3e}; coefficients are inconsistent",
            acc.im
        )));
    }
    Ok(acc.re)
}

/// Returns `(⟨y⟩, ⟨x⟩)`; `⟨x⟩ = L ⟨y⟩` under [`Convention::Corrected`].
pub fn mean_position(s: &ModeState, wall: &WallMotion, t: f64) -> Result<(f64, f64)> {
    let length = wall.length(t)?;
    let y = mean_y(s)?;
    Ok((y, length * y))
}

pub(crate) fn mean_x_for(convention: Convention, mean_y: f64, length: f64) -> f64 {
    match convention {
        Convention::Corrected => length * mean_y,
        Convention::PaperLiteral => mean_y,
    }
}

/// `⟨F⟩` at a given length using the chosen prefactor.
pub fn force_at_length(s: &ModeState, length: f64, convention: Convention) -> f64 {
    let l2 = length * length;
    s.pairs
        .iter()
        .enumerate()
        .map(|(i, [p, q])| {
            let weight = match convention {
                Convention::Corrected => (i + 1) as f64 * PI,
                Convention::PaperLiteral => 1.0,
            };
            weight / l2 * (p.norm_sqr() - q.norm_sqr())
        })
        .sum()
}

/// `⟨F⟩ = Σ_n (nπ/L²)(|a_n|²−|a_{−n}|²)`.
pub fn quantum_force(s: &ModeState, wall: &WallMotion, t: f64) -> Result<f64> {
    Ok(force_at_length(s, wall.length(t)?, Convention::Corrected))
}

/// Which instantaneous eigenvector of the pair Hamiltonian to follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Positive,
    Negative,
}

/// Normalized eigenvector of `[[nπ, −M], [−M, −nπ]]` on the chosen branch.
pub fn pair_eigenvector(n: usize, coupling: f64, branch: Branch) -> [Complex64; 2] {
    let k = n as f64 * PI;
    let omega = k.hypot(coupling);
    let (u, v) = match branch {
        Branch::Positive => (k + omega, -coupling),
        Branch::Negative => (coupling, k + omega),
    };
    let norm = u.hypot(v);
    [Complex64::new(u / norm, 0.0), Complex64::new(v / norm, 0.0)]
}

/// Discrete geometric phase `−Im ln Π_j ⟨u(M_j)|u(M_{j+1})⟩` of the mode-`n`
/// pair eigenvector around a closed loop of couplings `M = m L`.
/// The result is reduced to `(−π, π]`.
pub fn berry_phase(n: usize, cycle: &[f64], branch: Branch) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("berry phase is defined for pairs n >= 1".into()));
    }
    if cycle.len() < 2 {
        return Err(Error::InvalidCycle("need at least two points".into()));
    }
    if cycle.first() != cycle.last() {
        return Err(Error::InvalidCycle("first and last coupling differ".into()));
    }
    let k = n as f64 * PI;
    if let Some(index) = cycle.iter().position(|m| !m.is_finite() || k.hypot(*m) < 1e-12) {
        return Err(Error::Degenerate { index });
    }
    let vectors: Vec<_> = cycle.iter().map(|&m| pair_eigenvector(n, m, branch)).collect();
    let mut product = Complex64::new(1.0, 0.0);
    for w in vectors.windows(2) {
        let overlap = w[0][0].conj() * w[1][0] + w[0][1].conj() * w[1][1];
        product *= overlap / overlap.norm();
    }
    Ok(-product.arg())
}

/// Couplings `m L(t)` sampled uniformly over one oscillation period of an
/// oscillating wall, closed so that the last point equals the first.
pub fn coupling_cycle(mass: f64, wall: &WallMotion, period: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidCycle("need at least two points".into()));
    }
    let mut cycle = (0..points)
        .map(|i| wall.length(period * i as f64 / (points - 1) as f64).map(|l| mass * l))
        .collect::<Result<Vec<_>>>()?;
    cycle[points - 1] = cycle[0];
    Ok(cycle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn energy_examples() {
        let s = ModeState::basis_mode(1, 4);
        assert_abs_diff_eq!(energy_at_length(&s, 0.0, 2.0), PI / 2.0, epsilon = 1e-15);
        let s = ModeState::basis_mode(0, 4);
        assert_eq!(energy_at_length(&s, 1.0, 7.0), -1.0);
        let terms = energy_terms(&ModeState::basis_mode(-2, 3), 0.0, 1.0);
        assert_abs_diff_eq!(terms[2], -2.0 * PI, epsilon = 1e-14);
    }

    #[test]
    fn spin_up_pair_has_energy_equal_to_mass() {
        // (a_n, a_{-n}) = (1, -1)/√2 is a pure ψ_1-component state: ⟨β⟩ = 1.
        let mut s = ModeState::zeros(3);
        s.pairs[1] = [c(0.5f64.sqrt(), 0.0), c(-(0.5f64.sqrt()), 0.0)];
        assert_abs_diff_eq!(energy_at_length(&s, 1.3, 4.0), 1.3, epsilon = 1e-15);
    }

    #[test]
    fn mean_position_examples() {
        let s = ModeState::basis_mode(1, 4);
        assert_abs_diff_eq!(mean_y(&s).unwrap(), 0.5, epsilon = 1e-15);
        let mut s = ModeState::zeros(4);
        let h = 0.5f64.sqrt();
        *s.amplitude_mut(1) = c(h, 0.0);
        *s.amplitude_mut(2) = c(h, 0.0);
        assert_abs_diff_eq!(mean_y(&s).unwrap(), 0.5 - 2.0 / (PI * PI), epsilon = 1e-15);
        let w = WallMotion::linear(4.0, 0.2, 10.0).unwrap();
        let (y, x) = mean_position(&ModeState::basis_mode(1, 2), &w, 5.0).unwrap();
        assert_abs_diff_eq!(y, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(x, 2.5, epsilon = 1e-14);
    }

    #[test]
    fn force_examples() {
        let s = ModeState::basis_mode(1, 4);
        assert_abs_diff_eq!(force_at_length(&s, 2.0, Convention::Corrected), PI / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(force_at_length(&s, 2.0, Convention::PaperLiteral), 0.25, epsilon = 1e-15);
        let s = ModeState::from_fn(5, |n| c(0.1 * n.abs() as f64, 0.05 * n as f64));
        let s_sym = ModeState::from_fn(5, |n| {
            let a = s.amplitude(n.abs());
            if n < 0 { a.conj() } else { a }
        });
        assert_abs_diff_eq!(force_at_length(&s_sym, 3.0, Convention::Corrected), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn hellmann_feynman_matches_length_derivative() {
        // −∂⟨E⟩/∂L at frozen amplitudes equals the corrected force.
        let s = ModeState::from_fn(6, |n| c((n as f64 * 0.7).cos(), (n as f64 * 1.3).sin()));
        let (l, h, m) = (3.0, 1e-5, 0.8);
        let fd = -(energy_at_length(&s, m, l + h) - energy_at_length(&s, m, l - h)) / (2.0 * h);
        assert_abs_diff_eq!(fd, force_at_length(&s, l, Convention::Corrected), epsilon = 1e-7);
    }

    #[test]
    fn pair_eigenvectors_diagonalize() {
        for &(n, m) in &[(1usize, 0.0), (1, 2.0), (3, -5.0), (2, 40.0)] {
            let k = n as f64 * PI;
            let omega = k.hypot(m);
            for (branch, lambda) in [(Branch::Positive, omega), (Branch::Negative, -omega)] {
                let u = pair_eigenvector(n, m, branch);
                let hu = [u[0] * k - u[1] * m, -u[0] * m - u[1] * k];
                assert_abs_diff_eq!((hu[0] - u[0] * lambda).norm(), 0.0, epsilon = 1e-12);
                assert_abs_diff_eq!((hu[1] - u[1] * lambda).norm(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn berry_phase_examples() {
        assert_eq!(berry_phase(1, &[2.0; 5], Branch::Positive).unwrap(), 0.0);
        let mut cycle: Vec<f64> = (0..50).map(|i| 1.0 + i as f64 / 49.0).collect();
        cycle.extend((0..50).map(|i| 2.0 - i as f64 / 49.0));
        for branch in [Branch::Positive, Branch::Negative] {
            assert!(berry_phase(1, &cycle, branch).unwrap().abs() <= 1e-8);
        }
        assert!(berry_phase(1, &[1.0, 2.0], Branch::Positive).is_err());
        assert!(berry_phase(0, &[1.0, 1.0], Branch::Positive).is_err());
    }

    #[test]
    fn coupling_cycle_is_closed() {
        let w = WallMotion::oscillating(5.0, 0.5, 2.0, 10.0).unwrap();
        let cyc = coupling_cycle(1.0, &w, PI, 17).unwrap();
        assert_eq!(cyc.len(), 17);
        assert_eq!(cyc[0], cyc[16]);
        assert_abs_diff_eq!(cyc[4], 5.5, epsilon = 1e-12);
    }
}
