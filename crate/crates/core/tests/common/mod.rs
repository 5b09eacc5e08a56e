//! Reference computations shared by the integration tests. Nothing here
//! calls into the solver's own quadrature or reconstruction code.
#![allow(dead_code)]

use std::f64::consts::PI;

use dirac_box::init::ModeState;
use dirac_box::ObservableRecord;
use num_complex::Complex64;

/// `Ψ(x)` and `∂_xΨ(x)` summed directly from the amplitudes.
pub fn field(s: &ModeState, length: f64, x: f64) -> ([Complex64; 2], [Complex64; 2]) {
    let norm = length.sqrt().recip();
    let mut psi = [Complex64::new(0.0, 0.0); 2];
    let mut dpsi = [Complex64::new(0.0, 0.0); 2];
    let n_max = s.n_max() as i64;
    for n in -n_max..=n_max {
        let a = s.amplitude(n) * norm;
        let k = n as f64 * PI / length;
        let (sn, cs) = (k * x).sin_cos();
        psi[0] += a * sn;
        psi[1] += a * Complex64::new(0.0, -cs);
        dpsi[0] += a * (k * cs);
        dpsi[1] += a * Complex64::new(0.0, k * sn);
    }
    (psi, dpsi)
}

/// Composite Simpson rule on `intervals` (even) subintervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// `∫₀ᴸ Ψ†(−iα∂_x + mβ)Ψ dx` by Simpson quadrature.
pub fn energy_by_quadrature(s: &ModeState, mass: f64, length: f64, intervals: usize) -> f64 {
    let i = Complex64::i();
    simpson(
        |x| {
            let ([p1, p2], [d1, d2]) = field(s, length, x);
            let kinetic = p1.conj() * (-i * d2) + p2.conj() * (-i * d1);
            kinetic.re + mass * (p1.norm_sqr() - p2.norm_sqr())
        },
        0.0,
        length,
        intervals,
    )
}

/// `a_{±n}(t) = a_{±n}(0) exp(∓i (πn/B) ln(1 + Bt/A))` for a massless particle
/// and the wall `L = A + Bt`.
pub fn massless_linear(s0: &ModeState, a: f64, b: f64, t: f64) -> ModeState {
    let phase = if b == 0.0 { t / a } else { (1.0 + b * t / a).ln() / b };
    ModeState::from_fn(s0.n_max(), |n| s0.amplitude(n) * Complex64::from_polar(1.0, -(n as f64) * PI * phase))
}

/// Least-squares line `y ≈ c + m x`; returns `(c, m, rms residual)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let c = my - slope * mx;
    let rms = (xs.iter().zip(ys).map(|(x, y)| (y - c - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    (c, slope, rms)
}

/// Trapezoid time average of the energy column over `[t0, t1]`.
pub fn time_average_energy(records: &[ObservableRecord], t0: f64, t1: f64) -> f64 {
    let pts: Vec<(f64, f64)> = records.iter().filter(|r| r.t >= t0 && r.t <= t1).map(|r| (r.t, r.energy)).collect();
    let area: f64 = pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
    area / (pts.last().unwrap().0 - pts[0].0)
}

/// Continuous phase of a sequence of complex numbers.
pub fn unwrapped_phase(zs: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(zs.len());
    let mut acc = 0.0;
    for (i, z) in zs.iter().enumerate() {
        if i == 0 {
            acc = z.arg();
        } else {
            acc += (z / zs[i - 1]).arg();
        }
        out.push(acc);
    }
    out
}

/// Seeded random normalized state.
pub fn random_state(rng: &mut impl rand::Rng, n_max: usize) -> ModeState {
    let mut s = ModeState::from_fn(n_max, |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let norm = s.norm();
    s.scale(norm.sqrt().recip());
    s
}
