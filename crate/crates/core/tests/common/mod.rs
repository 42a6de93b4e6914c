//! Test-only oracles shared between integration targets.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgi_phonons::contrast::PhaseSpaceShift;
use sgi_phonons::units::{HBAR, K_B};

/// Overlap of a thermal mode state with its displaced copy, by direct 2D
/// trapezoid quadrature of the Gaussian Wigner function against
/// `cos(k u - s udot)`, `k = M dudot / 2 hbar`, `s = M du / 2 hbar`. The mode
/// has effective mass M/2, so `<u^2> = hbar coth(hbar w / 2 k_B T) / (M w)`.
pub fn wigner_overlap(
    shift: &PhaseSpaceShift,
    omega: f64,
    mass: f64,
    t_ph: f64,
    points: usize,
) -> f64 {
    let coth = if t_ph == 0.0 {
        1.0
    } else {
        1.0 / (HBAR * omega / (2.0 * K_B * t_ph)).tanh()
    };
    let su = (HBAR * coth / (mass * omega)).sqrt();
    let sv = omega * su;
    let k = mass * shift.delta_udot / (2.0 * HBAR);
    let s = mass * shift.delta_u / (2.0 * HBAR);
    let half = 12.0;
    let h = 2.0 * half / (points - 1) as f64;
    let mut total = 0.0;
    for i in 0..points {
        let x = -half + h * i as f64;
        let wx = if i == 0 || i + 1 == points { 0.5 } else { 1.0 };
        let gx = (-0.5 * x * x).exp();
        let mut row = 0.0;
        for j in 0..points {
            let y = -half + h * j as f64;
            let wy = if j == 0 || j + 1 == points { 0.5 } else { 1.0 };
            row += wy * (-0.5 * y * y).exp() * (k * su * x - s * sv * y).cos();
        }
        total += wx * gx * row;
    }
    total * h * h / (2.0 * std::f64::consts::PI)
}

/// A random (shift, omega, T_ph) tuple with per-mode exponent in [1e-3, 3].
pub fn random_tuple(rng: &mut ChaCha8Rng, mass: f64) -> (PhaseSpaceShift, f64, f64) {
    let omega = 10f64.powf(rng.random_range(9.0..13.0));
    let t_ph = rng.random_range(0.5..400.0);
    let target = 10f64.powf(rng.random_range(-3.0..0.5));
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    let coth = 1.0 / (HBAR * omega / (2.0 * K_B * t_ph)).tanh();
    let r = (8.0 * HBAR * target / (mass * omega * coth)).sqrt();
    (
        PhaseSpaceShift {
            delta_u: r * theta.cos(),
            delta_udot: omega * r * theta.sin(),
        },
        omega,
        t_ph,
    )
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
