//! Continuum acoustic model of a spherical nano-object.
//!
//! The fundamental dipole mode is the gradient of the scalar field
//! `cos(theta) j1(q r)`, with `j1(x) = sin(x)/x^2 - cos(x)/x`. Requiring the
//! radial displacement `cos(theta) q j1'(q r)` to vanish on the surface
//! `r = D/2` gives `q D = 2 x1` where `x1 ~ 2.0816` is the first zero of
//! `j1'`, i.e. `q D ~ 4.1632`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::brent;
use crate::units::MaterialSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereSpec {
    /// Diameter D, m.
    pub diameter: f64,
    pub material: MaterialSpec,
    /// Distance of the spin from the centre, m.
    pub spin_radius: f64,
    /// |e_z . f_hat| at the spin site, in [0, 1].
    pub spin_polar_alignment: f64,
}

impl SphereSpec {
    pub fn new(
        diameter: f64,
        material: MaterialSpec,
        spin_radius: f64,
        spin_polar_alignment: f64,
    ) -> Result<Self> {
        let s = SphereSpec {
            diameter,
            material,
            spin_radius,
            spin_polar_alignment,
        };
        s.validate()?;
        Ok(s)
    }

    /// Spin at `fraction` of the radius, fully aligned with the force.
    pub fn with_spin_fraction(
        diameter: f64,
        material: MaterialSpec,
        fraction: f64,
    ) -> Result<Self> {
        Self::new(diameter, material, fraction * 0.5 * diameter, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        if !(self.diameter.is_finite() && self.diameter > 0.0) {
            return Err(Error::validation(format!(
                "diameter must be positive, got {}",
                self.diameter
            )));
        }
        if !(self.spin_radius > 0.0 && self.spin_radius <= 0.5 * self.diameter) {
            return Err(Error::validation(format!(
                "spin radius must lie in (0, D/2], got {} for D = {}",
                self.spin_radius, self.diameter
            )));
        }
        if !(0.0..=1.0).contains(&self.spin_polar_alignment) {
            return Err(Error::validation(format!(
                "spin polar alignment must lie in [0, 1], got {}",
                self.spin_polar_alignment
            )));
        }
        Ok(())
    }

    /// rho pi D^3 / 6.
    pub fn mass(&self) -> f64 {
        self.material.density * PI * self.diameter.powi(3) / 6.0
    }
}

/// First spherical Bessel function.
pub fn j1(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        x / 3.0 * (1.0 - x2 / 10.0 * (1.0 - x2 / 28.0))
    } else {
        x.sin() / (x * x) - x.cos() / x
    }
}

/// d j1 / dx = j0(x) - 2 j1(x) / x.
pub fn j1_prime(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        1.0 / 3.0 - x2 / 10.0 + x2 * x2 / 168.0
    } else {
        x.sin() / x - 2.0 * (x.sin() / (x * x * x) - x.cos() / (x * x))
    }
}

/// Radial profile g(q r) = j1(q r) of the dipole scalar field.
pub fn dipole_radial_function(q: f64, r: f64) -> f64 {
    j1(q * r)
}

/// Number of sign changes of `j1'` on a uniform scan of `[lo, hi]`.
pub fn boundary_sign_changes(lo: f64, hi: f64, points: usize) -> usize {
    let xs: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    xs.windows(2)
        .filter(|w| j1_prime(w[0]).signum() != j1_prime(w[1]).signum())
        .count()
}

/// The `order`-th positive zero of `j1'` (1-based), located by scanning and
/// then refined with Brent's method.
pub fn dipole_boundary_root(order: usize) -> Result<f64> {
    if order == 0 {
        return Err(Error::domain("root order is 1-based"));
    }
    let step = 0.05;
    let mut found = 0;
    let mut x = 0.1;
    while x < 100.0 {
        let (a, b) = (x, x + step);
        if j1_prime(a).signum() != j1_prime(b).signum() {
            found += 1;
            if found == order {
                return brent(j1_prime, a, b, 1e-15, 200);
            }
        }
        x = b;
    }
    Err(Error::RootFinder(format!(
        "no root of order {order} below x = 100"
    )))
}

/// Wavenumber of the fundamental dipole mode of a sphere of diameter `d`.
pub fn fundamental_dipole_wavenumber(d: f64) -> Result<f64> {
    dipole_wavenumber(d, 1)
}

pub fn dipole_wavenumber(d: f64, order: usize) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::domain(format!("diameter must be positive, got {d}")));
    }
    let x = dipole_boundary_root(order)?;
    Ok(2.0 * x / d)
}

/// omega_1 = c q, rad/s.
pub fn fundamental_frequency(sphere: &SphereSpec) -> Result<f64> {
    Ok(sphere.material.sound_speed * fundamental_dipole_wavenumber(sphere.diameter)?)
}

/// Displacement components (along and across the polar axis) of the dipole
/// field at reduced radius `x = q r` and polar angle `theta`, in units of q.
fn dipole_field(x: f64, theta: f64) -> (f64, f64) {
    let radial = theta.cos() * j1_prime(x);
    let polar = if x.abs() < 1e-12 {
        -theta.sin() / 3.0
    } else {
        -theta.sin() * j1(x) / x
    };
    (radial, polar)
}

/// Maximum of |grad(cos(theta) j1(q r))| / q over the sphere of reduced
/// radius `x_surface`, on a polar grid refined until two successive maxima
/// agree to 1e-4 (relative).
pub fn dipole_field_max(x_surface: f64) -> f64 {
    let (mut nr, mut nt) = (200usize, 100usize);
    let mut previous = grid_max(x_surface, nr, nt);
    for _ in 0..6 {
        nr *= 2;
        nt *= 2;
        let next = grid_max(x_surface, nr, nt);
        if (next - previous).abs() <= 1e-4 * next {
            return next;
        }
        previous = next;
    }
    previous
}

fn grid_max(x_surface: f64, nr: usize, nt: usize) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..=nr {
        let x = x_surface * i as f64 / nr as f64;
        for j in 0..=nt {
            let theta = PI * j as f64 / nt as f64;
            let (a, b) = dipole_field(x, theta);
            best = best.max(a.hypot(b));
        }
    }
    best
}

/// |e_z . f_1(r_s)|^2 for a spin on the polar axis at `spin_radius`, with
/// f_1 normalised to unit maximum amplitude over the sphere.
///
/// At the centre the field is finite and uniform along z (j1(x) ~ x/3), so
/// unlike the odd modes of a chain, a centred spin still couples fully to
/// the fundamental dipole mode.
pub fn spin_mode_overlap(sphere: &SphereSpec) -> Result<f64> {
    mode_overlap(sphere, 1)
}

pub fn mode_overlap(sphere: &SphereSpec, order: usize) -> Result<f64> {
    sphere.validate()?;
    let x_surface = dipole_boundary_root(order)?;
    let x_spin = x_surface * sphere.spin_radius / (0.5 * sphere.diameter);
    let (along, _) = dipole_field(x_spin, 0.0);
    let normalized = along.abs() / dipole_field_max(x_surface);
    Ok((normalized * sphere.spin_polar_alignment).powi(2).min(1.0))
}
