//! Physical constants, material presets and the handful of derived scalars
//! (accelerations, coherence lengths, fundamental tones) that the rest of the
//! crate consumes. Everything is SI.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
    /// Atomic mass unit, kg.
    pub amu: f64,
    /// Bohr magneton, J/T.
    pub mu_b: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    hbar: 1.054_571_817e-34,
    k_b: 1.380_649e-23,
    amu: 1.660_539_066_60e-27,
    mu_b: 9.274_010_078_3e-24,
};

pub const HBAR: f64 = CONSTANTS.hbar;
pub const K_B: f64 = CONSTANTS.k_b;
pub const AMU: f64 = CONSTANTS.amu;
pub const MU_B: f64 = CONSTANTS.mu_b;

/// The crystal a nano-object is made of.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub name: String,
    /// Lattice constant, m.
    pub lattice_const: f64,
    /// Mass of one atom, kg.
    pub atom_mass: f64,
    pub atoms_per_cell: u32,
    /// Speed of sound, m/s.
    pub sound_speed: f64,
    /// Mass density, kg/m^3.
    pub density: f64,
}

impl MaterialSpec {
    /// Diamond: a = 3.6 A, 8 carbon atoms per cell, c = 17.5 km/s, 3.5 g/cm^3.
    pub fn diamond() -> Self {
        MaterialSpec {
            name: "diamond".to_string(),
            lattice_const: 3.6e-10,
            atom_mass: 12.0 * AMU,
            atoms_per_cell: 8,
            sound_speed: 17.5e3,
            density: 3.5e3,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "diamond" => Some(Self::diamond()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("lattice_const", self.lattice_const),
            ("atom_mass", self.atom_mass),
            ("sound_speed", self.sound_speed),
            ("density", self.density),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::validation(format!(
                    "material {}: {name} must be positive, got {value}",
                    self.name
                )));
            }
        }
        if self.atoms_per_cell == 0 {
            return Err(Error::validation("atoms_per_cell must be at least 1"));
        }
        Ok(())
    }

    /// Nearest-neighbour spring constant K = m c^2 / a^2, so that the acoustic
    /// limit of the chain dispersion reproduces the speed of sound.
    pub fn spring_constant(&self) -> f64 {
        spring_constant(self.atom_mass, self.sound_speed, self.lattice_const)
    }
}

pub fn spring_constant(site_mass: f64, sound_speed: f64, step: f64) -> f64 {
    site_mass * sound_speed * sound_speed / (step * step)
}

/// Internal phonon temperature and centre-of-mass kinetic temperature, in K.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    pub t_ph: f64,
    pub t_cm: f64,
}

impl ThermalState {
    pub fn new(t_ph: f64, t_cm: f64) -> Result<Self> {
        for (name, t) in [("t_ph", t_ph), ("t_cm", t_cm)] {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::domain(format!("{name} must be >= 0 K, got {t}")));
            }
        }
        Ok(ThermalState { t_ph, t_cm })
    }

    pub fn phonon_coherence_length(&self, mass: f64) -> Result<CoherenceLength> {
        thermal_coherence_length(mass, self.t_ph)
    }

    pub fn com_coherence_length(&self, mass: f64) -> Result<CoherenceLength> {
        thermal_coherence_length(mass, self.t_cm)
    }
}

/// A thermal coherence length; at zero temperature it diverges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoherenceLength {
    Finite(f64),
    Infinite,
}

impl CoherenceLength {
    pub fn finite(self) -> Option<f64> {
        match self {
            CoherenceLength::Finite(l) => Some(l),
            CoherenceLength::Infinite => None,
        }
    }
}

/// a = mu b / M for a spin of moment `mu` (J/T) in a gradient `b` (T/m).
pub fn acceleration_from_gradient(mu: f64, gradient: f64, mass: f64) -> Result<f64> {
    if !(mass > 0.0) {
        return Err(Error::domain(format!("mass must be positive, got {mass}")));
    }
    Ok(mu * gradient / mass)
}

/// Inverse of [`acceleration_from_gradient`]: the gradient needed for `accel`.
pub fn gradient_for_acceleration(mu: f64, accel: f64, mass: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::domain(format!(
            "magnetic moment must be positive, got {mu}"
        )));
    }
    Ok(mass * accel / mu)
}

/// hbar (M k_B T)^(-1/2).
pub fn thermal_coherence_length(mass: f64, temperature: f64) -> Result<CoherenceLength> {
    if !(mass > 0.0) {
        return Err(Error::domain(format!("mass must be positive, got {mass}")));
    }
    if !(temperature >= 0.0) {
        return Err(Error::domain(format!(
            "temperature must be >= 0 K, got {temperature}"
        )));
    }
    if temperature == 0.0 {
        return Ok(CoherenceLength::Infinite);
    }
    Ok(CoherenceLength::Finite(
        HBAR / (mass * K_B * temperature).sqrt(),
    ))
}

/// Lowest acoustic tone pi c / L of a chain or cube of length L, in rad/s.
pub fn fundamental_tone(sound_speed: f64, length: f64) -> Result<f64> {
    if !(sound_speed > 0.0 && length > 0.0) {
        return Err(Error::domain(format!(
            "sound speed and length must be positive, got c = {sound_speed}, L = {length}"
        )));
    }
    Ok(PI * sound_speed / length)
}
