//! Normal modes of a free-ended 1D atom chain.
//!
//! Mode `k` (0 <= k < N) has wavenumber `q = pi k / L` with `L = a N`, mode
//! function `cos[(n + 1/2) q a]` on site `n`, and frequency
//! `omega = sqrt(4K/m) sin(q a / 2)`. Mode 0 is the rigid translation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{spring_constant, MaterialSpec};

/// Geometry and couplings of a chain with an impurity spin on one site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n_sites: usize,
    /// Lattice step a, m.
    pub step: f64,
    /// Mass per site, kg.
    pub site_mass: f64,
    /// Speed of sound, m/s; fixes the spring constant K = m c^2 / a^2.
    pub sound_speed: f64,
    /// Index of the site carrying the spin.
    pub spin_site: usize,
}

impl ChainSpec {
    pub fn new(
        n_sites: usize,
        step: f64,
        site_mass: f64,
        sound_speed: f64,
        spin_site: usize,
    ) -> Result<Self> {
        let spec = ChainSpec {
            n_sites,
            step,
            site_mass,
            sound_speed,
            spin_site,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Chain of length closest to `length` built from the material's lattice
    /// constant and atom mass.
    pub fn from_material(material: &MaterialSpec, length: f64, spin: SpinSite) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::domain(format!(
                "length must be positive, got {length}"
            )));
        }
        let n = ((length / material.lattice_const).round() as usize).max(2);
        Self::new(
            n,
            material.lattice_const,
            material.atom_mass,
            material.sound_speed,
            spin.resolve(n)?,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::validation(format!(
                "a chain needs at least 2 sites, got {}",
                self.n_sites
            )));
        }
        if self.spin_site >= self.n_sites {
            return Err(Error::IndexOutOfRange {
                index: self.spin_site,
                len: self.n_sites,
            });
        }
        for (name, v) in [
            ("step", self.step),
            ("site_mass", self.site_mass),
            ("sound_speed", self.sound_speed),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!(
                    "chain {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.step * self.n_sites as f64
    }

    pub fn total_mass(&self) -> f64 {
        self.site_mass * self.n_sites as f64
    }

    pub fn spring_constant(&self) -> f64 {
        spring_constant(self.site_mass, self.sound_speed, self.step)
    }

    /// Band edge sqrt(4K/m) = 2c/a.
    pub fn omega_max(&self) -> f64 {
        (4.0 * self.spring_constant() / self.site_mass).sqrt()
    }

    /// Acoustic estimate pi c / L of the lowest tone.
    pub fn acoustic_fundamental(&self) -> f64 {
        PI * self.sound_speed / self.length()
    }

    pub fn with_spin_site(&self, spin_site: usize) -> Result<Self> {
        Self::new(
            self.n_sites,
            self.step,
            self.site_mass,
            self.sound_speed,
            spin_site,
        )
    }

    fn check(&self, k: usize) -> Result<()> {
        if k >= self.n_sites {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.n_sites,
            });
        }
        Ok(())
    }

    pub fn wavenumber(&self, k: usize) -> Result<f64> {
        self.check(k)?;
        Ok(PI * k as f64 / self.length())
    }

    /// Exact lattice dispersion, rad/s.
    pub fn dispersion(&self, k: usize) -> Result<f64> {
        self.check(k)?;
        Ok(self.omega_unchecked(k))
    }

    fn omega_unchecked(&self, k: usize) -> f64 {
        // q a / 2 = pi k / (2N)
        self.omega_max() * (PI * k as f64 / (2.0 * self.n_sites as f64)).sin()
    }

    /// `cos[(s + 1/2) q a]`: the mode function on the spin site.
    pub fn mode_amplitude_at_spin(&self, k: usize) -> Result<f64> {
        self.check(k)?;
        Ok(self.site_amplitude(self.spin_site, k))
    }

    fn site_amplitude(&self, site: usize, k: usize) -> f64 {
        // same reduction as CosineBasis, so nodes are exact zeros
        let n = self.n_sites as u64;
        let j = (k as u64 * (2 * site as u64 + 1)) % (4 * n);
        if j == n || j == 3 * n {
            0.0
        } else {
            (PI * j as f64 / (2 * n) as f64).cos()
        }
    }

    /// Projects site displacements onto the modes. Entry 0 is the centre of
    /// mass `(1/N) sum z_n`; entry k >= 1 is `u_q = (2/N) sum z_n cos[(n+1/2) q a]`.
    pub fn project_modes(&self, displacements: &[f64]) -> Result<Vec<f64>> {
        if displacements.len() != self.n_sites {
            return Err(Error::LengthMismatch {
                expected: self.n_sites,
                got: displacements.len(),
            });
        }
        Ok(CosineBasis::new(self.n_sites).project(displacements))
    }

    /// Inverse of [`ChainSpec::project_modes`]: `z_n = Z + sum_q u_q cos[(n+1/2) q a]`.
    pub fn reconstruct(&self, amplitudes: &[f64]) -> Result<Vec<f64>> {
        if amplitudes.len() != self.n_sites {
            return Err(Error::LengthMismatch {
                expected: self.n_sites,
                got: amplitudes.len(),
            });
        }
        Ok(CosineBasis::new(self.n_sites).reconstruct(amplitudes))
    }

    pub fn mode_table(&self) -> ModeTable {
        ModeTable::build(self)
    }
}

/// How the spin site is chosen when building a chain from a length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpinSite {
    Index(usize),
    Named(SpinPlacement),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinPlacement {
    /// Site 0.
    End,
    /// Site N/2 (rounded down); the exact midpoint for odd N.
    Center,
}

impl SpinSite {
    pub fn resolve(self, n_sites: usize) -> Result<usize> {
        let s = match self {
            SpinSite::Index(i) => i,
            SpinSite::Named(SpinPlacement::End) => 0,
            SpinSite::Named(SpinPlacement::Center) => n_sites / 2,
        };
        if s >= n_sites {
            return Err(Error::IndexOutOfRange {
                index: s,
                len: n_sites,
            });
        }
        Ok(s)
    }
}

/// Precomputed `cos(pi j / 2N)` for `j in 0..4N`, so that every mode function
/// value `cos(pi k (2n+1) / 2N)` is an exact table lookup.
pub struct CosineBasis {
    n: usize,
    table: Vec<f64>,
}

impl CosineBasis {
    pub fn new(n: usize) -> Self {
        let mut table: Vec<f64> = (0..4 * n)
            .map(|j| (PI * j as f64 / (2 * n) as f64).cos())
            .collect();
        // exact nodes at quarter turns
        if n > 0 {
            table[n] = 0.0;
            table[3 * n] = 0.0;
        }
        CosineBasis { n, table }
    }

    #[inline]
    pub fn value(&self, site: usize, k: usize) -> f64 {
        let idx = (k as u64 * (2 * site as u64 + 1)) % (4 * self.n as u64);
        self.table[idx as usize]
    }

    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n);
        out.push(z.iter().sum::<f64>() / n as f64);
        for k in 1..n {
            let s: f64 = z
                .iter()
                .enumerate()
                .map(|(site, &zn)| zn * self.value(site, k))
                .sum();
            out.push(2.0 * s / n as f64);
        }
        out
    }

    pub fn reconstruct(&self, u: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|site| u[0] + (1..self.n).map(|k| u[k] * self.value(site, k)).sum::<f64>())
            .collect()
    }
}

/// Per-mode wavenumber, frequency and spin-site amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTable {
    pub q: Vec<f64>,
    pub omega: Vec<f64>,
    pub spin_amp: Vec<f64>,
}

impl ModeTable {
    pub fn build(chain: &ChainSpec) -> Self {
        let n = chain.n_sites;
        let length = chain.length();
        ModeTable {
            q: (0..n).map(|k| PI * k as f64 / length).collect(),
            omega: (0..n).map(|k| chain.omega_unchecked(k)).collect(),
            spin_amp: (0..n)
                .map(|k| chain.site_amplitude(chain.spin_site, k))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}
