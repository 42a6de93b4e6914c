//! A fully resolved set of physical parameters and its evaluation in each
//! regime.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::chain::{ChainSpec, SpinSite};
use crate::contrast::{
    contrast_3d_small, contrast_com, contrast_macroscopic, contrast_total_1d_with, ComState,
    ContrastReport, Regime, SphereOptions, ThermalModel,
};
use crate::error::{Error, Result};
use crate::protocols::{Protocol, ProtocolKind};
use crate::sphere::{fundamental_frequency, spin_mode_overlap, SphereSpec};
use crate::units::{gradient_for_acceleration, MaterialSpec};

/// Centre-of-mass state for the optional C_cm factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComInput {
    pub sigma_z: f64,
    pub t_cm: f64,
    pub delta_z: f64,
    pub delta_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub material: MaterialSpec,
    /// Object size L (chain length, sphere diameter or cube side), m.
    pub length: f64,
    /// Fixes the chain's site count; the chain length is then N a.
    pub n_sites: Option<usize>,
    pub spin: SpinSite,
    /// Sphere spin radius over D/2.
    pub spin_fraction: f64,
    pub spin_alignment: f64,
    pub second_harmonic: bool,
    pub protocol: ProtocolKind,
    pub a_max: f64,
    pub t_half: f64,
    pub custom_samples: Option<Arc<[(f64, f64)]>>,
    pub t_ph: f64,
    pub thermal_model: ThermalModel,
    pub prefactor: f64,
    /// Magnetic moment, J/T.
    pub moment: f64,
    pub com: Option<ComInput>,
}

impl Scenario {
    pub fn build_protocol(&self) -> Result<Protocol> {
        match (self.protocol, &self.custom_samples) {
            (ProtocolKind::Custom, Some(samples)) => {
                Protocol::custom(self.t_half, samples.to_vec())
            }
            (ProtocolKind::Custom, None) => {
                Err(Error::Config("custom protocol needs samples".into()))
            }
            (kind, _) => Protocol::new(kind, self.a_max, self.t_half),
        }
    }

    pub fn chain(&self) -> Result<ChainSpec> {
        match self.n_sites {
            Some(n) => ChainSpec::new(
                n,
                self.material.lattice_const,
                self.material.atom_mass,
                self.material.sound_speed,
                self.spin.resolve(n)?,
            ),
            None => ChainSpec::from_material(&self.material, self.length, self.spin),
        }
    }

    pub fn sphere(&self) -> Result<SphereSpec> {
        let radius = self.spin_fraction * 0.5 * self.length;
        SphereSpec::new(
            self.length,
            self.material.clone(),
            radius,
            self.spin_alignment,
        )
    }

    /// Effective size: the chain length N a in 1D, `length` otherwise.
    pub fn size(&self, regime: Regime) -> Result<f64> {
        match regime {
            Regime::Exact1d => Ok(self.chain()?.length()),
            _ => Ok(self.length),
        }
    }

    /// Total mass in the given regime, kg.
    pub fn mass(&self, regime: Regime) -> Result<f64> {
        match regime {
            Regime::Exact1d => Ok(self.chain()?.total_mass()),
            Regime::SphereDominant => Ok(self.sphere()?.mass()),
            Regime::Macroscopic => Ok(self.material.density * self.length.powi(3)),
        }
    }

    /// Fundamental tone: `pi c / L` for the chain and the cube, `c q` for the sphere.
    pub fn omega1(&self, regime: Regime) -> Result<f64> {
        match regime {
            Regime::SphereDominant => fundamental_frequency(&self.sphere()?),
            _ => Ok(PI * self.material.sound_speed / self.size(regime)?),
        }
    }

    /// Field gradient needed for `a_max`, T/m.
    pub fn gradient_required(&self, regime: Regime) -> Result<f64> {
        gradient_for_acceleration(self.moment, self.a_max, self.mass(regime)?)
    }

    pub fn evaluate(&self, regime: Regime) -> Result<ContrastReport> {
        let protocol = self.build_protocol()?;
        let mut report = match regime {
            Regime::Exact1d => {
                let chain = self.chain()?;
                contrast_total_1d_with(
                    &chain,
                    &chain.mode_table(),
                    &protocol,
                    self.t_ph,
                    self.thermal_model,
                )?
            }
            Regime::SphereDominant => {
                let sphere = self.sphere()?;
                let overlap = spin_mode_overlap(&sphere)?;
                let options = SphereOptions {
                    second_harmonic: self.second_harmonic,
                    prefactor: self.prefactor,
                };
                contrast_3d_small(&sphere, &protocol, overlap, self.t_ph, options)?
            }
            Regime::Macroscopic => contrast_macroscopic(
                &self.material,
                &protocol,
                self.length,
                self.t_ph,
                self.prefactor,
            )?,
        };
        if let Some(com) = self.com {
            let state = ComState::thermal(
                self.mass(regime)?,
                com.t_cm,
                com.sigma_z,
                com.delta_z,
                com.delta_p,
            )?;
            report.echo("c_cm", crate::contrast::fmt_f64(contrast_com(&state)));
        }
        Ok(report)
    }
}
