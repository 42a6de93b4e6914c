//! Layered run configuration: built-in defaults, then a TOML file, then
//! explicit overrides. All quantities are SI unless the key says otherwise.
//!
//! ```toml
//! regime = "3d"
//!
//! [object]
//! length = 50e-9
//!
//! [protocol]
//! kind = "bicosine"
//! t_half = 30e-6
//! ```

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chain::{SpinPlacement, SpinSite};
use crate::contrast::{Regime, ThermalModel};
use crate::error::{Error, Result};
use crate::oracle::{OracleSuite, DEFAULT_PHASE_STEP};
use crate::protocols::{Protocol, ProtocolKind};
use crate::scenario::{ComInput, Scenario};
use crate::sweep::{ConstraintMode, SweepSpec, SweepVariable};
use crate::units::{MaterialSpec, HBAR, K_B, MU_B};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// 1d, 3d or macro.
    pub regime: String,
    /// Order-unity factor of the closed-form estimates.
    pub prefactor: f64,
    pub seed: u64,
    pub material: MaterialConfig,
    pub object: ObjectConfig,
    pub protocol: ProtocolConfig,
    pub field: FieldConfig,
    pub thermal: ThermalConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub com: Option<ComConfig>,
    pub sweep: SweepConfig,
    pub oracle: OracleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialConfig {
    pub preset: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice_const: Option<f64>,
    /// Mass per chain site, kg.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atom_mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atoms_per_cell: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sound_speed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectConfig {
    /// Chain length, sphere diameter or cube side, m.
    pub length: f64,
    /// Chain site count; overrides `length` in 1D.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<usize>,
    /// Chain spin site: an index, "end" or "center".
    pub spin_site: SpinSite,
    /// Sphere spin radius in units of D/2.
    pub spin_radius_fraction: f64,
    /// |e_z . f_hat| at the sphere spin.
    pub spin_alignment: f64,
    pub second_harmonic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    /// square, quartic, bicosine, custom (or 0, 1, 2).
    pub kind: String,
    /// m/s^2.
    pub a_max: f64,
    /// s.
    pub t_half: f64,
    /// T_half in units of L/c; overrides `t_half`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_half_sound: Option<f64>,
    /// Two-column `t a(t)` file for the custom protocol.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldConfig {
    /// Magnetic moment in Bohr magnetons.
    pub moment_bohr: f64,
    /// Offset field B0, T. Accepted and ignored: a uniform offset does not
    /// enter any contrast.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermalConfig {
    /// K.
    pub t_ph: f64,
    /// k_B T_ph in units of hbar omega1; overrides `t_ph`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_ph_quanta: Option<f64>,
    pub model: ThermalModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComConfig {
    pub sigma_z: f64,
    pub t_cm: f64,
    #[serde(default)]
    pub delta_z: f64,
    #[serde(default)]
    pub delta_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub log: bool,
    pub constraint: ConstraintMode,
    /// Spatial splitting as a fraction of L (fixed-fractional-splitting).
    pub splitting_fraction: f64,
    /// Maximum velocity splitting, m/s (fixed-fractional-splitting).
    pub velocity_splitting: f64,
    /// T/m.
    pub gradient_cap: f64,
    /// s.
    pub t_half_cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub n_sites: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spin_site: Option<SpinSite>,
    /// T_half in units of L/c.
    pub t_half_sound: f64,
    /// The oracle is linear in the drive; a large value keeps the driven
    /// response well above the rounding of the thermal background.
    pub a_max: f64,
    /// omega_max dt, used when `dt` is not given.
    pub phase_step: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl Default for Config {
    /// Nanodiamond defaults: a_max = 100 m/s^2, 2 T_half = 60 us, T_ph = 293 K,
    /// spin near the centre, L = 100 nm.
    fn default() -> Self {
        Config {
            regime: "1d".into(),
            prefactor: 1.0,
            seed: 0,
            material: MaterialConfig::default(),
            object: ObjectConfig::default(),
            protocol: ProtocolConfig::default(),
            field: FieldConfig::default(),
            thermal: ThermalConfig::default(),
            com: None,
            sweep: SweepConfig::default(),
            oracle: OracleConfig::default(),
        }
    }
}

impl Default for MaterialConfig {
    fn default() -> Self {
        MaterialConfig {
            preset: "diamond".into(),
            lattice_const: None,
            atom_mass: None,
            atoms_per_cell: None,
            sound_speed: None,
            density: None,
        }
    }
}

impl Default for ObjectConfig {
    fn default() -> Self {
        ObjectConfig {
            length: 100e-9,
            n_sites: None,
            spin_site: SpinSite::Named(SpinPlacement::Center),
            spin_radius_fraction: 0.1,
            spin_alignment: 1.0,
            second_harmonic: false,
        }
    }
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            kind: "quartic".into(),
            a_max: 100.0,
            t_half: 30e-6,
            t_half_sound: None,
            samples: None,
        }
    }
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            moment_bohr: 1.0,
            b0: None,
        }
    }
}

impl Default for ThermalConfig {
    fn default() -> Self {
        ThermalConfig {
            t_ph: 293.0,
            t_ph_quanta: None,
            model: ThermalModel::Quantum,
        }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            variable: SweepVariable::Length,
            min: 10e-9,
            max: 200e-9,
            count: 40,
            log: true,
            constraint: ConstraintMode::FixedAcceleration,
            splitting_fraction: 0.1,
            velocity_splitting: 1e-3,
            gradient_cap: 1e6,
            t_half_cap: 100e-6,
        }
    }
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            n_sites: 64,
            spin_site: None,
            t_half_sound: 0.7,
            a_max: 1e12,
            phase_step: DEFAULT_PHASE_STEP,
            dt: None,
        }
    }
}

impl Config {
    /// Parses a TOML document on top of the defaults. Errors carry the line
    /// and column of the offending key.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn regime(&self) -> Result<Regime> {
        self.regime
            .parse()
            .map_err(|_| Error::Config(format!("unknown regime '{}'", self.regime)))
    }

    pub fn protocol_kind(&self) -> Result<ProtocolKind> {
        self.protocol
            .kind
            .parse()
            .map_err(|_| Error::Config(format!("unknown protocol '{}'", self.protocol.kind)))
    }

    pub fn material(&self) -> Result<MaterialSpec> {
        let m = &self.material;
        let mut spec = MaterialSpec::preset(&m.preset)
            .ok_or_else(|| Error::Config(format!("unknown material preset '{}'", m.preset)))?;
        if let Some(x) = m.lattice_const {
            spec.lattice_const = x;
        }
        if let Some(x) = m.atom_mass {
            spec.atom_mass = x;
        }
        if let Some(x) = m.atoms_per_cell {
            spec.atoms_per_cell = x;
        }
        if let Some(x) = m.sound_speed {
            spec.sound_speed = x;
        }
        if let Some(x) = m.density {
            spec.density = x;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Resolves the configuration into physical parameters. Relative paths
    /// (custom samples) are taken relative to `base_dir`.
    pub fn scenario(&self, base_dir: Option<&Path>) -> Result<Scenario> {
        let regime = self.regime()?;
        let material = self.material()?;
        let kind = self.protocol_kind()?;
        let custom_samples = match (kind, &self.protocol.samples) {
            (ProtocolKind::Custom, Some(path)) => {
                let path = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                let p = Protocol::from_file(&path)?;
                Some(Arc::from(p.samples().expect("custom samples")))
            }
            (ProtocolKind::Custom, None) => {
                return Err(Error::Config(
                    "protocol.kind = \"custom\" needs protocol.samples".into(),
                ))
            }
            _ => None,
        };
        if !(self.object.length > 0.0) {
            return Err(Error::Config(format!(
                "object.length must be positive, got {}",
                self.object.length
            )));
        }
        let mut s = Scenario {
            material,
            length: self.object.length,
            n_sites: self.object.n_sites,
            spin: self.object.spin_site,
            spin_fraction: self.object.spin_radius_fraction,
            spin_alignment: self.object.spin_alignment,
            second_harmonic: self.object.second_harmonic,
            protocol: kind,
            a_max: self.protocol.a_max,
            t_half: self.protocol.t_half,
            custom_samples,
            t_ph: self.thermal.t_ph,
            thermal_model: self.thermal.model,
            prefactor: self.prefactor,
            moment: self.field.moment_bohr * MU_B,
            com: self.com.as_ref().map(|c| ComInput {
                sigma_z: c.sigma_z,
                t_cm: c.t_cm,
                delta_z: c.delta_z,
                delta_p: c.delta_p,
            }),
        };
        if let Some(samples) = &s.custom_samples {
            // the samples fix both the window and the amplitude
            let p = Protocol::custom(samples.last().unwrap().0, samples.to_vec())?;
            s.t_half = p.t_half();
            s.a_max = p.a_max();
        }
        let size = s.size(regime)?;
        if let Some(x) = self.protocol.t_half_sound {
            s.t_half = x * size / s.material.sound_speed;
        }
        if let Some(q) = self.thermal.t_ph_quanta {
            // in units of the acoustic tone pi c / L
            s.t_ph = q * HBAR * PI * s.material.sound_speed / (size * K_B);
        }
        if !(s.prefactor > 0.0) {
            return Err(Error::Config(format!(
                "prefactor must be positive, got {}",
                s.prefactor
            )));
        }
        s.build_protocol()?;
        Ok(s)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let w = &self.sweep;
        let spec = SweepSpec {
            variable: w.variable,
            min: w.min,
            max: w.max,
            count: w.count,
            log: w.log,
            regime: self.regime()?,
            constraint: w.constraint,
            splitting_fraction: w.splitting_fraction,
            velocity_splitting: w.velocity_splitting,
            gradient_cap: w.gradient_cap,
            t_half_cap: w.t_half_cap,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Oracle suite on a small chain of the configured material with all
    /// three named protocols.
    pub fn oracle_suite(&self) -> Result<OracleSuite> {
        let o = &self.oracle;
        let material = self.material()?;
        let spin = o.spin_site.unwrap_or(SpinSite::Index(0));
        let chain = crate::chain::ChainSpec::new(
            o.n_sites,
            material.lattice_const,
            material.atom_mass,
            material.sound_speed,
            spin.resolve(o.n_sites)?,
        )?;
        let t_half = o.t_half_sound * chain.length() / chain.sound_speed;
        let protocols = ProtocolKind::NAMED
            .iter()
            .map(|&k| Protocol::new(k, o.a_max, t_half))
            .collect::<Result<Vec<_>>>()?;
        let dt = o.dt.unwrap_or(o.phase_step / chain.omega_max());
        Ok(OracleSuite {
            chain,
            protocols,
            dt,
            t_ph: self.thermal.t_ph,
            seed: self.seed,
        })
    }
}
