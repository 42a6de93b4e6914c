//! Contrast formulas: the centre-of-mass Gaussian overlap, per-mode
//! Debye-Waller factors of the phonons, the exact 1D mode sum, closed-form
//! estimates, the dominant-mode estimate for a small sphere and the
//! continuum limit for a macroscopic object.
//!
//! Mode amplitudes `u_q` carry an effective mass M/2, so the displacement
//! operator of mode q is `exp[i (k_q u_q - s_q udot_q)]` with
//! `k_q = M dudot_q / 2 hbar` and `s_q = M du_q / 2 hbar`. For a thermal
//! Gaussian state this yields the per-mode exponent
//!
//! ```text
//! (M w / 8 hbar) (du^2 + dudot^2 / w^2) coth(hbar w / 2 k_B T)
//! ```
//!
//! and with `du^2 + dudot^2/w^2 = (4/w^2) cos^2[(s+1/2) q a] |a(w)|^2` the
//! summand `(M / 2 hbar w) coth(..) cos^2[..] |a(w)|^2`.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainSpec, ModeTable};
use crate::error::{Error, Result};
use crate::numerics::compensated_sum;
use crate::protocols::{Protocol, ProtocolKind, SpectrumPath};
use crate::sphere::{dipole_wavenumber, mode_overlap, SphereSpec};
use crate::units::{thermal_coherence_length, MaterialSpec, HBAR, K_B, MU_B};

/// coth(hbar w / 2 k_B T); 1 at T = 0.
pub fn thermal_factor(omega: f64, t_ph: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::domain(format!(
            "mode frequency must be positive, got {omega}"
        )));
    }
    if !(t_ph >= 0.0) {
        return Err(Error::domain(format!(
            "temperature must be >= 0 K, got {t_ph}"
        )));
    }
    if t_ph == 0.0 {
        return Ok(1.0);
    }
    let x = HBAR * omega / (2.0 * K_B * t_ph);
    Ok(1.0 / x.tanh())
}

/// High-temperature limit 2 k_B T / (hbar w) of [`thermal_factor`].
pub fn classical_thermal_factor(omega: f64, t_ph: f64) -> f64 {
    2.0 * K_B * t_ph / (HBAR * omega)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThermalModel {
    /// coth(hbar w / 2 k_B T): correct at all temperatures.
    #[default]
    Quantum,
    /// 2 k_B T / hbar w for every mode.
    Classical,
}

impl ThermalModel {
    pub fn factor(self, omega: f64, t_ph: f64) -> Result<f64> {
        match self {
            ThermalModel::Quantum => thermal_factor(omega, t_ph),
            ThermalModel::Classical => Ok(classical_thermal_factor(omega, t_ph)),
        }
    }
}

/// Centre-of-mass Wigner widths and the splitting between the two arms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComState {
    pub sigma_z: f64,
    pub sigma_p: f64,
    pub delta_z: f64,
    pub delta_p: f64,
}

impl ComState {
    pub fn new(sigma_z: f64, sigma_p: f64, delta_z: f64, delta_p: f64) -> Result<Self> {
        if !(sigma_z > 0.0 && sigma_p > 0.0) {
            return Err(Error::domain("centre-of-mass widths must be positive"));
        }
        Ok(ComState {
            sigma_z,
            sigma_p,
            delta_z,
            delta_p,
        })
    }

    /// Thermal momentum width sigma_p^2 = M k_B T_cm.
    pub fn thermal(mass: f64, t_cm: f64, sigma_z: f64, delta_z: f64, delta_p: f64) -> Result<Self> {
        Self::new(sigma_z, (mass * K_B * t_cm).sqrt(), delta_z, delta_p)
    }
}

/// `exp[-dP^2 sigma_z^2 / 2 hbar^2 - dZ^2 sigma_p^2 / 2 hbar^2]`.
pub fn contrast_com(state: &ComState) -> f64 {
    let a = state.delta_p * state.sigma_z / HBAR;
    let b = state.delta_z * state.sigma_p / HBAR;
    (-0.5 * a * a - 0.5 * b * b).exp()
}

/// Differential displacement of one phonon mode between the two arms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseSpaceShift {
    pub delta_u: f64,
    pub delta_udot: f64,
}

impl PhaseSpaceShift {
    /// `du^2 + dudot^2 / w^2`.
    pub fn squared_norm(&self, omega: f64) -> f64 {
        self.delta_u.powi(2) + (self.delta_udot / omega).powi(2)
    }
}

/// Differential shift of mode `k >= 1` at the end of the loop, from the
/// windowed spectrum: `dudot = 2 c Re a(w)`, `du = -(2 c / w) Im a(w)` with
/// `c = cos[(s+1/2) q a]`.
pub fn mode_displacement(
    chain: &ChainSpec,
    protocol: &Protocol,
    k: usize,
) -> Result<PhaseSpaceShift> {
    if k == 0 {
        return Err(Error::domain(
            "mode 0 is the centre of mass; use contrast_com",
        ));
    }
    let omega = chain.dispersion(k)?;
    let amp = chain.mode_amplitude_at_spin(k)?;
    let (spectrum, _) = protocol.spectrum(omega);
    Ok(shift_from_spectrum(amp, omega, spectrum.value))
}

fn shift_from_spectrum(spin_amp: f64, omega: f64, a: num_complex::Complex64) -> PhaseSpaceShift {
    PhaseSpaceShift {
        delta_u: -2.0 * spin_amp * a.im / omega,
        delta_udot: 2.0 * spin_amp * a.re,
    }
}

/// Exponent `(M w / 8 hbar)(du^2 + dudot^2/w^2) coth(hbar w / 2 k_B T)`; the
/// mode contrast is `exp(-term)`.
pub fn contrast_per_mode(shift: &PhaseSpaceShift, omega: f64, mass: f64, t_ph: f64) -> Result<f64> {
    if !(mass > 0.0) {
        return Err(Error::domain(format!("mass must be positive, got {mass}")));
    }
    let coth = thermal_factor(omega, t_ph)?;
    Ok(mass * omega / (8.0 * HBAR) * shift.squared_norm(omega) * coth)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "exact-1d")]
    Exact1d,
    #[serde(rename = "sphere-dominant")]
    SphereDominant,
    #[serde(rename = "macroscopic")]
    Macroscopic,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Exact1d => "exact-1d",
            Regime::SphereDominant => "sphere-dominant",
            Regime::Macroscopic => "macroscopic",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1d" | "exact-1d" => Ok(Regime::Exact1d),
            "3d" | "sphere-dominant" | "sphere" => Ok(Regime::SphereDominant),
            "macro" | "macroscopic" => Ok(Regime::Macroscopic),
            other => Err(Error::validation(format!(
                "unknown regime '{other}' (expected 1d, 3d or macro)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeTerm {
    pub k: usize,
    pub omega: f64,
    pub term: f64,
}

/// Result of a contrast evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastReport {
    /// -log C_ph.
    pub minus_log_c: f64,
    pub per_mode_terms: Vec<ModeTerm>,
    /// Closed-form estimate of `minus_log_c` (f S bound in 1D, the
    /// order-unity closed forms in 3D), when one exists.
    pub estimate_fs: Option<f64>,
    pub regime: Regime,
    pub spectrum_path: SpectrumPath,
    /// Order-unity prefactor applied to the closed forms.
    pub prefactor: f64,
    /// Input parameters, in insertion order.
    pub params_echo: Vec<(String, String)>,
    pub notes: Vec<String>,
}

impl ContrastReport {
    pub fn contrast(&self) -> f64 {
        (-self.minus_log_c).exp()
    }

    pub fn echo(&mut self, key: &str, value: impl fmt::Display) {
        self.params_echo.push((key.to_string(), value.to_string()));
    }

    /// Header block of `# key = value` lines followed by one CSV line per mode.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# regime = {}", self.regime);
        let _ = writeln!(out, "# minus_log_c = {}", fmt_f64(self.minus_log_c));
        let _ = writeln!(out, "# contrast = {}", fmt_f64(self.contrast()));
        match self.estimate_fs {
            Some(e) => {
                let _ = writeln!(out, "# estimate_fs = {}", fmt_f64(e));
            }
            None => {
                let _ = writeln!(out, "# estimate_fs = none");
            }
        }
        let _ = writeln!(out, "# spectrum_path = {}", path_name(self.spectrum_path));
        let _ = writeln!(out, "# prefactor = {}", fmt_f64(self.prefactor));
        for (k, v) in &self.params_echo {
            let _ = writeln!(out, "# param.{k} = {v}");
        }
        for note in &self.notes {
            let _ = writeln!(out, "# note: {note}");
        }
        out.push_str("k,omega,term\n");
        for t in &self.per_mode_terms {
            let _ = writeln!(out, "{},{},{}", t.k, fmt_f64(t.omega), fmt_f64(t.term));
        }
        out
    }
}

pub(crate) fn path_name(p: SpectrumPath) -> &'static str {
    match p {
        SpectrumPath::Analytic => "analytic",
        SpectrumPath::Numeric => "numeric",
    }
}

/// Round-trip formatting with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Exact 1D mode sum for the chain, with the quantum thermal factor.
pub fn contrast_total_1d(
    chain: &ChainSpec,
    protocol: &Protocol,
    t_ph: f64,
) -> Result<ContrastReport> {
    contrast_total_1d_with(
        chain,
        &chain.mode_table(),
        protocol,
        t_ph,
        ThermalModel::Quantum,
    )
}

/// Exact 1D mode sum over k = 1 .. N-1 using a prebuilt mode table.
pub fn contrast_total_1d_with(
    chain: &ChainSpec,
    modes: &ModeTable,
    protocol: &Protocol,
    t_ph: f64,
    thermal: ThermalModel,
) -> Result<ContrastReport> {
    chain.validate()?;
    if modes.len() != chain.n_sites {
        return Err(Error::LengthMismatch {
            expected: chain.n_sites,
            got: modes.len(),
        });
    }
    let mass = chain.total_mass();
    let path = protocol.spectrum(modes.omega[1]).1;

    let terms: Vec<Result<ModeTerm>> = (1..chain.n_sites)
        .into_par_iter()
        .map(|k| {
            let omega = modes.omega[k];
            let (spec, _) = protocol.spectrum(omega);
            let coth = thermal.factor(omega, t_ph)?;
            let amp = modes.spin_amp[k];
            let term = mass / (2.0 * HBAR * omega) * coth * amp * amp * spec.value.norm_sqr();
            Ok(ModeTerm { k, omega, term })
        })
        .collect();
    let terms = terms.into_iter().collect::<Result<Vec<_>>>()?;
    let minus_log_c = compensated_sum(terms.iter().map(|t| t.term));

    let omega1 = chain.acoustic_fundamental();
    let estimate = match protocol.kind().index() {
        Some(_) if t_ph > 0.0 => {
            let s = estimate_s(chain, protocol, t_ph, omega1)?;
            Some(estimate_f(protocol.a_max(), protocol.t_half(), t_ph, mass, omega1) * s.bound)
        }
        _ => None,
    };

    let mut report = ContrastReport {
        minus_log_c,
        per_mode_terms: terms,
        estimate_fs: estimate,
        regime: Regime::Exact1d,
        spectrum_path: path,
        prefactor: 1.0,
        params_echo: Vec::new(),
        notes: Vec::new(),
    };
    report.echo("n_sites", chain.n_sites);
    report.echo("spin_site", chain.spin_site);
    report.echo("length", fmt_f64(chain.length()));
    report.echo("mass", fmt_f64(mass));
    report.echo("omega1", fmt_f64(omega1));
    report.echo("protocol", protocol.kind());
    report.echo("a_max", fmt_f64(protocol.a_max()));
    report.echo("t_half", fmt_f64(protocol.t_half()));
    report.echo("t_ph", fmt_f64(t_ph));
    report.echo("thermal_model", format!("{thermal:?}").to_lowercase());
    if omega1 * protocol.t_half() < 2.0 * PI {
        report.notes.push(format!(
            "omega1 T_half = {:.3} < 2 pi: not in the small-object regime",
            omega1 * protocol.t_half()
        ));
    }
    Ok(report)
}

/// `f = (a_max T)^2 M k_B T_ph / (hbar w1)^2 = (a_max T / w1 lambda_ph)^2`.
pub fn estimate_f(a_max: f64, t_half: f64, t_ph: f64, mass: f64, omega1: f64) -> f64 {
    (a_max * t_half).powi(2) * mass * K_B * t_ph / (HBAR * omega1).powi(2)
}

/// Both forms of the dimensionless spectral sum S.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSum {
    /// Mode sum with the exact spectrum, thermal factor and spin amplitude.
    pub exact: f64,
    /// `A_n / (w1 T)^(2n+2) * sum_q (w1 / w_q)^(2n+4)`.
    pub bound: f64,
    /// `sum_q (w1 / w_q)^(2n+4)` over the chain's modes.
    pub frequency_sum: f64,
}

/// S for a named protocol on a chain, relative to the reference tone `omega1`.
pub fn estimate_s(
    chain: &ChainSpec,
    protocol: &Protocol,
    t_ph: f64,
    omega1: f64,
) -> Result<SpectralSum> {
    let n = protocol
        .kind()
        .index()
        .ok_or_else(|| Error::Unsupported("the closed-form S needs a named protocol".into()))?;
    if !(t_ph > 0.0 && omega1 > 0.0) {
        return Err(Error::domain("S needs T_ph > 0 and omega1 > 0"));
    }
    let a_n = protocol.kind().envelope_constant().expect("named protocol");
    let t_half = protocol.t_half();
    let scale = protocol.a_max() * t_half;
    let beta = HBAR / (K_B * t_ph);
    let modes = chain.mode_table();

    let exact = compensated_sum((1..chain.n_sites).map(|k| {
        let w = modes.omega[k];
        let amp = modes.spin_amp[k];
        let reduced = if scale > 0.0 {
            protocol.spectrum(w).0.value.norm_sqr() / (scale * scale)
        } else {
            0.0
        };
        let coth = 1.0 / (0.5 * beta * w).tanh();
        beta * omega1 * omega1 / (2.0 * w) * coth * amp * amp * reduced
    }));
    let power = 2 * n as i32 + 4;
    let frequency_sum =
        compensated_sum((1..chain.n_sites).map(|k| (omega1 / modes.omega[k]).powi(power)));
    let bound = a_n / (omega1 * t_half).powi(2 * n as i32 + 2) * frequency_sum;
    Ok(SpectralSum {
        exact,
        bound,
        frequency_sum,
    })
}

/// Riemann zeta by direct summation of `terms` terms.
pub fn zeta_partial(s: u32, terms: usize) -> f64 {
    // summed smallest first
    (1..=terms)
        .rev()
        .map(|j| (j as f64).powi(-(s as i32)))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereOptions {
    /// Add the next dipole overtone to the fundamental.
    pub second_harmonic: bool,
    /// Order-unity prefactor of the closed forms.
    pub prefactor: f64,
}

impl Default for SphereOptions {
    fn default() -> Self {
        SphereOptions {
            second_harmonic: false,
            prefactor: 1.0,
        }
    }
}

/// Closed forms of the dominant-mode estimate for a small object of mass
/// `mass`, fundamental `omega1`, size `length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallObjectClosedForms {
    /// `M k_B T a_max^2 / (hbar^2 w1^2 (w1 T)^(2n+2)) * T^2`.
    pub frequency_form: f64,
    /// `(dZ_max / lambda_ph)^2 (L / c T)^(2n+4)`.
    pub splitting_form: f64,
}

pub fn small_object_closed_forms(
    mass: f64,
    omega1: f64,
    length: f64,
    sound_speed: f64,
    protocol: &Protocol,
    t_ph: f64,
    prefactor: f64,
) -> Result<SmallObjectClosedForms> {
    let n = protocol
        .kind()
        .index()
        .ok_or_else(|| Error::Unsupported("closed forms need a named protocol".into()))?;
    let t_half = protocol.t_half();
    let lambda = thermal_coherence_length(mass, t_ph)?;
    let frequency_form = prefactor * estimate_f(protocol.a_max(), t_half, t_ph, mass, omega1)
        / (omega1 * t_half).powi(2 * n as i32 + 2);
    let splitting_form = match lambda.finite() {
        Some(l) => {
            prefactor
                * (protocol.max_splitting() / l).powi(2)
                * (length / (sound_speed * t_half)).powi(2 * n as i32 + 4)
        }
        None => 0.0,
    };
    Ok(SmallObjectClosedForms {
        frequency_form,
        splitting_form,
    })
}

/// Dominant-mode estimate for a small sphere:
/// `(M / 2 hbar w1) coth(hbar w1 / 2 k_B T) |e_z . f_1(r_s)|^2 |a(w1)|^2`.
pub fn contrast_3d_small(
    sphere: &SphereSpec,
    protocol: &Protocol,
    spin_overlap: f64,
    t_ph: f64,
    options: SphereOptions,
) -> Result<ContrastReport> {
    sphere.validate()?;
    if !(0.0..=1.0).contains(&spin_overlap) {
        return Err(Error::domain(format!(
            "spin overlap must lie in [0, 1], got {spin_overlap}"
        )));
    }
    let mass = sphere.mass();
    let c = sphere.material.sound_speed;
    let omega1 = c * dipole_wavenumber(sphere.diameter, 1)?;

    let mode_term = |omega: f64, overlap: f64| -> Result<(f64, SpectrumPath)> {
        let (s, path) = protocol.spectrum(omega);
        let coth = thermal_factor(omega, t_ph)?;
        Ok((
            mass / (2.0 * HBAR * omega) * coth * overlap * s.value.norm_sqr(),
            path,
        ))
    };
    let (first, path) = mode_term(omega1, spin_overlap)?;
    let mut terms = vec![ModeTerm {
        k: 1,
        omega: omega1,
        term: first,
    }];
    if options.second_harmonic {
        let omega2 = c * dipole_wavenumber(sphere.diameter, 2)?;
        // same spin placement, overlap with the overtone's own field
        let ratio = if spin_overlap > 0.0 {
            spin_overlap / mode_overlap(sphere, 1)?.max(f64::MIN_POSITIVE)
        } else {
            0.0
        };
        let overlap2 = (mode_overlap(sphere, 2)? * ratio).min(1.0);
        terms.push(ModeTerm {
            k: 2,
            omega: omega2,
            term: mode_term(omega2, overlap2)?.0,
        });
    }
    let minus_log_c = compensated_sum(terms.iter().map(|t| t.term));
    let estimate = match protocol.kind().index() {
        Some(_) if t_ph > 0.0 => Some(
            small_object_closed_forms(
                mass,
                omega1,
                sphere.diameter,
                c,
                protocol,
                t_ph,
                options.prefactor,
            )?
            .frequency_form,
        ),
        _ => None,
    };
    let mut report = ContrastReport {
        minus_log_c,
        per_mode_terms: terms,
        estimate_fs: estimate,
        regime: Regime::SphereDominant,
        spectrum_path: path,
        prefactor: options.prefactor,
        params_echo: Vec::new(),
        notes: Vec::new(),
    };
    report.echo("diameter", fmt_f64(sphere.diameter));
    report.echo("mass", fmt_f64(mass));
    report.echo("omega1", fmt_f64(omega1));
    report.echo("spin_overlap", fmt_f64(spin_overlap));
    report.echo("protocol", protocol.kind());
    report.echo("a_max", fmt_f64(protocol.a_max()));
    report.echo("t_half", fmt_f64(protocol.t_half()));
    report.echo("t_ph", fmt_f64(t_ph));
    report.echo("second_harmonic", options.second_harmonic);
    Ok(report)
}

/// Continuum estimate for a cube of side `length` with dense acoustic modes
/// (three branches, angular average 1/2, high-temperature limit):
///
/// ```text
/// -log C = 3 M L^3 k_B T / (pi hbar^2 c^3) * int a(t)^2 dt
/// ```
///
/// with M = rho L^3 the total mass, taken literally.
pub fn contrast_macroscopic(
    material: &MaterialSpec,
    protocol: &Protocol,
    length: f64,
    t_ph: f64,
    prefactor: f64,
) -> Result<ContrastReport> {
    material.validate()?;
    if !(length > 0.0) {
        return Err(Error::domain(format!(
            "length must be positive, got {length}"
        )));
    }
    let mass = material.density * length.powi(3);
    let c = material.sound_speed;
    let energy = protocol.energy_norm();
    let minus_log_c =
        3.0 * mass * length.powi(3) * K_B * t_ph / (PI * HBAR * HBAR * c.powi(3)) * energy;

    let t_half = protocol.t_half();
    let lambda = thermal_coherence_length(mass, t_ph)?;
    let splitting_form = lambda.finite().map(|l| {
        prefactor * (protocol.max_splitting() / l).powi(2) * (length / (c * t_half)).powi(3)
    });

    let omega1 = PI * c / length;
    let mut report = ContrastReport {
        minus_log_c,
        per_mode_terms: Vec::new(),
        estimate_fs: splitting_form,
        regime: Regime::Macroscopic,
        spectrum_path: SpectrumPath::Numeric,
        prefactor,
        params_echo: Vec::new(),
        notes: Vec::new(),
    };
    report.echo("length", fmt_f64(length));
    report.echo("mass", fmt_f64(mass));
    report.echo("omega1", fmt_f64(omega1));
    report.echo("protocol", protocol.kind());
    report.echo("a_max", fmt_f64(protocol.a_max()));
    report.echo("t_half", fmt_f64(t_half));
    report.echo("t_ph", fmt_f64(t_ph));
    report.echo("energy_norm", fmt_f64(energy));
    if omega1 * t_half > 2.0 * PI {
        report.notes.push(format!(
            "omega1 T_half = {:.3} > 2 pi: modes are not dense on the spectrum scale; the continuum estimate is unreliable",
            omega1 * t_half
        ));
    }
    if let Some(l) = lambda.finite() {
        report.echo("lambda_ph", fmt_f64(l));
        if minus_log_c > 1.0 {
            report.notes.push(format!(
                "coherent splitting is bounded by the phonon coherence length lambda_ph = {l:.3e} m"
            ));
        }
    }
    Ok(report)
}

/// Upper bound on `(T_half / us) (b_max / (T/m))^2` for C_ph >= 10% in the
/// macroscopic regime:
///
/// ```text
/// prefactor * 1e15 * [rho / (g/cm^3)] [c / (km/s)]^3 / ((mu / mu_B)^2 (T_ph / 300 K))
/// ```
pub fn gradient_time_bound(
    material: &MaterialSpec,
    mu: f64,
    t_ph: f64,
    prefactor: f64,
) -> Result<f64> {
    material.validate()?;
    if !(mu > 0.0 && t_ph > 0.0 && prefactor > 0.0) {
        return Err(Error::domain(
            "moment, temperature and prefactor must be positive",
        ));
    }
    let rho = material.density / 1e3;
    let c = material.sound_speed / 1e3;
    Ok(prefactor * 1e15 * rho * c.powi(3) / ((mu / MU_B).powi(2) * (t_ph / 300.0)))
}

/// Protocol kinds that have closed forms, with their index.
pub fn named_protocols() -> impl Iterator<Item = (u32, ProtocolKind)> {
    ProtocolKind::NAMED
        .into_iter()
        .map(|k| (k.index().unwrap(), k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{AMU, MU_B};
    use approx::assert_relative_eq;

    fn chain(n: usize, s: usize) -> ChainSpec {
        ChainSpec::new(n, 3.6e-10, 12.0 * AMU, 17.5e3, s).unwrap()
    }

    #[test]
    fn thermal_factor_limits() {
        assert_eq!(thermal_factor(1e12, 0.0).unwrap(), 1.0);
        let t = 300.0;
        let w = 0.1 * K_B * t / HBAR;
        assert_relative_eq!(
            thermal_factor(w, t).unwrap(),
            classical_thermal_factor(w, t),
            max_relative = 1e-2
        );
        let w = K_B * t / HBAR;
        assert_relative_eq!(
            thermal_factor(w, t).unwrap(),
            1.0 / 0.5f64.tanh(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            thermal_factor(w, t).unwrap(),
            2.163953413738653,
            max_relative = 1e-12
        );
        assert!(thermal_factor(0.0, t).is_err());
        assert!(thermal_factor(-1.0, t).is_err());
    }

    #[test]
    fn com_contrast() {
        let (sz, sp) = (2e-9, 3e-25);
        assert_eq!(contrast_com(&ComState::new(sz, sp, 0.0, 0.0).unwrap()), 1.0);
        let c = contrast_com(&ComState::new(sz, sp, HBAR / sp, 0.0).unwrap());
        assert_relative_eq!(c, (-0.5f64).exp(), max_relative = 1e-14);
        let c = contrast_com(&ComState::new(sz, sp, 0.0, 2.0 * HBAR / sz).unwrap());
        assert_relative_eq!(c, (-2.0f64).exp(), max_relative = 1e-14);
        assert!(ComState::new(0.0, sp, 0.0, 0.0).is_err());
    }

    #[test]
    fn displacement_of_idle_protocol_is_zero() {
        let c = chain(17, 0);
        let p = Protocol::quartic(0.0, 1e-12).unwrap();
        let s = mode_displacement(&c, &p, 3).unwrap();
        assert_eq!(
            s,
            PhaseSpaceShift {
                delta_u: 0.0,
                delta_udot: 0.0
            }
        );
        assert!(mode_displacement(&c, &p, 0).is_err());
    }

    #[test]
    fn centred_spin_decouples_odd_modes() {
        let c = chain(17, 8);
        let p = Protocol::square(100.0, 2e-12).unwrap();
        for k in (1..17).step_by(2) {
            let s = mode_displacement(&c, &p, k).unwrap();
            assert!(s.delta_u.abs() < 1e-20 && s.delta_udot.abs() < 1e-20);
        }
    }

    #[test]
    fn displacement_identity() {
        let c = chain(17, 3);
        let p = Protocol::quartic(100.0, 0.7 * c.length() / c.sound_speed).unwrap();
        for k in 1..17 {
            let w = c.dispersion(k).unwrap();
            let s = mode_displacement(&c, &p, k).unwrap();
            let amp = c.mode_amplitude_at_spin(k).unwrap();
            let rhs = 4.0 / (w * w) * amp * amp * p.spectrum_analytic(w).unwrap().value.norm_sqr();
            assert_relative_eq!(s.squared_norm(w), rhs, max_relative = 1e-12);
        }
    }

    #[test]
    fn per_mode_term_is_quadratic_in_drive() {
        let shift = PhaseSpaceShift {
            delta_u: 1e-15,
            delta_udot: 3e-4,
        };
        let t1 = contrast_per_mode(&shift, 1e11, 1e-20, 300.0).unwrap();
        let doubled = PhaseSpaceShift {
            delta_u: 2e-15,
            delta_udot: 6e-4,
        };
        let t2 = contrast_per_mode(&doubled, 1e11, 1e-20, 300.0).unwrap();
        assert_relative_eq!(t2, 4.0 * t1, max_relative = 1e-14);
        assert_eq!(
            contrast_per_mode(&PhaseSpaceShift::default(), 1e11, 1e-20, 300.0).unwrap(),
            0.0
        );
        assert!(contrast_per_mode(&shift, 1e11, 0.0, 300.0).is_err());
    }

    #[test]
    fn per_mode_composition_matches_summand() {
        // (M w / 8 hbar)(4 / w^2) = M / (2 hbar w)
        let c = chain(31, 4);
        let p = Protocol::bicosine(50.0, 1.2 * c.length() / c.sound_speed).unwrap();
        let report = contrast_total_1d(&c, &p, 40.0).unwrap();
        for t in &report.per_mode_terms {
            let s = mode_displacement(&c, &p, t.k).unwrap();
            let via_shift = contrast_per_mode(&s, t.omega, c.total_mass(), 40.0).unwrap();
            assert_relative_eq!(via_shift, t.term, max_relative = 1e-9, epsilon = 1e-300);
        }
    }

    #[test]
    fn exponent_is_sum_of_terms() {
        let c = chain(17, 7);
        let p = Protocol::square(100.0, 0.7 * c.length() / c.sound_speed).unwrap();
        let r = contrast_total_1d(&c, &p, 300.0).unwrap();
        assert_eq!(r.per_mode_terms.len(), 16);
        assert_eq!(
            r.minus_log_c,
            compensated_sum(r.per_mode_terms.iter().map(|t| t.term))
        );
        assert!(r.per_mode_terms.iter().all(|t| t.term >= 0.0));
        assert_eq!(r.regime, Regime::Exact1d);
        assert_eq!(r.spectrum_path, SpectrumPath::Analytic);
    }

    #[test]
    fn idle_protocol_gives_full_contrast() {
        let c = chain(17, 7);
        let p = Protocol::square(0.0, 1e-6).unwrap();
        let r = contrast_total_1d(&c, &p, 300.0).unwrap();
        assert_eq!(r.minus_log_c, 0.0);
        assert_eq!(r.contrast(), 1.0);
    }

    #[test]
    fn centred_spin_sum_dominated_by_second_mode() {
        let c = chain(17, 8);
        let p = Protocol::quartic(100.0, 0.7 * c.length() / c.sound_speed).unwrap();
        let r = contrast_total_1d(&c, &p, 300.0).unwrap();
        assert_eq!(r.per_mode_terms[0].term, 0.0);
        let largest = r
            .per_mode_terms
            .iter()
            .max_by(|a, b| a.term.total_cmp(&b.term))
            .unwrap();
        assert_eq!(largest.k, 2);
    }

    #[test]
    fn f_identity_and_scaling() {
        let (a, t, temp, m, w1) = (100.0, 30e-6, 293.0, 1e-21, 1e11);
        let f = estimate_f(a, t, temp, m, w1);
        let lambda = thermal_coherence_length(m, temp).unwrap().finite().unwrap();
        assert_relative_eq!(f, (a * t / (w1 * lambda)).powi(2), max_relative = 1e-13);
        assert_relative_eq!(
            estimate_f(a, t, temp, 2.0 * m, w1 / 2.0),
            8.0 * f,
            max_relative = 1e-14
        );
    }

    #[test]
    fn f_times_exact_s_is_the_mode_sum() {
        let c = chain(150, 0);
        let p = Protocol::quartic(100.0, 30e-6).unwrap();
        let r = contrast_total_1d(&c, &p, 293.0).unwrap();
        let w1 = c.acoustic_fundamental();
        let s = estimate_s(&c, &p, 293.0, w1).unwrap();
        let f = estimate_f(100.0, 30e-6, 293.0, c.total_mass(), w1);
        assert_relative_eq!(f * s.exact, r.minus_log_c, max_relative = 1e-11);
    }

    #[test]
    fn zeta_values() {
        assert_relative_eq!(zeta_partial(4, 100_000), 1.08232, max_relative = 1e-5);
        assert_relative_eq!(zeta_partial(6, 10_000), 1.01734, max_relative = 1e-5);
        assert!((zeta_partial(8, 50) - 1.00408).abs() < 1e-5);
    }

    #[test]
    fn bound_calculator() {
        let d = MaterialSpec::diamond();
        let b = gradient_time_bound(&d, MU_B, 300.0, 1.0).unwrap();
        assert_relative_eq!(b, 1e15 * 3.5 * 17.5f64.powi(3), max_relative = 1e-12);
        assert_relative_eq!(
            gradient_time_bound(&d, 2.0 * MU_B, 300.0, 1.0).unwrap(),
            b / 4.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            gradient_time_bound(&d, MU_B, 150.0, 1.0).unwrap(),
            2.0 * b,
            max_relative = 1e-15
        );
        assert!(gradient_time_bound(&d, 0.0, 300.0, 1.0).is_err());
    }

    #[test]
    fn macroscopic_protocol_dependence_through_energy_only() {
        let d = MaterialSpec::diamond();
        let reports: Vec<_> = ProtocolKind::NAMED
            .iter()
            .map(|&k| {
                contrast_macroscopic(
                    &d,
                    &Protocol::new(k, 100.0, 30e-6).unwrap(),
                    1.0,
                    293.0,
                    1.0,
                )
                .unwrap()
            })
            .collect();
        let ratio = |i: usize| reports[i].minus_log_c / reports[0].minus_log_c;
        let c0 = Protocol::square(1.0, 1.0).unwrap().parseval_constant();
        assert_relative_eq!(ratio(1), 256.0 / 315.0 / c0, max_relative = 1e-12);
        assert_relative_eq!(ratio(2), 0.5 / c0, max_relative = 1e-12);
        assert!(reports[0].minus_log_c > 1e20);
        assert!(reports[0].notes.iter().any(|n| n.contains("lambda_ph")));
    }

    #[test]
    fn macroscopic_mass_substitution() {
        // (M, a) -> (2M, a/2) at fixed L: M a^2 halves, and M enters once more
        // through the explicit factor only.
        let d = MaterialSpec::diamond();
        let mut heavy = d.clone();
        heavy.density *= 2.0;
        let p = Protocol::quartic(100.0, 30e-6).unwrap();
        let base = contrast_macroscopic(&d, &p, 0.5, 293.0, 1.0)
            .unwrap()
            .minus_log_c;
        let subst = contrast_macroscopic(&heavy, &p.with_a_max(50.0).unwrap(), 0.5, 293.0, 1.0)
            .unwrap()
            .minus_log_c;
        assert_relative_eq!(subst / base, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn macroscopic_splitting_form_ratio_is_constant() {
        let d = MaterialSpec::diamond();
        let mut ratios = Vec::new();
        for (a, temp) in [(10.0, 4.0), (100.0, 293.0), (1e3, 77.0)] {
            let r = contrast_macroscopic(&d, &Protocol::quartic(a, 30e-6).unwrap(), 0.5, temp, 1.0)
                .unwrap();
            ratios.push(r.estimate_fs.unwrap() / r.minus_log_c);
        }
        for r in &ratios[1..] {
            assert_relative_eq!(*r, ratios[0], max_relative = 1e-12);
        }
        let c1 = 256.0 / 315.0;
        assert_relative_eq!(ratios[0], PI / (3.0 * c1), max_relative = 1e-12);
    }

    #[test]
    fn sphere_estimate_vanishes_without_drive() {
        let s = SphereSpec::with_spin_fraction(50e-9, MaterialSpec::diamond(), 0.1).unwrap();
        let p = Protocol::quartic(0.0, 30e-6).unwrap();
        let r = contrast_3d_small(&s, &p, 1.0, 293.0, SphereOptions::default()).unwrap();
        assert_eq!(r.minus_log_c, 0.0);
        assert!(contrast_3d_small(&s, &p, 1.5, 293.0, SphereOptions::default()).is_err());
    }

    #[test]
    fn sphere_second_harmonic_is_small() {
        let s = SphereSpec::with_spin_fraction(50e-9, MaterialSpec::diamond(), 0.1).unwrap();
        let p = Protocol::quartic(100.0, 30e-6).unwrap();
        let overlap = crate::sphere::spin_mode_overlap(&s).unwrap();
        let with = contrast_3d_small(
            &s,
            &p,
            overlap,
            293.0,
            SphereOptions {
                second_harmonic: true,
                prefactor: 1.0,
            },
        )
        .unwrap();
        assert_eq!(with.per_mode_terms.len(), 2);
        let envelope = |w: f64| 256.0 / (w * 30e-6).powi(4) / w.powi(2);
        let ratio = envelope(with.per_mode_terms[1].omega) / envelope(with.per_mode_terms[0].omega);
        assert!(ratio < 0.05, "{ratio}");
    }

    #[test]
    fn closed_forms_differ_by_constant() {
        let c = 17.5e3;
        let p = Protocol::quartic(100.0, 30e-6).unwrap();
        let mut ratios = Vec::new();
        for d in [20e-9, 60e-9, 180e-9] {
            let w1 = c * 4.1632 / d;
            let mass = 3.5e3 * PI * d * d * d / 6.0;
            let cf = small_object_closed_forms(mass, w1, d, c, &p, 293.0, 1.0).unwrap();
            ratios.push(cf.splitting_form / cf.frequency_form);
        }
        for r in &ratios {
            assert_relative_eq!(*r, 4.1632f64.powi(6), max_relative = 1e-12);
        }
    }

    #[test]
    fn regime_names() {
        assert_eq!("1d".parse::<Regime>().unwrap(), Regime::Exact1d);
        assert_eq!("3d".parse::<Regime>().unwrap(), Regime::SphereDominant);
        assert_eq!("macro".parse::<Regime>().unwrap(), Regime::Macroscopic);
        assert!("4d".parse::<Regime>().is_err());
    }

    #[test]
    fn report_text_layout() {
        let c = chain(5, 0);
        let p = Protocol::square(1.0, 1e-12).unwrap();
        let r = contrast_total_1d(&c, &p, 10.0).unwrap();
        let text = r.to_text();
        assert!(text.starts_with("# regime = exact-1d\n"));
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data[0], "k,omega,term");
        assert_eq!(data.len(), 1 + 4);
        let term: f64 = data[1].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(term, r.per_mode_terms[0].term);
    }
}
