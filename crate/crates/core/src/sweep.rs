//! Parameter sweeps over one variable with all three named protocols
//! evaluated per point, and power-law fits of the result.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::SpinSite;
use crate::contrast::{fmt_f64, Regime};
use crate::error::{Error, Result};
use crate::numerics::{fit_power_law, grid, PowerLawFit};
use crate::protocols::ProtocolKind;
use crate::scenario::Scenario;
use crate::units::{HBAR, K_B};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Object size L, m.
    Length,
    AMax,
    THalf,
    TPh,
    /// Chain spin site, or the sphere's spin radius fraction in 3D.
    SpinSite,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Length => "length",
            SweepVariable::AMax => "a_max",
            SweepVariable::THalf => "t_half",
            SweepVariable::TPh => "t_ph",
            SweepVariable::SpinSite => "spin_site",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintMode {
    /// a_max and T_half as configured.
    FixedAcceleration,
    /// Per point `dZ_max = fraction L`, `T_half = dZ_max / dv_max`,
    /// `a_max = dZ_max / T_half^2`.
    FixedFractionalSplitting,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub log: bool,
    pub regime: Regime,
    pub constraint: ConstraintMode,
    pub splitting_fraction: f64,
    pub velocity_splitting: f64,
    pub gradient_cap: f64,
    pub t_half_cap: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.min < self.max) {
            return Err(Error::validation(format!(
                "sweep needs min < max, got {} and {}",
                self.min, self.max
            )));
        }
        if self.count < 2 {
            return Err(Error::validation(format!(
                "sweep needs at least 2 points, got {}",
                self.count
            )));
        }
        if self.log && !(self.min > 0.0) {
            return Err(Error::validation("a logarithmic sweep needs min > 0"));
        }
        if self.constraint == ConstraintMode::FixedFractionalSplitting {
            if self.variable != SweepVariable::Length {
                return Err(Error::validation(
                    "fixed-fractional-splitting sweeps vary the length",
                ));
            }
            if !(self.splitting_fraction > 0.0 && self.velocity_splitting > 0.0) {
                return Err(Error::validation(
                    "splitting fraction and velocity splitting must be positive",
                ));
            }
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        grid(self.min, self.max, self.count, self.log)
    }
}

/// Per-point derived parameters and results; protocol-indexed arrays follow
/// square, quartic, bicosine.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    /// Effective size (chain length N a in 1D).
    pub size: f64,
    pub mass: f64,
    pub omega1: f64,
    pub a_max: f64,
    pub t_half: f64,
    /// Gradient needed for a_max, T/m.
    pub gradient: f64,
    pub minus_log_c: [f64; 3],
    pub estimate: [f64; 3],
    /// hbar omega1 < k_B T_ph / 3.
    pub classical: bool,
    pub flags: Vec<&'static str>,
}

impl SweepRow {
    pub fn flagged(&self) -> bool {
        !self.flags.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
    /// Fits of log(-log C) against log(size) per protocol, over classical,
    /// unflagged rows. Only for length sweeps.
    pub slopes: [Option<PowerLawFit>; 3],
    pub estimate_slopes: [Option<PowerLawFit>; 3],
}

pub fn run_sweep(base: &Scenario, spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let rows = spec
        .points()
        .into_par_iter()
        .map(|x| evaluate_point(base, spec, x))
        .collect::<Result<Vec<_>>>()?;
    let (slopes, estimate_slopes) = if spec.variable == SweepVariable::Length {
        let fit = |pick: &dyn Fn(&SweepRow) -> f64| {
            let used: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.classical && !r.flagged())
                .collect();
            let xs: Vec<f64> = used.iter().map(|r| r.size).collect();
            let ys: Vec<f64> = used.iter().map(|r| pick(r)).collect();
            fit_power_law(&xs, &ys)
        };
        (
            [0, 1, 2].map(|i| fit(&|r: &SweepRow| r.minus_log_c[i])),
            [0, 1, 2].map(|i| fit(&|r: &SweepRow| r.estimate[i])),
        )
    } else {
        ([None; 3], [None; 3])
    };
    Ok(SweepResult {
        spec: *spec,
        rows,
        slopes,
        estimate_slopes,
    })
}

/// The scenario at sweep coordinate `x`, before evaluation.
pub fn point_scenario(base: &Scenario, spec: &SweepSpec, x: f64) -> Result<Scenario> {
    let mut s = base.clone();
    match spec.variable {
        SweepVariable::Length => {
            s.length = x;
            s.n_sites = None;
        }
        SweepVariable::AMax => s.a_max = x,
        SweepVariable::THalf => s.t_half = x,
        SweepVariable::TPh => s.t_ph = x,
        SweepVariable::SpinSite => match spec.regime {
            Regime::SphereDominant => s.spin_fraction = x,
            _ => s.spin = SpinSite::Index(x.round() as usize),
        },
    }
    if spec.constraint == ConstraintMode::FixedFractionalSplitting {
        let size = s.size(spec.regime)?;
        let dz = spec.splitting_fraction * size;
        s.t_half = dz / spec.velocity_splitting;
        s.a_max = dz / (s.t_half * s.t_half);
    }
    Ok(s)
}

fn evaluate_point(base: &Scenario, spec: &SweepSpec, x: f64) -> Result<SweepRow> {
    let s = point_scenario(base, spec, x)?;
    let regime = spec.regime;
    let omega1 = s.omega1(regime)?;
    let gradient = s.gradient_required(regime)?;
    let mut minus_log_c = [0.0; 3];
    let mut estimate = [f64::NAN; 3];
    for (i, kind) in ProtocolKind::NAMED.into_iter().enumerate() {
        let mut p = s.clone();
        p.protocol = kind;
        p.custom_samples = None;
        let report = p.evaluate(regime)?;
        minus_log_c[i] = report.minus_log_c;
        estimate[i] = report.estimate_fs.unwrap_or(f64::NAN);
    }
    let mut flags = Vec::new();
    if spec.constraint == ConstraintMode::FixedFractionalSplitting {
        if gradient > spec.gradient_cap {
            flags.push("gradient-cap");
        }
        if s.t_half > spec.t_half_cap {
            flags.push("t-half-cap");
        }
    }
    Ok(SweepRow {
        x,
        size: s.size(regime)?,
        mass: s.mass(regime)?,
        omega1,
        a_max: s.a_max,
        t_half: s.t_half,
        gradient,
        minus_log_c,
        estimate,
        classical: HBAR * omega1 < K_B * s.t_ph / 3.0,
        flags,
    })
}

impl SweepResult {
    /// Slope lines, a column header and one row per point.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let names = ProtocolKind::NAMED.map(|k| k.name());
        for (i, name) in names.iter().enumerate() {
            let _ = writeln!(out, "# slope.{name} = {}", fit_text(&self.slopes[i]));
        }
        for (i, name) in names.iter().enumerate() {
            let _ = writeln!(
                out,
                "# estimate_slope.{name} = {}",
                fit_text(&self.estimate_slopes[i])
            );
        }
        let _ = write!(
            out,
            "{},size,mass,omega1,a_max,t_half,gradient",
            self.spec.variable.name()
        );
        for name in names {
            let _ = write!(out, ",minus_log_c_{name}");
        }
        for name in names {
            let _ = write!(out, ",estimate_{name}");
        }
        out.push_str(",classical,flags\n");
        for r in &self.rows {
            let fields = [r.x, r.size, r.mass, r.omega1, r.a_max, r.t_half, r.gradient];
            let mut line: Vec<String> = fields.iter().map(|&v| fmt_f64(v)).collect();
            line.extend(r.minus_log_c.iter().map(|&v| fmt_f64(v)));
            line.extend(r.estimate.iter().map(|&v| fmt_f64(v)));
            line.push(r.classical.to_string());
            line.push(if r.flags.is_empty() {
                "-".to_string()
            } else {
                r.flags.join("|")
            });
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

fn fit_text(fit: &Option<PowerLawFit>) -> String {
    match fit {
        Some(f) => format!("{:.6} ({} points)", f.slope, f.points),
        None => "none".to_string(),
    }
}
