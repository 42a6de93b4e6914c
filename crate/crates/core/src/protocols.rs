//! Pulsed acceleration profiles a(t) on the window t in [-T, T] (T is the
//! half-duration; maximum splitting sits at t = 0), their finite-window
//! Fourier spectra and closure diagnostics.
//!
//! The spectrum of a profile is the windowed transform evaluated at the end
//! of the loop,
//!
//! ```text
//! a(w) = int_{-T}^{T} a(t') exp(i w (t' - T)) dt'
//! ```
//!
//! For the even named profiles this is `exp(-i w T) * A(w)` with a real
//! amplitude `A(w) = int a(t) cos(w t) dt`, which is what the closed forms
//! below evaluate.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate, CompensatedSum, QuadOptions};

/// Half-width (relative) of the window around each removable singularity of
/// the bicosine spectrum inside which the stable expansion is used.
pub const SINGULAR_WINDOW: f64 = 1e-4;

/// Relative tolerance of the numerical spectrum.
pub const SPECTRUM_REL_TOL: f64 = 1e-10;

/// Above this value of w T the numerical transform is split into one panel
/// per oscillation.
pub const OSCILLATORY_THRESHOLD: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Square,
    Quartic,
    Bicosine,
    Custom,
}

impl ProtocolKind {
    pub const NAMED: [ProtocolKind; 3] = [
        ProtocolKind::Square,
        ProtocolKind::Quartic,
        ProtocolKind::Bicosine,
    ];

    /// Protocol number n in {0, 1, 2}; the spectrum envelope decays as w^-(n+1).
    pub fn index(self) -> Option<u32> {
        match self {
            ProtocolKind::Square => Some(0),
            ProtocolKind::Quartic => Some(1),
            ProtocolKind::Bicosine => Some(2),
            ProtocolKind::Custom => None,
        }
    }

    pub fn from_index(n: u32) -> Option<Self> {
        match n {
            0 => Some(ProtocolKind::Square),
            1 => Some(ProtocolKind::Quartic),
            2 => Some(ProtocolKind::Bicosine),
            _ => None,
        }
    }

    /// The constants A_n bounding |a_n(w)|^2 (w T)^(2n+2) / (a_max T)^2 in the
    /// closed-form estimate of the mode sum.
    pub fn envelope_constant(self) -> Option<f64> {
        match self {
            ProtocolKind::Square => Some(36.0),
            ProtocolKind::Quartic => Some((16.0 / PI).powi(2)),
            ProtocolKind::Bicosine => Some(9.0),
            ProtocolKind::Custom => None,
        }
    }

    /// Parseval constants as quoted in the literature (C_0 = 1, C_1 = 256/315,
    /// C_2 = 1/2) for int a^2 dt = C_n a_max^2 T. Direct integration of the
    /// square profile gives 2, not 1; see [`Protocol::energy_norm`].
    pub fn nominal_parseval_constant(self) -> Option<f64> {
        match self {
            ProtocolKind::Square => Some(1.0),
            ProtocolKind::Quartic => Some(256.0 / 315.0),
            ProtocolKind::Bicosine => Some(0.5),
            ProtocolKind::Custom => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Square => "square",
            ProtocolKind::Quartic => "quartic",
            ProtocolKind::Bicosine => "bicosine",
            ProtocolKind::Custom => "custom",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" | "0" => Ok(ProtocolKind::Square),
            "quartic" | "1" => Ok(ProtocolKind::Quartic),
            "bicosine" | "2" => Ok(ProtocolKind::Bicosine),
            "custom" => Ok(ProtocolKind::Custom),
            other => Err(Error::validation(format!("unknown protocol '{other}'"))),
        }
    }
}

/// Which limit to take at a jump of a discontinuous profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Which evaluation path produced a spectrum value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumPath {
    Analytic,
    Numeric,
}

/// The windowed transform a(w, 2T) at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSample {
    pub omega: f64,
    /// Velocity, m/s.
    pub value: Complex64,
}

impl SpectrumSample {
    pub fn magnitude(&self) -> f64 {
        self.value.norm()
    }
}

/// An acceleration protocol. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    kind: ProtocolKind,
    a_max: f64,
    t_half: f64,
    samples: Option<Arc<[(f64, f64)]>>,
}

impl Protocol {
    pub fn new(kind: ProtocolKind, a_max: f64, t_half: f64) -> Result<Self> {
        if kind == ProtocolKind::Custom {
            return Err(Error::validation("custom protocols are built from samples"));
        }
        check_window(a_max, t_half)?;
        Ok(Protocol {
            kind,
            a_max,
            t_half,
            samples: None,
        })
    }

    pub fn square(a_max: f64, t_half: f64) -> Result<Self> {
        Self::new(ProtocolKind::Square, a_max, t_half)
    }

    pub fn quartic(a_max: f64, t_half: f64) -> Result<Self> {
        Self::new(ProtocolKind::Quartic, a_max, t_half)
    }

    pub fn bicosine(a_max: f64, t_half: f64) -> Result<Self> {
        Self::new(ProtocolKind::Bicosine, a_max, t_half)
    }

    /// Piecewise-linear profile through `(t, a)` samples covering [-T, T].
    pub fn custom(t_half: f64, samples: Vec<(f64, f64)>) -> Result<Self> {
        check_window(1.0, t_half)?;
        if samples.len() < 2 {
            return Err(Error::validation(
                "a custom profile needs at least two samples",
            ));
        }
        let slack = 1e-9 * t_half;
        for (i, &(t, a)) in samples.iter().enumerate() {
            if !(t.is_finite() && a.is_finite()) {
                return Err(Error::validation(format!(
                    "sample {i} is not finite: ({t}, {a})"
                )));
            }
            if t.abs() > t_half + slack {
                return Err(Error::validation(format!(
                    "sample {i} at t = {t:e} s lies outside the window [-{t_half:e}, {t_half:e}]"
                )));
            }
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(Error::validation(format!(
                "sample times must be strictly increasing (samples {i} and {})",
                i + 1
            )));
        }
        let first = samples[0].0;
        let last = samples[samples.len() - 1].0;
        if first > -t_half + slack || last < t_half - slack {
            return Err(Error::validation(format!(
                "samples span [{first:e}, {last:e}] but must cover [-{t_half:e}, {t_half:e}]"
            )));
        }
        let a_max = samples.iter().map(|s| s.1.abs()).fold(0.0, f64::max);
        Ok(Protocol {
            kind: ProtocolKind::Custom,
            a_max,
            t_half,
            samples: Some(samples.into()),
        })
    }

    /// Reads a two-column `t a` text profile (SI units, `#` comments). The
    /// window half-width is taken from the sample span, which must be
    /// symmetric about t = 0.
    pub fn from_text(text: &str) -> Result<Self> {
        let samples = parse_samples(text)?;
        if samples.len() < 2 {
            return Err(Error::validation(
                "a custom profile needs at least two samples",
            ));
        }
        let first = samples[0].0;
        let last = samples[samples.len() - 1].0;
        let t_half = 0.5 * (last - first);
        if (first + last).abs() > 1e-9 * t_half {
            return Err(Error::validation(format!(
                "sample span [{first:e}, {last:e}] is not centred on t = 0"
            )));
        }
        Self::custom(t_half, samples)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// Same shape, different peak acceleration. Custom samples are rescaled.
    pub fn with_a_max(&self, a_max: f64) -> Result<Self> {
        match &self.samples {
            None => Self::new(self.kind, a_max, self.t_half),
            Some(s) => {
                if self.a_max == 0.0 {
                    return Err(Error::validation(
                        "cannot rescale an all-zero custom profile",
                    ));
                }
                let k = a_max / self.a_max;
                Self::custom(self.t_half, s.iter().map(|&(t, a)| (t, a * k)).collect())
            }
        }
    }

    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    pub fn a_max(&self) -> f64 {
        self.a_max
    }

    pub fn t_half(&self) -> f64 {
        self.t_half
    }

    pub fn samples(&self) -> Option<&[(f64, f64)]> {
        self.samples.as_deref()
    }

    /// Maximum spatial splitting scale a_max T^2.
    pub fn max_splitting(&self) -> f64 {
        self.a_max * self.t_half * self.t_half
    }

    /// Points where the profile or its derivative jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            ProtocolKind::Square => vec![-0.5 * self.t_half, 0.5 * self.t_half],
            ProtocolKind::Custom => self.samples().unwrap_or(&[]).iter().map(|s| s.0).collect(),
            _ => Vec::new(),
        }
    }

    /// Acceleration at time `t`, m/s^2.
    pub fn accel_at(&self, t: f64) -> Result<f64> {
        if !(t.abs() <= self.t_half * (1.0 + 1e-12)) {
            return Err(Error::domain(format!(
                "t = {t:e} s outside the window [-{0:e}, {0:e}]",
                self.t_half
            )));
        }
        Ok(self.eval(t))
    }

    /// Unchecked evaluation; values outside the window are zero.
    pub fn eval(&self, t: f64) -> f64 {
        let th = self.t_half;
        if t.abs() > th * (1.0 + 1e-12) {
            return 0.0;
        }
        let x = t / th;
        match self.kind {
            ProtocolKind::Square => {
                if t.abs() < 0.5 * th {
                    -self.a_max
                } else {
                    self.a_max
                }
            }
            ProtocolKind::Quartic => {
                let x2 = x * x;
                self.a_max * (-1.0 + 6.0 * x2 - 5.0 * x2 * x2)
            }
            ProtocolKind::Bicosine => -0.5 * self.a_max * ((PI * x).cos() + (2.0 * PI * x).cos()),
            ProtocolKind::Custom => interpolate(self.samples().expect("custom samples"), t),
        }
    }

    /// One-sided limit at `t`; differs from [`Protocol::eval`] only at the
    /// jumps of the square profile.
    pub fn eval_side(&self, t: f64, side: Side) -> f64 {
        if self.kind == ProtocolKind::Square
            && (t.abs() - 0.5 * self.t_half).abs() <= 1e-12 * self.t_half
        {
            // Left of -T/2 and right of +T/2 lie in the outer (positive) segment.
            let outer = (t < 0.0) == (side == Side::Left);
            return if outer { self.a_max } else { -self.a_max };
        }
        self.eval(t)
    }

    /// Closed-form spectrum for the named profiles.
    pub fn spectrum_analytic(&self, omega: f64) -> Result<SpectrumSample> {
        let amplitude = self.spectrum_amplitude(omega)?;
        let phase = Complex64::from_polar(1.0, -omega * self.t_half);
        Ok(SpectrumSample {
            omega,
            value: phase * amplitude,
        })
    }

    /// The real amplitude A(w) = int a(t) cos(w t) dt of a named profile.
    pub fn spectrum_amplitude(&self, omega: f64) -> Result<f64> {
        let y = (omega * self.t_half).abs();
        let scale = self.a_max * self.t_half;
        let reduced = match self.kind {
            ProtocolKind::Square => {
                if y < 0.5 {
                    even_moment_series(y, |k| {
                        2.0 * (1.0 - 0.25f64.powi(k as i32)) / (2 * k + 1) as f64
                    })
                } else {
                    (2.0 * y.sin() - 4.0 * (0.5 * y).sin()) / y
                }
            }
            ProtocolKind::Quartic => {
                if y < 3.0 {
                    even_moment_series(y, |k| {
                        let k = k as f64;
                        2.0 * (-1.0 / (2.0 * k + 1.0) + 6.0 / (2.0 * k + 3.0)
                            - 5.0 / (2.0 * k + 5.0))
                    })
                } else {
                    let y2 = y * y;
                    -16.0
                        * (y.cos() / y2 * (1.0 - 15.0 / y2)
                            - y.sin() / (y2 * y) * (6.0 - 15.0 / y2))
                }
            }
            ProtocolKind::Bicosine => bicosine_reduced(y),
            ProtocolKind::Custom => {
                return Err(Error::Unsupported(
                    "no closed-form spectrum for a custom profile; use spectrum_numeric".into(),
                ))
            }
        };
        Ok(scale * reduced)
    }

    /// Spectrum by adaptive quadrature of the windowed transform at the end
    /// of the loop.
    pub fn spectrum_numeric(&self, omega: f64) -> SpectrumSample {
        SpectrumSample {
            omega,
            value: self.windowed_transform(omega, self.t_half),
        }
    }

    /// `int_{-T}^{t_end} a(t') exp(i w (t' - t_end)) dt'`.
    pub fn windowed_transform(&self, omega: f64, t_end: f64) -> Complex64 {
        let t_end = t_end.min(self.t_half);
        let lo = -self.t_half;
        if t_end <= lo {
            return Complex64::new(0.0, 0.0);
        }
        // Each panel is integrated about its centre c with the phase
        // exp(i w (c - t_end)) factored out and formed in compensated
        // arithmetic; at large w T the rounding of the full phase would
        // otherwise swamp the small high-frequency spectrum.
        let width = t_end - lo;
        let mut edges = vec![lo];
        edges.extend(
            self.breakpoints()
                .into_iter()
                .filter(|&x| x > lo && x < t_end),
        );
        edges.push(t_end);
        let panel = if omega.abs() * self.t_half > OSCILLATORY_THRESHOLD {
            2.0 * PI / omega.abs()
        } else {
            width
        };
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        for w in edges.windows(2) {
            let n = ((w[1] - w[0]) / panel).ceil().max(1.0) as usize;
            for i in 0..n {
                let p = w[0] + (w[1] - w[0]) * i as f64 / n as f64;
                let q = if i + 1 == n {
                    w[1]
                } else {
                    w[0] + (w[1] - w[0]) * (i + 1) as f64 / n as f64
                };
                let c = 0.5 * (p + q);
                let h = 0.5 * (q - p);
                let opts = QuadOptions {
                    rel_tol: SPECTRUM_REL_TOL,
                    abs_tol: 1e-13 * self.a_max * (q - p),
                    ..Default::default()
                };
                let f = |u: f64| Complex64::from_polar(self.eval(c + u), omega * u);
                let inner = integrate(f, -h, h, &[], opts).value * unit_phase(omega, c, t_end);
                re.add(inner.re);
                im.add(inner.im);
            }
        }
        Complex64::new(re.total(), im.total())
    }

    /// Analytic spectrum when a closed form exists, numeric otherwise.
    pub fn spectrum(&self, omega: f64) -> (SpectrumSample, SpectrumPath) {
        match self.spectrum_analytic(omega) {
            Ok(s) => (s, SpectrumPath::Analytic),
            Err(_) => (self.spectrum_numeric(omega), SpectrumPath::Numeric),
        }
    }

    /// Net velocity change `int a dt` and displacement `int int a` over the
    /// window, both by quadrature. The displacement uses
    /// `int_{-T}^{T} v(t) dt = int_{-T}^{T} (T - t) a(t) dt`.
    pub fn closure_check(&self) -> (f64, f64) {
        let th = self.t_half;
        let opts = QuadOptions {
            rel_tol: 1e-14,
            abs_tol: 1e-16 * self.a_max * th,
            ..Default::default()
        };
        let bp = self.breakpoints();
        let dv = integrate(|t| self.eval(t), -th, th, &bp, opts).value;
        let opts_z = QuadOptions {
            abs_tol: opts.abs_tol * th,
            ..opts
        };
        let dz = integrate(|t| (th - t) * self.eval(t), -th, th, &bp, opts_z).value;
        (dv, dz)
    }

    /// `int_{-T}^{T} a(t)^2 dt` by quadrature, m^2/s^3.
    pub fn energy_norm(&self) -> f64 {
        let th = self.t_half;
        let opts = QuadOptions {
            rel_tol: 1e-14,
            ..Default::default()
        };
        integrate(|t| self.eval(t).powi(2), -th, th, &self.breakpoints(), opts).value
    }

    /// `energy_norm / (a_max^2 T)`: the Parseval constant in the half-duration
    /// normalisation.
    pub fn parseval_constant(&self) -> f64 {
        self.energy_norm() / (self.a_max * self.a_max * self.t_half)
    }
}

fn check_window(a_max: f64, t_half: f64) -> Result<()> {
    if !(a_max.is_finite() && a_max >= 0.0) {
        return Err(Error::domain(format!("a_max must be >= 0, got {a_max}")));
    }
    if !(t_half.is_finite() && t_half > 0.0) {
        return Err(Error::domain(format!(
            "t_half must be positive, got {t_half}"
        )));
    }
    Ok(())
}

/// `sum_k (-1)^k y^(2k) / (2k)! * m_k` with m_k the even moments of the
/// reduced profile on [-1, 1].
fn even_moment_series(y: f64, moment: impl Fn(u32) -> f64) -> f64 {
    let y2 = y * y;
    let mut power = 1.0; // (-1)^k y^(2k) / (2k)!
    let mut total = 0.0;
    for k in 0..40u32 {
        let term = power * moment(k);
        total += term;
        if k > 2 && term.abs() <= 1e-18 * total.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let n = 2.0 * k as f64;
        power *= -y2 / ((n + 1.0) * (n + 2.0));
    }
    total
}

/// Reduced bicosine amplitude A / (a_max T) at y = w T >= 0.
fn bicosine_reduced(y: f64) -> f64 {
    let pi2 = PI * PI;
    for k in [1.0, 2.0] {
        if (y - k * PI).abs() <= SINGULAR_WINDOW * k * PI {
            return bicosine_partial_fractions(y);
        }
    }
    let y2 = y * y;
    -3.0 * pi2 * y * y.sin() / ((y2 - pi2) * (y2 - 4.0 * pi2))
}

/// The same amplitude written as a sum of shifted sinc functions,
///
/// ```text
/// int_{-1}^{1} cos(k pi x) cos(y x) dx = sinc(y - k pi) + sinc(y + k pi),
/// ```
///
/// which has no removable singularities.
fn bicosine_partial_fractions(y: f64) -> f64 {
    let part = |k: f64| sinc(y - k * PI) + sinc(y + k * PI);
    -0.5 * (part(1.0) + part(2.0))
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
    } else {
        x.sin() / x
    }
}

fn interpolate(samples: &[(f64, f64)], t: f64) -> f64 {
    let i = samples.partition_point(|s| s.0 <= t);
    if i == 0 {
        return samples[0].1;
    }
    if i == samples.len() {
        return samples[samples.len() - 1].1;
    }
    let (t0, a0) = samples[i - 1];
    let (t1, a1) = samples[i];
    a0 + (a1 - a0) * (t - t0) / (t1 - t0)
}

/// Parses two whitespace- or comma-separated columns; `#` starts a comment.
pub fn parse_samples(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        if cols.len() != 2 {
            return Err(Error::validation(format!(
                "line {}: expected two columns (t, a), got {}",
                lineno + 1,
                cols.len()
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| {
                Error::validation(format!("line {}: cannot parse '{s}': {e}", lineno + 1))
            })
        };
        out.push((parse(cols[0])?, parse(cols[1])?));
    }
    Ok(out)
}

/// `exp(i w (x - y))` with the phase carried to about twice working
/// precision before the final rounding.
fn unit_phase(w: f64, x: f64, y: f64) -> Complex64 {
    // two-sum for x - y, then the exact product residual by fma
    let d = x - y;
    let z = d - x;
    let d_err = (x - (d - z)) + (-y - z);
    let hi = w * d;
    let lo = w.mul_add(d, -hi) + w * d_err;
    Complex64::from_polar(1.0, hi) * Complex64::new(1.0, lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const A: f64 = 3.0;
    const T: f64 = 2.0e-5;

    fn named() -> Vec<Protocol> {
        ProtocolKind::NAMED
            .iter()
            .map(|&k| Protocol::new(k, A, T).unwrap())
            .collect()
    }

    #[test]
    fn profile_values_at_centre_and_edges() {
        let q = Protocol::quartic(A, T).unwrap();
        assert_eq!(q.accel_at(0.0).unwrap(), -A);
        assert!(q.accel_at(T).unwrap().abs() < 1e-15);
        assert!(q.accel_at(-T).unwrap().abs() < 1e-15);
        let b = Protocol::bicosine(A, T).unwrap();
        assert_eq!(b.accel_at(0.0).unwrap(), -A);
        let s = Protocol::square(A, T).unwrap();
        assert_eq!(s.accel_at(0.0).unwrap(), -A);
        assert_eq!(s.accel_at(0.75 * T).unwrap(), A);
        assert_eq!(s.accel_at(-T).unwrap(), A);
        assert!(s.accel_at(1.01 * T).is_err());
    }

    #[test]
    fn square_one_sided_limits() {
        let s = Protocol::square(A, T).unwrap();
        assert_eq!(s.eval_side(-0.5 * T, Side::Left), A);
        assert_eq!(s.eval_side(-0.5 * T, Side::Right), -A);
        assert_eq!(s.eval_side(0.5 * T, Side::Left), -A);
        assert_eq!(s.eval_side(0.5 * T, Side::Right), A);
    }

    #[test]
    fn square_layout_reproduces_closed_form() {
        // Direct quadrature of the chosen segment layout against the closed form.
        let s = Protocol::square(A, T).unwrap();
        for y in [0.3, 1.0, 2.5, 7.0, 31.0] {
            let w = y / T;
            let direct = integrate(
                |t| s.eval(t) * (w * t).cos(),
                -T,
                T,
                &s.breakpoints(),
                QuadOptions::default(),
            )
            .value;
            let closed = A / w * (2.0 * y.sin() - 4.0 * (0.5 * y).sin());
            assert_relative_eq!(direct, closed, epsilon = 1e-12 * A * T);
        }
    }

    #[test]
    fn zero_frequency_is_zero_for_closed_loops() {
        for p in named() {
            assert!(
                p.spectrum_analytic(0.0).unwrap().magnitude() < 1e-14 * A * T,
                "{}",
                p.kind()
            );
            assert!(
                p.spectrum_numeric(0.0).magnitude() < 1e-12 * A * T,
                "{}",
                p.kind()
            );
        }
    }

    #[test]
    fn bicosine_singular_points() {
        let b = Protocol::bicosine(A, T).unwrap();
        for k in [1.0, 2.0] {
            let w = k * PI / T;
            let m = b.spectrum_analytic(w).unwrap().magnitude();
            assert_relative_eq!(m, 0.5 * A * T, max_relative = 1e-12);
            let n = b.spectrum_numeric(w).magnitude();
            assert_relative_eq!(n, 0.5 * A * T, max_relative = 1e-9);
            // Continuity across the switch into the expansion window.
            for eps in [0.9e-4, 1.1e-4] {
                let a = b.spectrum_amplitude(w * (1.0 + eps)).unwrap();
                let q = b.spectrum_numeric(w * (1.0 + eps)).value.norm();
                assert_relative_eq!(a.abs(), q, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn square_at_pi() {
        let s = Protocol::square(A, T).unwrap();
        let m = s.spectrum_analytic(PI / T).unwrap().magnitude();
        assert_relative_eq!(m, 4.0 * A * T / PI, max_relative = 1e-14);
    }

    #[test]
    fn quartic_analytic_matches_quadrature() {
        let q = Protocol::quartic(A, T).unwrap();
        let w = 3.0 / T;
        let a = q.spectrum_analytic(w).unwrap().value;
        let n = q.spectrum_numeric(w).value;
        assert!((a - n).norm() <= 1e-9 * a.norm(), "{a} vs {n}");
    }

    #[test]
    fn series_and_closed_form_agree_at_switch() {
        let s = Protocol::square(A, T).unwrap();
        let q = Protocol::quartic(A, T).unwrap();
        for (p, y) in [(&s, 0.5), (&q, 3.0)] {
            let below = p.spectrum_amplitude((y - 1e-9) / T).unwrap();
            let above = p.spectrum_amplitude((y + 1e-9) / T).unwrap();
            assert_relative_eq!(below, above, max_relative = 1e-8);
        }
    }

    #[test]
    fn custom_rejects_bad_samples() {
        assert!(Protocol::custom(T, vec![(-T, 0.0), (-T, 1.0), (T, 0.0)]).is_err());
        assert!(Protocol::custom(T, vec![(-T, 0.0), (0.0, 1.0), (2.0 * T, 0.0)]).is_err());
        assert!(Protocol::custom(T, vec![(-0.5 * T, 0.0), (T, 0.0)]).is_err());
        assert!(Protocol::custom(T, vec![(-T, 0.0)]).is_err());
        assert!(Protocol::custom(T, vec![(-T, 0.0), (T, 1.0)]).is_ok());
    }

    #[test]
    fn custom_analytic_is_unsupported() {
        let c = Protocol::custom(T, vec![(-T, 1.0), (T, 1.0)]).unwrap();
        assert!(matches!(
            c.spectrum_analytic(1.0),
            Err(Error::Unsupported(_))
        ));
        let (_, path) = c.spectrum(1.0);
        assert_eq!(path, SpectrumPath::Numeric);
    }

    #[test]
    fn constant_custom_profile_kinematics() {
        let c = Protocol::custom(T, vec![(-T, A), (T, A)]).unwrap();
        let (dv, dz) = c.closure_check();
        assert_relative_eq!(dv, 2.0 * A * T, max_relative = 1e-14);
        assert_relative_eq!(dz, 0.5 * A * (2.0 * T).powi(2), max_relative = 1e-14);
    }

    #[test]
    fn sampled_quartic_matches_analytic() {
        let q = Protocol::quartic(A, T).unwrap();
        let samples: Vec<(f64, f64)> = (0..1000)
            .map(|i| {
                let t = -T + 2.0 * T * i as f64 / 999.0;
                (t, q.eval(t))
            })
            .collect();
        let c = Protocol::custom(T, samples).unwrap();
        for y in [0.5, 3.0, 10.0, 40.0] {
            let w = y / T;
            let a = q.spectrum_analytic(w).unwrap().value;
            let n = c.spectrum_numeric(w).value;
            // limited by linear interpolation between samples, ~h^2 a''
            assert!((a - n).norm() <= 2e-5 * A * T, "y = {y}: {a} vs {n}");
        }
    }

    #[test]
    fn parse_two_columns() {
        let text = "# t a\n-1e-5 0.0\n0, 2.5  # peak\n\n1e-5 0.0\n";
        let p = Protocol::from_text(text).unwrap();
        assert_eq!(p.kind(), ProtocolKind::Custom);
        assert_relative_eq!(p.t_half(), 1e-5);
        assert_eq!(p.a_max(), 2.5);
        assert!(parse_samples("1 2 3").is_err());
        assert!(parse_samples("1 x").is_err());
        assert!(Protocol::from_text("0 1\n1 1\n").is_err());
    }

    #[test]
    fn rescaling_keeps_shape() {
        let q = Protocol::quartic(A, T)
            .unwrap()
            .with_a_max(2.0 * A)
            .unwrap();
        assert_eq!(q.a_max(), 2.0 * A);
        let c = Protocol::custom(T, vec![(-T, 1.0), (T, -2.0)])
            .unwrap()
            .with_a_max(4.0)
            .unwrap();
        assert_eq!(c.eval(T), -4.0);
    }
}
