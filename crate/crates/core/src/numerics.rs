//! Small numerical kernels shared by the physics modules: adaptive
//! Gauss-Kronrod quadrature (real and complex), compensated summation, a
//! bracketing root finder and an ordinary least-squares power-law fit.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values a quadrature rule can accumulate.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum bisection depth below each initial panel.
    pub max_depth: u32,
    /// If set, the interval is pre-split into panels no wider than this
    /// (one panel per oscillation for oscillatory integrands).
    pub max_panel: Option<f64>,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 0.0,
            rel_tol: 1e-10,
            max_depth: 40,
            max_panel: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Quad<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

/// Kronrod estimate, error estimate and roundoff floor `50 eps int |f|`.
fn kronrod<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs = fc.magnitude() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let (fl, fr) = (f(center - dx), f(center + dx));
        let pair = fl + fr;
        kronrod = kronrod + pair * WGK[j];
        abs += (fl.magnitude() + fr.magnitude()) * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let k = kronrod * half;
    let g = gauss * half;
    (
        k,
        (k - g).magnitude(),
        50.0 * f64::EPSILON * abs * half.abs(),
    )
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// `breakpoints` inside the interval (discontinuities, kinks) become panel
/// edges. The result is accepted once the summed local error estimates drop
/// below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<T, F>(f: F, a: f64, b: f64, breakpoints: &[f64], opts: QuadOptions) -> Quad<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if a == b {
        return Quad {
            value: T::zero(),
            error: 0.0,
            evaluations: 0,
        };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let mut edges = vec![lo];
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > lo && x < hi)
        .collect();
    inner.sort_by(|x, y| x.total_cmp(y));
    inner.dedup();
    edges.extend(inner);
    edges.push(hi);

    let mut panels = Vec::new();
    for w in edges.windows(2) {
        let (p, q) = (w[0], w[1]);
        let n = match opts.max_panel {
            Some(width) if width > 0.0 => ((q - p) / width).ceil().max(1.0) as usize,
            _ => 1,
        };
        for i in 0..n {
            let x0 = p + (q - p) * i as f64 / n as f64;
            let x1 = if i + 1 == n {
                q
            } else {
                p + (q - p) * (i + 1) as f64 / n as f64
            };
            panels.push((x0, x1));
        }
    }

    // A first pass gives the magnitude against which the relative tolerance
    // is measured, then each panel is refined against its share of it.
    let mut evaluations = 0usize;
    let first: Vec<(T, f64, f64)> = panels
        .iter()
        .map(|&(p, q)| {
            evaluations += 15;
            kronrod(&f, p, q)
        })
        .collect();
    let rough = first
        .iter()
        .fold(T::zero(), |acc, (v, _, _)| acc + *v)
        .magnitude();
    let rough_abs: f64 = first.iter().map(|(v, _, _)| v.magnitude()).sum();
    let target = opts.abs_tol.max(opts.rel_tol * rough.max(1e-3 * rough_abs));
    let total_width = hi - lo;

    let mut value = T::zero();
    let mut error = 0.0;
    for (&(p, q), &(est, err, floor)) in panels.iter().zip(&first) {
        let local_tol = target * (q - p) / total_width;
        let (v, e) = refine(
            &f,
            p,
            q,
            (est, err, floor),
            local_tol,
            opts.max_depth,
            &mut evaluations,
        );
        value = value + v;
        error += e;
    }
    Quad {
        value: value * sign,
        error,
        evaluations,
    }
}

fn refine<T: QuadValue, F: Fn(f64) -> T>(
    f: &F,
    a: f64,
    b: f64,
    (estimate, err, floor): (T, f64, f64),
    tol: f64,
    depth: u32,
    evaluations: &mut usize,
) -> (T, f64) {
    // below the roundoff floor bisection cannot improve the estimate
    if err <= tol || err <= floor || depth == 0 || !(err.is_finite()) {
        return (estimate, err);
    }
    let mid = 0.5 * (a + b);
    if mid <= a || mid >= b {
        return (estimate, err);
    }
    let left = kronrod(f, a, mid);
    let right = kronrod(f, mid, b);
    *evaluations += 30;
    let (lv, le) = refine(f, a, mid, left, 0.5 * tol, depth - 1, evaluations);
    let (rv, re) = refine(f, mid, b, right, 0.5 * tol, depth - 1, evaluations);
    (lv + rv, le + re)
}

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().total()
}

/// Brent's method on a bracket `[a, b]` with `f(a)` and `f(b)` of opposite sign.
pub fn brent<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::RootFinder(format!(
            "no sign change on [{a}, {b}]: f = ({fa:e}, {fb:e})"
        )));
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut bisected = true;
    let mut d = 0.0;
    for _ in 0..max_iter {
        let tol = rel_tol * b.abs().max(f64::MIN_POSITIVE);
        if fb == 0.0 || (b - a).abs() <= tol {
            return Ok(b);
        }
        let mut s = if fa != fc && fb != fc {
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let out_of_range = !((s > lo.min(b)) && (s < lo.max(b)));
        let slow = if bisected {
            (s - b).abs() >= (b - c).abs() / 2.0 || (b - c).abs() < tol
        } else {
            (s - b).abs() >= (c - d).abs() / 2.0 || (c - d).abs() < tol
        };
        if out_of_range || slow {
            s = 0.5 * (a + b);
            bisected = true;
        } else {
            bisected = false;
        }
        let fs = f(s);
        d = c;
        c = b;
        fc = fb;
        if fa.signum() != fs.signum() {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    Err(Error::RootFinder(format!(
        "no convergence after {max_iter} iterations; bracket [{a}, {b}], f = ({fa:e}, {fb:e})"
    )))
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

impl PowerLawFit {
    pub fn predict(&self, x: f64) -> f64 {
        (self.intercept + self.slope * x.ln()).exp()
    }
}

/// Fits `y = exp(intercept) * x^slope`; points with non-positive coordinates
/// are skipped. Needs at least two usable points.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Option<PowerLawFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(PowerLawFit {
        slope,
        intercept: my - slope * mx,
        points: pts.len(),
    })
}

/// `count` points from `min` to `max`, geometric or arithmetic.
pub fn grid(min: f64, max: f64, count: usize, log: bool) -> Vec<f64> {
    if count == 1 {
        return vec![min];
    }
    (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            if i == 0 {
                min
            } else if i + 1 == count {
                max
            } else if log {
                (min.ln() + t * (max.ln() - min.ln())).exp()
            } else {
                min + t * (max - min)
            }
        })
        .collect()
}
