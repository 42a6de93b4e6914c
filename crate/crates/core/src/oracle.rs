//! Direct velocity-Verlet integration of the chain, used to check the
//! analytic centre-of-mass and mode solutions and the contrast pipeline.
//!
//! Each spin path feels a force `sign * (M/2) a(t)` on the impurity site, so
//! the centre of mass accelerates at `sign * a(t)/2` and the difference
//! between the two paths carries the full `a(t)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::chain::{ChainSpec, CosineBasis};
use crate::contrast::{mode_displacement, PhaseSpaceShift};
use crate::error::{Error, Result};
use crate::numerics::{self, QuadOptions};
use crate::protocols::{Protocol, Side};
use crate::units::K_B;

/// `omega_max * dt` used when no step is requested. Keeps the Verlet phase
/// error `(w dt)^2 w 2T / 24` of the fastest mode near 1e-8 for oracle-sized
/// windows.
pub const DEFAULT_PHASE_STEP: f64 = 1e-4;

/// Largest oracle chain accepted by [`OracleSuite`].
pub const MAX_ORACLE_SITES: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    /// Deviations from equilibrium, m.
    pub z: Vec<f64>,
    /// m/s.
    pub v: Vec<f64>,
    pub t: f64,
}

impl ChainState {
    pub fn at_rest(n: usize, t: f64) -> Self {
        ChainState {
            z: vec![0.0; n],
            v: vec![0.0; n],
            t,
        }
    }

    /// Classical thermal state: each mode k >= 1 drawn with
    /// `<u^2> = 2 k_B T / (M w^2)` and `<udot^2> = 2 k_B T / M`; the centre of
    /// mass starts at rest.
    pub fn thermal(chain: &ChainSpec, t_ph: f64, seed: u64, t: f64) -> Result<Self> {
        if !(t_ph >= 0.0) {
            return Err(Error::domain(format!(
                "temperature must be >= 0 K, got {t_ph}"
            )));
        }
        let n = chain.n_sites;
        let mass = chain.total_mass();
        let modes = chain.mode_table();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        let mut u = vec![0.0; n];
        let mut udot = vec![0.0; n];
        let sigma_v = (2.0 * K_B * t_ph / mass).sqrt();
        for k in 1..n {
            u[k] = unit.sample(&mut rng) * sigma_v / modes.omega[k];
            udot[k] = unit.sample(&mut rng) * sigma_v;
        }
        let basis = CosineBasis::new(n);
        Ok(ChainState {
            z: basis.reconstruct(&u),
            v: basis.reconstruct(&udot),
            t,
        })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.z.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: self.z.len(),
            });
        }
        if self.v.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: self.v.len(),
            });
        }
        if !self.z.iter().chain(&self.v).all(|x| x.is_finite()) {
            return Err(Error::validation("chain state has non-finite entries"));
        }
        Ok(())
    }

    /// Kinetic plus spring energy, J.
    pub fn energy(&self, chain: &ChainSpec) -> f64 {
        let m = chain.site_mass;
        let k = chain.spring_constant();
        let kinetic: f64 = self.v.iter().map(|v| 0.5 * m * v * v).sum();
        let springs: f64 = self
            .z
            .windows(2)
            .map(|w| 0.5 * k * (w[1] - w[0]).powi(2))
            .sum();
        kinetic + springs
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<ChainState>,
    pub spin_sign: f64,
    pub protocol: Protocol,
    pub dt: f64,
    pub steps: usize,
    pub seed: Option<u64>,
    /// Work done by the impurity force, J.
    pub work: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
}

impl Trajectory {
    pub fn last(&self) -> &ChainState {
        self.samples.last().expect("trajectory has samples")
    }

    /// Columnar text `t z_0 .. z_{N-1}` with a metadata header.
    pub fn to_columns(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# protocol = {}", self.protocol.kind());
        let _ = writeln!(out, "# a_max = {:.16e}", self.protocol.a_max());
        let _ = writeln!(out, "# t_half = {:.16e}", self.protocol.t_half());
        let _ = writeln!(out, "# spin_sign = {}", self.spin_sign);
        let _ = writeln!(out, "# dt = {:.16e}", self.dt);
        match self.seed {
            Some(s) => {
                let _ = writeln!(out, "# seed = {s}");
            }
            None => {
                let _ = writeln!(out, "# seed = none");
            }
        }
        for s in &self.samples {
            let _ = write!(out, "{:.16e}", s.t);
            for z in &s.z {
                let _ = write!(out, " {z:.16e}");
            }
            out.push('\n');
        }
        out
    }
}

/// `2 pi / (100 omega_max)`.
pub fn stability_bound(chain: &ChainSpec) -> f64 {
    2.0 * PI / (100.0 * chain.omega_max())
}

/// Step with `omega_max dt = DEFAULT_PHASE_STEP`.
pub fn recommended_dt(chain: &ChainSpec) -> f64 {
    DEFAULT_PHASE_STEP / chain.omega_max()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationOptions {
    /// Requested step; the actual step divides the window into a multiple of
    /// four equal steps and is never larger.
    pub dt: f64,
    /// Record every `stride` steps (the final state is always recorded).
    pub stride: usize,
    pub seed: Option<u64>,
}

/// Number of steps and actual step for a requested `dt`. The step count is a
/// multiple of 4 so that the square profile's jumps at +-T/2 fall on the grid.
pub fn step_grid(chain: &ChainSpec, protocol: &Protocol, dt: f64) -> Result<(usize, f64)> {
    let bound = stability_bound(chain);
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::domain(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if dt > bound {
        return Err(Error::TimeStep { dt, bound });
    }
    let window = 2.0 * protocol.t_half();
    let steps = ((window / dt).ceil() as usize).div_ceil(4).max(1) * 4;
    Ok((steps, window / steps as f64))
}

/// Velocity-Verlet over `[-T, T]` from `initial`.
pub fn integrate_from(
    chain: &ChainSpec,
    protocol: &Protocol,
    spin_sign: f64,
    initial: &ChainState,
    options: IntegrationOptions,
) -> Result<Trajectory> {
    chain.validate()?;
    initial.validate(chain.n_sites)?;
    if spin_sign != 1.0 && spin_sign != -1.0 {
        return Err(Error::domain(format!(
            "spin sign must be +1 or -1, got {spin_sign}"
        )));
    }
    let (steps, dt) = step_grid(chain, protocol, options.dt)?;
    let stride = options.stride.max(1);
    let n = chain.n_sites;
    let s = chain.spin_site;
    let th = protocol.t_half();
    let stiffness = chain.spring_constant() / chain.site_mass;
    // site acceleration from the force sign (M/2) a on one site of mass m
    let drive = spin_sign * 0.5 * n as f64;
    let force_scale = spin_sign * 0.5 * chain.total_mass();

    let mut z = initial.z.clone();
    let mut v = initial.v.clone();
    let mut acc = vec![0.0; n];
    spring_accel(&z, stiffness, &mut acc);

    let time = |i: usize| -th + 2.0 * th * i as f64 / steps as f64;
    let mut samples = vec![ChainState {
        z: z.clone(),
        v: v.clone(),
        t: -th,
    }];
    let energy_initial = initial.energy(chain);
    let mut work = 0.0;

    for i in 0..steps {
        let t0 = time(i);
        let t1 = if i + 1 == steps { th } else { time(i + 1) };
        let a0 = protocol.eval_side(t0, Side::Right);
        let a1 = protocol.eval_side(t1, Side::Left);
        let p0 = force_scale * a0 * v[s];

        let h = 0.5 * dt;
        for j in 0..n {
            v[j] += h * acc[j];
        }
        v[s] += h * drive * a0;
        for j in 0..n {
            z[j] += dt * v[j];
        }
        spring_accel(&z, stiffness, &mut acc);
        for j in 0..n {
            v[j] += h * acc[j];
        }
        v[s] += h * drive * a1;

        work += h * (p0 + force_scale * a1 * v[s]);
        if (i + 1) % stride == 0 || i + 1 == steps {
            samples.push(ChainState {
                z: z.clone(),
                v: v.clone(),
                t: t1,
            });
        }
    }
    let energy_final = samples.last().unwrap().energy(chain);
    Ok(Trajectory {
        samples,
        spin_sign,
        protocol: protocol.clone(),
        dt,
        steps,
        seed: options.seed,
        work,
        energy_initial,
        energy_final,
    })
}

/// Integrates from a seeded thermal state at `t_ph` (at rest when `t_ph = 0`).
pub fn integrate(
    chain: &ChainSpec,
    protocol: &Protocol,
    spin_sign: f64,
    dt: f64,
    t_ph: f64,
    seed: u64,
) -> Result<Trajectory> {
    let initial = ChainState::thermal(chain, t_ph, seed, -protocol.t_half())?;
    integrate_from(
        chain,
        protocol,
        spin_sign,
        &initial,
        IntegrationOptions {
            dt,
            stride: usize::MAX,
            seed: Some(seed),
        },
    )
}

fn spring_accel(z: &[f64], stiffness: f64, acc: &mut [f64]) {
    let n = z.len();
    if n == 1 {
        acc[0] = 0.0;
        return;
    }
    acc[0] = stiffness * (z[1] - z[0]);
    for j in 1..n - 1 {
        acc[j] = stiffness * (z[j + 1] - 2.0 * z[j] + z[j - 1]);
    }
    acc[n - 1] = stiffness * (z[n - 2] - z[n - 1]);
}

/// Final up-minus-down mode shifts `(du_q, dudot_q)` for k = 1 .. N-1, both
/// paths started from `initial`.
pub fn differential_displacement_from(
    chain: &ChainSpec,
    protocol: &Protocol,
    dt: f64,
    initial: &ChainState,
) -> Result<Vec<PhaseSpaceShift>> {
    let opts = IntegrationOptions {
        dt,
        stride: usize::MAX,
        seed: None,
    };
    let (up, down) = rayon::join(
        || integrate_from(chain, protocol, 1.0, initial, opts),
        || integrate_from(chain, protocol, -1.0, initial, opts),
    );
    let (up, down) = (up?, down?);
    let basis = CosineBasis::new(chain.n_sites);
    let dz: Vec<f64> = up
        .last()
        .z
        .iter()
        .zip(&down.last().z)
        .map(|(a, b)| a - b)
        .collect();
    let dv: Vec<f64> = up
        .last()
        .v
        .iter()
        .zip(&down.last().v)
        .map(|(a, b)| a - b)
        .collect();
    let du = basis.project(&dz);
    let dudot = basis.project(&dv);
    Ok((1..chain.n_sites)
        .map(|k| PhaseSpaceShift {
            delta_u: du[k],
            delta_udot: dudot[k],
        })
        .collect())
}

/// [`differential_displacement_from`] with both paths starting at rest.
pub fn differential_displacement(
    chain: &ChainSpec,
    protocol: &Protocol,
    dt: f64,
) -> Result<Vec<PhaseSpaceShift>> {
    differential_displacement_from(
        chain,
        protocol,
        dt,
        &ChainState::at_rest(chain.n_sites, -protocol.t_half()),
    )
}

/// Analytic centre-of-mass path `(Z, V)` at `t` for spin sign `sign`,
/// starting from `(z0, v0)` at -T.
pub fn com_analytic(protocol: &Protocol, sign: f64, z0: f64, v0: f64, t: f64) -> (f64, f64) {
    let th = protocol.t_half();
    let opts = QuadOptions {
        rel_tol: 1e-13,
        abs_tol: 1e-15 * protocol.a_max() * th,
        ..Default::default()
    };
    let bp = protocol.breakpoints();
    let dv = numerics::integrate(|s| protocol.eval(s), -th, t, &bp, opts).value;
    let dz = numerics::integrate(
        |s| (t - s) * protocol.eval(s),
        -th,
        t,
        &bp,
        QuadOptions {
            abs_tol: opts.abs_tol * th,
            ..opts
        },
    )
    .value;
    (z0 + v0 * (t + th) + 0.5 * sign * dz, v0 + 0.5 * sign * dv)
}

/// Analytic mode amplitude `(u_q, udot_q)` at `t`: free rotation of the
/// initial values plus the driven response `sign (c/w) int a(t') sin w(t - t') dt'`.
pub fn mode_analytic(
    chain: &ChainSpec,
    protocol: &Protocol,
    sign: f64,
    k: usize,
    u0: f64,
    udot0: f64,
    t: f64,
) -> Result<(f64, f64)> {
    let omega = chain.dispersion(k)?;
    let c = chain.mode_amplitude_at_spin(k)?;
    let phase = omega * (t + protocol.t_half());
    let w = protocol.windowed_transform(omega, t);
    let u = u0 * phase.cos() + udot0 / omega * phase.sin() - sign * c / omega * w.im;
    let udot = -u0 * omega * phase.sin() + udot0 * phase.cos() + sign * c * w.re;
    Ok((u, udot))
}

/// One line of an oracle report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, error: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            error,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.error <= self.tolerance
    }
}

/// Maximum relative deviation of the k = 0 projection (and of the total
/// momentum) from the analytic centre-of-mass path along `traj`. Positions
/// are scaled by `a_max T^2`, velocities by `a_max T`.
pub fn com_deviation(chain: &ChainSpec, traj: &Trajectory) -> (f64, f64) {
    let p = &traj.protocol;
    let th = p.t_half();
    let scale_v = (p.a_max() * th).max(f64::MIN_POSITIVE);
    let scale_z = scale_v * th;
    let first = &traj.samples[0];
    let n = chain.n_sites as f64;
    let z0 = first.z.iter().sum::<f64>() / n;
    let v0 = first.v.iter().sum::<f64>() / n;
    let mut ez: f64 = 0.0;
    let mut ev: f64 = 0.0;
    for s in &traj.samples {
        let (za, va) = com_analytic(p, traj.spin_sign, z0, v0, s.t);
        let z = s.z.iter().sum::<f64>() / n;
        let momentum = chain.site_mass * s.v.iter().sum::<f64>();
        ez = ez.max((z - za).abs() / scale_z);
        ev = ev.max((momentum - chain.total_mass() * va).abs() / (chain.total_mass() * scale_v));
    }
    (ez, ev)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComReport {
    pub position_error: f64,
    pub momentum_error: f64,
    /// Final CoM displacement and velocity over `a_max T^2` and `a_max T`.
    pub final_displacement: f64,
    pub final_velocity: f64,
}

/// Runs one path from rest and compares the centre of mass with the
/// analytic solution.
pub fn com_limit_check(chain: &ChainSpec, protocol: &Protocol, dt: f64) -> Result<ComReport> {
    let th = protocol.t_half();
    let initial = ChainState::at_rest(chain.n_sites, -th);
    let steps = step_grid(chain, protocol, dt)?.0;
    let traj = integrate_from(
        chain,
        protocol,
        1.0,
        &initial,
        IntegrationOptions {
            dt,
            stride: (steps / 64).max(1),
            seed: None,
        },
    )?;
    let (position_error, momentum_error) = com_deviation(chain, &traj);
    let last = traj.last();
    let n = chain.n_sites as f64;
    let scale = protocol.a_max().max(f64::MIN_POSITIVE) * th;
    Ok(ComReport {
        position_error,
        momentum_error,
        final_displacement: (last.z.iter().sum::<f64>() / n).abs() / (scale * th),
        final_velocity: (last.v.iter().sum::<f64>() / n).abs() / scale,
    })
}

/// Largest relative deviation of the projected mode amplitudes from the
/// analytic solution, per mode, normalised by the mode's largest analytic
/// amplitude along the trajectory.
pub fn mode_deviation(chain: &ChainSpec, traj: &Trajectory) -> Result<Vec<f64>> {
    let basis = CosineBasis::new(chain.n_sites);
    let first = &traj.samples[0];
    let u0 = basis.project(&first.z);
    let udot0 = basis.project(&first.v);
    let projected: Vec<Vec<f64>> = traj.samples.iter().map(|s| basis.project(&s.z)).collect();
    let mut out = Vec::with_capacity(chain.n_sites - 1);
    for k in 1..chain.n_sites {
        let mut err: f64 = 0.0;
        let mut peak: f64 = 0.0;
        for (s, u) in traj.samples.iter().zip(&projected) {
            let (ua, _) = mode_analytic(
                chain,
                &traj.protocol,
                traj.spin_sign,
                k,
                u0[k],
                udot0[k],
                s.t,
            )?;
            err = err.max((u[k] - ua).abs());
            peak = peak.max(ua.abs());
        }
        out.push(if peak > 0.0 { err / peak } else { err });
    }
    Ok(out)
}

/// Per-mode relative deviation of oracle shifts from the engine's
/// `mode_displacement`, measured in the phase-space norm
/// `sqrt(du^2 + dudot^2/w^2)`. Modes whose engine shift is below
/// `SHIFT_FLOOR` of the largest one (near zeros of the spectrum) are
/// compared against that floor instead.
pub fn shift_deviation(
    chain: &ChainSpec,
    protocol: &Protocol,
    oracle: &[PhaseSpaceShift],
) -> Result<Vec<f64>> {
    let engine: Vec<PhaseSpaceShift> = (1..chain.n_sites)
        .map(|k| mode_displacement(chain, protocol, k))
        .collect::<Result<_>>()?;
    let omegas: Vec<f64> = (1..chain.n_sites)
        .map(|k| chain.dispersion(k))
        .collect::<Result<_>>()?;
    let norms: Vec<f64> = engine
        .iter()
        .zip(&omegas)
        .map(|(s, &w)| s.squared_norm(w).sqrt())
        .collect();
    let floor = SHIFT_FLOOR * norms.iter().cloned().fold(0.0, f64::max);
    Ok(engine
        .iter()
        .zip(oracle)
        .zip(&omegas)
        .zip(&norms)
        .map(|(((e, o), &w), &norm)| {
            let diff = PhaseSpaceShift {
                delta_u: o.delta_u - e.delta_u,
                delta_udot: o.delta_udot - e.delta_udot,
            };
            let denom = norm.max(floor);
            if denom > 0.0 {
                diff.squared_norm(w).sqrt() / denom
            } else {
                diff.squared_norm(w).sqrt()
            }
        })
        .collect())
}

/// Tolerances of the oracle suite.
pub const COM_TOL: f64 = 1e-8;
pub const MODE_TOL: f64 = 1e-6;
pub const SHIFT_TOL: f64 = 1e-6;
pub const SHIFT_FLOOR: f64 = 1e-3;

/// Inputs for a full oracle run.
#[derive(Debug, Clone)]
pub struct OracleSuite {
    pub chain: ChainSpec,
    pub protocols: Vec<Protocol>,
    pub dt: f64,
    pub t_ph: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub checks: Vec<Check>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::from("check,error,tolerance,status\n");
        for c in &self.checks {
            let status = if c.passed() { "pass" } else { "FAIL" };
            let _ = writeln!(
                out,
                "{},{:.6e},{:.1e},{}",
                c.name, c.error, c.tolerance, status
            );
        }
        out
    }
}

impl OracleSuite {
    pub fn run(&self) -> Result<OracleReport> {
        if self.chain.n_sites > MAX_ORACLE_SITES {
            return Err(Error::validation(format!(
                "oracle runs are limited to N <= {MAX_ORACLE_SITES}, got {}",
                self.chain.n_sites
            )));
        }
        step_grid(&self.chain, &self.protocols[0], self.dt)?;
        let mut checks = Vec::new();
        for p in &self.protocols {
            let name = p.kind().name();
            let com = com_limit_check(&self.chain, p, self.dt)?;
            checks.push(Check::new(
                format!("{name}/com-momentum"),
                com.momentum_error,
                COM_TOL,
            ));
            checks.push(Check::new(
                format!("{name}/com-position"),
                com.position_error,
                COM_TOL,
            ));

            let initial = ChainState::thermal(&self.chain, self.t_ph, self.seed, -p.t_half())?;
            let steps = step_grid(&self.chain, p, self.dt)?.0;
            let traj = integrate_from(
                &self.chain,
                p,
                1.0,
                &initial,
                IntegrationOptions {
                    dt: self.dt,
                    stride: (steps / 32).max(1),
                    seed: Some(self.seed),
                },
            )?;
            let modes = mode_deviation(&self.chain, &traj)?;
            checks.push(Check::new(
                format!("{name}/modes"),
                modes.iter().cloned().fold(0.0, f64::max),
                MODE_TOL,
            ));

            // from rest: thermal rounding would otherwise swamp modes near
            // spectral zeros, and the difference does not depend on it
            let shifts = differential_displacement(&self.chain, p, self.dt)?;
            let dev = shift_deviation(&self.chain, p, &shifts)?;
            checks.push(Check::new(
                format!("{name}/differential"),
                dev.iter().cloned().fold(0.0, f64::max),
                SHIFT_TOL,
            ));
        }
        Ok(OracleReport { checks })
    }
}
