//! `sgi-phonons` command-line front end.
//!
//! Exit codes: 0 success, 1 oracle validation failed, 2 invalid config or
//! rejected parameters, 3 output path not writable.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sgi_phonons::contrast::{fmt_f64, gradient_time_bound};
use sgi_phonons::units::{HBAR, K_B, MU_B};
use sgi_phonons::{run_sweep, Config, Regime, SpinPlacement, SpinSite};

#[derive(Parser, Debug)]
#[command(
    name = "sgi-phonons",
    version,
    about = "Phonon-induced contrast loss in closed-loop Stern-Gerlach interferometers"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML config layered over the built-in defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Named protocol: 0 square, 1 quartic, 2 bicosine.
    #[arg(long, global = true, value_parser = ["0", "1", "2"])]
    protocol: Option<String>,
    #[arg(long, global = true, value_parser = ["1d", "3d", "macro"])]
    regime: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Order-unity prefactor of the closed-form estimates.
    #[arg(long, global = true)]
    prefactor: Option<f64>,
    /// Object size, nm.
    #[arg(long, global = true)]
    length_nm: Option<f64>,
    /// Half-duration of the loop, us.
    #[arg(long, global = true)]
    t_half_us: Option<f64>,
    /// Peak acceleration, m/s^2.
    #[arg(long, global = true)]
    a_max: Option<f64>,
    /// Phonon temperature, K.
    #[arg(long, global = true)]
    t_ph: Option<f64>,
    /// Spin site: "end", "center" or a site index.
    #[arg(long, global = true)]
    spin_site: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Contrast for a single configuration.
    Contrast,
    /// Sweep one variable as configured under [sweep]; CSV with all three protocols.
    Sweep,
    /// Per-mode terms of the 1D chain sum.
    Modes,
    /// Run the molecular-dynamics oracle suite.
    Validate,
    /// Upper bound on (T_half/us)(b_max/(T/m))^2 in the macroscopic regime.
    Bound {
        /// Magnetic moment in Bohr magnetons (defaults to field.moment_bohr).
        #[arg(long)]
        mu_bohr: Option<f64>,
    },
}

enum Failure {
    Config(String),
    Output(String),
}

impl From<sgi_phonons::Error> for Failure {
    fn from(e: sgi_phonons::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Output(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn resolve_config(c: &Common) -> Result<Config, Failure> {
    let mut cfg = match &c.config {
        Some(path) => Config::from_file(path)?,
        None => Config::default(),
    };
    if let Some(p) = &c.protocol {
        cfg.protocol.kind = p.clone();
    }
    if let Some(r) = &c.regime {
        cfg.regime = r.clone();
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(x) = c.prefactor {
        cfg.prefactor = x;
    }
    if let Some(x) = c.length_nm {
        cfg.object.length = x * 1e-9;
        cfg.object.n_sites = None;
    }
    if let Some(x) = c.t_half_us {
        cfg.protocol.t_half = x * 1e-6;
        cfg.protocol.t_half_sound = None;
    }
    if let Some(x) = c.a_max {
        cfg.protocol.a_max = x;
    }
    if let Some(x) = c.t_ph {
        cfg.thermal.t_ph = x;
        cfg.thermal.t_ph_quanta = None;
    }
    if let Some(s) = &c.spin_site {
        cfg.object.spin_site = match s.as_str() {
            "end" => SpinSite::Named(SpinPlacement::End),
            "center" | "centre" => SpinSite::Named(SpinPlacement::Center),
            other => SpinSite::Index(other.parse().map_err(|_| {
                Failure::Config(format!(
                    "--spin-site: expected end, center or an index, got '{other}'"
                ))
            })?),
        };
    }
    Ok(cfg)
}

fn header(command: &str, cfg: &Config) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# sgi-phonons {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "# command = {command}");
    let _ = writeln!(out, "# seed = {}", cfg.seed);
    out.push_str("# resolved config:\n");
    for line in cfg.to_toml().lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            let _ = writeln!(out, "#   {line}");
        }
    }
    out
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Output(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Failure> {
    let cfg = resolve_config(&cli.common)?;
    let base_dir = cli.common.config.as_deref().and_then(Path::parent);
    let out = cli.common.out.as_deref();
    // refuse early, before a long computation, if the output cannot be written
    if let Some(path) = out {
        fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Failure::Output(format!("cannot write {}: {e}", path.display())))?;
    }
    let regime = cfg.regime()?;

    let (name, body, code) = match &cli.command {
        Command::Contrast => {
            let report = cfg.scenario(base_dir)?.evaluate(regime)?;
            ("contrast", report.to_text(), ExitCode::SUCCESS)
        }
        Command::Sweep => {
            let spec = cfg.sweep_spec()?;
            let result = run_sweep(&cfg.scenario(base_dir)?, &spec)?;
            ("sweep", result.to_csv(), ExitCode::SUCCESS)
        }
        Command::Modes => ("modes", modes(&cfg, base_dir, regime)?, ExitCode::SUCCESS),
        Command::Validate => {
            let report = cfg.oracle_suite()?.run()?;
            let code = if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
            let mut text = report.to_table();
            let _ = writeln!(
                text,
                "# result = {}",
                if report.passed() { "pass" } else { "fail" }
            );
            if !report.passed() {
                eprint!("{}", report.to_table());
            }
            ("validate", text, code)
        }
        Command::Bound { mu_bohr } => {
            let mu = mu_bohr.unwrap_or(cfg.field.moment_bohr);
            let material = cfg.material()?;
            let b = gradient_time_bound(&material, mu * MU_B, cfg.thermal.t_ph, cfg.prefactor)?;
            let mut text = String::new();
            let _ = writeln!(text, "# mu_bohr = {}", fmt_f64(mu));
            let _ = writeln!(text, "# t_ph = {}", fmt_f64(cfg.thermal.t_ph));
            let _ = writeln!(text, "# density = {}", fmt_f64(material.density));
            let _ = writeln!(text, "# sound_speed = {}", fmt_f64(material.sound_speed));
            let _ = writeln!(text, "bound_t_half_us_gradient_sq = {}", fmt_f64(b));
            ("bound", text, ExitCode::SUCCESS)
        }
    };
    emit(out, &(header(name, &cfg) + &body))?;
    Ok(code)
}

/// Per-mode CSV: ratio to the acoustic tone pi c / L, the term with the spin
/// factor set to one, the actual term and the quantum-regime flag.
fn modes(cfg: &Config, base_dir: Option<&Path>, regime: Regime) -> Result<String, Failure> {
    if regime != Regime::Exact1d {
        return Err(Failure::Config("modes needs regime = \"1d\"".into()));
    }
    let s = cfg.scenario(base_dir)?;
    let chain = s.chain()?;
    let protocol = s.build_protocol()?;
    let report = s.evaluate(regime)?;
    let omega1 = chain.acoustic_fundamental();
    let table = chain.mode_table();
    let mass = chain.total_mass();
    let mut out = String::new();
    let _ = writeln!(out, "# minus_log_c = {}", fmt_f64(report.minus_log_c));
    let _ = writeln!(out, "# omega1 = {}", fmt_f64(omega1));
    let _ = writeln!(out, "# n_sites = {}", chain.n_sites);
    let _ = writeln!(out, "# spin_site = {}", chain.spin_site);
    out.push_str("k,omega_ratio,envelope,term,quantum\n");
    for t in &report.per_mode_terms {
        let w = table.omega[t.k];
        let coth = s.thermal_model.factor(w, s.t_ph)?;
        let envelope = mass / (2.0 * HBAR * w) * coth * protocol.spectrum(w).0.value.norm_sqr();
        let quantum = HBAR * w >= K_B * s.t_ph;
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            t.k,
            fmt_f64(w / omega1),
            fmt_f64(envelope),
            fmt_f64(t.term),
            quantum
        );
    }
    Ok(out)
}
