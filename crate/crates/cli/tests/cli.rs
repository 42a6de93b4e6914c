use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sgi_phonons::oracle::stability_bound;
use sgi_phonons::ChainSpec;
use sgi_phonons::MaterialSpec;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgi-phonons"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn header_value<'a>(text: &'a str, key: &str) -> &'a str {
    let prefix = format!("# {key} = ");
    text.lines()
        .find_map(|l| l.strip_prefix(prefix.as_str()))
        .unwrap_or_else(|| panic!("no {key} in output"))
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "seed = 11\n[sweep]\nmin = 10e-9\nmax = 40e-9\ncount = 6\n",
    );
    for cmd in ["contrast", "sweep", "modes"] {
        let a = dir.path().join(format!("{cmd}-a.csv"));
        let b = dir.path().join(format!("{cmd}-b.csv"));
        for p in [&a, &b] {
            let o = run(&["--config", &cfg, "--out", p.to_str().unwrap(), cmd]);
            assert!(
                o.status.success(),
                "{cmd}: {}",
                String::from_utf8_lossy(&o.stderr)
            );
        }
        let (a, b) = (fs::read(a).unwrap(), fs::read(b).unwrap());
        assert_eq!(a, b, "{cmd}");
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("# sgi-phonons "));
        assert_eq!(header_value(&text, "seed"), "11");
        assert!(text.contains("#   [protocol]"), "resolved config is echoed");
    }
}

#[test]
fn default_point_is_near_unity() {
    let o = run(&["contrast"]);
    assert!(o.status.success());
    let c: f64 = header_value(&stdout(&o), "contrast").parse().unwrap();
    assert!((0.9..=1.0).contains(&c));
}

#[test]
fn zero_drive_gives_full_contrast() {
    let o = run(&["--a-max", "0", "contrast"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(
        header_value(&text, "minus_log_c").parse::<f64>().unwrap(),
        0.0
    );
    assert_eq!(header_value(&text, "contrast").parse::<f64>().unwrap(), 1.0);
}

#[test]
fn metre_scale_object_is_bounded_by_lambda_ph() {
    let o = run(&["--regime", "macro", "--length-nm", "1e9", "contrast"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(header_value(&text, "minus_log_c").parse::<f64>().unwrap() > 1e6);
    assert!(text.contains("lambda_ph"), "{text}");
}

#[test]
fn smoother_protocols_keep_more_coherence() {
    let value = |p: &str| -> f64 {
        let o = run(&[
            "--protocol",
            p,
            "--spin-site",
            "end",
            "--length-nm",
            "50",
            "contrast",
        ]);
        assert!(o.status.success());
        header_value(&stdout(&o), "minus_log_c").parse().unwrap()
    };
    let (a0, a1, a2) = (value("0"), value("1"), value("2"));
    assert!(a2 < a1 && a1 < a0, "{a0} {a1} {a2}");
}

#[test]
fn mode_table_flags_quantum_modes() {
    // N = 17, 2 T_half = 1.4 L/c, k_B T_ph = 8.1 hbar w1, spin on site 7
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[object]\nn_sites = 17\nspin_site = 7\n[protocol]\nt_half_sound = 0.7\n[thermal]\nt_ph_quanta = 8.1\n",
    );
    let o = run(&["--config", &cfg, "modes"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 16, "k = 0 is excluded");
    assert_eq!(rows[0][0], "1");
    for r in &rows {
        let ratio: f64 = r[1].parse().unwrap();
        let envelope: f64 = r[2].parse().unwrap();
        let term: f64 = r[3].parse().unwrap();
        assert_eq!(r[4] == "true", ratio >= 8.1, "k = {}", r[0]);
        assert!(term <= envelope * (1.0 + 1e-12));
    }
    assert!(rows.iter().any(|r| r[4] == "true"));
}

#[test]
fn sweep_flags_capped_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "regime = \"3d\"\n[sweep]\nmin = 1e-9\nmax = 1e-6\ncount = 12\nconstraint = \"fixed-fractional-splitting\"\n",
    );
    let o = run(&["--config", &cfg, "sweep"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("t-half-cap") || text.contains("gradient-cap"));
    assert!(text.contains("# slope.square = "));
}

#[test]
fn validate_default_passes() {
    let o = run(&["validate"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("# result = pass"));
}

#[test]
fn bad_config_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 3\n\n[protocol]\nkynd = \"square\"\n");
    let o = run(&["--config", &cfg, "contrast"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn coarse_time_step_exits_2() {
    let d = MaterialSpec::diamond();
    let chain = ChainSpec::new(64, d.lattice_const, d.atom_mass, d.sound_speed, 0).unwrap();
    let dt = 10.0 * stability_bound(&chain);
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("[oracle]\ndt = {dt:e}\n"));
    let o = run(&["--config", &cfg, "validate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stability bound"));
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("out.csv");
    let o = run(&["--out", out.to_str().unwrap(), "contrast"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bound_scales_with_moment() {
    let value = |mu: &str| -> f64 {
        let o = run(&["--t-ph", "300", "bound", "--mu-bohr", mu]);
        assert!(o.status.success());
        let text = stdout(&o);
        text.lines()
            .find_map(|l| l.strip_prefix("bound_t_half_us_gradient_sq = "))
            .unwrap()
            .parse()
            .unwrap()
    };
    let one = value("1");
    assert_eq!(one, 1e15 * 3.5 * 17.5f64.powi(3));
    assert_eq!(value("2"), one / 4.0);
}
