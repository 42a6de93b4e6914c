use sgi_phonons::oracle::{
    com_deviation, com_limit_check, differential_displacement, differential_displacement_from,
    integrate, integrate_from, mode_deviation, recommended_dt, shift_deviation, stability_bound,
    ChainState, IntegrationOptions, OracleSuite,
};
use sgi_phonons::units::AMU;
use sgi_phonons::{ChainSpec, Protocol, ProtocolKind};

fn chain(n: usize, s: usize) -> ChainSpec {
    ChainSpec::new(n, 3.6e-10, 12.0 * AMU, 17.5e3, s).unwrap()
}

/// Oracle window: 2T = 1.4 L/c. The drive is large enough that the driven
/// response is not lost in the rounding of the thermal background; the
/// system is linear, so the comparisons are scale free.
fn protocol(kind: ProtocolKind, c: &ChainSpec) -> Protocol {
    Protocol::new(kind, 1e12, 0.7 * c.length() / c.sound_speed).unwrap()
}

#[test]
fn energy_conserved_without_drive() {
    let c = chain(32, 0);
    let p = Protocol::quartic(0.0, 0.7 * c.length() / c.sound_speed).unwrap();
    let t = integrate(&c, &p, 1.0, recommended_dt(&c), 300.0, 11).unwrap();
    let rel = (t.energy_final - t.energy_initial).abs() / t.energy_initial;
    assert!(rel < 1e-8, "{rel}");
}

#[test]
fn work_matches_energy_gain() {
    for kind in ProtocolKind::NAMED {
        let c = chain(24, 3);
        let p = protocol(kind, &c);
        let init = ChainState::at_rest(24, -p.t_half());
        let t = integrate_from(
            &c,
            &p,
            -1.0,
            &init,
            IntegrationOptions {
                dt: recommended_dt(&c),
                stride: usize::MAX,
                seed: None,
            },
        )
        .unwrap();
        let gain = t.energy_final - t.energy_initial;
        assert!(
            ((t.work - gain) / gain).abs() < 1e-6,
            "{kind}: work {} gain {gain}",
            t.work
        );
    }
}

#[test]
fn com_follows_half_the_drive() {
    for kind in ProtocolKind::NAMED {
        let c = chain(16, 0);
        let p = protocol(kind, &c);
        let r = com_limit_check(&c, &p, recommended_dt(&c)).unwrap();
        assert!(r.momentum_error < 1e-8, "{kind}: {r:?}");
        assert!(r.position_error < 1e-8, "{kind}: {r:?}");
        assert!(
            r.final_displacement < 1e-8 && r.final_velocity < 1e-8,
            "{kind}: {r:?}"
        );
    }
}

#[test]
fn open_profile_com_matches_kinematics() {
    let c = chain(8, 2);
    let th = 0.7 * c.length() / c.sound_speed;
    let a = 5e11;
    let p = Protocol::custom(th, vec![(-th, a), (th, a)]).unwrap();
    let init = ChainState::at_rest(8, -th);
    let t = integrate_from(
        &c,
        &p,
        1.0,
        &init,
        IntegrationOptions {
            dt: recommended_dt(&c),
            stride: 1000,
            seed: None,
        },
    )
    .unwrap();
    for s in &t.samples {
        let z = s.z.iter().sum::<f64>() / 8.0;
        // per-path force (M/2) a
        let expected = 0.5 * (0.5 * a) * (s.t + th).powi(2);
        assert!(
            (z - expected).abs() <= 1e-10 * a * th * th,
            "{} vs {expected}",
            z
        );
    }
    let (ez, ev) = com_deviation(&c, &t);
    assert!(ez < 1e-10 && ev < 1e-10);
}

#[test]
fn two_site_chain_matches_two_body_solution() {
    let c = chain(2, 0);
    let p = protocol(ProtocolKind::Bicosine, &c);
    let init = ChainState::thermal(&c, 300.0, 5, -p.t_half()).unwrap();
    let steps = sgi_phonons::oracle::step_grid(&c, &p, recommended_dt(&c))
        .unwrap()
        .0;
    let t = integrate_from(
        &c,
        &p,
        1.0,
        &init,
        IntegrationOptions {
            dt: recommended_dt(&c),
            stride: steps / 50,
            seed: Some(5),
        },
    )
    .unwrap();
    // relative coordinate r = z1 - z0 obeys r'' = -(2K/m) r - F/m
    let w = (2.0 * c.spring_constant() / c.site_mass).sqrt();
    assert!((w - c.dispersion(1).unwrap()).abs() < 1e-12 * w);
    let r0 = init.z[1] - init.z[0];
    let rd0 = init.v[1] - init.v[0];
    for s in &t.samples {
        let phase = w * (s.t + p.t_half());
        // driven part: -(1/m)(M/2) int a sin w(t - t') / w, M = 2m
        let drive = -p.windowed_transform(w, s.t).im;
        let r = r0 * phase.cos() + rd0 / w * phase.sin() - drive / w;
        let got = s.z[1] - s.z[0];
        assert!(
            (got - r).abs() < 1e-7 * r0.abs().max(drive.abs() / w),
            "{got} vs {r}"
        );
    }
    assert!(mode_deviation(&c, &t).unwrap()[0] < 1e-6);
}

#[test]
fn mode_amplitudes_follow_analytic_solution() {
    for kind in ProtocolKind::NAMED {
        let c = chain(64, 0);
        let p = protocol(kind, &c);
        let init = ChainState::thermal(&c, 293.0, 1, -p.t_half()).unwrap();
        let steps = sgi_phonons::oracle::step_grid(&c, &p, recommended_dt(&c))
            .unwrap()
            .0;
        let t = integrate_from(
            &c,
            &p,
            1.0,
            &init,
            IntegrationOptions {
                dt: recommended_dt(&c),
                stride: steps / 16,
                seed: Some(1),
            },
        )
        .unwrap();
        let dev = mode_deviation(&c, &t).unwrap();
        let worst = dev.iter().cloned().fold(0.0, f64::max);
        assert!(worst < 1e-6, "{kind}: {worst}");
    }
}

#[test]
fn differential_shift_independent_of_initial_state() {
    let c = chain(32, 5);
    let p = protocol(ProtocolKind::Quartic, &c);
    let dt = recommended_dt(&c);
    let rest = differential_displacement(&c, &p, dt).unwrap();
    let hot = ChainState::thermal(&c, 293.0, 99, -p.t_half()).unwrap();
    let warm = differential_displacement_from(&c, &p, dt, &hot).unwrap();
    let scale = rest.iter().map(|s| s.delta_u.abs()).fold(0.0, f64::max);
    let vscale = rest.iter().map(|s| s.delta_udot.abs()).fold(0.0, f64::max);
    for (a, b) in rest.iter().zip(&warm) {
        assert!((a.delta_u - b.delta_u).abs() <= 1e-9 * scale);
        assert!((a.delta_udot - b.delta_udot).abs() <= 1e-9 * vscale);
    }
}

#[test]
fn centred_spin_leaves_odd_modes_untouched() {
    let c = chain(33, 16);
    let p = protocol(ProtocolKind::Square, &c);
    let d = differential_displacement(&c, &p, recommended_dt(&c)).unwrap();
    let scale = d.iter().map(|s| s.delta_u.abs()).fold(0.0, f64::max);
    for (i, s) in d.iter().enumerate() {
        let k = i + 1;
        if k % 2 == 1 {
            assert!(s.delta_u.abs() <= 1e-9 * scale, "k = {k}: {}", s.delta_u);
        }
    }
}

#[test]
fn differential_shift_is_linear_in_drive() {
    let c = chain(20, 0);
    let p = protocol(ProtocolKind::Bicosine, &c);
    let dt = stability_bound(&c);
    let one = differential_displacement(&c, &p, dt).unwrap();
    let three = differential_displacement(&c, &p.with_a_max(3.0 * p.a_max()).unwrap(), dt).unwrap();
    for (a, b) in one.iter().zip(&three) {
        assert!((b.delta_u - 3.0 * a.delta_u).abs() <= 1e-9 * b.delta_u.abs().max(1e-300));
        assert!((b.delta_udot - 3.0 * a.delta_udot).abs() <= 1e-9 * b.delta_udot.abs().max(1e-300));
    }
}

#[test]
fn differential_shift_matches_engine() {
    for kind in ProtocolKind::NAMED {
        let c = chain(64, 0);
        let p = protocol(kind, &c);
        let d = differential_displacement(&c, &p, recommended_dt(&c)).unwrap();
        let dev = shift_deviation(&c, &p, &d).unwrap();
        let worst = dev.iter().cloned().fold(0.0, f64::max);
        assert!(worst < 1e-6, "{kind}: {worst}");
    }
}

#[test]
fn second_order_convergence() {
    let c = chain(16, 0);
    let p = protocol(ProtocolKind::Quartic, &c);
    let error_at = |dt: f64| {
        let d = differential_displacement(&c, &p, dt).unwrap();
        shift_deviation(&c, &p, &d)
            .unwrap()
            .into_iter()
            .fold(0.0, f64::max)
    };
    let coarse = stability_bound(&c) / 4.0;
    let e1 = error_at(coarse);
    let e2 = error_at(coarse / 2.0);
    let ratio = e1 / e2;
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio} ({e1} -> {e2})");
}

#[test]
fn suite_passes_and_is_deterministic() {
    let c = chain(16, 0);
    let protocols = ProtocolKind::NAMED
        .iter()
        .map(|&k| protocol(k, &c))
        .collect();
    let suite = OracleSuite {
        chain: c,
        protocols,
        dt: recommended_dt(&c),
        t_ph: 293.0,
        seed: 4,
    };
    let a = suite.run().unwrap();
    assert!(a.passed(), "{}", a.to_table());
    assert_eq!(a.checks.len(), 12);
    let b = suite.run().unwrap();
    assert_eq!(a, b);
}
