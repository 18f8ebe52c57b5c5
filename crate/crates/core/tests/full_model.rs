use activenet::*;

fn balanced_pair(kind: LinkKind, gamma: f64, kappa_link: f64) -> Network {
    let spec = LatticeSpec::new(1, 2)
        .with_port(1, 1.0)
        .with_port(2, 1.0)
        .with_link(LinkSpec::directed(1, 2, kind, gamma, kappa_link));
    build_lattice(&spec).unwrap()
}

fn chain(n: usize, kappa_link: f64) -> Network {
    let req = RouteRequest {
        kappa_link,
        ..RouteRequest::chain(n, 1.0, 1.0)
    };
    build_lattice(&compile_path(&req).unwrap().to_lattice_spec()).unwrap()
}

/// Largest port-to-port deviation between the two models.
fn model_gap(net: &Network, omega: f64) -> f64 {
    let full = scattering_matrix(&assemble_full(net), omega).unwrap();
    let adi = scattering_matrix(&assemble_adiabatic(net).unwrap(), omega).unwrap();
    let ports: Vec<BathId> = net.ports.iter().map(|p| BathId::Port(p.node)).collect();
    let mut worst: f64 = 0.0;
    for &o in &ports {
        for &i in &ports {
            let d = full.element(o, i).unwrap() - adi.element(o, i).unwrap();
            let da = full.anomalous[(full.index(o).unwrap(), full.index(i).unwrap())]
                - adi.anomalous[(adi.index(o).unwrap(), adi.index(i).unwrap())];
            worst = worst.max(d.norm()).max(da.norm());
        }
    }
    worst
}

#[test]
fn isolation_window_tracks_link_damping() {
    let mut widths = Vec::new();
    for kl in [10.0, 20.0] {
        let sys = assemble_full(&balanced_pair(LinkKind::Dissipative, 1.0, kl));
        let rep = isolation_bandwidth(&sys, 1, 2).unwrap();
        assert!((rep.omega_3db / kl - 1.0).abs() < 0.25, "{}", rep.omega_3db);
        assert_eq!(rep.bandwidth, 2.0 * rep.omega_3db);
        widths.push(rep.omega_3db);
    }
    let ratio = widths[1] / widths[0];
    assert!((1.6..=2.4).contains(&ratio), "{ratio}");
}

#[test]
fn isolation_ratio_has_a_lorentzian_form() {
    let kl = 10.0;
    let sys = assemble_full(&balanced_pair(LinkKind::Dissipative, 1.0, kl));
    let spec = transmission_spectrum(&sys, 1, 2, &[0.5, 2.0, 7.0]).unwrap();
    for p in &spec.points {
        let expect = 1.0 + kl * kl / (p.omega * p.omega);
        assert!(
            (p.t_fwd / p.t_rev / expect - 1.0).abs() < 1e-9,
            "omega={}",
            p.omega
        );
    }
}

#[test]
fn isolation_needs_the_full_model() {
    let sys = assemble_adiabatic(&balanced_pair(LinkKind::Dissipative, 1.0, 10.0)).unwrap();
    assert!(matches!(
        isolation_bandwidth(&sys, 1, 2),
        Err(Error::InvalidInput(_))
    ));
    let reciprocal = LatticeSpec::new(1, 2)
        .with_port(1, 1.0)
        .with_port(2, 1.0)
        .with_link(LinkSpec::coherent(1, 2, 0.5, 0.0));
    let sys = assemble_full(&build_lattice(&reciprocal).unwrap());
    assert!(matches!(
        isolation_bandwidth(&sys, 1, 2),
        Err(Error::NoIsolation { .. })
    ));
}

#[test]
fn elimination_is_exact_on_resonance() {
    for kl in [10.0, 20.0, 40.0] {
        assert!(model_gap(&balanced_pair(LinkKind::Dissipative, 1.0, kl), 0.0) < 1e-12);
        assert!(model_gap(&balanced_pair(LinkKind::Amplifying, 0.3, kl), 0.0) < 1e-12);
        assert!(model_gap(&chain(4, kl), 0.0) < 1e-12);
    }
}

#[test]
fn elimination_converges_linearly_off_resonance() {
    let omega = 0.3;
    for net in [
        |kl| balanced_pair(LinkKind::Dissipative, 1.0, kl),
        |kl| balanced_pair(LinkKind::Amplifying, 0.3, kl),
        |kl| chain(4, kl),
    ] {
        let gaps: Vec<f64> = [10.0, 20.0, 40.0, 80.0]
            .iter()
            .map(|&kl| model_gap(&net(kl), omega))
            .collect();
        for w in gaps.windows(2) {
            let r = w[0] / w[1];
            assert!((1.5..=2.5).contains(&r), "{gaps:?}");
        }
    }
}

#[test]
fn doubled_basis_is_particle_hole_symmetric() {
    let spec = LatticeSpec::new(2, 2)
        .with_port(1, 1.0)
        .with_port(4, 1.0)
        .with_link(LinkSpec::directed(1, 2, LinkKind::Amplifying, 0.3, 50.0))
        .with_link(LinkSpec::directed(2, 4, LinkKind::Dissipative, 1.0, 50.0))
        .with_link(LinkSpec::directed(1, 3, LinkKind::Dissipative, 0.5, 50.0))
        .with_uniform_loss(0.01);
    let net = build_lattice(&spec).unwrap();
    assert!(assemble_full(&net).is_particle_hole_symmetric());
    assert!(assemble_adiabatic(&net)
        .unwrap()
        .is_particle_hole_symmetric());
}

#[test]
fn amplifying_pair_gain() {
    // A single balanced amplifying link between two matched ports.
    for ga in [0.1, 0.4, 0.8] {
        let sys = assemble_adiabatic(&balanced_pair(LinkKind::Amplifying, ga, 100.0)).unwrap();
        let s = scattering_matrix(&sys, 0.0).unwrap();
        assert!(s.element(BathId::Port(1), BathId::Port(2)).unwrap().norm() < 1e-12);
        let t = s
            .element(BathId::Port(2), BathId::Port(1))
            .unwrap()
            .norm_sqr();
        let r = s
            .element(BathId::Port(1), BathId::Port(1))
            .unwrap()
            .norm_sqr();
        let expect_r = ((1.0 + ga) / (1.0 - ga)).powi(2);
        assert!((r / expect_r - 1.0).abs() < 1e-12, "ga={ga}: {r}");
        assert!(
            (t / (4.0 * ga / (1.0 - ga).powi(2)).powi(2) - 1.0).abs() < 1e-12,
            "ga={ga}: {t}"
        );
    }
}

#[test]
fn unstable_amplifier_is_rejected() {
    let sys = assemble_adiabatic(&balanced_pair(LinkKind::Amplifying, 1.5, 100.0)).unwrap();
    assert!(matches!(
        scattering_matrix(&sys, 0.0),
        Err(Error::Unstable { .. })
    ));
    let rep = check_stability(&sys, DEFAULT_MARGIN).unwrap();
    assert_eq!(rep.status, Stability::Unstable);
}

#[test]
fn eliminated_link_outputs_match_the_full_model() {
    // Rows agree up to the phase convention of the eliminated link's output.
    for kind in [LinkKind::Dissipative, LinkKind::Amplifying] {
        let mut link = LinkSpec::new(1, 2, kind, 5.0);
        link.g_i = 0.2;
        link.g_j = 0.45;
        let spec = LatticeSpec::new(1, 2)
            .with_port(1, 0.3)
            .with_port(2, 0.2)
            .with_link(link);
        let net = build_lattice(&spec).unwrap();
        let full = scattering_matrix(&assemble_full(&net), 0.0).unwrap();
        let adi = scattering_matrix(&assemble_adiabatic(&net).unwrap(), 0.0).unwrap();
        let row = full.index(BathId::Link(1, 2)).unwrap();
        let phase = full.normal[(row, row)] / adi.normal[(row, row)];
        assert!((phase.norm() - 1.0).abs() < 1e-9, "{kind}: {phase}");
        for c in 0..full.baths.len() {
            for (f, a) in [
                (full.normal[(row, c)], adi.normal[(row, c)]),
                (full.anomalous[(row, c)], adi.anomalous[(row, c)]),
            ] {
                assert!(
                    (f - a * phase).norm() < 1e-9 * f.norm().max(1.0),
                    "{kind} column {c}: {f} vs {a}"
                );
            }
        }
    }
}

#[test]
fn full_model_of_an_amplifying_8x8_lattice_solves() {
    let cfg = compile_path(&RouteRequest::amplified(8, RouteStyle::OneEdge, 0.3)).unwrap();
    let net = build_lattice(&cfg.to_lattice_spec()).unwrap();
    let sys = assemble_full(&net);
    let full = scattering_matrix(&sys, 0.0).unwrap();
    let adi = scattering_matrix(&assemble_adiabatic(&net).unwrap(), 0.0).unwrap();
    let (i, o) = (BathId::Port(cfg.port_in), BathId::Port(cfg.port_out));
    let (f, a) = (full.element(o, i).unwrap(), adi.element(o, i).unwrap());
    assert!((f - a).norm() < 1e-9 * a.norm(), "{f} vs {a}");
}
