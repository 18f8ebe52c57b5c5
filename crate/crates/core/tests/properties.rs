use activenet::*;
use proptest::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
struct RandomLink {
    hop: f64,
    phase: f64,
    g_i: f64,
    g_j: f64,
    kappa: f64,
    amplifying: bool,
}

fn random_link() -> impl Strategy<Value = RandomLink> {
    (
        0.0..1.0,
        -0.999 * PI..PI,
        0.0..2.0,
        0.0..2.0,
        5.0..50.0,
        prop::bool::weighted(0.3),
    )
        .prop_map(|(hop, phase, g_i, g_j, kappa, amplifying)| RandomLink {
            hop,
            phase,
            g_i,
            g_j,
            kappa,
            amplifying,
        })
}

fn random_lattice(allow_amp: bool) -> impl Strategy<Value = LatticeSpec> {
    (1usize..=3, 2usize..=3)
        .prop_flat_map(move |(rows, cols)| {
            let n_links = grid_links(rows, cols).len();
            (
                Just((rows, cols)),
                prop::collection::vec(random_link(), n_links),
                prop::collection::vec((-1.0..1.0, 0.0..0.3), rows * cols),
                0.2..2.0f64,
                0.2..2.0f64,
            )
        })
        .prop_map(move |((rows, cols), links, nodes, k_in, k_out)| {
            let mut spec = LatticeSpec::new(rows, cols)
                .with_port(1, k_in)
                .with_port(rows * cols, k_out);
            for (k, &(detuning, loss)) in nodes.iter().enumerate() {
                spec.nodes.insert(
                    k + 1,
                    NodeSpec {
                        detuning,
                        loss,
                        loss_occupancy: 0.0,
                    },
                );
            }
            for (&(i, j), l) in grid_links(rows, cols).iter().zip(links) {
                let kind = if allow_amp && l.amplifying {
                    LinkKind::Amplifying
                } else {
                    LinkKind::Dissipative
                };
                spec.links.push(LinkSpec {
                    i,
                    j,
                    kind,
                    hop: l.hop,
                    phase: l.phase,
                    g_i: l.g_i,
                    g_j: l.g_j,
                    kappa: l.kappa,
                    occupancy: 0.0,
                });
            }
            spec
        })
}

fn frequencies() -> Vec<f64> {
    (0..11).map(|k| -2.5 + 0.5 * k as f64).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn passive_networks_are_stable_and_unitary(spec in random_lattice(false)) {
        let net = build_lattice(&spec).unwrap();
        for sys in [assemble_adiabatic(&net).unwrap(), assemble_full(&net)] {
            let rep = check_stability(&sys, DEFAULT_MARGIN).unwrap();
            prop_assert!(rep.max_real <= 1e-12, "max Re = {}", rep.max_real);
            let solver = match Solver::new(&sys) {
                Ok(s) => s,
                Err(Error::Singular { .. }) => continue,
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            for w in frequencies() {
                let Ok(s) = solver.scattering(w) else { continue };
                for p in 0..s.baths.len() {
                    prop_assert!((s.row_norm(p) - 1.0).abs() < 1e-9, "row {p} at {w}: {}", s.row_norm(p));
                }
                for port in [1, spec.node_count()] {
                    let psd = output_noise_psd(&sys, port, w, &BTreeMap::new()).unwrap().psd;
                    prop_assert!((psd - 0.5).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn doubled_basis_keeps_particle_hole_symmetry(spec in random_lattice(true)) {
        let net = build_lattice(&spec).unwrap();
        prop_assert!(assemble_full(&net).is_particle_hole_symmetric());
        prop_assert!(assemble_adiabatic(&net).unwrap().is_particle_hole_symmetric());
    }

    #[test]
    fn amplifiers_preserve_commutators(spec in random_lattice(true)) {
        let net = build_lattice(&spec).unwrap();
        let sys = assemble_adiabatic(&net).unwrap();
        if let Ok(solver) = Solver::new(&sys) {
            for w in [0.0, 0.7] {
                let Ok(s) = solver.scattering(w) else { continue };
                for p in 0..s.baths.len() {
                    let n: f64 = s.normal.row(p).iter().map(|z| z.norm_sqr()).sum();
                    let a: f64 = s.anomalous.row(p).iter().map(|z| z.norm_sqr()).sum();
                    prop_assert!((n - a - 1.0).abs() < 1e-8 * (n + a).max(1.0));
                }
            }
        }
    }

    #[test]
    fn coherent_chains_are_reciprocal(
        n in 2usize..=6,
        hops in prop::collection::vec((0.05..1.0, -0.999 * PI..PI), 5),
        detunings in prop::collection::vec(-1.0..1.0, 6),
        w in -2.0..2.0f64,
    ) {
        let mut spec = LatticeSpec::new(1, n).with_port(1, 1.0).with_port(n, 0.7);
        for k in 1..n {
            let (h, ph) = hops[k - 1];
            spec = spec.with_link(LinkSpec::coherent(k, k + 1, h, ph));
            spec.nodes.insert(k, NodeSpec { detuning: detunings[k - 1], ..NodeSpec::default() });
        }
        let sys = assemble_adiabatic(&build_lattice(&spec).unwrap()).unwrap();
        let s = scattering_matrix(&sys, w).unwrap();
        let fwd = s.element(BathId::Port(n), BathId::Port(1)).unwrap().norm();
        let rev = s.element(BathId::Port(1), BathId::Port(n)).unwrap().norm();
        prop_assert!((fwd - rev).abs() < 1e-9);
    }

    #[test]
    fn bath_response_matches_full_solution(spec in random_lattice(true), w in -1.0..1.0f64) {
        let net = build_lattice(&spec).unwrap();
        let sys = assemble_adiabatic(&net).unwrap();
        if let Ok(solver) = Solver::new(&sys) {
            if let Ok(sol) = solver.solve(w) {
                for b in 0..sys.bath_count() {
                    let col = solver.bath_response(w, b).unwrap();
                    for (r, z) in col.iter().enumerate() {
                        prop_assert!((z - sol.response[(r, b)]).norm() < 1e-9 * sol.response.camax().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn compiled_routes_are_balanced_and_triangular(
        n in 2usize..=6,
        style in prop::sample::select(vec![RouteStyle::OneEdge, RouteStyle::BothEdges, RouteStyle::AllNodes]),
        ga in 0.0..0.9f64,
    ) {
        let req = if style == RouteStyle::AllNodes {
            RouteRequest::new(n, n, style)
        } else {
            RouteRequest::amplified(n, style, ga)
        };
        let cfg = compile_path(&req).unwrap();
        let rep = verify_config(&cfg).unwrap();
        prop_assert!(rep.max_phase_residual < 1e-12);
        prop_assert!(rep.max_magnitude_residual < 1e-12);
        // Balanced links couple one way only, so the coupling graph has no cycles.
        let sys = assemble_adiabatic(&build_lattice(&cfg.to_lattice_spec()).unwrap()).unwrap();
        let l = sys.d_sector();
        let m = l.nrows();
        let tol = 1e-14 * l.camax();
        let edge = |r: usize, c: usize| r != c && l[(r, c)].norm() > tol;
        let mut indegree: Vec<usize> = (0..m).map(|r| (0..m).filter(|&c| edge(r, c)).count()).collect();
        let mut ready: Vec<usize> = (0..m).filter(|&r| indegree[r] == 0).collect();
        let mut seen = 0;
        while let Some(c) = ready.pop() {
            seen += 1;
            for (r, deg) in indegree.iter_mut().enumerate() {
                if edge(r, c) {
                    *deg -= 1;
                    if *deg == 0 {
                        ready.push(r);
                    }
                }
            }
        }
        prop_assert_eq!(seen, m);
    }

    #[test]
    fn off_path_treatment_does_not_change_ports(
        n in 3usize..=6,
        style in prop::sample::select(vec![RouteStyle::OneEdge, RouteStyle::BothEdges]),
        ga in 0.0..0.9f64,
        w in -1.0..1.0f64,
    ) {
        let s = |off_path| {
            let req = RouteRequest { off_path, ..RouteRequest::amplified(n, style, ga) };
            let cfg = compile_path(&req).unwrap();
            let sys = assemble_adiabatic(&build_lattice(&cfg.to_lattice_spec()).unwrap()).unwrap();
            let s = scattering_matrix(&sys, w).unwrap();
            let ports = [BathId::Port(cfg.port_in), BathId::Port(cfg.port_out)];
            ports.map(|o| ports.map(|i| s.element(o, i).unwrap()))
        };
        let (a, b) = (s(OffPath::UniformDefault), s(OffPath::Decoupled));
        for r in 0..2 {
            for c in 0..2 {
                prop_assert!((a[r][c] - b[r][c]).norm() < 1e-9);
            }
        }
    }
}
