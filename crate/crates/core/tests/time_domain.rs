use activenet::*;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn chain_system(n: usize, gamma: f64) -> DynamicalSystem {
    let cfg = compile_chain(n, 1.0, gamma).unwrap();
    assemble_adiabatic(&build_lattice(&cfg.to_lattice_spec()).unwrap()).unwrap()
}

fn grid(t_end: f64, samples: usize) -> Vec<f64> {
    (0..=samples)
        .map(|k| t_end * k as f64 / samples as f64)
        .collect()
}

#[test]
fn balanced_pair_follows_closed_form() {
    for gamma in [1.0, 0.5] {
        let sys = chain_system(2, gamma);
        let init = [C64::new(1.0, 0.3), C64::new(-0.2, 0.5)];
        let times = grid(10.0, 100);
        let nb = sys.bath_count();
        let traj = integrate(&sys, &init, |_| vec![zero(); nb], &times, 1e-3).unwrap();
        for (t, state) in traj.times.iter().zip(&traj.states) {
            let r = markov_pair_reference(gamma, 1.0, init, *t);
            for k in 0..2 {
                assert!((state[k] - r[k]).norm() < 1e-6, "t={t}");
            }
        }
    }
}

#[test]
fn upstream_node_never_hears_downstream() {
    let sys = chain_system(2, 1.0);
    let nb = sys.bath_count();
    let traj = integrate(
        &sys,
        &[zero(), C64::new(1.0, 0.0)],
        |_| vec![zero(); nb],
        &grid(10.0, 50),
        1e-3,
    )
    .unwrap();
    assert!(traj.states.iter().all(|s| s[0].norm() < 1e-12));
    assert!(traj.states.last().unwrap()[1].norm() > 0.0);
}

#[test]
fn vacuum_stays_empty() {
    let sys = chain_system(5, 1.0);
    let nb = sys.bath_count();
    let traj = integrate(
        &sys,
        &[zero(); 5],
        |_| vec![zero(); nb],
        &grid(5.0, 10),
        1e-2,
    )
    .unwrap();
    assert!(traj.states.iter().flatten().all(|z| *z == zero()));
}

#[test]
fn driven_chain_settles_to_steady_state() {
    let sys = chain_system(10, 1.0);
    let amp = C64::new(1.0, 0.0);
    let u = port_drive(&sys, 1, amp).unwrap();
    let traj = integrate(&sys, &[zero(); 10], |_| u.clone(), &[0.0, 50.0], 1e-2).unwrap();
    let map = steady_state_response(&sys, 1, amp, 0.0).unwrap();
    let direct = steady_state_direct(&sys, 1, amp, 0.0).unwrap();
    let end = traj.states.last().unwrap();
    for n in 1..=10 {
        assert!((end[n - 1] - map.get(n).unwrap()).norm() < 1e-8, "node {n}");
        assert!((direct[n - 1] - map.get(n).unwrap()).norm() < 1e-12);
    }
    for n in 3..=10 {
        assert!((map.get(n).unwrap() + map.get(n - 1).unwrap()).norm() < 1e-12);
    }
}

#[test]
fn trajectories_are_linear() {
    let sys = chain_system(3, 0.7);
    let nb = sys.bath_count();
    let times = grid(3.0, 6);
    let a = [C64::new(1.0, 0.0), zero(), C64::new(0.0, 1.0)];
    let b = [zero(), C64::new(0.5, -0.5), C64::new(2.0, 0.0)];
    let sum: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x + y * 3.0).collect();
    let run = |x: &[C64]| integrate(&sys, x, |_| vec![zero(); nb], &times, 1e-2).unwrap();
    let (ta, tb, ts) = (run(&a), run(&b), run(&sum));
    for k in 0..times.len() {
        for n in 0..3 {
            let lin = ta.states[k][n] + tb.states[k][n] * 3.0;
            assert!((ts.states[k][n] - lin).norm() < 1e-12);
        }
    }
}

#[test]
fn coarse_steps_are_rejected() {
    let sys = chain_system(4, 1.0);
    let nb = sys.bath_count();
    let err = integrate(
        &sys,
        &[C64::new(1.0, 0.0); 4],
        |_| vec![zero(); nb],
        &[0.0, 10.0],
        1.5,
    )
    .unwrap_err();
    assert!(matches!(err, Error::NotConverged { .. }));
}

#[test]
fn amplified_lattice_map_stays_on_path() {
    let cfg = compile_path(&RouteRequest::amplified(16, RouteStyle::OneEdge, 0.3)).unwrap();
    let sys = assemble_adiabatic(&build_lattice(&cfg.to_lattice_spec()).unwrap()).unwrap();
    let map = steady_state_response(&sys, cfg.port_in, C64::new(1.0, 0.0), 0.0).unwrap();
    let path = RouteRequest::upper_edge(16, 16);
    let peak = path
        .iter()
        .map(|&n| map.get(n).unwrap().norm())
        .fold(0.0, f64::max);
    let off = map
        .entries
        .iter()
        .filter(|e| !path.contains(&e.node))
        .map(|e| e.amplitude.norm())
        .fold(0.0, f64::max);
    assert!(off < 1e-9 * peak, "{off} vs {peak}");
    assert_eq!(map.entries.len(), 256);
    assert_eq!((map.entries[17].row, map.entries[17].col), (1, 1));
}

#[test]
fn output_drive_does_not_propagate_upstream() {
    let sys = chain_system(6, 1.0);
    let map = steady_state_response(&sys, 6, C64::new(1.0, 0.0), 0.4).unwrap();
    for n in 1..6 {
        assert_eq!(map.get(n).unwrap().norm(), 0.0, "node {n}");
    }
    assert!(map.get(6).unwrap().norm() > 0.0);
}

#[test]
fn all_nodes_amplitudes_alternate_in_sign() {
    let cfg = compile_path(&RouteRequest::new(4, 4, RouteStyle::AllNodes)).unwrap();
    let sys = assemble_adiabatic(&build_lattice(&cfg.to_lattice_spec()).unwrap()).unwrap();
    let map = steady_state_response(&sys, 1, C64::new(1.0, 0.0), 0.0).unwrap();
    for e in &map.entries {
        let sign = if (e.row + e.col) % 2 == 0 { -1.0 } else { 1.0 };
        assert!(
            (e.amplitude - C64::new(sign, 0.0)).norm() < 1e-12,
            "node {}",
            e.node
        );
    }
}

#[test]
fn steady_state_is_linear_in_drive() {
    let sys = chain_system(5, 0.8);
    let one = steady_state_response(&sys, 1, C64::new(1.0, 0.0), 0.3).unwrap();
    let two = steady_state_response(&sys, 1, C64::new(2.0, 0.0), 0.3).unwrap();
    for (a, b) in one.entries.iter().zip(&two.entries) {
        assert_eq!(b.amplitude, a.amplitude * 2.0);
    }
}
