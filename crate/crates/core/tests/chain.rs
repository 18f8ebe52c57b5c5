use activenet::*;
use std::collections::BTreeMap;

fn chain_system(n: usize, gamma: f64) -> DynamicalSystem {
    let cfg = compile_chain(n, 1.0, gamma).unwrap();
    assemble_adiabatic(&build_lattice(&cfg.to_lattice_spec()).unwrap()).unwrap()
}

fn s0(sys: &DynamicalSystem, out: usize, inp: usize) -> C64 {
    scattering_matrix(sys, 0.0)
        .unwrap()
        .element(BathId::Port(out), BathId::Port(inp))
        .unwrap()
}

fn sign(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[test]
fn perfect_isolator_for_every_length() {
    for n in 2..=10 {
        let sys = chain_system(n, 1.0);
        assert!(s0(&sys, 1, 1).norm() < 1e-9);
        assert!(s0(&sys, 1, n).norm() < 1e-9);
        assert!(s0(&sys, n, n).norm() < 1e-9);
        assert!(
            (s0(&sys, n, 1) - C64::new(sign(n), 0.0)).norm() < 1e-9,
            "N={n}"
        );
    }
}

#[test]
fn general_closed_form() {
    for n in 2..=10 {
        for g in [0.25, 0.5, 2.0, 0.8, 3.1] {
            let sys = chain_system(n, g);
            let r = (g - 1.0) / (g + 1.0);
            let t = sign(n) * 4.0 * g / (1.0 + g).powi(2);
            assert!((s0(&sys, 1, 1) - C64::new(r, 0.0)).norm() < 1e-9 * r.abs().max(1.0));
            assert!((s0(&sys, n, 1) - C64::new(t, 0.0)).norm() < 1e-9 * t.abs());
            assert!(s0(&sys, 1, n).norm() < 1e-9);
        }
    }
}

#[test]
fn uncoupled_chain_reflects_everything() {
    let sys = chain_system(10, 0.0);
    assert!((s0(&sys, 1, 1) + 1.0).norm() < 1e-12);
    assert!((s0(&sys, 10, 10) + 1.0).norm() < 1e-12);
    assert_eq!(s0(&sys, 10, 1).norm(), 0.0);
}

fn lossy_chain(n: usize, eta: f64, delta: &[f64]) -> DynamicalSystem {
    let req = RouteRequest {
        eta,
        ..RouteRequest::chain(n, 1.0, 1.0)
    };
    let cfg = compile_path(&req).unwrap();
    let mut spec = cfg.to_lattice_spec();
    for (k, &d) in delta.iter().enumerate() {
        spec.nodes.insert(
            k + 1,
            NodeSpec {
                detuning: d,
                loss: eta,
                loss_occupancy: 0.0,
            },
        );
    }
    assemble_adiabatic(&build_lattice(&spec).unwrap()).unwrap()
}

#[test]
fn lossy_chain_transmission() {
    let n = 6;
    for eta in [0.0, 0.01, 0.1] {
        let t = s0(&lossy_chain(n, eta, &[]), n, 1).norm_sqr();
        let expect = (1.0 - eta).powi(2) * (1.0 + eta / 2.0).powi(2 * (2 - n as i32));
        assert!((t - expect).abs() < 1e-8, "eta={eta}: {t} vs {expect}");
    }
    let eta = 1e-3;
    let deficit = 1.0 - s0(&lossy_chain(n, eta, &[]), n, 1).norm_sqr();
    assert!((deficit / (n as f64 * eta) - 1.0).abs() < 0.1);
}

#[test]
fn detuned_product_formula() {
    let d = [0.1, 0.2, -0.1, 0.05, 0.3, 0.0];
    let eta = 0.01;
    let t = s0(&lossy_chain(6, eta, &d), 6, 1).norm_sqr();
    let mut expect = (1.0 - eta).powi(2) / ((1.0 + d[0] * d[0]) * (1.0 + d[5] * d[5]));
    for dm in &d[1..5] {
        expect /= (1.0 + eta / 2.0).powi(2) + dm * dm;
    }
    assert!((t - expect).abs() < 1e-12, "{t} vs {expect}");
}

/// Closed-form output noise at the last node for arbitrary bath occupancies.
fn lossy_output_noise(n: usize, eta: f64, occ: &BTreeMap<BathId, f64>) -> f64 {
    let get = |id| occ.get(&id).copied().unwrap_or(0.0);
    let nd1 = get(BathId::Port(1));
    let ndn = get(BathId::Port(n));
    let xi = |k| get(BathId::Intrinsic(k));
    let link = |k| get(BathId::Link(k, k + 1));
    let q = 1.0 + eta / 2.0;
    let mut inner = eta * ndn + (1.0 - eta) * xi(n);
    for k in 2..n {
        inner += (1.0 - eta) * (xi(k) + eta / 4.0 * link(k)) / q.powi(2 * (n - k) as i32);
    }
    0.5 + (1.0 - eta) / q.powi(2 * (n as i32 - 2)) * ((1.0 - eta) * nd1 + eta * xi(1)) + eta * inner
}

fn occupancies_for(sys: &DynamicalSystem, seed: u64) -> BTreeMap<BathId, f64> {
    let mut state = seed;
    sys.baths
        .iter()
        .map(|b| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (b.id, (state >> 11) as f64 / (1u64 << 53) as f64)
        })
        .collect()
}

#[test]
fn lossy_chain_output_noise() {
    let n = 6;
    for eta in [0.01, 0.1] {
        let sys = lossy_chain(n, eta, &[]);
        let occ = occupancies_for(&sys, 7);
        let rep = output_noise_psd(&sys, n, 0.0, &occ).unwrap();
        let expect = lossy_output_noise(n, eta, &occ);
        assert!(
            (rep.psd - expect).abs() < 1e-12,
            "eta={eta}: {} vs {expect}",
            rep.psd
        );
        let parts: f64 = rep.contributions.iter().map(|c| c.psd).sum();
        assert!((parts - rep.psd).abs() < 1e-12);
    }
}

#[test]
fn equal_temperatures_are_independent_of_loss() {
    for eta in [0.0, 0.01, 0.1, 0.3] {
        let sys = lossy_chain(6, eta, &[]);
        let occ = sys.baths.iter().map(|b| (b.id, 0.8)).collect();
        let rep = output_noise_psd(&sys, 6, 0.0, &occ).unwrap();
        assert!((rep.psd - 1.3).abs() < 1e-12, "{}", rep.psd);
    }
}

#[test]
fn link_noise_is_quadratic_in_loss() {
    let n = 6;
    let coefficient = |eta: f64| {
        let sys = lossy_chain(n, eta, &[]);
        let occ = sys
            .baths
            .iter()
            .filter(|b| b.role == BathRole::Link)
            .map(|b| (b.id, 1.0))
            .collect();
        output_noise_psd(&sys, n, 0.0, &occ).unwrap().psd - 0.5
    };
    let etas = [1e-3, 2e-3, 5e-3, 1e-2];
    let xs: Vec<f64> = etas.iter().map(|e: &f64| e.ln()).collect();
    let ys: Vec<f64> = etas.iter().map(|&e| coefficient(e).ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope - 2.0).abs() < 0.1, "exponent {slope}");
}

#[test]
fn reciprocal_chain_spectrum() {
    let req = RouteRequest {
        j: Some(0.5),
        ..RouteRequest::chain(10, 1.0, 0.0)
    };
    let cfg = compile_path(&req).unwrap();
    let sys = assemble_adiabatic(&build_lattice(&cfg.to_lattice_spec()).unwrap()).unwrap();
    let grid: Vec<f64> = (0..41).map(|k| -2.0 + 0.1 * k as f64).collect();
    let spec = transmission_spectrum(&sys, 1, 10, &grid).unwrap();
    for p in &spec.points {
        assert!((p.t_fwd - p.t_rev).abs() < 1e-12, "omega={}", p.omega);
    }
}

#[test]
fn directional_chain_blocks_reverse() {
    let sys = chain_system(10, 1.0);
    let grid: Vec<f64> = (0..21).map(|k| -1.0 + 0.1 * k as f64).collect();
    let spec = transmission_spectrum(&sys, 1, 10, &grid).unwrap();
    assert!(spec.points.iter().all(|p| p.t_rev < 1e-12));
    let mid = &spec.points[10];
    assert_eq!(mid.omega, 0.0);
    assert!((mid.t_fwd - 1.0).abs() < 1e-12);
}
