//! Symmetrized output noise and added noise.

use serde::Serialize;
use std::collections::BTreeMap;

use crate::dynamics::DynamicalSystem;
use crate::error::{Error, Result};
use crate::network::BathId;
use crate::scattering::{Solution, Solver};

/// Occupancy overrides keyed by bath; baths not listed keep the value from
/// the lattice description.
pub type Occupancies = BTreeMap<BathId, f64>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contribution {
    pub bath: BathId,
    pub weight: f64,
    pub occupancy: f64,
    pub psd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseReport {
    pub omega: f64,
    pub psd: f64,
    pub gain: Option<f64>,
    pub added_noise: Option<f64>,
    pub contributions: Vec<Contribution>,
}

pub(crate) fn occupancies(sys: &DynamicalSystem, overrides: &Occupancies) -> Result<Vec<f64>> {
    let mut n: Vec<f64> = sys.baths.iter().map(|b| b.occupancy).collect();
    for (id, &v) in overrides {
        let k = sys
            .bath_index(*id)
            .ok_or_else(|| Error::UnknownBath(id.to_string()))?;
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "occupancy of {id} must be >= 0, got {v}"
            )));
        }
        n[k] = v;
    }
    Ok(n)
}

/// `1/2 sum_b (|a_b|^2 + |a~_b|^2)(2 n_b + 1)` over weights `a`.
fn report(
    sys: &DynamicalSystem,
    omega: f64,
    normal: &[f64],
    anomalous: &[f64],
    n: &[f64],
) -> NoiseReport {
    let contributions: Vec<Contribution> = sys
        .baths
        .iter()
        .enumerate()
        .map(|(b, bath)| {
            let weight = normal[b] + anomalous[b];
            Contribution {
                bath: bath.id,
                weight,
                occupancy: n[b],
                psd: 0.5 * weight * (2.0 * n[b] + 1.0),
            }
        })
        .collect();
    let psd = contributions.iter().map(|c| c.psd).sum();
    NoiseReport {
        omega,
        psd,
        gain: None,
        added_noise: None,
        contributions,
    }
}

fn port_row(sys: &DynamicalSystem, sol: &Solution, port: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = sys.port_bath(port)?;
    let normal = sol.s.normal.row(p).iter().map(|z| z.norm_sqr()).collect();
    let anomalous = sol
        .s
        .anomalous
        .row(p)
        .iter()
        .map(|z| z.norm_sqr())
        .collect();
    Ok((normal, anomalous))
}

fn mode_row(sys: &DynamicalSystem, sol: &Solution, node: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = sys
        .node_mode(node)
        .ok_or_else(|| Error::InvalidInput(format!("node {node} does not exist")))?;
    let b = sys.bath_count();
    let row = sol.response.row(m);
    let normal = (0..b).map(|k| row[k].norm_sqr()).collect();
    let anomalous = (0..b).map(|k| row[b + k].norm_sqr()).collect();
    Ok((normal, anomalous))
}

pub fn output_noise_psd(
    sys: &DynamicalSystem,
    port: usize,
    omega: f64,
    overrides: &Occupancies,
) -> Result<NoiseReport> {
    let n = occupancies(sys, overrides)?;
    let sol = Solver::new(sys)?.solve(omega)?;
    let (a, at) = port_row(sys, &sol, port)?;
    Ok(report(sys, omega, &a, &at, &n))
}

fn with_gain(
    mut rep: NoiseReport,
    gain: f64,
    n_in: f64,
    what: (String, String),
) -> Result<NoiseReport> {
    if gain <= 0.0 {
        return Err(Error::ZeroGain {
            input: what.0,
            output: what.1,
        });
    }
    rep.gain = Some(gain);
    rep.added_noise = Some(rep.psd / gain - (n_in + 0.5));
    Ok(rep)
}

pub fn added_noise(
    sys: &DynamicalSystem,
    port_in: usize,
    port_out: usize,
    omega: f64,
    overrides: &Occupancies,
) -> Result<NoiseReport> {
    let n = occupancies(sys, overrides)?;
    let sol = Solver::new(sys)?.solve(omega)?;
    let (a, at) = port_row(sys, &sol, port_out)?;
    let pi = sys.port_bath(port_in)?;
    let rep = report(sys, omega, &a, &at, &n);
    with_gain(
        rep,
        a[pi],
        n[pi],
        (
            BathId::Port(port_in).to_string(),
            BathId::Port(port_out).to_string(),
        ),
    )
}

/// Symmetrized intracavity spectrum of a node mode.
pub fn mode_noise(
    sys: &DynamicalSystem,
    node: usize,
    omega: f64,
    overrides: &Occupancies,
) -> Result<NoiseReport> {
    let n = occupancies(sys, overrides)?;
    let sol = Solver::new(sys)?.solve(omega)?;
    let (a, at) = mode_row(sys, &sol, node)?;
    Ok(report(sys, omega, &a, &at, &n))
}

/// Added noise of a node mode referred to an input port, with the
/// intracavity gain `|r_in|^2` in place of the port gain.
pub fn mode_added_noise(
    sys: &DynamicalSystem,
    port_in: usize,
    node: usize,
    omega: f64,
    overrides: &Occupancies,
) -> Result<NoiseReport> {
    let n = occupancies(sys, overrides)?;
    let sol = Solver::new(sys)?.solve(omega)?;
    let (a, at) = mode_row(sys, &sol, node)?;
    let pi = sys.port_bath(port_in)?;
    let rep = report(sys, omega, &a, &at, &n);
    with_gain(
        rep,
        a[pi],
        n[pi],
        (BathId::Port(port_in).to_string(), format!("node {node}")),
    )
}

/// Normal-ordered intracavity spectrum `sum_b |r_b|^2 n_b + |r~_b|^2 (n_b + 1)`.
pub fn occupation_spectrum(
    sys: &DynamicalSystem,
    node: usize,
    omega: f64,
    overrides: &Occupancies,
) -> Result<f64> {
    let n = occupancies(sys, overrides)?;
    let sol = Solver::new(sys)?.solve(omega)?;
    let (a, at) = mode_row(sys, &sol, node)?;
    Ok((0..n.len())
        .map(|b| a[b] * n[b] + at[b] * (n[b] + 1.0))
        .sum())
}
