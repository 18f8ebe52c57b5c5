//! Eigenvalue flows of the adiabatic dynamical matrix and exceptional points.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::assemble_adiabatic;
use crate::error::Result;
use crate::linalg::{centroid, cluster, eigenvalues, eigenvector_condition, numerical_rank, C64};
use crate::network::Network;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowPoint {
    pub parameter: f64,
    /// Sorted by (real, imag).
    pub eigenvalues: Vec<C64>,
    pub condition_number: f64,
    pub matrix: DMatrix<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenFlow {
    pub points: Vec<FlowPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpThresholds {
    pub tol_lambda: f64,
    pub tol_v: f64,
    pub rank_tol: f64,
}

impl Default for EpThresholds {
    fn default() -> Self {
        Self {
            tol_lambda: 1e-6,
            tol_v: 1e6,
            rank_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpReport {
    pub parameter: f64,
    pub center: C64,
    pub cluster_size: usize,
    pub diameter: f64,
    pub condition_number: f64,
    /// Numerical rank of `L - center`.
    pub rank: usize,
    /// `rank - (M - cluster_size)`: eigenvectors missing from the cluster.
    pub defect: usize,
    pub is_ep: bool,
}

pub fn flow_point(parameter: f64, matrix: DMatrix<C64>, th: &EpThresholds) -> Result<FlowPoint> {
    let eigenvalues = eigenvalues(&matrix)?;
    let condition_number = eigenvector_condition(&matrix, &eigenvalues, th.tol_lambda, th.rank_tol);
    Ok(FlowPoint {
        parameter,
        eigenvalues,
        condition_number,
        matrix,
    })
}

/// Evaluates `template` at every parameter value and decomposes the
/// adiabatic d-sector matrix.
pub fn eigen_flow<F>(template: F, values: &[f64]) -> Result<EigenFlow>
where
    F: Fn(f64) -> Result<Network> + Sync,
{
    let th = EpThresholds::default();
    let points = values
        .par_iter()
        .map(|&p| {
            let net = template(p)?;
            let sys = assemble_adiabatic(&net)?;
            flow_point(p, sys.d_sector(), &th)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EigenFlow { points })
}

fn diameter(values: &[C64], members: &[usize]) -> f64 {
    let mut d: f64 = 0.0;
    for (k, &a) in members.iter().enumerate() {
        for &b in &members[k + 1..] {
            d = d.max((values[a] - values[b]).norm());
        }
    }
    d
}

/// Characterizes the largest eigenvalue cluster at one flow point.
pub fn classify_point(point: &FlowPoint, th: &EpThresholds) -> EpReport {
    let ev = &point.eigenvalues;
    let n = ev.len();
    let groups = cluster(ev, th.tol_lambda);
    let members = groups
        .iter()
        .max_by_key(|g| g.len())
        .cloned()
        .unwrap_or_default();
    let size = members.len();
    let center = if size == 0 {
        C64::new(0.0, 0.0)
    } else {
        centroid(ev, &members)
    };
    let shifted = &point.matrix - DMatrix::<C64>::identity(n, n) * center;
    let rank = numerical_rank(&shifted, th.rank_tol);
    let defect = rank.saturating_sub(n - size);
    let diameter = diameter(ev, &members);
    let is_ep =
        size > 1 && diameter < th.tol_lambda && point.condition_number > th.tol_v && defect > 0;
    EpReport {
        parameter: point.parameter,
        center,
        cluster_size: size,
        diameter,
        condition_number: point.condition_number,
        rank,
        defect,
        is_ep,
    }
}

pub fn detect_exceptional_point(flow: &EigenFlow, th: &EpThresholds) -> Vec<EpReport> {
    flow.points.iter().map(|p| classify_point(p, th)).collect()
}
