//! Mean-field trajectories and coherently driven steady states.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dynamics::{DynamicalSystem, Mode};
use crate::error::{Error, Result};
use crate::linalg::{solve, C64};
use crate::scattering::Solver;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `states[k][n]`: amplitude of node `n + 1` at `times[k]`.
    pub states: Vec<Vec<C64>>,
    pub step: f64,
    pub tolerance: f64,
}

pub const STEP_HALVING_TOL: f64 = 1e-6;

/// Mean-field system `x' = A x - B u(t)` over the d-sector, or the doubled
/// space when anomalous terms are present.
struct MeanField {
    a: DMatrix<C64>,
    b: DMatrix<C64>,
    doubled: bool,
    m: usize,
    baths: usize,
}

impl MeanField {
    fn new(sys: &DynamicalSystem) -> Self {
        let (m, nb) = (sys.mode_count(), sys.bath_count());
        let doubled = sys.has_anomalous_dynamics() || sys.has_anomalous_inputs();
        if doubled {
            Self {
                a: sys.l.clone(),
                b: sys.k.clone(),
                doubled,
                m,
                baths: nb,
            }
        } else {
            Self {
                a: sys.l.view((0, 0), (m, m)).into_owned(),
                b: sys.k.view((0, 0), (m, nb)).into_owned(),
                doubled,
                m,
                baths: nb,
            }
        }
    }

    fn lift(&self, x: &[C64]) -> DVector<C64> {
        if self.doubled {
            DVector::from_iterator(
                2 * self.m,
                x.iter().copied().chain(x.iter().map(|z| z.conj())),
            )
        } else {
            DVector::from_column_slice(x)
        }
    }

    fn input(&self, u: &[C64]) -> DVector<C64> {
        if self.doubled {
            DVector::from_iterator(
                2 * self.baths,
                u.iter().copied().chain(u.iter().map(|z| z.conj())),
            )
        } else {
            DVector::from_column_slice(u)
        }
    }

    fn rhs<D>(&self, t: f64, x: &DVector<C64>, drive: &D) -> DVector<C64>
    where
        D: Fn(f64) -> Vec<C64>,
    {
        let u = drive(t);
        &self.a * x - &self.b * self.input(&u)
    }

    fn rk4<D>(&self, x0: &DVector<C64>, t0: f64, t1: f64, n: usize, drive: &D) -> DVector<C64>
    where
        D: Fn(f64) -> Vec<C64>,
    {
        let h = (t1 - t0) / n as f64;
        let mut x = x0.clone();
        for k in 0..n {
            let t = t0 + k as f64 * h;
            let k1 = self.rhs(t, &x, drive);
            let k2 = self.rhs(t + h / 2.0, &(&x + &k1 * C64::new(h / 2.0, 0.0)), drive);
            let k3 = self.rhs(t + h / 2.0, &(&x + &k2 * C64::new(h / 2.0, 0.0)), drive);
            let k4 = self.rhs(t + h, &(&x + &k3 * C64::new(h, 0.0)), drive);
            x += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4)
                * C64::new(h / 6.0, 0.0);
        }
        x
    }
}

/// Fixed-step RK4 from `times[0]`, sampled at every entry of `times`.
/// `drive(t)` returns one input amplitude per bath channel.
pub fn integrate<D>(
    sys: &DynamicalSystem,
    initial: &[C64],
    drive: D,
    times: &[f64],
    step: f64,
) -> Result<Trajectory>
where
    D: Fn(f64) -> Vec<C64>,
{
    let m = sys.mode_count();
    if initial.len() != m {
        return Err(Error::InvalidInput(format!(
            "initial state has {} entries, system has {m} modes",
            initial.len()
        )));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step must be positive, got {step}"
        )));
    }
    if times.is_empty() || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput(
            "time grid must be nonempty and nondecreasing".into(),
        ));
    }
    let nb = sys.bath_count();
    let checked = |t: f64| {
        let u = drive(t);
        assert_eq!(u.len(), nb, "drive must return one amplitude per bath");
        u
    };
    let mf = MeanField::new(sys);
    let mut coarse_end = mf.lift(initial);
    let mut fine_end = coarse_end.clone();
    let mut states = vec![initial.to_vec()];
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let n = ((t1 - t0) / step).ceil().max(1.0) as usize;
        coarse_end = mf.rk4(&coarse_end, t0, t1, n, &checked);
        fine_end = mf.rk4(&fine_end, t0, t1, 2 * n, &checked);
        states.push(coarse_end.rows(0, m).iter().copied().collect());
    }
    let change = (&coarse_end - &fine_end).camax();
    let scale = fine_end.camax().max(1.0);
    if change >= STEP_HALVING_TOL * scale {
        return Err(Error::NotConverged { change });
    }
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        step,
        tolerance: STEP_HALVING_TOL,
    })
}

/// Drive amplitude on a single port, zero elsewhere.
pub fn port_drive(sys: &DynamicalSystem, port: usize, amplitude: C64) -> Result<Vec<C64>> {
    let b = sys.port_bath(port)?;
    let mut u = vec![C64::new(0.0, 0.0); sys.bath_count()];
    u[b] = amplitude;
    Ok(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapEntry {
    pub row: usize,
    pub col: usize,
    pub node: usize,
    pub amplitude: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplitudeMap {
    pub rows: usize,
    pub cols: usize,
    pub omega: f64,
    pub entries: Vec<MapEntry>,
}

impl AmplitudeMap {
    pub fn get(&self, node: usize) -> Option<C64> {
        self.entries
            .iter()
            .find(|e| e.node == node)
            .map(|e| e.amplitude)
    }
}

/// `d = (L + i omega)^-1 K_port a` for a monochromatic drive on one port.
pub fn steady_state_response(
    sys: &DynamicalSystem,
    port: usize,
    amplitude: C64,
    omega: f64,
) -> Result<AmplitudeMap> {
    let b = sys.port_bath(port)?;
    let response = Solver::new(sys)?.bath_response(omega, b)?;
    let entries = sys
        .modes
        .iter()
        .enumerate()
        .filter_map(|(k, mode)| match mode {
            Mode::Node(n) => Some(MapEntry {
                row: (n - 1) / sys.cols,
                col: (n - 1) % sys.cols,
                node: *n,
                amplitude: response[k] * amplitude,
            }),
            Mode::Link(..) => None,
        })
        .collect();
    Ok(AmplitudeMap {
        rows: sys.rows,
        cols: sys.cols,
        omega,
        entries,
    })
}

/// Same as [`steady_state_response`] but by a direct dense solve of the
/// d-sector, without pruning; used as a cross-check.
pub fn steady_state_direct(
    sys: &DynamicalSystem,
    port: usize,
    amplitude: C64,
    omega: f64,
) -> Result<Vec<C64>> {
    let m = sys.mode_count();
    let b = sys.port_bath(port)?;
    let mut a = sys.d_sector();
    for k in 0..m {
        a[(k, k)] += C64::new(0.0, omega);
    }
    let rhs = DMatrix::from_fn(m, 1, |r, _| sys.k[(r, b)] * amplitude);
    let x = solve(a, &rhs).ok_or(Error::Singular { omega })?;
    Ok(x.iter().copied().collect())
}

/// Closed-form balanced pair: `d1 = d1(0) e^{-a t}`,
/// `d2 = (d2(0) - gamma d1(0) t) e^{-a t}` with `a = (kappa + gamma) / 2`.
pub fn markov_pair_reference(gamma: f64, kappa: f64, initial: [C64; 2], t: f64) -> [C64; 2] {
    let decay = (-(kappa + gamma) / 2.0 * t).exp();
    [
        initial[0] * decay,
        (initial[1] - initial[0] * gamma * t) * decay,
    ]
}
