//! Input-output scattering `S = 1 + K^dag (L + i omega)^-1 K`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{
    max_real_part, DynamicalSystem, Stability, StabilityReport, Variant, DEFAULT_MARGIN,
};
use crate::error::{Error, Result};
use crate::linalg::{max_abs, singular_values, solve, C64};
use crate::network::BathId;

/// Scattering rows for every bath channel at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SMatrix {
    pub omega: f64,
    pub baths: Vec<BathId>,
    /// `s[p, b]`: output `p` per input `d_in,b`.
    pub normal: DMatrix<C64>,
    /// `s~[p, b]`: output `p` per input `d_in,b^dag`.
    pub anomalous: DMatrix<C64>,
}

impl SMatrix {
    pub fn index(&self, id: BathId) -> Result<usize> {
        self.baths
            .iter()
            .position(|b| *b == id)
            .ok_or_else(|| Error::UnknownBath(id.to_string()))
    }

    pub fn element(&self, out: BathId, inp: BathId) -> Result<C64> {
        Ok(self.normal[(self.index(out)?, self.index(inp)?)])
    }

    /// `sum_b |s_pb|^2 + |s~_pb|^2`.
    pub fn row_norm(&self, p: usize) -> f64 {
        let n: f64 = self.normal.row(p).iter().map(|z| z.norm_sqr()).sum();
        let a: f64 = self.anomalous.row(p).iter().map(|z| z.norm_sqr()).sum();
        n + a
    }
}

/// Mode amplitudes and scattering at one frequency.
#[derive(Debug, Clone)]
pub struct Solution {
    pub s: SMatrix,
    /// `M x 2B`: response of each d-mode to `d_in,b` (first `B` columns) and
    /// to `d_in,b^dag` (last `B` columns).
    pub response: DMatrix<C64>,
}

/// Prepared evaluator: bath-disconnected modes are dropped and stability is
/// checked once.
#[derive(Debug, Clone)]
pub struct Solver<'a> {
    sys: &'a DynamicalSystem,
    keep: Vec<usize>,
    lnn: DMatrix<C64>,
    lna: DMatrix<C64>,
    kn: DMatrix<C64>,
    ka: DMatrix<C64>,
    anomalous_dynamics: bool,
    anomalous_inputs: bool,
    stability: StabilityReport,
}

/// Modes sharing a weakly connected component with at least one bath.
fn bath_connected_modes(sys: &DynamicalSystem) -> Vec<usize> {
    let (m, b) = (sys.mode_count(), sys.bath_count());
    let zero = C64::new(0.0, 0.0);
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for r in 0..m {
        for c in 0..m {
            if r != c && (sys.l[(r, c)] != zero || sys.l[(r, c + m)] != zero) {
                let (a, z) = (find(&mut parent, r), find(&mut parent, c));
                if a != z {
                    parent[z] = a;
                }
            }
        }
    }
    let mut driven = vec![false; m];
    for r in 0..m {
        if (0..2 * b).any(|c| sys.k[(r, c)] != zero) {
            let root = find(&mut parent, r);
            driven[root] = true;
        }
    }
    (0..m).filter(|&r| driven[find(&mut parent, r)]).collect()
}

fn sub(m: &DMatrix<C64>, rows: &[usize], r0: usize, c0: usize, cols: &[usize]) -> DMatrix<C64> {
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| {
        m[(r0 + rows[r], c0 + cols[c])]
    })
}

impl<'a> Solver<'a> {
    pub fn new(sys: &'a DynamicalSystem) -> Result<Self> {
        Self::with_margin(sys, DEFAULT_MARGIN)
    }

    pub fn with_margin(sys: &'a DynamicalSystem, margin: f64) -> Result<Self> {
        let (m, b) = (sys.mode_count(), sys.bath_count());
        let keep = bath_connected_modes(sys);
        let all_baths: Vec<usize> = (0..b).collect();
        let lnn = sub(&sys.l, &keep, 0, 0, &keep);
        let lna = sub(&sys.l, &keep, 0, m, &keep);
        let kn = sub(&sys.k, &keep, 0, 0, &all_baths);
        let ka = sub(&sys.k, &keep, 0, b, &all_baths);
        let zero = C64::new(0.0, 0.0);
        let anomalous_dynamics = lna.iter().any(|z| *z != zero);
        let anomalous_inputs = ka.iter().any(|z| *z != zero);
        let stability = if keep.is_empty() {
            StabilityReport::from_max_real(f64::NEG_INFINITY, margin)
        } else if anomalous_dynamics {
            let n = keep.len();
            let mut l2 = DMatrix::zeros(2 * n, 2 * n);
            l2.view_mut((0, 0), (n, n)).copy_from(&lnn);
            l2.view_mut((0, n), (n, n)).copy_from(&lna);
            l2.view_mut((n, 0), (n, n))
                .copy_from(&lna.map(|z| z.conj()));
            l2.view_mut((n, n), (n, n))
                .copy_from(&lnn.map(|z| z.conj()));
            StabilityReport::from_max_real(max_real_part(&l2, n, true)?, margin)
        } else {
            StabilityReport::from_max_real(max_real_part(&lnn, keep.len(), false)?, margin)
        };
        if stability.status == Stability::Unstable {
            return Err(Error::Unstable {
                max_real: stability.max_real,
            });
        }
        Ok(Self {
            sys,
            keep,
            lnn,
            lna,
            kn,
            ka,
            anomalous_dynamics,
            anomalous_inputs,
            stability,
        })
    }

    pub fn system(&self) -> &DynamicalSystem {
        self.sys
    }

    pub fn stability(&self) -> StabilityReport {
        self.stability
    }

    fn shifted(&self, l: &DMatrix<C64>, omega: f64) -> DMatrix<C64> {
        let mut a = l.clone();
        for k in 0..a.nrows() {
            a[(k, k)] += C64::new(0.0, omega);
        }
        a
    }

    fn checked_solve(
        &self,
        a: DMatrix<C64>,
        rhs: &DMatrix<C64>,
        omega: f64,
    ) -> Result<DMatrix<C64>> {
        if self.stability.status == Stability::Marginal {
            let s = singular_values(&a);
            let smallest = s.last().copied().unwrap_or(0.0);
            if smallest <= 1e-12 * max_abs(&a).max(1.0) {
                return Err(Error::Singular { omega });
            }
        }
        solve(a, rhs).ok_or(Error::Singular { omega })
    }

    pub fn solve(&self, omega: f64) -> Result<Solution> {
        let (m, b) = (self.sys.mode_count(), self.sys.bath_count());
        let n = self.keep.len();
        // x = (L + i omega)^-1 K restricted to the kept modes: top rows for
        // d, bottom rows for d^dag.
        let mut k_top = DMatrix::zeros(n, 2 * b);
        k_top.view_mut((0, 0), (n, b)).copy_from(&self.kn);
        k_top.view_mut((0, b), (n, b)).copy_from(&self.ka);
        let (x_top, x_bot) = if self.anomalous_dynamics {
            let mut l2 = DMatrix::zeros(2 * n, 2 * n);
            l2.view_mut((0, 0), (n, n)).copy_from(&self.lnn);
            l2.view_mut((0, n), (n, n)).copy_from(&self.lna);
            l2.view_mut((n, 0), (n, n))
                .copy_from(&self.lna.map(|z| z.conj()));
            l2.view_mut((n, n), (n, n))
                .copy_from(&self.lnn.map(|z| z.conj()));
            let mut k2 = DMatrix::zeros(2 * n, 2 * b);
            k2.view_mut((0, 0), (n, 2 * b)).copy_from(&k_top);
            k2.view_mut((n, 0), (n, b))
                .copy_from(&self.ka.map(|z| z.conj()));
            k2.view_mut((n, b), (n, b))
                .copy_from(&self.kn.map(|z| z.conj()));
            let x = self.checked_solve(self.shifted(&l2, omega), &k2, omega)?;
            (x.rows(0, n).into_owned(), Some(x.rows(n, n).into_owned()))
        } else {
            let x_top = self.checked_solve(self.shifted(&self.lnn, omega), &k_top, omega)?;
            let x_bot = if self.anomalous_inputs {
                let mut k_bot = DMatrix::zeros(n, 2 * b);
                k_bot
                    .view_mut((0, 0), (n, b))
                    .copy_from(&self.ka.map(|z| z.conj()));
                k_bot
                    .view_mut((0, b), (n, b))
                    .copy_from(&self.kn.map(|z| z.conj()));
                let lbar = self.lnn.map(|z| z.conj());
                Some(self.checked_solve(self.shifted(&lbar, omega), &k_bot, omega)?)
            } else {
                None
            };
            (x_top, x_bot)
        };
        // Output rows: d_out = d_in + Kn^dag d - Ka^T d^dag (symplectic adjoint of K).
        let mut s_top = self.kn.adjoint() * &x_top;
        if let Some(xb) = &x_bot {
            s_top -= self.ka.transpose() * xb;
        }
        for p in 0..b {
            s_top[(p, p)] += C64::new(1.0, 0.0);
        }
        let mut response = DMatrix::zeros(m, 2 * b);
        for (r, &mode) in self.keep.iter().enumerate() {
            response.row_mut(mode).copy_from(&x_top.row(r));
        }
        let s = SMatrix {
            omega,
            baths: self.sys.baths.iter().map(|b| b.id).collect(),
            normal: s_top.columns(0, b).into_owned(),
            anomalous: s_top.columns(b, b).into_owned(),
        };
        Ok(Solution { s, response })
    }

    pub fn scattering(&self, omega: f64) -> Result<SMatrix> {
        self.solve(omega).map(|s| s.s)
    }

    /// Response of every d-mode to a unit coherent input on one bath; a single
    /// column of [`Solution::response`] without solving for the others.
    pub fn bath_response(&self, omega: f64, bath: usize) -> Result<Vec<C64>> {
        let m = self.sys.mode_count();
        let n = self.keep.len();
        let x = if self.anomalous_dynamics {
            let mut l2 = DMatrix::zeros(2 * n, 2 * n);
            l2.view_mut((0, 0), (n, n)).copy_from(&self.lnn);
            l2.view_mut((0, n), (n, n)).copy_from(&self.lna);
            l2.view_mut((n, 0), (n, n))
                .copy_from(&self.lna.map(|z| z.conj()));
            l2.view_mut((n, n), (n, n))
                .copy_from(&self.lnn.map(|z| z.conj()));
            let rhs = DMatrix::from_fn(2 * n, 1, |r, _| {
                if r < n {
                    self.kn[(r, bath)]
                } else {
                    self.ka[(r - n, bath)].conj()
                }
            });
            self.checked_solve(self.shifted(&l2, omega), &rhs, omega)?
        } else {
            let rhs = self.kn.columns(bath, 1).into_owned();
            self.checked_solve(self.shifted(&self.lnn, omega), &rhs, omega)?
        };
        let mut out = vec![C64::new(0.0, 0.0); m];
        for (r, &mode) in self.keep.iter().enumerate() {
            out[mode] = x[(r, 0)];
        }
        Ok(out)
    }
}

pub fn scattering_matrix(sys: &DynamicalSystem, omega: f64) -> Result<SMatrix> {
    Solver::new(sys)?.scattering(omega)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumPoint {
    pub omega: f64,
    pub t_fwd: f64,
    pub t_rev: f64,
    pub r_in: f64,
    pub r_out: f64,
    pub s_in_in: C64,
    pub s_out_in: C64,
    pub s_in_out: C64,
    pub s_out_out: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub port_in: usize,
    pub port_out: usize,
    pub points: Vec<SpectrumPoint>,
}

pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty frequency grid".into()));
    }
    if grid.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidInput("non-finite frequency in grid".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "frequency grid not strictly increasing".into(),
        ));
    }
    Ok(())
}

pub fn transmission_spectrum(
    sys: &DynamicalSystem,
    port_in: usize,
    port_out: usize,
    grid: &[f64],
) -> Result<Spectrum> {
    check_grid(grid)?;
    let (pi, po) = (sys.port_bath(port_in)?, sys.port_bath(port_out)?);
    let solver = Solver::new(sys)?;
    let points = grid
        .par_iter()
        .map(|&omega| {
            let s = solver.scattering(omega)?;
            let e = |a: usize, b: usize| s.normal[(a, b)];
            Ok(SpectrumPoint {
                omega,
                t_fwd: e(po, pi).norm_sqr(),
                t_rev: e(pi, po).norm_sqr(),
                r_in: e(pi, pi).norm_sqr(),
                r_out: e(po, po).norm_sqr(),
                s_in_in: e(pi, pi),
                s_out_in: e(po, pi),
                s_in_out: e(pi, po),
                s_out_out: e(po, po),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Spectrum {
        port_in,
        port_out,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsolationReport {
    /// Detuning where `T_fwd / T_rev = 2`.
    pub omega_3db: f64,
    /// `2 * omega_3db`.
    pub bandwidth: f64,
}

pub const ISOLATION_TOL: f64 = 1e-4;

pub fn isolation_bandwidth(
    sys: &DynamicalSystem,
    port_in: usize,
    port_out: usize,
) -> Result<IsolationReport> {
    if sys.variant != Variant::Full {
        return Err(Error::InvalidInput(
            "isolation bandwidth needs the full model".into(),
        ));
    }
    let (pi, po) = (sys.port_bath(port_in)?, sys.port_bath(port_out)?);
    let solver = Solver::new(sys)?;
    let ratio = |omega: f64| -> Result<f64> {
        let s = solver.scattering(omega)?;
        let (f, r) = (s.normal[(po, pi)].norm_sqr(), s.normal[(pi, po)].norm_sqr());
        Ok(if r == 0.0 {
            if f == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            f / r
        })
    };
    let kmax = sys
        .baths
        .iter()
        .zip(0..)
        .filter(|(b, _)| matches!(b.id, BathId::Link(..)))
        .map(|(_, col)| {
            let m = sys.mode_count();
            (0..m)
                .map(|r| sys.k[(r, col)].norm_sqr())
                .fold(0.0_f64, f64::max)
        })
        .fold(0.0_f64, f64::max);
    let (mut lo, mut hi) = (0.0, 10.0 * kmax);
    let r0 = ratio(lo)?;
    if r0 <= 2.0 {
        return Err(Error::NoIsolation { best_ratio: r0 });
    }
    if ratio(hi)? > 2.0 {
        return Err(Error::NoIsolation { best_ratio: r0 });
    }
    while hi - lo > ISOLATION_TOL {
        let mid = 0.5 * (lo + hi);
        if ratio(mid)? > 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let omega_3db = 0.5 * (lo + hi);
    Ok(IsolationReport {
        omega_3db,
        bandwidth: 2.0 * omega_3db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{assemble_adiabatic, assemble_full};
    use crate::network::{build_lattice, LatticeSpec, LinkKind, LinkSpec};

    fn pair(gamma: f64, kij: f64) -> crate::network::Network {
        build_lattice(
            &LatticeSpec::new(1, 2)
                .with_port(1, 1.0)
                .with_port(2, 1.0)
                .with_link(LinkSpec::directed(1, 2, LinkKind::Dissipative, gamma, kij)),
        )
        .unwrap()
    }

    #[test]
    fn single_port_reflects_minus_one() {
        let net = build_lattice(&LatticeSpec::new(1, 1).with_port(1, 2.0)).unwrap();
        let s = scattering_matrix(&assemble_full(&net), 0.0).unwrap();
        assert!((s.normal[(0, 0)] + 1.0).norm() < 1e-15);
    }

    #[test]
    fn balanced_pair_transmits_plus_one() {
        let sys = assemble_adiabatic(&pair(1.0, 10.0)).unwrap();
        let s = scattering_matrix(&sys, 0.0).unwrap();
        let t = s.element(BathId::Port(2), BathId::Port(1)).unwrap();
        assert!((t - C64::new(1.0, 0.0)).norm() < 1e-12, "{t}");
        assert!(s.element(BathId::Port(1), BathId::Port(2)).unwrap().norm() < 1e-12);
        for p in 0..s.baths.len() {
            assert!((s.row_norm(p) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unstable_system_is_rejected() {
        let link = LinkSpec::directed(1, 2, LinkKind::Amplifying, 3.0, 10.0);
        let net = build_lattice(
            &LatticeSpec::new(1, 2)
                .with_port(1, 1.0)
                .with_port(2, 1.0)
                .with_link(link),
        )
        .unwrap();
        let err = scattering_matrix(&assemble_adiabatic(&net).unwrap(), 0.0).unwrap_err();
        assert!(
            err.to_string()
                .contains("scattering undefined for unstable L"),
            "{err}"
        );
    }

    #[test]
    fn isolation_needs_nonreciprocity() {
        let link = LinkSpec {
            hop: 0.5,
            phase: -std::f64::consts::FRAC_PI_2,
            ..LinkSpec::new(1, 2, LinkKind::Dissipative, 10.0)
        };
        let net = build_lattice(
            &LatticeSpec::new(1, 2)
                .with_port(1, 1.0)
                .with_port(2, 1.0)
                .with_link(link),
        )
        .unwrap();
        let err = isolation_bandwidth(&assemble_full(&net), 1, 2).unwrap_err();
        assert!(err.to_string().contains("no isolation"));
    }

    #[test]
    fn grid_must_increase() {
        let sys = assemble_adiabatic(&pair(1.0, 10.0)).unwrap();
        assert!(transmission_spectrum(&sys, 1, 2, &[0.0, 0.0]).is_err());
        assert!(matches!(
            transmission_spectrum(&sys, 1, 3, &[0.0]),
            Err(Error::UnknownPort(3))
        ));
    }
}
