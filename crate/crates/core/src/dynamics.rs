//! Linear dynamical system `d' = L d - K d_in` in the doubled basis
//! `(d_1 .. d_M, d_1^dag .. d_M^dag)`.

use nalgebra::DMatrix;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, phasor, C64, I};
use crate::network::{BathId, LinkKind, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Variant {
    Full,
    Adiabatic,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Full => "full",
            Variant::Adiabatic => "adiabatic",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Variant::Full),
            "adiabatic" => Ok(Variant::Adiabatic),
            other => Err(Error::InvalidInput(format!(
                "unknown model `{other}`, expected full or adiabatic"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BathRole {
    Waveguide,
    Link,
    Intrinsic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bath {
    pub id: BathId,
    pub role: BathRole,
    pub occupancy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mode {
    Node(usize),
    Link(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicalSystem {
    pub variant: Variant,
    pub modes: Vec<Mode>,
    pub baths: Vec<Bath>,
    /// `2M x 2M`.
    pub l: DMatrix<C64>,
    /// `2M x 2B`; column `b` feeds `d_in,b`, column `B + b` feeds `d_in,b^dag`.
    pub k: DMatrix<C64>,
    pub rows: usize,
    pub cols: usize,
}

impl DynamicalSystem {
    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn bath_count(&self) -> usize {
        self.baths.len()
    }

    pub fn d_sector(&self) -> DMatrix<C64> {
        let m = self.mode_count();
        self.l.view((0, 0), (m, m)).into_owned()
    }

    pub fn anomalous_block(&self) -> DMatrix<C64> {
        let m = self.mode_count();
        self.l.view((0, m), (m, m)).into_owned()
    }

    pub fn has_anomalous_dynamics(&self) -> bool {
        let m = self.mode_count();
        self.l
            .view((0, m), (m, m))
            .iter()
            .any(|z| *z != C64::new(0.0, 0.0))
    }

    pub fn has_anomalous_inputs(&self) -> bool {
        let (m, b) = (self.mode_count(), self.bath_count());
        self.k
            .view((0, b), (m, b))
            .iter()
            .any(|z| *z != C64::new(0.0, 0.0))
    }

    pub fn mode_index(&self, mode: Mode) -> Option<usize> {
        self.modes.iter().position(|&m| m == mode)
    }

    pub fn node_mode(&self, node: usize) -> Option<usize> {
        self.mode_index(Mode::Node(node))
    }

    pub fn bath_index(&self, id: BathId) -> Option<usize> {
        self.baths.iter().position(|b| b.id == id)
    }

    pub fn port_bath(&self, node: usize) -> Result<usize> {
        self.bath_index(BathId::Port(node))
            .ok_or(Error::UnknownPort(node))
    }

    /// Exact entrywise particle-hole symmetry of `L` and `K`.
    pub fn is_particle_hole_symmetric(&self) -> bool {
        let (m, b) = (self.mode_count(), self.bath_count());
        let l_ok = (0..m).all(|r| {
            (0..m).all(|c| {
                self.l[(r + m, c + m)] == self.l[(r, c)].conj()
                    && self.l[(r + m, c)] == self.l[(r, c + m)].conj()
            })
        });
        let k_ok = (0..m).all(|r| {
            (0..b).all(|c| {
                self.k[(r + m, c + b)] == self.k[(r, c)].conj()
                    && self.k[(r + m, c)] == self.k[(r, c + b)].conj()
            })
        });
        l_ok && k_ok
    }
}

/// Accumulates the d-sector blocks before doubling.
struct Builder {
    m: usize,
    lnn: DMatrix<C64>,
    lna: DMatrix<C64>,
    kn: Vec<Vec<(usize, C64)>>,
    ka: Vec<Vec<(usize, C64)>>,
    baths: Vec<Bath>,
}

impl Builder {
    fn new(m: usize) -> Self {
        Self {
            m,
            lnn: DMatrix::zeros(m, m),
            lna: DMatrix::zeros(m, m),
            kn: Vec::new(),
            ka: Vec::new(),
            baths: Vec::new(),
        }
    }

    fn bath(&mut self, bath: Bath, normal: Vec<(usize, C64)>, anomalous: Vec<(usize, C64)>) {
        self.baths.push(bath);
        self.kn.push(normal);
        self.ka.push(anomalous);
    }

    fn finish(self, variant: Variant, modes: Vec<Mode>, net: &Network) -> DynamicalSystem {
        let (m, b) = (self.m, self.baths.len());
        let mut l = DMatrix::zeros(2 * m, 2 * m);
        for r in 0..m {
            for c in 0..m {
                let (n, a) = (self.lnn[(r, c)], self.lna[(r, c)]);
                l[(r, c)] = n;
                l[(r, c + m)] = a;
                l[(r + m, c)] = a.conj();
                l[(r + m, c + m)] = n.conj();
            }
        }
        let mut k = DMatrix::zeros(2 * m, 2 * b);
        for (col, (normal, anomalous)) in self.kn.iter().zip(&self.ka).enumerate() {
            for &(r, z) in normal {
                k[(r, col)] += z;
                k[(r + m, col + b)] += z.conj();
            }
            for &(r, z) in anomalous {
                k[(r, col + b)] += z;
                k[(r + m, col)] += z.conj();
            }
        }
        DynamicalSystem {
            variant,
            modes,
            baths: self.baths,
            l,
            k,
            rows: net.rows,
            cols: net.cols,
        }
    }
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Node diagonals, coherent hops, ports and intrinsic losses shared by both variants.
fn common(net: &Network, bld: &mut Builder) {
    for (k, node) in net.nodes.iter().enumerate() {
        bld.lnn[(k, k)] += re(-node.loss / 2.0) - I * node.detuning;
    }
    for p in &net.ports {
        let k = p.node - 1;
        bld.lnn[(k, k)] -= re(p.rate / 2.0);
    }
    for link in &net.links {
        let s = &link.spec;
        let (a, b) = (s.i - 1, s.j - 1);
        bld.lnn[(a, b)] += -I * s.hop * phasor(-s.phase);
        bld.lnn[(b, a)] += -I * s.hop * phasor(s.phase);
    }
    for p in &net.ports {
        let bath = Bath {
            id: BathId::Port(p.node),
            role: BathRole::Waveguide,
            occupancy: p.occupancy,
        };
        bld.bath(bath, vec![(p.node - 1, re(p.rate.sqrt()))], vec![]);
    }
}

fn intrinsic(net: &Network, bld: &mut Builder) {
    for (k, node) in net.nodes.iter().enumerate() {
        if node.loss > 0.0 {
            let bath = Bath {
                id: BathId::Intrinsic(node.label),
                role: BathRole::Intrinsic,
                occupancy: node.loss_occupancy,
            };
            bld.bath(bath, vec![(k, re(node.loss.sqrt()))], vec![]);
        }
    }
}

/// Nodes and link oscillators as explicit modes.
pub fn assemble_full(net: &Network) -> DynamicalSystem {
    let m0 = net.node_count();
    let m = m0 + net.links.len();
    let mut modes: Vec<Mode> = net.nodes.iter().map(|n| Mode::Node(n.label)).collect();
    modes.extend(net.links.iter().map(|l| Mode::Link(l.spec.i, l.spec.j)));
    let mut bld = Builder::new(m);
    common(net, &mut bld);
    for (k, link) in net.links.iter().enumerate() {
        let s = &link.spec;
        let c = m0 + k;
        let (a, b) = (s.i - 1, s.j - 1);
        bld.lnn[(c, c)] -= re(s.kappa / 2.0);
        let block = match s.kind {
            LinkKind::Dissipative => &mut bld.lnn,
            LinkKind::Amplifying => &mut bld.lna,
        };
        for (node, g) in [(a, s.g_i), (b, s.g_j)] {
            block[(node, c)] += -I * g;
            block[(c, node)] += -I * g;
        }
        let bath = Bath {
            id: BathId::Link(s.i, s.j),
            role: BathRole::Link,
            occupancy: s.occupancy,
        };
        bld.bath(bath, vec![(c, re(s.kappa.sqrt()))], vec![]);
    }
    intrinsic(net, &mut bld);
    bld.finish(Variant::Full, modes, net)
}

/// Link oscillators eliminated; each link leaves an effective damping, a
/// dissipative hop and one noise channel.
pub fn assemble_adiabatic(net: &Network) -> Result<DynamicalSystem> {
    let m = net.node_count();
    let modes = net.nodes.iter().map(|n| Mode::Node(n.label)).collect();
    let mut bld = Builder::new(m);
    common(net, &mut bld);
    for link in &net.links {
        let s = &link.spec;
        let (Some(gi), Some(gj)) = (link.gamma_i, link.gamma_j) else {
            return Err(Error::EliminationUndefined { link: link.label() });
        };
        let (a, b) = (s.i - 1, s.j - 1);
        let sign = match s.kind {
            LinkKind::Dissipative => 1.0,
            LinkKind::Amplifying => -1.0,
        };
        let cross = (gi * gj).sqrt() / 2.0;
        bld.lnn[(a, a)] -= re(sign * gi / 2.0);
        bld.lnn[(b, b)] -= re(sign * gj / 2.0);
        bld.lnn[(a, b)] -= re(sign * cross);
        bld.lnn[(b, a)] -= re(sign * cross);
        let column = vec![(a, -I * gi.sqrt()), (b, -I * gj.sqrt())];
        let bath = Bath {
            id: BathId::Link(s.i, s.j),
            role: BathRole::Link,
            occupancy: s.occupancy,
        };
        match s.kind {
            LinkKind::Dissipative => bld.bath(bath, column, vec![]),
            LinkKind::Amplifying => bld.bath(bath, vec![], column),
        }
    }
    intrinsic(net, &mut bld);
    Ok(bld.finish(Variant::Adiabatic, modes, net))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stability {
    Stable,
    Marginal,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub max_real: f64,
    pub status: Stability,
}

impl StabilityReport {
    pub fn from_max_real(max_real: f64, margin: f64) -> Self {
        let status = if max_real < -margin {
            Stability::Stable
        } else if max_real <= margin {
            Stability::Marginal
        } else {
            Stability::Unstable
        };
        Self { max_real, status }
    }

    pub fn is_stable(&self) -> bool {
        self.status == Stability::Stable
    }
}

pub const DEFAULT_MARGIN: f64 = 1e-9;

/// Largest real part over the spectrum of `L`.
pub(crate) fn max_real_part(l: &DMatrix<C64>, m: usize, anomalous: bool) -> Result<f64> {
    let ev = if anomalous {
        eigenvalues(l)?
    } else {
        eigenvalues(&l.view((0, 0), (m, m)).into_owned())?
    };
    Ok(ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

pub fn check_stability(sys: &DynamicalSystem, margin: f64) -> Result<StabilityReport> {
    if sys.mode_count() == 0 {
        return Ok(StabilityReport::from_max_real(f64::NEG_INFINITY, margin));
    }
    let max_real = max_real_part(&sys.l, sys.mode_count(), sys.has_anomalous_dynamics())?;
    Ok(StabilityReport::from_max_real(max_real, margin))
}
