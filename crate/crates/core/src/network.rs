//! Lattice description and validated network graph.
//!
//! Nodes carry 1-based labels in row-major order: node `r * cols + c + 1`
//! sits at row `r`, column `c`.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkKind {
    Dissipative,
    Amplifying,
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkKind::Dissipative => "dissipative",
            LinkKind::Amplifying => "amplifying",
        })
    }
}

impl FromStr for LinkKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dissipative" => Ok(LinkKind::Dissipative),
            "amplifying" => Ok(LinkKind::Amplifying),
            other => Err(Error::InvalidInput(format!("unknown link kind `{other}`"))),
        }
    }
}

/// A link oscillator joining two neighbouring nodes, plus the direct hop
/// `G e^{-i phi} d_i^dag d_j + h.c.` between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub i: usize,
    pub j: usize,
    pub kind: LinkKind,
    pub hop: f64,
    pub phase: f64,
    pub g_i: f64,
    pub g_j: f64,
    pub kappa: f64,
    pub occupancy: f64,
}

impl LinkSpec {
    /// A link with no couplings at all.
    pub fn new(i: usize, j: usize, kind: LinkKind, kappa: f64) -> Self {
        Self {
            i,
            j,
            kind,
            hop: 0.0,
            phase: 0.0,
            g_i: 0.0,
            g_j: 0.0,
            kappa,
            occupancy: 0.0,
        }
    }

    /// Balanced link transmitting from `i` to `j` with effective rate
    /// `gamma` on both ends.
    pub fn directed(i: usize, j: usize, kind: LinkKind, gamma: f64, kappa: f64) -> Self {
        let g = (gamma * kappa).sqrt() / 2.0;
        let phase = match kind {
            LinkKind::Dissipative => -FRAC_PI_2,
            LinkKind::Amplifying => FRAC_PI_2,
        };
        Self {
            i,
            j,
            kind,
            hop: gamma / 2.0,
            phase,
            g_i: g,
            g_j: g,
            kappa,
            occupancy: 0.0,
        }
    }

    /// Purely coherent hop.
    pub fn coherent(i: usize, j: usize, hop: f64, phase: f64) -> Self {
        Self {
            hop,
            phase,
            ..Self::new(i, j, LinkKind::Dissipative, 1.0)
        }
    }

    pub fn with_occupancy(mut self, n: f64) -> Self {
        self.occupancy = n;
        self
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.i, self.j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortSpec {
    pub node: usize,
    pub rate: f64,
    pub occupancy: f64,
}

impl PortSpec {
    pub fn new(node: usize, rate: f64) -> Self {
        Self {
            node,
            rate,
            occupancy: 0.0,
        }
    }
}

/// Per-node parameters. Missing nodes use [`LatticeSpec::default_node`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NodeSpec {
    pub detuning: f64,
    pub loss: f64,
    pub loss_occupancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
    pub default_node: NodeSpec,
    pub nodes: BTreeMap<usize, NodeSpec>,
    pub ports: Vec<PortSpec>,
    pub links: Vec<LinkSpec>,
}

impl LatticeSpec {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            default_node: NodeSpec::default(),
            nodes: BTreeMap::new(),
            ports: Vec::new(),
            links: Vec::new(),
        }
    }

    pub fn with_port(mut self, node: usize, rate: f64) -> Self {
        self.ports.push(PortSpec::new(node, rate));
        self
    }

    pub fn with_link(mut self, link: LinkSpec) -> Self {
        self.links.push(link);
        self
    }

    pub fn with_uniform_loss(mut self, eta: f64) -> Self {
        self.default_node.loss = eta;
        self
    }

    pub fn node_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn node_spec(&self, node: usize) -> NodeSpec {
        self.nodes.get(&node).copied().unwrap_or(self.default_node)
    }
}

/// Identifies one input/output channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BathId {
    Port(usize),
    Link(usize, usize),
    Intrinsic(usize),
}

impl fmt::Display for BathId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BathId::Port(n) => write!(f, "port:{n}"),
            BathId::Link(i, j) => write!(f, "link:{i}-{j}"),
            BathId::Intrinsic(n) => write!(f, "loss:{n}"),
        }
    }
}

impl FromStr for BathId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::UnknownBath(s.to_string());
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        match kind.trim() {
            "port" => Ok(BathId::Port(num(rest)?)),
            "loss" => Ok(BathId::Intrinsic(num(rest)?)),
            "link" => {
                let (a, b) = rest.split_once('-').ok_or_else(bad)?;
                Ok(BathId::Link(num(a)?, num(b)?))
            }
            _ => Err(bad()),
        }
    }
}

impl Serialize for BathId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BathId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Node {
    pub label: usize,
    pub row: usize,
    pub col: usize,
    pub detuning: f64,
    pub loss: f64,
    pub loss_occupancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Link {
    pub spec: LinkSpec,
    /// `4 G_i^2 / kappa`, `None` when the link damping vanishes.
    pub gamma_i: Option<f64>,
    pub gamma_j: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionalityReport {
    pub phase_residual: f64,
    pub magnitude_residual: f64,
    /// `Forward` means `i -> j`.
    pub direction: Option<Direction>,
}

const DIRECTION_TOL: f64 = 1e-9;

impl Link {
    pub fn label(&self) -> String {
        self.spec.label()
    }

    /// Residuals of the balancing conditions for this link.
    pub fn directionality(&self) -> DirectionalityReport {
        let s = &self.spec;
        let up = (s.phase - FRAC_PI_2).abs();
        let down = (s.phase + FRAC_PI_2).abs();
        let phase_residual = up.min(down);
        let magnitude_residual = match (self.gamma_i, self.gamma_j) {
            (Some(a), Some(b)) => (s.hop - (a * b).sqrt() / 2.0).abs(),
            _ => f64::INFINITY,
        };
        let direction = (phase_residual <= DIRECTION_TOL).then(|| {
            let negative = down < up;
            match (s.kind, negative) {
                (LinkKind::Dissipative, true) | (LinkKind::Amplifying, false) => Direction::Forward,
                _ => Direction::Backward,
            }
        });
        DirectionalityReport {
            phase_residual,
            magnitude_residual,
            direction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Network {
    pub rows: usize,
    pub cols: usize,
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    pub ports: Vec<PortSpec>,
}

impl Network {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, label: usize) -> Option<&Node> {
        label.checked_sub(1).and_then(|k| self.nodes.get(k))
    }

    /// Link joining `a` and `b`, in either orientation.
    pub fn link(&self, a: usize, b: usize) -> Option<&Link> {
        self.links
            .iter()
            .find(|l| (l.spec.i == a && l.spec.j == b) || (l.spec.i == b && l.spec.j == a))
    }

    pub fn port(&self, node: usize) -> Option<&PortSpec> {
        self.ports.iter().find(|p| p.node == node)
    }

    pub fn check_directionality(&self, a: usize, b: usize) -> Option<DirectionalityReport> {
        self.link(a, b).map(Link::directionality)
    }

    pub fn has_amplifying_links(&self) -> bool {
        self.links
            .iter()
            .any(|l| l.spec.kind == LinkKind::Amplifying)
    }
}

fn check_rate(what: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        Err(Error::InvalidLattice(format!("{what} is not finite ({v})")))
    } else if v < 0.0 {
        Err(Error::InvalidLattice(format!(
            "negative rate: {what} = {v}"
        )))
    } else {
        Ok(())
    }
}

pub fn build_lattice(spec: &LatticeSpec) -> Result<Network> {
    let (rows, cols) = (spec.rows, spec.cols);
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidLattice(format!(
            "empty lattice {rows}x{cols}"
        )));
    }
    let m = rows * cols;
    let exists = |n: usize| (1..=m).contains(&n);

    for (&label, ns) in &spec.nodes {
        if !exists(label) {
            return Err(Error::InvalidLattice(format!(
                "node {label} does not exist"
            )));
        }
        check_node(label, ns)?;
    }
    check_node(0, &spec.default_node)?;

    let nodes = (1..=m)
        .map(|label| {
            let ns = spec.node_spec(label);
            Node {
                label,
                row: (label - 1) / cols,
                col: (label - 1) % cols,
                detuning: ns.detuning,
                loss: ns.loss,
                loss_occupancy: ns.loss_occupancy,
            }
        })
        .collect::<Vec<_>>();

    let mut seen_ports = BTreeSet::new();
    for p in &spec.ports {
        if !exists(p.node) {
            return Err(Error::InvalidLattice(format!(
                "dangling port at node {}",
                p.node
            )));
        }
        if !seen_ports.insert(p.node) {
            return Err(Error::InvalidLattice(format!(
                "duplicate port at node {}",
                p.node
            )));
        }
        check_rate(&format!("port {} rate", p.node), p.rate)?;
        if p.rate == 0.0 {
            return Err(Error::InvalidLattice(format!(
                "port {} rate must be positive",
                p.node
            )));
        }
        check_rate(&format!("port {} occupancy", p.node), p.occupancy)?;
    }

    let mut seen_links = BTreeSet::new();
    let mut links = Vec::with_capacity(spec.links.len());
    for l in &spec.links {
        let name = l.label();
        for n in [l.i, l.j] {
            if !exists(n) {
                return Err(Error::InvalidLattice(format!(
                    "link {name}: node {n} does not exist"
                )));
            }
        }
        let (a, b) = (&nodes[l.i - 1], &nodes[l.j - 1]);
        if a.row.abs_diff(b.row) + a.col.abs_diff(b.col) != 1 {
            return Err(Error::InvalidLattice(format!(
                "link {name}: not nearest neighbors"
            )));
        }
        if !seen_links.insert((l.i.min(l.j), l.i.max(l.j))) {
            return Err(Error::InvalidLattice(format!("duplicate link {name}")));
        }
        check_rate(&format!("link {name} hop"), l.hop)?;
        check_rate(&format!("link {name} g_i"), l.g_i)?;
        check_rate(&format!("link {name} g_j"), l.g_j)?;
        check_rate(&format!("link {name} kappa"), l.kappa)?;
        check_rate(&format!("link {name} occupancy"), l.occupancy)?;
        if !(l.phase > -PI && l.phase <= PI) {
            return Err(Error::InvalidLattice(format!(
                "link {name}: phase {} outside (-pi, pi]",
                l.phase
            )));
        }
        let rate = |g: f64| (l.kappa > 0.0).then(|| 4.0 * g * g / l.kappa);
        links.push(Link {
            spec: l.clone(),
            gamma_i: rate(l.g_i),
            gamma_j: rate(l.g_j),
        });
    }

    Ok(Network {
        rows,
        cols,
        nodes,
        links,
        ports: spec.ports.clone(),
    })
}

fn check_node(label: usize, ns: &NodeSpec) -> Result<()> {
    let who = if label == 0 {
        "default node".to_string()
    } else {
        format!("node {label}")
    };
    if !ns.detuning.is_finite() {
        return Err(Error::InvalidLattice(format!(
            "{who} detuning is not finite"
        )));
    }
    check_rate(&format!("{who} loss"), ns.loss)?;
    check_rate(&format!("{who} loss occupancy"), ns.loss_occupancy)
}
