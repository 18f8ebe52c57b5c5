//! Path to coupling-configuration compiler.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use crate::dynamics::{assemble_adiabatic, check_stability, StabilityReport, DEFAULT_MARGIN};
use crate::error::{Error, Result};
use crate::network::BathId;
use crate::network::{
    build_lattice, DirectionalityReport, LatticeSpec, LinkKind, LinkSpec, NodeSpec, PortSpec,
};
use crate::scattering::Solver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouteStyle {
    Chain,
    OneEdge,
    BothEdges,
    AllNodes,
    Custom,
}

impl fmt::Display for RouteStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RouteStyle::Chain => "chain",
            RouteStyle::OneEdge => "one-edge",
            RouteStyle::BothEdges => "both-edges",
            RouteStyle::AllNodes => "all-nodes",
            RouteStyle::Custom => "custom",
        })
    }
}

impl FromStr for RouteStyle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "chain" => RouteStyle::Chain,
            "one-edge" => RouteStyle::OneEdge,
            "both-edges" => RouteStyle::BothEdges,
            "all-nodes" => RouteStyle::AllNodes,
            "custom" => RouteStyle::Custom,
            other => return Err(Error::InvalidRoute(format!("unknown style `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmpPolicy {
    None,
    EverySecondLink,
    Explicit(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffPath {
    UniformDefault,
    Decoupled,
}

impl fmt::Display for OffPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OffPath::UniformDefault => "uniform-default",
            OffPath::Decoupled => "decoupled",
        })
    }
}

impl FromStr for OffPath {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-default" => Ok(OffPath::UniformDefault),
            "decoupled" => Ok(OffPath::Decoupled),
            other => Err(Error::InvalidRoute(format!(
                "unknown off-path treatment `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteRequest {
    pub rows: usize,
    pub cols: usize,
    pub style: RouteStyle,
    /// Node paths for the custom style; derived for the others.
    pub paths: Vec<Vec<usize>>,
    pub amp: AmpPolicy,
    pub gamma_amp: f64,
    /// Dissipative rate; defaults to `kappa / degree(input node)`.
    pub gamma: Option<f64>,
    /// Direct-hop magnitude on dissipative links; defaults to `gamma / 2`.
    pub j: Option<f64>,
    /// Direct-hop magnitude on amplifying links; defaults to `gamma_amp / 2`.
    pub j_amp: Option<f64>,
    pub kappa: f64,
    pub kappa_link: f64,
    /// Intrinsic loss on every node; ports get `kappa - eta`.
    pub eta: f64,
    pub delta: f64,
    pub off_path: OffPath,
}

pub const DEFAULT_KAPPA_LINK: f64 = 100.0;

impl RouteRequest {
    pub fn new(rows: usize, cols: usize, style: RouteStyle) -> Self {
        Self {
            rows,
            cols,
            style,
            paths: Vec::new(),
            amp: AmpPolicy::None,
            gamma_amp: 0.0,
            gamma: None,
            j: None,
            j_amp: None,
            kappa: 1.0,
            kappa_link: DEFAULT_KAPPA_LINK,
            eta: 0.0,
            delta: 0.0,
            off_path: OffPath::UniformDefault,
        }
    }

    pub fn chain(n: usize, kappa: f64, gamma: f64) -> Self {
        Self {
            kappa,
            gamma: Some(gamma),
            ..Self::new(1, n, RouteStyle::Chain)
        }
    }

    /// Square lattice edge route with an amplifier at every second link.
    pub fn amplified(n: usize, style: RouteStyle, gamma_amp: f64) -> Self {
        Self {
            amp: AmpPolicy::EverySecondLink,
            gamma_amp,
            ..Self::new(n, n, style)
        }
    }

    pub fn node_count(&self) -> usize {
        self.rows * self.cols
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidRoute(m));
        if self.rows == 0 || self.cols == 0 || self.node_count() < 2 {
            return bad(format!("lattice {}x{} too small", self.rows, self.cols));
        }
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidRoute(format!(
                    "{name} must be finite and >= 0, got {v}"
                )))
            }
        };
        nonneg("gamma_amp", self.gamma_amp)?;
        nonneg("eta", self.eta)?;
        for (name, v) in [("gamma", self.gamma), ("j", self.j), ("j_amp", self.j_amp)] {
            if let Some(v) = v {
                nonneg(name, v)?;
            }
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return bad(format!("kappa must be positive, got {}", self.kappa));
        }
        if !(self.kappa_link.is_finite() && self.kappa_link > 0.0) {
            return bad(format!(
                "kappa_link must be positive, got {}",
                self.kappa_link
            ));
        }
        if self.eta >= self.kappa {
            return bad(format!(
                "eta = {} leaves no port coupling (kappa = {})",
                self.eta, self.kappa
            ));
        }
        if !self.delta.is_finite() {
            return bad("delta must be finite".into());
        }
        match self.style {
            RouteStyle::Chain if self.rows != 1 => bad("chain style needs a single row".into()),
            RouteStyle::OneEdge | RouteStyle::BothEdges | RouteStyle::AllNodes
                if self.rows < 2 || self.cols < 2 =>
            {
                bad(format!("{} style needs at least 2x2 nodes", self.style))
            }
            RouteStyle::AllNodes if self.amp != AmpPolicy::None => {
                bad("all-nodes style does not place amplifiers".into())
            }
            _ => Ok(()),
        }
    }

    /// Top row then right column.
    pub fn upper_edge(rows: usize, cols: usize) -> Vec<usize> {
        (1..=cols)
            .chain((1..rows).map(|r| r * cols + cols))
            .collect()
    }

    /// Left column then bottom row.
    pub fn lower_edge(rows: usize, cols: usize) -> Vec<usize> {
        (0..rows)
            .map(|r| r * cols + 1)
            .chain(((rows - 1) * cols + 2)..=rows * cols)
            .collect()
    }

    pub fn resolved_paths(&self) -> Vec<Vec<usize>> {
        match self.style {
            RouteStyle::Chain => vec![(1..=self.cols).collect()],
            RouteStyle::OneEdge => vec![Self::upper_edge(self.rows, self.cols)],
            RouteStyle::BothEdges => {
                vec![
                    Self::upper_edge(self.rows, self.cols),
                    Self::lower_edge(self.rows, self.cols),
                ]
            }
            RouteStyle::AllNodes => Vec::new(),
            RouteStyle::Custom => self.paths.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkRole {
    OnPath,
    PathAdjacent,
    OffPath,
    Chord,
}

impl fmt::Display for LinkRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkRole::OnPath => "on-path",
            LinkRole::PathAdjacent => "path-adjacent",
            LinkRole::OffPath => "off-path",
            LinkRole::Chord => "chord",
        })
    }
}

impl FromStr for LinkRole {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "on-path" => LinkRole::OnPath,
            "path-adjacent" => LinkRole::PathAdjacent,
            "off-path" => LinkRole::OffPath,
            "chord" => LinkRole::Chord,
            other => return Err(Error::InvalidRoute(format!("unknown link role `{other}`"))),
        })
    }
}

/// One compiled link, `i < j` in label order. The phase encodes the flow
/// direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkAssignment {
    pub i: usize,
    pub j: usize,
    pub kind: LinkKind,
    pub hop: f64,
    pub phase: f64,
    pub gamma: f64,
    pub role: LinkRole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingConfig {
    pub rows: usize,
    pub cols: usize,
    pub style: RouteStyle,
    pub kappa: f64,
    pub kappa_link: f64,
    pub eta: f64,
    pub delta: f64,
    pub port_in: usize,
    pub port_out: usize,
    pub off_path: OffPath,
    pub links: Vec<LinkAssignment>,
}

impl CouplingConfig {
    pub fn link(&self, a: usize, b: usize) -> Option<&LinkAssignment> {
        let (i, j) = (a.min(b), a.max(b));
        self.links.iter().find(|l| l.i == i && l.j == j)
    }

    pub fn to_lattice_spec(&self) -> LatticeSpec {
        let mut spec = LatticeSpec::new(self.rows, self.cols);
        spec.default_node = NodeSpec {
            detuning: self.delta,
            loss: self.eta,
            loss_occupancy: 0.0,
        };
        let rate = self.kappa - self.eta;
        spec.ports = vec![
            PortSpec::new(self.port_in, rate),
            PortSpec::new(self.port_out, rate),
        ];
        spec.links = self
            .links
            .iter()
            .map(|l| {
                let g = (l.gamma * self.kappa_link).sqrt() / 2.0;
                LinkSpec {
                    i: l.i,
                    j: l.j,
                    kind: l.kind,
                    hop: l.hop,
                    phase: l.phase,
                    g_i: g,
                    g_j: g,
                    kappa: self.kappa_link,
                    occupancy: 0.0,
                }
            })
            .collect();
        spec
    }
}

/// Nearest-neighbour pairs in row-major order, right neighbour first.
pub fn grid_links(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let n = r * cols + c + 1;
            if c + 1 < cols {
                out.push((n, n + 1));
            }
            if r + 1 < rows {
                out.push((n, n + cols));
            }
        }
    }
    out
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Phase making the link transmit `from -> to`.
pub fn flow_phase(kind: LinkKind, from: usize, to: usize) -> f64 {
    let forward = from < to;
    match (kind, forward) {
        (LinkKind::Dissipative, true) | (LinkKind::Amplifying, false) => -FRAC_PI_2,
        _ => FRAC_PI_2,
    }
}

fn position(label: usize, cols: usize) -> (isize, isize) {
    (((label - 1) / cols) as isize, ((label - 1) % cols) as isize)
}

fn step(a: usize, b: usize, cols: usize) -> (isize, isize) {
    let (pa, pb) = (position(a, cols), position(b, cols));
    (pb.0 - pa.0, pb.1 - pa.1)
}

/// Splits a path into straight runs; consecutive runs share their corner node.
pub fn segments(path: &[usize], cols: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![vec![path[0]]];
    let mut dir = None;
    for w in path.windows(2) {
        let d = step(w[0], w[1], cols);
        if dir.is_some_and(|prev| prev != d) {
            out.push(vec![w[0]]);
        }
        out.last_mut().expect("nonempty").push(w[1]);
        dir = Some(d);
    }
    out
}

/// Interior nodes where the path turns.
fn turns(path: &[usize], cols: usize) -> BTreeSet<usize> {
    path.windows(3)
        .filter(|w| step(w[0], w[1], cols) != step(w[1], w[2], cols))
        .map(|w| w[1])
        .collect()
}

/// Links at even positions within each straight run, never the last link
/// of a run.
pub fn every_second_link(path: &[usize], cols: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for seg in segments(path, cols) {
        let links: Vec<_> = seg.windows(2).map(|w| (w[0], w[1])).collect();
        for (p, &l) in links.iter().enumerate() {
            let pos = p + 1;
            if pos % 2 == 0 && pos != links.len() {
                out.push(l);
            }
        }
    }
    out
}

fn check_paths(req: &RouteRequest, paths: &[Vec<usize>]) -> Result<()> {
    let bad = |m: String| Err(Error::InvalidRoute(m));
    if paths.is_empty() {
        return bad("no path given".into());
    }
    let m = req.node_count();
    let (first, last) = (paths[0][0], *paths[0].last().unwrap_or(&0));
    let mut interior_seen = BTreeSet::new();
    for (k, p) in paths.iter().enumerate() {
        if p.len() < 2 {
            return bad(format!("path {} has fewer than two nodes", k + 1));
        }
        if let Some(&n) = p.iter().find(|&&n| n == 0 || n > m) {
            return bad(format!("path {}: node {n} does not exist", k + 1));
        }
        for w in p.windows(2) {
            let (dr, dc) = step(w[0], w[1], req.cols);
            if dr.abs() + dc.abs() != 1 {
                return bad(format!(
                    "path {}: nodes {} and {} not adjacent, path not connected",
                    k + 1,
                    w[0],
                    w[1]
                ));
            }
        }
        let unique: BTreeSet<_> = p.iter().collect();
        if unique.len() != p.len() {
            return bad(format!("path {} repeats a node", k + 1));
        }
        if p[0] != first || p[p.len() - 1] != last {
            return bad("all paths must share input and output nodes".into());
        }
        for &n in &p[1..p.len() - 1] {
            if !interior_seen.insert(n) {
                return bad(format!("paths are not node-disjoint at node {n}"));
            }
        }
    }
    Ok(())
}

pub fn compile_chain(n: usize, kappa: f64, gamma: f64) -> Result<CouplingConfig> {
    if n < 2 {
        return Err(Error::InvalidRoute(format!("chain needs N >= 2, got {n}")));
    }
    compile_path(&RouteRequest::chain(n, kappa, gamma))
}

pub fn compile_path(req: &RouteRequest) -> Result<CouplingConfig> {
    req.validate()?;
    let grid = grid_links(req.rows, req.cols);
    let (port_in, port_out, links) = if req.style == RouteStyle::AllNodes {
        (1, req.node_count(), all_nodes(req, &grid)?)
    } else {
        let paths = req.resolved_paths();
        check_paths(req, &paths)?;
        let input = paths[0][0];
        let output = paths[0][paths[0].len() - 1];
        (input, output, along_paths(req, &grid, &paths)?)
    };
    Ok(CouplingConfig {
        rows: req.rows,
        cols: req.cols,
        style: req.style,
        kappa: req.kappa,
        kappa_link: req.kappa_link,
        eta: req.eta,
        delta: req.delta,
        port_in,
        port_out,
        off_path: req.off_path,
        links,
    })
}

fn along_paths(
    req: &RouteRequest,
    grid: &[(usize, usize)],
    paths: &[Vec<usize>],
) -> Result<Vec<LinkAssignment>> {
    let mut flow: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
    let mut amps: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut on_nodes = BTreeSet::new();
    let mut corners = BTreeSet::new();
    for p in paths {
        on_nodes.extend(p.iter().copied());
        corners.extend(turns(p, req.cols));
        corners.extend([p[0], p[p.len() - 1]]);
        for w in p.windows(2) {
            if let Some(&prev) = flow.get(&key(w[0], w[1])) {
                if prev != (w[0], w[1]) {
                    return Err(Error::InvalidRoute(format!(
                        "link {}-{} used in both directions",
                        w[0], w[1]
                    )));
                }
            }
            flow.insert(key(w[0], w[1]), (w[0], w[1]));
        }
        if req.amp == AmpPolicy::EverySecondLink {
            amps.extend(
                every_second_link(p, req.cols)
                    .into_iter()
                    .map(|(a, b)| key(a, b)),
            );
        }
    }
    if let AmpPolicy::Explicit(list) = &req.amp {
        for &(a, b) in list {
            if !flow.contains_key(&key(a, b)) {
                return Err(Error::InvalidRoute(format!(
                    "amplifier on {a}-{b} is not on the path"
                )));
            }
            if corners.contains(&a) || corners.contains(&b) {
                return Err(Error::InvalidRoute(format!(
                    "no amplification at corners (link {a}-{b})"
                )));
            }
            amps.insert(key(a, b));
        }
    }
    let input = paths[0][0];
    let degree = grid
        .iter()
        .filter(|(a, b)| *a == input || *b == input)
        .count()
        .max(1);
    let gamma = req.gamma.unwrap_or(req.kappa / degree as f64);
    let hop = req.j.unwrap_or(gamma / 2.0);
    let hop_amp = req.j_amp.unwrap_or(req.gamma_amp / 2.0);
    let dissipative = |from: usize, to: usize, g: f64, h: f64, role| LinkAssignment {
        i: from.min(to),
        j: from.max(to),
        kind: LinkKind::Dissipative,
        hop: h,
        phase: flow_phase(LinkKind::Dissipative, from, to),
        gamma: g,
        role,
    };
    let out = grid
        .iter()
        .map(|&(i, j)| {
            let (on_i, on_j) = (on_nodes.contains(&i), on_nodes.contains(&j));
            if let Some(&(from, to)) = flow.get(&(i, j)) {
                if amps.contains(&(i, j)) {
                    LinkAssignment {
                        i,
                        j,
                        kind: LinkKind::Amplifying,
                        hop: hop_amp,
                        phase: flow_phase(LinkKind::Amplifying, from, to),
                        gamma: req.gamma_amp,
                        role: LinkRole::OnPath,
                    }
                } else {
                    dissipative(from, to, gamma, hop, LinkRole::OnPath)
                }
            } else if on_i && !on_j {
                dissipative(j, i, gamma, hop, LinkRole::PathAdjacent)
            } else if on_j && !on_i {
                dissipative(i, j, gamma, hop, LinkRole::PathAdjacent)
            } else if on_i && on_j {
                dissipative(i, j, 0.0, 0.0, LinkRole::Chord)
            } else {
                match req.off_path {
                    OffPath::UniformDefault => dissipative(i, j, gamma, hop, LinkRole::OffPath),
                    OffPath::Decoupled => dissipative(i, j, 0.0, 0.0, LinkRole::OffPath),
                }
            }
        })
        .collect();
    Ok(out)
}

/// Staggered rates: edges halve away from the input corner (mirrored at the
/// output corner), interior rates are the minimum-norm solution of flow
/// conservation at every node other than source and sink.
fn all_nodes(req: &RouteRequest, grid: &[(usize, usize)]) -> Result<Vec<LinkAssignment>> {
    let (rows, cols, kappa) = (req.rows, req.cols, req.kappa);
    let m = rows * cols;
    let mirror = |n: usize| m + 1 - n;
    let mut fixed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for c in 0..cols - 1 {
        let g = kappa / 2f64.powi(c as i32 + 1);
        let (a, b) = (c + 1, c + 2);
        fixed.insert((a, b), g);
        fixed.insert(key(mirror(a), mirror(b)), g);
    }
    for r in 0..rows - 1 {
        let g = kappa / 2f64.powi(r as i32 + 1);
        let (a, b) = (r * cols + 1, (r + 1) * cols + 1);
        fixed.insert((a, b), g);
        fixed.insert(key(mirror(a), mirror(b)), g);
    }
    let free: Vec<(usize, usize)> = grid
        .iter()
        .copied()
        .filter(|l| !fixed.contains_key(l))
        .collect();
    let interior: Vec<usize> = (2..m).collect();
    let mut a = DMatrix::<f64>::zeros(interior.len(), free.len());
    let mut rhs = DVector::<f64>::zeros(interior.len());
    for (r, &n) in interior.iter().enumerate() {
        for &(i, j) in grid {
            let sign = if j == n {
                1.0
            } else if i == n {
                -1.0
            } else {
                continue;
            };
            match fixed.get(&(i, j)) {
                Some(&g) => rhs[r] -= sign * g,
                None => {
                    let col = free.iter().position(|&l| l == (i, j)).expect("free link");
                    a[(r, col)] += sign;
                }
            }
        }
    }
    let x = if free.is_empty() {
        DVector::zeros(0)
    } else {
        a.clone()
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|e| Error::Numerical(format!("all-nodes least squares: {e}")))?
    };
    let residual = (&a * &x - &rhs).amax();
    if residual > 1e-10 || x.iter().any(|&g| g <= 1e-12) {
        return Err(Error::InvalidRoute(format!(
            "all-nodes staggering has no positive conserving solution on {rows}x{cols}"
        )));
    }
    let scale = req.gamma.map_or(1.0, |g| g / (kappa / 2.0));
    let rate = |l: &(usize, usize)| {
        fixed
            .get(l)
            .copied()
            .unwrap_or_else(|| x[free.iter().position(|f| f == l).expect("free link")])
    };
    Ok(grid
        .iter()
        .map(|l| {
            let gamma = scale * rate(l);
            LinkAssignment {
                i: l.0,
                j: l.1,
                kind: LinkKind::Dissipative,
                hop: req.j.unwrap_or(gamma / 2.0),
                phase: flow_phase(LinkKind::Dissipative, l.0, l.1),
                gamma,
                role: LinkRole::OnPath,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkResidual {
    pub i: usize,
    pub j: usize,
    pub report: DirectionalityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub residuals: Vec<LinkResidual>,
    pub max_phase_residual: f64,
    pub max_magnitude_residual: f64,
    pub stability: StabilityReport,
    /// `None` when the configuration is unstable.
    pub reflection_in: Option<f64>,
    pub t_fwd: Option<f64>,
    pub t_rev: Option<f64>,
}

pub fn verify_config(config: &CouplingConfig) -> Result<VerificationReport> {
    let net = build_lattice(&config.to_lattice_spec())?;
    let residuals: Vec<LinkResidual> = net
        .links
        .iter()
        .map(|l| LinkResidual {
            i: l.spec.i,
            j: l.spec.j,
            report: l.directionality(),
        })
        .collect();
    let max_phase_residual = residuals
        .iter()
        .map(|r| r.report.phase_residual)
        .fold(0.0, f64::max);
    let max_magnitude_residual = residuals
        .iter()
        .map(|r| r.report.magnitude_residual)
        .fold(0.0, f64::max);
    let sys = assemble_adiabatic(&net)?;
    let stability = check_stability(&sys, DEFAULT_MARGIN)?;
    let (mut reflection_in, mut t_fwd, mut t_rev) = (None, None, None);
    if stability.is_stable() {
        let s = Solver::new(&sys)?.scattering(0.0)?;
        let (pi, po) = (BathId::Port(config.port_in), BathId::Port(config.port_out));
        reflection_in = Some(s.element(pi, pi)?.norm());
        t_fwd = Some(s.element(po, pi)?.norm_sqr());
        t_rev = Some(s.element(pi, po)?.norm_sqr());
    }
    Ok(VerificationReport {
        residuals,
        max_phase_residual,
        max_magnitude_residual,
        stability,
        reflection_in,
        t_fwd,
        t_rev,
    })
}
