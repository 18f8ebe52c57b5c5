//! Parametric pump frequency planning.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::LinkKind;
use crate::route::CouplingConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Process {
    Conversion,
    Amplification,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pump {
    pub name: String,
    pub frequency: f64,
    pub phase: f64,
    pub process: Process,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QubitCheck {
    pub delta: f64,
    pub drive: f64,
    pub hop_pump: f64,
    pub k1: f64,
    pub k2: f64,
    pub k1_integer: bool,
    pub k2_integer: bool,
}

impl QubitCheck {
    pub fn is_safe(&self) -> bool {
        !self.k1_integer && !self.k2_integer
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PumpPlan {
    pub pumps: Vec<Pump>,
    pub warnings: Vec<String>,
    pub qubit: Option<QubitCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PumpScheme {
    /// Three-mode mixer: nodes `a`, `b` and link mode `c`.
    Jpc {
        omega_a: f64,
        omega_b: f64,
        omega_c: f64,
        kind: LinkKind,
    },
    /// Two cavities around a driven qubit.
    Qubit {
        omega_1: f64,
        omega_q: f64,
        omega_2: f64,
    },
}

const FREQ_TOL: f64 = 1e-12;

fn positive(name: &str, w: f64) -> Result<()> {
    if w.is_finite() && w > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{name} must be positive, got {w}"
        )))
    }
}

fn distinct(a: (&str, f64), b: (&str, f64)) -> Result<()> {
    if (a.1 - b.1).abs() <= FREQ_TOL * a.1.abs().max(b.1.abs()) {
        Err(Error::DegeneratePump(format!(
            "{} = {} gives a zero-frequency pump",
            a.0, b.0
        )))
    } else {
        Ok(())
    }
}

fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() < 1e-9
}

fn collisions(pumps: &[Pump]) -> Vec<String> {
    let mut out = Vec::new();
    for (k, p) in pumps.iter().enumerate() {
        for q in &pumps[k + 1..] {
            if (p.frequency - q.frequency).abs() <= FREQ_TOL * p.frequency.max(q.frequency) {
                out.push(format!(
                    "pump collision: {} = {} = {}",
                    p.name, q.name, p.frequency
                ));
            }
        }
    }
    out
}

pub fn plan_pumps(scheme: PumpScheme) -> Result<PumpPlan> {
    match scheme {
        PumpScheme::Jpc {
            omega_a,
            omega_b,
            omega_c,
            kind,
        } => jpc(omega_a, omega_b, omega_c, kind, 0.0),
        PumpScheme::Qubit {
            omega_1,
            omega_q,
            omega_2,
        } => qubit(omega_1, omega_q, omega_2),
    }
}

fn jpc(wa: f64, wb: f64, wc: f64, kind: LinkKind, hop_phase: f64) -> Result<PumpPlan> {
    positive("omega_a", wa)?;
    positive("omega_b", wb)?;
    positive("omega_c", wc)?;
    distinct(("omega_a", wa), ("omega_b", wb))?;
    distinct(("omega_b", wb), ("omega_c", wc))?;
    distinct(("omega_a", wa), ("omega_c", wc))?;
    let (node_link, process) = match kind {
        LinkKind::Dissipative => ((wb - wc).abs(), Process::Conversion),
        LinkKind::Amplifying => (wb + wc, Process::Amplification),
    };
    let other = match kind {
        LinkKind::Dissipative => (wa - wc).abs(),
        LinkKind::Amplifying => wa + wc,
    };
    let pumps = vec![
        Pump {
            name: "P,a".into(),
            frequency: node_link,
            phase: 0.0,
            process,
        },
        Pump {
            name: "P,b".into(),
            frequency: other,
            phase: 0.0,
            process,
        },
        Pump {
            name: "P,c".into(),
            frequency: (wa - wb).abs(),
            phase: hop_phase,
            process: Process::Conversion,
        },
    ];
    let warnings = collisions(&pumps);
    Ok(PumpPlan {
        pumps,
        warnings,
        qubit: None,
    })
}

fn qubit(w1: f64, wq: f64, w2: f64) -> Result<PumpPlan> {
    positive("omega_1", w1)?;
    positive("omega_q", wq)?;
    positive("omega_2", w2)?;
    distinct(("omega_1", w1), ("omega_q", wq))?;
    distinct(("omega_q", wq), ("omega_2", w2))?;
    let (d1, d2) = (w1 - wq, wq - w2);
    if (d1 - d2).abs() > 1e-9 * d1.abs().max(d2.abs()) {
        return Err(Error::InvalidInput(format!(
            "qubit scheme needs omega_1 - omega_q = omega_q - omega_2, got {d1} and {d2}"
        )));
    }
    if d1 < 0.0 {
        return Err(Error::InvalidInput(
            "qubit scheme needs omega_1 > omega_q > omega_2".into(),
        ));
    }
    let delta = d1;
    let k1 = (w1 + wq) / (w1 - wq);
    let k2 = (w2 + wq) / (wq - w2);
    let check = QubitCheck {
        delta,
        drive: delta,
        hop_pump: 2.0 * delta,
        k1,
        k2,
        k1_integer: is_integer(k1),
        k2_integer: is_integer(k2),
    };
    let mut warnings = Vec::new();
    if check.k1_integer {
        warnings.push(format!(
            "k1 = {k1} is an integer: counter-rotating terms become resonant"
        ));
    }
    if check.k2_integer {
        warnings.push(format!(
            "k2 = {k2} is an integer: counter-rotating terms become resonant"
        ));
    }
    let pumps = vec![
        Pump {
            name: "drive".into(),
            frequency: delta,
            phase: 0.0,
            process: Process::Conversion,
        },
        Pump {
            name: "hop".into(),
            frequency: 2.0 * delta,
            phase: 0.0,
            process: Process::Conversion,
        },
    ];
    Ok(PumpPlan {
        pumps,
        warnings,
        qubit: Some(check),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkPumps {
    pub i: usize,
    pub j: usize,
    pub plan: PumpPlan,
}

/// Checkerboard node frequencies (`omega_even` on nodes with even
/// `row + col`), one link frequency, and a three-pump plan per link.
pub fn plan_lattice_pumps(
    config: &CouplingConfig,
    omega_even: f64,
    omega_odd: f64,
    omega_link: f64,
) -> Result<Vec<LinkPumps>> {
    let freq = |n: usize| {
        let (r, c) = ((n - 1) / config.cols, (n - 1) % config.cols);
        if (r + c) % 2 == 0 {
            omega_even
        } else {
            omega_odd
        }
    };
    config
        .links
        .iter()
        .map(|l| {
            let plan = jpc(freq(l.i), freq(l.j), omega_link, l.kind, l.phase)?;
            Ok(LinkPumps {
                i: l.i,
                j: l.j,
                plan,
            })
        })
        .collect()
}
