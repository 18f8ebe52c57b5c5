//! CSV/JSON rendering and atomic file output.
//!
//! Every CSV has a header row, complex numbers are split into `_re`/`_im`
//! columns and floats use Rust's shortest round-trip formatting, so the
//! same inputs give byte-identical files.

use std::fs;
use std::path::Path;

use activenet::{
    AmplitudeMap, CouplingConfig, DynamicalSystem, EigenFlow, EpReport, NoiseReport, Spectrum,
    Trajectory, C64,
};
use serde::Serialize;

use crate::error::{CliError, Result};

/// Shortest round-trip form; negative zero is written as `0.0`.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        "0.0".into()
    } else {
        format!("{x:?}")
    }
}

fn complex(z: C64) -> [String; 2] {
    [num(z.re), num(z.im)]
}

/// Renders rows under `header`.
pub fn csv_bytes<I>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv write");
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        w.write_record(&row).expect("in-memory csv write");
    }
    w.into_inner().expect("in-memory csv flush")
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("json serialization");
    out.push(b'\n');
    out
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn coupling_csv(config: &CouplingConfig) -> Vec<u8> {
    csv_bytes(
        &["i", "j", "kind", "role", "gamma", "hop", "phase"],
        config.links.iter().map(|l| {
            vec![
                l.i.to_string(),
                l.j.to_string(),
                l.kind.to_string(),
                l.role.to_string(),
                num(l.gamma),
                num(l.hop),
                num(l.phase),
            ]
        }),
    )
}

pub fn scatter_csv(spectrum: &Spectrum) -> Vec<u8> {
    csv_bytes(
        &[
            "omega",
            "t_fwd",
            "t_rev",
            "r_in",
            "r_out",
            "s_in_in_re",
            "s_in_in_im",
            "s_out_in_re",
            "s_out_in_im",
            "s_in_out_re",
            "s_in_out_im",
            "s_out_out_re",
            "s_out_out_im",
        ],
        spectrum.points.iter().map(|p| {
            let mut row = vec![
                num(p.omega),
                num(p.t_fwd),
                num(p.t_rev),
                num(p.r_in),
                num(p.r_out),
            ];
            for z in [p.s_in_in, p.s_out_in, p.s_in_out, p.s_out_out] {
                row.extend(complex(z));
            }
            row
        }),
    )
}

/// One row per frequency; `gain` and `added_noise` are blank where the
/// port-to-port gain vanishes.
pub fn noise_csv(reports: &[NoiseReport]) -> Vec<u8> {
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    csv_bytes(
        &["omega", "psd", "gain", "added_noise"],
        reports
            .iter()
            .map(|r| vec![num(r.omega), num(r.psd), opt(r.gain), opt(r.added_noise)]),
    )
}

pub fn contributions_csv(reports: &[NoiseReport]) -> Vec<u8> {
    csv_bytes(
        &["omega", "bath", "weight", "occupancy", "psd"],
        reports.iter().flat_map(|r| {
            r.contributions.iter().map(|c| {
                vec![
                    num(r.omega),
                    c.bath.to_string(),
                    num(c.weight),
                    num(c.occupancy),
                    num(c.psd),
                ]
            })
        }),
    )
}

pub fn eigs_csv(flow: &EigenFlow) -> Vec<u8> {
    csv_bytes(
        &["parameter", "index", "re", "im"],
        flow.points.iter().flat_map(|p| {
            p.eigenvalues
                .iter()
                .enumerate()
                .map(|(k, e)| vec![num(p.parameter), k.to_string(), num(e.re), num(e.im)])
        }),
    )
}

pub fn ep_csv(reports: &[EpReport]) -> Vec<u8> {
    csv_bytes(
        &[
            "parameter",
            "center_re",
            "center_im",
            "cluster_size",
            "diameter",
            "condition_number",
            "rank",
            "defect",
            "is_ep",
        ],
        reports.iter().map(|r| {
            let [re, im] = complex(r.center);
            vec![
                num(r.parameter),
                re,
                im,
                r.cluster_size.to_string(),
                num(r.diameter),
                num(r.condition_number),
                r.rank.to_string(),
                r.defect.to_string(),
                r.is_ep.to_string(),
            ]
        }),
    )
}

/// Node amplitudes only; link modes of the full model are left out.
pub fn trajectory_csv(sys: &DynamicalSystem, traj: &Trajectory) -> Vec<u8> {
    let nodes: Vec<(usize, usize)> = (1..=sys.rows * sys.cols)
        .filter_map(|n| sys.node_mode(n).map(|k| (n, k)))
        .collect();
    csv_bytes(
        &["t", "node", "re", "im", "abs"],
        traj.times.iter().zip(&traj.states).flat_map(|(t, state)| {
            nodes.iter().map(move |&(n, k)| {
                let z = state[k];
                vec![num(*t), n.to_string(), num(z.re), num(z.im), num(z.norm())]
            })
        }),
    )
}

pub fn map_csv(map: &AmplitudeMap) -> Vec<u8> {
    csv_bytes(
        &["row", "col", "node", "abs", "phase", "re", "im"],
        map.entries.iter().map(|e| {
            let z = e.amplitude;
            vec![
                e.row.to_string(),
                e.col.to_string(),
                e.node.to_string(),
                num(z.norm()),
                num(z.arg()),
                num(z.re),
                num(z.im),
            ]
        }),
    )
}
