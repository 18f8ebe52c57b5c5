//! Subcommand execution.

use std::cmp::Ordering;
use std::fs;
use std::path::{Path, PathBuf};

use activenet::{
    added_noise, assemble_adiabatic, assemble_full, build_lattice, check_stability, compile_path,
    detect_exceptional_point, eigen_flow, integrate, output_noise_psd, phasor, plan_lattice_pumps,
    plan_pumps, port_drive, steady_state_response, transmission_spectrum, verify_config,
    CouplingConfig, DynamicalSystem, EpThresholds, Error, LatticeSpec, Network, NoiseReport,
    PumpScheme, Variant, C64, DEFAULT_MARGIN,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    Analysis, Cli, Command, Common, EvolveArgs, Grid, MapArgs, Ports, PumpArgs, Scheme,
};
use crate::config::{apply_param, linspace, parse_config, Config, Source, SweepParam};
use crate::error::{CliError, Result};
use crate::output::{self, write_atomic};

/// Everything needed to reproduce a run besides the config file itself.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Option<String>,
    pub out: String,
    pub params: Vec<SweepParam>,
    pub options: serde_json::Value,
    pub deterministic: bool,
    pub version: &'static str,
}

impl RunManifest {
    fn new(
        subcommand: &str,
        config: Option<&Path>,
        out: &Path,
        params: Vec<SweepParam>,
        options: serde_json::Value,
    ) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            config: config.map(|p| p.display().to_string()),
            out: out.display().to_string(),
            params,
            options,
            deterministic: true,
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// Parses `KEY=VALUES` where VALUES is `a,b,c` or `start:stop:steps`.
pub fn parse_param(arg: &str) -> Result<SweepParam> {
    let bad = |m: &str| CliError::Usage(format!("--param `{arg}`: {m}"));
    let (key, spec) = arg
        .split_once('=')
        .ok_or_else(|| bad("expected KEY=VALUES"))?;
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(&format!("`{s}` is not a number")))
    };
    let values = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [from, to, steps] = parts[..] else {
            return Err(bad("ranges are start:stop:steps"));
        };
        let steps: usize = steps
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| bad("steps must be a positive integer"))?;
        linspace(number(from)?, number(to)?, steps)
    } else {
        spec.split(',').map(number).collect::<Result<Vec<_>>>()?
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(bad("values must be finite"));
    }
    Ok(SweepParam {
        key: key.trim().to_string(),
        values,
    })
}

/// Parsed config with single-valued `--param` overrides applied; returns
/// the remaining multi-valued parameters separately.
pub fn load(
    common: &Common,
    warnings: &mut Vec<String>,
) -> Result<(Config, Vec<SweepParam>, Vec<SweepParam>)> {
    let path = &common.config;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let loaded = parse_config(&text, &path.display().to_string(), common.strict)?;
    warnings.extend(loaded.warnings);
    let mut config = loaded.config;
    let params = common
        .params
        .iter()
        .map(|p| parse_param(p))
        .collect::<Result<Vec<_>>>()?;
    let mut axes = Vec::new();
    for p in &params {
        if p.values.len() == 1 {
            apply_param(&mut config, &p.key, p.values[0]).map_err(CliError::Usage)?;
        } else {
            apply_param(&mut config.clone(), &p.key, p.values[0]).map_err(CliError::Usage)?;
            axes.push(p.clone());
        }
    }
    Ok((config, axes, params))
}

/// A config resolved to a lattice, with the route's ports when compiled.
#[derive(Debug, Clone)]
pub struct Model {
    pub spec: LatticeSpec,
    pub compiled: Option<CouplingConfig>,
    pub port_in: Option<usize>,
    pub port_out: Option<usize>,
}

pub fn model(config: &Config) -> Result<Model> {
    match &config.source {
        Source::Route(req) => {
            if config.strict && req.gamma_amp >= req.kappa {
                return Err(CliError::Rejected(format!(
                    "route.gamma_amp = {} violates the stability bound gamma_amp < kappa (kappa = {})",
                    req.gamma_amp, req.kappa
                )));
            }
            let compiled = compile_path(req)?;
            Ok(Model {
                spec: compiled.to_lattice_spec(),
                port_in: Some(compiled.port_in),
                port_out: Some(compiled.port_out),
                compiled: Some(compiled),
            })
        }
        Source::Lattice(spec) => {
            let mut nodes: Vec<usize> = spec.ports.iter().map(|p| p.node).collect();
            nodes.sort_unstable();
            Ok(Model {
                spec: spec.clone(),
                compiled: None,
                port_in: nodes.first().copied(),
                port_out: nodes.last().copied(),
            })
        }
    }
}

pub fn network(config: &Config) -> Result<Network> {
    Ok(build_lattice(&model(config)?.spec)?)
}

/// Assembles the dynamical system for the config's model; strict configs
/// must be stable.
pub fn system(config: &Config, model: &Model) -> Result<DynamicalSystem> {
    let net = build_lattice(&model.spec)?;
    let sys = match config.model {
        Variant::Adiabatic => assemble_adiabatic(&net)?,
        Variant::Full => assemble_full(&net),
    };
    if config.strict {
        let report = check_stability(&sys, DEFAULT_MARGIN)?;
        if !report.is_stable() {
            return Err(CliError::Rejected(format!(
                "unstable configuration (max Re eigenvalue = {:e}) rejected in strict mode",
                report.max_real
            )));
        }
    }
    Ok(sys)
}

fn ports(model: &Model, ports: &Ports) -> Result<(usize, usize)> {
    let missing = |which: &str| {
        CliError::Usage(format!(
            "no {which} port: the config has no ports, pass --port-{which}"
        ))
    };
    let port_in = ports
        .port_in
        .or(model.port_in)
        .ok_or_else(|| missing("in"))?;
    let port_out = ports
        .port_out
        .or(model.port_out)
        .ok_or_else(|| missing("out"))?;
    Ok((port_in, port_out))
}

fn omega_grid(grid: &Grid) -> Result<Vec<f64>> {
    if grid.omega_steps == 0 {
        return Err(CliError::Usage("--omega-steps must be positive".into()));
    }
    if grid.omega_steps > 1 && grid.omega_min.partial_cmp(&grid.omega_max) != Some(Ordering::Less) {
        return Err(CliError::Usage(
            "--omega-min must be below --omega-max".into(),
        ));
    }
    Ok(linspace(grid.omega_min, grid.omega_max, grid.omega_steps))
}

fn complex_arg(flag: &str, arg: &str) -> Result<(usize, C64)> {
    let bad = || CliError::Usage(format!("{flag} `{arg}`: expected N=RE[,IM]"));
    let (n, v) = arg.split_once('=').ok_or_else(bad)?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    let mut parts = v.split(',').map(|s| s.trim().parse::<f64>());
    let re = parts.next().ok_or_else(bad)?.map_err(|_| bad())?;
    let im = match parts.next() {
        Some(x) => x.map_err(|_| bad())?,
        None => 0.0,
    };
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok((n, C64::new(re, im)))
}

/// Options shared by the analyses a sweep can run.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisOptions {
    pub grid: Grid,
    pub ports: Ports,
    pub map: MapArgs,
    pub evolve: EvolveArgs,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir,
            files: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.files.push(path);
        Ok(())
    }
}

/// Runs one analysis for `config`, writing its files into `dir`.
pub fn analyze(
    analysis: Analysis,
    config: &Config,
    opts: &AnalysisOptions,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let model = model(config)?;
    let mut out = Writer::new(dir)?;
    match analysis {
        Analysis::CompileRoute => {
            let compiled = model
                .compiled
                .as_ref()
                .ok_or_else(|| CliError::Usage("compile-route needs a [route] config".into()))?;
            let report = verify_config(compiled)?;
            let lattice = Config {
                source: Source::Lattice(model.spec.clone()),
                sweep_run: None,
                sweep: Vec::new(),
                ..config.clone()
            };
            out.put("coupling.csv", &output::coupling_csv(compiled))?;
            out.put("lattice.toml", crate::config::to_toml(&lattice).as_bytes())?;
            out.put("verification.json", &output::json_bytes(&report))?;
        }
        Analysis::Scatter => {
            let sys = system(config, &model)?;
            let (pi, po) = ports(&model, &opts.ports)?;
            let spectrum = transmission_spectrum(&sys, pi, po, &omega_grid(&opts.grid)?)?;
            out.put("scatter.csv", &output::scatter_csv(&spectrum))?;
        }
        Analysis::Noise => {
            let sys = system(config, &model)?;
            let (pi, po) = ports(&model, &opts.ports)?;
            let reports = omega_grid(&opts.grid)?
                .par_iter()
                .map(|&w| match added_noise(&sys, pi, po, w, &config.baths) {
                    Err(Error::ZeroGain { .. }) => output_noise_psd(&sys, po, w, &config.baths),
                    other => other,
                })
                .collect::<activenet::Result<Vec<NoiseReport>>>()?;
            out.put("noise.csv", &output::noise_csv(&reports))?;
            out.put("contributions.csv", &output::contributions_csv(&reports))?;
        }
        Analysis::Map => {
            let sys = system(config, &model)?;
            let port = match opts.map.port {
                Some(p) => p,
                None => ports(&model, &opts.ports)?.0,
            };
            let map = steady_state_response(
                &sys,
                port,
                C64::new(opts.map.amplitude, 0.0),
                opts.map.omega,
            )?;
            out.put("map.csv", &output::map_csv(&map))?;
        }
        Analysis::Evolve => {
            let sys = system(config, &model)?;
            let ev = &opts.evolve;
            if ev.init.is_empty() && ev.drive.is_none() {
                return Err(CliError::Usage("evolve needs --init and/or --drive".into()));
            }
            if !(ev.t_max.is_finite() && ev.t_max > 0.0) || ev.samples == 0 {
                return Err(CliError::Usage(
                    "--t-max and --samples must be positive".into(),
                ));
            }
            let mut initial = vec![C64::new(0.0, 0.0); sys.mode_count()];
            for arg in &ev.init {
                let (node, z) = complex_arg("--init", arg)?;
                let k = sys.node_mode(node).ok_or_else(|| {
                    CliError::Usage(format!("--init: node {node} does not exist"))
                })?;
                initial[k] = z;
            }
            let base = match &ev.drive {
                Some(arg) => {
                    let (port, z) = complex_arg("--drive", arg)?;
                    port_drive(&sys, port, z)?
                }
                None => vec![C64::new(0.0, 0.0); sys.bath_count()],
            };
            let w = ev.drive_omega;
            let drive = |t: f64| {
                let ph = phasor(-w * t);
                base.iter().map(|u| u * ph).collect()
            };
            let times = linspace(0.0, ev.t_max, ev.samples + 1);
            let traj = integrate(&sys, &initial, drive, &times, ev.step)?;
            out.put("trajectory.csv", &output::trajectory_csv(&sys, &traj))?;
        }
    }
    Ok(out.files)
}

fn eigs(config: &Config, axes: &[SweepParam], dir: &Path) -> Result<Vec<PathBuf>> {
    let (key, values) = match axes {
        [] => (None, vec![0.0]),
        [axis] => (Some(axis.key.as_str()), axis.values.clone()),
        _ => {
            return Err(CliError::Usage(
                "eigs takes at most one multi-valued --param".into(),
            ))
        }
    };
    let template = |p: f64| -> activenet::Result<Network> {
        let mut c = config.clone();
        if let Some(key) = key {
            apply_param(&mut c, key, p).map_err(Error::InvalidInput)?;
        }
        let spec = match model(&c) {
            Ok(m) => m.spec,
            Err(CliError::Core(e)) => return Err(e),
            Err(e) => return Err(Error::InvalidInput(e.to_string())),
        };
        build_lattice(&spec)
    };
    let flow = eigen_flow(template, &values)?;
    let reports = detect_exceptional_point(&flow, &EpThresholds::default());
    let mut out = Writer::new(dir)?;
    out.put("eigs.csv", &output::eigs_csv(&flow))?;
    out.put("ep.csv", &output::ep_csv(&reports))?;
    Ok(out.files)
}

fn analysis_named(name: &str) -> Option<Analysis> {
    [
        Analysis::CompileRoute,
        Analysis::Scatter,
        Analysis::Noise,
        Analysis::Map,
        Analysis::Evolve,
    ]
    .into_iter()
    .find(|a| a.name() == name)
}

/// All combinations of the axis values; the first axis varies slowest.
pub fn cartesian(axes: &[SweepParam]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

fn sweep_point(
    analysis: Analysis,
    config: &Config,
    axes: &[SweepParam],
    values: &[f64],
    opts: &AnalysisOptions,
    out: &Path,
    name: &str,
) -> Result<()> {
    let mut c = config.clone();
    for (axis, &v) in axes.iter().zip(values) {
        apply_param(&mut c, &axis.key, v).map_err(CliError::Usage)?;
    }
    let tmp = out.join(format!(".{name}.tmp"));
    let target = out.join(name);
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    }
    if let Err(e) = analyze(analysis, &c, opts, &tmp) {
        let _ = fs::remove_dir_all(&tmp);
        return Err(e);
    }
    if target.exists() {
        fs::remove_dir_all(&target).map_err(|e| CliError::io(&target, e))?;
    }
    fs::rename(&tmp, &target).map_err(|e| CliError::io(&target, e))
}

fn sweep(
    analysis: Analysis,
    config: &Config,
    axes: Vec<SweepParam>,
    opts: &AnalysisOptions,
    out: &Path,
) -> Result<(Vec<PathBuf>, Option<CliError>)> {
    let points = cartesian(&axes);
    let width = (points.len().saturating_sub(1)).to_string().len().max(4);
    let names: Vec<String> = (0..points.len())
        .map(|k| format!("point_{k:0width$}"))
        .collect();
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let results: Vec<Result<()>> = points
        .par_iter()
        .zip(&names)
        .map(|(values, name)| sweep_point(analysis, config, &axes, values, opts, out, name))
        .collect();
    let mut header = vec!["point".to_string()];
    header.extend(axes.iter().map(|a| a.key.clone()));
    header.extend(["status".to_string(), "message".to_string()]);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = points
        .iter()
        .zip(&names)
        .zip(&results)
        .map(|((values, name), r)| {
            let mut row = vec![name.clone()];
            row.extend(values.iter().map(|v| output::num(*v)));
            match r {
                Ok(()) => row.extend(["ok".to_string(), String::new()]),
                Err(e) => row.extend([e.category().name().to_string(), e.to_string()]),
            }
            row
        });
    let index = out.join("index.csv");
    write_atomic(&index, &output::csv_bytes(&header, rows))?;
    let mut files: Vec<PathBuf> = names
        .iter()
        .zip(&results)
        .filter(|(_, r)| r.is_ok())
        .map(|(n, _)| out.join(n))
        .collect();
    files.push(index);
    let failure = results
        .into_iter()
        .zip(&names)
        .find_map(|(r, n)| r.err().map(|e| (n.clone(), e)))
        .map(|(n, e)| match e {
            CliError::Core(core) => CliError::Core(core),
            CliError::Usage(m) => CliError::Usage(format!("{n}: {m}")),
            CliError::Rejected(m) => CliError::Rejected(format!("{n}: {m}")),
            other => other,
        });
    Ok((files, failure))
}

fn write_manifest(out: &Path, manifest: &RunManifest, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let path = out.join("manifest.json");
    write_atomic(&path, &output::json_bytes(manifest))?;
    files.push(path);
    Ok(())
}

fn single(
    analysis: Analysis,
    common: &Common,
    opts: AnalysisOptions,
    options: serde_json::Value,
    warnings: &mut Vec<String>,
) -> Result<Vec<PathBuf>> {
    let (config, axes, params) = load(common, warnings)?;
    if let Some(axis) = axes.first() {
        return Err(CliError::Usage(format!(
            "--param {} has several values; use `sweep`",
            axis.key
        )));
    }
    let mut files = analyze(analysis, &config, &opts, &common.out)?;
    let manifest = RunManifest::new(
        analysis.name(),
        Some(&common.config),
        &common.out,
        params,
        options,
    );
    write_manifest(&common.out, &manifest, &mut files)?;
    Ok(files)
}

fn defaults() -> AnalysisOptions {
    AnalysisOptions {
        grid: Grid::default(),
        ports: Ports::default(),
        map: MapArgs::default(),
        evolve: EvolveArgs::default(),
    }
}

fn to_json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("options serialize")
}

/// Runs the parsed command line and returns the files written. Warnings are
/// collected even when the run fails.
pub fn run(cli: Cli, warnings: &mut Vec<String>) -> Result<Vec<PathBuf>> {
    let base = defaults();
    match cli.command {
        Command::CompileRoute { common } => single(
            Analysis::CompileRoute,
            &common,
            base,
            serde_json::Value::Null,
            warnings,
        ),
        Command::Scatter {
            common,
            grid,
            ports,
        } => {
            let options = serde_json::json!({ "grid": grid, "ports": ports });
            single(
                Analysis::Scatter,
                &common,
                AnalysisOptions {
                    grid,
                    ports,
                    ..base
                },
                options,
                warnings,
            )
        }
        Command::Noise {
            common,
            grid,
            ports,
        } => {
            let options = serde_json::json!({ "grid": grid, "ports": ports });
            single(
                Analysis::Noise,
                &common,
                AnalysisOptions {
                    grid,
                    ports,
                    ..base
                },
                options,
                warnings,
            )
        }
        Command::Map { common, map } => {
            let options = to_json(&map);
            single(
                Analysis::Map,
                &common,
                AnalysisOptions { map, ..base },
                options,
                warnings,
            )
        }
        Command::Evolve { common, evolve } => {
            let options = to_json(&evolve);
            single(
                Analysis::Evolve,
                &common,
                AnalysisOptions { evolve, ..base },
                options,
                warnings,
            )
        }
        Command::Eigs { common } => {
            let (config, axes, params) = load(&common, warnings)?;
            let mut files = eigs(&config, &axes, &common.out)?;
            let manifest = RunManifest::new(
                "eigs",
                Some(&common.config),
                &common.out,
                params,
                serde_json::Value::Null,
            );
            write_manifest(&common.out, &manifest, &mut files)?;
            Ok(files)
        }
        Command::Sweep {
            common,
            run,
            grid,
            ports,
            map,
            evolve,
        } => {
            let (config, cli_axes, params) = load(&common, warnings)?;
            let analysis = match (run, &config.sweep_run) {
                (Some(a), _) => a,
                (None, Some(name)) => analysis_named(name)
                    .ok_or_else(|| CliError::Usage(format!("cannot sweep `{name}`")))?,
                (None, None) => {
                    return Err(CliError::Usage(
                        "sweep needs --run or `run` in [sweep]".into(),
                    ))
                }
            };
            let mut axes = config.sweep.clone();
            for axis in cli_axes {
                match axes.iter_mut().find(|a| a.key == axis.key) {
                    Some(a) => *a = axis,
                    None => axes.push(axis),
                }
            }
            if axes.is_empty() {
                return Err(CliError::Usage(
                    "sweep needs at least one multi-valued parameter".into(),
                ));
            }
            let opts = AnalysisOptions {
                grid,
                ports,
                map,
                evolve,
            };
            let options = serde_json::json!({ "run": analysis, "analysis": to_json(&opts), "axes": to_json(&axes) });
            let (mut files, failure) = sweep(analysis, &config, axes, &opts, &common.out)?;
            let manifest =
                RunManifest::new("sweep", Some(&common.config), &common.out, params, options);
            write_manifest(&common.out, &manifest, &mut files)?;
            match failure {
                Some(e) => Err(e),
                None => Ok(files),
            }
        }
        Command::Pumps(args) => pumps(&args, warnings),
    }
}

fn pumps(args: &PumpArgs, warnings: &mut Vec<String>) -> Result<Vec<PathBuf>> {
    let w = &args.omegas;
    if w.len() != 3 {
        return Err(CliError::Usage(format!(
            "--omegas takes three frequencies, got {}",
            w.len()
        )));
    }
    let mut out = Writer::new(&args.out)?;
    match args.scheme {
        Scheme::Jpc | Scheme::Qubit => {
            let scheme = if args.scheme == Scheme::Jpc {
                PumpScheme::Jpc {
                    omega_a: w[0],
                    omega_b: w[1],
                    omega_c: w[2],
                    kind: args.kind.into(),
                }
            } else {
                PumpScheme::Qubit {
                    omega_1: w[0],
                    omega_q: w[1],
                    omega_2: w[2],
                }
            };
            let plan = plan_pumps(scheme)?;
            warnings.extend(plan.warnings.iter().cloned());
            out.put("pumps.json", &output::json_bytes(&plan))?;
        }
        Scheme::Lattice => {
            let path = args
                .config
                .as_ref()
                .ok_or_else(|| CliError::Usage("--scheme lattice needs --config".into()))?;
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let loaded = parse_config(&text, &path.display().to_string(), false)?;
            warnings.extend(loaded.warnings);
            let compiled = model(&loaded.config)?
                .compiled
                .ok_or_else(|| CliError::Usage("--scheme lattice needs a [route] config".into()))?;
            let plans = plan_lattice_pumps(&compiled, w[0], w[1], w[2])?;
            for p in &plans {
                warnings.extend(
                    p.plan
                        .warnings
                        .iter()
                        .map(|m| format!("link {}-{}: {m}", p.i, p.j)),
                );
            }
            out.put("pumps.json", &output::json_bytes(&plans))?;
        }
    }
    let mut files = out.files;
    let manifest = RunManifest::new(
        "pumps",
        args.config.as_deref(),
        &args.out,
        Vec::new(),
        to_json(args),
    );
    write_manifest(&args.out, &manifest, &mut files)?;
    Ok(files)
}
