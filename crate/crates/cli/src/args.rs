//! Command-line arguments.

use std::path::PathBuf;

use activenet::LinkKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "ACTIVENET_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "activenet",
    version,
    about = "Scattering, noise, spectra and dynamics of active oscillator lattices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile a [route] config into link assignments and verify them.
    CompileRoute {
        #[command(flatten)]
        common: Common,
    },
    /// Port-to-port scattering over a frequency grid.
    Scatter {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        ports: Ports,
    },
    /// Output noise spectrum, gain and added noise at the output port.
    Noise {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        ports: Ports,
    },
    /// Eigenvalues of the dynamical matrix and exceptional-point checks.
    /// A `--param` with several values becomes the flow parameter.
    Eigs {
        #[command(flatten)]
        common: Common,
    },
    /// Mean-field time evolution from an initial state and/or port drive.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        evolve: EvolveArgs,
    },
    /// Steady-state node amplitudes under a drive on one port.
    Map {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        map: MapArgs,
    },
    /// Cartesian parameter sweep of another subcommand.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Subcommand to run at every point (defaults to `[sweep] run`).
        #[arg(long)]
        run: Option<Analysis>,
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        ports: Ports,
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        evolve: EvolveArgs,
    },
    /// Pump frequencies for the three-mode mixer or qubit link schemes.
    Pumps(PumpArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Config file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Treat stability warnings as errors.
    #[arg(long)]
    pub strict: bool,
    /// Parameter override `KEY=VALUES`, with VALUES a comma list or
    /// `start:stop:steps`. Repeatable.
    #[arg(long = "param", value_name = "KEY=VALUES", allow_hyphen_values = true)]
    pub params: Vec<String>,
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct Grid {
    #[arg(long, default_value_t = Grid::default().omega_min, allow_negative_numbers = true)]
    pub omega_min: f64,
    #[arg(long, default_value_t = Grid::default().omega_max, allow_negative_numbers = true)]
    pub omega_max: f64,
    #[arg(long, default_value_t = Grid::default().omega_steps)]
    pub omega_steps: usize,
}

#[derive(Debug, Clone, Copy, Default, Args, Serialize)]
pub struct Ports {
    /// Input port node (defaults to the route input or the first port).
    #[arg(long)]
    pub port_in: Option<usize>,
    /// Output port node (defaults to the route output or the last port).
    #[arg(long)]
    pub port_out: Option<usize>,
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct MapArgs {
    /// Driven port (defaults to the input port).
    #[arg(long)]
    pub port: Option<usize>,
    /// Drive frequency.
    #[arg(long, default_value_t = MapArgs::default().omega, allow_negative_numbers = true)]
    pub omega: f64,
    /// Real drive amplitude.
    #[arg(long, default_value_t = MapArgs::default().amplitude, allow_negative_numbers = true)]
    pub amplitude: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvolveArgs {
    #[arg(long, default_value_t = EvolveArgs::default().t_max)]
    pub t_max: f64,
    /// Number of output intervals; `samples + 1` times are written.
    #[arg(long, default_value_t = EvolveArgs::default().samples)]
    pub samples: usize,
    /// Integrator step.
    #[arg(long, default_value_t = EvolveArgs::default().step)]
    pub step: f64,
    /// Initial node amplitude `NODE=RE[,IM]`. Repeatable.
    #[arg(long = "init", value_name = "NODE=RE[,IM]", allow_hyphen_values = true)]
    pub init: Vec<String>,
    /// Port drive `PORT=RE[,IM]`, oscillating as exp(-i omega t).
    #[arg(long, value_name = "PORT=RE[,IM]", allow_hyphen_values = true)]
    pub drive: Option<String>,
    #[arg(long, default_value_t = EvolveArgs::default().drive_omega, allow_negative_numbers = true)]
    pub drive_omega: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            omega_min: -3.0,
            omega_max: 3.0,
            omega_steps: 121,
        }
    }
}

impl Default for MapArgs {
    fn default() -> Self {
        Self {
            port: None,
            omega: 0.0,
            amplitude: 1.0,
        }
    }
}

impl Default for EvolveArgs {
    fn default() -> Self {
        Self {
            t_max: 10.0,
            samples: 100,
            step: 1e-3,
            init: Vec::new(),
            drive: None,
            drive_omega: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    CompileRoute,
    Scatter,
    Noise,
    Map,
    Evolve,
}

impl Analysis {
    pub fn name(self) -> &'static str {
        match self {
            Analysis::CompileRoute => "compile-route",
            Analysis::Scatter => "scatter",
            Analysis::Noise => "noise",
            Analysis::Map => "map",
            Analysis::Evolve => "evolve",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Three-mode mixer; `--omegas A,B,C` (node a, node b, link c).
    Jpc,
    /// Driven qubit between two cavities; `--omegas W1,WQ,W2`.
    Qubit,
    /// Checkerboard plan for a compiled route; `--config` plus
    /// `--omegas EVEN,ODD,LINK`.
    Lattice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    Dissipative,
    Amplifying,
}

impl From<KindArg> for LinkKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Dissipative => LinkKind::Dissipative,
            KindArg::Amplifying => LinkKind::Amplifying,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PumpArgs {
    #[arg(long)]
    pub scheme: Scheme,
    #[arg(long, value_delimiter = ',', required = true)]
    pub omegas: Vec<f64>,
    /// Link kind for the three-mode mixer.
    #[arg(long, default_value = "dissipative")]
    pub kind: KindArg,
    /// Route config for `--scheme lattice`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}
