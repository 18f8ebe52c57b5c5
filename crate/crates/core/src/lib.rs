//! Active oscillator lattices with dissipative links: assembly of the linear
//! dynamics, scattering, noise, eigenvalue flows, time-domain response and a
//! compiler from propagation paths to coupling configurations.

pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod network;
pub mod noise;
pub mod pumps;
pub mod route;
pub mod scattering;
pub mod spectra;
pub mod timedomain;

pub use dynamics::{
    assemble_adiabatic, assemble_full, check_stability, Bath, BathRole, DynamicalSystem, Mode,
    Stability, StabilityReport, Variant, DEFAULT_MARGIN,
};
pub use error::{Error, ErrorCategory, Result};
pub use linalg::{phasor, C64};
pub use network::{
    build_lattice, BathId, Direction, DirectionalityReport, LatticeSpec, Link, LinkKind, LinkSpec,
    Network, Node, NodeSpec, PortSpec,
};
pub use noise::{
    added_noise, mode_added_noise, mode_noise, occupation_spectrum, output_noise_psd, NoiseReport,
    Occupancies,
};
pub use pumps::{plan_lattice_pumps, plan_pumps, PumpPlan, PumpScheme};
pub use route::{
    compile_chain, compile_path, grid_links, verify_config, AmpPolicy, CouplingConfig,
    LinkAssignment, LinkRole, OffPath, RouteRequest, RouteStyle, VerificationReport,
};
pub use scattering::{
    isolation_bandwidth, scattering_matrix, transmission_spectrum, IsolationReport, SMatrix,
    Solver, Spectrum,
};
pub use spectra::{
    classify_point, detect_exceptional_point, eigen_flow, flow_point, EigenFlow, EpReport,
    EpThresholds, FlowPoint,
};
pub use timedomain::{
    integrate, markov_pair_reference, port_drive, steady_state_direct, steady_state_response,
    AmplitudeMap, MapEntry, Trajectory,
};
