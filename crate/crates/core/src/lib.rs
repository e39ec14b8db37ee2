//! Simulation suite for the free-induction decay of an NV⁻ electron spin
//! dephasing in a ¹³C nuclear bath.
//!
//! The pipeline: [`bathgen`] draws a nuclear configuration from the diamond
//! lattice; [`physics`] turns positions into hyperfine couplings and
//! evaluates the dephasing factor φ(t) in closed form; [`qsim`] reproduces
//! the same φ(t) with a gate-level circuit (one nucleus-ancilla qubit pair
//! per nucleus, polarization oracles, controlled conditional-evolution
//! gates); [`device`] adds coupling-map routing, ZZ crosstalk and shot
//! noise; [`planner`] splits a large bath into backend-sized groups whose
//! results multiply back exactly; [`spectral`] recovers the frequency
//! quasi-distribution (CHER) and its negativity from any φ(t) series.

pub mod bathgen;
pub mod device;
pub mod error;
pub mod linalg;
pub mod physics;
pub mod planner;
pub mod qsim;
pub mod spectral;

pub use bathgen::{assign_polarizations, generate_bath, BathConfiguration, LatticeSpec};
pub use device::{builtin_profile, run_group_on_device, DeviceProfile, Placement};
pub use error::{Error, Result};
pub use physics::{
    bath_nuclei, dephasing_factor_analytic, dephasing_factor_bruteforce, hyperfine_vector,
    precession_spec, Constants, DephasingSeries, PrecessionSpec,
};
pub use planner::{build_group, combine_groups, partition_bath, PartitionPlan};
pub use qsim::{
    build_aqs_circuit, gate_params, run_group, GateOp, GroupSpec, Polarization, QuantumState,
    RunMode,
};
pub use spectral::{cher, negativity, CherResult, Window};
