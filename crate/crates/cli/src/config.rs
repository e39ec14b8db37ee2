//! Run configuration: JSON file + flag overrides, with the parsing helpers
//! for the polarization and backend mini-languages.

use std::path::{Path, PathBuf};

use nvfid::bathgen::LatticeSpec;
use nvfid::device::{builtin_profile, DeviceProfile};
use nvfid::spectral::Window;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Pre-generated bath JSON; when absent the bath is drawn from `lattice`.
    pub bath_file: Option<PathBuf>,
    pub lattice: LatticeSpec,
    /// Magnetic fields (G); one output set per entry.
    pub bz: Vec<f64>,
    /// Inner-nuclei polarization: none | z | x | ztheta:θ | xz:θ1,θ2.
    pub pol: String,
    /// analytic | exact-circuit | shots | noisy.
    pub backend: String,
    pub shots: u64,
    /// Profile for controllable (inner) groups: builtin name or JSON path.
    pub device_profile: String,
    /// Profile for the remaining groups.
    pub simulator_profile: String,
    /// Placement name used by the noisy backend.
    pub placement: String,
    pub tmax: f64,
    pub tsteps: usize,
    pub out: PathBuf,
    pub seed: u64,
    /// Worker threads; 0 = one per core.
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            bath_file: None,
            lattice: LatticeSpec::default(),
            bz: vec![100.0],
            pol: "none".into(),
            backend: "analytic".into(),
            shots: 4096,
            device_profile: "heavy_hex_27".into(),
            simulator_profile: "ideal_simulator".into(),
            placement: "three_pairs".into(),
            tmax: 20.0,
            tsteps: 401,
            out: PathBuf::from("out"),
            seed: LatticeSpec::default().seed,
            jobs: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let f = std::fs::File::open(path)
            .map_err(|e| Failure::Config(format!("cannot open config {}: {e}", path.display())))?;
        serde_json::from_reader(std::io::BufReader::new(f))
            .map_err(|e| Failure::Config(format!("malformed config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if self.bz.is_empty() {
            return Err(Failure::Config("need at least one Bz value".into()));
        }
        if self.shots < 2 {
            return Err(Failure::Config(format!(
                "shots must be >= 2, got {}",
                self.shots
            )));
        }
        if !(self.tmax > 0.0) {
            return Err(Failure::Config(format!("tmax must be > 0, got {}", self.tmax)));
        }
        if self.tsteps < 2 {
            return Err(Failure::Config(format!(
                "tsteps must be >= 2, got {}",
                self.tsteps
            )));
        }
        if let Some(p) = &self.bath_file {
            if !p.is_file() {
                return Err(Failure::Config(format!(
                    "bath file {} does not exist",
                    p.display()
                )));
            }
        }
        parse_polarization(&self.pol)?;
        parse_backend(&self.backend)?;
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.tsteps;
        (0..n)
            .map(|i| self.tmax * i as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Analytic,
    ExactCircuit,
    Shots,
    Noisy,
}

pub fn parse_backend(s: &str) -> Result<Backend, Failure> {
    match s {
        "analytic" => Ok(Backend::Analytic),
        "exact-circuit" => Ok(Backend::ExactCircuit),
        "shots" => Ok(Backend::Shots),
        "noisy" => Ok(Backend::Noisy),
        other => Err(Failure::Config(format!(
            "unknown backend {other:?} (expected analytic | exact-circuit | shots | noisy)"
        ))),
    }
}

/// Bloch vector for the inner nuclei from the `--pol` mini-language.
pub fn parse_polarization(s: &str) -> Result<[f64; 3], Failure> {
    let bad = || Failure::Config(format!("unknown polarization {s:?}"));
    match s.split_once(':') {
        None => match s {
            "none" => Ok([0.0, 0.0, 0.0]),
            "z" => Ok([0.0, 0.0, 1.0]),
            "x" => Ok([1.0, 0.0, 0.0]),
            _ => Err(bad()),
        },
        Some(("ztheta", arg)) => {
            let t: f64 = arg.parse().map_err(|_| bad())?;
            Ok([0.0, 0.0, t.cos()])
        }
        Some(("xz", arg)) => {
            let (a, b) = arg.split_once(',').ok_or_else(bad)?;
            let t1: f64 = a.parse().map_err(|_| bad())?;
            let t2: f64 = b.parse().map_err(|_| bad())?;
            Ok([t1.sin() * t2.sin(), 0.0, t1.cos()])
        }
        Some(_) => Err(bad()),
    }
}

/// `none` or `gaussian:SIGMA`.
pub fn parse_window(s: &str) -> Result<Window, Failure> {
    match s {
        "none" => Ok(Window::None),
        _ => match s.split_once(':') {
            Some(("gaussian", arg)) => {
                let sigma: f64 = arg.parse().map_err(|_| {
                    Failure::Config(format!("bad gaussian sigma in window {s:?}"))
                })?;
                Ok(Window::Gaussian { sigma })
            }
            _ => Err(Failure::Config(format!(
                "unknown window {s:?} (expected none | gaussian:SIGMA)"
            ))),
        },
    }
}

/// Builtin profile name, otherwise a path to a profile JSON.
pub fn resolve_profile(name: &str) -> Result<DeviceProfile, Failure> {
    if let Some(p) = builtin_profile(name) {
        return Ok(p);
    }
    let path = Path::new(name);
    if !path.is_file() {
        return Err(Failure::Config(format!(
            "profile {name:?} is neither a builtin profile nor an existing file"
        )));
    }
    DeviceProfile::from_path(path)
        .map_err(|e| Failure::Config(format!("malformed profile {name}: {e}")))
}

/// Field value as a filename token (200 -> "200", 52.5 -> "52p5").
pub fn bz_token(bz: f64) -> String {
    if bz == bz.trunc() {
        format!("{}", bz as i64)
    } else {
        format!("{bz}").replace('.', "p").replace('-', "m")
    }
}
