//! Python bindings: bath generation, the analytic and circuit dephasing
//! backends, conditional-evolution gate parameters, and the spectral
//! transform.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use nvfid::bathgen::{assign_polarizations, generate_bath, BathConfiguration, LatticeSpec};
use nvfid::device::{builtin_profile, run_group_on_device};
use nvfid::physics::{
    bath_nuclei, dephasing_factor_analytic, hyperfine_vector, precession_spec, BathNucleus,
    Constants, DephasingSeries, SeriesMeta,
};
use nvfid::qsim::{gate_params, run_group, GroupSpec, Polarization, RunMode};
use nvfid::spectral::{cher, Window};

fn err(e: nvfid::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A sampled ¹³C configuration around the defect.
#[pyclass(name = "Bath")]
struct Bath {
    inner: BathConfiguration,
}

#[pymethods]
impl Bath {
    #[staticmethod]
    #[pyo3(signature = (seed=11, target_count=520, region_radius=4.0, polarization_radius=1.0))]
    fn generate(
        seed: u64,
        target_count: usize,
        region_radius: f64,
        polarization_radius: f64,
    ) -> PyResult<Self> {
        let spec = LatticeSpec {
            seed,
            target_count,
            region_radius,
            polarization_radius,
            ..LatticeSpec::default()
        };
        Ok(Bath {
            inner: generate_bath(&spec).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Bath {
            inner: BathConfiguration::from_path(std::path::Path::new(path)).map_err(err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner
            .to_path(std::path::Path::new(path))
            .map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.sites.len()
    }

    /// Number of sites inside the polarization radius.
    fn inner_count(&self) -> usize {
        self.inner.inner_count()
    }

    /// New bath with Bloch vector `p` on every inner site, p = 0 elsewhere.
    fn polarize(&self, p: [f64; 3]) -> PyResult<Self> {
        Ok(Bath {
            inner: assign_polarizations(&self.inner, p).map_err(err)?,
        })
    }

    /// Site positions (nm), sorted by distance from the defect.
    fn positions(&self) -> Vec<[f64; 3]> {
        self.inner.sites.iter().map(|s| s.r).collect()
    }

    fn polarizations(&self) -> Vec<[f64; 3]> {
        self.inner.sites.iter().map(|s| s.p).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Bath({} sites, {} inner, seed={})",
            self.inner.sites.len(),
            self.inner.inner_count(),
            self.inner.spec.seed
        )
    }
}

fn subset(bath: &Bath, indices: Option<Vec<usize>>, bz: f64) -> PyResult<Vec<BathNucleus>> {
    let all = bath_nuclei(&bath.inner, bz, &Constants::nv()).map_err(err)?;
    match indices {
        None => Ok(all),
        Some(idx) => idx
            .into_iter()
            .map(|k| {
                all.get(k)
                    .cloned()
                    .ok_or_else(|| PyValueError::new_err(format!("site index {k} out of range")))
            })
            .collect(),
    }
}

fn group_spec(bath: &Bath, indices: &[usize], bz: f64) -> PyResult<GroupSpec> {
    let nuclei = subset(bath, Some(indices.to_vec()), bz)?;
    let pairs = nuclei
        .into_iter()
        .map(|n| Ok((n.spec, Polarization::from_vector(n.polarization).map_err(err)?)))
        .collect::<PyResult<Vec<_>>>()?;
    GroupSpec::with_layout(pairs).map_err(err)
}

/// Closed-form dephasing factor φ(t) of the (sub)bath at field `bz` (G).
#[pyfunction]
#[pyo3(signature = (bath, bz, times, indices=None))]
fn analytic_series(
    bath: &Bath,
    bz: f64,
    times: Vec<f64>,
    indices: Option<Vec<usize>>,
) -> PyResult<Vec<Complex64>> {
    let nuclei = subset(bath, indices, bz)?;
    Ok(dephasing_factor_analytic(&nuclei, bz, &times)
        .map_err(err)?
        .values)
}

/// φ(t) from the gate-level circuit backend (exact, or sampled when
/// `shots` is given).
#[pyfunction]
#[pyo3(signature = (bath, indices, bz, times, shots=None, seed=0))]
fn circuit_series(
    bath: &Bath,
    indices: Vec<usize>,
    bz: f64,
    times: Vec<f64>,
    shots: Option<u64>,
    seed: u64,
) -> PyResult<Vec<Complex64>> {
    let group = group_spec(bath, &indices, bz)?;
    let mode = match shots {
        None => RunMode::Exact,
        Some(n) => RunMode::Shots { shots: n, seed },
    };
    Ok(run_group(&group, bz, &times, mode).map_err(err)?.values)
}

/// φ(t) through the routed device pipeline (coupling-map routing, CU
/// decomposition, ZZ crosstalk) on a named placement of a builtin profile.
#[pyfunction]
#[pyo3(signature = (bath, indices, bz, times, profile="heavy_hex_27", placement="left_right"))]
fn device_series(
    bath: &Bath,
    indices: Vec<usize>,
    bz: f64,
    times: Vec<f64>,
    profile: &str,
    placement: &str,
) -> PyResult<Vec<Complex64>> {
    let group = group_spec(bath, &indices, bz)?;
    let prof = builtin_profile(profile)
        .ok_or_else(|| PyValueError::new_err(format!("unknown builtin profile {profile:?}")))?;
    let pl = prof
        .placements
        .get(placement)
        .ok_or_else(|| PyValueError::new_err(format!("unknown placement {placement:?}")))?;
    Ok(run_group_on_device(&group, &prof, pl, bz, &times, RunMode::Exact)
        .map_err(err)?
        .values)
}

/// Frequency quasi-distribution of a φ(t) series. Returns
/// `(omegas, weights, negativity)`; `sigma` enables a gaussian window.
#[pyfunction]
#[pyo3(signature = (times, values, num_freqs=2048, sigma=None))]
fn spectrum(
    times: Vec<f64>,
    values: Vec<Complex64>,
    num_freqs: usize,
    sigma: Option<f64>,
) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
    let series = DephasingSeries {
        times,
        values,
        meta: SeriesMeta {
            backend: "python".into(),
            bz: 0.0,
            group: "all".into(),
        },
    };
    let window = match sigma {
        None => Window::None,
        Some(s) => Window::Gaussian { sigma: s },
    };
    let result = cher(&series, num_freqs, window).map_err(err)?;
    Ok((result.omegas, result.weights, result.negativity))
}

/// Single-qubit parameters (θ, φ, λ, γ) of the conditional-evolution gate
/// for a nucleus at `r` (nm), field `bz` (G), time `t` (µs):
/// e^{iγ}U(θ,φ,λ) = Û₁(t)Û₀†(t).
#[pyfunction]
fn conditional_gate_params(r: [f64; 3], bz: f64, t: f64) -> PyResult<(f64, f64, f64, f64)> {
    let c = Constants::nv();
    let a = hyperfine_vector(r, &c).map_err(err)?;
    let spec = precession_spec(a, bz, &c).map_err(err)?;
    let p = gate_params(&spec, t);
    Ok((p.theta, p.phi, p.lambda, p.gamma))
}

#[pymodule]
fn nvfid_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Bath>()?;
    m.add_function(wrap_pyfunction!(analytic_series, m)?)?;
    m.add_function(wrap_pyfunction!(circuit_series, m)?)?;
    m.add_function(wrap_pyfunction!(device_series, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_gate_params, m)?)?;
    Ok(())
}
