//! Canonical Hamiltonian ensemble representation (CHER): recover the
//! quasi-distribution ŵ(ω) from a sampled dephasing series and quantify
//! nonclassicality through its negativity.
//!
//! The series is sampled on t ≥ 0 only; it is extended to negative times by
//! Hermitian symmetry φ(−t) = φ(t)*. For longitudinal polarization
//! (pₓ = p_y = 0, including unpolarized baths) this is exact: every term of
//! the closed-form factor is a real-even or imaginary-odd function of t.
//! Transverse polarization adds an even imaginary cross term, so there the
//! extension is a definition — exactly what a real ŵ(ω) requires. The transform
//! ŵ(ω) = (1/2π)∫φ(t)e^{iωt}dt is evaluated by trapezoidal quadrature on
//! the extended grid, so ŵ is real up to rounding; the imaginary residue is
//! asserted below 1e-10 and dropped.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::physics::DephasingSeries;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Window {
    None,
    /// Multiply φ(t) by exp(−t²/2σ²) before transforming.
    Gaussian { sigma: f64 },
}

impl Window {
    fn factor(&self, t: f64) -> f64 {
        match *self {
            Window::None => 1.0,
            Window::Gaussian { sigma } => (-t * t / (2.0 * sigma * sigma)).exp(),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Window::None => "none".into(),
            Window::Gaussian { sigma } => format!("gaussian({sigma})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CherResult {
    /// Symmetric frequency grid (rad/µs).
    pub omegas: Vec<f64>,
    /// Real weights ŵ(ω) (per rad/µs).
    pub weights: Vec<f64>,
    /// −Σ_{ŵ<0} ŵ·Δω.
    pub negativity: f64,
    pub window: String,
}

impl CherResult {
    pub fn delta_omega(&self) -> f64 {
        self.omegas[1] - self.omegas[0]
    }

    /// Σŵ·Δω; ≈ (windowed) φ(0) when the series decays within the grid.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum::<f64>() * self.delta_omega()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# window={}", self.window)?;
        writeln!(w, "omega_rad_per_us,weight")?;
        for (o, v) in self.omegas.iter().zip(&self.weights) {
            writeln!(w, "{o},{v}")?;
        }
        writeln!(w, "# negativity={}", self.negativity)?;
        Ok(())
    }

    pub fn to_path(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::InvalidInput("need at least two time points".into()));
    }
    if times[0] != 0.0 {
        return Err(Error::InvalidInput(format!(
            "time grid must start at 0, starts at {}",
            times[0]
        )));
    }
    let dt = times[1] - times[0];
    if dt <= 0.0
        || times
            .windows(2)
            .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt)
    {
        return Err(Error::InvalidInput("time grid must be uniform".into()));
    }
    Ok(dt)
}

/// ŵ(ω) on a symmetric `num_freqs`-bin grid spanning ±π/Δt.
pub fn cher(series: &DephasingSeries, num_freqs: usize, window: Window) -> Result<CherResult> {
    if num_freqs < 2 {
        return Err(Error::InvalidInput("num_freqs must be >= 2".into()));
    }
    if let Window::Gaussian { sigma } = window {
        if sigma <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "gaussian window sigma must be > 0, got {sigma}"
            )));
        }
    }
    let dt = uniform_step(&series.times)?;
    let n = series.times.len();
    // Hermitian extension onto t = −T..T (2n−1 points)
    let mut ts = Vec::with_capacity(2 * n - 1);
    let mut phis = Vec::with_capacity(2 * n - 1);
    for k in (1..n).rev() {
        ts.push(-series.times[k]);
        phis.push(series.values[k].conj() * window.factor(series.times[k]));
    }
    for k in 0..n {
        ts.push(series.times[k]);
        phis.push(series.values[k] * window.factor(series.times[k]));
    }
    // t = 0 is its own mirror point: the extension demands φ(0) = φ(0)*, so
    // any imaginary part there (noisy backends can produce one) is averaged
    // away instead of leaking a constant imaginary offset into ŵ.
    phis[n - 1] = Complex64::new(phis[n - 1].re, 0.0);
    let nyquist = std::f64::consts::PI / dt;
    let d_omega = 2.0 * nyquist / num_freqs as f64;
    let omegas: Vec<f64> = (0..num_freqs)
        .map(|i| (i as f64 - num_freqs as f64 / 2.0) * d_omega)
        .collect();
    let m = ts.len();
    let complex_weights: Vec<Complex64> = omegas
        .par_iter()
        .map(|&omega| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..m {
                // trapezoid: half weight at the two extension endpoints
                let w = if k == 0 || k == m - 1 { 0.5 } else { 1.0 };
                acc += w * phis[k] * Complex64::from_polar(1.0, omega * ts[k]);
            }
            acc * dt / std::f64::consts::TAU
        })
        .collect();
    let max_im = complex_weights
        .iter()
        .map(|c| c.im.abs())
        .fold(0.0, f64::max);
    assert!(
        max_im < 1e-10,
        "Hermitian extension left imaginary residue {max_im}"
    );
    let weights: Vec<f64> = complex_weights.iter().map(|c| c.re).collect();
    let negativity = weights.iter().filter(|w| **w < 0.0).sum::<f64>() * -d_omega;
    Ok(CherResult {
        omegas,
        weights,
        negativity,
        window: window.label(),
    })
}

/// −Σ_{ŵ<0} ŵ·Δω (already cached on the result, recomputed here).
pub fn negativity(result: &CherResult) -> f64 {
    result
        .weights
        .iter()
        .filter(|w| **w < 0.0)
        .sum::<f64>()
        * -result.delta_omega()
}

/// Forward transform φ(t) = Σ ŵ(ω)e^{−iωt}·Δω, for round-trip checks.
pub fn reconstruct_phi(result: &CherResult, times: &[f64]) -> Vec<Complex64> {
    let d_omega = result.delta_omega();
    times
        .par_iter()
        .map(|&t| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (o, w) in result.omegas.iter().zip(&result.weights) {
                acc += w * Complex64::from_polar(1.0, -o * t);
            }
            acc * d_omega
        })
        .collect()
}

/// Local maxima standing above `threshold_frac`·max(ŵ); the coarse peak
/// count used for structural spectrum comparisons.
pub fn count_peaks(weights: &[f64], threshold_frac: f64) -> usize {
    let max = weights.iter().cloned().fold(f64::MIN, f64::max);
    let cut = threshold_frac * max;
    weights
        .windows(3)
        .filter(|w| w[1] > w[0] && w[1] > w[2] && w[1] > cut)
        .count()
}
