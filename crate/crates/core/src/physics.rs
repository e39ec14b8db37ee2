//! Physical constants, hyperfine vectors, precession specs, and the two
//! reference computations of the dephasing factor.
//!
//! Units are rad/µs for angular frequencies, µs for times, Gauss for fields
//! and nm for lengths, which keeps all quantities O(1) on the free-induction
//! timescale. Every unit conversion happens in [`Constants::nv`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bathgen::BathConfiguration;
use crate::error::{Error, Result};
use crate::linalg::{norm, Vec3};

/// Radius below which the Fermi-contact term invalidates the dipolar form.
pub const EXCLUSION_RADIUS_NM: f64 = 0.5;

/// NV-center constants in the crate's working units.
#[derive(Clone, Debug)]
pub struct Constants {
    /// Zero-field splitting D (rad/µs).
    pub zero_field_splitting: f64,
    /// Electron gyromagnetic ratio (rad µs⁻¹ G⁻¹).
    pub gamma_e: f64,
    /// ¹³C gyromagnetic ratio (rad µs⁻¹ G⁻¹).
    pub gamma_c: f64,
    /// µ₀ħγₑγ_C/4π (rad µs⁻¹ nm³).
    pub dipolar_prefactor: f64,
}

impl Constants {
    /// Constants for the NV⁻ electron spin and a ¹³C bath.
    pub fn nv() -> Self {
        let two_pi = std::f64::consts::TAU;
        // SI ingredients for the dipolar prefactor.
        let mu0_over_4pi = 1e-7; // T m / A
        let hbar = 1.054_571_817e-34; // J s
        let gamma_e_si = two_pi * 2.8025e10; // rad s⁻¹ T⁻¹  (2.8025 MHz/G)
        let gamma_c_si = two_pi * 1.0704e7; // rad s⁻¹ T⁻¹  (1.0704 kHz/G)
        // rad m³/s → rad nm³/µs: ×1e27 (m³→nm³) ×1e-6 (s⁻¹→µs⁻¹)
        let prefactor = mu0_over_4pi * hbar * gamma_e_si * gamma_c_si * 1e21;
        Constants {
            zero_field_splitting: two_pi * 2.87e3,
            gamma_e: two_pi * 2.8025,
            gamma_c: two_pi * 1.0704e-3,
            dipolar_prefactor: prefactor,
        }
    }
}

impl Default for Constants {
    fn default() -> Self {
        Constants::nv()
    }
}

/// Which electron sublevel pairs with mS = 0 to form the qubit manifold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// mS = +1 (the default manifold).
    Plus,
    /// mS = −1.
    Minus,
}

/// Per-nucleus precession data conditioned on the electron state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PrecessionSpec {
    /// Larmor frequency Ω₀ = γ_C·B_z (rad/µs), electron in mS = 0.
    pub omega0: f64,
    /// Ω⃗₁ = A⃗_z + (0, 0, Ω₀) (rad/µs), electron in mS = +1.
    pub omega1_vec: Vec3,
    /// |Ω⃗₁|.
    pub omega1: f64,
    /// Precession axis û = Ω⃗₁/Ω₁; (0,0,1) by convention when Ω₁ = 0.
    pub axis: Vec3,
    /// Set when Ω₁ vanished and the axis is conventional.
    pub degenerate: bool,
}

/// Dipolar hyperfine vector A⃗_z = (A_zx, A_zy, A_zz) for a nucleus at `r` (nm).
///
/// A_zj = (pref/|r|³)·[δ_zj − 3(ê·ê_z)(ê·ê_j)] with ê = r/|r|.
pub fn hyperfine_vector(r: Vec3, constants: &Constants) -> Result<Vec3> {
    let d = norm(r);
    if d < EXCLUSION_RADIUS_NM {
        return Err(Error::InsideExclusionRadius(d));
    }
    let e = [r[0] / d, r[1] / d, r[2] / d];
    let f = constants.dipolar_prefactor / (d * d * d);
    let ez = e[2];
    Ok([
        f * (-3.0 * ez * e[0]),
        f * (-3.0 * ez * e[1]),
        f * (1.0 - 3.0 * ez * ez),
    ])
}

/// Precession spec for the {0, +1} manifold.
pub fn precession_spec(a_z: Vec3, bz: f64, constants: &Constants) -> Result<PrecessionSpec> {
    precession_spec_branch(a_z, bz, Branch::Plus, constants)
}

/// Precession spec with an explicit mS = ±1 branch.
pub fn precession_spec_branch(
    a_z: Vec3,
    bz: f64,
    branch: Branch,
    constants: &Constants,
) -> Result<PrecessionSpec> {
    if bz < 0.0 {
        return Err(Error::InvalidInput(format!("Bz must be >= 0, got {bz}")));
    }
    let omega0 = constants.gamma_c * bz;
    let sign = match branch {
        Branch::Plus => 1.0,
        Branch::Minus => -1.0,
    };
    let omega1_vec = [
        sign * a_z[0],
        sign * a_z[1],
        sign * a_z[2] + omega0,
    ];
    let omega1 = norm(omega1_vec);
    let (axis, degenerate) = if omega1 > 0.0 {
        (scale_unit(omega1_vec, omega1), false)
    } else {
        ([0.0, 0.0, 1.0], true)
    };
    Ok(PrecessionSpec {
        omega0,
        omega1_vec,
        omega1,
        axis,
        degenerate,
    })
}

fn scale_unit(v: Vec3, n: f64) -> Vec3 {
    [v[0] / n, v[1] / n, v[2] / n]
}

/// One nucleus as seen by the dephasing engines.
#[derive(Clone, Debug)]
pub struct BathNucleus {
    pub spec: PrecessionSpec,
    pub polarization: Vec3,
}

/// Hyperfine + precession data for every site of a bath at field `bz`.
pub fn bath_nuclei(
    bath: &BathConfiguration,
    bz: f64,
    constants: &Constants,
) -> Result<Vec<BathNucleus>> {
    bath.sites
        .iter()
        .map(|s| {
            let a_z = hyperfine_vector(s.r, constants)?;
            Ok(BathNucleus {
                spec: precession_spec(a_z, bz, constants)?,
                polarization: s.p,
            })
        })
        .collect()
}

/// Closed-form single-nucleus dephasing factor.
///
/// The degenerate Ω₁ = 0 case reduces to cos(Ω₀t/2) − i p_z sin(Ω₀t/2).
pub fn single_nucleus_factor(spec: &PrecessionSpec, p: Vec3, t: f64) -> Complex64 {
    let c0 = (spec.omega0 * t / 2.0).cos();
    let s0 = (spec.omega0 * t / 2.0).sin();
    if spec.degenerate {
        return Complex64::new(c0, -p[2] * s0);
    }
    let c1 = (spec.omega1 * t / 2.0).cos();
    let s1 = (spec.omega1 * t / 2.0).sin();
    let [ux, uy, uz] = spec.axis;
    let [px, py, pz] = p;
    Complex64::new(c0, -pz * s0) * c1
        + uz * Complex64::new(s0, pz * c0) * s1
        + Complex64::new(0.0, (px * ux + py * uy) * c0 * s1)
        + Complex64::new(0.0, (px * uy - py * ux) * s0 * s1)
}

/// Dephasing factor of a whole bath on a time grid (product over nuclei).
pub fn dephasing_factor_analytic(
    nuclei: &[BathNucleus],
    bz: f64,
    times: &[f64],
) -> Result<DephasingSeries> {
    validate_times(times)?;
    let values = times
        .iter()
        .map(|&t| {
            nuclei
                .iter()
                .map(|n| single_nucleus_factor(&n.spec, n.polarization, t))
                .product()
        })
        .collect();
    Ok(DephasingSeries {
        times: times.to_vec(),
        values,
        meta: SeriesMeta {
            backend: "analytic".into(),
            bz,
            group: "all".into(),
        },
    })
}

/// Brute-force dephasing factor at a single time.
///
/// Builds Û₀ = exp[−i(Ω₀σ_z)t/2] and Û₁ = exp[−i(Ω⃗₁·σ⃗)t/2] as explicit
/// 2×2 matrices, forms ρ = (I + p⃗·σ⃗)/2 and evaluates ∏ₖ Tr[Û₁†Û₀ρ].
/// Serves as the independent oracle for the closed form and for the circuit
/// backend.
pub fn dephasing_factor_bruteforce(nuclei: &[BathNucleus], t: f64) -> Complex64 {
    nuclei
        .iter()
        .map(|n| {
            let u0 = axis_angle_unitary([0.0, 0.0, 1.0], n.spec.omega0 * t);
            let u1 = if n.spec.omega1 > 0.0 {
                axis_angle_unitary(n.spec.axis, n.spec.omega1 * t)
            } else {
                identity2()
            };
            let rho = density_from_bloch(n.polarization);
            let m = mat_mul(&adjoint(&u1), &u0);
            let prod = mat_mul(&m, &rho);
            prod[0][0] + prod[1][1]
        })
        .product()
}

type Mat2 = [[Complex64; 2]; 2];

fn identity2() -> Mat2 {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    [[one, zero], [zero, one]]
}

/// exp[−i(û·σ⃗)φ/2] = cos(φ/2)·I − i sin(φ/2)·(û·σ⃗).
fn axis_angle_unitary(axis: Vec3, angle: f64) -> Mat2 {
    let c = (angle / 2.0).cos();
    let s = (angle / 2.0).sin();
    let [ux, uy, uz] = axis;
    let i = Complex64::i();
    [
        [
            Complex64::new(c, 0.0) - i * s * uz,
            -i * s * Complex64::new(ux, -uy),
        ],
        [
            -i * s * Complex64::new(ux, uy),
            Complex64::new(c, 0.0) + i * s * uz,
        ],
    ]
}

fn density_from_bloch(p: Vec3) -> Mat2 {
    let [px, py, pz] = p;
    [
        [
            Complex64::new((1.0 + pz) / 2.0, 0.0),
            Complex64::new(px / 2.0, -py / 2.0),
        ],
        [
            Complex64::new(px / 2.0, py / 2.0),
            Complex64::new((1.0 - pz) / 2.0, 0.0),
        ],
    ]
}

fn adjoint(m: &Mat2) -> Mat2 {
    [
        [m[0][0].conj(), m[1][0].conj()],
        [m[0][1].conj(), m[1][1].conj()],
    ]
}

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "time grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Metadata carried with every dephasing series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub backend: String,
    /// Field in Gauss.
    pub bz: f64,
    pub group: String,
}

/// Complex φ(t) samples on a time grid, the central exchange format between
/// backends, the group combiner and the spectral analysis.
#[derive(Clone, Debug)]
pub struct DephasingSeries {
    /// Strictly increasing times (µs).
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    pub meta: SeriesMeta,
}

impl DephasingSeries {
    /// CSV with one metadata comment line and a `t_us,re_phi,im_phi` header.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# backend={},Bz_G={},group={}",
            self.meta.backend, self.meta.bz, self.meta.group
        )?;
        writeln!(w, "t_us,re_phi,im_phi")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(w, "{},{},{}", t, v.re, v.im)?;
        }
        Ok(())
    }

    pub fn to_path(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn read_csv<R: std::io::BufRead>(r: R) -> Result<Self> {
        let mut meta = SeriesMeta {
            backend: String::new(),
            bz: 0.0,
            group: String::new(),
        };
        let mut times = Vec::new();
        let mut values = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line == "t_us,re_phi,im_phi" {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                for kv in rest.trim().split(',') {
                    match kv.split_once('=') {
                        Some(("backend", v)) => meta.backend = v.to_string(),
                        Some(("Bz_G", v)) => {
                            meta.bz = v
                                .parse()
                                .map_err(|_| Error::MalformedCsv(format!("bad Bz_G: {v}")))?
                        }
                        Some(("group", v)) => meta.group = v.to_string(),
                        _ => {}
                    }
                }
                continue;
            }
            let mut cols = line.split(',');
            let mut next = || {
                cols.next()
                    .ok_or_else(|| Error::MalformedCsv(format!("short row: {line}")))?
                    .parse::<f64>()
                    .map_err(|_| Error::MalformedCsv(format!("bad number in row: {line}")))
            };
            let t = next()?;
            let re = next()?;
            let im = next()?;
            times.push(t);
            values.push(Complex64::new(re, im));
        }
        if times.is_empty() {
            return Err(Error::MalformedCsv("no data rows".into()));
        }
        Ok(DephasingSeries {
            times,
            values,
            meta,
        })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}
