//! Gate-level state-vector backend for the conditional-evolution circuit:
//! state preparation, polarization oracles, the Rz layer, controlled-U gates
//! with parameters derived from the precession specs, and electron-qubit
//! tomography.
//!
//! Qubit ordering: electron = 0, pair i occupies (nucleus 2i+1, ancilla 2i+2).
//! Basis index bit q corresponds to qubit q (little-endian).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{norm, Vec3};
use crate::physics::{DephasingSeries, PrecessionSpec, SeriesMeta};

/// Hard cap on register width (2^24 amplitudes ≈ 256 MB).
pub const MAX_QUBITS: usize = 24;

#[derive(Clone, Debug, PartialEq)]
pub enum GateOp {
    H(usize),
    X(usize),
    Cx { control: usize, target: usize },
    Rz { qubit: usize, angle: f64 },
    U { qubit: usize, theta: f64, phi: f64, lambda: f64 },
    GphaseU { qubit: usize, theta: f64, phi: f64, lambda: f64, gamma: f64 },
    Cu { control: usize, target: usize, theta: f64, phi: f64, lambda: f64, gamma: f64 },
    Swap(usize, usize),
    /// exp(−i·angle·σ_z⊗σ_z/2); used by the crosstalk channel.
    Zz { a: usize, b: usize, angle: f64 },
}

impl GateOp {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            GateOp::H(q) | GateOp::X(q) | GateOp::Rz { qubit: q, .. } => vec![q],
            GateOp::U { qubit: q, .. } | GateOp::GphaseU { qubit: q, .. } => vec![q],
            GateOp::Cx { control, target } => vec![control, target],
            GateOp::Cu { control, target, .. } => vec![control, target],
            GateOp::Swap(a, b) | GateOp::Zz { a, b, .. } => vec![a, b],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            GateOp::H(_) => "h",
            GateOp::X(_) => "x",
            GateOp::Cx { .. } => "cx",
            GateOp::Rz { .. } => "rz",
            GateOp::U { .. } => "u",
            GateOp::GphaseU { .. } => "gphase_u",
            GateOp::Cu { .. } => "cu",
            GateOp::Swap(..) => "swap",
            GateOp::Zz { .. } => "zz",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            GateOp::Rz { angle, .. } => vec![angle],
            GateOp::U { theta, phi, lambda, .. } => vec![theta, phi, lambda],
            GateOp::GphaseU { theta, phi, lambda, gamma, .. }
            | GateOp::Cu { theta, phi, lambda, gamma, .. } => vec![theta, phi, lambda, gamma],
            GateOp::Zz { angle, .. } => vec![angle],
            _ => vec![],
        }
    }

    /// Remap qubit indices through `f`.
    pub fn map_qubits(&self, f: impl Fn(usize) -> usize) -> GateOp {
        match *self {
            GateOp::H(q) => GateOp::H(f(q)),
            GateOp::X(q) => GateOp::X(f(q)),
            GateOp::Cx { control, target } => GateOp::Cx { control: f(control), target: f(target) },
            GateOp::Rz { qubit, angle } => GateOp::Rz { qubit: f(qubit), angle },
            GateOp::U { qubit, theta, phi, lambda } => {
                GateOp::U { qubit: f(qubit), theta, phi, lambda }
            }
            GateOp::GphaseU { qubit, theta, phi, lambda, gamma } => {
                GateOp::GphaseU { qubit: f(qubit), theta, phi, lambda, gamma }
            }
            GateOp::Cu { control, target, theta, phi, lambda, gamma } => GateOp::Cu {
                control: f(control),
                target: f(target),
                theta,
                phi,
                lambda,
                gamma,
            },
            GateOp::Swap(a, b) => GateOp::Swap(f(a), f(b)),
            GateOp::Zz { a, b, angle } => GateOp::Zz { a: f(a), b: f(b), angle },
        }
    }
}

/// Debug dump: JSON list of {kind, qubits, params}.
pub fn dump_circuit(gates: &[GateOp]) -> String {
    let items: Vec<serde_json::Value> = gates
        .iter()
        .map(|g| {
            serde_json::json!({
                "kind": g.kind(),
                "qubits": g.qubits(),
                "params": g.params(),
            })
        })
        .collect();
    serde_json::Value::Array(items).to_string()
}

/// Dense state vector over `num_qubits` qubits.
#[derive(Clone, Debug)]
pub struct QuantumState {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

type Mat2 = [[Complex64; 2]; 2];

fn u_matrix(theta: f64, phi: f64, lambda: f64, gamma: f64) -> Mat2 {
    let c = (theta / 2.0).cos();
    let s = (theta / 2.0).sin();
    let g = Complex64::from_polar(1.0, gamma);
    [
        [g * c, -g * Complex64::from_polar(s, lambda)],
        [
            g * Complex64::from_polar(s, phi),
            g * Complex64::from_polar(c, lambda + phi),
        ],
    ]
}

impl QuantumState {
    /// All-zeros state |0…0⟩.
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return Err(Error::Capacity(num_qubits));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(QuantumState { num_qubits, amps })
    }

    /// Computational basis state |index⟩.
    pub fn from_basis(num_qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::new(num_qubits)?;
        if index >= s.amps.len() {
            return Err(Error::InvalidInput(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                index: q,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    fn apply_single(&mut self, q: usize, m: &Mat2) {
        let step = 1usize << q;
        let half = self.amps.len() >> 1;
        for base in 0..half {
            let i = ((base >> q) << (q + 1)) | (base & (step - 1));
            let j = i | step;
            let a = self.amps[i];
            let b = self.amps[j];
            self.amps[i] = m[0][0] * a + m[0][1] * b;
            self.amps[j] = m[1][0] * a + m[1][1] * b;
        }
    }

    fn apply_controlled(&mut self, control: usize, target: usize, m: &Mat2) {
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        for i in 0..self.amps.len() {
            if i & cbit != 0 && i & tbit == 0 {
                let j = i | tbit;
                let a = self.amps[i];
                let b = self.amps[j];
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[j] = m[1][0] * a + m[1][1] * b;
            }
        }
    }

    pub fn apply(&mut self, gate: &GateOp) -> Result<()> {
        for q in gate.qubits() {
            self.check_qubit(q)?;
        }
        if let [a, b] = gate.qubits()[..] {
            if a == b {
                return Err(Error::InvalidInput(format!(
                    "two-qubit gate {} with identical indices {a}",
                    gate.kind()
                )));
            }
        }
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        match *gate {
            GateOp::H(q) => {
                let h = Complex64::new(inv_sqrt2, 0.0);
                self.apply_single(q, &[[h, h], [h, -h]]);
            }
            GateOp::X(q) => {
                let z = Complex64::new(0.0, 0.0);
                let o = Complex64::new(1.0, 0.0);
                self.apply_single(q, &[[z, o], [o, z]]);
            }
            GateOp::Rz { qubit, angle } => {
                let z = Complex64::new(0.0, 0.0);
                let m = [
                    [Complex64::from_polar(1.0, -angle / 2.0), z],
                    [z, Complex64::from_polar(1.0, angle / 2.0)],
                ];
                self.apply_single(qubit, &m);
            }
            GateOp::U { qubit, theta, phi, lambda } => {
                self.apply_single(qubit, &u_matrix(theta, phi, lambda, 0.0));
            }
            GateOp::GphaseU { qubit, theta, phi, lambda, gamma } => {
                self.apply_single(qubit, &u_matrix(theta, phi, lambda, gamma));
            }
            GateOp::Cx { control, target } => {
                let z = Complex64::new(0.0, 0.0);
                let o = Complex64::new(1.0, 0.0);
                self.apply_controlled(control, target, &[[z, o], [o, z]]);
            }
            GateOp::Cu { control, target, theta, phi, lambda, gamma } => {
                self.apply_controlled(control, target, &u_matrix(theta, phi, lambda, gamma));
            }
            GateOp::Swap(a, b) => {
                let abit = 1usize << a;
                let bbit = 1usize << b;
                for i in 0..self.amps.len() {
                    if i & abit != 0 && i & bbit == 0 {
                        self.amps.swap(i, (i ^ abit) | bbit);
                    }
                }
            }
            GateOp::Zz { a, b, angle } => {
                let plus = Complex64::from_polar(1.0, -angle / 2.0);
                let minus = Complex64::from_polar(1.0, angle / 2.0);
                let abit = 1usize << a;
                let bbit = 1usize << b;
                for (i, amp) in self.amps.iter_mut().enumerate() {
                    let same = (i & abit != 0) == (i & bbit != 0);
                    *amp *= if same { plus } else { minus };
                }
            }
        }
        #[cfg(debug_assertions)]
        {
            debug_assert!((self.norm() - 1.0).abs() < 1e-9, "norm drift after gate");
        }
        Ok(())
    }

    pub fn apply_all(&mut self, gates: &[GateOp]) -> Result<()> {
        for g in gates {
            self.apply(g)?;
        }
        Ok(())
    }

    /// ⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩ of one qubit (partial trace over the rest).
    pub fn bloch_vector(&self, qubit: usize) -> Result<Vec3> {
        let coh = self.coherence(qubit)?;
        let bit = 1usize << qubit;
        let p1: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        // coherence = <sx> - i <sy>
        Ok([coh.re, -coh.im, 1.0 - 2.0 * p1])
    }

    /// 2⟨0|ρ_q|1⟩ = ⟨σ_x⟩ − i⟨σ_y⟩ for one qubit.
    pub fn coherence(&self, qubit: usize) -> Result<Complex64> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                acc += self.amps[i] * self.amps[i | bit].conj();
            }
        }
        Ok(2.0 * acc)
    }

    /// Probability that `qubit` reads 0 in the computational basis.
    pub fn probability_zero(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }
}

/// θ, φ, λ, γ of the controlled gate, with the intermediate angles Θ and Φ.
#[derive(Clone, Copy, Debug)]
pub struct CircuitGateParams {
    pub theta: f64,
    pub phi: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub cap_theta: f64,
    pub cap_phi: f64,
}

/// Gate parameters such that e^{iγ}U(θ,φ,λ) = Û₁(t)Û₀†(t).
///
/// Conventions: Φ = 0 when u_x = u_y = 0 (the sin(Ω₁t/2)·√(u_x²+u_y²)
/// factor vanishes there); θ comes from an acos clipped to [0,1]; when
/// sin(Ω₁t/2) < 0 both off-diagonal entries change sign relative to the
/// principal-branch U, which is absorbed by shifting φ and λ by π.
pub fn gate_params(spec: &PrecessionSpec, t: f64) -> CircuitGateParams {
    let half1 = spec.omega1 * t / 2.0;
    let c1 = half1.cos();
    let s1 = half1.sin();
    let [ux, uy, uz] = spec.axis;
    let r = (c1 * c1 + s1 * s1 * uz * uz).sqrt().min(1.0);
    let theta = 2.0 * r.acos();
    let cap_theta = (-s1 * uz).atan2(c1);
    let transverse = (ux * ux + uy * uy).sqrt();
    let cap_phi = if transverse > 0.0 { uy.atan2(ux) } else { 0.0 };
    let omega0_t = spec.omega0 * t;
    let mut phi = -std::f64::consts::FRAC_PI_2 - cap_theta + cap_phi;
    let mut lambda = std::f64::consts::FRAC_PI_2 - omega0_t - cap_theta - cap_phi;
    let gamma = omega0_t / 2.0 + cap_theta;
    if s1 < 0.0 {
        phi += std::f64::consts::PI;
        lambda += std::f64::consts::PI;
    }
    CircuitGateParams {
        theta,
        phi,
        lambda,
        gamma,
        cap_theta,
        cap_phi,
    }
}

/// Û₁(t)Û₀†(t) built directly from the conditional evolution operators;
/// the reference the gate parameters must reproduce.
pub fn conditional_unitary(spec: &PrecessionSpec, t: f64) -> [[Complex64; 2]; 2] {
    let half1 = spec.omega1 * t / 2.0;
    let c1 = half1.cos();
    let s1 = half1.sin();
    let [ux, uy, uz] = spec.axis;
    let i = Complex64::i();
    let u1 = [
        [Complex64::new(c1, 0.0) - i * s1 * uz, -i * s1 * Complex64::new(ux, -uy)],
        [-i * s1 * Complex64::new(ux, uy), Complex64::new(c1, 0.0) + i * s1 * uz],
    ];
    let e = Complex64::from_polar(1.0, spec.omega0 * t / 2.0);
    [[u1[0][0] * e, u1[0][1] * e.conj()], [u1[1][0] * e, u1[1][1] * e.conj()]]
}

/// The five supported polarization families and their oracle angles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Polarization {
    /// p = (0,0,1): the preset |0⟩, no gates.
    ZPlus,
    /// p = (0,0,0): maximally mixed via a Bell pair with the ancilla.
    Unpolarized,
    /// p = (0,0,cosθ).
    ZTheta(f64),
    /// p = (1,0,0).
    XPlus,
    /// p = (sinθ₁sinθ₂, 0, cosθ₁).
    XZ(f64, f64),
}

impl Polarization {
    pub fn vector(&self) -> Vec3 {
        match *self {
            Polarization::ZPlus => [0.0, 0.0, 1.0],
            Polarization::Unpolarized => [0.0; 3],
            Polarization::ZTheta(th) => [0.0, 0.0, th.cos()],
            Polarization::XPlus => [1.0, 0.0, 0.0],
            Polarization::XZ(t1, t2) => [t1.sin() * t2.sin(), 0.0, t1.cos()],
        }
    }

    /// Match a Bloch vector to a supported family.
    pub fn from_vector(p: Vec3) -> Result<Self> {
        const EPS: f64 = 1e-9;
        let [px, py, pz] = p;
        if norm(p) > 1.0 + EPS {
            return Err(Error::InvalidBlochVector(p));
        }
        if py.abs() > EPS {
            return Err(Error::UnsupportedPolarization(px, py, pz));
        }
        if px.abs() <= EPS {
            if pz.abs() <= EPS {
                return Ok(Polarization::Unpolarized);
            }
            if (pz - 1.0).abs() <= EPS {
                return Ok(Polarization::ZPlus);
            }
            return Ok(Polarization::ZTheta(pz.clamp(-1.0, 1.0).acos()));
        }
        if (px - 1.0).abs() <= EPS && pz.abs() <= EPS {
            return Ok(Polarization::XPlus);
        }
        // (sin t1 sin t2, 0, cos t1): representable whenever px^2 + pz^2 <= 1
        let t1 = pz.clamp(-1.0, 1.0).acos();
        let s1 = t1.sin();
        if s1.abs() <= EPS {
            return Err(Error::UnsupportedPolarization(px, py, pz));
        }
        let s2 = px / s1;
        if s2.abs() > 1.0 + EPS {
            return Err(Error::UnsupportedPolarization(px, py, pz));
        }
        Ok(Polarization::XZ(t1, s2.clamp(-1.0, 1.0).asin()))
    }
}

/// Gate gadget preparing the nucleus qubit in the mixed state of Bloch
/// vector `pol.vector()` after the ancilla is traced out.
pub fn polarization_oracle(pol: &Polarization, nucleus: usize, ancilla: usize) -> Vec<GateOp> {
    let u = |q, th| GateOp::U { qubit: q, theta: th, phi: 0.0, lambda: 0.0 };
    match *pol {
        Polarization::ZPlus => vec![],
        Polarization::Unpolarized => vec![
            GateOp::H(nucleus),
            GateOp::Cx { control: nucleus, target: ancilla },
        ],
        Polarization::ZTheta(th) => vec![
            u(nucleus, th),
            GateOp::Cx { control: nucleus, target: ancilla },
        ],
        Polarization::XPlus => vec![u(nucleus, std::f64::consts::FRAC_PI_2)],
        Polarization::XZ(t1, t2) => vec![
            u(nucleus, t1),
            u(ancilla, t2),
            GateOp::Cx { control: nucleus, target: ancilla },
        ],
    }
}

/// One nucleus-ancilla pair of a circuit group.
#[derive(Clone, Debug)]
pub struct PairSpec {
    pub nucleus: usize,
    pub ancilla: usize,
    pub spec: PrecessionSpec,
    pub polarization: Polarization,
}

/// Electron qubit plus its nucleus-ancilla pairs.
#[derive(Clone, Debug)]
pub struct GroupSpec {
    pub electron: usize,
    pub pairs: Vec<PairSpec>,
}

impl GroupSpec {
    /// Standard layout: electron 0, pair i on (2i+1, 2i+2).
    pub fn with_layout(pairs: Vec<(PrecessionSpec, Polarization)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidInput("group needs at least one pair".into()));
        }
        Ok(GroupSpec {
            electron: 0,
            pairs: pairs
                .into_iter()
                .enumerate()
                .map(|(i, (spec, polarization))| PairSpec {
                    nucleus: 2 * i + 1,
                    ancilla: 2 * i + 2,
                    spec,
                    polarization,
                })
                .collect(),
        })
    }

    pub fn num_qubits(&self) -> usize {
        let mut max = self.electron;
        for p in &self.pairs {
            max = max.max(p.nucleus).max(p.ancilla);
        }
        max + 1
    }
}

/// Full circuit for one group at time `t`: H on the electron, the
/// polarization oracles, Rz(Ω₀t) on every nucleus, then the controlled-U
/// per pair. Ancillas are left untouched after their oracle.
pub fn build_aqs_circuit(group: &GroupSpec, t: f64) -> Result<Vec<GateOp>> {
    let mut gates = vec![GateOp::H(group.electron)];
    for p in &group.pairs {
        gates.extend(polarization_oracle(&p.polarization, p.nucleus, p.ancilla));
    }
    for p in &group.pairs {
        gates.push(GateOp::Rz {
            qubit: p.nucleus,
            angle: p.spec.omega0 * t,
        });
    }
    for p in &group.pairs {
        let g = gate_params(&p.spec, t);
        gates.push(GateOp::Cu {
            control: group.electron,
            target: p.nucleus,
            theta: g.theta,
            phi: g.phi,
            lambda: g.lambda,
            gamma: g.gamma,
        });
    }
    Ok(gates)
}

/// Electron-qubit tomography: exact mode returns ⟨σ_x⟩ − i⟨σ_y⟩ from the
/// amplitudes; shot mode estimates each expectation from `shots/2` samples
/// in the rotated basis.
pub fn tomograph_electron<R: Rng>(
    state: &QuantumState,
    electron: usize,
    shots: Option<u64>,
    rng: &mut R,
) -> Result<Complex64> {
    match shots {
        None => state.coherence(electron),
        Some(n) if n < 2 => Err(Error::TooFewShots(n)),
        Some(n) => {
            let per_basis = n / 2;
            // <sx>: H then measure Z
            let mut sx_state = state.clone();
            sx_state.apply(&GateOp::H(electron))?;
            let p0x = sx_state.probability_zero(electron)?;
            // <sy>: S-dagger then H then measure Z
            let mut sy_state = state.clone();
            sy_state.apply(&GateOp::U {
                qubit: electron,
                theta: 0.0,
                phi: 0.0,
                lambda: -std::f64::consts::FRAC_PI_2,
            })?;
            sy_state.apply(&GateOp::H(electron))?;
            let p0y = sy_state.probability_zero(electron)?;
            let sx = estimate_expectation(p0x, per_basis, rng);
            let sy = estimate_expectation(p0y, per_basis, rng);
            Ok(Complex64::new(sx, -sy))
        }
    }
}

fn estimate_expectation<R: Rng>(p_zero: f64, shots: u64, rng: &mut R) -> f64 {
    let mut zeros = 0u64;
    for _ in 0..shots {
        if rng.random::<f64>() < p_zero {
            zeros += 1;
        }
    }
    2.0 * zeros as f64 / shots as f64 - 1.0
}

/// How a group's circuits are evaluated.
#[derive(Clone, Copy, Debug)]
pub enum RunMode {
    Exact,
    Shots { shots: u64, seed: u64 },
}

/// Run the circuit for every time point (a fresh register per point) and
/// assemble the dephasing series from electron tomography.
pub fn run_group(group: &GroupSpec, bz: f64, times: &[f64], mode: RunMode) -> Result<DephasingSeries> {
    let n = group.num_qubits();
    if n > MAX_QUBITS {
        return Err(Error::Capacity(n));
    }
    let values: Result<Vec<Complex64>> = times
        .par_iter()
        .enumerate()
        .map(|(idx, &t)| {
            let mut state = QuantumState::new(n)?;
            state.apply_all(&build_aqs_circuit(group, t)?)?;
            match mode {
                RunMode::Exact => state.coherence(group.electron),
                RunMode::Shots { shots, seed } => {
                    let mut rng = ChaCha12Rng::seed_from_u64(
                        seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                    );
                    tomograph_electron(&state, group.electron, Some(shots), &mut rng)
                }
            }
        })
        .collect();
    Ok(DephasingSeries {
        times: times.to_vec(),
        values: values?,
        meta: SeriesMeta {
            backend: match mode {
                RunMode::Exact => "exact-circuit".into(),
                RunMode::Shots { shots, .. } => format!("shots({shots})"),
            },
            bz,
            group: "group".into(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{precession_spec, Constants};
    use approx::assert_abs_diff_eq;

    fn spec_for(a_z: Vec3, bz: f64) -> PrecessionSpec {
        precession_spec(a_z, bz, &Constants::nv()).unwrap()
    }

    #[test]
    fn hadamard_on_zero() {
        let mut s = QuantumState::new(1).unwrap();
        s.apply(&GateOp::H(0)).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!((s.amplitudes()[0] - r).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((s.amplitudes()[1] - r).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rz_phases_zero_state() {
        let mut s = QuantumState::new(1).unwrap();
        s.apply(&GateOp::Rz { qubit: 0, angle: 0.7 }).unwrap();
        let expect = Complex64::from_polar(1.0, -0.35);
        assert_abs_diff_eq!((s.amplitudes()[0] - expect).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn cu_is_identity_with_control_off() {
        let mut s = QuantumState::new(2).unwrap();
        s.apply(&GateOp::U { qubit: 1, theta: 1.1, phi: 0.2, lambda: 0.4 })
            .unwrap();
        let before = s.amplitudes().to_vec();
        s.apply(&GateOp::Cu {
            control: 0,
            target: 1,
            theta: 2.0,
            phi: 0.3,
            lambda: -0.9,
            gamma: 0.5,
        })
        .unwrap();
        for (a, b) in before.iter().zip(s.amplitudes()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn out_of_range_qubit_rejected() {
        let mut s = QuantumState::new(2).unwrap();
        assert!(s.apply(&GateOp::H(2)).is_err());
        assert!(QuantumState::new(MAX_QUBITS + 1).is_err());
    }

    #[test]
    fn gate_params_identity_at_zero() {
        let spec = spec_for([0.4, -0.3, 0.8], 100.0);
        let g = gate_params(&spec, 0.0);
        assert_abs_diff_eq!(g.theta, 0.0);
        assert_abs_diff_eq!(g.cap_theta, 0.0);
        assert_abs_diff_eq!(g.gamma, 0.0);
        let m = u_matrix(g.theta, g.phi, g.lambda, g.gamma);
        assert_abs_diff_eq!((m[0][0] - 1.0).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((m[1][1] - 1.0).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn gate_params_reconstruct_axis_aligned() {
        // u = e_z gives theta = 0 and a diagonal conditional unitary
        let spec = spec_for([0.0, 0.0, 1.3], 150.0);
        for &t in &[0.0, 0.9, 3.3, 17.0] {
            let g = gate_params(&spec, t);
            // acos near 1 limits precision to ~sqrt(eps)
            assert_abs_diff_eq!(g.theta, 0.0, epsilon = 1e-7);
            let m = u_matrix(g.theta, g.phi, g.lambda, g.gamma);
            let target = conditional_unitary(&spec, t);
            for r in 0..2 {
                for c in 0..2 {
                    assert_abs_diff_eq!((m[r][c] - target[r][c]).norm(), 0.0, epsilon = 1e-7);
                }
            }
        }
    }

    #[test]
    fn gate_params_reconstruct_random_specs() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha12Rng::seed_from_u64(1234);
        let c = Constants::nv();
        for _ in 0..500 {
            let r = [
                rng.random_range(-1.5..1.5),
                rng.random_range(-1.5..1.5),
                rng.random_range(-1.5..1.5),
            ];
            if crate::linalg::norm(r) < 0.55 {
                continue;
            }
            let a = crate::physics::hyperfine_vector(r, &c).unwrap();
            let spec = precession_spec(a, rng.random_range(0.0..250.0), &c).unwrap();
            // long times push omega1*t/2 through many sign changes of sin
            let t = rng.random_range(0.0..40.0);
            let g = gate_params(&spec, t);
            let m = u_matrix(g.theta, g.phi, g.lambda, g.gamma);
            let target = conditional_unitary(&spec, t);
            for row in 0..2 {
                for col in 0..2 {
                    assert_abs_diff_eq!(
                        (m[row][col] - target[row][col]).norm(),
                        0.0,
                        epsilon = 1e-9
                    );
                }
            }
        }
    }

    #[test]
    fn circuit_matches_analytic_oracle() {
        let c = Constants::nv();
        let bz = 150.0;
        let positions = [[0.6, 0.2, 0.5], [-0.5, 0.7, -0.3], [0.9, -0.4, 0.8]];
        let pols = [
            Polarization::Unpolarized,
            Polarization::ZTheta(0.9),
            Polarization::XPlus,
        ];
        let mut pairs = Vec::new();
        let mut nuclei = Vec::new();
        for (r, pol) in positions.iter().zip(&pols) {
            let a = crate::physics::hyperfine_vector(*r, &c).unwrap();
            let spec = precession_spec(a, bz, &c).unwrap();
            nuclei.push(crate::physics::BathNucleus {
                spec: spec.clone(),
                polarization: pol.vector(),
            });
            pairs.push((spec, *pol));
        }
        let group = GroupSpec::with_layout(pairs).unwrap();
        let times: Vec<f64> = (0..30).map(|i| i as f64 * 0.7).collect();
        let series = run_group(&group, bz, &times, RunMode::Exact).unwrap();
        for (&t, v) in times.iter().zip(&series.values) {
            let expect = crate::physics::dephasing_factor_bruteforce(&nuclei, t);
            assert_abs_diff_eq!((v - expect).norm(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn oracle_bloch_vectors_match_table() {
        let cases: Vec<(Polarization, Vec3)> = vec![
            (Polarization::ZPlus, [0.0, 0.0, 1.0]),
            (Polarization::Unpolarized, [0.0, 0.0, 0.0]),
            (
                Polarization::ZTheta(std::f64::consts::FRAC_PI_3),
                [0.0, 0.0, 0.5],
            ),
            (Polarization::XPlus, [1.0, 0.0, 0.0]),
            (
                Polarization::XZ(std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
                [1.0, 0.0, 0.0],
            ),
        ];
        for (pol, expect) in cases {
            let mut s = QuantumState::new(2).unwrap();
            s.apply_all(&polarization_oracle(&pol, 0, 1)).unwrap();
            let b = s.bloch_vector(0).unwrap();
            for j in 0..3 {
                assert_abs_diff_eq!(b[j], expect[j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn polarization_family_round_trip() {
        let pols = [
            Polarization::ZPlus,
            Polarization::Unpolarized,
            Polarization::ZTheta(1.1),
            Polarization::XPlus,
            Polarization::XZ(0.8, 2.0),
        ];
        for p in pols {
            let back = Polarization::from_vector(p.vector()).unwrap();
            let v1 = p.vector();
            let v2 = back.vector();
            for j in 0..3 {
                assert_abs_diff_eq!(v1[j], v2[j], epsilon = 1e-9);
            }
        }
        assert!(Polarization::from_vector([0.0, 0.5, 0.0]).is_err());
        assert!(Polarization::from_vector([0.9, 0.0, 0.9]).is_err());
    }

    #[test]
    fn circuit_shape_matches_pair_count() {
        let spec = spec_for([0.2, 0.1, 0.5], 100.0);
        let pairs = vec![(spec.clone(), Polarization::ZPlus); 3];
        let group = GroupSpec::with_layout(pairs).unwrap();
        assert_eq!(group.num_qubits(), 7);
        let gates = build_aqs_circuit(&group, 1.0).unwrap();
        // 1 H + 0 oracle gates + 3 Rz + 3 CU
        assert_eq!(gates.len(), 7);
        let group10 =
            GroupSpec::with_layout(vec![(spec, Polarization::Unpolarized); 10]).unwrap();
        assert_eq!(group10.num_qubits(), 21);
    }

    #[test]
    fn run_group_is_one_at_t_zero() {
        let spec = spec_for([0.5, -0.2, 0.3], 80.0);
        let group = GroupSpec::with_layout(vec![(spec, Polarization::XPlus)]).unwrap();
        let s = run_group(&group, 80.0, &[0.0, 1.0], RunMode::Exact).unwrap();
        assert_abs_diff_eq!((s.values[0] - 1.0).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_tomography_of_plus_state() {
        let mut s = QuantumState::new(1).unwrap();
        s.apply(&GateOp::H(0)).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let phi = tomograph_electron(&s, 0, None, &mut rng).unwrap();
        assert_abs_diff_eq!((phi - 1.0).norm(), 0.0, epsilon = 1e-14);
        // |0> carries no coherence
        let s0 = QuantumState::new(1).unwrap();
        let phi0 = tomograph_electron(&s0, 0, None, &mut rng).unwrap();
        assert_abs_diff_eq!(phi0.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn shot_mode_estimates_plus_state() {
        let mut s = QuantumState::new(1).unwrap();
        s.apply(&GateOp::H(0)).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let phi = tomograph_electron(&s, 0, Some(4096), &mut rng).unwrap();
        // sigma = 1/sqrt(2048) for <sx> at p = 1
        assert!((phi.re - 1.0).abs() <= 3.0 / (2048f64).sqrt() + 1e-12);
        assert!(tomograph_electron(&s, 0, Some(1), &mut rng).is_err());
    }

    #[test]
    fn circuit_dump_is_json() {
        let gates = vec![
            GateOp::H(0),
            GateOp::Cu { control: 0, target: 1, theta: 1.0, phi: 0.0, lambda: 0.5, gamma: 0.1 },
        ];
        let dump = dump_circuit(&gates);
        let v: serde_json::Value = serde_json::from_str(&dump).unwrap();
        assert_eq!(v[0]["kind"], "h");
        assert_eq!(v[1]["qubits"][1], 1);
    }
}
