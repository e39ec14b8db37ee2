//! Device constraints: coupling-map topology, SWAP routing for remote
//! controlled gates, a ZZ-crosstalk noise channel, and shot sampling.
//!
//! Crosstalk is modeled as an always-on ZZ between physically adjacent
//! qubits, applied as a discrete kick exp(−i·J·τ·σ_z⊗σ_z/2) after every
//! layer of *elementary* gates (post CU/SWAP decomposition). Kicks between
//! coarse CU layers commute into a form that keeps φ real for unpolarized
//! baths; interleaving them with the CX/rotation stages of the decomposed
//! gate is what produces the erroneous imaginary part seen on hardware.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{DephasingSeries, SeriesMeta};
use crate::qsim::{
    build_aqs_circuit, tomograph_electron, GateOp, GroupSpec, QuantumState, RunMode, MAX_QUBITS,
};

/// ZZ strength J (rad/µs) and per-layer dwell time τ (µs) on one edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkPair {
    pub pair: [usize; 2],
    #[serde(rename = "J")]
    pub j: f64,
    pub tau: f64,
}

/// Physical qubits hosting the electron and each nucleus-ancilla pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub electron: usize,
    pub pairs: Vec<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub name: String,
    /// Undirected edge list over physical qubit indices.
    pub coupling_map: Vec<[usize; 2]>,
    /// Nucleus-ancilla pairs a single task may use.
    pub max_pairs: usize,
    #[serde(default)]
    pub crosstalk: Vec<CrosstalkPair>,
    /// Coarse per-CX depolarizing probability; attenuates the measured
    /// coherence by (1−p)^cnot_count.
    #[serde(default)]
    pub gate_error: f64,
    #[serde(default)]
    pub placements: BTreeMap<String, Placement>,
}

impl DeviceProfile {
    pub fn vertex_set(&self) -> BTreeSet<usize> {
        self.coupling_map.iter().flatten().copied().collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_pairs < 1 {
            return Err(Error::InvalidInput("max_pairs must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.gate_error) {
            return Err(Error::InvalidInput(format!(
                "gate_error must lie in [0, 1), got {}",
                self.gate_error
            )));
        }
        let vertices = self.vertex_set();
        for ct in &self.crosstalk {
            if !vertices.contains(&ct.pair[0]) || !vertices.contains(&ct.pair[1]) {
                return Err(Error::InvalidInput(format!(
                    "crosstalk pair {:?} not in coupling map",
                    ct.pair
                )));
            }
            if ct.tau < 0.0 {
                return Err(Error::InvalidInput("crosstalk tau must be >= 0".into()));
            }
        }
        for (name, p) in &self.placements {
            let mut used = BTreeSet::new();
            for &q in std::iter::once(&p.electron).chain(p.pairs.iter().flatten()) {
                if !vertices.contains(&q) {
                    return Err(Error::InvalidInput(format!(
                        "placement {name}: qubit {q} not in coupling map"
                    )));
                }
                if !used.insert(q) {
                    return Err(Error::InvalidInput(format!(
                        "placement {name}: qubit {q} used twice"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_path(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), self)?;
        Ok(())
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        let profile: DeviceProfile = serde_json::from_reader(std::io::BufReader::new(f))?;
        profile.validate()?;
        Ok(profile)
    }
}

/// 27-qubit heavy-hex graph (Falcon layout) with the three placements of
/// the qubit-pair study around electron qubit 12. The default crosstalk
/// sits on the (12,15) and (15,18) edges, so `left_right` avoids it while
/// `top_left`/`top_right` are exposed (J·τ = 0.02 rad per layer).
pub fn heavy_hex_27() -> DeviceProfile {
    let coupling_map = vec![
        [0, 1],
        [1, 2],
        [2, 3],
        [3, 5],
        [1, 4],
        [4, 7],
        [5, 8],
        [6, 7],
        [7, 10],
        [8, 9],
        [8, 11],
        [10, 12],
        [11, 14],
        [12, 13],
        [12, 15],
        [13, 14],
        [14, 16],
        [15, 18],
        [16, 19],
        [17, 18],
        [18, 21],
        [19, 20],
        [19, 22],
        [21, 23],
        [22, 25],
        [23, 24],
        [24, 25],
        [25, 26],
    ];
    let mut placements = BTreeMap::new();
    placements.insert(
        "left_right".into(),
        Placement { electron: 12, pairs: vec![[10, 7], [13, 14]] },
    );
    placements.insert(
        "top_left".into(),
        Placement { electron: 12, pairs: vec![[15, 18], [10, 7]] },
    );
    placements.insert(
        "top_right".into(),
        Placement { electron: 12, pairs: vec![[15, 18], [13, 14]] },
    );
    placements.insert(
        "three_pairs".into(),
        Placement { electron: 12, pairs: vec![[10, 7], [13, 14], [15, 18]] },
    );
    DeviceProfile {
        name: "heavy_hex_27".into(),
        coupling_map,
        max_pairs: 3,
        crosstalk: vec![
            CrosstalkPair { pair: [12, 15], j: 0.4, tau: 0.05 },
            CrosstalkPair { pair: [15, 18], j: 0.4, tau: 0.05 },
        ],
        gate_error: 0.0,
        placements,
    }
}

/// 127-qubit heavy-hex graph (Eagle layout): seven 15-qubit rows (14 on the
/// first and last) joined by columns of four bridge qubits.
pub fn heavy_hex_127() -> DeviceProfile {
    let mut edges: Vec<[usize; 2]> = Vec::new();
    // long rows
    let rows: [(usize, usize); 7] = [
        (0, 13),
        (18, 32),
        (37, 51),
        (56, 70),
        (75, 89),
        (94, 108),
        (113, 126),
    ];
    for &(lo, hi) in &rows {
        for q in lo..hi {
            edges.push([q, q + 1]);
        }
    }
    // bridge columns: (bridge qubit, row above, row below); the attachment
    // offsets alternate by 0/2 sites between successive columns
    let bridges: [(usize, usize, usize); 4] = [(14, 0, 18), (15, 4, 22), (16, 8, 26), (17, 12, 30)];
    for &(b, up, down) in &bridges {
        edges.push([up, b]);
        edges.push([b, down]);
    }
    let columns: [(usize, usize, usize); 5] =
        [(33, 20, 39), (52, 37, 56), (71, 58, 77), (90, 75, 94), (109, 96, 114)];
    for &(b0, up0, down0) in &columns {
        for k in 0..4 {
            let b = b0 + k;
            let up = up0 + 4 * k;
            let down = down0 + 4 * k;
            edges.push([up, b]);
            edges.push([b, down]);
        }
    }
    DeviceProfile {
        name: "heavy_hex_127".into(),
        coupling_map: edges,
        max_pairs: 3,
        crosstalk: vec![
            CrosstalkPair { pair: [62, 63], j: 0.4, tau: 0.05 },
            CrosstalkPair { pair: [63, 64], j: 0.4, tau: 0.05 },
        ],
        gate_error: 0.0,
        placements: BTreeMap::new(),
    }
}

/// Noiseless all-to-all backend, capped at ten pairs (21 qubits).
pub fn ideal_simulator() -> DeviceProfile {
    let n = 21;
    let mut coupling_map = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            coupling_map.push([i, j]);
        }
    }
    DeviceProfile {
        name: "ideal_simulator".into(),
        coupling_map,
        max_pairs: 10,
        crosstalk: vec![],
        gate_error: 0.0,
        placements: BTreeMap::new(),
    }
}

pub fn builtin_profile(name: &str) -> Option<DeviceProfile> {
    match name {
        "heavy_hex_27" => Some(heavy_hex_27()),
        "heavy_hex_127" => Some(heavy_hex_127()),
        "ideal_simulator" => Some(ideal_simulator()),
        _ => None,
    }
}

/// Relabel a logical group (electron 0, pairs (2i+1, 2i+2)) onto the
/// physical qubits of a placement.
pub fn map_to_physical(group: &GroupSpec, placement: &Placement) -> Result<GroupSpec> {
    if group.pairs.len() > placement.pairs.len() {
        return Err(Error::InvalidInput(format!(
            "group has {} pairs but placement provides {}",
            group.pairs.len(),
            placement.pairs.len()
        )));
    }
    let mut out = group.clone();
    out.electron = placement.electron;
    for (p, phys) in out.pairs.iter_mut().zip(&placement.pairs) {
        p.nucleus = phys[0];
        p.ancilla = phys[1];
    }
    Ok(out)
}

fn adjacency(coupling_map: &[[usize; 2]]) -> BTreeMap<usize, Vec<usize>> {
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &[a, b] in coupling_map {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    // sorted neighbors make BFS tie-breaking deterministic (lowest index)
    for v in adj.values_mut() {
        v.sort_unstable();
    }
    adj
}

fn bfs_path(adj: &BTreeMap<usize, Vec<usize>>, from: usize, to: usize) -> Result<Vec<usize>> {
    if !adj.contains_key(&from) || !adj.contains_key(&to) {
        return Err(Error::Disconnected(from, to));
    }
    let mut prev: BTreeMap<usize, usize> = BTreeMap::new();
    let mut queue = VecDeque::from([from]);
    prev.insert(from, from);
    while let Some(q) = queue.pop_front() {
        if q == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = prev[&cur];
                path.push(cur);
            }
            path.reverse();
            return Ok(path);
        }
        for &n in &adj[&q] {
            if let std::collections::btree_map::Entry::Vacant(e) = prev.entry(n) {
                e.insert(q);
                queue.push_back(n);
            }
        }
    }
    Err(Error::Disconnected(from, to))
}

/// Routed gate sequence with SWAP and CNOT accounting.
#[derive(Clone, Debug)]
pub struct RoutedCircuit {
    pub gates: Vec<GateOp>,
    pub swaps_inserted: usize,
    pub cnot_count: usize,
    pub depth: usize,
}

/// Insert SWAPs so that every two-qubit gate acts on coupled qubits.
///
/// A remote gate at shortest-path distance d walks its control d−1 hops
/// toward the target, fires, and walks back: 2(d−1) SWAPs. CNOT accounting:
/// SWAP = 3 CX, adjacent CU = 2 CX, CX = 1.
pub fn route_remote_cu(gates: &[GateOp], coupling_map: &[[usize; 2]]) -> Result<RoutedCircuit> {
    let adj = adjacency(coupling_map);
    let mut out = Vec::new();
    let mut swaps_inserted = 0usize;
    let mut cnot_count = 0usize;
    for g in gates {
        match g {
            GateOp::Cx { control, target } | GateOp::Cu { control, target, .. } => {
                let path = bfs_path(&adj, *control, *target)?;
                let d = path.len() - 1;
                if d == 0 {
                    return Err(Error::InvalidInput(format!(
                        "two-qubit gate {} with identical qubits {control}",
                        g.kind()
                    )));
                }
                for w in path[..d].windows(2) {
                    out.push(GateOp::Swap(w[0], w[1]));
                }
                // control now sits next to the target
                out.push(g.map_qubits(|q| if q == *control { path[d - 1] } else { q }));
                for w in path[..d].windows(2).rev() {
                    out.push(GateOp::Swap(w[0], w[1]));
                }
                swaps_inserted += 2 * (d - 1);
                cnot_count += 6 * (d - 1);
                cnot_count += match g {
                    GateOp::Cx { .. } => 1,
                    _ => 2,
                };
            }
            GateOp::Swap(a, b) | GateOp::Zz { a, b, .. } => {
                if bfs_path(&adj, *a, *b)?.len() != 2 {
                    return Err(Error::Disconnected(*a, *b));
                }
                if matches!(g, GateOp::Swap(..)) {
                    cnot_count += 3;
                }
                out.push(g.clone());
            }
            _ => {
                let q = g.qubits()[0];
                if !adj.contains_key(&q) {
                    return Err(Error::Disconnected(q, q));
                }
                out.push(g.clone());
            }
        }
    }
    let depth = layer_circuit(&out).len();
    Ok(RoutedCircuit { gates: out, swaps_inserted, cnot_count, depth })
}

/// Expand CU and SWAP into the elementary set {H, X, U, Rz, CX}.
///
/// CU uses the standard phased ABC form: P(α) on the control with
/// α = γ + (φ+λ)/2, and Rz/Ry conjugation around two CX on the target.
pub fn decompose(gates: &[GateOp]) -> Vec<GateOp> {
    let mut out = Vec::new();
    for g in gates {
        match *g {
            GateOp::Cu { control, target, theta, phi, lambda, gamma } => {
                let alpha = gamma + (phi + lambda) / 2.0;
                let ry = |q: usize, th: f64| GateOp::U { qubit: q, theta: th, phi: 0.0, lambda: 0.0 };
                out.push(GateOp::U { qubit: control, theta: 0.0, phi: 0.0, lambda: alpha });
                out.push(GateOp::Rz { qubit: target, angle: (lambda - phi) / 2.0 });
                out.push(GateOp::Cx { control, target });
                out.push(GateOp::Rz { qubit: target, angle: -(phi + lambda) / 2.0 });
                out.push(ry(target, -theta / 2.0));
                out.push(GateOp::Cx { control, target });
                out.push(ry(target, theta / 2.0));
                out.push(GateOp::Rz { qubit: target, angle: phi });
            }
            GateOp::Swap(a, b) => {
                out.push(GateOp::Cx { control: a, target: b });
                out.push(GateOp::Cx { control: b, target: a });
                out.push(GateOp::Cx { control: a, target: b });
            }
            ref g => out.push(g.clone()),
        }
    }
    out
}

/// Greedy ASAP layering: a gate joins the earliest layer after the last
/// gate sharing one of its qubits.
pub fn layer_circuit(gates: &[GateOp]) -> Vec<Vec<GateOp>> {
    let mut layers: Vec<Vec<GateOp>> = Vec::new();
    let mut busy_until: BTreeMap<usize, usize> = BTreeMap::new();
    for g in gates {
        let layer = g
            .qubits()
            .iter()
            .map(|q| busy_until.get(q).copied().unwrap_or(0))
            .max()
            .unwrap_or(0);
        if layer == layers.len() {
            layers.push(Vec::new());
        }
        layers[layer].push(g.clone());
        for q in g.qubits() {
            busy_until.insert(q, layer + 1);
        }
    }
    layers
}

/// Interleave ZZ kicks exp(−i·J·τ·σ_z⊗σ_z/2) after every gate layer on
/// each crosstalk pair whose qubits are both used by the circuit.
pub fn apply_crosstalk(gates: &[GateOp], profile: &DeviceProfile) -> Vec<GateOp> {
    let used: BTreeSet<usize> = gates.iter().flat_map(|g| g.qubits()).collect();
    let active: Vec<&CrosstalkPair> = profile
        .crosstalk
        .iter()
        .filter(|ct| ct.j != 0.0 && used.contains(&ct.pair[0]) && used.contains(&ct.pair[1]))
        .collect();
    if active.is_empty() {
        return gates.to_vec();
    }
    let mut out = Vec::new();
    for layer in layer_circuit(gates) {
        out.extend(layer);
        for ct in &active {
            out.push(GateOp::Zz { a: ct.pair[0], b: ct.pair[1], angle: ct.j * ct.tau });
        }
    }
    out
}

/// Relabel the qubits actually used onto 0..n. Returns the compacted gates
/// and the physical→compact map.
pub fn compact(gates: &[GateOp]) -> (Vec<GateOp>, BTreeMap<usize, usize>) {
    let used: BTreeSet<usize> = gates.iter().flat_map(|g| g.qubits()).collect();
    let map: BTreeMap<usize, usize> = used.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let gates = gates.iter().map(|g| g.map_qubits(|q| map[&q])).collect();
    (gates, map)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasBasis {
    X,
    Y,
}

/// Measure one qubit `shots` times in the σ_x or σ_y eigenbasis.
pub fn sample_shots<R: Rng>(
    state: &QuantumState,
    basis: MeasBasis,
    qubit: usize,
    shots: u64,
    rng: &mut R,
) -> Result<(u64, u64)> {
    if shots < 1 {
        return Err(Error::TooFewShots(shots));
    }
    let mut rotated = state.clone();
    if basis == MeasBasis::Y {
        // S-dagger
        rotated.apply(&GateOp::U {
            qubit,
            theta: 0.0,
            phi: 0.0,
            lambda: -std::f64::consts::FRAC_PI_2,
        })?;
    }
    rotated.apply(&GateOp::H(qubit))?;
    let p_plus = rotated.probability_zero(qubit)?;
    let mut n_plus = 0u64;
    for _ in 0..shots {
        if rng.random::<f64>() < p_plus {
            n_plus += 1;
        }
    }
    Ok((n_plus, shots - n_plus))
}

/// Run one group through the full device pipeline: physical placement,
/// SWAP routing, CU/SWAP decomposition, per-layer crosstalk kicks, compact
/// simulation and electron tomography. `gate_error > 0` attenuates the
/// result by (1−p)^cnot_count.
pub fn run_group_on_device(
    group: &GroupSpec,
    profile: &DeviceProfile,
    placement: &Placement,
    bz: f64,
    times: &[f64],
    mode: RunMode,
) -> Result<DephasingSeries> {
    use rand::SeedableRng;
    use rayon::prelude::*;
    profile.validate()?;
    let physical_group = map_to_physical(group, placement)?;
    let values: Result<Vec<num_complex::Complex64>> = times
        .par_iter()
        .enumerate()
        .map(|(idx, &t)| {
            let routed = route_remote_cu(
                &build_aqs_circuit(&physical_group, t)?,
                &profile.coupling_map,
            )?;
            let noisy = apply_crosstalk(&decompose(&routed.gates), profile);
            let (gates, map) = compact(&noisy);
            let electron = map[&physical_group.electron];
            let n = map.len();
            if n > MAX_QUBITS {
                return Err(Error::Capacity(n));
            }
            let mut state = QuantumState::new(n)?;
            state.apply_all(&gates)?;
            let phi = match mode {
                RunMode::Exact => state.coherence(electron)?,
                RunMode::Shots { shots, seed } => {
                    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(
                        seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                    );
                    tomograph_electron(&state, electron, Some(shots), &mut rng)?
                }
            };
            Ok(phi * (1.0 - profile.gate_error).powi(routed.cnot_count as i32))
        })
        .collect();
    Ok(DephasingSeries {
        times: times.to_vec(),
        values: values?,
        meta: SeriesMeta {
            backend: format!("noisy({})", profile.name),
            bz,
            group: "group".into(),
        },
    })
}
