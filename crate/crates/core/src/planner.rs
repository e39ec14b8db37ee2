//! Adaptive partition of the bath into backend-sized groups and exact
//! recombination of per-group dephasing series.
//!
//! Because inter-nuclear coupling is out of scope, the total dephasing
//! factor is the exact pointwise product of group factors: the partition is
//! lossless, and groups can run on different backends independently.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bathgen::BathConfiguration;
use crate::device::DeviceProfile;
use crate::error::{Error, Result};
use crate::physics::{bath_nuclei, Constants, DephasingSeries, SeriesMeta};
use crate::qsim::{GroupSpec, Polarization};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanGroup {
    /// Bath site indices (distance rank k), in order.
    pub nuclei: Vec<usize>,
    /// Profile the group is assigned to.
    pub profile: String,
    /// 1 electron + 2 qubits per nucleus.
    pub qubits: usize,
    /// Whether the group sits inside the polarization-controllable area.
    pub controllable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub groups: Vec<PlanGroup>,
}

impl PartitionPlan {
    pub fn to_path(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), self)?;
        Ok(())
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
    }

    /// Disjointness, coverage of 0..n, and per-group size checks.
    pub fn validate(&self, bath_len: usize, max_pairs: impl Fn(&str) -> Option<usize>) -> Result<()> {
        let mut seen = vec![false; bath_len];
        for g in &self.groups {
            if g.qubits != 1 + 2 * g.nuclei.len() {
                return Err(Error::InvalidInput(format!(
                    "group qubit count {} inconsistent with {} nuclei",
                    g.qubits,
                    g.nuclei.len()
                )));
            }
            match max_pairs(&g.profile) {
                Some(cap) if g.nuclei.len() <= cap => {}
                Some(cap) => {
                    return Err(Error::InvalidInput(format!(
                        "group of {} nuclei exceeds {} (max_pairs {cap})",
                        g.nuclei.len(),
                        g.profile
                    )))
                }
                None => {
                    return Err(Error::InvalidInput(format!(
                        "unknown profile {} in plan",
                        g.profile
                    )))
                }
            }
            for &k in &g.nuclei {
                if k >= bath_len || seen[k] {
                    return Err(Error::InvalidInput(format!(
                        "nucleus {k} missing from bath or assigned twice"
                    )));
                }
                seen[k] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidInput(
                "plan does not cover every bath nucleus".into(),
            ));
        }
        Ok(())
    }
}

/// Pack the controllable (inner) nuclei, in distance order, into groups of
/// `device_profile.max_pairs`, and the remaining nuclei into groups of
/// `simulator_profile.max_pairs`.
pub fn partition_bath(
    bath: &BathConfiguration,
    device_profile: &DeviceProfile,
    simulator_profile: &DeviceProfile,
) -> Result<PartitionPlan> {
    bath.validate()?;
    device_profile.validate()?;
    simulator_profile.validate()?;
    let (inner, outer): (Vec<usize>, Vec<usize>) = (0..bath.sites.len())
        .partition(|&k| bath.sites[k].distance < bath.spec.polarization_radius);
    let mut groups = Vec::new();
    for chunk in inner.chunks(device_profile.max_pairs) {
        groups.push(PlanGroup {
            nuclei: chunk.to_vec(),
            profile: device_profile.name.clone(),
            qubits: 1 + 2 * chunk.len(),
            controllable: true,
        });
    }
    for chunk in outer.chunks(simulator_profile.max_pairs) {
        groups.push(PlanGroup {
            nuclei: chunk.to_vec(),
            profile: simulator_profile.name.clone(),
            qubits: 1 + 2 * chunk.len(),
            controllable: false,
        });
    }
    Ok(PartitionPlan { groups })
}

/// Circuit group for one plan entry at field `bz`.
pub fn build_group(
    bath: &BathConfiguration,
    group: &PlanGroup,
    bz: f64,
    constants: &Constants,
) -> Result<GroupSpec> {
    let nuclei = bath_nuclei(bath, bz, constants)?;
    let pairs = group
        .nuclei
        .iter()
        .map(|&k| {
            let n = nuclei.get(k).ok_or_else(|| {
                Error::InvalidInput(format!("plan references nucleus {k} beyond bath"))
            })?;
            Ok((n.spec.clone(), Polarization::from_vector(n.polarization)?))
        })
        .collect::<Result<Vec<_>>>()?;
    GroupSpec::with_layout(pairs)
}

/// Pointwise product of group series. All series must share the exact same
/// time grid; no resampling is attempted.
pub fn combine_groups(series: &[DephasingSeries]) -> Result<DephasingSeries> {
    let first = series
        .first()
        .ok_or_else(|| Error::InvalidInput("no series to combine".into()))?;
    let mut values = vec![Complex64::new(1.0, 0.0); first.times.len()];
    for s in series {
        if s.times != first.times {
            return Err(Error::GridMismatch);
        }
        for (v, f) in values.iter_mut().zip(&s.values) {
            *v *= f;
        }
    }
    Ok(DephasingSeries {
        times: first.times.clone(),
        values,
        meta: SeriesMeta {
            backend: "combined".into(),
            bz: first.meta.bz,
            group: "all".into(),
        },
    })
}
