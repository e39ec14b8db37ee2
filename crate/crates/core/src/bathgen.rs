//! Diamond-lattice ¹³C configuration generation and polarization assignment.
//!
//! Positions are expressed in the NV frame: the crystal [111] direction is
//! rotated onto +z by a fixed orthonormal basis change, so hyperfine values
//! derived from these positions are reproducible across platforms. The RNG is
//! ChaCha12, seeded from `LatticeSpec::seed`, so identical specs give
//! bit-identical configurations.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm, Vec3};

/// Default seed; chosen so the default configuration has exactly ten nuclei
/// inside the 1 nm polarization radius.
pub const DEFAULT_SEED: u64 = 11;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// Conventional diamond cell edge (nm).
    pub lattice_constant: f64,
    /// Outer radius of the sampled region (nm).
    pub region_radius: f64,
    /// Fermi-contact exclusion radius (nm).
    pub exclusion_radius: f64,
    /// Radius of the controllably polarizable area (nm).
    pub polarization_radius: f64,
    /// ¹³C abundance used to validate the region size.
    pub abundance: f64,
    /// Number of nuclei to sample.
    pub target_count: usize,
    pub seed: u64,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        // region_radius is sized so the candidate count is close to
        // target_count / abundance (~47k sites at diamond site density).
        LatticeSpec {
            lattice_constant: 0.357,
            region_radius: 4.0,
            exclusion_radius: 0.5,
            polarization_radius: 1.0,
            abundance: 0.011,
            target_count: 520,
            seed: DEFAULT_SEED,
        }
    }
}

impl LatticeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.exclusion_radius < self.polarization_radius
            && self.polarization_radius < self.region_radius)
        {
            return Err(Error::InvalidInput(format!(
                "radii must satisfy exclusion < polarization < region, got {} / {} / {}",
                self.exclusion_radius, self.polarization_radius, self.region_radius
            )));
        }
        if !(self.abundance > 0.0 && self.abundance < 1.0) {
            return Err(Error::InvalidInput(format!(
                "abundance must lie in (0, 1), got {}",
                self.abundance
            )));
        }
        if self.target_count < 1 {
            return Err(Error::InvalidInput("target_count must be >= 1".into()));
        }
        if self.lattice_constant <= 0.0 {
            return Err(Error::InvalidInput("lattice_constant must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuclearSite {
    /// Distance rank within the configuration (0 = closest).
    pub k: usize,
    /// Position in the NV frame (nm).
    pub r: Vec3,
    /// Polarization Bloch vector.
    pub p: Vec3,
    /// |r| (nm); recomputed on deserialization.
    #[serde(skip)]
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathConfiguration {
    pub spec: LatticeSpec,
    /// Sites sorted by ascending distance to the NV center.
    pub sites: Vec<NuclearSite>,
}

/// Orthonormal rows mapping crystal coordinates to the NV frame
/// ([111] → +z, [11̄0]-family x/y completion).
const NV_FRAME_ROWS: [[f64; 3]; 3] = [
    [
        0.408_248_290_463_863_05,
        0.408_248_290_463_863_05,
        -0.816_496_580_927_726_1,
    ],
    [
        -0.707_106_781_186_547_6,
        0.707_106_781_186_547_6,
        0.0,
    ],
    [
        0.577_350_269_189_625_7,
        0.577_350_269_189_625_7,
        0.577_350_269_189_625_7,
    ],
];

fn to_nv_frame(r: Vec3) -> Vec3 {
    let m = &NV_FRAME_ROWS;
    [
        m[0][0] * r[0] + m[0][1] * r[1] + m[0][2] * r[2],
        m[1][0] * r[0] + m[1][1] * r[1] + m[1][2] * r[2],
        m[2][0] * r[0] + m[2][1] * r[1] + m[2][2] * r[2],
    ]
}

/// Fractional atom positions of the conventional diamond cell (two FCC
/// sublattices offset by (¼,¼,¼)).
const DIAMOND_BASIS: [[f64; 3]; 8] = [
    [0.0, 0.0, 0.0],
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
    [0.5, 0.5, 0.0],
    [0.25, 0.25, 0.25],
    [0.25, 0.75, 0.75],
    [0.75, 0.25, 0.75],
    [0.75, 0.75, 0.25],
];

/// All diamond lattice sites with exclusion_radius ≤ |r| ≤ region_radius,
/// in the NV frame. Deterministic given the spec.
pub fn generate_lattice_sites(spec: &LatticeSpec) -> Result<Vec<Vec3>> {
    spec.validate()?;
    let a = spec.lattice_constant;
    let m = (spec.region_radius / a).ceil() as i64 + 1;
    let mut sites = Vec::new();
    for i in -m..=m {
        for j in -m..=m {
            for k in -m..=m {
                for b in &DIAMOND_BASIS {
                    let r = [
                        (i as f64 + b[0]) * a,
                        (j as f64 + b[1]) * a,
                        (k as f64 + b[2]) * a,
                    ];
                    let d = norm(r);
                    if d >= spec.exclusion_radius && d <= spec.region_radius {
                        sites.push(to_nv_frame(r));
                    }
                }
            }
        }
    }
    let needed = (spec.target_count as f64 / spec.abundance) as usize;
    if sites.len() < spec.target_count {
        return Err(Error::InsufficientCandidates {
            needed,
            found: sites.len(),
        });
    }
    Ok(sites)
}

/// Sample `spec.target_count` sites uniformly without replacement.
///
/// The output is sorted by ascending distance. The region is validated to be
/// consistent with the abundance within a factor of two; a mismatch only
/// logs a warning.
pub fn sample_bath(candidates: &[Vec3], spec: &LatticeSpec) -> Result<BathConfiguration> {
    spec.validate()?;
    if candidates.len() < spec.target_count {
        return Err(Error::InsufficientCandidates {
            needed: spec.target_count,
            found: candidates.len(),
        });
    }
    let implied_abundance = spec.target_count as f64 / candidates.len() as f64;
    let ratio = implied_abundance / spec.abundance;
    if !(0.5..=2.0).contains(&ratio) {
        log::warn!(
            "region_radius {} nm implies abundance {:.4}, configured {:.4}; \
             resize the region to keep them consistent",
            spec.region_radius,
            implied_abundance,
            spec.abundance
        );
    }
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let chosen = rand::seq::index::sample(&mut rng, candidates.len(), spec.target_count);
    let mut sites: Vec<NuclearSite> = chosen
        .iter()
        .map(|i| NuclearSite {
            k: 0,
            r: candidates[i],
            p: [0.0; 3],
            distance: norm(candidates[i]),
        })
        .collect();
    sites.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    for (k, s) in sites.iter_mut().enumerate() {
        s.k = k;
    }
    Ok(BathConfiguration {
        spec: spec.clone(),
        sites,
    })
}

/// Convenience: generate and sample in one call.
pub fn generate_bath(spec: &LatticeSpec) -> Result<BathConfiguration> {
    let candidates = generate_lattice_sites(spec)?;
    sample_bath(&candidates, spec)
}

/// Give every site inside the polarization radius the vector `p_inner`;
/// all others get p = 0.
pub fn assign_polarizations(
    bath: &BathConfiguration,
    p_inner: Vec3,
) -> Result<BathConfiguration> {
    if norm(p_inner) > 1.0 + 1e-12 {
        return Err(Error::InvalidBlochVector(p_inner));
    }
    let mut out = bath.clone();
    for s in &mut out.sites {
        s.p = if s.distance < bath.spec.polarization_radius {
            p_inner
        } else {
            [0.0; 3]
        };
    }
    Ok(out)
}

impl BathConfiguration {
    pub fn inner_count(&self) -> usize {
        self.sites
            .iter()
            .filter(|s| s.distance < self.spec.polarization_radius)
            .count()
    }

    pub fn to_json<W: std::io::Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn to_path(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.to_json(std::io::BufWriter::new(f))
    }

    pub fn from_json<R: std::io::Read>(r: R) -> Result<Self> {
        let mut bath: BathConfiguration = serde_json::from_reader(r)?;
        for s in &mut bath.sites {
            s.distance = norm(s.r);
        }
        bath.validate()?;
        Ok(bath)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::from_json(std::io::BufReader::new(f))
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self
            .sites
            .windows(2)
            .any(|w| w[1].distance < w[0].distance)
        {
            return Err(Error::InvalidInput(
                "sites must be sorted by ascending distance".into(),
            ));
        }
        if let Some(s) = self
            .sites
            .iter()
            .find(|s| s.distance < self.spec.exclusion_radius)
        {
            return Err(Error::InsideExclusionRadius(s.distance));
        }
        Ok(())
    }

    /// The sites with |r| < polarization_radius, i.e. the DNP-controllable ones.
    pub fn inner_sites(&self) -> impl Iterator<Item = &NuclearSite> {
        self.sites
            .iter()
            .filter(|s| s.distance < self.spec.polarization_radius)
    }
}

// Positions in the NV frame: serialize r and p, recompute distance on load.
