//! The bath / plan / run / cher subcommands.

use std::path::{Path, PathBuf};

use nvfid::bathgen::{assign_polarizations, generate_bath, BathConfiguration};
use nvfid::device::{run_group_on_device, DeviceProfile};
use nvfid::physics::{bath_nuclei, dephasing_factor_analytic, BathNucleus, Constants, DephasingSeries};
use nvfid::planner::{build_group, combine_groups, partition_bath, PartitionPlan, PlanGroup};
use nvfid::qsim::{run_group, RunMode};
use nvfid::spectral::{cher, Window};
use serde_json::json;

use crate::config::{
    bz_token, parse_backend, parse_polarization, resolve_profile, Backend, RunConfig,
};
use crate::Failure;

pub fn ensure_out_dir(out: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(out)
        .map_err(|e| Failure::Io(format!("cannot create {}: {e}", out.display())))
}

/// Load the configured bath (or draw one) and apply the inner polarization.
pub fn prepare_bath(config: &RunConfig) -> Result<BathConfiguration, Failure> {
    let bath = match &config.bath_file {
        Some(path) => BathConfiguration::from_path(path)
            .map_err(|e| Failure::Config(format!("bad bath file {}: {e}", path.display())))?,
        None => generate_bath(&config.lattice).map_err(|e| Failure::Config(e.to_string()))?,
    };
    let p = parse_polarization(&config.pol)?;
    assign_polarizations(&bath, p).map_err(|e| Failure::Config(e.to_string()))
}

pub fn cmd_bath(config: &RunConfig) -> Result<(), Failure> {
    config.validate()?;
    let bath = prepare_bath(config)?;
    ensure_out_dir(&config.out)?;
    let path = config.out.join("bath.json");
    bath.to_path(&path)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
    println!(
        "wrote {} ({} sites, {} inside the polarization radius)",
        path.display(),
        bath.sites.len(),
        bath.inner_count()
    );
    Ok(())
}

pub fn cmd_plan(config: &RunConfig) -> Result<(), Failure> {
    config.validate()?;
    let bath = prepare_bath(config)?;
    let device = resolve_profile(&config.device_profile)?;
    let simulator = resolve_profile(&config.simulator_profile)?;
    let plan =
        partition_bath(&bath, &device, &simulator).map_err(|e| Failure::Config(e.to_string()))?;
    ensure_out_dir(&config.out)?;
    let path = config.out.join("plan.json");
    plan.to_path(&path)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
    let device_groups = plan.groups.iter().filter(|g| g.controllable).count();
    println!(
        "wrote {} ({} groups: {} on {}, {} on {})",
        path.display(),
        plan.groups.len(),
        device_groups,
        device.name,
        plan.groups.len() - device_groups,
        simulator.name
    );
    Ok(())
}

fn group_seed(base: u64, group_idx: usize, bz: f64) -> u64 {
    base ^ (group_idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ bz.to_bits()
}

#[allow(clippy::too_many_arguments)]
fn run_one_group(
    config: &RunConfig,
    backend: Backend,
    group: &PlanGroup,
    group_idx: usize,
    nuclei: &[BathNucleus],
    bath: &BathConfiguration,
    device: &DeviceProfile,
    bz: f64,
    times: &[f64],
) -> Result<DephasingSeries, Failure> {
    let constants = Constants::nv();
    let analytic = || {
        let subset: Vec<BathNucleus> = group.nuclei.iter().map(|&k| nuclei[k].clone()).collect();
        dephasing_factor_analytic(&subset, bz, times).map_err(|e| Failure::Backend(e.to_string()))
    };
    let circuit = |mode: RunMode| {
        let spec = build_group(bath, group, bz, &constants)
            .map_err(|e| Failure::Backend(e.to_string()))?;
        run_group(&spec, bz, times, mode).map_err(|e| Failure::Backend(e.to_string()))
    };
    match backend {
        Backend::Analytic => analytic(),
        Backend::ExactCircuit => circuit(RunMode::Exact),
        Backend::Shots => circuit(RunMode::Shots {
            shots: config.shots,
            seed: group_seed(config.seed, group_idx, bz),
        }),
        // Controllable groups go through the routed device pipeline; the
        // rest of the bath stays on the closed form.
        Backend::Noisy if group.controllable => {
            let placement = device.placements.get(&config.placement).ok_or_else(|| {
                Failure::Config(format!(
                    "profile {} has no placement {:?}",
                    device.name, config.placement
                ))
            })?;
            let spec = build_group(bath, group, bz, &constants)
                .map_err(|e| Failure::Backend(e.to_string()))?;
            run_group_on_device(&spec, device, placement, bz, times, RunMode::Exact)
                .map_err(|e| Failure::Backend(e.to_string()))
        }
        Backend::Noisy => analytic(),
    }
}

pub struct RunOutput {
    pub combined: Vec<(f64, PathBuf)>,
}

pub fn cmd_run(config: &RunConfig) -> Result<RunOutput, Failure> {
    config.validate()?;
    let backend = parse_backend(&config.backend)?;
    let bath = prepare_bath(config)?;
    let device = resolve_profile(&config.device_profile)?;
    let simulator = resolve_profile(&config.simulator_profile)?;
    let plan =
        partition_bath(&bath, &device, &simulator).map_err(|e| Failure::Config(e.to_string()))?;
    ensure_out_dir(&config.out)?;
    let times = config.times();
    let constants = Constants::nv();
    let mut combined_paths = Vec::new();
    for &bz in &config.bz {
        let nuclei =
            bath_nuclei(&bath, bz, &constants).map_err(|e| Failure::Backend(e.to_string()))?;
        let mut parts = Vec::with_capacity(plan.groups.len());
        for (i, group) in plan.groups.iter().enumerate() {
            let mut series =
                run_one_group(config, backend, group, i, &nuclei, &bath, &device, bz, &times)?;
            series.meta.group = format!("g{i:02}");
            let path = config
                .out
                .join(format!("group_{i:02}_bz{}.csv", bz_token(bz)));
            series
                .to_path(&path)
                .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
            parts.push(series);
        }
        let combined = combine_groups(&parts).map_err(|e| Failure::Backend(e.to_string()))?;
        let path = config.out.join(format!("combined_bz{}.csv", bz_token(bz)));
        combined
            .to_path(&path)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
        println!(
            "Bz = {bz} G: {} groups -> {}",
            plan.groups.len(),
            path.display()
        );
        combined_paths.push((bz, path));
    }
    write_manifest(config, &device, &simulator, Some(&plan))?;
    Ok(RunOutput {
        combined: combined_paths,
    })
}

/// Reproducibility record: config, profiles and plan, no timestamps, so a
/// rerun with the same inputs is byte-identical.
pub fn write_manifest(
    config: &RunConfig,
    device: &DeviceProfile,
    simulator: &DeviceProfile,
    plan: Option<&PartitionPlan>,
) -> Result<(), Failure> {
    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "profiles": { "device": device, "simulator": simulator },
        "plan": plan,
    });
    let path = config.out.join("manifest.json");
    let f = std::fs::File::create(&path)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(f), &manifest)
        .map_err(|e| Failure::Io(e.to_string()))
}

pub fn cmd_cher(
    input: &Path,
    freqs: usize,
    window: Window,
    out: Option<&Path>,
) -> Result<(), Failure> {
    if !input.is_file() {
        return Err(Failure::Config(format!(
            "series file {} does not exist",
            input.display()
        )));
    }
    let series = DephasingSeries::from_path(input)
        .map_err(|e| Failure::Config(format!("bad series file {}: {e}", input.display())))?;
    let result = cher(&series, freqs, window).map_err(|e| Failure::Backend(e.to_string()))?;
    let stem = input
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("series");
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => input.parent().unwrap_or(Path::new(".")).to_path_buf(),
    };
    ensure_out_dir(&dir)?;
    let path = dir.join(format!("{stem}_cher.csv"));
    result
        .to_path(&path)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {} negativity={}", path.display(), result.negativity);
    Ok(())
}
