//! Canned figure scenarios: each one runs the full pipeline at
//! Bz ∈ {50, 100, 200} G and leaves plottable CSVs plus a gnuplot script.

use std::path::Path;

use nvfid::device::run_group_on_device;
use nvfid::physics::{bath_nuclei, Constants};
use nvfid::qsim::{GroupSpec, Polarization, RunMode};
use nvfid::spectral::{cher, Window};

use crate::commands::{cmd_run, ensure_out_dir, prepare_bath, RunOutput};
use crate::config::{bz_token, resolve_profile, RunConfig};
use crate::Failure;

const FIELDS: [f64; 3] = [50.0, 100.0, 200.0];

pub fn cmd_figure(config: &RunConfig, name: &str) -> Result<(), Failure> {
    match name {
        "fig5" => dephasing_and_spectrum(config, name, "none"),
        "fig6" => dephasing_and_spectrum(config, name, "z"),
        "fig7" => dephasing_and_spectrum(config, name, "x"),
        "fig8" => placement_comparison(config, name),
        other => Err(Failure::Config(format!(
            "unknown figure {other:?} (expected fig5 | fig6 | fig7 | fig8)"
        ))),
    }
}

fn figure_config(config: &RunConfig, name: &str, pol: &str, backend: &str) -> RunConfig {
    RunConfig {
        pol: pol.into(),
        backend: backend.into(),
        bz: FIELDS.to_vec(),
        out: config.out.join(name),
        ..config.clone()
    }
}

/// Combined dephasing series per field plus its unwindowed spectrum.
fn dephasing_and_spectrum(config: &RunConfig, name: &str, pol: &str) -> Result<(), Failure> {
    let cfg = figure_config(config, name, pol, "analytic");
    let RunOutput { combined, .. } = cmd_run(&cfg)?;
    let mut spectrum_files = Vec::new();
    for (bz, path) in &combined {
        let series = nvfid::physics::DephasingSeries::from_path(path)
            .map_err(|e| Failure::Io(e.to_string()))?;
        let result =
            cher(&series, 2048, Window::None).map_err(|e| Failure::Backend(e.to_string()))?;
        let out = cfg.out.join(format!("cher_bz{}.csv", bz_token(*bz)));
        result
            .to_path(&out)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", out.display())))?;
        println!("Bz = {bz} G: negativity = {}", result.negativity);
        spectrum_files.push(out);
    }
    write_gnuplot(&cfg.out, name, &combined, &spectrum_files)?;
    Ok(())
}

/// Two-nucleus prototype on each placement of the device profile, then the
/// full bath through the noisy backend on the default placement.
fn placement_comparison(config: &RunConfig, name: &str) -> Result<(), Failure> {
    let cfg = figure_config(config, name, "none", "noisy");
    let device = resolve_profile(&cfg.device_profile)?;
    let bath = prepare_bath(&cfg)?;
    let constants = Constants::nv();
    let times = cfg.times();
    let sigma = cfg.tmax / 4.0;
    ensure_out_dir(&cfg.out)?;
    let mut placement_names: Vec<&String> = device.placements.keys().collect();
    placement_names.retain(|n| n.as_str() != cfg.placement);
    for &bz in &FIELDS {
        let nuclei =
            bath_nuclei(&bath, bz, &constants).map_err(|e| Failure::Backend(e.to_string()))?;
        let pairs = nuclei
            .iter()
            .take(2)
            .map(|n| (n.spec.clone(), Polarization::Unpolarized))
            .collect();
        let group = GroupSpec::with_layout(pairs).map_err(|e| Failure::Backend(e.to_string()))?;
        for &pname in &placement_names {
            let placement = &device.placements[pname];
            let series =
                run_group_on_device(&group, &device, placement, bz, &times, RunMode::Exact)
                    .map_err(|e| Failure::Backend(e.to_string()))?;
            let path = cfg
                .out
                .join(format!("proto_{pname}_bz{}.csv", bz_token(bz)));
            series
                .to_path(&path)
                .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
            let result = cher(&series, 2048, Window::Gaussian { sigma })
                .map_err(|e| Failure::Backend(e.to_string()))?;
            let spath = cfg
                .out
                .join(format!("proto_{pname}_bz{}_cher.csv", bz_token(bz)));
            result
                .to_path(&spath)
                .map_err(|e| Failure::Io(format!("cannot write {}: {e}", spath.display())))?;
            println!(
                "Bz = {bz} G, placement {pname}: negativity = {}",
                result.negativity
            );
        }
    }
    // full bath: inner groups routed with crosstalk, the rest analytic
    let RunOutput { combined, .. } = cmd_run(&cfg)?;
    write_gnuplot(&cfg.out, name, &combined, &[])?;
    Ok(())
}

fn write_gnuplot(
    dir: &Path,
    name: &str,
    combined: &[(f64, std::path::PathBuf)],
    spectra: &[std::path::PathBuf],
) -> Result<(), Failure> {
    let mut s = String::new();
    s.push_str("set datafile separator \",\"\nset key top right\n");
    s.push_str("set xlabel \"t (us)\"\nset ylabel \"Re phi\"\n");
    let series = combined
        .iter()
        .map(|(bz, p)| {
            format!(
                "\"{}\" using 1:2 with lines title \"{bz} G\"",
                p.file_name().unwrap().to_string_lossy()
            )
        })
        .collect::<Vec<_>>()
        .join(", \\\n     ");
    s.push_str(&format!("plot {series}\npause -1\n"));
    if !spectra.is_empty() {
        s.push_str("set xlabel \"omega (rad/us)\"\nset ylabel \"w(omega)\"\n");
        let spec = spectra
            .iter()
            .map(|p| {
                format!(
                    "\"{}\" using 1:2 with lines",
                    p.file_name().unwrap().to_string_lossy()
                )
            })
            .collect::<Vec<_>>()
            .join(", \\\n     ");
        s.push_str(&format!("plot {spec}\npause -1\n"));
    }
    let path = dir.join(format!("{name}.gp"));
    std::fs::write(&path, s)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}
