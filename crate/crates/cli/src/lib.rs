//! Library surface of the experiment runner, exposed for integration
//! tests: configuration handling, campaign dispatch and file emission.

pub mod config;
pub mod emit;
pub mod plots;

use std::path::Path;

use config::{config_hash, CampaignSettings, ResolvedConfig};
use emit::{dataset_inventory, Emitter, Manifest, Provenance, TaskRecord};

pub enum RunOutcome {
    /// Everything recomputed (or verified) and all tasks succeeded.
    Complete(Manifest),
    /// Some independent tasks failed; the manifest lists them.
    Partial(Manifest),
    /// Existing manifest matched the config and all files verified.
    UpToDate(Manifest),
}

/// Executes the configured campaign and emits datasets, fit records,
/// plot scripts and the manifest under `config.out_dir`.
pub fn run(config: &ResolvedConfig) -> Result<RunOutcome, String> {
    let out_dir = Path::new(&config.out_dir);
    let hash = config_hash(config);

    // resume: identical config with an intact, fully successful manifest
    if let Some(existing) = Manifest::load(out_dir) {
        if existing.config_hash == hash && existing.all_ok() && existing.verify_files(out_dir)
        {
            return Ok(RunOutcome::UpToDate(existing));
        }
    }

    let mut em = Emitter::new(out_dir).map_err(|e| e.to_string())?;
    let prov = Provenance {
        config_hash: hash.clone(),
        seed: config.seed,
        units: "dimensionless model units".into(),
        window_source: match &config.settings {
            CampaignSettings::SpinSweep(_) => "calibrated".into(),
            CampaignSettings::BhSweep(_) | CampaignSettings::BhShell(_) => {
                "local-instability".into()
            }
            _ => "scanned".into(),
        },
    };

    let mut tasks: Vec<TaskRecord> = Vec::new();
    match &config.settings {
        CampaignSettings::SpinSweep(settings) => {
            let res = scramble_core::experiments::run_spin_sweep(settings)
                .map_err(|e| e.to_string())?;
            tasks.extend(emit::emit_spin_sweep(&mut em, &res, &prov).map_err(|e| e.to_string())?);
        }
        CampaignSettings::SpinSSweep(settings) => {
            let res = scramble_core::experiments::run_spin_s_sweep(settings)
                .map_err(|e| e.to_string())?;
            tasks.extend(
                emit::emit_spin_s_sweep(&mut em, &res, &prov).map_err(|e| e.to_string())?,
            );
        }
        CampaignSettings::BhSweep(settings) => {
            let res = scramble_core::experiments::run_bh_fp_sweep(settings)
                .map_err(|e| e.to_string())?;
            tasks.extend(emit::emit_bh_sweep(&mut em, &res, &prov).map_err(|e| e.to_string())?);
        }
        CampaignSettings::BhShell(settings) => {
            let res = scramble_core::experiments::run_bh_shell_sweep(settings)
                .map_err(|e| e.to_string())?;
            tasks.extend(emit::emit_bh_shell(&mut em, &res, &prov).map_err(|e| e.to_string())?);
        }
        CampaignSettings::SectionAtlas(settings) => {
            let res = scramble_core::experiments::run_section_atlas(settings)
                .map_err(|e| e.to_string())?;
            tasks.extend(
                emit::emit_section_atlas(&mut em, &res, &prov).map_err(|e| e.to_string())?,
            );
        }
    }

    // plot scripts for whatever datasets were produced
    let inventory = dataset_inventory(em.out_dir());
    tasks.extend(plots::emit_plots(&mut em, &inventory).map_err(|e| e.to_string())?);

    // resolved-config echo for provenance
    let echo = toml::to_string_pretty(&config.echo).map_err(|e| e.to_string())?;
    em.write("config.echo.toml", &echo).map_err(|e| e.to_string())?;

    let manifest = em.finish(config, &hash, tasks).map_err(|e| e.to_string())?;
    if manifest.tasks.iter().any(|t| t.status == "failed") {
        Ok(RunOutcome::Partial(manifest))
    } else {
        Ok(RunOutcome::Complete(manifest))
    }
}

/// Regenerates plot scripts for an existing output directory.
pub fn emit_plots_only(out_dir: &Path) -> Result<Vec<TaskRecord>, String> {
    let Some(manifest) = Manifest::load(out_dir) else {
        return Err(format!(
            "no manifest.json under {}; run the experiment first",
            out_dir.display()
        ));
    };
    let mut em = Emitter::new(out_dir).map_err(|e| e.to_string())?;
    let inventory = dataset_inventory(out_dir);
    if inventory.is_empty() {
        eprintln!("warning: empty dataset inventory, no plots emitted");
        return Ok(Vec::new());
    }
    let tasks = plots::emit_plots(&mut em, &inventory).map_err(|e| e.to_string())?;
    let _ = manifest;
    Ok(tasks)
}
