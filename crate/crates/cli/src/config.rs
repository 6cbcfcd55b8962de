//! Experiment configuration: human-editable TOML with explicit defaults
//! for every numerical knob, scale presets, and validation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use scramble_core::experiments::{
    BhShellSettings, BhSweepSettings, Numerics, SectionAtlasSettings, SpinSSweepSettings,
    SpinSweepSettings,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SpinFpSweep,
    SpinLine,
    SpinSSweep,
    BhFpSweep,
    BhShellSweep,
    SectionAtlas,
}

impl Experiment {
    pub fn all() -> &'static [(&'static str, &'static str)] {
        &[
            (
                "spin-fp-sweep",
                "two-spin interaction sweep: exponents, OTOCs at the fixed point, joint fit",
            ),
            (
                "spin-line",
                "two-spin sweep with coherent states displaced along p_2 (coefficient table)",
            ),
            (
                "spin-s-sweep",
                "OTOC versus spin representation at fixed interaction (plateau, rate saturation)",
            ),
            (
                "bh-fp-sweep",
                "Bose-Hubbard ring sweep at the homogeneous fixed point",
            ),
            (
                "bh-shell-sweep",
                "Bose-Hubbard states on the fixed-point energy shell at decreasing q_1",
            ),
            (
                "section-atlas",
                "Poincare sections and energy-drift audit on the reference shells",
            ),
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::SpinFpSweep => "spin-fp-sweep",
            Experiment::SpinLine => "spin-line",
            Experiment::SpinSSweep => "spin-s-sweep",
            Experiment::BhFpSweep => "bh-fp-sweep",
            Experiment::BhShellSweep => "bh-shell-sweep",
            Experiment::SectionAtlas => "section-atlas",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Reduced sizes that run on a desk machine in minutes to hours.
    Desk,
    /// Full-scale runs (spin s = 60; rings 3x100 and 4x40); long-running.
    Paper,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpinSection {
    pub s: Option<f64>,
    pub b: Option<[f64; 3]>,
    pub j_grid: Option<Vec<f64>>,
    pub delta_p2: Option<Vec<f64>>,
    pub calibration_j: Option<f64>,
    pub chaotic_offset_p2: Option<f64>,
    /// Fixed interaction of the representation sweep.
    pub j: Option<f64>,
    pub s_list: Option<Vec<f64>>,
    pub span_te: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BhSection {
    pub sites: Option<usize>,
    pub particles: Option<usize>,
    pub theta_grid: Option<Vec<f64>>,
    pub q1_fractions: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SectionsSection {
    pub n_init: Option<usize>,
    pub t_max: Option<f64>,
    pub box_q: Option<f64>,
    pub box_p: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    pub integrator_tol: Option<f64>,
    pub drift_tolerance: Option<f64>,
    pub lyapunov_horizon: Option<f64>,
    pub seeds_per_point: Option<usize>,
    pub epsilon_offset: Option<f64>,
    pub time_points: Option<usize>,
    pub time_span_factor: Option<f64>,
    pub calibration_max_mismatch: Option<f64>,
    pub min_window_points: Option<usize>,
    pub bootstrap_resamples: Option<usize>,
    pub continuation_jump_threshold: Option<f64>,
    pub renorm_threshold: Option<f64>,
    pub plateau_threshold: Option<f64>,
    pub plateau_window_fraction: Option<f64>,
}

/// On-disk configuration; unspecified values fall back to the scale
/// preset.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Experiment,
    pub seed: Option<u64>,
    pub scale: Option<Scale>,
    pub out_dir: Option<String>,
    #[serde(default)]
    pub spin: SpinSection,
    #[serde(default)]
    pub bose_hubbard: BhSection,
    #[serde(default)]
    pub sections: SectionsSection,
    #[serde(default)]
    pub numerics: NumericsSection,
}

impl RawConfig {
    pub fn from_path(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("config parse error: {e}"))
    }
}

/// Fully resolved settings for one campaign.
#[derive(Clone, Debug)]
pub enum CampaignSettings {
    SpinSweep(SpinSweepSettings),
    SpinSSweep(SpinSSweepSettings),
    BhSweep(BhSweepSettings),
    BhShell(BhShellSettings),
    SectionAtlas(SectionAtlasSettings),
}

#[derive(Clone, Debug)]
pub struct ResolvedConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub scale: Scale,
    pub out_dir: String,
    pub settings: CampaignSettings,
    /// Canonical echo used for hashing and provenance.
    pub echo: RawConfig,
}

fn numerics_from(section: &NumericsSection, seed: u64) -> Numerics {
    let d = Numerics::default();
    Numerics {
        integrator_tol: section.integrator_tol.unwrap_or(d.integrator_tol),
        drift_tolerance: section.drift_tolerance.unwrap_or(d.drift_tolerance),
        lyapunov_horizon: section.lyapunov_horizon.unwrap_or(d.lyapunov_horizon),
        seeds_per_point: section.seeds_per_point.unwrap_or(d.seeds_per_point),
        epsilon_offset: section.epsilon_offset.unwrap_or(d.epsilon_offset),
        time_points: section.time_points.unwrap_or(d.time_points),
        time_span_factor: section.time_span_factor.unwrap_or(d.time_span_factor),
        rng_seed: seed,
        calibration_max_mismatch: section
            .calibration_max_mismatch
            .unwrap_or(d.calibration_max_mismatch),
        min_window_points: section.min_window_points.unwrap_or(d.min_window_points),
        bootstrap_resamples: section
            .bootstrap_resamples
            .unwrap_or(d.bootstrap_resamples),
        continuation_jump_threshold: section
            .continuation_jump_threshold
            .unwrap_or(d.continuation_jump_threshold),
        renorm_threshold: section.renorm_threshold.unwrap_or(d.renorm_threshold),
        plateau_threshold: section.plateau_threshold.unwrap_or(d.plateau_threshold),
        plateau_window_fraction: section
            .plateau_window_fraction
            .unwrap_or(d.plateau_window_fraction),
    }
}

fn validate_grid(name: &str, grid: &[f64]) -> Result<(), String> {
    if grid.is_empty() {
        return Err(format!("{name} must be nonempty"));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(format!("{name} contains non-finite entries"));
    }
    Ok(())
}

/// Applies scale presets, command-line overrides and validation.
pub fn resolve(
    raw: &RawConfig,
    cli_out: Option<String>,
    cli_seed: Option<u64>,
    cli_scale: Option<Scale>,
) -> Result<ResolvedConfig, String> {
    let scale = cli_scale.or(raw.scale).unwrap_or(Scale::Desk);
    let seed = cli_seed.or(raw.seed).unwrap_or(42);
    let out_dir = cli_out
        .or_else(|| raw.out_dir.clone())
        .unwrap_or_else(|| format!("runs/{}", raw.experiment.name()));
    let numerics = numerics_from(&raw.numerics, seed);

    let spin_s = raw.spin.s.unwrap_or(match scale {
        Scale::Desk => 40.0,
        Scale::Paper => 60.0,
    });
    let spin_b = raw.spin.b.unwrap_or([0.05, 0.0, 0.05]);
    let default_j_grid = vec![0.02, 0.095, 0.125, 0.156, 0.186, 0.217, 0.248, 0.278];

    let settings = match raw.experiment {
        Experiment::SpinFpSweep | Experiment::SpinLine => {
            let j_grid = raw.spin.j_grid.clone().unwrap_or(default_j_grid);
            validate_grid("spin.j_grid", &j_grid)?;
            let delta_p2 = match raw.experiment {
                Experiment::SpinLine => raw
                    .spin
                    .delta_p2
                    .clone()
                    .unwrap_or_else(|| vec![0.0, 0.05, 0.10, 0.15, 0.30]),
                _ => raw.spin.delta_p2.clone().unwrap_or_else(|| vec![0.0]),
            };
            validate_grid("spin.delta_p2", &delta_p2)?;
            let calibration_j = raw.spin.calibration_j.unwrap_or(0.217);
            if !(spin_s >= 0.5) {
                return Err("spin.s must be at least 1/2".into());
            }
            CampaignSettings::SpinSweep(SpinSweepSettings {
                b: spin_b,
                s: spin_s,
                j_grid,
                delta_p2,
                calibration_j,
                chaotic_offset_p2: raw.spin.chaotic_offset_p2.unwrap_or(0.3),
                numerics,
            })
        }
        Experiment::SpinSSweep => {
            let s_list = raw.spin.s_list.clone().unwrap_or(match scale {
                Scale::Desk => vec![10.0, 15.0, 20.0],
                Scale::Paper => vec![30.0, 40.0, 50.0, 60.0],
            });
            validate_grid("spin.s_list", &s_list)?;
            CampaignSettings::SpinSSweep(SpinSSweepSettings {
                b: spin_b,
                j: raw.spin.j.unwrap_or(0.217),
                s_list,
                span_te: raw.spin.span_te.unwrap_or(3.0),
                numerics,
            })
        }
        Experiment::BhFpSweep => {
            let sites = raw.bose_hubbard.sites.unwrap_or(3);
            let particles = raw.bose_hubbard.particles.unwrap_or(match scale {
                Scale::Desk => 60,
                Scale::Paper => 100,
            });
            let theta_grid = raw.bose_hubbard.theta_grid.clone().unwrap_or_else(|| {
                (0..8).map(|k| -1.4 + 0.3 * k as f64 / 7.0).collect()
            });
            validate_grid("bose_hubbard.theta_grid", &theta_grid)?;
            if sites < 3 {
                return Err("bose_hubbard.sites must be at least 3".into());
            }
            CampaignSettings::BhSweep(BhSweepSettings {
                sites,
                particles,
                theta_grid,
                numerics,
            })
        }
        Experiment::BhShellSweep => {
            let sites = raw.bose_hubbard.sites.unwrap_or(4);
            let particles = raw.bose_hubbard.particles.unwrap_or(match scale {
                Scale::Desk => 30,
                Scale::Paper => 40,
            });
            let theta_grid = raw
                .bose_hubbard
                .theta_grid
                .clone()
                .unwrap_or_else(|| vec![-1.4, -1.325, -1.25, -1.175, -1.1]);
            validate_grid("bose_hubbard.theta_grid", &theta_grid)?;
            let q1_fractions = raw
                .bose_hubbard
                .q1_fractions
                .clone()
                .unwrap_or_else(|| vec![1.0, 0.9965, 0.993, 0.9895, 0.986]);
            validate_grid("bose_hubbard.q1_fractions", &q1_fractions)?;
            CampaignSettings::BhShell(BhShellSettings {
                sites,
                particles,
                theta_grid,
                q1_fractions,
                numerics,
            })
        }
        Experiment::SectionAtlas => {
            let j_grid = raw
                .spin
                .j_grid
                .clone()
                .unwrap_or_else(|| vec![0.095, 0.156, 0.217, 0.278]);
            validate_grid("spin.j_grid", &j_grid)?;
            CampaignSettings::SectionAtlas(SectionAtlasSettings {
                b: spin_b,
                s: spin_s,
                j_grid,
                n_init: raw.sections.n_init.unwrap_or(20),
                t_max: raw.sections.t_max.unwrap_or(1500.0),
                box_q: raw.sections.box_q.unwrap_or(1.2),
                box_p: raw.sections.box_p.unwrap_or(0.45),
                numerics,
            })
        }
    };

    Ok(ResolvedConfig {
        experiment: raw.experiment,
        seed,
        scale,
        out_dir,
        settings,
        echo: raw.clone(),
    })
}

/// Stable hash of the configuration and seed, recorded in the manifest.
pub fn config_hash(resolved: &ResolvedConfig) -> String {
    use sha2::{Digest, Sha256};
    let echo = toml::to_string(&resolved.echo).unwrap_or_default();
    let mut hasher = Sha256::new();
    hasher.update(echo.as_bytes());
    hasher.update(resolved.seed.to_le_bytes());
    hasher.update(resolved.experiment.name().as_bytes());
    hasher.update(match resolved.scale {
        Scale::Desk => b"desk".as_slice(),
        Scale::Paper => b"paper".as_slice(),
    });
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
