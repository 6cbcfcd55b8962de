//! Dataset and manifest emission: deterministic CSV files, JSON fit
//! records with provenance, and a checksummed file index.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use scramble_core::analysis::{ExpFit, FitWindow, HypothesisFit, WindowSource};
use scramble_core::dynamics::FixedPoint;
use scramble_core::experiments::{
    BhShellResult, BhSweepResult, SectionAtlasEntry, SpinSSweepResult, SpinSweepResult,
};
use scramble_core::quantum::OtocSeries;

use crate::config::ResolvedConfig;

/// Shortest-roundtrip decimal rendering; bit-identical across runs.
fn f(x: f64) -> String {
    format!("{x:?}")
}

pub struct Emitter {
    out_dir: PathBuf,
    files: Vec<FileRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaskRecord {
    pub name: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact_version: String,
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub tasks: Vec<TaskRecord>,
    pub files: Vec<FileRecord>,
}

impl Manifest {
    pub fn all_ok(&self) -> bool {
        self.tasks.iter().all(|t| t.status != "failed")
    }

    pub fn load(dir: &Path) -> Option<Manifest> {
        let text = fs::read_to_string(dir.join("manifest.json")).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// True when every indexed file still matches its checksum.
    pub fn verify_files(&self, dir: &Path) -> bool {
        self.files.iter().all(|rec| {
            fs::read(dir.join(&rec.path))
                .map(|bytes| sha256_hex(&bytes) == rec.sha256)
                .unwrap_or(false)
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl Emitter {
    pub fn new(out_dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(out_dir.join("data"))?;
        fs::create_dir_all(out_dir.join("plots"))?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    pub fn write(&mut self, rel: &str, contents: &str) -> std::io::Result<()> {
        let path = self.out_dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut file = fs::File::create(&path)?;
        file.write_all(contents.as_bytes())?;
        self.files.push(FileRecord {
            path: rel.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
            bytes: contents.len() as u64,
        });
        Ok(())
    }

    pub fn finish(
        self,
        config: &ResolvedConfig,
        config_hash: &str,
        tasks: Vec<TaskRecord>,
    ) -> std::io::Result<Manifest> {
        let manifest = Manifest {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            experiment: config.experiment.name().to_string(),
            config_hash: config_hash.to_string(),
            seed: config.seed,
            tasks,
            files: self.files.clone(),
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        fs::write(self.out_dir.join("manifest.json"), text)?;
        Ok(manifest)
    }
}

// ---------------------------------------------------------------------
// serializable fit records (fits.json)

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WindowRecord {
    pub t0: f64,
    pub t1: f64,
    pub source: String,
}

impl From<&FitWindow> for WindowRecord {
    fn from(w: &FitWindow) -> Self {
        Self {
            t0: w.t0,
            t1: w.t1,
            source: match w.source {
                WindowSource::Calibrated => "calibrated".into(),
                WindowSource::LocalInstability => "local-instability".into(),
                WindowSource::Scanned => "scanned".into(),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExpFitRecord {
    pub offset: f64,
    pub amplitude: f64,
    pub rate: f64,
    pub lambda_q: f64,
    pub window_t0: f64,
    pub window_t1: f64,
    pub rel_residual: f64,
    pub n_points: usize,
}

impl From<&ExpFit> for ExpFitRecord {
    fn from(fit: &ExpFit) -> Self {
        Self {
            offset: fit.offset,
            amplitude: fit.amplitude,
            rate: fit.rate,
            lambda_q: fit.lambda_q(),
            window_t0: fit.window.0,
            window_t1: fit.window.1,
            rel_residual: fit.rel_residual,
            n_points: fit.n_points,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HypothesisRecord {
    pub coef_a: f64,
    pub coef_b: f64,
    pub sum_ab: f64,
    pub rel_residual: f64,
    pub lyapunov_only_coef: f64,
    pub lyapunov_only_residual: f64,
    pub local_only_coef: f64,
    pub local_only_residual: f64,
    pub mean_coef: f64,
    pub asym_coef: f64,
    pub triples: Vec<[f64; 4]>,
}

impl From<&HypothesisFit> for HypothesisRecord {
    fn from(fit: &HypothesisFit) -> Self {
        let dec = scramble_core::analysis::ab_decomposition_report(fit);
        Self {
            coef_a: fit.coef_a,
            coef_b: fit.coef_b,
            sum_ab: fit.sum_ab,
            rel_residual: fit.rel_residual,
            lyapunov_only_coef: fit.lyapunov_only.coef,
            lyapunov_only_residual: fit.lyapunov_only.rel_residual,
            local_only_coef: fit.local_only.coef,
            local_only_residual: fit.local_only.rel_residual,
            mean_coef: dec.mean_coef,
            asym_coef: dec.asym_coef,
            triples: fit
                .triples
                .iter()
                .map(|t| [t.param, t.lambda_l, t.lambda_loc, t.two_lambda_q])
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub window_source: String,
    /// All emitted quantities are dimensionless model units.
    pub units: String,
}

// ---------------------------------------------------------------------
// campaign emission

fn otoc_csv(series: &OtocSeries) -> String {
    // time axis is dimensionless model time; quantities carry no units
    let mut out = String::from("t,c,f,g\n");
    for k in 0..series.times.len() {
        let fval = series.f.as_ref().map(|v| v[k]);
        let gval = series.g.as_ref().map(|v| v[k]);
        out.push_str(&format!(
            "{},{},{},{}\n",
            f(series.times[k]),
            f(series.c[k]),
            fval.map(f).unwrap_or_default(),
            gval.map(f).unwrap_or_default(),
        ));
    }
    out
}

fn branch_csv(branch: &[FixedPoint], param_key: &str) -> String {
    let mut out = format!("{param_key},q1,q2,p1,p2,lambda_loc,residual_norm\n");
    for fp in branch {
        let c = &fp.point.coords;
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            f(fp.params.get(param_key).copied().unwrap_or(f64::NAN)),
            f(c[0]),
            f(c[1]),
            f(c[2]),
            f(c[3]),
            f(fp.lambda_loc),
            f(fp.residual_norm),
        ));
    }
    out
}

fn tag(x: f64) -> String {
    // filesystem-safe parameter tag
    format!("{x:?}").replace('-', "m").replace('.', "p")
}

pub fn emit_spin_sweep(em: &mut Emitter, res: &SpinSweepResult, prov: &Provenance) -> std::io::Result<Vec<TaskRecord>> {
    let mut tasks = Vec::new();
    em.write("data/branch.csv", &branch_csv(&res.branch, "J"))?;

    // exponent summary (one row per interaction and line point)
    let mut exps = String::from(
        "j,delta_p2,lambda_loc,lambda_l,two_lambda_q,rate_stderr,window_t0,window_t1,fit_rel_residual,two_lambda_q_cal,cal_window_t0,cal_window_t1,cal_rel_residual\n",
    );
    for p in &res.points {
        for rec in &p.otocs {
            exps.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                f(p.j),
                f(rec.delta_p2),
                f(p.fixed_point.lambda_loc),
                f(p.lyapunov.value),
                f(rec.fit_local.rate),
                f(rec.rate_stderr),
                f(rec.fit_local.window.0),
                f(rec.fit_local.window.1),
                f(rec.fit_local.rel_residual),
                f(rec.fit_calibrated.rate),
                f(rec.fit_calibrated.window.0),
                f(rec.fit_calibrated.window.1),
                f(rec.fit_calibrated.rel_residual),
            ));
        }
    }
    em.write("data/exponents.csv", &exps)?;

    // per-point series and Lyapunov convergence curves
    for p in &res.points {
        for rec in &p.otocs {
            em.write(
                &format!("data/otoc_J{}_dp{}.csv", tag(p.j), tag(rec.delta_p2)),
                &otoc_csv(&rec.series),
            )?;
        }
        let mut ly = String::from("seed,t,running_estimate\n");
        for (sdx, curve) in p.lyapunov.per_seed.iter().enumerate() {
            for (t, v) in curve.times.iter().zip(&curve.running) {
                ly.push_str(&format!("{},{},{}\n", sdx, f(*t), f(*v)));
            }
        }
        em.write(&format!("data/lyapunov_J{}.csv", tag(p.j)), &ly)?;
        tasks.push(TaskRecord {
            name: format!("spin-point-J{}", tag(p.j)),
            status: "ok".into(),
            error: None,
        });
    }
    for (j, err) in &res.failures {
        tasks.push(TaskRecord {
            name: format!("spin-point-J{}", tag(*j)),
            status: "failed".into(),
            error: Some(err.clone()),
        });
    }

    em.write(
        "data/calibration_otoc.csv",
        &otoc_csv(&res.calibration.reference_series),
    )?;

    // coefficient table across the line
    let mut table = String::from(
        "delta_p2,coef_a,stderr_a,coef_b,stderr_b,sum_ab,rel_residual,n_excluded\n",
    );
    for row in &res.rows {
        table.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            f(row.delta_p2),
            f(row.fit.coef_a),
            f(row.stderr_a),
            f(row.fit.coef_b),
            f(row.stderr_b),
            f(row.fit.sum_ab),
            f(row.fit.rel_residual),
            row.excluded.len(),
        ));
    }
    em.write("data/coefficients.csv", &table)?;

    #[derive(Serialize)]
    struct SpinFits<'a> {
        provenance: &'a Provenance,
        calibration_window: WindowRecord,
        calibration_fit: ExpFitRecord,
        calibration_lambda_l: f64,
        rows: Vec<SpinRowRecord>,
    }
    #[derive(Serialize)]
    struct SpinRowRecord {
        delta_p2: f64,
        stderr_a: f64,
        stderr_b: f64,
        excluded_params: Vec<f64>,
        #[serde(flatten)]
        fit: HypothesisRecord,
    }
    let fits = SpinFits {
        provenance: prov,
        calibration_window: (&res.calibration.window).into(),
        calibration_fit: (&res.calibration.reference_fit).into(),
        calibration_lambda_l: res.calibration.reference_lambda_l,
        rows: res
            .rows
            .iter()
            .map(|row| SpinRowRecord {
                delta_p2: row.delta_p2,
                stderr_a: row.stderr_a,
                stderr_b: row.stderr_b,
                excluded_params: row.excluded.clone(),
                fit: (&row.fit).into(),
            })
            .collect(),
    };
    em.write("fits.json", &serde_json::to_string_pretty(&fits)?)?;
    tasks.push(TaskRecord {
        name: "calibration".into(),
        status: "ok".into(),
        error: None,
    });
    tasks.push(TaskRecord {
        name: "hypothesis-fit".into(),
        status: "ok".into(),
        error: None,
    });
    Ok(tasks)
}

pub fn emit_spin_s_sweep(
    em: &mut Emitter,
    res: &SpinSSweepResult,
    prov: &Provenance,
) -> std::io::Result<Vec<TaskRecord>> {
    let mut tasks = Vec::new();
    let mut summary = String::from("s,plateau_onset,plateau_level,rate,rel_residual\n");
    for p in &res.points {
        em.write(&format!("data/otoc_s{}.csv", tag(p.s)), &otoc_csv(&p.series))?;
        summary.push_str(&format!(
            "{},{},{},{},{}\n",
            f(p.s),
            p.plateau.map(|pl| f(pl.t_onset)).unwrap_or_default(),
            p.plateau.map(|pl| f(pl.level)).unwrap_or_default(),
            p.fit.map(|fit| f(fit.rate)).unwrap_or_default(),
            p.fit.map(|fit| f(fit.rel_residual)).unwrap_or_default(),
        ));
        tasks.push(TaskRecord {
            name: format!("spin-s-{}", tag(p.s)),
            status: "ok".into(),
            error: None,
        });
    }
    em.write("data/plateau.csv", &summary)?;
    #[derive(Serialize)]
    struct SSweepFits<'a> {
        provenance: &'a Provenance,
        lambda_loc: f64,
        fits: Vec<(f64, Option<ExpFitRecord>)>,
    }
    let fits = SSweepFits {
        provenance: prov,
        lambda_loc: res.fixed_point.lambda_loc,
        fits: res
            .points
            .iter()
            .map(|p| (p.s, p.fit.as_ref().map(|fit| fit.into())))
            .collect(),
    };
    em.write("fits.json", &serde_json::to_string_pretty(&fits)?)?;
    Ok(tasks)
}

pub fn emit_bh_sweep(
    em: &mut Emitter,
    res: &BhSweepResult,
    prov: &Provenance,
) -> std::io::Result<Vec<TaskRecord>> {
    let mut tasks = Vec::new();
    // debugging aid: the fixed-N basis enumeration (small sectors only)
    if let Some(p) = res.points.first() {
        let basis = scramble_core::bose_hubbard::FockBasis::new(
            res.settings.sites,
            res.settings.particles,
        );
        let _ = p;
        if basis.len() <= 10_000 {
            em.write("data/fock_basis.csv", &basis.to_csv())?;
        }
    }
    let mut exps = String::from(
        "theta,mu,lambda_loc,lambda_l,two_lambda_q,rate_stderr,window_t0,window_t1,fit_rel_residual\n",
    );
    for p in &res.points {
        exps.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            f(p.theta),
            f(p.fixed_point.params["mu"]),
            f(p.fixed_point.lambda_loc),
            f(p.lyapunov.value),
            f(p.fit.rate),
            f(p.rate_stderr),
            f(p.window.t0),
            f(p.window.t1),
            f(p.fit.rel_residual),
        ));
        em.write(
            &format!("data/otoc_theta{}.csv", tag(p.theta)),
            &otoc_csv(&p.series),
        )?;
        tasks.push(TaskRecord {
            name: format!("bh-point-theta{}", tag(p.theta)),
            status: "ok".into(),
            error: None,
        });
    }
    for (theta, err) in &res.failures {
        tasks.push(TaskRecord {
            name: format!("bh-point-theta{}", tag(*theta)),
            status: "failed".into(),
            error: Some(err.clone()),
        });
    }
    em.write("data/exponents.csv", &exps)?;

    #[derive(Serialize)]
    struct BhFits<'a> {
        provenance: &'a Provenance,
        stderr_a: f64,
        stderr_b: f64,
        excluded_params: Vec<f64>,
        #[serde(flatten)]
        hypothesis: HypothesisRecord,
    }
    let fits = BhFits {
        provenance: prov,
        stderr_a: res.stderr_a,
        stderr_b: res.stderr_b,
        excluded_params: res.excluded.clone(),
        hypothesis: (&res.hypothesis).into(),
    };
    em.write("fits.json", &serde_json::to_string_pretty(&fits)?)?;
    tasks.push(TaskRecord {
        name: "hypothesis-fit".into(),
        status: "ok".into(),
        error: None,
    });
    Ok(tasks)
}

pub fn emit_bh_shell(
    em: &mut Emitter,
    res: &BhShellResult,
    prov: &Provenance,
) -> std::io::Result<Vec<TaskRecord>> {
    let mut tasks = Vec::new();
    let mut pts = String::from(
        "theta,q1_fraction,distance,lambda_l,two_lambda_q,rel_residual\n",
    );
    for p in &res.points {
        pts.push_str(&format!(
            "{},{},{},{},{},{}\n",
            f(p.theta),
            f(p.q1_fraction),
            f(p.distance),
            f(p.lambda_l),
            f(p.fit.rate),
            f(p.fit.rel_residual),
        ));
        em.write(
            &format!(
                "data/otoc_theta{}_q{}.csv",
                tag(p.theta),
                tag(p.q1_fraction)
            ),
            &otoc_csv(&p.series),
        )?;
    }
    em.write("data/shell_points.csv", &pts)?;
    tasks.push(TaskRecord {
        name: "shell-points".into(),
        status: "ok".into(),
        error: None,
    });

    let mut coeffs = String::from("q1_fraction,coef_a,coef_b,sum_ab,rel_residual\n");
    for (frac, fit) in &res.per_fraction_fits {
        coeffs.push_str(&format!(
            "{},{},{},{},{}\n",
            f(*frac),
            f(fit.coef_a),
            f(fit.coef_b),
            f(fit.sum_ab),
            f(fit.rel_residual),
        ));
    }
    em.write("data/coefficients.csv", &coeffs)?;

    #[derive(Serialize)]
    struct ShellFits<'a> {
        provenance: &'a Provenance,
        per_fraction: Vec<(f64, HypothesisRecord)>,
    }
    let fits = ShellFits {
        provenance: prov,
        per_fraction: res
            .per_fraction_fits
            .iter()
            .map(|(frac, fit)| (*frac, fit.into()))
            .collect(),
    };
    em.write("fits.json", &serde_json::to_string_pretty(&fits)?)?;
    Ok(tasks)
}

pub fn emit_section_atlas(
    em: &mut Emitter,
    entries: &[SectionAtlasEntry],
    _prov: &Provenance,
) -> std::io::Result<Vec<TaskRecord>> {
    let mut tasks = Vec::new();
    let mut shells = String::from("j,energy,max_rel_drift,n_hits\n");
    for e in entries {
        shells.push_str(&format!(
            "{},{},{},{}\n",
            f(e.j),
            f(e.energy),
            f(e.max_drift),
            e.cloud.len(),
        ));
        let mut sec = String::from("traj,hit,q1,p1\n");
        for (tdx, hits) in e.cloud.trajectories.iter().enumerate() {
            for (hdx, hit) in hits.iter().enumerate() {
                sec.push_str(&format!("{},{},{},{}\n", tdx, hdx, f(hit[0]), f(hit[1])));
            }
        }
        em.write(&format!("data/section_J{}.csv", tag(e.j)), &sec)?;
        let mut drift = String::from("traj,t,rel_drift\n");
        for (tdx, (times, series)) in e.drift.iter().enumerate() {
            for (t, d) in times.iter().zip(series) {
                drift.push_str(&format!("{},{},{}\n", tdx, f(*t), f(*d)));
            }
        }
        em.write(&format!("data/drift_J{}.csv", tag(e.j)), &drift)?;
        tasks.push(TaskRecord {
            name: format!("section-J{}", tag(e.j)),
            status: "ok".into(),
            error: None,
        });
    }
    em.write("data/shells.csv", &shells)?;
    Ok(tasks)
}

/// Map from emitted dataset kinds to the files present, used by the plot
/// emitter to skip missing datasets.
pub fn dataset_inventory(out_dir: &Path) -> BTreeMap<String, Vec<String>> {
    let mut inv: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let data = out_dir.join("data");
    if let Ok(entries) = fs::read_dir(&data) {
        for entry in entries.flatten() {
            let name = entry.file_name().to_string_lossy().to_string();
            let kind = if name.starts_with("section_") {
                "sections"
            } else if name.starts_with("drift_") {
                "drift"
            } else if name.starts_with("lyapunov_") {
                "lyapunov"
            } else if name.starts_with("otoc_") || name == "calibration_otoc.csv" {
                "otoc"
            } else if name == "exponents.csv" {
                "exponents"
            } else if name == "coefficients.csv" {
                "coefficients"
            } else if name == "plateau.csv" {
                "plateau"
            } else if name == "shell_points.csv" {
                "shell"
            } else {
                continue;
            };
            inv.entry(kind.to_string()).or_default().push(name);
        }
    }
    for v in inv.values_mut() {
        v.sort();
    }
    inv
}
