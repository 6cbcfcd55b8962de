//! Plot-script emission: small matplotlib scripts reading the emitted
//! CSV files next to them. Scripts are data-driven so a rerun with other
//! grids needs no regeneration.

use std::collections::BTreeMap;

use crate::emit::{Emitter, TaskRecord};

const SECTIONS_PY: &str = r#"#!/usr/bin/env python3
"""Poincare sections, one panel per interaction value."""
import glob, math, os
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import csv

here = os.path.dirname(os.path.abspath(__file__))
files = sorted(glob.glob(os.path.join(here, "../data/section_J*.csv")))
n = len(files)
cols = 2
rows = math.ceil(n / cols)
fig, axes = plt.subplots(rows, cols, figsize=(9, 4 * rows), squeeze=False)
for ax, path in zip(axes.flat, files):
    xs, ys, ts = [], [], []
    with open(path) as fh:
        for row in csv.DictReader(fh):
            ts.append(int(row["traj"])); xs.append(float(row["q1"])); ys.append(float(row["p1"]))
    ax.scatter(xs, ys, s=0.4, c=ts, cmap="viridis", lw=0)
    ax.set_title(os.path.basename(path).replace("section_", "").replace(".csv", ""))
    ax.set_xlabel("q1"); ax.set_ylabel("p1")
for ax in list(axes.flat)[n:]:
    ax.axis("off")
fig.tight_layout()
fig.savefig(os.path.join(here, "sections.png"), dpi=160)
print("wrote sections.png")
"#;

const LYAPUNOV_PY: &str = r#"#!/usr/bin/env python3
"""Lyapunov convergence curves: thin per-seed lines, thick mean."""
import glob, os, csv
from collections import defaultdict
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
files = sorted(glob.glob(os.path.join(here, "../data/lyapunov_J*.csv")))
fig, ax = plt.subplots(figsize=(9, 5))
cmap = plt.get_cmap("tab10")
for idx, path in enumerate(files):
    seeds = defaultdict(lambda: ([], []))
    with open(path) as fh:
        for row in csv.DictReader(fh):
            t, v = seeds[int(row["seed"])]
            t.append(float(row["t"])); v.append(float(row["running_estimate"]))
    color = cmap(idx % 10)
    grids = list(seeds.values())
    for t, v in grids:
        ax.plot(t, v, color=color, lw=0.4, alpha=0.5)
    if grids:
        tref = grids[0][0]
        mean = [sum(v[k] for _, v in grids) / len(grids) for k in range(len(tref))]
        label = os.path.basename(path).replace("lyapunov_", "").replace(".csv", "")
        ax.plot(tref, mean, color=color, lw=2.0, label=label)
ax.set_xscale("log"); ax.set_xlabel("t"); ax.set_ylabel("running estimate")
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(os.path.join(here, "lyapunov.png"), dpi=160)
print("wrote lyapunov.png")
"#;

const OTOC_FITS_PY: &str = r#"#!/usr/bin/env python3
"""log-scale OTOC series with the fitted exponential overlaid as dotted
markers on the fitted window only."""
import glob, json, math, os, csv
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
fits = {}
fits_path = os.path.join(here, "../fits.json")
if os.path.exists(fits_path):
    with open(fits_path) as fh:
        fits = json.load(fh)

def window_of(name):
    # calibrated window applies to every spin series; ring runs carry
    # per-point windows in exponents.csv
    cal = fits.get("calibration_window")
    if cal: return cal["t0"], cal["t1"]
    return None

files = sorted(glob.glob(os.path.join(here, "../data/otoc_*.csv")))
files += [p for p in [os.path.join(here, "../data/calibration_otoc.csv")] if os.path.exists(p)]
exps = {}
exp_path = os.path.join(here, "../data/exponents.csv")
if os.path.exists(exp_path):
    with open(exp_path) as fh:
        for row in csv.DictReader(fh):
            key = row.get("theta") or row.get("j")
            exps[key] = row

fig, ax = plt.subplots(figsize=(10, 6))
for path in files:
    ts, cs = [], []
    with open(path) as fh:
        for row in csv.DictReader(fh):
            c = float(row["c"])
            if c > 0:
                ts.append(float(row["t"])); cs.append(c)
    if not ts: continue
    label = os.path.basename(path).replace("otoc_", "").replace(".csv", "")
    (line,) = ax.plot(ts, cs, lw=1.0, label=label)
    w = window_of(label)
    if w:
        tw = [t for t in ts if w[0] <= t <= w[1]]
        cw = [c for t, c in zip(ts, cs) if w[0] <= t <= w[1]]
        ax.plot(tw, cw, ls="none", marker=".", ms=3.5, color=line.get_color())
ax.set_yscale("log"); ax.set_xlabel("t"); ax.set_ylabel("C(t)")
ax.legend(fontsize=7, ncol=2)
fig.tight_layout()
fig.savefig(os.path.join(here, "otoc_fits.png"), dpi=160)
print("wrote otoc_fits.png")
"#;

const EXPONENTS_PY: &str = r#"#!/usr/bin/env python3
"""Classical exponents and fitted OTOC rates across the sweep, with the
joint linear combination overlaid."""
import json, os, csv
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
path = os.path.join(here, "../data/exponents.csv")
rows = list(csv.DictReader(open(path)))
key = "theta" if "theta" in rows[0] else "j"
xs = [float(r[key]) for r in rows]
ll = [float(r["lambda_l"]) for r in rows]
loc = [float(r["lambda_loc"]) for r in rows]
lq2 = [float(r["two_lambda_q"]) for r in rows]
err = [float(r["rate_stderr"]) for r in rows]

fig, ax = plt.subplots(figsize=(9, 5))
ax.plot(xs, ll, "s-", label="lambda_L")
ax.plot(xs, loc, "^-", label="lambda_loc")
ax.errorbar(xs, lq2, yerr=err, fmt="o", color="red", label="2 lambda_q")

fits_path = os.path.join(here, "../fits.json")
if os.path.exists(fits_path):
    fits = json.load(open(fits_path))
    rec = None
    if "rows" in fits and fits["rows"]:
        rec = fits["rows"][0]
    elif "coef_a" in fits:
        rec = fits
    if rec:
        a, b = rec["coef_a"], rec["coef_b"]
        combo = [a * x + b * y for x, y in zip(ll, loc)]
        ax.plot(xs, combo, "k-", lw=1.5,
                label=f"a lambda_L + b lambda_loc (a={a:.2f}, b={b:.2f})")
ax.set_xlabel(key); ax.set_ylabel("exponent")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(here, "exponents.png"), dpi=160)
print("wrote exponents.png")
"#;

const COEFFICIENTS_PY: &str = r#"#!/usr/bin/env python3
"""Joint coefficients versus the displacement / shell coordinate."""
import os, csv
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
path = os.path.join(here, "../data/coefficients.csv")
rows = list(csv.DictReader(open(path)))
key = "delta_p2" if "delta_p2" in rows[0] else "q1_fraction"
xs = [float(r[key]) for r in rows]
a = [float(r["coef_a"]) for r in rows]
b = [float(r["coef_b"]) for r in rows]
s = [float(r["sum_ab"]) for r in rows]
fig, ax = plt.subplots(figsize=(8, 5))
if "stderr_a" in rows[0]:
    ea = [float(r["stderr_a"]) for r in rows]
    eb = [float(r["stderr_b"]) for r in rows]
    ax.errorbar(xs, a, yerr=ea, fmt="o-", label="a (lambda_L weight)")
    ax.errorbar(xs, b, yerr=eb, fmt="s-", label="b (lambda_loc weight)")
else:
    ax.plot(xs, a, "o-", label="a (lambda_L weight)")
    ax.plot(xs, b, "s-", label="b (lambda_loc weight)")
ax.plot(xs, s, "k^--", label="a + b")
ax.axhline(2.0, color="gray", lw=0.8, ls=":")
ax.set_xlabel(key); ax.set_ylabel("coefficient")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(here, "coefficients.png"), dpi=160)
print("wrote coefficients.png")
"#;

const DRIFT_PY: &str = r#"#!/usr/bin/env python3
"""Energy-drift audit of the section trajectories."""
import glob, math, os, csv
from collections import defaultdict
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
files = sorted(glob.glob(os.path.join(here, "../data/drift_J*.csv")))
n = len(files)
cols = 2
rows = math.ceil(n / cols)
fig, axes = plt.subplots(rows, cols, figsize=(9, 3.5 * rows), squeeze=False)
for ax, path in zip(axes.flat, files):
    trajs = defaultdict(lambda: ([], []))
    with open(path) as fh:
        for row in csv.DictReader(fh):
            t, d = trajs[int(row["traj"])]
            t.append(float(row["t"])); d.append(float(row["rel_drift"]))
    for t, d in trajs.values():
        ax.plot(t, d, lw=0.5)
    ax.set_title(os.path.basename(path).replace("drift_", "").replace(".csv", ""))
    ax.set_xlabel("t"); ax.set_ylabel("relative drift")
for ax in list(axes.flat)[n:]:
    ax.axis("off")
fig.tight_layout()
fig.savefig(os.path.join(here, "drift.png"), dpi=160)
print("wrote drift.png")
"#;

const PLATEAU_PY: &str = r#"#!/usr/bin/env python3
"""Saturation level and onset versus the spin representation."""
import os, csv
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
rows = list(csv.DictReader(open(os.path.join(here, "../data/plateau.csv"))))
xs = [float(r["s"]) for r in rows]
lv = [float(r["plateau_level"]) for r in rows if r["plateau_level"]]
fig, ax = plt.subplots(figsize=(7, 4.5))
ax.plot(xs[: len(lv)], lv, "o-")
ax.set_xlabel("s"); ax.set_ylabel("plateau level"); ax.set_yscale("log")
fig.tight_layout()
fig.savefig(os.path.join(here, "plateau.png"), dpi=160)
print("wrote plateau.png")
"#;

const SHELL_PY: &str = r#"#!/usr/bin/env python3
"""Fitted rates of shell states, colored by the distance to the fixed
point."""
import os, csv
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
rows = list(csv.DictReader(open(os.path.join(here, "../data/shell_points.csv"))))
th = [float(r["theta"]) for r in rows]
lq = [float(r["two_lambda_q"]) for r in rows]
d = [float(r["distance"]) for r in rows]
fig, ax = plt.subplots(figsize=(8, 5))
sc = ax.scatter(th, lq, c=d, cmap="plasma", s=30)
fig.colorbar(sc, label="distance to fixed point")
ax.set_xlabel("theta"); ax.set_ylabel("2 lambda_q")
fig.tight_layout()
fig.savefig(os.path.join(here, "shell_exponents.png"), dpi=160)
print("wrote shell_exponents.png")
"#;

/// Writes the plot scripts whose datasets exist; returns per-plot task
/// records (skips are warnings, not failures).
pub fn emit_plots(
    em: &mut Emitter,
    inventory: &BTreeMap<String, Vec<String>>,
) -> std::io::Result<Vec<TaskRecord>> {
    let plots: &[(&str, &str, &str)] = &[
        ("sections", "plots/sections.py", SECTIONS_PY),
        ("lyapunov", "plots/lyapunov.py", LYAPUNOV_PY),
        ("otoc", "plots/otoc_fits.py", OTOC_FITS_PY),
        ("exponents", "plots/exponents.py", EXPONENTS_PY),
        ("coefficients", "plots/coefficients.py", COEFFICIENTS_PY),
        ("drift", "plots/drift.py", DRIFT_PY),
        ("plateau", "plots/plateau.py", PLATEAU_PY),
        ("shell", "plots/shell_exponents.py", SHELL_PY),
    ];
    let mut tasks = Vec::new();
    for (kind, rel, body) in plots {
        if inventory.contains_key(*kind) {
            em.write(rel, body)?;
            tasks.push(TaskRecord {
                name: format!("plot-{kind}"),
                status: "ok".into(),
                error: None,
            });
        } else {
            eprintln!("warning: no {kind} dataset, skipping {rel}");
            tasks.push(TaskRecord {
                name: format!("plot-{kind}"),
                status: "skipped".into(),
                error: None,
            });
        }
    }
    Ok(tasks)
}
