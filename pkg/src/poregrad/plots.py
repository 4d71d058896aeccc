"""Render report files into CSVs (the contract) plus convenience charts."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import DataError


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)


def emit_gridsearch(calibration_json: Path, out_dir: Path) -> list[Path]:
    data = _load(calibration_json)["local"]
    sigmas, offsets, surface = data["sigma_grid"], data["offset_grid"], data["f1_surface"]
    csv_path = out_dir / "f1_surface.csv"
    _write_csv(csv_path, ["sigma", "t_offset", "f1"],
               [(s, o, surface[i][j]) for i, s in enumerate(sigmas)
                for j, o in enumerate(offsets)])
    fig, ax = plt.subplots()
    im = ax.imshow(surface, origin="lower", aspect="auto",
                   extent=(min(offsets), max(offsets), min(sigmas), max(sigmas)))
    ax.set_xlabel("t_offset")
    ax.set_ylabel("sigma")
    fig.colorbar(im, label="F1")
    png = out_dir / "f1_surface.png"
    fig.savefig(png, dpi=120)
    plt.close(fig)
    return [csv_path, png]


def emit_roc(roc_json: Path, out_dir: Path) -> list[Path]:
    data = _load(roc_json)
    name = roc_json.stem
    csv_path = out_dir / f"{name}.csv"
    _write_csv(csv_path, ["fpr", "tpr"], zip(data["fpr_points"], data["tpr_points"]))
    fig, ax = plt.subplots()
    ax.plot(data["fpr_points"], data["tpr_points"], label=f"AUC={data['auc']:.3f}")
    ax.plot([0, 1], [0, 1], "k--", lw=0.5)
    ax.set_xlabel("FPR")
    ax.set_ylabel("TPR")
    ax.legend()
    png = out_dir / f"{name}.png"
    fig.savefig(png, dpi=120)
    plt.close(fig)
    return [csv_path, png]


def emit_timing(bench_csv: Path, out_dir: Path) -> list[Path]:
    rows = list(csv.DictReader(open(bench_csv)))
    if not rows or "n" not in rows[0]:
        raise DataError(f"{bench_csv}: not a bench CSV")
    by_model: dict[str, list] = {}
    for r in rows:
        by_model.setdefault(r.get("model", "model"), []).append(
            (int(r["n"]), float(r["per_particle"])))
    fig, ax = plt.subplots()
    for model, pts in by_model.items():
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=model)
    ax.set_xlabel("batch size n")
    ax.set_ylabel("mean seconds per particle")
    ax.legend()
    png = out_dir / f"{bench_csv.stem}.png"
    fig.savefig(png, dpi=120)
    plt.close(fig)
    return [png]


def emit_violin(report_json: Path, out_dir: Path) -> list[Path]:
    data = _load(report_json)
    name = report_json.stem
    radii = data.get("pore_radii_um", [])
    truth = data.get("truth_radii_um", [])
    csv_path = out_dir / f"{name}_radii.csv"
    _write_csv(csv_path, ["kind", "equivalent_radius_um"],
               [("predicted", r) for r in radii] + [("truth", r) for r in truth])
    fig, ax = plt.subplots()
    series = [s for s in (radii, truth) if s]
    labels = [lab for s, lab in ((radii, "predicted"), (truth, "truth")) if s]
    if series:
        ax.violinplot(series, showmedians=True)
        ax.set_xticks(range(1, len(labels) + 1), labels)
    ax.set_ylabel("equivalent pore radius (um)")
    png = out_dir / f"{name}_radii.png"
    fig.savefig(png, dpi=120)
    plt.close(fig)
    return [csv_path, png]


def _load(path: Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"malformed report file {path}: {exc}") from exc


def emit_plots(report_paths, out_dir) -> list[Path]:
    """Dispatch each report file to its renderer by filename convention."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for path in map(Path, report_paths):
        if not path.exists():
            raise DataError(f"report file not found: {path}")
        name = path.name
        if name == "calibration.json":
            written += emit_gridsearch(path, out_dir)
        elif name.startswith("roc") and path.suffix == ".json":
            written += emit_roc(path, out_dir)
        elif path.suffix == ".csv":
            written += emit_timing(path, out_dir)
        elif name.startswith("report") and path.suffix == ".json":
            written += emit_violin(path, out_dir)
        else:
            raise DataError(f"unrecognized report file: {path}")
    return written
