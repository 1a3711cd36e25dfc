"""CSV and JSON formats emitted by the pipeline, with matching readers."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .benchmark import BenchmarkPoint
from .detection import CountRecord, TimeHistogram
from .polarization import DensityMatrix2, MeasurementSetting, WaveplateSetting

BENCHMARK_HEADER = ["mu", "eta", "n_min", "gamma", "f_class"]
COUNTS_HEADER = ["input", "setting_qwp_deg", "setting_hwp_deg", "port", "shots", "clicks", "dark_clicks"]
FRINGE_HEADER = ["angle_deg", "p_det", "fit_p"]


def fmt(x) -> str:
    """12 significant digits; integers verbatim; NaN as 'nan'."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".12g")


def write_rows(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return path


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def read_table(path) -> dict[str, np.ndarray]:
    """Numeric CSV as column name -> float array."""
    rows = read_rows(path)
    if not rows:
        return {}
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}


def write_benchmark_csv(path, points) -> Path:
    return write_rows(path, BENCHMARK_HEADER,
                      ([p.mu, p.eta, p.n_min, p.gamma, p.f_class] for p in points))


def read_benchmark_csv(path) -> list[BenchmarkPoint]:
    return [BenchmarkPoint(float(r["mu"]), float(r["eta"]), int(r["n_min"]),
                           float(r["gamma"]), float(r["f_class"])) for r in read_rows(path)]


def _deg(angle):
    return "" if angle is None else fmt(math.degrees(angle))


def write_counts_csv(path, records) -> Path:
    return write_rows(path, COUNTS_HEADER, (
        [r.input_label, _deg(r.setting.qwp_angle), _deg(r.setting.hwp_angle), r.setting.port.value,
         r.shots, r.clicks, r.dark_reference_clicks] for r in records))


def read_counts_csv(path) -> list[CountRecord]:
    out = []
    for r in read_rows(path):
        plates = []
        if r["setting_qwp_deg"]:
            plates.append(WaveplateSetting.qwp(math.radians(float(r["setting_qwp_deg"]))))
        if r["setting_hwp_deg"]:
            plates.append(WaveplateSetting.hwp(math.radians(float(r["setting_hwp_deg"]))))
        setting = MeasurementSetting(tuple(plates), r["port"])
        out.append(CountRecord(r["input"], setting, int(r["shots"]), int(r["clicks"]),
                               int(r["dark_clicks"])))
    return out


def write_histogram_csv(path, hist: TimeHistogram) -> Path:
    return write_rows(path, ["t_ns", "counts"],
                      zip(hist.bin_centers * 1e9, (int(c) for c in hist.counts)))


def read_histogram_csv(path) -> TimeHistogram:
    t = read_table(path)
    centers = t["t_ns"] * 1e-9
    bin_s = float(centers[1] - centers[0]) if len(centers) > 1 else 1e-9
    return TimeHistogram(bin_s, float(centers[0] - bin_s / 2), t["counts"].astype(int))


def write_intensity_csv(path, pulse, extra=None) -> Path:
    """(time_s, |E|^2) dump of a pulse, with optional extra named intensity columns."""
    header = ["time_s", "intensity"]
    cols = [pulse.times, pulse.intensity]
    for name, values in (extra or {}).items():
        header.append(name)
        cols.append(values)
    return write_rows(path, header, zip(*cols))


def write_fringe_csv(path, angles_rad, p_det, fit_p) -> Path:
    return write_rows(path, FRINGE_HEADER, zip(np.degrees(angles_rad), p_det, fit_p))


def write_json(path, obj) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def density_matrix_from_json(obj) -> DensityMatrix2:
    return DensityMatrix2.from_dict(obj)
