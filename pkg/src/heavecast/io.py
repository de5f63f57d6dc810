"""Delimited-text file formats and the run manifest.

All artefacts are plain comma-separated text with a header line so any
plotting tool can consume them. Frequencies are stored in files as Hz and
directions in degrees (the operational product conventions); everything is
converted to rad/s and radians on ingestion. Writes are atomic: temp file in
the target directory, then rename.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .datasets import ForecastIssue, HorizonDataset
from .model import PosteriorSamples
from .motion import HeaveRecord, RawMotionSeries
from .scoring import ScoreReport
from .spectral import DirectionalWaveSpectrum, RaoCurve, midpoint_widths

__all__ = [
    "RunManifest",
    "atomic_write_text",
    "read_rao",
    "write_rao",
    "read_spectra",
    "write_spectra",
    "read_motion_series",
    "read_qa_events",
    "read_heave_records",
    "write_heave_records",
    "read_forecast_issue",
    "write_forecast_issue",
    "read_horizon_dataset",
    "write_horizon_dataset",
    "read_posterior_samples",
    "write_posterior_samples",
    "write_predictions",
    "write_score_reports",
]

TWO_PI = 2.0 * np.pi


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v: float) -> str:
    return f"{float(v):.10g}"


def _parse_time(s: str) -> np.datetime64:
    return np.datetime64(s.strip().removesuffix("Z"), "s")


def _read_rows(path: Path, expected_header: list[str]) -> list[list[str]]:
    lines = Path(path).read_text().strip().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty file")
    header = [c.strip() for c in lines[0].split(",")]
    if header != expected_header:
        raise ValueError(f"{path}: expected header {expected_header}, found {header}")
    return [[c.strip() for c in ln.split(",")] for ln in lines[1:] if ln.strip()]


# -- RAO ---------------------------------------------------------------------

def read_rao(path: Path, label: str | None = None) -> RaoCurve:
    rows = _read_rows(path, ["freq_hz", "amplitude"])
    freqs_hz = np.array([float(r[0]) for r in rows])
    amps = np.array([float(r[1]) for r in rows])
    return RaoCurve(freqs=TWO_PI * freqs_hz, amplitudes=amps, label=label or Path(path).stem)


def write_rao(path: Path, rao: RaoCurve) -> None:
    lines = ["freq_hz, amplitude"]
    for w, a in zip(rao.freqs, rao.amplitudes):
        lines.append(f"{_fmt(w / TWO_PI)}, {_fmt(a)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


# -- directional spectra -----------------------------------------------------

def read_spectra(path: Path) -> list[DirectionalWaveSpectrum]:
    """Long-format spectrum file covering one or more timestamps.

    The (freq, dir) grid must be identical for every timestamp; the density
    column is m^2 s per degree of direction (per-Hz, per-deg) and is
    converted to the per-rad/s, per-rad convention used internally.
    """
    rows = _read_rows(path, ["timestamp_utc", "freq_hz", "dir_deg", "density_m2_s_per_deg"])
    if not rows:
        raise ValueError(f"{path}: no spectrum rows")
    by_time: dict[np.datetime64, list[tuple[float, float, float]]] = {}
    for r in rows:
        by_time.setdefault(_parse_time(r[0]), []).append((float(r[1]), float(r[2]), float(r[3])))

    spectra = []
    grid_key = None
    for stamp in sorted(by_time):
        entries = by_time[stamp]
        freqs_hz = np.array(sorted({e[0] for e in entries}))
        dirs_deg = np.array(sorted({e[1] for e in entries}))
        key = (freqs_hz.tobytes(), dirs_deg.tobytes())
        if grid_key is None:
            grid_key = key
        elif key != grid_key:
            raise ValueError(f"{path}: inconsistent grid across timestamps")
        if len(entries) != freqs_hz.size * dirs_deg.size:
            raise ValueError(f"{path}: irregular grid at {stamp}")
        fi = {f: i for i, f in enumerate(freqs_hz)}
        di = {d: j for j, d in enumerate(dirs_deg)}
        density = np.zeros((freqs_hz.size, dirs_deg.size))
        for f, d, v in entries:
            density[fi[f], di[d]] = v
        # per-Hz per-deg  ->  per-(rad/s) per-rad
        density *= (1.0 / TWO_PI) * (180.0 / np.pi)
        spectra.append(
            DirectionalWaveSpectrum(
                timestamp=stamp,
                freqs=TWO_PI * freqs_hz,
                dirs=np.deg2rad(dirs_deg),
                density=density,
            )
        )
    return spectra


def write_spectra(path: Path, spectra: list[DirectionalWaveSpectrum]) -> None:
    lines = ["timestamp_utc, freq_hz, dir_deg, density_m2_s_per_deg"]
    for spec in spectra:
        freqs_hz = spec.freqs / TWO_PI
        dirs_deg = np.rad2deg(spec.dirs)
        density = spec.density * TWO_PI * (np.pi / 180.0)
        for i, f in enumerate(freqs_hz):
            for j, d in enumerate(dirs_deg):
                lines.append(f"{spec.timestamp}, {_fmt(f)}, {_fmt(d)}, {_fmt(density[i, j])}")
    atomic_write_text(path, "\n".join(lines) + "\n")


# -- motion measurements -----------------------------------------------------

def read_motion_series(path: Path) -> RawMotionSeries:
    """Uniformly sampled heave displacement, `timestamp_utc, heave_m`."""
    rows = _read_rows(path, ["timestamp_utc", "heave_m"])
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least two samples")
    times = np.array([_parse_time(r[0]) for r in rows], dtype="datetime64[ms]")
    steps = np.diff(times) / np.timedelta64(1, "s")
    if np.ptp(steps) > 1e-9 or steps[0] <= 0:
        raise ValueError(f"{path}: samples must be uniform in time")
    values = np.array([float(r[1]) for r in rows])
    return RawMotionSeries(start=times[0], sample_rate=1.0 / float(steps[0]), values=values)


def read_qa_events(path: Path) -> list[tuple[tuple[np.datetime64, np.datetime64], str]]:
    rows = _read_rows(path, ["start_utc", "end_utc", "reason"])
    return [((_parse_time(r[0]), _parse_time(r[1])), r[2]) for r in rows]


def read_heave_records(path: Path) -> list[HeaveRecord]:
    rows = _read_rows(path, ["timestamp_utc", "sig_heave_m", "valid"])
    out = []
    for r in rows:
        valid = r[2].lower() == "true"
        sig = float(r[1]) if valid else np.nan
        out.append(HeaveRecord(timestamp=_parse_time(r[0]), sig_heave=sig, valid=valid))
    return out


def write_heave_records(path: Path, records: list[HeaveRecord]) -> None:
    lines = ["timestamp_utc, sig_heave_m, valid"]
    for rec in records:
        sig = _fmt(rec.sig_heave) if rec.valid else "nan"
        lines.append(f"{rec.timestamp}, {sig}, {str(rec.valid).lower()}")
    atomic_write_text(path, "\n".join(lines) + "\n")


# -- forecast issues and horizon datasets ------------------------------------

def read_forecast_issue(path: Path) -> ForecastIssue:
    rows = _read_rows(path, ["issue_time_utc", "valid_time_utc", "sig_heave_m"])
    if not rows:
        raise ValueError(f"{path}: empty forecast issue")
    issue_time = _parse_time(rows[0][0])
    leads = []
    values = []
    for r in rows:
        if _parse_time(r[0]) != issue_time:
            raise ValueError(f"{path}: multiple issue times in one file")
        leads.append(int((_parse_time(r[1]) - issue_time) / np.timedelta64(1, "h")))
        values.append(float(r[2]))
    return ForecastIssue(issue_time=issue_time, horizon_hours=np.array(leads), values=np.array(values))


def write_forecast_issue(path: Path, issue: ForecastIssue) -> None:
    lines = ["issue_time_utc, valid_time_utc, sig_heave_m"]
    for lead, v in zip(issue.horizon_hours, issue.values):
        vt = issue.issue_time + int(lead) * np.timedelta64(1, "h")
        lines.append(f"{issue.issue_time}, {vt}, {_fmt(v)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_horizon_dataset(path: Path, horizon: int) -> HorizonDataset:
    rows = _read_rows(path, ["valid_time_utc", "x_m", "y_m", "issue_time_utc", "post_gap_flag"])
    return HorizonDataset(
        horizon=horizon,
        valid_times=np.array([_parse_time(r[0]) for r in rows], dtype="datetime64[s]"),
        x=np.array([float(r[1]) for r in rows]),
        y=np.array([float(r[2]) for r in rows]),
        issue_times=np.array([_parse_time(r[3]) for r in rows], dtype="datetime64[s]"),
    )


def write_horizon_dataset(path: Path, ds: HorizonDataset) -> None:
    lines = ["valid_time_utc, x_m, y_m, issue_time_utc, post_gap_flag"]
    for i in range(len(ds)):
        lines.append(
            f"{ds.valid_times[i]}, {_fmt(ds.x[i])}, {_fmt(ds.y[i])}, "
            f"{ds.issue_times[i]}, {int(ds.post_gap[i])}"
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


# -- posterior samples -------------------------------------------------------

def write_posterior_samples(path: Path, samples: PosteriorSamples) -> None:
    """Draw matrix as delimited text plus a JSON diagnostics sidecar."""
    lines = ["chain, " + ", ".join(samples.param_names)]
    for cid, row in zip(samples.chain_ids, samples.draws):
        lines.append(f"{int(cid)}, " + ", ".join(f"{v:.12g}" for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")
    sidecar = {
        "acceptance_rate": samples.acceptance_rate,
        "parameters": samples.diagnostics,
    }
    atomic_write_text(Path(str(path) + ".diag.json"), json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def read_posterior_samples(path: Path) -> PosteriorSamples:
    lines = Path(path).read_text().strip().splitlines()
    header = [c.strip() for c in lines[0].split(",")]
    if header[0] != "chain":
        raise ValueError(f"{path}: expected a 'chain' column first")
    names = tuple(header[1:])
    chain_ids = []
    draws = []
    for ln in lines[1:]:
        cells = [c.strip() for c in ln.split(",")]
        chain_ids.append(int(cells[0]))
        draws.append([float(c) for c in cells[1:]])
    sidecar_path = Path(str(path) + ".diag.json")
    diagnostics, acceptance = {}, float("nan")
    if sidecar_path.exists():
        meta = json.loads(sidecar_path.read_text())
        diagnostics = meta.get("parameters", {})
        acceptance = meta.get("acceptance_rate", float("nan"))
    return PosteriorSamples(
        draws=np.array(draws),
        param_names=names,
        chain_ids=np.array(chain_ids),
        diagnostics=diagnostics,
        acceptance_rate=acceptance,
    )


# -- predictions and scores --------------------------------------------------

def write_predictions(path: Path, dists) -> None:
    """Predictive summaries per valid time: mean and the quantile levels."""
    if not dists:
        raise ValueError("no predictive distributions to write")
    levels = dists[0].levels
    cols = ["valid_time_utc", "mean_m"] + [f"p{round(lv * 100):02d}_m" for lv in levels]
    lines = [", ".join(cols)]
    for d in dists:
        s = d.summaries
        cells = [str(d.valid_time), _fmt(s["mean"])] + [
            _fmt(s[f"p{round(lv * 100):02d}"]) for lv in levels
        ]
        lines.append(", ".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_score_reports(path: Path, reports: list[ScoreReport]) -> None:
    lines = ["model, horizon_h, rmse_m, crps_m, n"]
    for r in reports:
        lines.append(f"{r.model_label}, {r.horizon}, {r.rmse:.3f}, {r.crps_mean:.3f}, {r.n}")
    atomic_write_text(path, "\n".join(lines) + "\n")


# -- run manifest ------------------------------------------------------------

@dataclass
class RunManifest:
    """Paths and settings steering one end-to-end run."""

    out_dir: Path
    rao_file: Path | None = None
    spectra_file: Path | None = None
    issue_files: list[Path] = field(default_factory=list)
    measurements_file: Path | None = None
    qa_events_file: Path | None = None
    horizons: list[int] = field(default_factory=lambda: [0, 6, 12, 24, 48, 72, 96])
    model_kind: str = "hybrid"
    seed: int = 0
    train_fraction: float = 0.8
    sampler: dict = field(default_factory=dict)
    scenario: dict = field(default_factory=dict)
    injection: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: Path) -> "RunManifest":
        raw = yaml.safe_load(Path(path).read_text()) or {}
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown manifest keys: {sorted(unknown)}")
        if "out_dir" not in raw:
            raise ValueError("manifest must set out_dir")
        base = Path(path).parent
        m = cls(out_dir=base / raw.pop("out_dir"))
        for key, value in raw.items():
            if key.endswith("_file") and value is not None:
                value = base / value
            if key == "issue_files":
                value = [base / v for v in value]
            setattr(m, key, value)
        if any(h < 0 or int(h) != h for h in m.horizons):
            raise ValueError("horizons must be nonnegative integers")
        if m.model_kind not in ("basic", "hybrid"):
            raise ValueError("model_kind must be 'basic' or 'hybrid'")
        return m

    def require(self, *names: str) -> None:
        for name in names:
            value = getattr(self, name)
            if value is None or (isinstance(value, list) and not value):
                raise ValueError(f"manifest is missing {name}")
            paths = value if isinstance(value, list) else [value]
            for p in paths:
                if isinstance(p, Path) and not p.exists():
                    raise FileNotFoundError(f"{name}: {p} does not exist")
