"""Command-line pipeline: simulate -> build -> fit -> predict -> score.

Every command reads a YAML run manifest, takes flag overrides, writes plain
delimited text into the manifest's output directory and is idempotent for a
fixed manifest and seed. Exit codes: 0 success, 2 validation error,
3 sampler or numerical failure.
"""

from __future__ import annotations

import functools
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import datasets, io, model, sampler, scoring, synthetic
from .diagnostics import heteroskedasticity_summary, pacf, standardized_residuals
from .motion import HeaveRecord
from .spectral import response_statistics

VALIDATION_EXIT = 2
NUMERICAL_EXIT = 3


def _failsoft(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, FileNotFoundError, KeyError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(VALIDATION_EXIT)
        except (sampler.SamplerError, ZeroDivisionError, FloatingPointError) as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(NUMERICAL_EXIT)

    return wrapper


def _common(fn):
    fn = click.option("--manifest", "-m", required=True, type=click.Path(exists=True, dir_okay=False))(fn)
    fn = click.option("--horizon", "-H", "horizons", multiple=True, type=int, help="override manifest horizons")(fn)
    fn = click.option("--model", "model_kind", type=click.Choice(["basic", "hybrid"]), default=None)(fn)
    fn = click.option("--seed", type=int, default=None)(fn)
    fn = click.option("--threads", type=int, default=1, show_default=True)(fn)
    fn = click.option("--out", type=click.Path(file_okay=False), default=None, help="override output directory")(fn)
    return fn


def _load(manifest, horizons, model_kind, seed, threads, out) -> io.RunManifest:
    m = io.RunManifest.load(Path(manifest))
    if horizons:
        m.horizons = sorted(set(horizons))
    if model_kind:
        m.model_kind = model_kind
    if seed is not None:
        m.seed = seed
    if out:
        m.out_dir = Path(out)
    if threads < 1:
        raise ValueError("--threads must be >= 1")
    m.sampler = dict(m.sampler)
    m.out_dir.mkdir(parents=True, exist_ok=True)
    return m


def _map(threads: int, fn, items):
    if threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _sampler_config(m: io.RunManifest) -> sampler.SamplerConfig:
    return sampler.SamplerConfig(**m.sampler)


def _model_spec(m: io.RunManifest, horizon: int) -> model.ModelSpec:
    return model.ModelSpec(kind=m.model_kind, horizon=horizon)


def _dataset_path(m: io.RunManifest, h: int) -> Path:
    return m.out_dir / f"dataset_h{h:03d}.csv"


def _samples_path(m: io.RunManifest, h: int) -> Path:
    return m.out_dir / f"samples_{m.model_kind}_h{h:03d}.csv"


@click.group()
def main():
    """Probabilistic heave-response forecasting pipeline."""


@main.command()
@_common
@_failsoft
def response(**kwargs):
    """Physics response statistics from a spectra file and an RAO file."""
    m = _load(**kwargs)
    m.require("rao_file", "spectra_file")
    rao = io.read_rao(m.rao_file)
    spectra = io.read_spectra(m.spectra_file)
    lines = ["timestamp_utc, m0_m2, m2_m2_per_s2, sig_heave_m"]
    for spec in spectra:
        st = response_statistics(spec, rao)
        lines.append(f"{st.timestamp}, {st.m0:.10g}, {st.m2:.10g}, {st.sig_amplitude:.10g}")
    io.atomic_write_text(m.out_dir / "response.csv", "\n".join(lines) + "\n")
    click.echo(f"wrote {m.out_dir / 'response.csv'} ({len(spectra)} timestamps)")


@main.command()
@_common
@_failsoft
def build(**kwargs):
    """Synthesise per-horizon datasets from forecast issues and measurements."""
    m = _load(**kwargs)
    if not m.issue_files:
        m.issue_files = sorted((m.out_dir / "issues").glob("issue_*.csv"))
    if m.measurements_file is None and (m.out_dir / "measurements.csv").exists():
        m.measurements_file = m.out_dir / "measurements.csv"
    m.require("issue_files", "measurements_file")
    issues = [io.read_forecast_issue(p) for p in m.issue_files]
    measurements = io.read_heave_records(m.measurements_file)

    def one(h: int):
        series = datasets.synthesize_horizon_series(issues, h)
        ds = datasets.align(series, measurements, horizon=h)
        io.write_horizon_dataset(_dataset_path(m, h), ds)
        return h, len(ds)

    for h, n in _map(kwargs["threads"], one, list(m.horizons)):
        click.echo(f"h={h}: {n} aligned rows -> {_dataset_path(m, h)}")


@main.command()
@_common
@_failsoft
def fit(**kwargs):
    """Fit the adjustment model per horizon on the training split."""
    m = _load(**kwargs)
    cfg = _sampler_config(m)

    def one(h: int):
        ds = io.read_horizon_dataset(_dataset_path(m, h), h)
        train, _ = datasets.chrono_split(ds, m.train_fraction)
        samples = sampler.fit(train, _model_spec(m, h), cfg, seed=m.seed + h)
        io.write_posterior_samples(_samples_path(m, h), samples)
        return h, samples

    for h, samples in _map(kwargs["threads"], one, list(m.horizons)):
        worst = max(v["rhat"] for v in samples.diagnostics.values())
        click.echo(f"h={h}: {len(samples)} draws, max rhat {worst:.3f} -> {_samples_path(m, h)}")


@main.command()
@_common
@_failsoft
def predict(**kwargs):
    """Posterior-predictive quantiles for the test split of each horizon."""
    m = _load(**kwargs)
    for h in m.horizons:
        ds = io.read_horizon_dataset(_dataset_path(m, h), h)
        train, test = datasets.chrono_split(ds, m.train_fraction)
        samples = io.read_posterior_samples(_samples_path(m, h))
        dists = model.posterior_predictive(
            samples, test, _model_spec(m, h), seed=m.seed + 1000 + h, context=train
        )
        path = m.out_dir / f"predictions_{m.model_kind}_h{h:03d}.csv"
        io.write_predictions(path, dists)
        click.echo(f"h={h}: {len(dists)} predictive rows -> {path}")


@main.command()
@_common
@_failsoft
def score(**kwargs):
    """Score the fitted model against the raw physics forecast."""
    m = _load(**kwargs)
    label = f"{m.model_kind} adjustment"
    models: dict[str, dict[int, np.ndarray]] = {label: {}, "raw physics": {}}
    obs: dict[int, np.ndarray] = {}
    for h in m.horizons:
        ds = io.read_horizon_dataset(_dataset_path(m, h), h)
        train, test = datasets.chrono_split(ds, m.train_fraction)
        samples = io.read_posterior_samples(_samples_path(m, h))
        dists = model.posterior_predictive(
            samples, test, _model_spec(m, h), seed=m.seed + 1000 + h, context=train
        )
        models[label][h] = np.stack([d.draws for d in dists])
        models["raw physics"][h] = test.x
        obs[h] = test.y
    reports = scoring.score_table(models, obs, list(m.horizons))
    io.write_score_reports(m.out_dir / "scores.csv", reports)
    table = scoring.format_score_table(reports)
    io.atomic_write_text(m.out_dir / "scores.txt", table + "\n")
    click.echo(table)


@main.command()
@_common
@click.option("--max-lag", type=int, default=20, show_default=True)
@click.option("--bins", type=int, default=10, show_default=True)
@_failsoft
def diagnose(max_lag, bins, **kwargs):
    """Residual PACF and heteroskedasticity tables per horizon."""
    m = _load(**kwargs)
    for h in m.horizons:
        ds = io.read_horizon_dataset(_dataset_path(m, h), h)
        train, _ = datasets.chrono_split(ds, m.train_fraction)
        samples = io.read_posterior_samples(_samples_path(m, h))
        spec = _model_spec(m, h)
        at_mean = np.mean(samples.draws, axis=0)

        eps = model.residuals(at_mean, train)
        series = eps if spec.kind == "basic" else standardized_residuals(at_mean, train, spec)
        pac = pacf(series, max_lag)
        lines = ["lag, coefficient, band"]
        for lag, c in zip(pac.lags, pac.coefficients):
            lines.append(f"{lag}, {c:.6f}, {pac.confidence_band:.6f}")
        io.atomic_write_text(m.out_dir / f"pacf_{m.model_kind}_h{h:03d}.csv", "\n".join(lines) + "\n")

        table = heteroskedasticity_summary(eps, train.x, bins, sigma_map=model.map_sigma(samples))
        lines = ["x_bin_center_m, mean_abs_residual_m, count, sigma_map"]
        for row in table:
            lines.append(
                f"{row['x_bin_center']:.6f}, {row['mean_abs_residual']:.6f}, "
                f"{row['count']}, {row['sigma_map']:.6f}"
            )
        io.atomic_write_text(m.out_dir / f"hetero_{m.model_kind}_h{h:03d}.csv", "\n".join(lines) + "\n")
        click.echo(f"h={h}: diagnostics written")


@main.command()
@_common
@click.option("--spectra-hours", type=int, default=0, show_default=True,
              help="also write the first N hours of true spectra (large files)")
@_failsoft
def simulate(spectra_hours, **kwargs):
    """Generate a synthetic campaign: RAO, measurements and forecast issues."""
    m = _load(**kwargs)
    scn = _scenario_from(m)
    inj = synthetic.ErrorInjection(seed=m.seed + 17, **m.injection)
    spectra = synthetic.generate_spectra(scn)
    rao = synthetic.reference_rao()
    times, sig = synthetic.true_response_series(spectra, rao)

    meas_noise = float(m.scenario.get("measurement_noise", 0.0))
    rng = np.random.default_rng(m.seed + 29)
    y = np.maximum(sig + meas_noise * rng.standard_normal(sig.size), 0.0)
    records = [HeaveRecord(timestamp=t, sig_heave=v) for t, v in zip(times, y)]

    issues = synthetic.generate_forecast_issues(times, sig, inj)
    issue_dir = m.out_dir / "issues"
    for i, issue in enumerate(issues):
        io.write_forecast_issue(issue_dir / f"issue_{i:04d}.csv", issue)
    io.write_rao(m.out_dir / "rao.csv", rao)
    io.write_heave_records(m.out_dir / "measurements.csv", records)
    if spectra_hours > 0:
        io.write_spectra(m.out_dir / "spectra.csv", spectra[:spectra_hours])
    click.echo(f"simulated {len(spectra)} hours, {len(issues)} forecast issues -> {m.out_dir}")


def _scenario_from(m: io.RunManifest) -> synthetic.SwellScenario:
    raw = dict(m.scenario)
    raw.pop("measurement_noise", None)
    events = tuple(synthetic.SwellEvent(**e) for e in raw.pop("events", []))
    raw.setdefault("start", "2024-06-01T00:00:00")
    raw["start"] = np.datetime64(str(raw["start"]).removesuffix("Z"), "s")
    return synthetic.SwellScenario(events=events, seed=m.seed, **raw)


if __name__ == "__main__":
    main()
