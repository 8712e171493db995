"""``hound`` command line tool.

Exit codes: 0 success, 1 validation failure, 2 input error.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .coefficients import DEFAULT_IDENTITY_ORDER, MAX_ORDER, gain_table, identity_suite
from .core import (
    DifferentiatorConfig,
    DifferentiatorState,
    NonFiniteSampleError,
    Sample,
    init,
    update_with_residual,
)
from .io import InputError, SignalConfig, parse_signal_config, read_samples
from .oracle import consistency_suite
from .signals import SignalSpec, derivative, fit_variance, monte_carlo_estimates, samples, uniform_grid
from .taylor import TaylorModel, extract_poly_coeffs, extrapolation_table

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _fmt(x: float) -> str:
    return repr(float(x))


def _open_in(path: str):
    return sys.stdin if path == "-" else open(path, newline="")


def _open_out(path: str):
    return sys.stdout if path == "-" else open(path, "w", newline="")


def _load_config(path: str | None) -> SignalConfig | None:
    if path is None:
        return None
    try:
        return parse_signal_config(Path(path).read_text())
    except (OSError, InputError, ValueError) as exc:
        raise click.ClickException(f"{path}: {exc}") from exc


def _col(value: str | None):
    if value is None:
        return None
    return int(value) if value.lstrip("-").isdigit() else value


class _InputFailure(click.ClickException):
    exit_code = EXIT_INPUT


@click.group()
@click.version_option(__version__)
def main():
    """Online high-order numerical differentiation by cumulative smoothing."""


@main.command("run")
@click.option("-n", "--order", type=click.IntRange(1, MAX_ORDER), required=True, help="Number of estimated quantities n.")
@click.option("-i", "--input", "input_path", default="-", show_default=True, help="Input CSV, '-' for stdin.")
@click.option("-o", "--output", "output_path", default="-", show_default=True)
@click.option("--t-col", default="0", show_default=True, help="Time column (index or header name).")
@click.option("--f-col", default=None, help="Value column (index or name); default last column.")
@click.option("--dt", type=float, default=None, help="Fixed step; timestamps become t0 + k*dt and no time column is read.")
@click.option("--t0", type=float, default=0.0, show_default=True, help="First timestamp in --dt mode.")
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default="csv", show_default=True)
@click.option("--truth", type=click.Path(exists=True, dir_okay=False), default=None, help="Signal config; adds error columns e0..e{n-1}.")
@click.option("--extrapolate", nargs=3, type=float, default=None, metavar="START STOP STEP", help="Emit a Taylor-model table from the final state.")
@click.option("--extrapolate-out", default=None, help="CSV path for the table (csv format only; default stderr).")
@click.option("--snapshot", default=None, help="Write the final state as JSON.")
@click.option("--resume", type=click.Path(exists=True, dir_okay=False), default=None, help="Continue from a JSON snapshot.")
@click.option("--skip-repeats", is_flag=True, help="Ignore samples equal in value to the previous one.")
def run_cmd(order, input_path, output_path, t_col, f_col, dt, t0, fmt, truth, extrapolate,
            extrapolate_out, snapshot, resume, skip_repeats):
    """Differentiate a (t, f) stream, one output row per accepted sample."""
    truth_spec = _load_config(truth).spec if truth else None
    if extrapolate is not None and (extrapolate[2] <= 0 or extrapolate[1] < extrapolate[0]):
        raise click.BadParameter("need START <= STOP and STEP > 0", param_hint="--extrapolate")
    config = DifferentiatorConfig(order, t0=t0, skip_repeats=skip_repeats)

    state: DifferentiatorState | None = None
    if resume:
        state = DifferentiatorState.from_record(json.loads(Path(resume).read_text()))
        if state.order != order:
            raise _InputFailure(f"snapshot has order {state.order}, --order is {order}")
    table = gain_table(order)
    meta = {"type": "meta", "order": order, "t0": t0, "gain_checksum": table.checksum(), "version": __version__}

    accepted = skipped = 0
    out = _open_out(output_path)
    try:
        writer = csv.writer(out, lineterminator="\n") if fmt == "csv" else None
        cols = ["t"] + [f"z{k}" for k in range(order)] + ["epsilon"]
        if truth_spec is not None:
            cols += [f"e{k}" for k in range(order)]
        if writer:
            out.write(f"# hound order={order} t0={t0!r} gain_checksum={table.checksum()}\n")
            writer.writerow(cols)
        else:
            out.write(json.dumps(meta) + "\n")

        with _open_in(input_path) as src:
            k = 0
            for row in read_samples(src, _col(t_col), _col(f_col), with_time=dt is None):
                t = row.t if dt is None else t0 + k * dt
                k += 1
                if not (math.isfinite(t) and math.isfinite(row.f)):
                    skipped += 1
                    click.echo(f"line {row.line}: non-finite value rejected", err=True)
                    continue
                if state is not None and t <= state.t:
                    skipped += 1
                    click.echo(f"line {row.line}: timestamp {t!r} not after {state.t!r}, skipped", err=True)
                    continue
                if state is None:
                    try:
                        state = init(config, Sample(t, row.f))
                    except ValueError as exc:
                        skipped += 1
                        click.echo(f"line {row.line}: {exc}", err=True)
                        continue
                    eps = 0.0
                else:
                    before = state
                    state, eps = update_with_residual(state, Sample(t, row.f))
                    if state is before:
                        skipped += 1
                        continue
                accepted += 1
                values = [state.t, *state.z, eps]
                if truth_spec is not None:
                    values += [z - float(derivative(truth_spec, state.t, m)) for m, z in enumerate(state.z)]
                if writer:
                    writer.writerow([_fmt(v) for v in values])
                else:
                    rec = {"type": "row", "t": state.t, "z": list(state.z), "epsilon": eps}
                    if truth_spec is not None:
                        rec["e"] = values[order + 2:]
                    out.write(json.dumps(rec) + "\n")

        if state is None:
            click.echo("no samples", err=True)
            if not writer:
                out.write(json.dumps({"type": "summary", "accepted": 0, "skipped": skipped}) + "\n")
            return

        model = TaylorModel.capture(state)
        coeffs = extract_poly_coeffs(model)
        summary = {"type": "summary", "accepted": accepted, "skipped": skipped, "t": state.t,
                   "z": list(state.z), "coeffs": coeffs}
        ext = extrapolation_table(model, *extrapolate) if extrapolate else None
        if writer:
            out.write(f"# summary accepted={accepted} skipped={skipped}\n")
            out.write("# coeffs " + " ".join(_fmt(c) for c in coeffs) + "\n")
        else:
            if ext is not None:
                summary["extrapolation"] = ext.tolist()
            out.write(json.dumps(summary) + "\n")
        if ext is not None and writer:
            dest = _open_out(extrapolate_out) if extrapolate_out else sys.stderr
            try:
                w = csv.writer(dest, lineterminator="\n")
                w.writerow(["tau"] + [f"f{k}" for k in range(order)])
                w.writerows([[_fmt(v) for v in r] for r in ext])
            finally:
                if dest not in (sys.stderr, sys.stdout):
                    dest.close()
        click.echo(f"accepted={accepted} skipped={skipped}", err=True)
        if snapshot:
            Path(snapshot).write_text(json.dumps(state.to_record()) + "\n")
    except InputError as exc:
        raise _InputFailure(str(exc)) from exc
    except (NonFiniteSampleError, FloatingPointError) as exc:
        raise _InputFailure(str(exc)) from exc
    finally:
        if out is not sys.stdout:
            out.close()


def _spec_from_flags(config_path, poly, harmonic, sigma, seed, t_start, t_end, dt) -> SignalConfig:
    cfg = _load_config(config_path) or SignalConfig(SignalSpec())
    spec = cfg.spec
    if poly is not None:
        spec = SignalSpec(tuple(float(v) for v in poly.split(",") if v.strip()), spec.harmonics, spec.noise_sigma, spec.seed)
    if harmonic:
        hs = []
        for h in harmonic:
            vals = [float(v) for v in h.split(",")]
            hs.append(tuple(vals + [0.0] * (3 - len(vals))))
        spec = SignalSpec(spec.poly, tuple(hs), spec.noise_sigma, spec.seed)
    if sigma is not None or seed is not None:
        spec = SignalSpec(spec.poly, spec.harmonics,
                          spec.noise_sigma if sigma is None else sigma,
                          spec.seed if seed is None else seed)
    return SignalConfig(
        spec,
        cfg.t_start if t_start is None else t_start,
        cfg.t_end if t_end is None else t_end,
        cfg.dt if dt is None else dt,
    )


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--poly", default=None, help="Comma-separated K_0,K_1,...")
@click.option("--harmonic", multiple=True, help="A,omega[,phase]; repeatable.")
@click.option("--sigma", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--t-start", type=float, default=None)
@click.option("--t-end", type=float, default=None)
@click.option("--dt", type=float, default=None)
@click.option("-o", "--output", "output_path", default="-", show_default=True)
def generate(config_path, poly, harmonic, sigma, seed, t_start, t_end, dt, output_path):
    """Write a sampled test signal as CSV with columns t,f."""
    try:
        cfg = _spec_from_flags(config_path, poly, harmonic, sigma, seed, t_start, t_end, dt)
        if not (cfg.dt > 0 and cfg.t_end >= cfg.t_start):
            raise ValueError("need dt > 0 and t_end >= t_start")
    except ValueError as exc:
        raise _InputFailure(str(exc)) from exc
    ts = uniform_grid(cfg.t_start, cfg.t_end, cfg.dt)
    fs = samples(cfg.spec, ts)
    out = _open_out(output_path)
    try:
        out.write("t,f\n")
        for t, f in zip(ts.tolist(), fs.tolist()):
            out.write(f"{t!r},{f!r}\n")
    finally:
        if out is not sys.stdout:
            out.close()


@main.command("verify-identities")
@click.option("--max-order", type=click.IntRange(1, MAX_ORDER), default=DEFAULT_IDENTITY_ORDER, show_default=True)
@click.option("-v", "--verbose", is_flag=True)
def verify_identities(max_order, verbose):
    """Check the exact coefficient identities for n = 1..max-order."""
    results = identity_suite(max_order)
    for r in results:
        line = f"{'PASS' if r.passed else 'FAIL'} {r.name} n={r.order}"
        click.echo(line + (f"  {r.detail}" if verbose else ""))
    failed = sum(not r.passed for r in results)
    click.echo(f"{len(results) - failed}/{len(results)} passed")
    sys.exit(EXIT_FAIL if failed else EXIT_OK)


@main.command("oracle-check")
def oracle_check():
    """Cross-check discrete, RK4 and closed-form solutions."""
    results = consistency_suite()
    for r in results:
        extra = " ".join(f"{k}={v}" for k, v in r.extra.items())
        click.echo(f"{'PASS' if r.passed else 'FAIL'} {r.name} value={r.value:.6g} ({r.threshold}) {extra}".rstrip())
    sys.exit(EXIT_OK if all(r.passed for r in results) else EXIT_FAIL)


@main.command("variance-check")
@click.option("-n", "--order", type=click.IntRange(1, MAX_ORDER), default=3, show_default=True)
@click.option("--sigma", type=float, default=1.0, show_default=True)
@click.option("--runs", type=click.IntRange(100, None), default=200, show_default=True)
@click.option("--grid", default="1000,2000,5000,10000", show_default=True, help="Comma-separated times.")
@click.option("--poly", default="1,0.5,0.01", show_default=True)
@click.option("--seed", type=int, default=2024, show_default=True)
@click.option("--tol", type=float, default=0.3, show_default=True)
def variance_check(order, sigma, runs, grid, poly, seed, tol):
    """Fit log Var(z_{m-1}) against log t and compare with -(2m-1)."""
    times = np.array(sorted(float(v) for v in grid.split(",")))
    coeffs = tuple(float(v) for v in poly.split(","))
    if len(coeffs) > order:
        raise _InputFailure(f"polynomial degree {len(coeffs) - 1} exceeds order capacity {order - 1}")
    spec = SignalSpec(poly=coeffs, noise_sigma=sigma, seed=seed)
    est = monte_carlo_estimates(spec, order, runs, times)
    ok = True
    for m in range(1, order + 1):
        fit = fit_variance(est, m, times)
        if fit.degenerate:
            click.echo(f"---- m={m} slope undefined (zero variance)")
            continue
        want = -(2 * m - 1)
        good = abs(fit.slope - want) <= tol
        ok &= good
        click.echo(f"{'PASS' if good else 'FAIL'} m={m} slope={fit.slope:.4f} expected={want} tol={tol}")
    sys.exit(EXIT_OK if ok else EXIT_FAIL)


@main.command("extract-coeffs")
@click.option("--state", "state_path", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON snapshot from `run --snapshot`.")
@click.option("-n", "--order", type=click.IntRange(1, MAX_ORDER), default=None, help="Differentiate --input first.")
@click.option("-i", "--input", "input_path", default="-", show_default=True)
@click.option("--t-col", default="0", show_default=True)
@click.option("--f-col", default=None)
def extract_coeffs(state_path, order, input_path, t_col, f_col):
    """Print global polynomial coefficients K_0..K_{n-1} from a final state."""
    if state_path:
        state = DifferentiatorState.from_record(json.loads(Path(state_path).read_text()))
    elif order:
        state = None
        cfg = DifferentiatorConfig(order)
        try:
            with _open_in(input_path) as src:
                for row in read_samples(src, _col(t_col), _col(f_col)):
                    if state is None:
                        state = init(cfg, Sample(row.t, row.f))
                    elif row.t > state.t:
                        state, _ = update_with_residual(state, Sample(row.t, row.f))
        except (InputError, ValueError) as exc:
            raise _InputFailure(str(exc)) from exc
        if state is None:
            click.echo("no samples", err=True)
            return
    else:
        raise click.UsageError("give --state or --order")
    for j, k in enumerate(extract_poly_coeffs(TaylorModel.capture(state))):
        click.echo(f"K{j} {_fmt(k)}")


@main.command("plot-data")
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@click.option("-n", "--order", type=click.IntRange(1, MAX_ORDER), default=5, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Signal config; default is the degree-4 demonstration polynomial.")
@click.option("--sigma", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--stride", type=int, default=10, show_default=True, help="Keep every k-th step in histories.")
def plot_data(out_dir, order, config_path, sigma, seed, stride):
    """Write CSV tables for interpolation, extrapolation, error decay and coefficient convergence."""
    from .experiment import DEMO_CONFIG, run_experiment

    cfg = _load_config(config_path) or DEMO_CONFIG
    spec = cfg.spec
    if sigma is not None or seed is not None:
        spec = SignalSpec(spec.poly, spec.harmonics, spec.noise_sigma if sigma is None else sigma,
                          spec.seed if seed is None else seed)
    res = run_experiment(spec, order, cfg.t_start, cfg.t_end, cfg.dt)
    for name, path in res.write_tables(Path(out_dir), stride=stride).items():
        click.echo(f"{name}: {path}")


if __name__ == "__main__":  # pragma: no cover
    main()
