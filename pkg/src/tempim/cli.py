"""Command-line runner: one command per experiment, CSV data plus a JSON metadata sidecar.

Every option can also come from a JSON config file (``--config``); flags given on the
command line win over file values. Angles are radians.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable

import click
import numpy as np

from . import __version__
from .circuit import (
    PAULIS,
    CircuitParams,
    build_obc_im,
    build_pd_im,
    pure_state,
    x_polarized,
)
from .engine import iterate_im, lcga_build, mid_cut, project_time
from .errors import ConfigError, NumericalError, SizeCapError, TempimError
from .mps import fidelity, from_dense
from .observables import (
    Insertion,
    autocorrelator_series_complex,
    evaluate_sandwich,
    polarization_series_complex,
)
from .oracle import exact_im
from .quasiparticle import LN2, PairWeight, kic_dispersion, s_curve, v_te
from .tebd import tebd_autocorr_run, tebd_quench_run

log = logging.getLogger("tempim")

EXPERIMENTS = ("teb-scan", "lcga-build", "dynamics", "autocorr", "tebd", "qp-predict", "oracle-check")
BOUNDARIES = ("obc", "pd", "lcga")
INITIAL_STATES = ("x", "z", "infinite")
AXES = ("X", "Y", "Z")
MODES = ("quench", "autocorr")

# name -> (converter, choices)
FIELDS: dict[str, tuple[Callable[[Any], Any], tuple | None]] = {
    "g": (float, None),
    "J": (float, None),
    "h": (float, None),
    "T": (int, None),
    "chi": (int, None),
    "tol": (float, None),
    "boundary": (str, BOUNDARIES),
    "out": (str, None),
    "steps": (int, None),
    "initial_state": (str, INITIAL_STATES),
    "axis": (str, AXES),
    "L": (int, None),
    "mode": (str, MODES),
    "xi_max": (float, None),
    "n_xi": (int, None),
    "w": (float, None),
    "n_k": (int, None),
    "seed": (int, None),
}

REQUIRED = {
    "teb-scan": ("g", "J", "T"),
    "lcga-build": ("g", "J", "T"),
    "dynamics": ("g", "J", "T"),
    "autocorr": ("g", "J", "T"),
    "tebd": ("g", "J", "T"),
    "qp-predict": ("g", "J"),
    "oracle-check": ("g", "J", "T", "L"),
}

DEFAULTS: dict[str, Any] = {
    "h": 0.0,
    "chi": None,
    "tol": 0.0,
    "boundary": "obc",
    "out": None,
    "steps": None,
    "initial_state": None,
    "axis": "X",
    "L": None,
    "mode": "quench",
    "xi_max": 0.6,
    "n_xi": 61,
    "w": LN2,
    "n_k": 256,
    "seed": 0,
}


@dataclass
class RunConfig:
    experiment: str
    g: float | None = None
    J: float | None = None
    h: float = 0.0
    T: int | None = None
    chi: int | None = None
    tol: float = 0.0
    boundary: str = "obc"
    out: str | None = None
    steps: int | None = None
    initial_state: str | None = None
    axis: str = "X"
    L: int | None = None
    mode: str = "quench"
    xi_max: float = 0.6
    n_xi: int = 61
    w: float = LN2
    n_k: int = 256
    seed: int = 0

    def params(self) -> CircuitParams:
        return CircuitParams(self.g, self.J, self.h, self.T or 1, initial_density(self.initial_state))

    def parameters(self) -> dict[str, Any]:
        return asdict(self)


def initial_density(name: str | None) -> np.ndarray | None:
    if name in (None, "infinite"):
        return None
    if name == "x":
        return x_polarized()
    if name == "z":
        return pure_state(np.array([1.0, 0.0]))
    raise ConfigError(f"unknown initial_state {name!r}")


def _convert(name: str, value: Any) -> Any:
    conv, choices = FIELDS[name]
    if value is None:
        return None
    if conv is int and isinstance(value, float) and not value.is_integer():
        raise ConfigError(f"field {name!r} must be an integer, got {value!r}")
    if conv in (int, float) and isinstance(value, bool):
        raise ConfigError(f"field {name!r} must be numeric, got {value!r}")
    try:
        out = conv(value)
    except (TypeError, ValueError):
        raise ConfigError(f"field {name!r} has the wrong type: {value!r}") from None
    if choices is not None:
        if name == "axis":
            out = out.upper()
        if out not in choices:
            raise ConfigError(f"field {name!r} must be one of {choices}, got {value!r}")
    return out


def _load_file(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def parse_config(experiment: str, flags: dict[str, Any], config_path: str | None = None) -> RunConfig:
    """Merge config-file values with command-line flags (flags win) and validate."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    merged: dict[str, Any] = {}
    for key, value in _load_file(config_path).items():
        if key == "experiment":
            if value != experiment:
                raise ConfigError(f"config file is for experiment {value!r}, not {experiment!r}")
            continue
        if key not in FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        merged[key] = _convert(key, value)
    for key, value in flags.items():
        if key not in FIELDS:
            raise ConfigError(f"unknown option {key!r}")
        if value is not None:
            merged[key] = _convert(key, value)
    for key in REQUIRED[experiment]:
        if merged.get(key) is None:
            raise ConfigError(f"missing required field {key!r} for {experiment}")
    values = {**DEFAULTS, **{k: v for k, v in merged.items() if v is not None}}
    c = RunConfig(experiment=experiment, **{k: values.get(k) for k in FIELDS})
    _validate(c)
    return c


def _validate(c: RunConfig) -> None:
    for name in ("g", "J", "h", "tol", "w", "xi_max"):
        v = getattr(c, name)
        if v is not None and not math.isfinite(v):
            raise ConfigError(f"field {name!r} must be finite")
    if c.T is not None and c.T < 1:
        raise ConfigError("field 'T' must be >= 1")
    if c.chi is not None and c.chi < 1:
        raise ConfigError("field 'chi' must be >= 1")
    if c.tol < 0:
        raise ConfigError("field 'tol' must be >= 0")
    if c.steps is not None and c.steps < 0:
        raise ConfigError("field 'steps' must be >= 0")
    if c.L is not None and c.L < 0:
        raise ConfigError("field 'L' must be >= 0")
    if not 0.0 <= c.w <= 2 * LN2:
        raise ConfigError("field 'w' must lie in [0, 2 ln 2]")
    if c.n_xi < 2 or c.xi_max <= 0:
        raise ConfigError("need n_xi >= 2 and xi_max > 0")
    if c.n_k < 64:
        raise ConfigError("field 'n_k' must be >= 64")
    if c.experiment == "autocorr" and c.initial_state not in (None, "infinite"):
        raise ConfigError("autocorr runs at infinite temperature; drop initial_state")


# ---------------------------------------------------------------- experiments


@dataclass
class Result:
    header: list[str]
    rows: list[list[Any]]
    discarded: float = 0.0
    summary: dict[str, Any] = field(default_factory=dict)


def _boundary_im(c: RunConfig, p: CircuitParams):
    return build_obc_im(p.T) if c.boundary == "obc" else build_pd_im(p.T)


def run_teb_scan(c: RunConfig) -> Result:
    p = c.params()
    rows = []
    if c.boundary == "lcga":
        _, trace = lcga_build(p, c.T, c.chi, c.tol)
    else:
        steps = c.T if c.steps is None else c.steps
        _, trace = iterate_im(_boundary_im(c, p), p, steps, c.chi, c.tol, stop_when_converged=False)
    for r in trace:
        for cut, s in enumerate(r.profile):
            rows.append([r.step, cut, s, r.max_bond, r.discarded_weight])
    mids = trace.mid_entropies
    return Result(
        ["step", "cut", "entropy_nats", "max_bond_dim", "discarded_weight"],
        rows,
        trace.total_discarded,
        {"peak_mid_entropy": max(mids), "final_mid_entropy": mids[-1]},
    )


def run_lcga_build(c: RunConfig) -> Result:
    p = c.params()
    ims, trace = lcga_build(p, c.T, c.chi, c.tol)
    rows = []
    for r in trace:
        proj = float("nan")
        if r.step > 1:
            proj = fidelity(project_time(ims[r.step], 1), ims[r.step - 1])
        cut = mid_cut(ims[r.step])
        rows.append([r.step, -1 if cut is None else cut, r.mid_entropy, r.max_bond, r.discarded_weight, proj])
    return Result(
        ["T", "mid_cut", "mid_entropy_nats", "max_bond_dim", "discarded_weight", "projection_fidelity"],
        rows,
        trace.total_discarded,
    )


def _ims_for_dynamics(c: RunConfig, p: CircuitParams):
    if c.boundary == "lcga":
        ims, trace = lcga_build(p, c.T, c.chi, c.tol)
        disc = [0.0] + [r.discarded_weight for r in trace]
        return ims, disc, False
    # finite-environment iteration: 2T sites cover the light cone, read every time off one IM
    steps = c.T if c.steps is None else c.steps
    im, trace = iterate_im(_boundary_im(c, p.with_T(c.T)), p.with_T(c.T), steps, c.chi, c.tol)
    return {c.T: im}, [trace.total_discarded] * (c.T + 1), True


DYN_HEADER = ["t", "value_real", "value_imag", "discarded_weight"]


def run_dynamics(c: RunConfig) -> Result:
    if c.initial_state is None:
        c.initial_state = "x"
    p = c.params()
    ims, disc, use_final = _ims_for_dynamics(c, p)
    if use_final:
        op = PAULIS[c.axis]
        im = ims[c.T]
        series = [(t, evaluate_sandwich(None, im, p, None, [Insertion(2 * t, op)])) for t in range(c.T + 1)]
    else:
        series = polarization_series_complex(ims, p, c.axis)
    rows = [[t, v.real, v.imag, disc[t]] for t, v in series]
    return Result(DYN_HEADER, rows, disc[-1])


def run_autocorr(c: RunConfig) -> Result:
    c.initial_state = "infinite"
    p = c.params()
    ims, disc, use_final = _ims_for_dynamics(c, p)
    series = autocorrelator_series_complex(ims, p, c.axis, use_final=use_final)
    rows = [[t, v.real, v.imag, disc[t]] for t, v in series]
    return Result(DYN_HEADER, rows, disc[-1])


def run_tebd(c: RunConfig) -> Result:
    L = c.L if c.L is not None else 2 * c.T + 4
    if c.mode == "quench":
        if c.initial_state is None:
            c.initial_state = "x"
        res = tebd_quench_run(c.params(), L, c.chi, c.T, c.axis, c.tol)
    else:
        c.initial_state = "infinite"
        res = tebd_autocorr_run(c.params(), L, c.chi, c.T, c.axis, c.tol)
    rows = [[t, v, 0.0, d] for (t, v), d in zip(res.series, res.discarded)]
    return Result(DYN_HEADER, rows, res.total_discarded, {"L": L})


def run_qp_predict(c: RunConfig) -> Result:
    d = kic_dispersion(c.g, c.J, c.n_k)
    w = PairWeight(c.w)
    xs = np.linspace(0.0, c.xi_max, c.n_xi)
    rows = [[xi, s] for xi, s in s_curve(d, w, xs)]
    summary: dict[str, Any] = {"v_max_sites": d.v_max, "flat_band": d.flat}
    if not d.flat:
        summary["v_te"] = v_te(d, w)
    return Result(["xi", "s"], rows, 0.0, summary)


def run_oracle_check(c: RunConfig) -> Result:
    if c.L % 2:
        raise ConfigError("oracle-check needs an even L (two sites per transfer step)")
    p = c.params()
    exact = exact_im(p, c.L)
    ref = from_dense(exact, 2 * p.T, 4)
    im, _ = iterate_im(build_obc_im(p.T), p, c.L // 2, None, 0.0, stop_when_converged=False)
    rows = [[c.L, p.T, "iteration", fidelity(im, ref)]]
    if c.L == 2 * p.T:
        ims, _ = lcga_build(p, p.T, None, 0.0)
        rows.append([c.L, p.T, "lcga", fidelity(ims[p.T], ref)])
    worst = min(r[3] for r in rows)
    click.echo(f"fidelity = {worst:.15f}")
    if worst < 1 - 1e-10:
        raise NumericalError(f"oracle mismatch: fidelity {worst}")
    return Result(["L", "T", "method", "fidelity"], rows, 0.0, {"min_fidelity": worst})


RUNNERS: dict[str, Callable[[RunConfig], Result]] = {
    "teb-scan": run_teb_scan,
    "lcga-build": run_lcga_build,
    "dynamics": run_dynamics,
    "autocorr": run_autocorr,
    "tebd": run_tebd,
    "qp-predict": run_qp_predict,
    "oracle-check": run_oracle_check,
}


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_outputs(c: RunConfig, res: Result, runtime: float) -> tuple[Path, Path]:
    out = Path(c.out if c.out is not None else f"{c.experiment}.csv")
    meta = out.with_suffix(".json")
    with open(out, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(res.header)
        for row in res.rows:
            wr.writerow([_fmt(v) for v in row])
    payload = {
        "parameters": c.parameters(),
        "version": __version__,
        "runtime_seconds": runtime,
        "total_discarded_weight": res.discarded,
    }
    if res.summary:
        payload["summary"] = {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in res.summary.items()}
    with open(meta, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out, meta


def run_experiment(c: RunConfig) -> int:
    """Run one experiment and write its outputs; returns the process exit code."""
    t0 = time.perf_counter()
    try:
        res = RUNNERS[c.experiment](c)
        runtime = time.perf_counter() - t0
        out, _ = write_outputs(c, res, runtime)
    except TempimError as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.exit_code
    except np.linalg.LinAlgError as exc:
        click.echo(f"error: numerical failure: {exc}", err=True)
        return NumericalError.exit_code
    except (ValueError, MemoryError) as exc:
        # invalid physical input surfacing from the library
        click.echo(f"error: {exc}", err=True)
        return SizeCapError.exit_code if isinstance(exc, MemoryError) else ConfigError.exit_code
    except OSError as exc:
        click.echo(f"error: cannot write output: {exc}", err=True)
        return 1
    log.info("%s finished in %.2fs -> %s", c.experiment, runtime, out)
    return 0


# ---------------------------------------------------------------- click plumbing


_OPTIONS = {
    "g": click.option("--g", type=float, help="transverse kick angle"),
    "J": click.option("--J", "J", type=float, help="Ising coupling angle"),
    "h": click.option("--h", type=float, help="longitudinal field angle"),
    "T": click.option("--T", "T", type=int, help="number of periods (T_max for growth runs)"),
    "chi": click.option("--chi", type=int, help="bond-dimension cap (omit for exact)"),
    "tol": click.option("--tol", type=float, help="relative singular-value cutoff"),
    "boundary": click.option("--boundary", type=click.Choice(BOUNDARIES), help="IM construction"),
    "out": click.option("--out", type=click.Path(dir_okay=False), help="CSV output path"),
    "steps": click.option("--steps", type=int, help="transfer-matrix steps (default T)"),
    "initial_state": click.option("--initial-state", "initial_state", type=click.Choice(INITIAL_STATES)),
    "axis": click.option("--axis", "--op", "axis", type=click.Choice(AXES, case_sensitive=False)),
    "L": click.option("--L", "L", type=int, help="chain / environment length in sites"),
    "mode": click.option("--mode", type=click.Choice(MODES)),
    "xi_max": click.option("--xi-max", "xi_max", type=float),
    "n_xi": click.option("--n-xi", "n_xi", type=int),
    "w": click.option("--w", type=float, help="pair entropy weight"),
    "n_k": click.option("--n-k", "n_k", type=int),
    "seed": click.option("--seed", type=int),
}

_COMMON = ("g", "J", "h", "T", "chi", "tol", "boundary", "out", "seed")
_EXTRA = {
    "teb-scan": ("steps", "initial_state"),
    "lcga-build": ("initial_state",),
    "dynamics": ("steps", "initial_state", "axis"),
    "autocorr": ("steps", "axis"),
    "tebd": ("L", "mode", "initial_state", "axis"),
    "qp-predict": ("xi_max", "n_xi", "w", "n_k"),
    "oracle-check": ("L", "initial_state"),
}


@click.group()
@click.version_option(__version__, prog_name="tempim")
@click.option("-v", "--verbose", count=True, help="-v info, -vv debug")
def cli(verbose: int) -> None:
    """Influence-matrix experiments on the kicked Ising chain."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _make_command(name: str) -> click.Command:
    def callback(config: str | None, **flags: Any) -> None:
        ctx = click.get_current_context()
        try:
            c = parse_config(name, flags, config)
        except ConfigError as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(ConfigError.exit_code)
        ctx.exit(run_experiment(c))

    cmd = click.option("--config", type=click.Path(dir_okay=False), help="JSON config file")(callback)
    for key in reversed(_COMMON + _EXTRA[name]):
        cmd = _OPTIONS[key](cmd)
    return click.command(name, help=f"Run the {name} experiment.")(cmd)


for _name in EXPERIMENTS:
    cli.add_command(_make_command(_name))


def main(argv: list[str] | None = None) -> None:
    cli.main(args=argv, prog_name="tempim")
