"""cavitylz command line: JSON config in, CSV tables and JSON sidecars out.

    cavitylz <modes|sweep|transfer|regimes|mirror|version> --config cfg.json
             [--out DIR] [--jobs N] [--override key=value ...]

Exit status is 0 on success, 2 for configuration errors and 3 when a root
solve or an integration fails.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import nullcontext
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (IntegrationError, early_time_analytic, energy_deviation, integrate_first_order,
                       integrate_second_order, uncoupled_second_order)
from .field_profiles import amplitude_ratio, max_transfer_ratio
from .mirrors import (delta_transmission, interdielectric_delta_transmission, slab_transmission,
                      thin_slab_alpha)
from .mode_solver import (SolverError, _slab_pair_index, fit_lz_from_spectrum, lz_fit_parameters,
                          optimal_displacement, slab_crossing_partner, solve_global_pair, sweep_spectrum,
                          track_slab_branch)
from .model import CavityGeometry, DeltaMirror, DomainError, SlabMirror
from .regimes import (ADIABATIC_THRESHOLD, REDUCTION_THRESHOLD, classify_grid, classify_regime,
                      feasibility_estimate, regime_boundaries)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


class ConfigError(ValueError):
    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}" if path else msg)
        self.path = path


# -- config schema --------------------------------------------------------

REQUIRED = object()
NUM, INT, BOOL, STR = "number", "integer", "boolean", "string"
RANGE, INTS, NUMS, DICT = "range", "integers", "numbers", "object"

MIRROR_KEYS = {
    "delta": {"model": (STR, REQUIRED), "alpha": (NUM, REQUIRED)},
    "slab": {"model": (STR, REQUIRED), "half_width": (NUM, REQUIRED), "index": (NUM, REQUIRED)},
    "interdielectric": {"model": (STR, REQUIRED), "alpha": (NUM, REQUIRED), "n1": (NUM, 1.0), "n2": (NUM, 1.0)},
}

SCHEMAS = {
    "modes": {
        "L": (NUM, REQUIRED), "delta_L": (RANGE, []), "mirror": (DICT, REQUIRED),
        "n": (INTS, REQUIRED), "tol": (NUM, 1e-12), "track": (INTS, []),
    },
    "sweep": {
        "theta_tilde": (NUM, 1.0), "delta_ratios": (NUMS, []), "first_order": (BOOL, True),
        "tau0": (NUM, -25.0), "tau1": (NUM, 25.0), "tol": (NUM, 1e-10), "n_points": (INT, 2001),
        "state0": (NUMS, [1.0, 0.0]), "method": (STR, "DOP853"), "derivatives": (BOOL, False),
        "uncoupled": (BOOL, False), "early_time": (BOOL, False),
    },
    "transfer": {
        "L": (NUM, REQUIRED), "alpha": (NUM, REQUIRED), "n": (INT, REQUIRED), "delta_L": (RANGE, [0.0]),
        "branches": (None, ["even", "odd"]), "max_ratio_alphas": (NUMS, []),
    },
    "regimes": {
        "T": (RANGE, {"start": 1e-8, "stop": 1.0, "num": 41, "log": True}),
        "fsr_ratio": (RANGE, {"start": 1e-7, "stop": 1e-1, "num": 41, "log": True}),
        "v": (NUM, REQUIRED), "reduction_threshold": (NUM, REDUCTION_THRESHOLD),
        "adiabatic_threshold": (NUM, ADIABATIC_THRESHOLD), "point": (DICT, None), "feasibility": (DICT, None),
    },
    "mirror": {"mirror": (DICT, REQUIRED), "k": (RANGE, REQUIRED)},
}

POINT_KEYS = {"T": (NUM, REQUIRED), "omega_fsr": (NUM, REQUIRED), "omega_av": (NUM, REQUIRED), "v": (NUM, REQUIRED)}
FEASIBILITY_KEYS = {"L": (NUM, REQUIRED), "finesse": (NUM, REQUIRED), "wavelength": (NUM, REQUIRED),
                    "v": (NUM, None), "ramp_time": (NUM, None), "delta_L_span": (NUM, None), "alpha": (NUM, None)}
RANGE_KEYS = {"start": (NUM, REQUIRED), "stop": (NUM, REQUIRED), "num": (INT, REQUIRED), "log": (BOOL, False)}


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _check_type(path, kind, value):
    if kind is None:
        return value
    if kind == NUM:
        if not _is_num(value):
            raise ConfigError(path, f"expected a finite number, got {value!r}")
        return float(value)
    if kind == INT:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if kind == BOOL:
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true/false, got {value!r}")
        return value
    if kind == STR:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if kind == NUMS:
        if not isinstance(value, list):
            raise ConfigError(path, "expected a list of numbers")
        return [_check_type(f"{path}[{i}]", NUM, v) for i, v in enumerate(value)]
    if kind == INTS:
        value = [value] if isinstance(value, int) and not isinstance(value, bool) else value
        if not isinstance(value, list):
            raise ConfigError(path, "expected an integer or a list of integers")
        return [_check_type(f"{path}[{i}]", INT, v) for i, v in enumerate(value)]
    if kind == RANGE:
        if isinstance(value, dict):
            return _validate(path, value, RANGE_KEYS)
        if _is_num(value):
            return [float(value)]
        return _check_type(path, NUMS, value)
    if kind == DICT:
        if not isinstance(value, dict):
            raise ConfigError(path, "expected an object")
        return value
    raise AssertionError(kind)


def _validate(prefix, cfg, schema):
    if not isinstance(cfg, dict):
        raise ConfigError(prefix, "expected an object")
    unknown = sorted(set(cfg) - set(schema))
    if unknown:
        where = f"{prefix}." if prefix else ""
        raise ConfigError(f"{where}{unknown[0]}", "unknown key")
    out = {}
    for key, (kind, default) in schema.items():
        path = f"{prefix}.{key}" if prefix else key
        if key not in cfg:
            if default is REQUIRED:
                raise ConfigError(path, "required key missing")
            out[key] = copy.deepcopy(default)
            continue
        out[key] = cfg[key] if cfg[key] is None else _check_type(path, kind, cfg[key])
    return out


def _validate_mirror(path, m):
    model = m.get("model") if isinstance(m, dict) else None
    if model not in MIRROR_KEYS:
        raise ConfigError(f"{path}.model", f"expected one of {sorted(MIRROR_KEYS)}, got {model!r}")
    return _validate(path, m, MIRROR_KEYS[model])


def validate_config(command: str, cfg: dict) -> dict:
    """Fill defaults, check types and reject unknown keys; returns a normalised copy."""
    if command not in SCHEMAS:
        raise ConfigError("", f"unknown command {command!r}")
    out = _validate("", cfg, SCHEMAS[command])
    if "mirror" in out:
        out["mirror"] = _validate_mirror("mirror", out["mirror"])
    if command == "regimes":
        if out["point"] is not None:
            out["point"] = _validate("point", out["point"], POINT_KEYS)
        if out["feasibility"] is not None:
            out["feasibility"] = _validate("feasibility", out["feasibility"], FEASIBILITY_KEYS)
    if command == "transfer":
        b = out["branches"]
        if not isinstance(b, list) or any(x not in ("even", "odd") for x in b):
            raise ConfigError("branches", "expected a list drawn from 'even', 'odd'")
    if command == "sweep" and len(out["state0"]) != 2:
        raise ConfigError("state0", "expected two amplitudes")
    return out


def grid_values(rng) -> np.ndarray:
    if isinstance(rng, dict):
        f = np.geomspace if rng["log"] else np.linspace
        return f(rng["start"], rng["stop"], rng["num"])
    return np.asarray(rng, dtype=float)


def apply_overrides(cfg: dict, overrides) -> dict:
    """key=value pairs; value parsed as JSON when possible, dotted keys reach nested objects."""
    cfg = copy.deepcopy(cfg)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(key, "cannot override inside a non-object")
        node[parts[-1]] = value
    return cfg


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except OSError as exc:
        raise ConfigError("", f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from exc


# -- output ---------------------------------------------------------------

def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


@dataclass
class ResultEnvelope:
    command: str
    config: dict
    columns: list
    units: dict
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def metadata(self) -> dict:
        return {"tool": "cavitylz", "version": __version__, "command": self.command,
                "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                "config": self.config, "units": self.units, "summary": self.summary}

    def write(self, out_dir: Path, stem: str):
        out_dir.mkdir(parents=True, exist_ok=True)
        write_csv(out_dir / f"{stem}.csv", self.columns, self.rows)
        with open(out_dir / f"{stem}.json", "w", encoding="utf-8") as f:
            json.dump(_jsonable(self.metadata()), f, indent=2, sort_keys=True)
            f.write("\n")


def write_csv(path: Path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\r\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _pool(jobs):
    return ProcessPoolExecutor(max_workers=jobs) if jobs and jobs > 1 else nullcontext(None)


def _map(executor, fn, items):
    return list(executor.map(fn, items)) if executor is not None else [fn(i) for i in items]


# -- commands -------------------------------------------------------------

def _mirror_model(m):
    if m["model"] == "delta":
        return DeltaMirror(m["alpha"])
    if m["model"] == "slab":
        return SlabMirror(m["half_width"], m["index"])
    raise ConfigError("mirror.model", "modes supports 'delta' and 'slab'")


def run_modes(cfg, out_dir: Path, jobs: int = 1):
    mirror = _mirror_model(cfg["mirror"])
    grid = grid_values(cfg["delta_L"])
    if grid.size == 0:
        grid = np.array([0.0])
    L = cfg["L"]
    with _pool(jobs) as ex:
        table = sweep_spectrum(L, grid, mirror, cfg["n"], cfg["tol"], executor=ex)
    crossings = []
    for n in cfg["n"]:
        pairs = [p for p in table.pairs if p.n == n]
        samples = [(p.delta_L, max(p.k_even, p.k_odd), min(p.k_even, p.k_odd)) for p in pairs]
        entry = {"n": n}
        try:
            entry["fit"] = asdict(fit_lz_from_spectrum(samples))
        except SolverError as exc:
            # no avoided-crossing shape to fit, e.g. a single dL point or a resonance window
            entry["fit"], entry["fit_error"] = None, str(exc)
        if isinstance(mirror, DeltaMirror):
            entry["analytic"] = asdict(lz_fit_parameters(n, L, mirror.alpha))
        else:
            j, ratio, _ = _slab_pair_index(L, mirror.half_width, mirror.index, n)
            entry["gap_ratio"] = ratio
            entry["eigen_indices"] = [j, j + 1]
            entry["partner_of_lower"] = slab_crossing_partner(L, mirror, j)
        crossings.append(entry)
    env = ResultEnvelope("modes", cfg, ["delta_L_m", "n", "branch", "k_inv_m"],
                         {"delta_L_m": "m", "n": "1", "branch": "label", "k_inv_m": "1/m"},
                         list(table.rows()), {"crossings": crossings,
                                              "max_abs_residual": float(np.max(np.abs(table.residual)))})
    env.write(out_dir, "modes")
    if cfg["track"]:
        if not isinstance(mirror, SlabMirror):
            raise ConfigError("track", "branch tracking is for slab mirrors")
        rows = []
        for j in cfg["track"]:
            ks = track_slab_branch(L, mirror, j, grid)
            rows += [(d, j, k) for d, k in zip(grid, ks)]
        partners = {str(j): slab_crossing_partner(L, mirror, j) for j in cfg["track"]}
        ResultEnvelope("modes", cfg, ["delta_L_m", "eigen_index", "k_inv_m"],
                       {"delta_L_m": "m", "eigen_index": "1", "k_inv_m": "1/m"}, rows,
                       {"crossing_partner": partners}).write(out_dir, "modes_tracks")
    return env


SWEEP_COLUMNS = ["tau", "re_AL", "im_AL", "re_AR", "im_AR", "normsq", "energy_dev", "order"]
DERIV_COLUMNS = ["re_dAL", "im_dAL", "re_dAR", "im_dAR"]


def _second_order_task(args):
    cfg, r = args
    return integrate_second_order(cfg["theta_tilde"], r, cfg["state0"], cfg["tau0"], cfg["tau1"],
                                  cfg["tol"], cfg["n_points"], method=cfg["method"])


def _traj_rows(traj, derivs):
    dev = traj.energy_deviation
    rows = []
    for i, t in enumerate(traj.tau):
        aL, aR = traj.A_L[i], traj.A_R[i]
        row = [t, aL.real, aL.imag, aR.real, aR.imag, dev[i] + 1.0, dev[i], traj.order]
        if derivs:
            dL, dR = traj.dA_L[i], traj.dA_R[i]
            row += [dL.real, dL.imag, dR.real, dR.imag]
        rows.append(row)
    return rows


def _traj_envelope(cfg, traj, derivs, extra):
    cols = SWEEP_COLUMNS + (DERIV_COLUMNS if derivs else [])
    units = {c: "1" for c in cols}
    units["order"] = "label"
    dev = energy_deviation(traj)
    summary = {"final_AL_sq": float(abs(traj.A_L[-1]) ** 2), "final_AR_sq": float(abs(traj.A_R[-1]) ** 2),
               "max_abs_energy_dev": dev.max_abs, "final_energy_dev": dev.final, **extra}
    return ResultEnvelope("sweep", cfg, cols, units, _traj_rows(traj, derivs), summary)


def run_sweep(cfg, out_dir: Path, jobs: int = 1):
    th, derivs = cfg["theta_tilde"], cfg["derivatives"]
    written = []
    if cfg["first_order"]:
        f = integrate_first_order(th, cfg["state0"], cfg["tau0"], cfg["tau1"], cfg["tol"], cfg["n_points"],
                                  method=cfg["method"])
        _traj_envelope(cfg, f, derivs, {"order": "first"}).write(out_dir, "sweep_first")
        written.append("sweep_first")
    with _pool(jobs) as ex:
        trajs = _map(ex, _second_order_task, [(cfg, r) for r in cfg["delta_ratios"]])
    for r, t in zip(cfg["delta_ratios"], trajs):
        stem = f"sweep_second_r{r:.6g}"
        _traj_envelope(cfg, t, derivs, {"order": "second", "delta_ratio": r}).write(out_dir, stem)
        written.append(stem)
    if cfg["uncoupled"]:
        u = uncoupled_second_order(th, cfg["tau0"], cfg["tau1"], cfg["tol"], cfg["state0"], cfg["n_points"],
                                   method=cfg["method"])
        _traj_envelope(cfg, u, True, {"order": "uncoupled"}).write(out_dir, "sweep_uncoupled")
        written.append("sweep_uncoupled")
    if cfg["early_time"]:
        tau = np.linspace(cfg["tau0"], cfg["tau1"], cfg["n_points"])
        tau = tau[tau < 0]
        a = early_time_analytic(th, cfg["tau0"], tau)
        ResultEnvelope("sweep", cfg, ["tau", "re_AL", "im_AL"], {"tau": "1", "re_AL": "1", "im_AL": "1"},
                       [(t, v.real, v.imag) for t, v in zip(tau, np.atleast_1d(a))],
                       {"order": "early-time analytic"}).write(out_dir, "sweep_early")
        written.append("sweep_early")
    return written


def _transfer_point(args):
    L, alpha, n, d = args
    p = solve_global_pair(CavityGeometry(L, d), DeltaMirror(alpha), n)
    return p.k_even, p.k_odd


def _max_ratio_task(args):
    n, L, alpha = args
    return max_transfer_ratio(n, L, alpha)


def run_transfer(cfg, out_dir: Path, jobs: int = 1):
    L, alpha, n = cfg["L"], cfg["alpha"], cfg["n"]
    grid = grid_values(cfg["delta_L"])
    with _pool(jobs) as ex:
        ks = _map(ex, _transfer_point, [(L, alpha, n, float(d)) for d in grid])
        maxima = _map(ex, _max_ratio_task, [(n, L, a * L) for a in cfg["max_ratio_alphas"]])
    rows, extrema = [], {}
    for branch in cfg["branches"]:
        best = (-1.0, None)
        for d, (ke, ko) in zip(grid, ks):
            r = amplitude_ratio(ke if branch == "even" else ko, L, d)
            inv = 1.0 / r if r != 0 else math.copysign(math.inf, r)
            rows.append((d, r, inv, branch))
            score = abs(inv) if branch == "even" else abs(r)
            if score > best[0]:
                best = (score, d)
        od = optimal_displacement(n, L, alpha, branch)
        extrema[branch] = {"grid_max_ratio": best[0], "grid_max_delta_L": best[1],
                           "k_star": od.k_star, "delta_L_star": od.delta_L_star}
    env = ResultEnvelope("transfer", cfg, ["delta_L_m", "ratio_A_over_B", "ratio_B_over_A", "branch"],
                         {"delta_L_m": "m", "ratio_A_over_B": "1", "ratio_B_over_A": "1", "branch": "label"},
                         rows, {"extrema": extrema})
    env.write(out_dir, "transfer")
    if maxima:
        ResultEnvelope("transfer", cfg, ["alpha_over_L", "max_ratio_exact", "max_ratio_approx", "delta_L_star_m"],
                       {"alpha_over_L": "1", "max_ratio_exact": "1", "max_ratio_approx": "1", "delta_L_star_m": "m"},
                       [(a, m.exact, m.approx, m.delta_L_star) for a, m in zip(cfg["max_ratio_alphas"], maxima)],
                       ).write(out_dir, "transfer_max")
    return env


def run_regimes(cfg, out_dir: Path, jobs: int = 1):
    th = {"reduction_threshold": cfg["reduction_threshold"], "adiabatic_threshold": cfg["adiabatic_threshold"]}
    T, ratios = grid_values(cfg["T"]), grid_values(cfg["fsr_ratio"])
    if np.any((T <= 0) | (T > 1)):
        raise ConfigError("T", "transmissions must lie in (0, 1]")
    rows = classify_grid(T, ratios, cfg["v"], **th)
    summary = {}
    if cfg["point"] is not None:
        summary["point"] = classify_regime(**cfg["point"], **th).as_dict()
    lines = []
    if cfg["feasibility"] is not None:
        fe = feasibility_estimate(**cfg["feasibility"])
        summary["feasibility"] = asdict(fe)
        lines = [f"transfer time      {fe.transfer_time:.4g} s",
                 f"field decay rate   {fe.decay_rate:.4g} 1/s",
                 f"field survival     {fe.survival:.4g}",
                 f"photon escape      {fe.escape:.4g}",
                 f"doppler shift      {fe.doppler_shift:.4g} rad/s"]
    env = ResultEnvelope("regimes", cfg, ["T", "omega_fsr_over_av", "class"],
                         {"T": "1", "omega_fsr_over_av": "1", "class": "label"}, rows, summary)
    env.write(out_dir, "regimes")
    red, ad = regime_boundaries(T, cfg["v"], cfg["reduction_threshold"], cfg["adiabatic_threshold"])
    write_csv(out_dir / "regimes_boundaries.csv", ["T", "reduction_boundary", "adiabatic_boundary"],
              list(zip(T, red, ad)))
    if lines:
        (out_dir / "feasibility.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return env


def run_mirror(cfg, out_dir: Path, jobs: int = 1):
    m, k = cfg["mirror"], grid_values(cfg["k"])
    cols = ["k_inv_m", "T", "R", "phase_rad"]
    units = {"k_inv_m": "1/m", "T": "1", "R": "1", "phase_rad": "rad"}
    if m["model"] == "delta":
        res = delta_transmission(k, m["alpha"])
        extra = []
    elif m["model"] == "slab":
        res = slab_transmission(k, m["half_width"], m["index"])
        extra = [delta_transmission(k, thin_slab_alpha(m["half_width"], m["index"])).T]
        cols.append("T_thin_delta")
        units["T_thin_delta"] = "1"
    else:
        res = interdielectric_delta_transmission(k, m["alpha"], m["n1"], m["n2"])
        extra = [res.T_approx]
        cols.append("T_approx")
        units["T_approx"] = "1"
    cols_data = [k, res.T, res.R, res.phase] + extra
    rows = [tuple(np.atleast_1d(c)[i] for c in cols_data) for i in range(k.size)]
    env = ResultEnvelope("mirror", cfg, cols, units, rows)
    env.write(out_dir, "mirror")
    return env


COMMANDS = {"modes": run_modes, "sweep": run_sweep, "transfer": run_transfer,
            "regimes": run_regimes, "mirror": run_mirror}


def build_parser():
    p = argparse.ArgumentParser(prog="cavitylz", description="Double-cavity mode transfer calculations.")
    p.add_argument("command", choices=sorted(COMMANDS) + ["version"])
    p.add_argument("--config", help="JSON scenario file")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for grid points")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "version":
        print(__version__)
        return EXIT_OK
    try:
        if not args.config:
            raise ConfigError("--config", "required for this command")
        if args.jobs < 1:
            raise ConfigError("--jobs", "must be >= 1")
        cfg = validate_config(args.command, apply_overrides(load_config(args.config), args.override))
        COMMANDS[args.command](cfg, Path(args.out), args.jobs)
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, IntegrationError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
