"""Experiment configs, sweeps with Monte Carlo validation, and the worked examples.

A config is a YAML (or JSON) mapping::

    params: {c: 4, r: 2, N: 9, K: 9, M: 3}    # K optional, F optional
    profile: {vector: [2, 2, 2, 1, 1, 1]}      # or a subset list, "cyclic", "uniform:<k>"
    demand: distinct                           # or an explicit list of files
    sweep: {var: M, values: [0, 1, 2]}         # or {var: M, start: 0, stop: 9, num: 10}
    trials: 5
    seed: 0

An explicit profile is a list of ``{subset: [1, 2], count: 2}`` items.
When sweeping ``r`` the profile may instead be keyed by r:
``profile: {1: {vector: [3, 2, 2, 2]}, 2: ...}``.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from . import subsets
from .delivery import generate_transmissions, measured_rate_per_user, verify_delivery
from .errors import ConfigError, MaccError, UnknownExample
from .indexcoding import alpha_count, build_E_sets, construct_independent_set
from .model import (
    DemandVector,
    SystemParams,
    _as_number,
    canonicalize_profile,
    cyclic_profile,
    table_from_vector,
    uniform_profile,
)
from .prefetch import SymbolicState, decentralized_prefetch
from .rates import NotApplicable, build_A_sets, closed_form_optimal, lower_bound_per_user, rate_per_user

DEFAULT_SIM_F = 1 << 17

CSV_COLUMNS = (
    "sweep_var",
    "value",
    "rate_pu",
    "lb_pu",
    "closed_form_pu",
    "emp_rate_pu_mean",
    "emp_rate_pu_std",
    "decode_ok",
)


@dataclass(frozen=True)
class ExperimentConfig:
    c: int
    r: int
    N: int
    K: int | None
    M: Fraction | float
    F: int | None
    profile: object
    demand: object
    sweep_var: str | None
    sweep_values: tuple
    trials: int
    seed: int

    def table(self, r: int | None = None):
        r = self.r if r is None else r
        prof = self.profile
        path = "profile"
        if self.sweep_var == "r" and isinstance(prof, dict) and "vector" not in prof and "subsets" not in prof:
            if r not in prof:
                raise ConfigError("profile", f"no profile given for r={r}")
            prof, path = prof[r], f"profile.{r}"
        return _build_table(prof, self.c, r, path)

    def point(self, value=None):
        """(params, table, demands) at one sweep value (or the base config)."""
        r, M = self.r, self.M
        if self.sweep_var == "r" and value is not None:
            r = value
        elif self.sweep_var == "M" and value is not None:
            M = value
        table = self.table(r)
        if self.K is not None and self.K != table.K:
            raise ConfigError("params.K", f"K={self.K} but the profile attaches {table.K} users")
        F = self.F if self.F is not None else (DEFAULT_SIM_F if self.trials > 0 else 1)
        try:
            params = SystemParams(c=self.c, r=r, N=self.N, K=table.K, M=M, F=F)
        except MaccError as exc:
            raise ConfigError("params", str(exc)) from exc
        if self.demand == "distinct":
            if table.K > self.N:
                raise ConfigError("demand", f"distinct demands need N >= K (N={self.N}, K={table.K})")
            demands = DemandVector.distinct(table, self.N)
        else:
            if len(self.demand) != table.K:
                raise ConfigError("demand", f"{len(self.demand)} demands for K={table.K} users")
            demands = DemandVector.from_sequence(table, self.demand)
            try:
                demands.validate(table, self.N)
            except MaccError as exc:
                raise ConfigError("demand", str(exc)) from exc
        return params, table, demands


def _build_table(prof, c, r, path):
    try:
        if isinstance(prof, str):
            if prof == "cyclic":
                return cyclic_profile(SystemParams(c=c, r=r, N=1, K=c))
            if prof.startswith("uniform:"):
                return uniform_profile(c, r, int(prof.split(":", 1)[1]))
            raise ConfigError(path, f"unknown profile keyword {prof!r}")
        if isinstance(prof, dict) and "vector" in prof:
            return table_from_vector(prof["vector"], c, r)
        items = prof["subsets"] if isinstance(prof, dict) and "subsets" in prof else prof
        if not isinstance(items, list):
            raise ConfigError(path, "expected a list of {subset, count} items")
        pairs = []
        for k, item in enumerate(items):
            if not isinstance(item, dict) or set(item) != {"subset", "count"}:
                raise ConfigError(f"{path}[{k}]", "expected {subset: [...], count: n}")
            pairs.append((item["subset"], item["count"]))
        K = sum(int(n) for _, n in pairs)
        return canonicalize_profile(pairs, SystemParams(c=c, r=r, N=1, K=K))
    except ConfigError:
        raise
    except (MaccError, TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from exc


def _int(raw, path, minimum=None):
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ConfigError(path, f"expected an integer, got {raw!r}")
    if minimum is not None and raw < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {raw}")
    return raw


def _number(raw, path):
    try:
        return _as_number(raw)
    except (MaccError, TypeError, ValueError) as exc:
        raise ConfigError(path, f"expected a number, got {raw!r}") from exc


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("", "config must be a mapping")
    unknown = set(raw) - {"params", "profile", "demand", "sweep", "trials", "seed"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    params = raw.get("params")
    if not isinstance(params, dict):
        raise ConfigError("params", "missing or not a mapping")
    for key in ("c", "N"):
        if key not in params:
            raise ConfigError(f"params.{key}", "required")
    c = _int(params["c"], "params.c", 1)
    N = _int(params["N"], "params.N", 1)
    r = _int(params.get("r", 1), "params.r", 1)
    K = _int(params["K"], "params.K", 0) if "K" in params else None
    F = _int(params["F"], "params.F", 1) if "F" in params else None
    M = _number(params.get("M", 0), "params.M")

    sweep = raw.get("sweep")
    sweep_var, values = None, ()
    if sweep is not None:
        if not isinstance(sweep, dict) or sweep.get("var") not in ("M", "r"):
            raise ConfigError("sweep.var", "must be 'M' or 'r'")
        sweep_var = sweep["var"]
        if "values" in sweep:
            if not isinstance(sweep["values"], list) or not sweep["values"]:
                raise ConfigError("sweep.values", "expected a non-empty list")
            values = [_number(v, f"sweep.values[{k}]") for k, v in enumerate(sweep["values"])]
        elif {"start", "stop", "num"} <= set(sweep):
            start = _number(sweep["start"], "sweep.start")
            stop = _number(sweep["stop"], "sweep.stop")
            num = _int(sweep["num"], "sweep.num", 1)
            step = (stop - start) / (num - 1) if num > 1 else 0
            values = [start + k * step for k in range(num)]
        else:
            raise ConfigError("sweep", "give either values or start/stop/num")
        for k, v in enumerate(values):
            where = f"sweep.values[{k}]"
            if sweep_var == "M" and not 0 <= v <= N:
                raise ConfigError(where, f"M={v} outside [0, N={N}]")
            if sweep_var == "r":
                if not (isinstance(v, Fraction) and v.denominator == 1 and 1 <= v <= c):
                    raise ConfigError(where, f"r={v} must be an integer in [1, c={c}]")
                values[k] = int(v)
        values = tuple(values)
    if sweep_var != "r" and not 1 <= r <= c:
        raise ConfigError("params.r", f"must lie in [1, c={c}]")
    if sweep_var != "M" and not 0 <= M <= N:
        raise ConfigError("params.M", f"must lie in [0, N={N}]")

    profile = raw.get("profile")
    if profile is None:
        raise ConfigError("profile", "required")
    if sweep_var == "r" and isinstance(profile, dict) and "vector" not in profile and "subsets" not in profile:
        profile = {_int(int(k) if str(k).isdigit() else k, "profile", 1): v for k, v in profile.items()}

    demand = raw.get("demand", "distinct")
    if demand != "distinct":
        if not isinstance(demand, list):
            raise ConfigError("demand", "expected 'distinct' or a list of file indices")
        demand = tuple(_int(d, f"demand[{k}]", 1) for k, d in enumerate(demand))

    trials = _int(raw.get("trials", 0), "trials", 0)
    seed = _int(raw.get("seed", 0), "seed")
    config = ExperimentConfig(c, r, N, K, M, F, profile, demand, sweep_var, values, trials, seed)
    for v in values or (None,):
        config.point(v)
    return config


def load_config(path) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError("", f"cannot parse {path}: {exc}") from exc
    return parse_config(raw)


def simulate_trial(params: SystemParams, table, demands, seed: int) -> dict:
    """One prefetch + delivery + decode round."""
    state = decentralized_prefetch(params, seed)
    log = generate_transmissions(state, table, demands)
    report = verify_delivery(log, state, table, demands)
    row = {
        "seed": seed,
        "rate_pu": measured_rate_per_user(log, params),
        "payload_bits": log.total_length(),
        "decode_ok": report.ok,
        "failed_users": report.failed_users,
    }
    if demands.is_distinct:
        row["alpha_bits"] = alpha_count(construct_independent_set(table, demands, state))
    return row


def _trial_job(args):
    return simulate_trial(*args)


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def run_sweep(config: ExperimentConfig, jobs: int = 1) -> list[dict]:
    """One row per sweep value; trial t of every point uses seed ``seed + t``."""
    values = config.sweep_values or (None,)
    points = [config.point(v) for v in values]
    tasks = [(p, t, d, config.seed + k) for p, t, d in points for k in range(config.trials)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_trial_job, tasks))
    else:
        results = [_trial_job(task) for task in tasks]

    rows = []
    for n, (value, (params, table, _)) in enumerate(zip(values, points)):
        gamma = params.gamma
        closed = closed_form_optimal(table)
        trials = results[n * config.trials:(n + 1) * config.trials]
        row = {
            "sweep_var": config.sweep_var or "",
            "value": _fmt(value) if value is not None else "",
            "rate_pu": _fmt(rate_per_user(table)(gamma)),
            "lb_pu": _fmt(lower_bound_per_user(table)(gamma)),
            "closed_form_pu": "" if closed is NotApplicable else _fmt(closed(gamma)),
            "emp_rate_pu_mean": "",
            "emp_rate_pu_std": "",
            "decode_ok": "",
        }
        if trials:
            emp = np.array([t["rate_pu"] for t in trials])
            row["emp_rate_pu_mean"] = _fmt(emp.mean())
            row["emp_rate_pu_std"] = _fmt(emp.std(ddof=1) if len(emp) > 1 else 0.0)
            row["decode_ok"] = "true" if all(t["decode_ok"] for t in trials) else "false"
        rows.append(row)
    return rows


def format_rows(rows: list[dict], fmt: str = "csv", columns=None) -> str:
    columns = columns or (list(rows[0]) if rows else list(CSV_COLUMNS))
    if fmt == "json":
        return json.dumps([{k: r[k] for k in columns} for r in rows], indent=2) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


# Worked examples: four caches, pairs of caches, nine users, user k wants file k.

EXAMPLE_PROFILE = {(1, 2): 2, (1, 3): 2, (1, 4): 2, (2, 3): 1, (2, 4): 1, (3, 4): 1}
EXAMPLES = (
    "example1_association",
    "example2_transmissions",
    "example3_A_sets",
    "example4_E_sets",
    "example5_Y_sets",
)


def example_setup():
    params = SystemParams(c=4, r=2, N=9, K=9, M=3)
    table = canonicalize_profile(EXAMPLE_PROFILE, params)
    return params, table, DemandVector.distinct(table, params.N), SymbolicState(params)


def _sets(masks, c):
    return " ".join(subsets.fmt(m, c) for m in masks)


def reproduce_example(name: str) -> str:
    if name not in EXAMPLES:
        raise UnknownExample(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")
    params, table, demands, state = example_setup()
    c = table.c
    header = f"# {name} c={c} r={table.r} K={table.K}"
    if name == "example1_association":
        lines = [header, "i\tC_i\tb_i\tU_i\tL_i"]
        for e in table:
            users = "{" + ",".join(str(table.global_label(u)) for u in e.users) + "}"
            lines.append(
                f"{e.index}\t{subsets.fmt(e.mask, c)}\t{subsets.fmt_binary(e.mask, c)}\t{users}\t{e.count}"
            )
        return "\n".join(lines) + "\n"
    if name == "example2_transmissions":
        return generate_transmissions(state, table, demands).dumps()
    if name == "example3_A_sets":
        family = build_A_sets(table)
        lines = [header, "i\tP_i\tA_i"]
        for e, P, A in zip(table, family.power_sets, family.families):
            lines.append(f"{e.index}\t{_sets(P, c)}\t{_sets(A, c)}")
        return "\n".join(lines) + "\n"
    if name == "example4_E_sets":
        family = build_E_sets(table)
        lines = [header, "i\tC_i\tE_i"]
        for e, C, E in zip(table, family.unions, family.families):
            lines.append(f"{e.index}\t{subsets.fmt(C, c)}\t{_sets(E, c)}")
        return "\n".join(lines) + "\n"
    Y = construct_independent_set(table, demands, state)
    return Y.dumps() + f"# total {alpha_count(Y)}\n"

