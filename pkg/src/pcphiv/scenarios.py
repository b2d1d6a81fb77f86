"""Experiment harness: baseline, multi-start and parameter-sweep runs.

Config documents are YAML mappings with these top-level keys (all optional):

    scenario:       baseline | multistart | sweep-omega | sweep-pi |
                    sweep-epsilon | sweep-dual-treatment | custom
    variant:        full | hiv | pcp
    parameters:     {name: value}    overrides on the baseline parameter set
    initial_state:  {compartment: value}  overrides on the published state
    horizon:        years (default 100)
    grid:           output step in years (default 0.1)
    values:         sweep values; pairs [tau3, tau4] for the dual sweep
    seed:           RNG seed for multistart (default 42)
    n_starts:       multistart size (default 5)

Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .equilibria import PUBLISHED_INITIAL_STATE, endemic_numeric, project
from .errors import InvalidParameterError, PcpHivError
from .integrator import IntegratorConfig, integrate
from .model import (
    COMPARTMENTS,
    PARAMETER_BOUNDS,
    PARAMETER_NAMES,
    ModelVariant,
    ParameterSet,
    StateVector,
    check_variant,
    force_hiv,
    force_pcp,
)
from .reproduction import r0, r0_hiv_closed, r0_pcp_closed
from .stability import local_stability, multistart_initial_states, relative_distance

CSV_COLUMNS = ("t",) + COMPARTMENTS + ("N", "alpha_P", "alpha_H")

SCENARIOS = (
    "baseline",
    "multistart",
    "sweep-omega",
    "sweep-pi",
    "sweep-epsilon",
    "sweep-dual-treatment",
    "custom",
)

# swept parameter(s) and the published range, sampled at 5 points by default
SWEEPS = {
    "sweep-omega": (("omega",), [(0.2,), (0.8,)]),
    "sweep-pi": (("pi",), [(0.0115,), (0.40,)]),
    "sweep-epsilon": (("epsilon",), [(0.2,), (0.5,)]),
    "sweep-dual-treatment": (("tau3", "tau4"), [(0.314, 0.23), (0.530, 0.46)]),
}

# k, rho and c are only given as ranges; these products reproduce the
# reported baseline reproduction numbers
CALIBRATION = {"eta*k": 0.3, "rho*c": 3.5, "k": 4.0, "rho": 0.9, "c": 3.5 / 0.9}


def baseline_parameters() -> ParameterSet:
    return ParameterSet(
        Lambda=2000.0,
        mu=0.073,
        nu_p=0.1,
        nu_a=0.333,
        nu=0.42,
        lambda1=0.08,
        lambda2=0.3105,
        tau1=0.2,
        tau2=0.13,
        tau3=0.314,
        tau4=0.230,
        beta=0.01096,
        xi=0.338,
        pi=0.0115,
        gamma=0.0621,
        epsilon=0.2,
        rho=CALIBRATION["rho"],
        c=CALIBRATION["c"],
        omega=0.41026,
        eta=0.075,
        k=CALIBRATION["k"],
        a1=1.0,
        a2=1.2,
        a3=1.4,
        theta1=1.0,
        theta2=1.02,
    )


def default_sweep_values(scenario: str, n: int = 5) -> tuple:
    names, (lo, hi) = SWEEPS[scenario]
    cols = [np.linspace(a, b, n) for a, b in zip(lo, hi)]
    return tuple(tuple(round(float(c[i]), 12) for c in cols) for i in range(n))


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: str = "baseline"
    variant: ModelVariant = ModelVariant.FULL
    overrides: dict = field(default_factory=dict)
    initial_state: StateVector = PUBLISHED_INITIAL_STATE
    horizon: float = 100.0
    grid: float = 0.1
    values: tuple = ()
    seed: int = 42
    n_starts: int = 5

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise InvalidParameterError(f"unknown scenario {self.scenario!r}")
        if not self.horizon > 0:
            raise InvalidParameterError("horizon must be positive")
        if not self.grid > 0:
            raise InvalidParameterError("grid must be positive")
        if self.n_starts < 1:
            raise InvalidParameterError("n_starts must be >= 1")
        if self.scenario in SWEEPS:
            names = SWEEPS[self.scenario][0]
            for v in self.sweep_values:
                if len(v) != len(names):
                    raise InvalidParameterError(f"{self.scenario} values need {len(names)} entries each")
                for name, x in zip(names, v):
                    lo, hi = PARAMETER_BOUNDS[name]
                    if not lo <= x <= hi:
                        raise InvalidParameterError(f"sweep value {name}={x} outside [{lo}, {hi}]")
        # validates overrides eagerly
        self.parameters

    @property
    def parameters(self) -> ParameterSet:
        return baseline_parameters().replace(**self.overrides)

    @property
    def sweep_values(self) -> tuple:
        if self.scenario not in SWEEPS:
            return ()
        if self.values:
            return tuple(tuple(float(x) for x in (v if isinstance(v, (list, tuple)) else (v,))) for v in self.values)
        return default_sweep_values(self.scenario)


_CONFIG_KEYS = {"scenario", "variant", "parameters", "initial_state", "horizon", "grid", "values", "seed", "n_starts"}


def spec_from_mapping(doc: dict) -> ScenarioSpec:
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise InvalidParameterError("config must be a mapping")
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise InvalidParameterError(f"unknown config key(s): {sorted(unknown)}")
    params = doc.get("parameters") or {}
    bad = set(params) - set(PARAMETER_NAMES)
    if bad:
        raise InvalidParameterError(f"unknown parameter(s): {sorted(bad)}")
    state = doc.get("initial_state") or {}
    bad = set(state) - set(COMPARTMENTS)
    if bad:
        raise InvalidParameterError(f"unknown compartment(s): {sorted(bad)}")
    variant = ModelVariant.parse(doc.get("variant", "full"))
    x0 = project(variant, PUBLISHED_INITIAL_STATE)._replace(**{k: float(v) for k, v in state.items()})
    try:
        return ScenarioSpec(
            scenario=str(doc.get("scenario", "custom" if (params or state) else "baseline")),
            variant=variant,
            overrides={k: float(v) for k, v in params.items()},
            initial_state=x0,
            horizon=float(doc.get("horizon", 100.0)),
            grid=float(doc.get("grid", 0.1)),
            values=tuple(doc.get("values") or ()),
            seed=int(doc.get("seed", 42)),
            n_starts=int(doc.get("n_starts", 5)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidParameterError):
            raise
        raise InvalidParameterError(f"bad config value: {exc}") from exc


def builtin_config(name: str) -> Optional[ScenarioSpec]:
    if name in SCENARIOS and name != "custom":
        return ScenarioSpec(scenario=name)
    return None


def load_config(path_or_name: str) -> ScenarioSpec:
    """Built-in scenario name or path to a YAML config document.

    Raises FileNotFoundError for a missing path.
    """
    spec = builtin_config(path_or_name)
    if spec is not None:
        return spec
    path = Path(path_or_name)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path_or_name}")
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise InvalidParameterError(f"cannot parse {path}: {exc}") from exc
    return spec_from_mapping(doc)


# --------------------------------------------------------------------------
# trajectory files


def trajectory_table(p: ParameterSet, times, states) -> np.ndarray:
    rows = []
    for t, y in zip(times, states):
        rows.append([t, *y, float(np.sum(y)), force_pcp(p, y), force_hiv(p, y)])
    return np.array(rows, dtype=float)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path, table: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in table:
            w.writerow([_fmt(x) for x in row])


def read_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = tuple(next(r))
        if header != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        return np.array([[float(x) for x in row] for row in r], dtype=float)


def write_json_table(path, table: np.ndarray) -> None:
    doc = {"columns": list(CSV_COLUMNS), "rows": table.tolist()}
    Path(path).write_text(json.dumps(doc) + "\n")


def read_json_table(path) -> np.ndarray:
    doc = json.loads(Path(path).read_text())
    if tuple(doc["columns"]) != CSV_COLUMNS:
        raise ValueError("unexpected columns")
    return np.array(doc["rows"], dtype=float)


def read_trajectory(path) -> np.ndarray:
    return read_json_table(path) if str(path).endswith(".json") else read_csv(path)


# --------------------------------------------------------------------------
# runs


@dataclass
class MemberResult:
    label: str
    overrides: dict
    initial_state: list
    path: Optional[str] = None
    final_state: Optional[dict] = None
    terminal_coinfected: Optional[float] = None
    steps: Optional[dict] = None
    invariant_breach: bool = False
    equilibrium: Optional[dict] = None
    stability: Optional[str] = None
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class RunArtifact:
    scenario: str
    variant: str
    parameters: dict
    calibration: dict
    reproduction_numbers: dict
    members: list
    extras: dict = field(default_factory=dict)
    summary_path: Optional[str] = None

    @property
    def failed(self) -> bool:
        return any(m.error is not None for m in self.members)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "variant": self.variant,
            "parameters": self.parameters,
            "calibration": self.calibration,
            "reproduction_numbers": self.reproduction_numbers,
            "members": [m.to_dict() for m in self.members],
            **self.extras,
        }


def _members(spec: ScenarioSpec) -> list[tuple[str, dict, StateVector]]:
    if spec.scenario in SWEEPS:
        names = SWEEPS[spec.scenario][0]
        out = []
        for v in spec.sweep_values:
            ov = dict(spec.overrides)
            ov.update(dict(zip(names, v)))
            label = "_".join(f"{n}={float(x)!r}" for n, x in zip(names, v))
            out.append((label, ov, spec.initial_state))
        return out
    if spec.scenario == "multistart":
        starts = multistart_initial_states(spec.variant, spec.n_starts, spec.seed)
        if spec.initial_state != PUBLISHED_INITIAL_STATE:
            starts[0] = spec.initial_state
        return [(f"start{i}", dict(spec.overrides), s) for i, s in enumerate(starts)]
    return [(spec.scenario, dict(spec.overrides), spec.initial_state)]


def _run_member(args) -> MemberResult:
    label, overrides, x0, variant, horizon, grid, out_path, fmt, cfg = args
    res = MemberResult(label, overrides, list(x0))
    try:
        p = baseline_parameters().replace(**overrides)
        traj = integrate(variant, p, x0, horizon, cfg)
        times, states = traj.sample(grid)
        table = trajectory_table(p, times, states)
        if out_path is not None:
            (write_json_table if fmt == "json" else write_csv)(out_path, table)
            res.path = os.path.basename(out_path)
        final = traj.final
        res.final_state = final._asdict()
        res.terminal_coinfected = final.I_HP + final.I_AP
        res.steps = {"accepted": traj.accepted, "rejected": traj.rejected, "nfev": traj.nfev}
        res.invariant_breach = traj.invariant_breach
        eq = endemic_numeric(variant, p, seed_state=final, cfg=cfg)
        res.equilibrium = eq.to_dict()
        res.stability = local_stability(variant, p, eq).verdict
    except PcpHivError as exc:
        res.error = f"{type(exc).__name__}: {exc}"
    return res


def run_scenario(
    spec: ScenarioSpec,
    out_dir=None,
    fmt: str = "csv",
    workers: int = 1,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> RunArtifact:
    """Integrate every member of the scenario and optionally write files.

    Output is deterministic for a given spec: member files are named by
    index, the summary has sorted keys and no timestamps.
    """
    if fmt not in ("csv", "json"):
        raise InvalidParameterError(f"unknown output format {fmt!r}")
    p = spec.parameters
    variant = spec.variant
    check_variant(variant, spec.initial_state)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
    jobs = []
    for i, (label, ov, x0) in enumerate(_members(spec)):
        path = None if out_dir is None else str(out_dir / f"{spec.scenario}_{i:02d}.{fmt}")
        jobs.append((label, ov, x0, variant, spec.horizon, spec.grid, path, fmt, cfg))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            members = list(pool.map(_run_member, jobs))
    else:
        members = [_run_member(j) for j in jobs]

    art = RunArtifact(
        scenario=spec.scenario,
        variant=variant.value,
        parameters=p.as_dict(),
        calibration=dict(CALIBRATION),
        reproduction_numbers={
            "R0H": r0_hiv_closed(p),
            "R0P": r0_pcp_closed(p),
            "R0": r0(variant, p),
        },
        members=members,
    )
    if spec.scenario == "multistart":
        finals = [np.array(list(m.final_state.values())) for m in members if m.final_state]
        dist = max(
            (relative_distance(a, b) for i, a in enumerate(finals) for b in finals[i + 1:]),
            default=0.0,
        )
        art.extras["max_pairwise_terminal_distance"] = dist
    if out_dir is not None:
        path = out_dir / "summary.json"
        path.write_text(json.dumps(_jsonable(art.to_dict()), indent=2, sort_keys=True) + "\n")
        art.summary_path = str(path)
    return art


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (ModelVariant,)):
        return obj.value
    return obj
