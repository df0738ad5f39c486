"""Scenario configuration and the end-to-end verification run."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, fields

import numpy as np

from .contact import (
    ContactParams,
    SafetyLimits,
    TrajectorySpec,
    build_automaton,
    build_initial_set,
    build_input_model,
    unsafe_check,
)
from .hybrid import RunConfig, run_automaton


@dataclass(frozen=True)
class Scenario:
    """Flat, file-representable description of one verification case."""

    mass: float = 1.5
    speed: float = 0.1
    method: str = "trinal"
    dt: float = 6.5e-4
    horizon: float = 0.8
    sync_mode: str = "both"
    sync_threshold: float | None = None
    max_jumps: int = 12
    max_order: float = 20.0
    max_hit_steps: int = 200
    max_alternatives: int = 8
    seed: int = 0
    samples: int = 1000
    # guard-intersection tunables
    scale_gain: float = 1.0
    flat_delta: float | None = None
    flat_vol_ratio: float = 2.0
    refine_factor: int = 8
    # safety limits
    transient_limit: float = 280.0
    quasi_static_limit: float = 120.0
    transient_window: float = 0.5
    # physical parameter overrides (None = Table defaults)
    k_t: float = 1000.0
    d_t: float | None = None
    d_r: float = 380.0
    f_t: float = 100.0
    k_e: float = 75000.0
    d_e: float = 0.0
    l: float = 0.0
    d1: float = 0.0013
    d2: float = 0.0019

    def params(self) -> ContactParams:
        return ContactParams(m=self.mass, k_t=self.k_t, d_t=self.d_t,
                             d_r=self.d_r, f_t=self.f_t, k_e=self.k_e,
                             d_e=self.d_e, l=self.l, d1=self.d1, d2=self.d2)

    def trajectory_spec(self) -> TrajectorySpec:
        return TrajectorySpec(impact_speed=self.speed, horizon=self.horizon)

    def limits(self) -> SafetyLimits:
        return SafetyLimits(self.transient_limit, self.quasi_static_limit,
                            self.transient_window)

    def run_config(self) -> RunConfig:
        return RunConfig(
            dt=self.dt, t_end=self.horizon, method=self.method,
            sync_threshold=self.sync_threshold, sync_mode=self.sync_mode,
            max_jumps=self.max_jumps, max_order=self.max_order,
            max_hit_steps=self.max_hit_steps,
            max_alternatives=self.max_alternatives,
            guard_tuning={
                "scale_gain": self.scale_gain,
                "flat_delta": self.flat_delta,
                "flat_vol_ratio": self.flat_vol_ratio,
                "refine_factor": self.refine_factor,
            })


_NONE_OK = {"sync_threshold", "flat_delta", "d_t"}
_INT_FIELDS = {"max_jumps", "max_hit_steps", "max_alternatives", "seed",
               "samples", "refine_factor"}
_STR_FIELDS = {"method", "sync_mode"}


def load_scenario(path) -> Scenario:
    """Parse a flat `key = value` file; '#' starts a comment."""
    values = {}
    names = {f.name for f in fields(Scenario)}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in names:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            if key in _STR_FIELDS:
                values[key] = val
            elif val.lower() == "none" and key in _NONE_OK:
                values[key] = None
            elif key in _INT_FIELDS:
                values[key] = int(val)
            else:
                values[key] = float(val)
    return Scenario(**values)


def save_scenario(s: Scenario, path) -> None:
    with open(path, "w") as fh:
        for f in fields(Scenario):
            v = getattr(s, f.name)
            if v is None:
                v = "none"
            fh.write(f"{f.name} = {v}\n")


@dataclass
class RunResult:
    scenario: Scenario
    verdict: object
    branches: list
    wall_time: float
    records: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return self.verdict.exit_code


def run_scenario(s: Scenario) -> RunResult:
    """Full pipeline: build the model, run reachability, judge safety."""
    p = s.params()
    ha = build_automaton(p)
    im = build_input_model(s.trajectory_spec(), p)
    X0 = build_initial_set(im.samples)
    t0 = time.perf_counter()
    branches = run_automaton(ha, X0, 0, im, s.run_config())
    wall = time.perf_counter() - t0
    verdict = unsafe_check(branches, p, s.limits())
    records = sorted({id(r): r for b in branches for r in b.intersections}.values(),
                     key=lambda r: r.order)
    return RunResult(s, verdict, branches, wall, list(records))


def grid_cases(masses, speeds):
    return [(float(m), float(v)) for m in masses for v in speeds]


DEFAULT_MASSES = (1.5, 4.5, 8.0)
DEFAULT_SPEEDS = (0.1, 0.2, 0.35, 0.45, 0.55)


def run_grid(masses=DEFAULT_MASSES, speeds=DEFAULT_SPEEDS,
             method: str = "trinal", base: Scenario = Scenario()):
    """runScenario over the (mass x speed) grid; failures recorded, the
    grid continues.  Returns a list of cell dicts."""
    from dataclasses import replace

    cells = []
    for m, v in grid_cases(masses, speeds):
        s = replace(base, mass=m, speed=v, method=method)
        cell = {"mass": m, "speed": v, "method": method, "failed": False,
                "error": "", "result": None}
        try:
            cell["result"] = run_scenario(s)
        except Exception as exc:  # per-cell failure must not stop the grid
            cell["failed"] = True
            cell["error"] = f"{type(exc).__name__}: {exc}"
        cells.append(cell)
    return cells
