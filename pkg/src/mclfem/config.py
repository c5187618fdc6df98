"""Run configuration: TOML text <-> validated :class:`RunConfig`.

Layout (every section optional except ``model``, ``mesh`` and ``initial``)::

    seed = 0
    threads = 1

    [model]          kind, velocity, gamma, wave_speed, wave_speed_safety
    [mesh]           dim, cells, extent
    [limiter]        mode, entropy_margin, bound_stencil, richardson_sweeps,
                     alpha_override, apply_bounds
    [integrator]     method, cfl, t_end, max_steps, stage_admissibility_check,
                     snapshots, max_retries
    [initial]        name, plus condition-specific parameters
    [admissibility]  rho_floor, pressure_floor, energy_cap, scalar_bounds
    [output]         directory, formats, entropy_offset, edge_debug
    [study]          levels, probe_points, alpha_rule
    [assertions]     conservation_tol, bounds_tol, positivity,
                     entropy_increase_tol, eoc_min, eoc_max,
                     error_decreasing, slope_min, cesaro_decreasing

Unknown keys raise :class:`ConfigError` naming the dotted key path.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import tomli
import tomli_w

from .initial import INITIAL_CONDITIONS, InitialConditionError
from .models import KINDS, WAVE_SPEED_ESTIMATES, AdmissibilityParams, ModelSpec
from .scheme import MODES, STENCILS, LimiterConfig
from .timestepping import METHODS, TimeIntegratorConfig


class ConfigError(ValueError):
    pass


@dataclass
class ModelSection:
    kind: str = "advection"
    velocity: list = field(default_factory=list)
    gamma: float = 1.4
    wave_speed: str = "simple"
    wave_speed_safety: float = 1.0


@dataclass
class MeshSection:
    dim: int = 1
    cells: int = 64
    extent: list = field(default_factory=list)


@dataclass
class LimiterSection:
    mode: str = "mcl"
    entropy_margin: float = 1e-3
    bound_stencil: str = "nodal_plus_bar_states"
    richardson_sweeps: int = 5
    alpha_override: float | None = None
    apply_bounds: bool = True


@dataclass
class IntegratorSection:
    method: str = "ssp_rk3"
    cfl: float = 0.5
    t_end: float = 1.0
    max_steps: int = 1_000_000
    stage_admissibility_check: bool = True
    snapshots: list = field(default_factory=list)
    max_retries: int = 10


@dataclass
class InitialSection:
    name: str = "constant"
    params: dict = field(default_factory=dict)


@dataclass
class AdmissibilitySection:
    rho_floor: float = 1e-12
    pressure_floor: float = 1e-12
    energy_cap: float = math.inf
    scalar_bounds: list = field(default_factory=lambda: [-math.inf, math.inf])


@dataclass
class OutputSection:
    directory: str = "output"
    formats: list = field(default_factory=lambda: ["csv"])
    entropy_offset: float = 0.0
    edge_debug: bool = False


@dataclass
class StudySection:
    levels: list = field(default_factory=list)
    probe_points: int = 1024
    alpha_rule: str = "config"


@dataclass
class AssertionsSection:
    conservation_tol: float | None = None
    bounds_tol: float | None = None
    positivity: bool = False
    entropy_increase_tol: float | None = None
    eoc_min: float | None = None
    eoc_max: float | None = None
    error_decreasing: bool = False
    slope_min: list = field(default_factory=list)
    cesaro_decreasing: bool = False


@dataclass
class RunConfig:
    model: ModelSection
    mesh: MeshSection
    initial: InitialSection
    limiter: LimiterSection = field(default_factory=LimiterSection)
    integrator: IntegratorSection = field(default_factory=IntegratorSection)
    admissibility: AdmissibilitySection = field(default_factory=AdmissibilitySection)
    output: OutputSection = field(default_factory=OutputSection)
    study: StudySection = field(default_factory=StudySection)
    assertions: AssertionsSection = field(default_factory=AssertionsSection)
    seed: int = 0
    threads: int = 1

    # -- conversion to solver objects --

    def model_spec(self) -> ModelSpec:
        m = self.model
        return ModelSpec(
            m.kind, dim=self.mesh.dim, velocity=tuple(m.velocity), gamma=m.gamma,
            wave_speed=m.wave_speed, wave_speed_safety=m.wave_speed_safety,
        )

    def limiter_config(self) -> LimiterConfig:
        return LimiterConfig(**dataclasses.asdict(self.limiter))

    def integrator_config(self) -> TimeIntegratorConfig:
        s = self.integrator
        return TimeIntegratorConfig(
            method=s.method, cfl=s.cfl, t_end=s.t_end, max_steps=s.max_steps,
            stage_admissibility_check=s.stage_admissibility_check,
            snapshot_times=tuple(s.snapshots), max_retries=s.max_retries,
        )

    def admissibility_params(self) -> AdmissibilityParams:
        a = self.admissibility
        return AdmissibilityParams(a.rho_floor, a.pressure_floor, a.energy_cap, tuple(a.scalar_bounds))

    def with_cells(self, cells: int) -> "RunConfig":
        return dataclasses.replace(self, mesh=dataclasses.replace(self.mesh, cells=int(cells)))

    def with_limiter(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, limiter=dataclasses.replace(self.limiter, **changes))


_SECTIONS = {
    "model": ModelSection,
    "mesh": MeshSection,
    "limiter": LimiterSection,
    "integrator": IntegratorSection,
    "initial": InitialSection,
    "admissibility": AdmissibilitySection,
    "output": OutputSection,
    "study": StudySection,
    "assertions": AssertionsSection,
}
ALPHA_RULES = ("config", "one", "one_minus_h")
_REQUIRED = ("model", "mesh", "initial")
_TOP_LEVEL = {"seed", "threads"}


def _build_section(name, cls, table):
    if not isinstance(table, dict):
        raise ConfigError(f"{name}: expected a table")
    if cls is InitialSection:
        if "name" not in table:
            raise ConfigError("initial.name: missing")
        params = {k: v for k, v in table.items() if k != "name"}
        return InitialSection(name=table["name"], params=params)
    known = {f.name for f in dataclasses.fields(cls)}
    for key in table:
        if key not in known:
            raise ConfigError(f"{name}.{key}: unknown key")
    return cls(**table)


def parse_config(text: str) -> RunConfig:
    """Parse and validate TOML text."""
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"syntax error: {exc}") from None
    for key in data:
        if key not in _SECTIONS and key not in _TOP_LEVEL:
            value = data[key]
            path = f"{key}.{next(iter(value))}" if isinstance(value, dict) and value else key
            raise ConfigError(f"{path}: unknown key")
    for name in _REQUIRED:
        if name not in data:
            raise ConfigError(f"{name}: missing section")
    sections = {name: _build_section(name, cls, data[name]) for name, cls in _SECTIONS.items() if name in data}
    cfg = RunConfig(**sections, **{k: data[k] for k in _TOP_LEVEL if k in data})
    validate_config(cfg)
    return cfg


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _check(cond, path, msg):
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def validate_config(cfg: RunConfig) -> None:
    """Range and name checks; raises :class:`ConfigError` with the key path."""
    m, g = cfg.model, cfg.mesh
    _check(m.kind in KINDS, "model.kind", f"must be one of {KINDS}, got {m.kind!r}")
    _check(m.wave_speed in WAVE_SPEED_ESTIMATES, "model.wave_speed", f"must be one of {WAVE_SPEED_ESTIMATES}")
    _check(_is_num(m.gamma) and m.gamma > 1, "model.gamma", "must exceed 1")
    _check(_is_num(m.wave_speed_safety) and m.wave_speed_safety >= 1, "model.wave_speed_safety", "must be >= 1")
    _check(g.dim in (1, 2), "mesh.dim", "must be 1 or 2")
    _check(isinstance(g.cells, int) and g.cells >= 4, "mesh.cells", "must be an integer >= 4")
    if not g.extent:
        g.extent = [1.0] * g.dim
    _check(len(g.extent) == g.dim and all(_is_num(x) and x > 0 for x in g.extent), "mesh.extent",
           f"needs {g.dim} positive entries")
    g.extent = [float(x) for x in g.extent]
    if m.kind == "advection":
        _check(len(m.velocity) == g.dim and all(_is_num(a) for a in m.velocity), "model.velocity",
               f"needs {g.dim} numbers for advection")
        m.velocity = [float(a) for a in m.velocity]
    else:
        _check(not m.velocity, "model.velocity", f"not used by {m.kind}")

    lim = cfg.limiter
    _check(lim.mode in MODES, "limiter.mode", f"must be one of {MODES}, got {lim.mode!r}")
    _check(lim.bound_stencil in STENCILS, "limiter.bound_stencil", f"must be one of {STENCILS}")
    _check(_is_num(lim.entropy_margin) and lim.entropy_margin >= 0, "limiter.entropy_margin", "must be >= 0")
    _check(isinstance(lim.richardson_sweeps, int) and lim.richardson_sweeps >= 0, "limiter.richardson_sweeps",
           "must be a nonnegative integer")
    _check(lim.alpha_override is None or (_is_num(lim.alpha_override) and 0 <= lim.alpha_override <= 1),
           "limiter.alpha_override", "must lie in [0, 1]")

    it = cfg.integrator
    _check(it.method in METHODS, "integrator.method", f"must be one of {METHODS}")
    _check(_is_num(it.cfl) and 0 < it.cfl <= 1, "integrator.cfl", f"must lie in (0, 1], got {it.cfl}")
    _check(_is_num(it.t_end) and it.t_end > 0, "integrator.t_end", "must be positive")
    _check(isinstance(it.max_steps, int) and it.max_steps > 0, "integrator.max_steps", "must be a positive integer")
    _check(isinstance(it.max_retries, int) and it.max_retries >= 0, "integrator.max_retries", "must be >= 0")
    snaps = list(it.snapshots)
    _check(all(_is_num(s) for s in snaps), "integrator.snapshots", "must be numbers")
    _check(all(b > a for a, b in zip(snaps, snaps[1:])), "integrator.snapshots", "must be strictly increasing")
    _check(all(0 <= s <= it.t_end for s in snaps), "integrator.snapshots", "must lie in [0, t_end]")

    a = cfg.admissibility
    _check(_is_num(a.rho_floor) and a.rho_floor >= 0, "admissibility.rho_floor", "must be >= 0")
    _check(_is_num(a.pressure_floor) and a.pressure_floor >= 0, "admissibility.pressure_floor", "must be >= 0")
    _check(_is_num(a.energy_cap) and a.energy_cap > 0, "admissibility.energy_cap", "must be positive")
    _check(len(a.scalar_bounds) == 2 and a.scalar_bounds[0] <= a.scalar_bounds[1], "admissibility.scalar_bounds",
           "must be [lower, upper] with lower <= upper")

    o = cfg.output
    _check(all(f in ("csv", "vtk") for f in o.formats), "output.formats", "entries must be 'csv' or 'vtk'")
    _check(_is_num(o.entropy_offset), "output.entropy_offset", "must be a number")

    s = cfg.study
    _check(all(isinstance(n, int) and n >= 4 for n in s.levels), "study.levels", "must be integers >= 4")
    _check(isinstance(s.probe_points, int) and s.probe_points >= 2, "study.probe_points", "must be an integer >= 2")
    _check(s.alpha_rule in ALPHA_RULES, "study.alpha_rule", f"must be one of {ALPHA_RULES}")

    asr = cfg.assertions
    _check(len(asr.slope_min) in (0, 3), "assertions.slope_min", "needs three entries (R1, R2, R3)")

    _check(isinstance(cfg.seed, int) and cfg.seed >= 0, "seed", "must be a nonnegative integer")
    _check(isinstance(cfg.threads, int) and cfg.threads >= 1, "threads", "must be a positive integer")

    ic = cfg.initial
    _check(ic.name in INITIAL_CONDITIONS, "initial.name", f"must be one of {sorted(INITIAL_CONDITIONS)}")
    try:
        INITIAL_CONDITIONS[ic.name].validate(ic.params, cfg.model_spec(), "initial")
    except InitialConditionError as exc:
        raise ConfigError(str(exc)) from None


def config_to_dict(cfg: RunConfig) -> dict:
    """Plain dict suitable for TOML; None values are omitted."""
    out: dict = {"seed": cfg.seed, "threads": cfg.threads}
    for name in _SECTIONS:
        sec = getattr(cfg, name)
        if name == "initial":
            out[name] = {"name": sec.name, **sec.params}
            continue
        out[name] = {k: v for k, v in dataclasses.asdict(sec).items() if v is not None}
    return out


def dump_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))
