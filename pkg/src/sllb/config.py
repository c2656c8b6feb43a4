"""Run configuration: a YAML document describing one experiment.

Every section maps onto a dataclass; ``load_config`` validates and reports the
offending field and its line number. ``to_dict`` is the inverse of
``config_from_dict`` so configurations round-trip.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .control import AdditiveForcing, ControlGrid, ControlProblem, CostSpec, KappaWeight, StateScaledForcing
from .dynamics import PhysicalConstants
from .grid import Field, Grid
from .integrator import SimConfig
from .levy import levy_from_dict
from .marcus import MaterialField
from .optimize import OptimizerConfig

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, message: str, field_path: str = "", line: int | None = None, source: str = ""):
        where = source or "<config>"
        if line is not None:
            where += f":{line}"
        loc = f" field '{field_path}'" if field_path else ""
        super().__init__(f"{where}:{loc} {message}")
        self.field_path = field_path
        self.line = line


class _FieldError(Exception):
    def __init__(self, path: str, message: str):
        super().__init__(message)
        self.path = path
        self.message = message


# field presets; x is the cell-center coordinate array, shape (..., dim)
def _e(i, x):
    out = np.zeros(x.shape[:-1] + (3,))
    out[..., i] = 1.0
    return out


def _cosine_e1(x):
    out = np.zeros(x.shape[:-1] + (3,))
    out[..., 0] = np.cos(np.pi * x[..., 0])
    return out


def _linear_ramp(x):
    out = np.zeros(x.shape[:-1] + (3,))
    out[..., 2] = x[..., 0]
    return out


def _cosine_bump(x):
    out = np.zeros(x.shape[:-1] + (3,))
    out[..., 0] = 0.5 * np.cos(np.pi * x[..., 0])
    out[..., 2] = 1.0
    return out


FIELD_PRESETS = {
    "zero": lambda x: np.zeros(x.shape[:-1] + (3,)),
    "constant_e1": lambda x: _e(0, x),
    "constant_e2": lambda x: _e(1, x),
    "constant_e3": lambda x: _e(2, x),
    "cosine_e1": _cosine_e1,
    "linear_ramp": _linear_ramp,
    "cosine_bump": _cosine_bump,
}
MATERIAL_PRESETS = ("constant_e3", "linear_ramp", "cosine_bump")


@dataclass
class FieldSpec:
    preset: str | None = "zero"
    amplitude: float = 1.0
    values: list | None = None

    def build(self, grid: Grid, path: str) -> Field:
        if self.values is not None:
            try:
                return Field(grid, np.asarray(self.values, dtype=float))
            except ValueError as exc:
                raise _FieldError(f"{path}.values", str(exc)) from None
        if self.preset not in FIELD_PRESETS:
            raise _FieldError(f"{path}.preset", f"unknown preset {self.preset!r}; choose from {sorted(FIELD_PRESETS)}")
        return Field(grid, self.amplitude * FIELD_PRESETS[self.preset](grid.centers()))


@dataclass
class GridSection:
    dimension: int = 1
    cells: int = 64


@dataclass
class TimeSection:
    horizon: float = 1.0
    dt_max: float = 0.01
    snapshot_stride: int = 1


@dataclass
class TermsSection:
    drift: bool = True
    noise: bool = True
    control: bool = True


@dataclass
class OperatorSection:
    kind: str = "additive"
    r: float = 0.0
    shape: FieldSpec = field(default_factory=lambda: FieldSpec("constant_e1"))


@dataclass
class ControlSection:
    points: list = field(default_factory=lambda: [-1.0, 0.0, 1.0])
    kappa: str = "norm"
    intervals: int = 4
    operator: OperatorSection = field(default_factory=OperatorSection)

    def knots(self, horizon: float) -> np.ndarray:
        return np.linspace(0.0, horizon, self.intervals + 1)


@dataclass
class CostSection:
    c_kappa: float = 1.0
    target: FieldSpec = field(default_factory=lambda: FieldSpec("zero"))


@dataclass
class VerifySection:
    marcus_samples: int = 1000
    energy_paths: int = 256
    energy_dt_levels: list = field(default_factory=lambda: [1e-2, 5e-3, 2.5e-3])
    increment_paths: int = 128
    increment_dt: float = 2.0**-10
    increment_thetas: list = field(default_factory=lambda: [2.0**-k for k in range(1, 8)])
    isometry_paths: int = 64
    convergence_dts: list = field(default_factory=lambda: [1e-2, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4])
    truncation_cutoffs: list = field(default_factory=lambda: [0.1, 0.05, 0.025, 0.0125, 0.00625])


@dataclass
class RunConfig:
    schema_version: int = SCHEMA_VERSION
    seed: int = 0
    paths: int = 64
    grid: GridSection = field(default_factory=GridSection)
    constants: dict = field(default_factory=lambda: PhysicalConstants().to_dict())
    material: FieldSpec = field(default_factory=lambda: FieldSpec("cosine_bump"))
    initial: FieldSpec = field(default_factory=lambda: FieldSpec("cosine_e1"))
    levy: dict = field(default_factory=lambda: {"family": "atoms", "atoms": [[0.3, 1.0], [-0.3, 1.0]]})
    time: TimeSection = field(default_factory=TimeSection)
    terms: TermsSection = field(default_factory=TermsSection)
    control: ControlSection = field(default_factory=ControlSection)
    cost: CostSection = field(default_factory=CostSection)
    optimizer: dict = field(default_factory=lambda: OptimizerConfig().to_dict())
    verify: VerifySection = field(default_factory=VerifySection)

    # builders ---------------------------------------------------------

    def build_grid(self) -> Grid:
        try:
            return Grid(int(self.grid.dimension), int(self.grid.cells))
        except ValueError as exc:
            raise _FieldError("grid.cells" if "cells" in str(exc) else "grid.dimension", str(exc)) from None

    def build_operator(self, grid: Grid):
        op = self.control.operator
        shape = op.shape.build(grid, "control.operator.shape")
        try:
            if op.kind == "additive":
                return AdditiveForcing(shape)
            if op.kind == "state_scaled":
                return StateScaledForcing(shape, op.r)
        except ValueError as exc:
            raise _FieldError("control.operator", str(exc)) from None
        raise _FieldError("control.operator.kind", f"unknown operator kind {op.kind!r}")

    def build_sim(self) -> SimConfig:
        grid = self.build_grid()
        if self.material.values is None and self.material.preset not in MATERIAL_PRESETS:
            raise _FieldError("material.preset", f"material presets are {MATERIAL_PRESETS}")
        h = MaterialField(self.material.build(grid, "material"))
        m0 = self.initial.build(grid, "initial")
        try:
            levy = levy_from_dict(self.levy)
        except (ValueError, KeyError, TypeError) as exc:
            raise _FieldError("levy", str(exc)) from None
        try:
            constants = PhysicalConstants(**self.constants)
        except (ValueError, TypeError) as exc:
            raise _FieldError("constants", str(exc)) from None
        try:
            return SimConfig(
                grid=grid,
                horizon=float(self.time.horizon),
                dt_max=float(self.time.dt_max),
                m0=m0,
                material=h,
                levy=levy,
                constants=constants,
                operator=self.build_operator(grid),
                drift_on=bool(self.terms.drift),
                noise_on=bool(self.terms.noise),
                control_on=bool(self.terms.control),
                snapshot_stride=int(self.time.snapshot_stride),
            )
        except ValueError as exc:
            raise _FieldError("time", str(exc)) from None

    def build_control_grid(self) -> ControlGrid:
        try:
            return ControlGrid(self.control.points)
        except ValueError as exc:
            raise _FieldError("control.points", str(exc)) from None

    def build_cost(self, grid: Grid) -> CostSpec:
        if self.control.kappa != "norm":
            raise _FieldError("control.kappa", "only the builtin 'norm' weight is configurable")
        try:
            return CostSpec(self.cost.target.build(grid, "cost.target"), float(self.cost.c_kappa), KappaWeight("norm"))
        except ValueError as exc:
            raise _FieldError("cost.c_kappa", str(exc)) from None

    def build_problem(self) -> ControlProblem:
        sim = self.build_sim()
        return ControlProblem(sim, self.build_cost(sim.grid))

    def build_optimizer(self) -> OptimizerConfig:
        try:
            return OptimizerConfig(**self.optimizer)
        except (ValueError, TypeError) as exc:
            raise _FieldError("optimizer", str(exc)) from None

    def knots(self) -> np.ndarray:
        if int(self.control.intervals) < 1:
            raise _FieldError("control.intervals", "need at least one interval")
        return self.control.knots(float(self.time.horizon))

    def validate(self) -> None:
        """Build every object once so that bad fields fail early."""
        self.build_problem()
        self.build_control_grid()
        self.build_optimizer()
        self.knots()


SECTION_TYPES = {
    "grid": GridSection,
    "material": FieldSpec,
    "initial": FieldSpec,
    "time": TimeSection,
    "terms": TermsSection,
    "control": ControlSection,
    "cost": CostSection,
    "verify": VerifySection,
}
NESTED_TYPES = {
    (ControlSection, "operator"): OperatorSection,
    (OperatorSection, "shape"): FieldSpec,
    (CostSection, "target"): FieldSpec,
}


def _coerce(kind: str, value, path: str):
    """Scalar type check; numeric strings are accepted because YAML 1.1 reads ``1e3`` as text."""
    if "None" in kind:
        if value is None:
            return None
        kind = kind.replace("| None", "").strip()
    if kind == "bool":
        if not isinstance(value, bool):
            raise _FieldError(path, f"expected true/false, got {value!r}")
        return value
    if kind in ("int", "float"):
        if isinstance(value, bool):
            raise _FieldError(path, f"expected a number, got {value!r}")
        if isinstance(value, int):
            return value if kind == "int" else float(value)
        if kind == "int" and isinstance(value, str) and value.strip().lstrip("+-").isdigit():
            return int(value)
        try:
            num = float(value)
        except (TypeError, ValueError):
            raise _FieldError(path, f"expected a number, got {value!r}") from None
        if kind == "int":
            if not num.is_integer():
                raise _FieldError(path, f"expected an integer, got {value!r}")
            return int(num)
        return num
    return value


def _build_section(cls, data, path):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise _FieldError(path, f"expected a mapping, got {type(data).__name__}")
    types = {f.name: f.type for f in fields(cls)}
    names = set(types)
    kwargs = {}
    for key, value in data.items():
        if key not in names:
            raise _FieldError(f"{path}.{key}", f"unknown field; expected one of {sorted(names)}")
        sub = NESTED_TYPES.get((cls, key))
        if sub:
            kwargs[key] = _build_section(sub, value, f"{path}.{key}")
        else:
            kwargs[key] = _coerce(types[key], value, f"{path}.{key}")
    return cls(**kwargs)


RUN_TYPES = {f.name: f.type for f in fields(RunConfig)}


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise _FieldError("", "top level must be a mapping")
    names = {f.name for f in fields(RunConfig)}
    kwargs = {}
    for key, value in data.items():
        if key not in names:
            raise _FieldError(key, f"unknown section; expected one of {sorted(names)}")
        if key in SECTION_TYPES:
            kwargs[key] = _build_section(SECTION_TYPES[key], value, key)
        elif key in ("constants", "optimizer"):
            if not isinstance(value, dict):
                raise _FieldError(key, "expected a mapping")
            base = getattr(RunConfig(), key)
            unknown = set(value) - set(base)
            if unknown:
                raise _FieldError(f"{key}.{sorted(unknown)[0]}", f"unknown field; expected one of {sorted(base)}")
            kinds = {f.name: f.type for f in fields(OptimizerConfig)} if key == "optimizer" else dict.fromkeys(base, "float")
            value = {k: _coerce(kinds[k], v, f"{key}.{k}") for k, v in value.items()}
            kwargs[key] = {**base, **value}
        else:
            kwargs[key] = _coerce(RUN_TYPES[key], value, key)
    cfg = RunConfig(**kwargs)
    if cfg.schema_version != SCHEMA_VERSION:
        raise _FieldError("schema_version", f"unsupported schema version {cfg.schema_version}")
    return cfg


def to_dict(cfg: RunConfig) -> dict:
    return asdict(cfg)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False)


def _line_of(root, path: str) -> int | None:
    node = root
    line = None
    if node is None:
        return None
    for part in [p for p in path.split(".") if p]:
        if not isinstance(node, yaml.MappingNode):
            break
        for k, v in node.value:
            if k.value == part:
                line = k.start_mark.line + 1
                node = v
                break
        else:
            break
    return line


def parse_config(text: str, source: str = "") -> RunConfig:
    try:
        data = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML parse error: {exc}", line=mark.line + 1 if mark else None, source=source) from None
    try:
        cfg = config_from_dict(data or {})
        cfg.validate()
    except _FieldError as exc:
        raise ConfigError(exc.message, exc.path, _line_of(root, exc.path), source) from None
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path))
