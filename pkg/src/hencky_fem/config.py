"""Flat, typed ``key = value`` run configuration.

Grammar
-------
* one ``key = value`` pair per line; surrounding whitespace is ignored;
* blank lines and lines starting with ``#`` are skipped (no inline comments);
* keys are the fields of :class:`RunConfig`; each has a fixed type
  (``str``, ``int``, ``float`` or ``bool``) and values are parsed accordingly;
  booleans accept ``true``/``false`` (case-insensitive);
* a key may appear at most once.

Command-line flags override values read from the file.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

from .bench.cases import CASES, PLANAR_CASES, CaseSpec
from .errors import ConfigError
from .materials import MaterialParams, normalize_model
from .solver import NewtonConfig


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to run one case; ``nan``/0 mean "case default"."""

    case: str = "uniaxial_cube"
    model: str = "exp_hencky"
    mu: float = 1.0
    kappa: float = float("nan")
    k: float = float("nan")
    khat: float = float("nan")
    jm: float = float("nan")
    mesh_density: int = 0
    steps: int = 0
    target: float = float("nan")
    out: str = "out"
    tol_abs: float = 1e-9
    tol_rel: float = 1e-10
    max_iter: int = 25
    max_step_cuts: int = 6
    stretch_min: float = 0.25
    stretch_max: float = 4.5
    vtk: bool = True
    plots: bool = True

    def __post_init__(self):
        if self.case not in CASES:
            raise ConfigError(f"unknown case {self.case!r}; expected one of {CASES}")
        try:
            object.__setattr__(self, "model", normalize_model(self.model))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def dim(self) -> int:
        return 2 if self.case in PLANAR_CASES else 3

    def material(self) -> MaterialParams:
        """Reference parameters of the model, overridden by any explicit values."""
        p = MaterialParams.reference(self.model, mu=self.mu, dim=self.dim)
        changes = {
            name: getattr(self, name)
            for name in ("kappa", "k", "khat", "jm")
            if getattr(self, name) == getattr(self, name)  # skip nan
        }
        return p.with_(**changes) if changes else p

    def case_spec(self) -> CaseSpec:
        return CaseSpec(self.case, density=self.mesh_density, steps=self.steps, target=self.target)

    def newton(self) -> NewtonConfig:
        return NewtonConfig(tol_abs=self.tol_abs, tol_rel=self.tol_rel, max_iter=self.max_iter,
                            max_step_cuts=self.max_step_cuts)

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key, text):
    typ = _TYPES[key]
    text = text.strip()
    try:
        if typ == "bool":
            low = text.lower()
            if low not in ("true", "false"):
                raise ValueError(text)
            return low == "true"
        if typ == "int":
            return int(text)
        if typ == "float":
            return float(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {key} ({typ}): {text!r}") from exc


def parse_config(text: str) -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _convert(key, value)
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for key, value in asdict(cfg).items():
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
