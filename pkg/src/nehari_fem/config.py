"""Run configuration: flat ``section.key = value`` text.

Blank lines and ``#`` comments are ignored. Unknown keys are an error.
Floats are echoed with 17 significant digits, so ``format_config`` output
parses back to an identical :class:`RunConfig`.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .assembly import ProblemParams, WeightField, read_weights_csv
from .errors import InvalidInputError
from .mesh import Mesh, build_interval_mesh, build_rect_mesh, read_mesh
from .optimize import SolverConfig


def fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class MeshSpec:
    kind: str = "interval"
    x: tuple = (0.0, 1.0)
    y: tuple = (0.0, 1.0)
    nx: int = 256
    ny: int = 32
    path: str = ""

    def build(self) -> Mesh:
        if self.kind == "interval":
            return build_interval_mesh(self.x[0], self.x[1], self.nx)
        if self.kind == "rect":
            return build_rect_mesh(self.x, self.y, self.nx, self.ny)
        if self.kind == "file":
            return read_mesh(self.path)
        raise InvalidInputError(f"mesh.kind must be interval, rect or file, got {self.kind!r}")


@dataclass(frozen=True)
class WeightSpec:
    kind: str = "constant"
    xi: float = 1.0
    a: float = 1.0
    xi_right: float = 1.0
    a_right: float = 1.0
    split: float | None = None
    path: str = ""

    def build(self, mesh: Mesh) -> WeightField:
        if self.kind == "constant":
            return WeightField.constant(mesh, self.xi, self.a)
        if self.kind == "step":
            return WeightField.step(mesh, self.xi, self.xi_right, self.a, self.a_right, self.split)
        if self.kind == "csv":
            return read_weights_csv(self.path, mesh)
        raise InvalidInputError(f"weights.kind must be constant, step or csv, got {self.kind!r}")


@dataclass(frozen=True)
class RunConfig:
    mesh: MeshSpec = field(default_factory=MeshSpec)
    weights: WeightSpec = field(default_factory=WeightSpec)
    params: ProblemParams = field(default_factory=lambda: ProblemParams(2.0, 0.5, 4.0, 1.0))
    solver: SolverConfig = field(default_factory=SolverConfig)
    seed: int = 0
    out: str = "out"
    sweep_lambdas: tuple = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)
    sweep_solve: bool = True
    fiber_direction: str = "bump"
    fiber_t_min: float = 1e-2
    fiber_t_max: float = 1e2
    fiber_n: int = 201
    verify_n_directions: int = 100

    def validate(self) -> tuple[Mesh, WeightField]:
        """Build mesh and weights, checking parameters against the mesh dimension."""
        mesh = self.mesh.build()
        self.params.check_dimension(mesh.dimension)
        weights = self.weights.build(mesh)
        if weights.xi.shape[0] != mesh.n_elements:
            raise InvalidInputError("weights do not match the mesh element count")
        return mesh, weights


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _opt_float(text: str):
    return float(text) if text else None


def _bool(text: str) -> bool:
    if text.lower() in ("true", "1", "yes"):
        return True
    if text.lower() in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (group, attribute, parser); group None addresses RunConfig itself
_KEYS = {
    "mesh.kind": ("mesh", "kind", str),
    "mesh.x": ("mesh", "x", _floats),
    "mesh.y": ("mesh", "y", _floats),
    "mesh.nx": ("mesh", "nx", int),
    "mesh.ny": ("mesh", "ny", int),
    "mesh.path": ("mesh", "path", str),
    "weights.kind": ("weights", "kind", str),
    "weights.xi": ("weights", "xi", float),
    "weights.a": ("weights", "a", float),
    "weights.xi_right": ("weights", "xi_right", float),
    "weights.a_right": ("weights", "a_right", float),
    "weights.split": ("weights", "split", _opt_float),
    "weights.path": ("weights", "path", str),
    "params.p": ("params", "p", float),
    "params.gamma": ("params", "gamma", float),
    "params.r": ("params", "r", float),
    "params.lambda": ("params", "lam", float),
    "solver.max_iters": ("solver", "max_iters", int),
    "solver.step_init": ("solver", "step_init", float),
    "solver.step_shrink": ("solver", "step_shrink", float),
    "solver.tol_energy": ("solver", "tol_energy", float),
    "solver.tol_grad": ("solver", "tol_grad", float),
    "solver.restarts": ("solver", "restarts", int),
    "solver.preconditioner": ("solver", "preconditioner", str),
    "run.seed": (None, "seed", int),
    "run.out": (None, "out", str),
    "sweep.lambdas": (None, "sweep_lambdas", _floats),
    "sweep.solve": (None, "sweep_solve", _bool),
    "fiber.direction": (None, "fiber_direction", str),
    "fiber.t_min": (None, "fiber_t_min", float),
    "fiber.t_max": (None, "fiber_t_max", float),
    "fiber.n": (None, "fiber_n", int),
    "verify.n_directions": (None, "verify_n_directions", int),
}


def parse_config(text: str) -> RunConfig:
    groups = {"mesh": {}, "weights": {}, "params": {}, "solver": {}, None: {}}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise InvalidInputError(f"line {lineno}: unknown key {key!r}")
        group, attr, parse = _KEYS[key]
        try:
            groups[group][attr] = parse(value)
        except ValueError as exc:
            raise InvalidInputError(f"line {lineno}: bad value for {key}: {exc}") from exc
    base = RunConfig()
    return RunConfig(
        mesh=dataclasses.replace(base.mesh, **groups["mesh"]),
        weights=dataclasses.replace(base.weights, **groups["weights"]),
        params=dataclasses.replace(base.params, **groups["params"]),
        solver=dataclasses.replace(base.solver, **groups["solver"]),
        **groups[None],
    )


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _render(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return fmt(value)
    if isinstance(value, tuple):
        return ",".join(fmt(v) for v in value)
    return str(value)


def format_config(cfg: RunConfig) -> str:
    lines = []
    for key, (group, attr, _) in _KEYS.items():
        holder = cfg if group is None else getattr(cfg, group)
        lines.append(f"{key} = {_render(getattr(holder, attr))}")
    return "\n".join(lines) + "\n"
