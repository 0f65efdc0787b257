"""Structured meshes, boundary conditions and load programs for the benchmark cases."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigError
from ..fem import DofMap, Mesh, fix_orientation
from ..materials import MaterialParams
from ..solver import LoadProgram

CASES = ("uniaxial_cube", "footing3d", "arc2d", "cook2d", "footing2d", "mpoint")
FE_CASES = CASES[:-1]
PLANAR_CASES = ("arc2d", "cook2d", "footing2d")

# default mesh density of each case
DEFAULT_DENSITY = {
    "uniaxial_cube": 4,
    "footing3d": 16,
    "arc2d": 1,
    "cook2d": 16,
    "footing2d": 10,
    "mpoint": 1,
}

# arc meshes: (elements through the thickness, elements along the arc)
ARC_MESHES = {1: (3, 30), 2: (10, 90), 3: (20, 180)}


@dataclass(frozen=True)
class CaseSpec:
    """Benchmark selection, geometry (mm, degrees) and loading program.

    ``target`` is the final prescribed displacement (mm) for displacement
    driven cases or the final total load (N per unit thickness) for Cook's
    membrane; ``steps`` is the number of equal increments.
    """

    case: str
    density: int = 0
    steps: int = 0
    target: float = float("nan")
    size: float = 20.0
    radius: float = 100.0
    thickness: float = 4.0
    angle: float = 60.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.case not in CASES:
            raise ConfigError(f"unknown case {self.case!r}; expected one of {CASES}")
        if self.density == 0:
            object.__setattr__(self, "density", DEFAULT_DENSITY[self.case])
        if self.density < 1:
            raise ConfigError("mesh density must be >= 1")
        if self.case == "arc2d" and self.density not in ARC_MESHES:
            raise ConfigError("arc2d density selects mesh 1, 2 or 3")
        if min(self.size, self.radius, self.thickness, self.angle) <= 0.0:
            raise ConfigError("geometry parameters must be positive")
        default_target, default_steps = _default_program(self.case)
        if not np.isfinite(self.target):
            object.__setattr__(self, "target", default_target)
        if self.steps == 0:
            object.__setattr__(self, "steps", default_steps)
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")

    @property
    def dim(self) -> int:
        return 2 if self.case in PLANAR_CASES else 3

    @property
    def mesh_label(self) -> str:
        if self.case == "arc2d":
            return f"mesh{self.density}"
        n = self.density
        return f"{n}x{n}" if self.dim == 2 else f"{n}x{n}x{n}"

    def with_(self, **changes) -> "CaseSpec":
        return replace(self, **changes)


def _default_program(case):
    return {
        "uniaxial_cube": (70.0, 70),
        "footing3d": (-12.0, 12),
        "arc2d": (-20.0, 80),
        "cook2d": (200.0, 10),
        "footing2d": (-12.0, 24),
        "mpoint": (4.5, 70),
    }[case]


@dataclass
class Case:
    """Generated discrete problem plus bookkeeping for curve extraction."""

    spec: CaseSpec
    mesh: Mesh
    dofmap: DofMap
    program: LoadProgram
    f_ext: np.ndarray
    monitor_dof: int = -1
    area: float = 1.0
    xlabel: str = ""
    ylabel: str = ""
    node_sets: dict = field(default_factory=dict)


def structured_grid(lengths, counts, origin=None):
    """Nodes and Q4/H8 connectivity of a rectangular box; x varies fastest."""
    lengths = np.asarray(lengths, dtype=float)
    counts = tuple(int(c) for c in counts)
    dim = len(counts)
    axes = [np.linspace(0.0, L, n + 1) for L, n in zip(lengths, counts)]
    grids = np.meshgrid(*axes[::-1], indexing="ij")
    nodes = np.stack([g.ravel() for g in grids[::-1]], axis=-1)
    if origin is not None:
        nodes = nodes + np.asarray(origin, dtype=float)
    strides = np.cumprod((1,) + tuple(c + 1 for c in counts[:-1]))
    base_axes = np.meshgrid(*[np.arange(c) for c in counts[::-1]], indexing="ij")
    base = sum(b.ravel() * s for b, s in zip(base_axes[::-1], strides))
    if dim == 2:
        offs = [0, 1, 1 + strides[1], strides[1]]
        kind = "Q4"
    else:
        sx, sy, sz = strides
        offs = [0, sx, sx + sy, sy, sz, sx + sz, sx + sy + sz, sy + sz]
        kind = "H8"
    elements = base[:, None] + np.asarray(offs)[None, :]
    return nodes, elements, kind


def _mapped_quad(corners4, nx, ny):
    """Bilinear map of a unit grid onto the quadrilateral ``corners4`` (ccw)."""
    nodes, elements, _ = structured_grid((1.0, 1.0), (nx, ny))
    s, t = nodes[:, 0], nodes[:, 1]
    c = np.asarray(corners4, dtype=float)
    w = np.stack([(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t], axis=-1)
    return w @ c, elements


def _near(a, b, scale):
    return np.abs(a - b) <= 1e-9 * scale


def _constraints(dim, pairs):
    """Sorted unique dof list from (node array, component) pairs."""
    dofs = [np.asarray(n, dtype=np.int64) * dim + c for n, c in pairs]
    return np.unique(np.concatenate(dofs)) if dofs else np.zeros(0, np.int64)


def _program_for(dofmap, moving, steps, target, tag):
    """Linear ramp of the ``moving`` dofs to ``target``; others held at zero."""
    pos = dofmap.position(moving)
    values = np.zeros((steps, len(dofmap.constrained)))
    ramp = target * np.arange(1, steps + 1) / steps
    values[:, pos] = ramp[:, None]
    return LoadProgram(values, abscissa=ramp, reaction_dofs=moving, tag=tag)


def _uniaxial_cube(spec):
    n, L = spec.density, spec.size
    nodes, elements, kind = structured_grid((L, L, L), (n, n, n))
    mesh = Mesh(nodes, elements, kind)
    x, y, z = nodes.T
    top = np.nonzero(_near(z, L, L))[0]
    con = _constraints(3, [
        (np.nonzero(_near(x, 0, L))[0], 0),
        (np.nonzero(_near(y, 0, L))[0], 1),
        (np.nonzero(_near(z, 0, L))[0], 2),
        (top, 2),
    ])
    dm = DofMap(mesh.ndof, 3, con)
    moving = top * 3 + 2
    prog = _program_for(dm, moving, spec.steps, spec.target, "uniaxial")
    return Case(spec, mesh, dm, prog, np.zeros(mesh.ndof), monitor_dof=int(moving[0]),
                area=L * L, xlabel="prescribed displacement w [mm]", ylabel="S1_3 / mu",
                node_sets={"top": top})


def _footing3d(spec):
    n, L = spec.density, spec.size
    nodes, elements, kind = structured_grid((L, L, L), (n, n, n))
    mesh = Mesh(nodes, elements, kind)
    x, y, z = nodes.T
    bottom = np.nonzero(_near(z, 0, L))[0]
    loaded = np.nonzero(_near(z, L, L) & (x <= 0.5 * L + 1e-9 * L))[0]
    con = _constraints(3, [
        (bottom, 0), (bottom, 1), (bottom, 2),
        (np.nonzero(_near(x, 0, L) | _near(x, L, L))[0], 0),
        (np.nonzero(_near(y, 0, L) | _near(y, L, L))[0], 1),
        (loaded, 2),
    ])
    dm = DofMap(mesh.ndof, 3, con)
    moving = loaded * 3 + 2
    prog = _program_for(dm, moving, spec.steps, spec.target, "footing3d")
    return Case(spec, mesh, dm, prog, np.zeros(mesh.ndof), monitor_dof=int(moving[0]),
                xlabel="prescribed displacement w [mm]", ylabel="resultant force [N]",
                node_sets={"loaded": loaded})


def _arc2d(spec):
    nr, nc = ARC_MESHES[spec.density]
    if nc % 2:
        raise ConfigError("arc mesh needs an even number of elements along the arc")
    Ri, t = spec.radius, spec.thickness
    half = np.deg2rad(spec.angle) / 2.0
    grid, elements, _ = structured_grid((1.0, 1.0), (nc, nr))
    phi = np.pi / 2 + half - 2.0 * half * grid[:, 0]
    r = Ri + t * grid[:, 1]
    nodes = np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)
    elements = fix_orientation(nodes, elements, "Q4")
    mesh = Mesh(nodes, elements, "Q4")
    ends = np.nonzero(np.isclose(grid[:, 0], 0.0) | np.isclose(grid[:, 0], 1.0))[0]
    crown = int(np.nonzero(np.isclose(grid[:, 0], 0.5) & np.isclose(grid[:, 1], 1.0))[0][0])
    con = _constraints(2, [(ends, 0), (ends, 1), ([crown], 1)])
    dm = DofMap(mesh.ndof, 2, con)
    moving = np.array([crown * 2 + 1])
    prog = _program_for(dm, moving, spec.steps, spec.target, "arc")
    return Case(spec, mesh, dm, prog, np.zeros(mesh.ndof), monitor_dof=int(moving[0]),
                xlabel="crown displacement v [mm]", ylabel="reaction force [N]",
                node_sets={"crown": np.array([crown]), "ends": ends})


COOK_CORNERS = ((0.0, 0.0), (48.0, 44.0), (48.0, 60.0), (0.0, 44.0))


def _cook2d(spec):
    n = spec.density
    if n % 2:
        raise ConfigError("Cook's membrane needs an even density so node A exists")
    nodes, elements = _mapped_quad(COOK_CORNERS, n, n)
    mesh = Mesh(nodes, elements, "Q4")
    x = nodes[:, 0]
    clamped = np.nonzero(_near(x, 0.0, 48.0))[0]
    con = _constraints(2, [(clamped, 0), (clamped, 1)])
    dm = DofMap(mesh.ndof, 2, con)
    # consistent nodal loads of a uniform shear traction on the edge x = 48
    right = np.nonzero(_near(x, 48.0, 48.0))[0]
    right = right[np.argsort(nodes[right, 1])]
    f_ext = np.zeros(mesh.ndof)
    seg = np.diff(nodes[right, 1])
    edge = seg.sum()
    np.add.at(f_ext, right[:-1] * 2 + 1, 0.5 * seg / edge)
    np.add.at(f_ext, right[1:] * 2 + 1, 0.5 * seg / edge)
    node_a = int(right[n // 2])
    loads = spec.target * np.arange(1, spec.steps + 1) / spec.steps
    prog = LoadProgram(np.zeros((spec.steps, len(con))), load_scale=loads, abscissa=loads,
                       reaction_dofs=con[1::2], tag="cook")
    return Case(spec, mesh, dm, prog, f_ext, monitor_dof=node_a * 2 + 1,
                xlabel="total load F [N]", ylabel="tip displacement v_A [mm]",
                node_sets={"A": np.array([node_a]), "clamped": clamped})


def _footing2d(spec):
    n, L = spec.density, spec.size
    nodes, elements, kind = structured_grid((L, L), (n, n))
    mesh = Mesh(nodes, elements, kind)
    x, y = nodes.T
    bottom = np.nonzero(_near(y, 0, L))[0]
    loaded = np.nonzero(_near(y, L, L) & (x <= 0.5 * L + 1e-9 * L))[0]
    con = _constraints(2, [
        (bottom, 0), (bottom, 1),
        (np.nonzero(_near(x, 0, L) | _near(x, L, L))[0], 0),
        (loaded, 1),
    ])
    dm = DofMap(mesh.ndof, 2, con)
    moving = loaded * 2 + 1
    prog = _program_for(dm, moving, spec.steps, spec.target, "footing2d")
    return Case(spec, mesh, dm, prog, np.zeros(mesh.ndof), monitor_dof=int(moving[0]),
                xlabel="prescribed displacement v [mm]", ylabel="resultant force [N]",
                node_sets={"loaded": loaded})


_GENERATORS = {
    "uniaxial_cube": _uniaxial_cube,
    "footing3d": _footing3d,
    "arc2d": _arc2d,
    "cook2d": _cook2d,
    "footing2d": _footing2d,
}


def generate_case(spec: CaseSpec) -> Case:
    """Mesh, constraints and load program of a finite-element benchmark."""
    if spec.case not in _GENERATORS:
        raise ConfigError(f"case {spec.case!r} has no finite-element mesh")
    return _GENERATORS[spec.case](spec)


def default_material(spec: CaseSpec, model: str = "exp_hencky", **overrides) -> MaterialParams:
    """Reference parameters (mu = 1 MPa, kappa = 4.7 mu, k = 2, khat = 3, Jm = 5)."""
    p = MaterialParams.reference(model, mu=overrides.pop("mu", 1.0), dim=spec.dim)
    return p.with_(**overrides) if overrides else p
