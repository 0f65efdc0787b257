"""Isoparametric Q4 / H8 elements and sparse assembly.

The weak form is discretized in its spatial version: internal forces are
``int tau . grad_x N dV`` and the tangent is the material part
``B^T C B`` plus the geometric part ``(grad_x N_A . tau grad_x N_B) I``, with
all integrals taken over the reference volume (tau is a Kirchhoff stress).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import materials as mat
from . import tensorlab as tl
from .errors import (
    ConfigError,
    DegenerateElementError,
    HenckyFemError,
    InvertedElementError,
)

ELEMENT_KINDS = {"Q4": (2, 4), "H8": (3, 8)}
VTK_CELL_TYPES = {"Q4": 9, "H8": 12}

_Q4_CORNERS = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)
_H8_CORNERS = np.array(
    [[-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
     [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1]],
    dtype=float,
)
_GAUSS_1D = np.array([-1.0, 1.0]) / np.sqrt(3.0)


def corners(kind: str) -> np.ndarray:
    return _Q4_CORNERS if kind == "Q4" else _H8_CORNERS


def shape_functions(kind: str, zeta):
    """Shape function values ``(..., nen)`` and reference gradients ``(..., nen, dim)``."""
    zeta = np.asarray(zeta, dtype=float)
    c = corners(kind)
    dim = c.shape[1]
    # factors (1 + c_d z_d) per corner and direction
    f = 1.0 + zeta[..., None, :] * c
    N = np.prod(f, axis=-1) / 2.0**dim
    dN = np.empty(zeta.shape[:-1] + c.shape)
    for d in range(dim):
        others = np.prod(np.delete(f, d, axis=-1), axis=-1)
        dN[..., d] = c[:, d] * others / 2.0**dim
    return N, dN


def gauss_rule(kind: str):
    """Full 2-point-per-direction Gauss rule: points ``(ng, dim)``, weights ``(ng,)``."""
    dim = ELEMENT_KINDS[kind][0]
    grids = np.meshgrid(*([_GAUSS_1D] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids[::-1]], axis=-1)[:, ::-1]
    return pts, np.ones(len(pts))


@dataclass
class Mesh:
    """Nodes (mm), connectivity (0-based) and element kind."""

    nodes: np.ndarray
    elements: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in ELEMENT_KINDS:
            raise ConfigError(f"unknown element kind {self.kind!r}")
        dim, nen = ELEMENT_KINDS[self.kind]
        self.nodes = np.ascontiguousarray(self.nodes, dtype=float)
        self.elements = np.ascontiguousarray(self.elements, dtype=np.int64)
        if self.nodes.ndim != 2 or self.nodes.shape[1] != dim:
            raise ConfigError(f"{self.kind} mesh needs {dim}D nodes, got shape {self.nodes.shape}")
        if self.elements.ndim != 2 or self.elements.shape[1] != nen:
            raise ConfigError(f"{self.kind} connectivity needs {nen} nodes per element")
        if self.elements.size and (self.elements.min() < 0 or self.elements.max() >= len(self.nodes)):
            raise ConfigError("connectivity index out of range")

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def nnodes(self) -> int:
        return len(self.nodes)

    @property
    def nelems(self) -> int:
        return len(self.elements)

    @property
    def ndof(self) -> int:
        return self.dim * self.nnodes

    def counts(self) -> dict:
        return {"elements": self.nelems, "nodes": self.nnodes, "dofs": self.ndof}


def fix_orientation(nodes, elements, kind):
    """Reorder connectivity of elements whose reference Jacobian is negative."""
    elements = np.array(elements, copy=True)
    _, dN = shape_functions(kind, np.zeros(ELEMENT_KINDS[kind][0]))
    J = np.einsum("eai,aj->eij", nodes[elements], dN)
    bad = np.linalg.det(J) < 0.0
    if kind == "Q4":
        elements[bad] = elements[bad][:, [0, 3, 2, 1]]
    else:
        elements[bad] = elements[bad][:, [0, 3, 2, 1, 4, 7, 6, 5]]
    return elements


def write_mesh(path, mesh: Mesh):
    """Plain-text mesh: ``dim nnodes nelems kind``, node lines, connectivity lines."""
    with open(path, "w") as fh:
        fh.write(f"{mesh.dim} {mesh.nnodes} {mesh.nelems} {mesh.kind}\n")
        for x in mesh.nodes:
            fh.write(" ".join(repr(float(v)) for v in x) + "\n")
        for e in mesh.elements:
            fh.write(" ".join(str(int(v)) for v in e) + "\n")


def read_mesh(path) -> Mesh:
    try:
        with open(path) as fh:
            lines = [ln.split() for ln in fh if ln.strip()]
    except OSError as exc:
        raise ConfigError(f"cannot read mesh file {path}: {exc}") from exc
    try:
        dim, nn, ne, kind = int(lines[0][0]), int(lines[0][1]), int(lines[0][2]), lines[0][3]
        nodes = np.array([[float(v) for v in ln] for ln in lines[1 : 1 + nn]])
        elems = np.array([[int(v) for v in ln] for ln in lines[1 + nn : 1 + nn + ne]], dtype=np.int64)
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"malformed mesh file {path}: {exc}") from exc
    if nodes.shape != (nn, dim) or len(elems) != ne:
        raise ConfigError(f"mesh file {path}: header does not match contents")
    return Mesh(nodes.reshape(nn, dim), elems.reshape(ne, -1), kind)


@dataclass
class DofMap:
    """Node-major dof numbering (dof = node * dim + component) and constraints."""

    ndof: int
    dim: int
    constrained: np.ndarray

    def __post_init__(self):
        self.constrained = np.unique(np.asarray(self.constrained, dtype=np.int64))
        if self.constrained.size and (self.constrained[0] < 0 or self.constrained[-1] >= self.ndof):
            raise ConfigError("constrained dof out of range")
        mask = np.ones(self.ndof, dtype=bool)
        mask[self.constrained] = False
        self.free = np.nonzero(mask)[0]

    @classmethod
    def for_mesh(cls, mesh: Mesh, constrained=()) -> "DofMap":
        return cls(mesh.ndof, mesh.dim, np.asarray(constrained, dtype=np.int64))

    def node_dofs(self, nodes, component=None) -> np.ndarray:
        nodes = np.atleast_1d(np.asarray(nodes, dtype=np.int64))
        if component is None:
            return (nodes[:, None] * self.dim + np.arange(self.dim)).ravel()
        return nodes * self.dim + component

    def position(self, dofs) -> np.ndarray:
        """Index of each constrained dof inside ``self.constrained``."""
        pos = np.searchsorted(self.constrained, dofs)
        if np.any(pos >= len(self.constrained)) or np.any(self.constrained[pos] != dofs):
            raise ConfigError("dof is not constrained")
        return pos


@dataclass
class GaussPointState:
    F: np.ndarray
    B: np.ndarray
    dV: np.ndarray
    grad_x: np.ndarray


def reference_gradients(X_e, kind, points):
    """``grad_X N`` and ``det J`` for element coordinates ``X_e (..., nen, dim)``."""
    _, dN = shape_functions(kind, points)
    J = np.einsum("...ai,gaj->...gij", X_e, dN)
    detJ = np.linalg.det(J)
    if np.any(detJ <= 0.0):
        raise DegenerateElementError("reference Jacobian det J <= 0")
    dNdX = np.einsum("gaj,...gji->...gai", dN, np.linalg.inv(J))
    return dNdX, detJ


def deformation_gradient(X_e, u_e, zeta, kind=None, weight: float = 1.0) -> GaussPointState:
    """Kinematics at one reference point of one element."""
    X_e = np.asarray(X_e, dtype=float)
    u_e = np.asarray(u_e, dtype=float)
    if kind is None:
        kind = "Q4" if X_e.shape == (4, 2) else "H8"
    zeta = np.asarray(zeta, dtype=float).reshape(1, -1)
    dNdX, detJ = reference_gradients(X_e, kind, zeta)
    dNdX = dNdX[0]
    F = np.einsum("ai,aj->ij", X_e + u_e, dNdX)
    if np.linalg.det(F) <= 0.0:
        raise InvertedElementError("det F <= 0 at evaluation point", elements=(0,))
    grad_x = dNdX @ np.linalg.inv(F)
    return GaussPointState(F=F, B=F @ F.T, dV=weight * detJ[0], grad_x=grad_x)


def strain_operator(grad_x) -> np.ndarray:
    """Discrete symmetric-gradient matrix ``(..., nv, nen*dim)``; shear rows carry the factor 2."""
    grad_x = np.asarray(grad_x)
    nen, dim = grad_x.shape[-2:]
    out = np.zeros(grad_x.shape[:-2] + (tl.voigt_size(dim), nen * dim))
    for I, (i, j) in enumerate(tl.VOIGT_PAIRS[dim]):
        if i == j:
            out[..., I, i::dim] = grad_x[..., :, i]
        else:
            out[..., I, i::dim] = grad_x[..., :, j]
            out[..., I, j::dim] = grad_x[..., :, i]
    return out


def element_kernel(material, x_e, dNdX, wdetJ, need_K=True, element_ids=None):
    """Internal forces and tangent for a block of elements.

    Parameters
    ----------
    x_e : (ne, nen, dim) current nodal positions
    dNdX : (ne, ng, nen, dim) reference shape gradients
    wdetJ : (ne, ng) quadrature weight times reference Jacobian

    Returns
    -------
    f : (ne, nen*dim)
    K : (ne, nen*dim, nen*dim) or None
    """
    ne, nen, dim = x_e.shape
    F = np.matmul(np.swapaxes(x_e, -1, -2)[:, None], dNdX)
    detF, Finv = tl.det_inv(F)
    bad = np.nonzero(np.any(~(detF > 0.0), axis=1))[0]
    if bad.size:
        ids = bad if element_ids is None else element_ids[bad]
        raise InvertedElementError(f"det F <= 0 in element(s) {list(ids[:10])}", elements=ids)
    grad_x = np.matmul(dNdX, Finv)
    B = np.matmul(F, np.swapaxes(F, -1, -2))
    try:
        if need_K:
            st = mat.spatial_tangent_and_stress(material, B)
            tau = st.tau_tensor
        else:
            tau = mat.kirchhoff_stress(material, B)
    except HenckyFemError as exc:
        raise type(exc)(f"{exc} ({_locate_failure(material, B, element_ids)})") from exc
    wtau = tau * wdetJ[..., None, None]
    ng = grad_x.shape[1]
    # f^A_i = sum_g w (tau grad_x N^A)_i
    gtau = np.matmul(grad_x, wtau)
    f = gtau.sum(axis=1).reshape(ne, nen * dim)
    if not need_K:
        return f, None
    # Gauss-point sums are folded into the matmul contractions
    Bm = strain_operator(grad_x)
    nv = Bm.shape[2]
    CB = np.matmul(st.c_spatial * wdetJ[..., None, None], Bm).reshape(ne, ng * nv, nen * dim)
    K = np.matmul(Bm.reshape(ne, ng * nv, nen * dim).swapaxes(1, 2), CB)
    G = np.matmul(gtau, np.swapaxes(grad_x, -1, -2)).sum(axis=1)
    K4 = K.reshape(ne, nen, dim, nen, dim)
    for i in range(dim):
        K4[:, :, i, :, i] += G
    return f, K


def _locate_failure(material, B, element_ids):
    for e in range(B.shape[0]):
        try:
            mat.kirchhoff_stress(material, B[e])
        except HenckyFemError:
            return f"element {e if element_ids is None else int(element_ids[e])}"
    return "element unknown"


def element_force_and_stiffness(material, X_e, u_e, kind=None):
    """Residual contribution and tangent of a single element."""
    X_e = np.asarray(X_e, dtype=float)
    if kind is None:
        kind = "Q4" if X_e.shape == (4, 2) else "H8"
    pts, w = gauss_rule(kind)
    dNdX, detJ = reference_gradients(X_e, kind, pts)
    f, K = element_kernel(material, (X_e + np.asarray(u_e, dtype=float))[None], dNdX[None],
                          (w * detJ)[None])
    return f[0], K[0]


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("HENCKY_FEM_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class AssemblyResult:
    K: sp.csr_matrix | None
    R: np.ndarray
    reactions: np.ndarray


class Assembler:
    """Reference geometry, sparsity pattern and scatter map for one mesh.

    ``assemble(u)`` returns the symmetric CSR tangent and the out-of-balance
    force ``R = f_int - f_ext``.  Elements are processed in fixed-size blocks;
    with ``threads > 1`` blocks run concurrently but are reduced in block
    order.
    """

    block_size = 2048

    def __init__(self, mesh: Mesh, material, threads: int | None = None):
        if material.dim != mesh.dim:
            raise ConfigError(f"material dim {material.dim} does not match {mesh.dim}D mesh")
        self.mesh = mesh
        self.material = material
        self.threads = thread_count() if threads is None else max(1, int(threads))
        pts, w = gauss_rule(mesh.kind)
        self.dNdX, detJ = reference_gradients(mesh.nodes[mesh.elements], mesh.kind, pts)
        self.wdetJ = w * detJ
        dim = mesh.dim
        self.edofs = (mesh.elements[:, :, None] * dim + np.arange(dim)).reshape(mesh.nelems, -1)
        nd = self.edofs.shape[1]
        rows = np.repeat(self.edofs, nd, axis=1).ravel()
        cols = np.tile(self.edofs, (1, nd)).ravel()
        key = rows * mesh.ndof + cols
        uniq, self._scatter = np.unique(key, return_inverse=True)
        self._indices = (uniq % mesh.ndof).astype(np.int32)
        self._indptr = np.searchsorted(uniq // mesh.ndof, np.arange(mesh.ndof + 1)).astype(np.int32)
        self.nnz = len(uniq)

    @property
    def volume(self) -> float:
        return float(self.wdetJ.sum())

    def _blocks(self):
        ne = self.mesh.nelems
        return [np.arange(s, min(s + self.block_size, ne)) for s in range(0, ne, self.block_size)]

    def element_arrays(self, u, need_K=True):
        x = self.mesh.nodes + np.asarray(u).reshape(-1, self.mesh.dim)
        xe = x[self.mesh.elements]

        def work(ids):
            return element_kernel(self.material, xe[ids], self.dNdX[ids], self.wdetJ[ids],
                                  need_K, element_ids=ids)

        blocks = self._blocks()
        if self.threads > 1 and len(blocks) > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                parts = list(pool.map(work, blocks))
        else:
            parts = [work(b) for b in blocks]
        f = np.concatenate([p[0] for p in parts])
        K = np.concatenate([p[1] for p in parts]) if need_K else None
        return f, K

    def assemble(self, u, f_ext=None, need_K=True, constrained=None) -> AssemblyResult:
        ndof = self.mesh.ndof
        fe, Ke = self.element_arrays(u, need_K)
        R = np.bincount(self.edofs.ravel(), weights=fe.ravel(), minlength=ndof)
        if f_ext is not None:
            R = R - f_ext
        K = None
        if need_K:
            data = np.bincount(self._scatter, weights=Ke.ravel(), minlength=self.nnz)
            K = sp.csr_matrix((data, self._indices.copy(), self._indptr.copy()), shape=(ndof, ndof))
        reactions = R[constrained] if constrained is not None else np.zeros(0)
        return AssemblyResult(K=K, R=R, reactions=reactions)

    def gauss_fields(self, u):
        """Per-element Gauss averages of max principal log strain, omega_iso, omega_vol."""
        x = self.mesh.nodes + np.asarray(u).reshape(-1, self.mesh.dim)
        F = np.einsum("eai,egaj->egij", x[self.mesh.elements], self.dNdX)
        spec = tl.jacobi_eigen(np.einsum("egik,egjk->egij", F, F))
        s = mat.PrincipalState.from_log(0.5 * np.log(spec.values))
        w_iso, w_vol = mat.log_strain_measures(s)
        wts = self.wdetJ / self.wdetJ.sum(axis=1, keepdims=True)
        avg = lambda a: np.sum(wts * a, axis=1)  # noqa: E731
        return {
            "max_principal_log_strain": avg(s.loglam[..., 0]),
            "omega_iso": avg(w_iso),
            "omega_vol": avg(w_vol),
        }


def assemble(mesh: Mesh, dofmap: DofMap, material, u, f_ext=None) -> AssemblyResult:
    """One-shot global assembly; reactions are ``R`` at constrained dofs."""
    return Assembler(mesh, material).assemble(u, f_ext=f_ext, constrained=dofmap.constrained)
