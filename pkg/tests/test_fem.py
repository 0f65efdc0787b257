"""Q4 / H8 elements, kinematics, meshes and global assembly."""

from __future__ import annotations

import numpy as np
import pytest

from hencky_fem import fem
from hencky_fem import materials as mat
from hencky_fem import tensorlab as tl
from hencky_fem.bench.cases import structured_grid
from hencky_fem.errors import ConfigError, DegenerateElementError, InvertedElementError
from hencky_fem.verification import all_models, check_patch_test, check_rigid_rotation

EXP3 = mat.MaterialParams.reference("exp_hencky")
EXP2 = mat.MaterialParams.reference("exp_hencky", dim=2)
KINDS = ["Q4", "H8"]
# planar elements only carry the models defined in 2D
ELEMENT_MODELS = [("H8", m) for m in mat.MODELS] + [("Q4", m) for m in mat.PLANAR_MODELS]


def _unit_element(kind):
    return 0.5 * (fem.corners(kind) + 1.0)


def _distorted(kind, rng, amp=0.1):
    return _unit_element(kind) + amp * rng.uniform(-1, 1, size=fem.corners(kind).shape)


def _dense_assembly(mesh, material, u):
    """Element-by-element accumulation into dense arrays (assembly oracle)."""
    dim = mesh.dim
    K = np.zeros((mesh.ndof, mesh.ndof))
    R = np.zeros(mesh.ndof)
    U = u.reshape(-1, dim)
    for conn in mesh.elements:
        f, k = fem.element_force_and_stiffness(material, mesh.nodes[conn], U[conn], mesh.kind)
        dofs = (conn[:, None] * dim + np.arange(dim)).ravel()
        R[dofs] += f
        K[np.ix_(dofs, dofs)] += k
    return K, R


class TestShapeFunctions:
    @pytest.mark.parametrize("kind", KINDS)
    def test_partition_of_unity(self, kind):
        rng = np.random.default_rng(0)
        dim = fem.ELEMENT_KINDS[kind][0]
        N, dN = fem.shape_functions(kind, rng.uniform(-1, 1, size=(20, dim)))
        np.testing.assert_allclose(N.sum(axis=1), 1.0, rtol=1e-15)
        np.testing.assert_allclose(dN.sum(axis=1), 0.0, atol=1e-15)

    @pytest.mark.parametrize("kind", KINDS)
    def test_kronecker_delta_at_corners(self, kind):
        N, _ = fem.shape_functions(kind, fem.corners(kind))
        np.testing.assert_array_equal(N, np.eye(len(N)))

    @pytest.mark.parametrize("kind", KINDS)
    def test_gradient_matches_fd(self, kind):
        rng = np.random.default_rng(1)
        dim = fem.ELEMENT_KINDS[kind][0]
        z = rng.uniform(-1, 1, size=dim)
        _, dN = fem.shape_functions(kind, z)
        h = 1e-6
        for d in range(dim):
            e = np.zeros(dim)
            e[d] = h
            fd = (fem.shape_functions(kind, z + e)[0] - fem.shape_functions(kind, z - e)[0]) / (2 * h)
            np.testing.assert_allclose(dN[:, d], fd, atol=1e-10)

    @pytest.mark.parametrize("kind", KINDS)
    def test_gauss_rule(self, kind):
        pts, w = fem.gauss_rule(kind)
        dim = fem.ELEMENT_KINDS[kind][0]
        assert len(pts) == 2**dim
        np.testing.assert_allclose(w.sum(), 2.0**dim)
        # integrates a tensor-product cubic exactly
        np.testing.assert_allclose(np.sum(w * np.prod(pts**2 + pts**3, axis=1)), (2.0 / 3.0) ** dim,
                                   rtol=1e-14)


class TestKinematics:
    def test_deformation_gradient_matches_isoparametric_map_fd(self):
        rng = np.random.default_rng(2)
        X = _unit_element("H8")
        u = 0.1 * rng.normal(size=X.shape)
        z = rng.uniform(-1, 1, size=3)
        gp = fem.deformation_gradient(X, u, z)
        h = 1e-6
        dx = np.empty((3, 3))
        dX = np.empty((3, 3))
        for d in range(3):
            e = np.zeros(3)
            e[d] = h
            Np, _ = fem.shape_functions("H8", z + e)
            Nm, _ = fem.shape_functions("H8", z - e)
            dx[:, d] = (Np - Nm) @ (X + u) / (2 * h)
            dX[:, d] = (Np - Nm) @ X / (2 * h)
        np.testing.assert_allclose(gp.F, dx @ np.linalg.inv(dX), atol=1e-8)
        np.testing.assert_allclose(gp.B, gp.F @ gp.F.T, rtol=1e-14)

    def test_homogeneous_deformation_is_exact(self):
        rng = np.random.default_rng(3)
        X = _distorted("H8", rng)
        F0 = np.eye(3) + 0.2 * rng.normal(size=(3, 3))
        gp = fem.deformation_gradient(X, X @ F0.T - X, rng.uniform(-1, 1, size=3))
        np.testing.assert_allclose(gp.F, F0, atol=1e-14)

    def test_inverted_element(self):
        X = _unit_element("Q4")
        u = np.zeros_like(X)
        u[:, 0] = -2.0 * X[:, 0]
        with pytest.raises(InvertedElementError):
            fem.deformation_gradient(X, u, [0.0, 0.0])

    def test_degenerate_reference(self):
        X = _unit_element("Q4")
        X[2] = X[0]
        with pytest.raises(DegenerateElementError):
            fem.reference_gradients(X, "Q4", fem.gauss_rule("Q4")[0])

    def test_strain_operator_shear_factor(self):
        grad = np.array([[1.0, 2.0], [3.0, 4.0]])
        B = fem.strain_operator(grad)
        # u = (0, v) at node 0 only: eps_12 row picks d(v)/dx
        np.testing.assert_array_equal(B, [[1, 0, 3, 0], [0, 2, 0, 4], [2, 1, 4, 3]])

    def test_strain_operator_matches_symmetric_gradient(self):
        rng = np.random.default_rng(4)
        grad = rng.normal(size=(8, 3))
        du = rng.normal(size=(8, 3))
        L = du.T @ grad
        eps = tl.sym_to_voigt(tl.sym(L)) * [1, 1, 1, 2, 2, 2]
        np.testing.assert_allclose(fem.strain_operator(grad) @ du.ravel(), eps, atol=1e-14)


class TestElement:
    @pytest.mark.parametrize("kind, model", ELEMENT_MODELS)
    def test_stiffness_matches_force_fd(self, kind, model):
        dim = fem.ELEMENT_KINDS[kind][0]
        p = mat.MaterialParams.reference(model, dim=dim)
        rng = np.random.default_rng(5)
        X = _distorted(kind, rng)
        u = 0.05 * rng.normal(size=X.shape)
        _, K = fem.element_force_and_stiffness(p, X, u)
        h = 1e-7
        fd = np.empty_like(K)
        flat = u.ravel()
        for j in range(flat.size):
            e = np.zeros_like(flat)
            e[j] = h
            fp, _ = fem.element_force_and_stiffness(p, X, (flat + e).reshape(X.shape))
            fm, _ = fem.element_force_and_stiffness(p, X, (flat - e).reshape(X.shape))
            fd[:, j] = (fp - fm) / (2 * h)
        assert np.linalg.norm(K - fd) <= 1e-5 * np.linalg.norm(K)

    @pytest.mark.parametrize("kind", KINDS)
    def test_symmetric_tangent(self, kind):
        rng = np.random.default_rng(6)
        p = EXP2 if kind == "Q4" else EXP3
        X = _distorted(kind, rng)
        _, K = fem.element_force_and_stiffness(p, X, 0.1 * rng.normal(size=X.shape))
        np.testing.assert_allclose(K, K.T, atol=1e-12 * np.abs(K).max())

    @pytest.mark.parametrize("kind", KINDS)
    def test_zero_force_in_reference_state(self, kind):
        p = EXP2 if kind == "Q4" else EXP3
        X = _unit_element(kind)
        f, K = fem.element_force_and_stiffness(p, X, np.zeros_like(X))
        np.testing.assert_allclose(f, 0.0, atol=1e-15)
        # rigid modes: 3 in 2D, 6 in 3D
        nzero = np.sum(np.abs(np.linalg.eigvalsh(K)) < 1e-10 * np.abs(K).max())
        assert nzero == (3 if kind == "Q4" else 6)

    def test_inverted_element_reports_id(self):
        X = _unit_element("Q4")
        u = np.zeros_like(X)
        u[:, 0] = -2.0 * X[:, 0]
        pts, w = fem.gauss_rule("Q4")
        dNdX, detJ = fem.reference_gradients(X[None], "Q4", pts)
        with pytest.raises(InvertedElementError) as info:
            fem.element_kernel(EXP2, (X + u)[None], dNdX, (w * detJ), element_ids=np.array([7]))
        assert info.value.elements == (7,)


class TestPatchAndRotation:
    def test_patch_test(self):
        for c in check_patch_test():
            assert c.passed, c.line()
            assert c.value <= 1e-12

    def test_rigid_rotation(self):
        for c in check_rigid_rotation():
            assert c.passed, c.line()


class TestMesh:
    def test_counts(self):
        nodes, elems, _ = structured_grid((1.0, 1.0, 1.0), (2, 2, 2))
        m = fem.Mesh(nodes, elems, "H8")
        assert m.counts() == {"elements": 8, "nodes": 27, "dofs": 81}

    def test_invalid(self):
        with pytest.raises(ConfigError):
            fem.Mesh(np.zeros((4, 2)), np.array([[0, 1, 2, 4]]), "Q4")
        with pytest.raises(ConfigError):
            fem.Mesh(np.zeros((4, 3)), np.array([[0, 1, 2, 3]]), "Q4")
        with pytest.raises(ConfigError):
            fem.Mesh(np.zeros((4, 2)), np.array([[0, 1, 2, 3]]), "T3")

    def test_round_trip(self, tmp_path):
        nodes, elems, _ = structured_grid((2.0, 1.0), (3, 2))
        m = fem.Mesh(nodes, elems, "Q4")
        fem.write_mesh(tmp_path / "m.txt", m)
        m2 = fem.read_mesh(tmp_path / "m.txt")
        np.testing.assert_array_equal(m2.nodes, m.nodes)
        np.testing.assert_array_equal(m2.elements, m.elements)
        assert m2.kind == "Q4"

    def test_malformed_file(self, tmp_path):
        (tmp_path / "bad.txt").write_text("2 4 1 Q4\n0 0\n1 0\n")
        with pytest.raises(ConfigError):
            fem.read_mesh(tmp_path / "bad.txt")

    def test_fix_orientation(self):
        nodes = _unit_element("Q4")
        fixed = fem.fix_orientation(nodes, np.array([[0, 3, 2, 1]]), "Q4")
        np.testing.assert_array_equal(fixed, [[0, 1, 2, 3]])


class TestDofMap:
    def test_free_and_constrained(self):
        dm = fem.DofMap(6, 2, [4, 0, 4])
        np.testing.assert_array_equal(dm.constrained, [0, 4])
        np.testing.assert_array_equal(dm.free, [1, 2, 3, 5])
        np.testing.assert_array_equal(dm.node_dofs([2]), [4, 5])
        np.testing.assert_array_equal(dm.node_dofs([0, 2], component=1), [1, 5])
        np.testing.assert_array_equal(dm.position([4]), [1])

    def test_errors(self):
        with pytest.raises(ConfigError):
            fem.DofMap(4, 2, [4])
        with pytest.raises(ConfigError):
            fem.DofMap(4, 2, [0]).position([1])


class TestAssembly:
    def test_two_stacked_hexes_dense_oracle(self):
        nodes, elems, _ = structured_grid((1.0, 1.0, 2.0), (1, 1, 2))
        mesh = fem.Mesh(nodes, elems, "H8")
        rng = np.random.default_rng(7)
        u = 0.05 * rng.normal(size=mesh.ndof)
        res = fem.Assembler(mesh, EXP3).assemble(u)
        K, R = _dense_assembly(mesh, EXP3, u)
        np.testing.assert_allclose(res.K.toarray(), K, rtol=1e-13, atol=1e-13 * np.abs(K).max())
        np.testing.assert_allclose(res.R, R, rtol=1e-13, atol=1e-14)
        # shared-face dofs receive both contributions
        shared = np.nonzero(np.isclose(nodes[:, 2], 1.0))[0]
        assert np.all(np.isin(shared, elems[0])) and np.all(np.isin(shared, elems[1]))

    def test_quad_mesh_dense_oracle(self):
        nodes, elems, _ = structured_grid((2.0, 1.0), (3, 2))
        mesh = fem.Mesh(nodes, elems, "Q4")
        rng = np.random.default_rng(8)
        u = 0.05 * rng.normal(size=mesh.ndof)
        res = fem.Assembler(mesh, EXP2).assemble(u)
        K, R = _dense_assembly(mesh, EXP2, u)
        np.testing.assert_allclose(res.K.toarray(), K, atol=1e-13 * np.abs(K).max())
        np.testing.assert_allclose(res.R, R, atol=1e-14)

    def test_threads_bitwise_identical(self):
        nodes, elems, _ = structured_grid((1.0, 1.0, 1.0), (4, 4, 4))
        mesh = fem.Mesh(nodes, elems, "H8")
        u = 0.02 * np.random.default_rng(9).normal(size=mesh.ndof)
        a1 = fem.Assembler(mesh, EXP3, threads=1)
        a4 = fem.Assembler(mesh, EXP3, threads=4)
        a1.block_size = a4.block_size = 7
        r1, r4 = a1.assemble(u), a4.assemble(u)
        np.testing.assert_array_equal(r1.R, r4.R)
        np.testing.assert_array_equal(r1.K.data, r4.K.data)

    def test_thread_count_env(self, monkeypatch):
        monkeypatch.setenv("HENCKY_FEM_THREADS", "3")
        assert fem.thread_count() == 3
        monkeypatch.setenv("HENCKY_FEM_THREADS", "zero")
        assert fem.thread_count() == 1

    def test_external_load_and_reactions(self):
        nodes, elems, _ = structured_grid((1.0, 1.0), (1, 1))
        mesh = fem.Mesh(nodes, elems, "Q4")
        dm = fem.DofMap.for_mesh(mesh, [0, 1])
        f_ext = np.arange(8.0)
        res = fem.assemble(mesh, dm, EXP2, np.zeros(8), f_ext)
        np.testing.assert_allclose(res.R, -f_ext, atol=1e-15)
        np.testing.assert_allclose(res.reactions, [0.0, -1.0], atol=1e-15)

    def test_global_equilibrium_of_internal_forces(self):
        nodes, elems, _ = structured_grid((1.0, 1.0, 1.0), (2, 2, 2))
        mesh = fem.Mesh(nodes, elems, "H8")
        u = 0.05 * np.random.default_rng(10).normal(size=mesh.ndof)
        R = fem.Assembler(mesh, EXP3).assemble(u, need_K=False).R
        np.testing.assert_allclose(R.reshape(-1, 3).sum(axis=0), 0.0, atol=1e-13)

    def test_material_dimension_mismatch(self):
        nodes, elems, _ = structured_grid((1.0, 1.0), (1, 1))
        with pytest.raises(ConfigError):
            fem.Assembler(fem.Mesh(nodes, elems, "Q4"), EXP3)

    def test_volume_and_fields(self):
        nodes, elems, _ = structured_grid((2.0, 1.0, 1.0), (2, 1, 1))
        mesh = fem.Mesh(nodes, elems, "H8")
        a = fem.Assembler(mesh, EXP3)
        np.testing.assert_allclose(a.volume, 2.0)
        u = np.zeros_like(nodes)
        u[:, 0] = nodes[:, 0]  # stretch 2 along x
        fields = a.gauss_fields(u.ravel())
        np.testing.assert_allclose(fields["max_principal_log_strain"], np.log(2.0), rtol=1e-14)
        np.testing.assert_allclose(fields["omega_vol"], np.log(2.0), rtol=1e-14)
        np.testing.assert_allclose(fields["omega_iso"], np.log(2.0) * np.sqrt(6.0) / 3.0, rtol=1e-14)


@pytest.mark.parametrize("p", all_models(), ids=[p.model for p in all_models()])
def test_assembly_tangent_matches_global_fd(p):
    """Directional FD of the assembled residual on a small distorted mesh."""
    nodes, elems, _ = structured_grid((1.0, 1.0, 1.0), (2, 1, 1))
    rng = np.random.default_rng(11)
    nodes = nodes + 0.05 * rng.uniform(-1, 1, size=nodes.shape)
    mesh = fem.Mesh(nodes, elems, "H8")
    a = fem.Assembler(mesh, p)
    u = 0.05 * rng.normal(size=mesh.ndof)
    d = rng.normal(size=mesh.ndof)
    h = 1e-7
    fd = (a.assemble(u + h * d, need_K=False).R - a.assemble(u - h * d, need_K=False).R) / (2 * h)
    Kd = a.assemble(u).K @ d
    assert np.linalg.norm(Kd - fd) <= 1e-6 * np.linalg.norm(Kd)
