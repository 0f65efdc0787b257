"""Benchmark cases, material-point driver, calibration, output files and runner."""

from __future__ import annotations

from math import exp, log

import numpy as np
import pytest

from hencky_fem import materials as mat
from hencky_fem.bench import output, plotting
from hencky_fem.bench.calibration import fit_uniaxial, uniaxial_incompressible_stress
from hencky_fem.bench.cases import (
    ARC_MESHES,
    CaseSpec,
    default_material,
    generate_case,
    structured_grid,
)
from hencky_fem.bench.mpoint import (
    CurveRecord,
    material_point_uniaxial,
    quad_hencky_lateral,
    solve_lateral,
)
from hencky_fem.bench.runner import format_report, run_case, run_mpoint
from hencky_fem.errors import ConfigError, FitFailureError, ParameterError
from hencky_fem.fem import Mesh
from hencky_fem.verification import MESH_COUNTS, all_models, uniaxial_fe_curve


class TestCaseSpec:
    def test_defaults(self):
        spec = CaseSpec("uniaxial_cube")
        assert (spec.density, spec.steps, spec.target) == (4, 70, 70.0)
        assert spec.mesh_label == "4x4x4"
        assert CaseSpec("arc2d").mesh_label == "mesh1"
        assert CaseSpec("cook2d", 8).mesh_label == "8x8"

    def test_footing_programs(self):
        s3, s2 = CaseSpec("footing3d"), CaseSpec("footing2d")
        assert (s3.target, s3.steps) == (-12.0, 12)
        assert (s2.target, s2.steps) == (-12.0, 24)

    def test_unknown_case(self):
        with pytest.raises(ConfigError):
            CaseSpec("tube")

    def test_invalid_steps(self):
        with pytest.raises(ConfigError):
            CaseSpec("uniaxial_cube", steps=-2)


class TestMeshes:
    @pytest.mark.parametrize("case_density, counts", MESH_COUNTS)
    def test_quoted_counts(self, case_density, counts):
        m = generate_case(CaseSpec(*case_density)).mesh
        assert (m.nelems, m.nnodes, m.ndof) == counts

    def test_arc_meshes_have_even_circumferential_counts(self):
        for nr, nc in ARC_MESHES.values():
            assert nc % 2 == 0

    def test_structured_grid_ordering(self):
        nodes, elems, kind = structured_grid((2.0, 1.0), (2, 1))
        assert kind == "Q4"
        np.testing.assert_array_equal(nodes[:3], [[0, 0], [1, 0], [2, 0]])
        np.testing.assert_array_equal(elems[0], [0, 1, 4, 3])

    def test_cook_geometry_and_load(self):
        case = generate_case(CaseSpec("cook2d", 4))
        nodes = case.mesh.nodes
        np.testing.assert_allclose(nodes.min(axis=0), [0.0, 0.0])
        np.testing.assert_allclose(nodes.max(axis=0), [48.0, 60.0])
        # unit total shear on the free edge, vertical only
        np.testing.assert_allclose(case.f_ext.reshape(-1, 2).sum(axis=0), [0.0, 1.0], atol=1e-15)
        a = case.node_sets["A"][0]
        np.testing.assert_allclose(nodes[a], [48.0, 52.0])
        assert case.program.load_scale[-1] == 200.0

    def test_cook_needs_even_density(self):
        with pytest.raises(ConfigError):
            generate_case(CaseSpec("cook2d", 5))

    def test_arc_geometry(self):
        case = generate_case(CaseSpec("arc2d", 1))
        r = np.linalg.norm(case.mesh.nodes, axis=1)
        np.testing.assert_allclose([r.min(), r.max()], [100.0, 104.0])
        crown = case.node_sets["crown"][0]
        np.testing.assert_allclose(case.mesh.nodes[crown], [0.0, 104.0], atol=1e-12)
        # both ends clamped in two directions, plus the driven crown dof
        assert len(case.dofmap.constrained) == 2 * len(case.node_sets["ends"]) + 1

    def test_footing3d_loaded_region(self):
        case = generate_case(CaseSpec("footing3d", 4))
        loaded = case.mesh.nodes[case.node_sets["loaded"]]
        assert np.all(loaded[:, 0] <= 10.0) and np.all(loaded[:, 2] == 20.0)
        assert len(loaded) == 3 * 5

    def test_cube_program(self):
        case = generate_case(CaseSpec("uniaxial_cube", 2, steps=4, target=8.0))
        np.testing.assert_allclose(case.program.abscissa, [2, 4, 6, 8])
        assert case.area == 400.0

    def test_material_for_case(self):
        assert default_material(CaseSpec("cook2d")).dim == 2
        assert default_material(CaseSpec("cook2d"), kappa=50.0).kappa == 50.0
        with pytest.raises(ParameterError):
            default_material(CaseSpec("arc2d"), "gent")


class TestMaterialPoint:
    def test_quad_hencky_closed_form(self):
        p = mat.MaterialParams.reference("quad_hencky")
        for lam in (0.3, 0.8, 1.5, 4.0):
            x, _ = solve_lateral(p, lam)
            np.testing.assert_allclose(np.exp(x), quad_hencky_lateral(p, lam), rtol=1e-12)

    def test_quad_hencky_lateral_condition(self):
        """2 mu dev(log V)_1 + kappa tr(log V) = 0 for the lateral direction."""
        p = mat.MaterialParams.reference("quad_hencky")
        a = log(2.5)
        x = log(quad_hencky_lateral(p, 2.5))
        tr = 2 * x + a
        assert abs(2.0 * (x - tr / 3.0) + 4.7 * tr) < 1e-14

    def test_zero_at_reference(self):
        rec = material_point_uniaxial(mat.MaterialParams.reference("exp_hencky"), [1.0])
        assert rec.ordinate[0] == 0.0

    def test_lateral_stress_vanishes(self):
        p = mat.MaterialParams.reference("gent")
        for lam in (0.25, 2.0, 4.5):
            x, tau = solve_lateral(p, lam)
            assert abs(tau[0]) < 1e-11

    def test_planar_driver(self):
        p = mat.MaterialParams.reference("exp_hencky", dim=2)
        rec = material_point_uniaxial(p, [0.5, 1.0, 2.0])
        assert rec.ordinate[0] < 0 < rec.ordinate[2]

    def test_range_form_and_columns(self):
        rec = material_point_uniaxial(mat.MaterialParams.reference("neo_hooke"), (0.5, 2.0), steps=3)
        np.testing.assert_allclose(rec.abscissa, [0.5, 1.0, 1.5, 2.0])
        names, data = rec.columns()
        assert names == ["stretch", "S1_axial_over_mu", "lateral_stretch"]
        assert data.shape == (4, 3)

    def test_invalid_stretch(self):
        with pytest.raises(ParameterError):
            material_point_uniaxial(mat.MaterialParams.reference("exp_hencky"), [0.0, 1.0])

    def test_single_h8_matches_driver(self):
        p = mat.MaterialParams.reference("exp_hencky")
        fe = uniaxial_fe_curve(p, density=1)
        mp = material_point_uniaxial(p, [0.25, 0.5, 2.0, 3.0, 4.5]).ordinate
        np.testing.assert_allclose(fe, mp, rtol=1e-6)

    def test_ordering_at_large_stretch(self):
        s = {p.model: material_point_uniaxial(p, [4.5]).ordinate[0] for p in all_models()}
        assert s["exp_hencky"] > s["gent"] > s["neo_hooke"] > s["quad_hencky"]


class TestCalibration:
    def test_hand_value(self):
        ln2 = log(2.0)
        ref = 3 * 0.612 * exp(1.5 * 1.173 * ln2**2) * ln2 / 2
        np.testing.assert_allclose(uniaxial_incompressible_stress(0.612, 1.173, 2.0), ref, rtol=1e-15)
        np.testing.assert_allclose(ref, 1.4818425, rtol=1e-7)

    def test_near_incompressible_driver(self):
        mu, k = 0.612, 1.173
        p = mat.MaterialParams("exp_hencky", mu, 1e4 * mu, k=k, khat=1.5 * k)
        s = material_point_uniaxial(p, [2.0]).ordinate[0] * mu
        assert abs(s / uniaxial_incompressible_stress(mu, k, 2.0) - 1.0) < 5e-3

    def test_recovers_parameters(self):
        lam = np.array([0.5, 0.8, 1.2, 1.5, 2.0, 2.5, 3.0])
        fit = fit_uniaxial(lam, uniaxial_incompressible_stress(0.612, 1.173, lam))
        np.testing.assert_allclose([fit.mu, fit.k], [0.612, 1.173], rtol=1e-8)
        assert fit.residual < 1e-20

    def test_noisy_data(self):
        rng = np.random.default_rng(0)
        lam = np.linspace(0.6, 3.0, 30)
        y = uniaxial_incompressible_stress(1.0, 0.8, lam) * (1 + 1e-3 * rng.normal(size=30))
        fit = fit_uniaxial(lam, y)
        np.testing.assert_allclose([fit.mu, fit.k], [1.0, 0.8], rtol=2e-2)

    @pytest.mark.parametrize("lam, y", [([2.0], [1.0]), ([1.0, 1.0], [0.0, 0.0]), ([-1.0, 2.0], [1.0, 1.0]),
                                        ([0.5, 2.0], [1.0, np.nan])])
    def test_failures(self, lam, y):
        with pytest.raises(FitFailureError):
            fit_uniaxial(lam, y)


class TestOutput:
    def test_csv_round_trip(self, tmp_path):
        data = np.array([[1.0, 1 / 3], [2.0, np.pi]])
        output.write_csv(tmp_path / "a.csv", ["x", "y"], data)
        header, back = output.read_csv(tmp_path / "a.csv")
        assert header == ["x", "y"]
        np.testing.assert_array_equal(back, data)

    def test_empty_records_header_only(self, tmp_path):
        output.emit_curves(tmp_path / "e.csv", [])
        assert (tmp_path / "e.csv").read_text() == "curve,x,y\n"

    def test_emit_curves(self, tmp_path):
        recs = [CurveRecord(np.arange(3.0), np.arange(3.0) ** 2), CurveRecord(np.ones(2), np.zeros(2))]
        output.emit_curves(tmp_path / "c.csv", recs)
        header, data = output.read_csv(tmp_path / "c.csv")
        assert header == ["curve", "x", "y"]
        np.testing.assert_array_equal(data[:, 0], [0, 0, 0, 1, 1])

    def test_single_node_vtk(self, tmp_path):
        mesh = Mesh(np.array([[1.5, 2.5]]), np.zeros((0, 4), dtype=int), "Q4")
        output.emit_fields(tmp_path / "n.vtk", mesh, np.array([0.25, -0.5]))
        vtk = output.read_vtk(tmp_path / "n.vtk")
        np.testing.assert_array_equal(vtk["points"], [[1.5, 2.5, 0.0]])
        np.testing.assert_array_equal(vtk["displacement"], [[0.25, -0.5, 0.0]])

    def test_vtk_round_trip(self, tmp_path):
        nodes, elems, kind = structured_grid((1.0, 1.0, 1.0), (2, 1, 1))
        mesh = Mesh(nodes, elems, kind)
        u = np.zeros(mesh.ndof)
        cells = {"omega_iso": np.array([0.1, 0.2])}
        output.emit_fields(tmp_path / "m.vtk", mesh, u, cells)
        vtk = output.read_vtk(tmp_path / "m.vtk")
        np.testing.assert_array_equal(vtk["cells"], elems)
        np.testing.assert_array_equal(vtk["cell_types"], [12, 12])
        np.testing.assert_array_equal(vtk["displacement"], 0.0)
        np.testing.assert_array_equal(vtk["cell_data"]["omega_iso"], [0.1, 0.2])

    def test_unwritable(self, tmp_path):
        with pytest.raises(output.OutputError):
            output.write_csv(tmp_path / "missing" / "a.csv", ["x"], np.zeros((1, 1)))

    def test_name(self):
        assert output.output_name("cook2d", "exp_hencky", "8x8", "csv") == "cook2d_exp_hencky_8x8.csv"


class TestPlotting:
    def test_curves_and_deformed(self, tmp_path):
        rec = CurveRecord(np.linspace(0, 1, 5), np.linspace(0, 2, 5), tags={"label": "a"})
        plotting.plot_curves(tmp_path / "c.png", [rec], "x", "y", "t")
        nodes, elems, kind = structured_grid((1.0, 1.0), (2, 2))
        mesh = Mesh(nodes, elems, kind)
        plotting.plot_deformed(tmp_path / "d2.png", mesh, np.zeros(mesh.ndof), np.arange(4.0), "v")
        nodes, elems, kind = structured_grid((1.0, 1.0, 1.0), (1, 1, 1))
        mesh = Mesh(nodes, elems, kind)
        plotting.plot_deformed(tmp_path / "d3.png", mesh, np.zeros(mesh.ndof), np.ones(1), "v")
        for name in ("c.png", "d2.png", "d3.png"):
            assert (tmp_path / name).read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


class TestRunner:
    def test_run_case_writes_files(self, tmp_path):
        spec = CaseSpec("uniaxial_cube", 2, steps=3, target=3.0)
        res = run_case(spec, default_material(spec), out_dir=tmp_path)
        assert set(res.files) == {"csv", "vtk", "png", "deformed_png"}
        header, data = output.read_csv(res.files["csv"])
        assert header == ["w", "nominal_stress", "stretch", "reaction"]
        np.testing.assert_allclose(data[:, 0], [1, 2, 3])
        np.testing.assert_allclose(data[:, 1] * 400.0, data[:, 3])
        vtk = output.read_vtk(res.files["vtk"])
        assert set(vtk["cell_data"]) == set(output.CELL_FIELDS)
        report = format_report(res)
        assert "max iterations per step" in report and "completed" in report

    def test_cook_curve(self):
        spec = CaseSpec("cook2d", 2, steps=2, target=20.0)
        res = run_case(spec, default_material(spec), plots=False, write_fields=False)
        assert res.curve.xname == "load" and res.curve.yname == "v_A"
        assert np.all(np.diff(res.curve.ordinate) > 0)
        # the clamped edge carries the full applied load
        np.testing.assert_allclose(res.curve.extra["reaction"], -res.curve.abscissa, rtol=1e-8)

    def test_run_mpoint(self, tmp_path):
        ps = all_models()
        records, files = run_mpoint(ps, np.linspace(0.5, 2.0, 4), out_dir=tmp_path)
        assert len(records) == 4
        assert set(files) == {p.model for p in ps} | {"png"}
