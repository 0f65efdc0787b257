"""Run a benchmark case end to end and write its curve, field and figure files."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from ..materials import MaterialParams
from ..solver import NewtonConfig, Problem, SolveReport, run_program
from . import output, plotting
from .cases import Case, CaseSpec, generate_case
from .mpoint import CurveRecord, material_point_uniaxial


@dataclass
class CaseResult:
    case: Case
    material: MaterialParams
    report: SolveReport
    curve: CurveRecord
    u: np.ndarray
    fields: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)


def _curve(case: Case, report: SolveReport, monitor) -> CurveRecord:
    x, r = report.curve()
    if case.spec.case == "cook2d":
        return CurveRecord(x, np.asarray(monitor), "load", "v_A",
                           tags={"label": case.spec.mesh_label}, extra={"reaction": r})
    if case.spec.case == "uniaxial_cube":
        stretch = 1.0 + x / case.spec.size
        return CurveRecord(x, r / case.area, "w", "nominal_stress",
                           tags={"label": case.spec.mesh_label},
                           extra={"stretch": stretch, "reaction": r})
    return CurveRecord(x, r, "prescribed", "reaction", tags={"label": case.spec.mesh_label},
                       extra={"monitor_displacement": np.asarray(monitor)})


def run_case(spec: CaseSpec, material: MaterialParams, cfg: NewtonConfig = NewtonConfig(),
             out_dir=None, write_fields: bool = True, plots: bool = True,
             threads: int | None = None, progress=None) -> CaseResult:
    """Solve a finite-element case; optionally write CSV, VTK and PNG files.

    Files are named ``<case>_<model>_<mesh>.{csv,vtk,png}`` plus a
    ``..._deformed.png`` view of the final state.
    """
    case = generate_case(spec)
    problem = Problem(case.mesh, case.dofmap, material, case.f_ext, threads=threads)
    monitor = []

    def on_step(step, u, rep):
        monitor.append(float(u[case.monitor_dof]))
        if progress is not None:
            progress(step, rep)

    report = run_program(problem, case.program, cfg, record_states=False, callback=on_step)
    curve = _curve(case, report, monitor)
    curve.tags["model"] = material.model
    u = report.u
    fields = problem.assembler.gauss_fields(u) if write_fields or plots else {}
    result = CaseResult(case, material, report, curve, u, fields)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        stem = os.path.join(out_dir, output.output_name(spec.case, material.model, spec.mesh_label, "")[:-1])
        names, data = curve.columns()
        output.write_csv(stem + ".csv", names, data)
        result.files["csv"] = stem + ".csv"
        if write_fields:
            output.emit_fields(stem + ".vtk", case.mesh, u, fields)
            result.files["vtk"] = stem + ".vtk"
        if plots:
            plotting.plot_curves(stem + ".png", [curve], case.xlabel, case.ylabel,
                                 title=f"{spec.case} / {material.model} / {spec.mesh_label}")
            plotting.plot_deformed(stem + "_deformed.png", case.mesh, u,
                                   fields.get("max_principal_log_strain"),
                                   label="max principal log strain")
            result.files["png"] = stem + ".png"
            result.files["deformed_png"] = stem + "_deformed.png"
    return result


def run_mpoint(materials, stretches, out_dir=None, plots: bool = True):
    """Material-point uniaxial curves for several materials; one CSV per model."""
    records = [material_point_uniaxial(p, stretches) for p in materials]
    files = {}
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        for p, rec in zip(materials, records):
            path = os.path.join(out_dir, output.output_name("mpoint", p.model, "point", "csv"))
            names, data = rec.columns()
            output.write_csv(path, names, data)
            files[p.model] = path
        if plots:
            path = os.path.join(out_dir, "mpoint_uniaxial.png")
            plotting.plot_curves(path, records, "axial stretch", "S1 / mu",
                                 title="uniaxial tension / compression")
            files["png"] = path
    return records, files


def format_report(result: CaseResult) -> str:
    """Human-readable per-step record: iterations, cuts, residuals, resultant."""
    spec, rep = result.case.spec, result.report
    lines = [
        f"case: {spec.case}",
        f"model: {result.material.model}",
        f"material: mu={result.material.mu:g} kappa={result.material.kappa:g} "
        f"k={result.material.k:g} khat={result.material.khat:g} jm={result.material.jm:g}",
        f"mesh: {spec.mesh_label} elements={result.case.mesh.nelems} "
        f"nodes={result.case.mesh.nnodes} dofs={result.case.mesh.ndof}",
        f"steps: {spec.steps} target={spec.target:g}",
        "",
        f"{'step':>5} {'abscissa':>14} {'iters':>5} {'cuts':>4} {'final_residual':>15} {'resultant':>16}",
    ]
    for s, (x, r, _) in zip(rep.steps, rep.trajectory):
        lines.append(f"{s.step:5d} {x:14.6g} {s.iterations:5d} {s.cuts:4d} "
                     f"{s.residuals[-1]:15.3e} {r:16.8g}")
    lines += [
        "",
        f"max iterations per step: {rep.max_iterations}",
        f"wall time: {rep.wall_time:.2f} s",
        f"status: {'ABORTED - ' + rep.message if rep.aborted else 'completed'}",
    ]
    for k, v in result.files.items():
        lines.append(f"output {k}: {v}")
    return "\n".join(lines) + "\n"
