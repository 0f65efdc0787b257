"""Command-line front end.

Exit codes: 0 success, 1 configuration/parameter error, 2 non-convergence or
aborted run, 3 verification failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import verification
from .bench import output
from .bench.calibration import fit_uniaxial
from .bench.cases import generate_case
from .bench.runner import format_report, run_case, run_mpoint
from .config import RunConfig, dump_config, load_config
from .errors import ConfigError, FitFailureError, NonConvergenceError, ParameterError
from .materials import MODELS, MaterialParams

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGENCE, EXIT_VERIFY = 0, 1, 2, 3

_FLAG_KEYS = ("case", "model", "mu", "kappa", "k", "khat", "jm", "mesh_density", "steps",
              "target", "out", "stretch_min", "stretch_max")


def _add_run_flags(p: argparse.ArgumentParser, with_config: bool = True) -> None:
    if with_config:
        p.add_argument("config", nargs="?", help="key = value configuration file")
    p.add_argument("--case", help="uniaxial_cube, footing3d, arc2d, cook2d, footing2d or mpoint")
    p.add_argument("--model", help="exp_hencky, quad_hencky, neo_hooke or gent ('all' for mpoint)")
    p.add_argument("--mu", type=float, help="shear modulus [MPa]")
    p.add_argument("--kappa", type=float, help="bulk modulus [MPa]")
    p.add_argument("--k", type=float, help="isochoric exponent (exp_hencky)")
    p.add_argument("--khat", type=float, help="volumetric exponent (exp_hencky)")
    p.add_argument("--jm", type=float, help="limiting extensibility (gent)")
    p.add_argument("--mesh-density", dest="mesh_density", type=int, help="elements per edge / arc mesh id")
    p.add_argument("--steps", type=int, help="number of load increments")
    p.add_argument("--target", type=float, help="final prescribed displacement [mm] or load [N]")
    p.add_argument("--out", help="output directory")
    p.add_argument("--stretch-min", dest="stretch_min", type=float, help="mpoint: smallest stretch")
    p.add_argument("--stretch-max", dest="stretch_max", type=float, help="mpoint: largest stretch")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hencky-fem", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_flags(sub.add_parser("run", help="run a finite-element benchmark case"))
    mp = sub.add_parser("mpoint", help="material-point uniaxial stress-stretch curves")
    _add_run_flags(mp)
    fit = sub.add_parser("fit", help="fit (mu, k) of the incompressible uniaxial law to CSV data")
    fit.add_argument("csv", help="CSV with a header; first column stretch, second nominal stress")
    fit.add_argument("--out", help="write fit_report.txt into this directory")
    ver = sub.add_parser("verify", help="run the oracle-based consistency checks")
    ver.add_argument("--quick", action="store_true", help="smaller random samples and meshes")
    ver.add_argument("--benchmarks", action="store_true",
                     help="also run the structural benchmarks (several minutes)")
    ver.add_argument("--out", help="write verify_report.txt into this directory")
    _add_run_flags(sub.add_parser("mesh-info", help="print element/node/dof counts of a case"))
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    model = getattr(args, "model", None)
    overrides = {k: getattr(args, k, None) for k in _FLAG_KEYS}
    if model == "all":
        overrides["model"] = None
    return cfg.with_(**overrides)


def _write(path, text):
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from exc


def cmd_run(args) -> int:
    cfg = resolve_config(args)
    if cfg.case == "mpoint":
        return cmd_mpoint(args, cfg)
    spec = cfg.case_spec()
    material = cfg.material()
    os.makedirs(cfg.out, exist_ok=True)
    _write(os.path.join(cfg.out, "config.txt"), dump_config(cfg))

    def progress(step, rep):
        s = rep.steps[-1]
        print(f"step {step}/{spec.steps}: {s.iterations} iterations, resultant {s.resultant:.8g}",
              flush=True)

    result = run_case(spec, material, cfg.newton(), out_dir=cfg.out, write_fields=cfg.vtk,
                      plots=cfg.plots, progress=progress)
    report = format_report(result)
    _write(os.path.join(cfg.out, "report.txt"), report)
    print(report, end="")
    return EXIT_NONCONVERGENCE if result.report.aborted else EXIT_OK


def cmd_mpoint(args, cfg: RunConfig | None = None) -> int:
    cfg = cfg or resolve_config(args)
    models = MODELS if getattr(args, "model", None) in (None, "all") else (cfg.model,)
    materials = []
    for m in models:
        base = cfg.with_(model=m)
        materials.append(base.material() if m == cfg.model else MaterialParams.reference(m, mu=cfg.mu))
    steps = cfg.steps or 85
    stretches = np.linspace(cfg.stretch_min, cfg.stretch_max, steps + 1)
    records, files = run_mpoint(materials, stretches, out_dir=cfg.out, plots=cfg.plots)
    lines = ["material-point uniaxial stress", f"stretches: {cfg.stretch_min:g} .. {cfg.stretch_max:g} "
             f"({steps} increments)", ""]
    for p, rec in zip(materials, records):
        last = rec.ordinate[-1]
        gaps = int(np.count_nonzero(np.isnan(rec.ordinate)))
        lines.append(f"{p.model}: S1/mu at stretch {rec.abscissa[-1]:g} = {last:.10g}"
                     + (f" ({gaps} unsolved points)" if gaps else ""))
    lines += [f"output {k}: {v}" for k, v in files.items()]
    report = "\n".join(lines) + "\n"
    _write(os.path.join(cfg.out, "report.txt"), report)
    print(report, end="")
    return EXIT_OK


def cmd_fit(args) -> int:
    try:
        _, data = output.read_csv(args.csv)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read data file {args.csv}: {exc}") from exc
    if data.shape[1] < 2:
        raise ConfigError("data file needs at least two columns (stretch, stress)")
    res = fit_uniaxial(data[:, 0], data[:, 1])
    text = (f"mu={res.mu:.12g} k={res.k:.12g} residual={res.residual:.6e} "
            f"iterations={res.iterations}\n")
    print(text, end="")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write(os.path.join(args.out, "fit_report.txt"), text)
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = verification.run_all(quick=args.quick)
    if args.benchmarks:
        checks += verification.check_structural()
    lines = [c.line() for c in checks]
    failed = sum(not c.passed for c in checks)
    lines.append(f"{len(checks) - failed}/{len(checks)} checks passed")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write(os.path.join(args.out, "verify_report.txt"), text)
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_mesh_info(args) -> int:
    cfg = resolve_config(args)
    if cfg.case == "mpoint":
        raise ConfigError("mpoint has no mesh")
    mesh = generate_case(cfg.case_spec()).mesh
    print(f"elements={mesh.nelems} nodes={mesh.nnodes} dofs={mesh.ndof}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "mpoint": cmd_mpoint, "fit": cmd_fit, "verify": cmd_verify,
            "mesh-info": cmd_mesh_info}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergenceError, FitFailureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
