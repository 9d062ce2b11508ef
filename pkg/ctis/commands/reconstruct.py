"""``reconstruct``: EM reconstruction of a datacube from one FPA image."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from ctis.config import settings
from ctis.models import Datacube
from ctis.services.backends import BACKENDS, make_backend
from ctis.services.calibration import column_sums
from ctis.services.solver import INIT_MODES, PRECISIONS, SolverConfig, em_solve
from ctis.storage import load_image, load_kernels, save_cube, save_report, write_report_csv

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    p = subparsers.add_parser("reconstruct", parents=[common], help="EM reconstruction")
    p.add_argument("--kernels", type=Path, required=True)
    p.add_argument("--image", type=Path, required=True)
    p.add_argument("--backend", choices=BACKENDS, default="wbh")
    p.add_argument("--iterations", type=int, default=settings.default_iterations)
    p.add_argument("--init", choices=INIT_MODES, default="ones")
    p.add_argument("--epsilon", type=float, help="EM division guard (default per precision)")
    p.add_argument("--precision", choices=PRECISIONS, default="f64")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--report", type=Path, help="per-iteration CSV (iteration,seconds,residual)")
    p.add_argument("--report-container", type=Path, help="solve report container")
    p.add_argument("--save-iterates", type=Path, metavar="DIR", help="write every iterate")
    p.set_defaults(func=run)


def run(args: argparse.Namespace) -> None:
    kernels = load_kernels(args.kernels)
    image = load_image(args.image, expected=kernels.geometry)
    cfg = SolverConfig(
        iterations=args.iterations,
        init=args.init,
        epsilon=args.epsilon,
        record_residuals=args.report is not None or args.report_container is not None,
        precision=args.precision,
    )
    backend = make_backend(args.backend, kernels, threads=args.threads, dtype=cfg.dtype)

    def save_iterate(k: int, f: Datacube) -> None:
        save_cube(args.save_iterates / f"iterate_{k:04d}.ctis", f)

    callback = None
    if args.save_iterates:
        args.save_iterates.mkdir(parents=True, exist_ok=True)
        callback = save_iterate

    report = em_solve(kernels, image, column_sums(kernels), cfg, backend, callback=callback)

    save_cube(args.out, report.final)
    if args.report:
        write_report_csv(args.report, report)
    if args.report_container:
        save_report(args.report_container, report)
    print(
        f"cube: {args.out} ({report.iterations} iterations, {report.total_seconds:.4f}s)"
    )
