#!/usr/bin/env python3

import argparse
import logging
import sys

from basis import TotalDegreeBasis, dimension
from benchmark import (
    FK,
    FUNCTIONS,
    HISTOPOLATION,
    MESH_FAMILIES,
    REGRESSION,
    BoundRecord,
    ConvergenceRecord,
    LebesgueRecord,
    SweepConfig,
    bound_sweep,
    convergence_sweep,
    get_function,
    lebesgue_sweep,
    padua_failure_fraction,
    records_frame,
    records_payload,
    regression_degree,
    sup_error,
    write_records_csv,
    write_records_json,
)
from data_io import dump_json
from histopolation import pipeline, reorder_first, write_histopolant
from histopolation_errors import GeometryError, HistopolationError, MeshError, SelectionError, SolveError
from lebesgue import GRID_KINDS, evaluation_grid, lebesgue_constant, norm_bound
from mesh import friedrichs_keller, random_axes_fk, read_mesh, require_mesh, save_mesh, validate, write_mesh
from quadrature import moment_matrix
from selection import METHODS, PADUA, PaduaConfig, fk_max_degree, mesh_max_degree, select
from settings import load_settings

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that exits with status 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_sweep(text: str) -> list[int]:
    """START:STOP:STEP, STOP included."""
    try:
        start, stop, step = (int(part) for part in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected START:STOP:STEP, got {text!r}") from None
    if step <= 0 or start > stop:
        raise argparse.ArgumentTypeError(f"empty sweep {text!r}")
    return list(range(start, stop + 1, step))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="Verbose output")

    mesh_source = argparse.ArgumentParser(add_help=False)
    mesh_source.add_argument("--mesh", help="Mesh JSON file")
    mesh_source.add_argument("--n", type=int, help="Use friedrichs_keller(n) instead of a mesh file")

    selection_args = argparse.ArgumentParser(add_help=False)
    selection_args.add_argument("--method", choices=METHODS, help="Triangle selection method (default: padua)")
    selection_args.add_argument("--degree", type=int, help="Polynomial degree m (default: largest admissible)")

    output_args = argparse.ArgumentParser(add_help=False)
    output_args.add_argument("--out", help="Output file (default: standard output)")
    output_args.add_argument("--format", choices=("csv", "json"), default="csv", help="Record format")

    grid_args = argparse.ArgumentParser(add_help=False)
    grid_args.add_argument("--grid", type=int, help="Evaluation grid points per axis")
    grid_args.add_argument("--grid-kind", choices=GRID_KINDS, help="Evaluation grid spacing")

    parser = CliParser(description="Polynomial histopolation on triangulations of [-1, 1]^2")
    subparsers = parser.add_subparsers(dest="command", required=True)

    p_mesh = subparsers.add_parser("mesh", parents=[common], help="Generate a mesh")
    p_mesh.add_argument("family", choices=MESH_FAMILIES)
    p_mesh.add_argument("--n", type=int, required=True, help="Cells per axis")
    p_mesh.add_argument("--seed", type=int, default=0, help="Seed for random-axes meshes")
    p_mesh.add_argument("--out", help="Output mesh file (default: standard output)")

    subparsers.add_parser("select", parents=[common, mesh_source, selection_args], help="Select histopolation triangles")

    p_histo = subparsers.add_parser(
        "histopolate", parents=[common, mesh_source, selection_args, grid_args], help="Histopolate a test function"
    )
    p_histo.add_argument("--function", choices=sorted(FUNCTIONS), default="f1")
    p_histo.add_argument("--regress", action="store_true", help="Histopolation-regression of degree --ddeg")
    p_histo.add_argument("--ddeg", type=int, help="Regression degree d (default: m + floor(sqrt(m)))")
    p_histo.add_argument("--out", help="Write the histopolant as JSON")

    p_leb = subparsers.add_parser(
        "lebesgue", parents=[common, mesh_source, selection_args, grid_args, output_args], help="Lebesgue constants"
    )
    p_leb.add_argument("--sweep", type=parse_sweep, help="Sweep friedrichs_keller(n) over START:STOP:STEP")

    p_bound = subparsers.add_parser(
        "bound", parents=[common, mesh_source, selection_args, output_args], help="zeta + eta operator-norm bound"
    )
    p_bound.add_argument("--ddeg", type=int, help="Regression degree d (default: m + floor(sqrt(m)))")
    p_bound.add_argument("--sweep", type=parse_sweep, help="Sweep friedrichs_keller(n) over START:STOP:STEP")

    p_conv = subparsers.add_parser("convergence", parents=[common, grid_args, output_args], help="Convergence sweep")
    p_conv.add_argument("--n", type=int, action="append", help="Mesh size; repeat for several")
    p_conv.add_argument("--sweep", type=parse_sweep, help="Mesh sizes as START:STOP:STEP")
    p_conv.add_argument("--method", choices=METHODS, action="append", help="Selection method; repeat for several")
    p_conv.add_argument("--function", choices=sorted(FUNCTIONS), action="append", help="Test function; repeat for several")
    p_conv.add_argument("--mesh-family", choices=MESH_FAMILIES, default=FK)
    p_conv.add_argument("--seeds", type=int, default=1, help="Number of random meshes per n (random-axes)")
    p_conv.add_argument("--seed", type=int, default=0, help="First seed")
    p_conv.add_argument("--degree", type=int, help="Fixed m instead of the largest admissible")
    p_conv.add_argument("--regress", action="store_true", help="Regression mode only")
    p_conv.add_argument("--ddeg", type=int, help="Fixed regression degree d")
    p_conv.add_argument("--compare-modes", action="store_true", help="Run histopolation and regression")
    p_conv.add_argument("--bound", action="store_true", help="Record zeta + eta for regression runs")
    return parser


def method_of(args) -> str:
    return args.method or PADUA


def padua_config(settings) -> PaduaConfig:
    return PaduaConfig(settings.padua_alpha, settings.membership_tol)


def load_triangulation(args):
    if args.mesh and args.n is not None:
        raise ValueError("give either --mesh or --n, not both")
    if args.mesh:
        return require_mesh(read_mesh(args.mesh))
    if args.n is not None:
        return friedrichs_keller(args.n)
    raise ValueError("a mesh is required: use --mesh or --n")


def default_degree(args, tri) -> int:
    if args.degree is not None:
        return args.degree
    m = fk_max_degree(args.n) if args.n is not None else mesh_max_degree(tri)
    logging.info(f"Using the largest admissible degree m={m}")
    return m


def emit_records(records, args, record_type) -> None:
    if args.out:
        if args.format == "json":
            write_records_json(records, args.out)
        else:
            write_records_csv(records, args.out, record_type)
        logging.info(f"Wrote {len(records)} records to {args.out}")
    elif args.format == "json":
        dump_json(records_payload(records), sys.stdout)
    else:
        records_frame(records, record_type).to_csv(sys.stdout, index=False, float_format="%.17g")


def cmd_mesh(args, settings) -> int:
    if args.family == FK:
        tri = friedrichs_keller(args.n)
    else:
        tri = random_axes_fk(args.n, args.seed)
    diag = validate(tri)
    if not diag.ok:
        logging.warning(f"Generated mesh has issues: {'; '.join(diag.issues)}")
    if args.out:
        write_mesh(args.out, tri)
        logging.info(f"Wrote {tri.n_triangles} triangles to {args.out}")
    else:
        save_mesh(tri, sys.stdout)
    return EXIT_OK


def cmd_select(args, settings) -> int:
    tri = load_triangulation(args)
    m = default_degree(args, tri)
    result = select(
        tri,
        method_of(args),
        m,
        kind=settings.basis,
        padua=padua_config(settings),
        pivot_tol=settings.pivot_tol,
    )
    logging.info(f"{result.method}: {len(result)} triangles, condition {result.diagnostics['condition']:.3e}")
    for index in result.indices:
        print(index)
    return EXIT_OK


def _grid(args, settings):
    return evaluation_grid(args.grid or settings.grid_resolution, args.grid_kind or settings.grid_kind)


def cmd_histopolate(args, settings) -> int:
    tri = load_triangulation(args)
    m = default_degree(args, tri)
    d = None
    if args.regress:
        d = args.ddeg if args.ddeg is not None else regression_degree(m)
    f = get_function(args.function)
    h = pipeline(
        tri,
        method_of(args),
        m,
        d,
        f,
        kind=settings.basis,
        quadrature_extra=settings.quadrature_extra,
        padua=padua_config(settings),
        pivot_tol=settings.pivot_tol,
    )
    error = sup_error(f, h, _grid(args, settings))
    print(f"method={h.method} m={m} d={h.d} sup_error={error:.6e} condition={h.diagnostics['condition']:.6e}")
    if args.out:
        write_histopolant(args.out, h)
        logging.info(f"Wrote histopolant to {args.out}")
    return EXIT_OK


def cmd_lebesgue(args, settings) -> int:
    grid = _grid(args, settings)
    if args.sweep:
        methods = [args.method] if args.method else list(METHODS)
        records = lebesgue_sweep(args.sweep, methods, grid, kind=settings.basis, degree=args.degree, progress=args.verbose)
        emit_records(records, args, LebesgueRecord)
        return EXIT_OK

    tri = load_triangulation(args)
    m = default_degree(args, tri)
    result = select(tri, method_of(args), m, kind=settings.basis, padua=padua_config(settings))
    value = lebesgue_constant(result, TotalDegreeBasis(m, settings.basis), tri, grid)
    print(f"{value:.12g}")
    if value > dimension(m):
        logging.info(f"Lebesgue constant {value:.3f} exceeds dim P_{m} = {dimension(m)}")
    return EXIT_OK


def cmd_bound(args, settings) -> int:
    if args.sweep:
        records, slope = bound_sweep(args.sweep, method_of(args), kind=settings.basis, progress=args.verbose)
        emit_records(records, args, BoundRecord)
        print(f"slope={slope:.6g}", file=sys.stderr)
        return EXIT_OK

    tri = load_triangulation(args)
    m = default_degree(args, tri)
    d = args.ddeg if args.ddeg is not None else regression_degree(m)
    result = select(tri, method_of(args), m, kind=settings.basis, padua=padua_config(settings))
    ordered = tri.reordered(reorder_first(tri.n_triangles, result.indices))
    W = moment_matrix(ordered, None, TotalDegreeBasis(d, settings.basis))
    factors = norm_bound(W, W.take_rows(len(result)))
    print(f"zeta={factors.zeta:.12g} eta={factors.eta:.12g} total={factors.total:.12g}")
    return EXIT_OK


def cmd_convergence(args, settings) -> int:
    ns = list(args.n or []) + list(args.sweep or [])
    if not ns:
        raise ValueError("convergence needs --n or --sweep")
    if args.compare_modes:
        modes = (HISTOPOLATION, REGRESSION)
    elif args.regress:
        modes = (REGRESSION,)
    else:
        modes = (HISTOPOLATION,)
    cfg = SweepConfig(
        ns=sorted(set(ns)),
        methods=tuple(args.method or METHODS),
        functions=tuple(args.function or ("f1",)),
        modes=modes,
        mesh_family=args.mesh_family,
        seeds=tuple(range(args.seed, args.seed + args.seeds)),
        grid_resolution=args.grid or settings.grid_resolution,
        grid_kind=args.grid_kind or settings.grid_kind,
        kind=settings.basis,
        quadrature_extra=settings.quadrature_extra,
        padua=padua_config(settings),
        pivot_tol=settings.pivot_tol,
        compute_bound=args.bound,
        degree=args.degree,
        ddeg=args.ddeg,
        progress=args.verbose,
    )
    records = convergence_sweep(cfg)
    emit_records(records, args, ConvergenceRecord)
    if args.mesh_family != FK and "padua" in cfg.methods:
        logging.info(f"Padua attribution failed on {padua_failure_fraction(records):.0%} of the random meshes")
    return EXIT_OK


COMMANDS = {
    "mesh": cmd_mesh,
    "select": cmd_select,
    "histopolate": cmd_histopolate,
    "lebesgue": cmd_lebesgue,
    "bound": cmd_bound,
    "convergence": cmd_convergence,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    log_level = logging.DEBUG if args.verbose else logging.WARNING
    logging.basicConfig(level=log_level, format='%(levelname)s: %(message)s')

    try:
        settings = load_settings(dotenv_path=".env")
        return COMMANDS[args.command](args, settings)
    except (MeshError, ValueError, OSError) as e:
        logging.error(str(e))
        return EXIT_USAGE
    except (SelectionError, SolveError, GeometryError) as e:
        logging.error(f"{type(e).__name__}: {e}")
        return EXIT_NUMERICAL
    except HistopolationError as e:
        logging.error(str(e))
        return EXIT_NUMERICAL


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
