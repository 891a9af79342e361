"""
Command line front end: generate, torsion, check and sweep.

Reports go to stdout (or ``--output``) as JSON or CSV; logs and the sweep
summary line go to stderr. Any TorsionError becomes its exit code together
with a JSON ``{"error", "detail"}`` document on stderr.
"""
import argparse
import json
import logging
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence

from src import __description__, __version__
from src.config.settings import CHECK_SUITES, DEFAULT_JOBS, DEFAULT_SEED
from src.core.analytic_models import (
    LIFTED_CIRCLE,
    CircleBundle,
    annulus_grid,
    arc_grid,
    circle_closed_form,
    circle_sweep,
    default_theta,
    lens_family_sweep,
    square_family_grid,
)
from src.core.checks import IDENTITY_TOLERANCE, CheckRunner
from src.core.comb_torsion import comb_torsion
from src.core.complexes import (
    character_representation,
    circle_cw,
    hermitian_chirality_complex,
    lens_cw,
    random_chirality_complex,
)
from src.core.errors import TorsionError, ValidationError
from src.core.linalg import agmon_angle_at, choose_agmon
from src.core.oddsig import (
    Ambiguity,
    Provenance,
    TorsionValue,
    analytic_report,
    assemble,
)
from src.models.schemas import LoadedModel, ModelFile, load_model, pair
from src.utils.helpers import parse_complex

logger = logging.getLogger(__name__)


def _emit(text: str, output: Optional[str]) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if output:
        Path(output).write_text(text, encoding="utf-8")
        logger.info(f"Wrote {output}")
    else:
        sys.stdout.write(text)


def _dump(payload: dict) -> str:
    return json.dumps(payload, indent=2)


def _parse_dims(text: str) -> List[int]:
    try:
        dims = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValidationError(f"dims must be comma separated integers, got {text!r}")
    if not dims or any(c < 0 for c in dims):
        raise ValidationError(f"dims must be non-negative integers, got {text!r}")
    return dims


def _parse_fraction(text: Optional[str]) -> Optional[Fraction]:
    if text is None:
        return None
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"L-integral must be rational, e.g. 1/2, got {text!r}")


def _parse_theta(text: str) -> Optional[float]:
    if text == "auto":
        return None
    try:
        theta = float(text)
    except ValueError:
        raise ValidationError(f"--theta must be 'auto' or a number, got {text!r}")
    if not -math.pi <= theta < math.pi:
        raise ValidationError(f"theta must lie in [-pi, pi), got {theta}")
    return theta


# generate

def cmd_generate(args: argparse.Namespace) -> int:
    if args.kind == "circle":
        model = ModelFile.for_circle(parse_complex(args.z))
    elif args.kind == "circle-bundle":
        z = parse_complex(args.z)
        CircleBundle(z)
        model = ModelFile.for_circle(z, bundle=True)
    elif args.kind == "lens":
        cw = lens_cw(args.p, args.q)
        rep = character_representation(args.p, args.char, cw.presentation)
        model = ModelFile.for_cw(cw, rep, family="lens", p=args.p, q=args.q, char=args.char)
    else:
        dims = _parse_dims(args.dims)
        build = hermitian_chirality_complex if args.hermitian else random_chirality_complex
        tc, ch = build(args.n, dims, args.seed)
        model = ModelFile.for_complex(tc, ch, hermitian=args.hermitian)
    _emit(model.to_json(), args.output)
    return 0


# torsion

def _circle_bundle_report(loaded: LoadedModel, args: argparse.Namespace) -> dict:
    cb = CircleBundle(loaded.z)
    cb.require_acyclic()
    payload = {"model": "circle_bundle", "z": pair(cb.z), "monodromy": pair(cb.monodromy)}
    torsion = None
    if args.mode in ("analytic", "both"):
        theta = _parse_theta(args.theta)
        theta = default_theta(cb) if theta is None else theta
        det, eta_value, xi_value = circle_closed_form(cb, theta)
        torsion = TorsionValue(det, Ambiguity.EXACT, Provenance.ANALYTIC)
        payload["analytic"] = {
            "theta": {"theta": theta},
            "graded_det": pair(det),
            "xi": pair(xi_value),
            "eta": eta_value.to_dict(),
            "rs_torsion": math.exp(xi_value.real),
            "torsion": torsion.to_dict(),
        }
    if args.mode in ("comb", "both"):
        comb = comb_torsion(circle_cw(), cb.representation(), LIFTED_CIRCLE)
        payload["comb"] = comb.to_dict()
        if torsion is not None:
            payload["comparison"] = _comparison(torsion.value, comb.value)
    return payload


def _comparison(torsion: complex, comb: complex) -> dict:
    return {"abs_torsion": abs(torsion), "comb": pair(comb), "abs_ratio": abs(torsion / comb)}


def cmd_torsion(args: argparse.Namespace) -> int:
    loaded = load_model(args.model)
    if loaded.kind == "circle_bundle":
        _emit(_dump(_circle_bundle_report(loaded, args)), args.output)
        return 0

    payload = {"model": loaded.kind, "metadata": loaded.metadata}
    torsion = None
    if args.mode in ("analytic", "both"):
        os = assemble(loaded.twisted, loaded.chirality)
        theta = _parse_theta(args.theta)
        angle = choose_agmon(os.spectrum) if theta is None else agmon_angle_at(os.spectrum, theta)
        report = analytic_report(os, angle, args.rank_e, _parse_fraction(args.l_integral))
        torsion = report.torsion.value
        payload["analytic"] = report.to_dict()
    if args.mode in ("comb", "both"):
        if loaded.cw is None:
            raise ValidationError("Combinatorial torsion needs CW data; this model is an explicit complex")
        comb = comb_torsion(loaded.cw, loaded.representation, loaded.euler)
        payload["comb"] = comb.to_dict()
        if torsion is not None:
            payload["comparison"] = _comparison(torsion, comb.value)
    _emit(_dump(payload), args.output)
    return 0


# check

def cmd_check(args: argparse.Namespace) -> int:
    tolerance = IDENTITY_TOLERANCE if args.tolerance is None else args.tolerance
    runner = CheckRunner(seed=args.seed, trials=args.trials, tolerance=tolerance)
    reports = runner.run(args.suite)
    ok = all(r.ok for r in reports)
    _emit(_dump({"ok": ok, "seed": args.seed, "suites": [r.to_dict() for r in reports]}), args.output)
    return 0 if ok else 1


# sweep

def _circle_grid(args: argparse.Namespace):
    if args.grid == "annulus":
        return annulus_grid(args.r_min, args.r_max, args.radial, args.angular)
    if args.grid == "arc":
        return arc_grid(args.points)
    return square_family_grid(parse_complex(args.center), args.half_width, args.points)


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.jobs < 1:
        raise ValidationError(f"--jobs must be positive, got {args.jobs}")
    if args.family == "circle":
        table = circle_sweep(_circle_grid(args), jobs=args.jobs)
    else:
        table = lens_family_sweep(args.p, args.q, jobs=args.jobs)
    _emit(table.to_csv() if args.out == "csv" else table.to_json(), args.output)
    summary = table.summary()
    logger.info(f"Sweep summary: {summary}")
    print(f"summary: {json.dumps(summary)}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Random seed")
    common.add_argument("--tolerance", type=float, default=None, help="Pass threshold for check residuals")
    common.add_argument("--jobs", type=int, default=DEFAULT_JOBS, help="Worker threads for sweeps")
    common.add_argument("-o", "--output", default=None, help="Write the report to a file instead of stdout")

    parser = argparse.ArgumentParser(prog="torsion", description=__description__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser("generate", help="Write a model file")
    kinds = generate.add_subparsers(dest="kind", required=True)
    circle = kinds.add_parser("circle", parents=[common], help="Finite circle model with monodromy z")
    circle.add_argument("--z", required=True, help="Monodromy, e.g. 0.5+0.5i")
    bundle = kinds.add_parser("circle-bundle", parents=[common], help="Continuum circle with Fourier twist z")
    bundle.add_argument("--z", required=True, help="Fourier twist, e.g. 2")
    lens = kinds.add_parser("lens", parents=[common], help="Lens space L(p, q) with a character")
    lens.add_argument("--p", type=int, required=True)
    lens.add_argument("--q", type=int, required=True)
    lens.add_argument("--char", type=int, default=1, help="Character t -> exp(2 pi i char / p)")
    random_kind = kinds.add_parser("random", parents=[common], help="Random acyclic complex with chirality")
    random_kind.add_argument("--n", type=int, required=True, help="Odd top degree")
    random_kind.add_argument("--dims", required=True, help="Comma separated dimensions, e.g. 2,4,4,2")
    random_kind.add_argument("--hermitian", action="store_true", help="Self-adjoint witness (n in {1, 3})")
    generate.set_defaults(handler=cmd_generate)

    torsion = commands.add_parser("torsion", parents=[common], help="Compute torsion of a model file")
    torsion.add_argument("model", help="Path to a model JSON file")
    torsion.add_argument("--mode", choices=["analytic", "comb", "both"], default="analytic")
    torsion.add_argument("--theta", default="auto", help="'auto' or an Agmon angle in [-pi, pi)")
    torsion.add_argument("--rank-e", type=int, default=1, help="Rank of the bundle for the n = 3 mod 4 correction")
    torsion.add_argument("--l-integral", default=None, help="Rational L-class integral, e.g. 1/2")
    torsion.set_defaults(handler=cmd_torsion)

    check = commands.add_parser("check", parents=[common], help="Run an acceptance suite")
    check.add_argument("suite", help=f"One of {', '.join(CHECK_SUITES)} or all")
    check.add_argument("--trials", type=int, default=None, help="Override the number of random trials")
    check.set_defaults(handler=cmd_check)

    sweep = commands.add_parser("sweep", help="Sweep a family of representations")
    families = sweep.add_subparsers(dest="family", required=True)
    circle_sweep_parser = families.add_parser("circle", parents=[common], help="Circle monodromies")
    circle_sweep_parser.add_argument("--grid", choices=["annulus", "arc", "square"], default="annulus")
    circle_sweep_parser.add_argument("--r-min", type=float, default=0.8)
    circle_sweep_parser.add_argument("--r-max", type=float, default=1.25)
    circle_sweep_parser.add_argument("--radial", type=int, default=21)
    circle_sweep_parser.add_argument("--angular", type=int, default=21)
    circle_sweep_parser.add_argument("--points", type=int, default=9, help="Arc points or square side")
    circle_sweep_parser.add_argument("--center", default="-1", help="Square grid center")
    circle_sweep_parser.add_argument("--half-width", type=float, default=0.25)
    circle_sweep_parser.add_argument("--out", choices=["csv", "json"], default="csv")
    lens_sweep_parser = families.add_parser("lens", parents=[common], help="All characters of L(p, q)")
    lens_sweep_parser.add_argument("--p", type=int, required=True)
    lens_sweep_parser.add_argument("--q", type=int, required=True)
    lens_sweep_parser.add_argument("--out", choices=["csv", "json"], default="csv")
    sweep.set_defaults(handler=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except TorsionError as e:
        logger.error(f"{args.command} failed: {e.detail}")
        print(json.dumps(e.to_dict()), file=sys.stderr)
        return e.exit_code
