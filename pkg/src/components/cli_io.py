"""
File Formats and Command Line
=============================
JSON schemas for operator tuples and polynomials, report emission, variety
CSV files and the ``polydisc`` command line:

    check    FILE [--p P --q Q]                        class membership report
    dilate   FILE --p P --q Q [--mode M] [--degree N]  build and verify a dilation
    vn       FILE --polys POLYFILE [--grid G] [--refined]
    variety  FILE [--grid G] --out CSV
    random   --kind diag|model|poly ... --out FILE

Exit codes: 0 pass, 1 failed check or numerical error, 2 bad input.

Usage:
    python -m src.components.cli_io check docs/sample_tuple.json --p 1 --q 2
"""

import argparse
import json
import os
import sys
from dataclasses import fields, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from dotenv import load_dotenv
from pydantic import BaseModel, Field, NonNegativeInt, ValidationError, model_validator

from config.config import (
    GeneratorConfig, HardyConfig, PathConfig, ToleranceConfig, VNConfig,
)
from src.components.dilation import FINITE_RANK, MODES, DilationPipeline, build_finite_rank_dilation
from src.components.generators import gen_diagonal, gen_model_compression, gen_polynomials
from src.components.operator_core import OperatorTuple, class_membership, validate_tuple
from src.components.vn_variety import (
    CLASSICAL, REFINED, Polynomial, VarietySampleSet, reports_frame, variety_from_symbol,
    vn_report,
)
from src.exception import CustomException, InputError, ParseError
from src.logger import logger
from src.utils import Read_write_yaml

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INPUT = 2

Pair = Tuple[float, float]


# ============================================================================
# SCHEMAS
# ============================================================================

class TupleFile(BaseModel):
    """n operators of size dim x dim; entries are [re, im] pairs."""
    n: int = Field(ge=1)
    dim: int = Field(ge=1)
    operators: List[List[List[Pair]]]
    metadata: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_shapes(self):
        if len(self.operators) != self.n:
            raise ValueError(f"operators: expected {self.n} matrices, got {len(self.operators)}")
        for i, rows in enumerate(self.operators):
            shape = (len(rows), {len(r) for r in rows})
            if shape[0] != self.dim or shape[1] != {self.dim}:
                raise ValueError(f"operators.{i}: expected a {self.dim}x{self.dim} matrix")
        return self

    def to_tuple(self) -> OperatorTuple:
        mats = [np.array([[complex(re, im) for re, im in row] for row in rows])
                for rows in self.operators]
        return OperatorTuple.from_matrices(mats)

    @classmethod
    def from_tuple(cls, T: OperatorTuple, metadata: Optional[Dict[str, Any]] = None) -> "TupleFile":
        return cls(n=T.n, dim=T.dim, operators=[_encode(A) for A in T.ops],
                   metadata=metadata or {})


class Monomial(BaseModel):
    k: List[NonNegativeInt]
    c: Pair


class PolyFile(BaseModel):
    """One polynomial: a list of monomials c z^k in n variables."""
    n: int = Field(ge=1)
    monomials: List[Monomial]

    @model_validator(mode="after")
    def _check_lengths(self):
        for j, mono in enumerate(self.monomials):
            if len(mono.k) != self.n:
                raise ValueError(f"monomials.{j}.k: expected {self.n} entries, got {len(mono.k)}")
        return self

    def to_polynomial(self) -> Polynomial:
        return Polynomial(self.n, tuple((tuple(m.k), complex(*m.c)) for m in self.monomials))

    @classmethod
    def from_polynomial(cls, poly: Polynomial) -> "PolyFile":
        return cls(n=poly.n, monomials=[Monomial(k=list(k), c=(c.real, c.imag))
                                        for k, c in poly.terms])


# ============================================================================
# ENCODING HELPERS
# ============================================================================

def _encode(obj: Any) -> Any:
    """JSON-ready copy: complex numbers and arrays become [re, im] pairs."""
    if isinstance(obj, BaseModel):
        return _encode(obj.model_dump())
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return _encode(obj.tolist())
        return obj.tolist()
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    return obj


def _parse_error(path: str, error: ValidationError) -> ParseError:
    details = "; ".join(
        f"{'.'.join(str(x) for x in e['loc']) or '<root>'}: {e['msg']}"
        for e in error.errors())
    return ParseError(f"{path}: {details}")


def _read_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as file:
            return json.load(file)
    except FileNotFoundError:
        raise InputError(f"{path}: no such file")
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}")


def _write_json(content: Any, path: str) -> None:
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w", encoding="utf-8") as file:
        json.dump(content, file, indent=2)


# ============================================================================
# LOAD / SAVE
# ============================================================================

def load_tuple(path: str) -> OperatorTuple:
    try:
        data = TupleFile.model_validate(_read_json(path))
    except ValidationError as e:
        raise _parse_error(path, e)
    T = data.to_tuple()
    logger.info(f"loaded tuple from {path}: n={T.n}, dim={T.dim}")
    return T


def save_tuple(T: OperatorTuple, path: str, metadata: Optional[Dict[str, Any]] = None) -> None:
    _write_json(TupleFile.from_tuple(T, metadata).model_dump(), path)
    logger.info(f"saved tuple to {path}")


def load_polys(path: str) -> List[Polynomial]:
    """A single polynomial object or a JSON list of them."""
    raw = _read_json(path)
    items = raw if isinstance(raw, list) else [raw]
    polys = []
    for j, item in enumerate(items):
        try:
            polys.append(PolyFile.model_validate(item).to_polynomial())
        except ValidationError as e:
            raise _parse_error(f"{path}[{j}]" if isinstance(raw, list) else path, e)
    return polys


def load_poly(path: str) -> Polynomial:
    polys = load_polys(path)
    if len(polys) != 1:
        raise ParseError(f"{path}: expected one polynomial, found {len(polys)}")
    return polys[0]


def save_polys(polys: Sequence[Polynomial], path: str) -> None:
    _write_json([PolyFile.from_polynomial(p).model_dump() for p in polys], path)


def save_report(report: Any, path: str) -> None:
    """Reports go to YAML for .yaml/.yml paths and to JSON otherwise."""
    content = _encode(report)
    if path.endswith((".yaml", ".yml")):
        if not isinstance(content, dict):
            content = {"rows": content}
        Read_write_yaml.write_yaml(content, path)
    else:
        _write_json(content, path)
    logger.info(f"report written to {path}")


def save_variety_csv(samples: VarietySampleSet, path: str) -> None:
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    samples.frame.to_csv(path, index=False)
    logger.info(f"variety samples ({len(samples)} rows) written to {path}")


def load_variety_csv(path: str) -> VarietySampleSet:
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except FileNotFoundError:
        raise InputError(f"{path}: no such file")
    thetas = [c for c in frame.columns if c.startswith("theta")]
    expected = ["part", "lambda_re", "lambda_im"] + [f"theta{j}" for j in range(1, len(thetas) + 1)]
    if list(frame.columns) != expected or not thetas:
        raise ParseError(f"{path}: columns {list(frame.columns)} do not match {expected}")
    n = len(thetas) + 1
    # theta2 runs over the full grid; theta1 may carry boundary nudges
    grid = int(frame["theta2"].nunique()) if n >= 3 else int(frame["theta1"].nunique())
    return VarietySampleSet(n=n, grid=grid, frame=frame)


# ============================================================================
# CONFIGURATION FROM FLAGS
# ============================================================================

def _tolerance_flag(name: str) -> str:
    return "--tol-" + name.replace("_", "-")


def load_configs(args: argparse.Namespace):
    """Tolerance, Hardy and VN configs: defaults < params file < flags."""
    params: Dict[str, Any] = {}
    path = args.params or PathConfig().params_yaml
    if os.path.exists(path):
        params = Read_write_yaml.read_yaml(path)
    elif args.params:
        raise InputError(f"{path}: no such params file")
    overrides = {f.name: getattr(args, f"tol_{f.name}") for f in fields(ToleranceConfig)}
    tol = ToleranceConfig.from_params(params.get("tolerances"), **overrides)
    hardy = HardyConfig.from_params(params.get("hardy"))
    vn = VNConfig.from_params(params.get("vn"))
    gen = GeneratorConfig.from_params(params.get("generators"))
    return tol, hardy, vn, gen


def _default_out(name: str) -> str:
    return os.path.join(PathConfig().output_dir, name)


# ============================================================================
# COMMANDS
# ============================================================================

def cmd_check(args, tol, hardy, vn, gen) -> int:
    T = load_tuple(args.file)
    if args.p is None and args.q is None:
        report = validate_tuple(T, tol)
        ok = report.is_contractive and report.is_commuting
    elif args.p is None or args.q is None:
        raise InputError("--p and --q must be given together")
    else:
        report = class_membership(T, args.p, args.q, tol)
        ok = bool(report.in_Tpq)
    print(report.model_dump_json(indent=2))
    save_report(report, args.out or _default_out("check_report.json"))
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_dilate(args, tol, hardy, vn, gen) -> int:
    T = load_tuple(args.file)
    pipeline = DilationPipeline(tol, hardy, vn)
    package, report = pipeline.run(T, args.p, args.q, args.mode, args.degree,
                                   args.allow_padding, args.pad)
    print(report.model_dump_json(indent=2))
    save_report({"package": package.summary(), "report": report},
                args.out or _default_out("dilation_report.json"))
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_vn(args, tol, hardy, vn, gen) -> int:
    T = load_tuple(args.file)
    polys = load_polys(args.polys)
    if args.n_jobs is not None:
        vn = replace(vn, n_jobs=args.n_jobs)
    rows = vn_report(T, args.p, args.q, polys, G=args.grid,
                     mode=REFINED if args.refined else CLASSICAL,
                     tol=tol, vn=vn, hardy=hardy, model_bound=args.model_bound)
    frame = reports_frame(rows)
    print(frame.to_string(index=False))
    out = args.out or _default_out("vn_report.csv")
    if out.endswith(".csv"):
        folder = os.path.dirname(out)
        if folder:
            os.makedirs(folder, exist_ok=True)
        frame.to_csv(out, index=False)
    else:
        save_report(rows, out)
    violated = any(r.violation or bool(r.refined_violation) for r in rows)
    return EXIT_FAIL if violated else EXIT_PASS


def cmd_variety(args, tol, hardy, vn, gen) -> int:
    T = load_tuple(args.file)
    package = build_finite_rank_dilation(T, 1, 2, tol, hardy=hardy)
    samples = variety_from_symbol(package.symbols[1], T.n, args.grid or vn.refined_grid, tol=tol)
    save_variety_csv(samples, args.out or _default_out("variety.csv"))
    print(f"{len(samples)} samples, u-part {len(samples.part('u'))}, "
          f"c-part {len(samples.part('c'))}")
    return EXIT_PASS


def cmd_random(args, tol, hardy, vn, gen) -> int:
    seed = gen.seed if args.seed is None else args.seed
    n = args.n or gen.n
    if args.kind == "poly":
        polys = gen_polynomials(n, args.count, args.max_degree, seed)
        out = args.out or _default_out("random_polys.json")
        save_polys(polys, out)
        print(f"{len(polys)} polynomials written to {out}")
        return EXIT_PASS
    if args.kind == "diag":
        rho_max = gen.rho_max if args.rho_max is None else args.rho_max
        T = gen_diagonal(n, args.dim or gen.dim, rho_max, seed)
        metadata = {"generator": "diag", "seed": seed, "rho_max": rho_max}
    else:
        e_dim = args.e_dim or gen.e_dim
        degree = args.degree or gen.degree
        T = gen_model_compression(n, args.p, args.q, e_dim, degree, seed,
                                  projection_rank=args.projection_rank)
        metadata = {"generator": "model", "seed": seed, "p": args.p, "q": args.q,
                    "e_dim": e_dim, "degree": degree,
                    "projection_rank": args.projection_rank}
    out = args.out or _default_out(f"random_{args.kind}.json")
    save_tuple(T, out, metadata)
    print(f"n={T.n}, dim={T.dim} tuple written to {out}")
    return EXIT_PASS


COMMANDS = {
    "check": cmd_check,
    "dilate": cmd_dilate,
    "vn": cmd_vn,
    "variety": cmd_variety,
    "random": cmd_random,
}


# ============================================================================
# PARSER
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", type=str, default=None,
                        help="params.yaml with tolerances/hardy/vn/generators blocks")
    common.add_argument("--seed", type=int, default=None, help="Seed for the generators")
    common.add_argument("--out", type=str, default=None,
                        help="Output file (default under $POLYDISC_OUTPUT_DIR)")
    for f in fields(ToleranceConfig):
        common.add_argument(_tolerance_flag(f.name), dest=f"tol_{f.name}",
                            type=int if f.name == "m_max" else float, default=None,
                            help=f"Override ToleranceConfig.{f.name}")

    parser = argparse.ArgumentParser(
        prog="polydisc", description="Dilations and von Neumann checks for commuting contractions")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", parents=[common], help="Tuple and class membership report")
    check.add_argument("file")
    check.add_argument("--p", type=int, default=None)
    check.add_argument("--q", type=int, default=None)

    dilate = sub.add_parser("dilate", parents=[common], help="Build and verify a dilation")
    dilate.add_argument("file")
    dilate.add_argument("--p", type=int, required=True)
    dilate.add_argument("--q", type=int, required=True)
    dilate.add_argument("--mode", choices=MODES, default=FINITE_RANK)
    dilate.add_argument("--degree", type=int, default=None,
                        help="Truncation degree N of the Hardy-space model")
    dilate.add_argument("--pad", type=int, default=None, help="Extra ambient dimensions")
    dilate.add_argument("--allow-padding", action="store_true")

    vn = sub.add_parser("vn", parents=[common], help="Von Neumann comparison table")
    vn.add_argument("file")
    vn.add_argument("--polys", required=True)
    vn.add_argument("--grid", type=int, default=None)
    vn.add_argument("--refined", action="store_true")
    vn.add_argument("--p", type=int, default=1)
    vn.add_argument("--q", type=int, default=2)
    vn.add_argument("--n-jobs", type=int, default=None)
    vn.add_argument("--model-bound", action="store_true")

    variety = sub.add_parser("variety", parents=[common], help="Variety boundary samples as CSV")
    variety.add_argument("file")
    variety.add_argument("--grid", type=int, default=None)

    random = sub.add_parser("random", parents=[common], help="Generate a random input file")
    random.add_argument("--kind", choices=["diag", "model", "poly"], required=True)
    random.add_argument("--n", type=int, default=None)
    random.add_argument("--dim", type=int, default=None)
    random.add_argument("--rho-max", type=float, default=None)
    random.add_argument("--p", type=int, default=1)
    random.add_argument("--q", type=int, default=2)
    random.add_argument("--e-dim", type=int, default=None)
    random.add_argument("--degree", type=int, default=None,
                        help="Truncation degree N of the compressed model")
    random.add_argument("--projection-rank", type=int, default=None)
    random.add_argument("--count", type=int, default=10)
    random.add_argument("--max-degree", type=int, default=4)
    return parser


# ============================================================================
# MAIN ENTRY POINT
# ============================================================================

def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns the exit code."""
    load_dotenv()
    args = build_parser().parse_args(argv)
    try:
        tol, hardy, vn, gen = load_configs(args)
        return COMMANDS[args.command](args, tol, hardy, vn, gen)
    except InputError as e:
        print(f"[{e.tag}] {e.reason}", file=sys.stderr)
        return EXIT_INPUT
    except CustomException as e:
        print(f"[{e.tag}] {e.reason}" if e.tag else e.reason, file=sys.stderr)
        return EXIT_FAIL
    except Exception as e:
        logger.error(f"{args.command} failed: {e}")
        print(str(CustomException(e, sys)), file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
