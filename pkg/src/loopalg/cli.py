"""Batch command-line frontend.

Exit codes: 0 success, 1 domain error (bad input, unsolvable request,
resource cap), 2 internal-consistency violation (a cross-checked
theorem failed -- that is a defect, never user error).
"""

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .scalars import QQ
from .core import Element, AlgebraError
from .model_io import (load_model, parse_model, parse_element, ParseError,
                       Report, emit_report, serialize_element)
from .loop_models import build_L, build_E, gysin_check
from .homology import AlgebraComplex, ComplexWindow
from .linalg import MemoryBudgetError
from . import bv as bvmod
from . import emss as emssmod
from .bv import TheoremViolation
from .string_ops import (StringPipeline, ShriekData, HCNames, dsb_named,
                         ObstructionError)
from .bg import BGAlgebra, parse_bg_class


def _table_worker(args):
    text, which, n = args
    model = parse_model(text)
    L = build_L(model.algebra)
    cx = L.algebra if which == "hh" else build_E(L).algebra
    win = ComplexWindow(AlgebraComplex(cx))
    reps = win.rep_elements(n)
    return n, len(reps), [serialize_element(r) for r in reps]


def _homology_table(report, text, which, max_degree, jobs):
    tasks = [(text, which, n) for n in range(0, max_degree + 1)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = sorted(pool.map(_table_worker, tasks))
    else:
        rows = [_table_worker(t) for t in tasks]
    for n, dim, basis in rows:
        report.add_table(n, dim, basis)


def cmd_parse(args, report):
    model = load_model(args.model)
    report.model_name = model.name
    for g in model.algebra.generators:
        d = model.algebra.differential(model.algebra.gen(g.name))
        report.add_table(g.degree, 1, [f"{g.name}" + (f" | d = {d}" if not d.is_zero() else "")])
    report.verdicts["valid"] = True
    report.verdicts["generators"] = len(model.algebra.generators)
    report.verdicts["has_weights"] = bool(model.weights)
    report.verdicts["has_shriek"] = model.shriek is not None
    return 0


def cmd_hh(args, report):
    with open(args.model, encoding="utf-8") as fh:
        text = fh.read()
    model = parse_model(text, default_name=os.path.basename(args.model))
    report.model_name = model.name
    _homology_table(report, text, "hh", args.max_degree, args.jobs)
    return 0


def cmd_hcminus(args, report):
    with open(args.model, encoding="utf-8") as fh:
        text = fh.read()
    model = parse_model(text, default_name=os.path.basename(args.model))
    report.model_name = model.name
    _homology_table(report, text, "hc", args.max_degree, args.jobs)
    return 0


def cmd_bv_exact(args, report):
    model = load_model(args.model)
    report.model_name = model.name
    L = build_L(model.algebra)
    lo = args.min_degree if args.min_degree is not None else 1
    rep = bvmod.bv_exactness(L, lo, args.max_degree)
    report.verdicts["bv_exact"] = rep.exact
    report.verdicts["window"] = [lo, args.max_degree]
    if not rep.exact:
        report.witnesses["witness_degree"] = rep.witness_degree
        report.witnesses["witness"] = serialize_element(rep.witness)
    if model.weights:
        wrep = bvmod.weight_check(model.algebra, model.weights)
        report.verdicts["positive_weights"] = wrep.valid
        if wrep.valid and not rep.exact:
            raise TheoremViolation(
                "model admits positive weights but is not BV exact on the window")
    if args.cross_check:
        E = build_E(L)
        sa = bvmod.s_action_triviality(L, E, lo, args.max_degree,
                                       method=args.cross_check)
        report.verdicts["reduced_s_trivial"] = sa.trivial
        inner = bvmod.bv_exactness(L, lo + 1, args.max_degree - 2)
        if inner.exact != sa.trivial:
            raise TheoremViolation(
                "BV exactness and reduced S-action triviality disagree")
    return 0


def cmd_weights(args, report):
    model = load_model(args.model)
    report.model_name = model.name
    if model.weights:
        wrep = bvmod.weight_check(model.algebra, model.weights)
        report.verdicts["valid"] = wrep.valid
        report.verdicts["weights"] = model.weights
        if not wrep.valid:
            report.witnesses["reason"] = wrep.reason
    else:
        report.verdicts["valid"] = False
        report.witnesses["reason"] = "no weight data"
    if args.search:
        found = bvmod.weight_search(model.algebra, args.search)
        report.verdicts["search_max"] = args.search
        report.verdicts["search_found"] = found
    return 0


def cmd_emss(args, report):
    model = load_model(args.model)
    report.model_name = model.name
    L = build_L(model.algebra)
    N = args.component
    pages = emssmod.SpectralPages(emssmod.ComponentComplex(L, N))
    r = args.page
    for n in range(0, args.max_degree + 1):
        row = []
        for p in range(pages.comp.min_col, n // 2 + 2):
            dim = pages.page(p, n - p, r).dim
            if dim:
                row.append(f"E_{r}^{{{p},{n - p}}} dim {dim}")
        report.add_table(n, sum(pages.page(p, n - p, r).dim
                                for p in range(pages.comp.min_col, n // 2 + 2)), row)
    if args.r_max:
        E = build_E(L)
        rep = emssmod.r_bv_exactness(L, args.r_max, args.max_degree,
                                     cross_check=E)
        report.verdicts["r_bv_exact"] = rep.r
        report.verdicts["r_max"] = args.r_max
    return 0


def cmd_sbracket(args, report):
    model = load_model(args.model)
    report.model_name = model.name
    L = build_L(model.algebra)
    E = build_E(L)
    if args.shriek:
        with open(args.shriek, encoding="utf-8") as fh:
            text = fh.read().strip()
        if text.startswith("shriek"):
            text = text.split("=", 1)[1]
        from .core import tensor_square
        from .model_io import parse_tensor_element
        T = model.tensor or tensor_square(model.algebra)
        sh = ShriekData(model.algebra, parse_tensor_element(model.algebra, T, text), T)
    elif model.shriek is not None:
        sh = ShriekData(model.algebra, model.shriek, model.tensor)
    else:
        sh = ShriekData.transversal(model.algebra)
    pipe = StringPipeline(L, E, sh, args.max_degree)
    names = HCNames(pipe, args.max_degree)
    bvrep = bvmod.bv_exactness(L, 1, args.max_degree)
    report.verdicts["bv_exact"] = bvrep.exact
    if not bvrep.exact:
        report.witnesses["warning"] = ("model is not BV exact on the window; "
                                       "the bracket identification hypotheses fail")
    for expr in args.classes or []:
        xi = parse_element(L.algebra, expr)
        named = names.express_pairs(pipe.dsb_class(xi))
        if named is None:
            raw = pipe.dsb_class(xi)
            report.witnesses[f"dsb({expr})"] = f"raw pairs: {raw}"
        else:
            terms = sorted(named.items(), key=lambda kv: str(kv[0]))
            report.witnesses[f"dsb({expr})"] = " + ".join(
                f"({c})*{a}(x){b}" for (a, b), c in terms) or "0"
    return 0


def cmd_bg(args, report):
    ms = [int(x) for x in args.degrees.split(",")]
    A = BGAlgebra(ms)
    report.model_name = f"BG(rank {len(ms)})"
    classes = [parse_bg_class(A, c) for c in (args.classes or [])]
    if len(classes) < 2:
        raise ParseError("bg needs at least two --class arguments")
    if args.gravity or len(classes) > 2:
        val = A.gravity(classes)
        report.verdicts["arity"] = len(classes)
    else:
        val = A.cobracket(classes[0], classes[1])
        report.verdicts["arity"] = 2
    report.witnesses["bracket"] = A.elt_str(val)
    return 0


def cmd_gysin_check(args, report):
    model = load_model(args.model)
    report.model_name = model.name
    L = build_L(model.algebra)
    ok, witness = gysin_check(L, args.max_degree)
    report.verdicts["gysin_ok"] = ok
    if not ok:
        report.witnesses["failure"] = str(witness)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="loopalg", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, model=True, maxdeg=True):
        if model:
            p.add_argument("model", help="path to a .sul model file")
        if maxdeg:
            p.add_argument("--max-degree", type=int, default=20)
        p.add_argument("--format", choices=["text", "json"], default="text")
        p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("parse", help="validate a model file")
    common(p, maxdeg=False)
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("hh", help="Hochschild homology table (loop cohomology)")
    common(p)
    p.set_defaults(fn=cmd_hh)

    p = sub.add_parser("hcminus", help="negative cyclic homology table")
    common(p)
    p.set_defaults(fn=cmd_hcminus)

    p = sub.add_parser("bv-exact", help="decide BV exactness on a window")
    common(p)
    p.add_argument("--min-degree", type=int, default=None)
    p.add_argument("--cross-check", choices=["direct", "kernel"], default=None,
                   help="also decide reduced S-triviality and enforce the equivalence")
    p.set_defaults(fn=cmd_bv_exact)

    p = sub.add_parser("weights", help="validate / search positive weights")
    common(p, maxdeg=False)
    p.add_argument("--search", type=int, default=None,
                   help="exhaustive search bound for free-generator weights")
    p.set_defaults(fn=cmd_weights)

    p = sub.add_parser("emss", help="word-component spectral sequence pages")
    common(p)
    p.add_argument("--component", type=int, default=0)
    p.add_argument("--page", type=int, default=1)
    p.add_argument("--r-max", type=int, default=None,
                   help="also report the smallest r with (0)E_{r+1} = 0")
    p.set_defaults(fn=cmd_emss)

    p = sub.add_parser("sbracket", help="manifold-side dual string bracket")
    common(p)
    p.add_argument("--class", dest="classes", action="append",
                   help="cocycle expression in the loop model (repeatable)")
    p.add_argument("--shriek", default=None, help="file with shriek data")
    p.set_defaults(fn=cmd_sbracket)

    p = sub.add_parser("bg", help="classifying-space string cobracket")
    p.add_argument("--degrees", required=True,
                   help="comma-separated m_i with deg y_i = 2 m_i")
    p.add_argument("--class", dest="classes", action="append",
                   help="monomial in y1..,xv1.. or u^l (repeatable)")
    p.add_argument("--gravity", action="store_true")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=cmd_bg)

    p = sub.add_parser("gysin-check", help="verify the Gysin wedge identities")
    common(p)
    p.set_defaults(fn=cmd_gysin_check)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    report = Report(command=args.command, model_name="",
                    max_degree=getattr(args, "max_degree", None))
    try:
        code = args.fn(args, report)
    except (ParseError, AlgebraError, ObstructionError, MemoryBudgetError,
            FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except TheoremViolation as exc:
        print(f"INTERNAL CONSISTENCY VIOLATION: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(emit_report(report, args.format))
    return code


if __name__ == "__main__":
    sys.exit(main())
