"""
Command-line entry point.

Exit codes: 0 ok, 1 a computational guard tripped, 2 usage error,
3 the model file failed validation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .algebra.forms import ExteriorForm
from .algebra.polyfield import from_expr
from .algebra.rational import format_rational

EXIT_OK, EXIT_GUARD, EXIT_USAGE, EXIT_MODEL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class GuardTripped(Exception):
    pass


class ModelError(Exception):
    pass


@dataclass
class RunManifest:
    tool_version: str
    command: str
    arguments: dict
    input_digests: dict[str, str] = field(default_factory=dict)
    seed: int | None = None
    seconds: float = 0.0
    result_digest: str = ""

    def to_json(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "command": self.command,
            "arguments": self.arguments,
            "input_digests": self.input_digests,
            "seed": self.seed,
            "seconds": round(self.seconds, 3),
            "result_digest": self.result_digest,
        }


def sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _table(rows: Sequence[Sequence[str]], header: Sequence[str]) -> str:
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    fmt = lambda r: "  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip()
    return "\n".join([fmt(header), fmt(["-" * w for w in widths])] + [fmt(r) for r in rows]) + "\n"


def _load_json(path: str, manifest: RunManifest) -> dict:
    from .resources import resolve_model

    try:
        raw = resolve_model(path).read_bytes()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    manifest.input_digests[Path(path).name] = sha256(raw)
    try:
        return json.loads(raw)
    except json.JSONDecodeError as e:
        raise ModelError(f"{path} is not valid JSON: {e}") from None


# --- gf ------------------------------------------------------------------------


def _complex(variant: str, n: int):
    from .gelfand_fuchs import GFError, build_complex

    if n < 1:
        raise UsageError("--n must be at least 1")
    try:
        return build_complex(variant, n)
    except GFError as e:
        raise GuardTripped(str(e)) from None


def cmd_gf(args, manifest: RunManifest) -> tuple[dict, str]:
    from .gelfand_fuchs import cohomology

    cx = _complex(args.variant, args.n)
    top = cx.top_degree
    max_degree = top if args.max_degree is None else args.max_degree
    if not 0 <= max_degree <= top:
        raise UsageError(f"--max-degree must lie in 0..{top} for {args.variant}_{args.n}")
    h = cohomology(cx, max_degree)
    data = h.to_json()
    rows = []
    for deg, reps in enumerate(h.representatives):
        rows.append([str(deg), str(h.betti[deg]), "; ".join(r.render() for r in reps)])
    text = f"H^*({args.variant}_{args.n}), degrees 0..{max_degree}\n"
    text += _table(rows, ["degree", "betti", "representatives"])
    return data, text


# --- compare -------------------------------------------------------------------

_FLAGS = {
    ("WGL", "WO"): "vanishes in the Cech-de Rham cohomology of every D_n-space",
    ("WGL", "W"): "vanishes when the frame bundle admits a section",
    ("WO", "W"): "vanishes when the frame bundle admits a section",
}


def cmd_compare(args, manifest: RunManifest) -> tuple[dict, str]:
    from .gelfand_fuchs import induced_map

    cxs = {v: _complex(v, args.n) for v in ("WGL", "WO", "W")}
    top = cxs["W"].top_degree
    if args.degree is None:
        degrees = list(range(top + 1))
    else:
        if not 0 <= args.degree <= top:
            raise UsageError(f"--degree must lie in 0..{top}")
        degrees = [args.degree]
    maps, lines = [], [f"induced maps WGL_{args.n} -> WO_{args.n} -> W_{args.n}\n"]
    for deg in degrees:
        for src, tgt in (("WGL", "WO"), ("WO", "W"), ("WGL", "W")):
            m = induced_map(cxs[src], cxs[tgt], deg)
            if not m.source_representatives and not m.target_representatives:
                continue
            kernel = [k.render() for k in m.kernel]
            entry = {
                "degree": deg,
                "source": src,
                "target": tgt,
                "source_basis": [r.render() for r in m.source_representatives],
                "target_basis": [r.render() for r in m.target_representatives],
                "matrix": [[format_rational(x) for x in row] for row in m.matrix],
                "rank": m.rank,
                "zero": m.is_zero(),
                "isomorphism": m.is_isomorphism(),
                "kernel": kernel,
                "flagged": [{"class": k, "note": _FLAGS[(src, tgt)]} for k in kernel],
            }
            maps.append(entry)
            status = "isomorphism" if entry["isomorphism"] else ("zero" if entry["zero"] else f"rank {entry['rank']}")
            lines.append(f"degree {deg}: {src} -> {tgt}  [{status}]\n")
            lines.append(f"  basis {entry['source_basis']} -> {entry['target_basis']}\n")
            lines.append(f"  matrix {entry['matrix']}\n")
            for k in kernel:
                lines.append(f"  kernel {k}: {_FLAGS[(src, tgt)]}\n")
    summary = {
        f"{s}->{t}": {
            "zero_in_positive_degrees": all(e["zero"] for e in maps if (e["source"], e["target"]) == (s, t) and e["degree"] > 0),
            "isomorphism_in_all_degrees": all(e["isomorphism"] for e in maps if (e["source"], e["target"]) == (s, t)),
        }
        for s, t in (("WGL", "WO"), ("WO", "W"), ("WGL", "W"))
    }
    data = {"n": args.n, "degrees": degrees, "maps": maps, "summary": summary}
    for key, v in summary.items():
        lines.append(f"{key} over degrees {degrees[0]}..{degrees[-1]}: zero in positive degrees={v['zero_in_positive_degrees']}, "
                     f"isomorphism in all degrees={v['isomorphism_in_all_degrees']}\n")
    return data, "".join(lines)


# --- realize / invariance -------------------------------------------------------


def _class_element(expr: str, n: int):
    from .gelfand_fuchs import GFError, parse_element

    cx = _complex("W", n)
    try:
        return parse_element(cx, expr)
    except GFError as e:
        raise UsageError(f"bad class expression {expr!r}: {e}") from None


def _coords(n: int, K: int, one_dimensional: bool = False):
    from .jets import JetCoordinates, JetError

    if one_dimensional and n != 1:
        raise UsageError("the map families act on codimension-one jets; use --n 1")
    try:
        return JetCoordinates(n, K)
    except JetError as e:
        raise UsageError(str(e)) from None


def cmd_realize(args, manifest: RunManifest) -> tuple[dict, str]:
    from .jets import JetError, realize_class

    coords = _coords(args.n, args.K)
    elem = _class_element(args.class_expr, args.n)
    try:
        form = realize_class(elem, coords)
    except JetError as e:
        raise UsageError(str(e)) from None
    data = {"class": elem.render(), "n": args.n, "K": args.K, "form": form.render(), "form_terms": form.to_json(),
            "closed": form.d().is_zero()}
    return data, form.render() + "\n"


_TERM_SPLIT = re.compile(r"\s+([+-])\s+")


def parse_form(text: str, coords) -> ExteriorForm:
    """Parse forms as printed, e.g. ``-1/x1^3 * dx0^dx1^dx2`` or ``dx0 - x2/x1^2 * dx1``."""
    C, K = coords.symbols, coords.field
    pieces, depth, start, signs = [], 0, 0, [1]
    s = text.strip()
    i = 0
    while i < len(s):
        ch = s[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif depth == 0 and i > 0 and ch in "+-" and s[i - 1] == " " and i + 1 < len(s) and s[i + 1] == " ":
            pieces.append(s[start:i].strip())
            signs.append(1 if ch == "+" else -1)
            start = i + 1
        i += 1
    pieces.append(s[start:].strip())
    out = None
    for sign, piece in zip(signs, pieces):
        coef_txt, _, wedge_txt = piece.rpartition("*") if re.search(r"\*\s*d", piece) else ("", "", piece)
        wedge_txt = wedge_txt.strip()
        if coef_txt.strip() in ("", "-") and not re.fullmatch(r"-?d\w+(\^d\w+)*", wedge_txt):
            raise UsageError(f"cannot parse form term {piece!r}")
        neg = wedge_txt.startswith("-")
        names = [w[1:] for w in wedge_txt.lstrip("-").split("^")]
        if any(nm not in C for nm in names):
            raise UsageError(f"unknown coordinate in {piece!r}; coordinates are {', '.join(C)}")
        try:
            coef = from_expr(K, coef_txt) if coef_txt.strip() else K.one
        except Exception:
            raise UsageError(f"cannot parse coefficient {coef_txt!r}") from None
        if neg:
            coef = -coef
        term = ExteriorForm(C, len(names), {tuple(C.index(nm) for nm in names): coef * sign}, K)
        out = term if out is None else out + term
    return out


def _family(names: str):
    from .jets import generic_polynomial, reflection, scaling

    table: dict[str, Callable] = {
        "cubic": lambda: generic_polynomial(3),
        "quadratic": lambda: generic_polynomial(2),
        "scaling": scaling,
        "reflection": reflection,
    }
    out = []
    for name in [x.strip() for x in names.split(",") if x.strip()]:
        if name not in table:
            raise UsageError(f"unknown family member {name!r}; choose from {', '.join(table)}")
        out.append(table[name]())
    if not out:
        raise UsageError("--family is empty")
    return out


def cmd_invariance(args, manifest: RunManifest) -> tuple[dict, str]:
    from .jets import JetError, check_invariance, realize_class

    coords = _coords(args.n, args.K, one_dimensional=True)
    if (args.class_expr is None) == (args.form is None):
        raise UsageError("give exactly one of --class or --form")
    family = _family(args.family)
    if args.class_expr is not None:
        try:
            form = realize_class(_class_element(args.class_expr, args.n), coords)
        except JetError as e:
            raise UsageError(str(e)) from None
    else:
        form = parse_form(args.form, coords)
    rep = check_invariance(form, coords, family)
    data = {"form": form.render(), "family": [h.name for h in family], **rep.to_json()}
    text = f"form: {form.render()}\n"
    for name in rep.checked:
        ok = name != rep.failed
        text += f"  {'invariant' if ok else 'NOT invariant'} under {name}\n"
    if rep.residual is not None:
        text += f"  residual: {rep.residual.render()}\n"
    return data, text


# --- cdr / verify-homotopy -------------------------------------------------------


def cmd_cdr(args, manifest: RunManifest) -> tuple[dict, str]:
    from .cech import GuardError, ModelValidationError, category_from_dict, total_cohomology

    if args.max_degree < 0:
        raise UsageError("--max-degree must be nonnegative")
    raw = _load_json(args.model, manifest)
    try:
        cat = category_from_dict(raw)
    except ModelValidationError as e:
        raise ModelError(str(e)) from None
    try:
        res = total_cohomology(cat, args.max_degree)
    except GuardError as e:
        raise GuardTripped(str(e)) from None
    data = {"model": Path(args.model).name, "max_degree": args.max_degree, **res.to_json()}
    if not args.representatives:
        data.pop("representatives")
    rows = [[str(n), str(b)] for n, b in enumerate(res.betti)]
    text = f"total cohomology of {Path(args.model).name}\n" + _table(rows, ["degree", "betti"])
    if args.representatives:
        for rep in res.to_json()["representatives"]:
            text += f"degree {rep['degree']}: {json.dumps(rep['components'])}\n"
    return data, text


def cmd_verify_homotopy(args, manifest: RunManifest) -> tuple[dict, str]:
    from .cech import GuardError, ModelValidationError
    from .homotopy import fibered_cover_from_dict, verify_identities

    if args.trials < 1 or args.max_degree < 0:
        raise UsageError("--trials must be positive and --max-degree nonnegative")
    if not 0 <= args.seed < 2 ** 64:
        raise UsageError("--seed must be an unsigned 64-bit integer")
    manifest.seed = args.seed
    raw = _load_json(args.model, manifest)
    try:
        cover = fibered_cover_from_dict(raw)
        rep = verify_identities(cover, args.trials, args.max_degree, args.seed)
    except ModelValidationError as e:
        raise ModelError(str(e)) from None
    except GuardError as e:
        raise GuardTripped(str(e)) from None
    data = {"model": Path(args.model).name, "covers": cover.to_json(), **rep.to_json()}
    rows = [[f"({d.p},{d.q})", str(d.trials), str(d.lambda_mu_residual), str(d.homotopy_residual),
             str(d.F_commutes_with_d), "-" if d.k2_crosscheck is None else str(d.k2_crosscheck),
             "pass" if d.passed else "FAIL"] for d in rep.degrees]
    text = f"homotopy check on {Path(args.model).name} (seed {args.seed})\n"
    text += _table(rows, ["(p,q)", "trials", "lambda.mu-id", "mu.lambda-id-(dF+Fd)", "F.d=d.F", "k=2", "result"])
    if rep.cohomology is not None:
        text += (f"cohomology: small {rep.cohomology['small_betti']}, big {rep.cohomology['big_betti']}, "
                 f"mu and lambda mutually inverse: {rep.cohomology['mutually_inverse']}\n")
    text += f"overall: {'pass' if rep.passed else 'FAIL'}\n"
    return data, text


# --- parser ----------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="foliacoh", description="Characteristic classes of foliations: exact computations.")
    p.add_argument("--version", action="version", version=f"foliacoh {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--format", choices=("table", "json"), default="table")
        sp.add_argument("--output", help="write the result here instead of stdout")
        sp.add_argument("--manifest", help="write a run manifest (digests, seed, timing) here")

    sp = sub.add_parser("gf", help="cohomology of the truncated Weil-type models")
    sp.add_argument("--variant", choices=("W", "WO", "WGL"), required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--max-degree", type=int)
    common(sp)
    sp.set_defaults(func=cmd_gf)

    sp = sub.add_parser("compare", help="induced maps WGL -> WO -> W with kernels")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--degree", type=int)
    common(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("realize", help="differential form of a class on jets")
    sp.add_argument("--class", dest="class_expr", required=True)
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--K", type=int, default=3)
    common(sp)
    sp.set_defaults(func=cmd_realize)

    sp = sub.add_parser("invariance", help="check a form against a family of jet maps")
    sp.add_argument("--class", dest="class_expr")
    sp.add_argument("--form")
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--K", type=int, default=3)
    sp.add_argument("--family", default="cubic,scaling,reflection")
    common(sp)
    sp.set_defaults(func=cmd_invariance)

    sp = sub.add_parser("cdr", help="total cohomology of a chart-category model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--max-degree", type=int, default=2)
    sp.add_argument("--representatives", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_cdr)

    sp = sub.add_parser("verify-homotopy", help="check the cover-comparison identities on a fibered model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--max-degree", type=int, default=3)
    common(sp)
    sp.set_defaults(func=cmd_verify_homotopy)
    return p


def _arguments(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "output", "manifest", "format")}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    manifest = RunManifest(__version__, args.command, _arguments(args))
    t0 = time.perf_counter()
    try:
        data, text = args.func(args, manifest)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except GuardTripped as e:
        print(f"guard: {e}", file=sys.stderr)
        return EXIT_GUARD
    except ModelError as e:
        print(f"model: {e}", file=sys.stderr)
        return EXIT_MODEL
    out = dump_json(data) if args.format == "json" else text
    manifest.seconds = time.perf_counter() - t0
    manifest.result_digest = sha256(dump_json(data).encode())
    if args.output:
        Path(args.output).write_text(out, encoding="utf-8")
    else:
        sys.stdout.write(out)
    if args.manifest:
        Path(args.manifest).write_text(dump_json(manifest.to_json()), encoding="utf-8")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
