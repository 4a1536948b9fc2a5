"""Command-line front end: parameter parsing, an expression mini-language
for algebra elements, check execution, and JSON/text reporting.

Grammar of element expressions (absolute 1-based variable indices):

    expr   := term (('+' | '-') term)*
    term   := [int '*'] factor
    factor := mono | 'DH(' expr ')' | mono 'd' int | 'd' int
              | '[' expr ',' expr ']' | int
    mono   := 'x^(' int,...,int ')' ['x{' int,...,int '}'] | 'x{' int,... '}'

The canonical printers in algebra/witt emit exactly this syntax, so
parse . print is the identity on canonical encodings.

Exit codes: 0 ok, 2 check failure, 3 usage/expression error, 4 budget
exhaustion.
"""

from __future__ import annotations

import argparse
import json
import sys

from .algebra import Params, ParamsError, SuperPoly, poly_str
from .derivations import LinearMapOnBasis, der_space_homogeneous
from .linalg import BudgetError
from .spaces import build_space
from .verify import (
    Policy,
    Report,
    applicable_checks,
    classify_derivation,
    params_dict,
    run_check,
)
from .witt import VectorField, bracket, d_h, field_str


class ParseError(ValueError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


# -- expression parser -------------------------------------------------------

class _Parser:
    def __init__(self, src: str, par: Params):
        self.src = src
        self.par = par
        self.pos = 0

    def error(self, msg):
        raise ParseError(msg, self.pos)

    def skip_ws(self):
        while self.pos < len(self.src) and self.src[self.pos] in " \t":
            self.pos += 1

    def peek(self):
        self.skip_ws()
        return self.src[self.pos] if self.pos < len(self.src) else ""

    def eat(self, text):
        self.skip_ws()
        if self.src.startswith(text, self.pos):
            self.pos += len(text)
            return True
        return False

    def expect(self, text):
        if not self.eat(text):
            self.error(f"expected {text!r}")

    def integer(self):
        self.skip_ws()
        start = self.pos
        if self.pos < len(self.src) and self.src[self.pos] == "-":
            self.pos += 1
        while self.pos < len(self.src) and self.src[self.pos].isdigit():
            self.pos += 1
        if self.pos == start or self.src[start:self.pos] == "-":
            self.pos = start
            self.error("expected an integer")
        return int(self.src[start:self.pos])

    def int_list(self, close):
        out = [self.integer()]
        while self.eat(","):
            out.append(self.integer())
        self.expect(close)
        return out

    def parse(self):
        node = self.expr()
        self.skip_ws()
        if self.pos != len(self.src):
            self.error("trailing input")
        return node

    def expr(self):
        terms = [(1, self.term())]
        while True:
            if self.eat("+"):
                terms.append((1, self.term()))
            elif self.eat("-"):
                terms.append((-1, self.term()))
            else:
                return ("sum", terms)

    def term(self):
        self.skip_ws()
        save = self.pos
        if self.peek().isdigit():
            c = self.integer()
            if self.eat("*"):
                return ("scale", c, self.factor())
            self.pos = save
        return self.factor()

    def factor(self):
        self.skip_ws()
        ch = self.peek()
        if self.eat("DH("):
            inner = self.expr()
            self.expect(")")
            return ("dh", inner)
        if ch == "[":
            self.expect("[")
            a = self.expr()
            self.expect(",")
            b = self.expr()
            self.expect("]")
            return ("bracket", a, b)
        if ch == "d" and not self.src.startswith("DH", self.pos):
            self.expect("d")
            return ("field", ("mono", None, []), self.integer())
        if ch == "x":
            mono = self.mono()
            self.skip_ws()
            if (self.pos < len(self.src) and self.src[self.pos] == "d"
                    and not self.src.startswith("DH", self.pos)):
                self.pos += 1
                return ("field", mono, self.integer())
            return mono
        if ch.isdigit():
            return ("int", self.integer())
        self.error("expected a monomial, DH(...), a field term or a bracket")

    def mono(self):
        alpha = None
        u = []
        start = self.pos
        if self.eat("x^("):
            alpha = self.int_list(")")
        if self.eat("x{"):
            u = self.int_list("}")
        if alpha is None and not u:
            self.pos = start
            self.error("expected x^(...) or x{...}")
        return ("mono", alpha, u)


def parse_expr(src: str, par: Params):
    """Parse an element expression; returns the AST or raises ParseError."""
    return _Parser(src, par).parse()


def eval_ast(par: Params, node):
    """Evaluate an AST to ('poly', SuperPoly) | ('field', VectorField)."""
    kind = node[0]
    if kind == "int":
        return ("poly", SuperPoly.one(par).scale(node[1]))
    if kind == "mono":
        _, alpha, u = node
        alpha = tuple(alpha) if alpha is not None else par.zero_alpha()
        if len(alpha) != par.two_m:
            raise ParamsError(
                f"x^(...) needs {par.two_m} exponents, got {len(alpha)}")
        mono = par.mono_from_u(alpha, u)
        return ("poly", SuperPoly.monomial(par, mono))
    if kind == "scale":
        t, v = eval_ast(par, node[2])
        return (t, v.scale(node[1]))
    if kind == "dh":
        t, v = eval_ast(par, node[1])
        if t != "poly":
            raise ParamsError("DH(...) takes an algebra element")
        return ("field", d_h(v))
    if kind == "field":
        _, mono_node, d = node
        if not 1 <= d <= par.nvars:
            raise ParamsError(f"direction d{d} outside 1..{par.nvars}")
        t, v = eval_ast(par, mono_node)
        out = VectorField.zero(par)
        for mono, c in v.terms.items():
            out = out + VectorField.monomial_field(par, mono, d - 1, c)
        return ("field", out)
    if kind == "bracket":
        ta, a = eval_ast(par, node[1])
        tb, b = eval_ast(par, node[2])
        if ta != "field" or tb != "field":
            raise ParamsError("brackets take vector fields")
        return ("field", bracket(a, b))
    if kind == "sum":
        acc = None
        for sign, sub in node[1]:
            t, v = eval_ast(par, sub)
            v = v.scale(sign)
            if acc is None:
                acc = (t, v)
            else:
                if acc[0] != t:
                    if acc[1].is_zero():
                        acc = (t, v)
                        continue
                    if v.is_zero():
                        continue
                    raise ParamsError("cannot mix algebra elements and fields in a sum")
                acc = (t, acc[1] + v)
        return acc
    raise ParamsError(f"unknown AST node {kind!r}")


def evaluate(src: str, par: Params):
    return eval_ast(par, parse_expr(src, par))


def value_str(tv):
    t, v = tv
    return poly_str(v) if t == "poly" else field_str(v)


# -- reports ------------------------------------------------------------------

def report_dict(rep: Report, canonical=False) -> dict:
    return {
        "check": rep.check,
        "params": {"p": rep.params["p"], "m": rep.params["m"],
                   "n": rep.params["n"], "t": rep.params["t"],
                   "mode": rep.params["mode"]},
        "status": rep.status,
        "dims": {k: rep.dims[k] for k in sorted(rep.dims)},
        "values": {k: rep.values[k] for k in sorted(rep.values)},
        "counterexamples": list(rep.counterexamples),
        "seed": rep.seed,
        "elapsed_ms": 0 if canonical else rep.elapsed_ms,
        "extrapolated": rep.extrapolated,
    }


def report_text(rep: Report) -> str:
    lines = [f"[{rep.status.upper():11s}] {rep.check}  "
             f"(p={rep.params['p']}, m={rep.params['m']}, n={rep.params['n']}, "
             f"t={rep.params['t']}, {rep.params['mode']}"
             f"{', extrapolated' if rep.extrapolated else ''})"]
    for k in sorted(rep.dims):
        lines.append(f"    dim {k} = {rep.dims[k]}")
    for k in sorted(rep.values):
        lines.append(f"    {k} = {rep.values[k]}")
    for c in rep.counterexamples:
        lines.append(f"    counterexample: {c}")
    lines.append(f"    seed {rep.seed}, {rep.elapsed_ms} ms")
    return "\n".join(lines)


def emit_report(reports, fmt="json", path=None, canonical=False) -> str:
    """Serialize reports (stable key order); returns the text, writes to
    path when given.  canonical=True zeroes elapsed_ms so identical runs
    produce byte-identical artifacts."""
    if fmt == "json":
        payload = [report_dict(r, canonical=canonical) for r in reports]
        text = json.dumps(payload if len(payload) != 1 else payload[0],
                          indent=2, sort_keys=False)
    elif fmt == "text":
        text = "\n".join(report_text(r) for r in reports)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


# -- config -------------------------------------------------------------------

CONFIG_KEYS = {"p": int, "m": int, "n": int, "t": str, "mode": str,
               "seed": lambda s: int(s, 0), "sample_count": int, "cap": int,
               "closure_budget": int, "der_budget": int,
               "output": str, "format": str}


def read_config_file(path):
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParamsError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ParamsError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = CONFIG_KEYS[key](val)
    return out


def build_parser():
    ap = argparse.ArgumentParser(
        prog="modham",
        description="Exact computations in modular Hamiltonian/Witt Lie "
                    "superalgebras over GF(p), with a reproducible check suite.")
    ap.add_argument("--config", help="key = value parameter file; flags override")
    ap.add_argument("--p", type=int)
    ap.add_argument("--m", type=int, help="half the even-variable count")
    ap.add_argument("--n", type=int)
    ap.add_argument("--t", help="comma-separated heights, one per even variable")
    ap.add_argument("--mode", choices=["strict", "relaxed"])
    ap.add_argument("--seed", type=lambda s: int(s, 0))
    ap.add_argument("--sample-count", type=int, dest="sample_count")
    ap.add_argument("--cap", type=int)
    ap.add_argument("--closure-budget", type=int, dest="closure_budget")
    ap.add_argument("--der-budget", type=int, dest="der_budget")
    ap.add_argument("--output")
    ap.add_argument("--format", choices=["json", "text"])
    ap.add_argument("--canonical", action="store_true",
                    help="zero volatile fields (elapsed_ms) in reports")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("info", help="dimensions and parameter tables")
    p_eval = sub.add_parser("eval", help="evaluate an element expression")
    p_eval.add_argument("expr")
    p_br = sub.add_parser("bracket", help="bracket of two field expressions")
    p_br.add_argument("expr1")
    p_br.add_argument("expr2")
    p_ver = sub.add_parser("verify", help="run one named check or 'all'")
    p_ver.add_argument("check")
    p_ver.add_argument("--include-oracle", action="store_true",
                       help="include the relaxed-mode Der-space oracle in 'all'")
    p_der = sub.add_parser("derspace", help="brute-force Der_[k](domain, codomain)")
    p_der.add_argument("--degree", type=int, required=True)
    p_der.add_argument("--domain", default="N", choices=["N", "Heven"])
    p_der.add_argument("--codomain", default="Weven", choices=["Weven", "W"])
    p_der.add_argument("--budget", type=int, default=200_000)
    p_cls = sub.add_parser("classify", help="classify a derivation given by images")
    p_cls.add_argument("--map", required=True,
                       help="file of lines 'DH(<mono>) : <field expr>'")
    p_cls.add_argument("--domain", default="N", choices=["N", "Heven"])
    return ap


def load_params(args):
    cfg = read_config_file(args.config) if args.config else {}
    def pick(name, default=None):
        v = getattr(args, name, None)
        if v is not None:
            return v
        return cfg.get(name, default)
    p = pick("p", 5)
    m = pick("m", 2)
    n = pick("n", 4)
    t = pick("t")
    if t is None:
        t = [1] * (2 * m)
    elif isinstance(t, str):
        t = [int(x) for x in t.split(",") if x.strip()]
    mode = pick("mode", "strict")
    par = Params(p=p, m=m, n=n, t=t, relaxed=(mode == "relaxed"))
    policy = Policy(seed=pick("seed", 0xC0FFEE),
                    sample_count=pick("sample_count", 1_000_000),
                    cap=pick("cap", 6),
                    closure_budget=pick("closure_budget"),
                    der_budget=pick("der_budget", 200_000))
    out = pick("output")
    fmt = pick("format", "text" if not out else "json")
    return par, policy, out, fmt


def read_map_file(path, par, domain):
    images = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if ":" not in line:
                raise ParamsError(f"{path}:{lineno}: expected 'DH(mono) : field'")
            lhs, rhs = (s.strip() for s in line.split(":", 1))
            t, v = evaluate(lhs, par)
            if t != "field":
                raise ParamsError(f"{path}:{lineno}: left side must be DH(monomial)")
            vec = domain.space.coordinatize(v)
            if vec is None or len(vec) != 1 or set(vec.values()) != {1}:
                raise ParamsError(
                    f"{path}:{lineno}: left side must be a single domain basis "
                    f"vector DH(monomial)")
            key = domain.space.keys[next(iter(vec))]
            if domain.key_position(key) is None:
                raise ParamsError(f"{path}:{lineno}: {lhs} is not in the domain")
            tf, img = evaluate(rhs, par)
            if tf != "field":
                raise ParamsError(f"{path}:{lineno}: right side must be a field")
            images[key] = img
    return LinearMapOnBasis.from_key_images(domain, images)


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 3 if exc.code not in (0, None) else 0
    try:
        par, policy, out_path, fmt = load_params(args)
    except (ParamsError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3

    try:
        if args.command == "info":
            dims = {name: build_space(par, name).dim
                    for name in ("O", "W", "Weven", "H", "Heven", "N", "G")}
            payload = {"params": params_dict(par),
                       "pi": list(par.pi), "xi": par.xi, "dims": dims}
            text = json.dumps(payload, indent=2)
            if out_path:
                with open(out_path, "w") as fh:
                    fh.write(text + "\n")
            print(text)
            return 0

        if args.command == "eval":
            tv = evaluate(args.expr, par)
            result = {"input": args.expr, "type": tv[0], "value": value_str(tv)}
            print(json.dumps(result, indent=2) if fmt == "json" else result["value"])
            return 0

        if args.command == "bracket":
            t1, v1 = evaluate(args.expr1, par)
            t2, v2 = evaluate(args.expr2, par)
            if t1 != "field" or t2 != "field":
                print("error: bracket takes two vector fields", file=sys.stderr)
                return 3
            res = bracket(v1, v2)
            payload = {"bracket_of": [args.expr1, args.expr2],
                       "value": field_str(res)}
            print(json.dumps(payload, indent=2) if fmt == "json" else payload["value"])
            return 0

        if args.command == "verify":
            if args.check == "all":
                ids = applicable_checks(par, include_oracle=args.include_oracle)
            else:
                ids = [args.check]
            reports = [run_check(cid, par, policy) for cid in ids]
            text = emit_report(reports, fmt=fmt, path=out_path,
                               canonical=args.canonical)
            print(text)
            if any(r.values.get("budget_exhausted") for r in reports):
                return 4
            return 0 if all(r.status != "fail" for r in reports) else 2

        if args.command == "derspace":
            dom = build_space(par, args.domain)
            cod = build_space(par, args.codomain)
            maps = der_space_homogeneous(dom, cod, args.degree, budget=args.budget,
                                         seed=policy.seed)
            payload = {"domain": args.domain, "codomain": args.codomain,
                       "degree": args.degree, "dim": len(maps)}
            print(json.dumps(payload, indent=2))
            return 0

        if args.command == "classify":
            dom = build_space(par, args.domain)
            Dm = read_map_file(args.map, par, dom)
            outcomes = classify_derivation(Dm)
            payload = []
            for oc in outcomes:
                payload.append({
                    "degree": oc.degree,
                    "inner": field_str(oc.inner),
                    "coefficients": oc.coefficients.nonzero(),
                    "mu_eta_product_zero": oc.coefficients.mu_eta_product_ok(),
                    "residual_zero": oc.residual_zero,
                    "notes": oc.notes,
                })
            text = json.dumps(payload, indent=2)
            if out_path:
                with open(out_path, "w") as fh:
                    fh.write(text + "\n")
            print(text)
            return 0
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except BudgetError as exc:
        print(f"error: budget exhausted: {exc}", file=sys.stderr)
        return 4
    except (ParamsError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 3


if __name__ == "__main__":
    sys.exit(main())
