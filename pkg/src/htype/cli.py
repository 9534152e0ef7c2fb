"""Command line interface.

Exit codes: 0 success, 2 precondition violation, 3 inequality violated
beyond its error bar, 64 usage error, 74 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import _mc
from .clifford import verify_generators
from .constants import all_constants
from .errors import InequalityViolation, PreconditionError
from .extremals import (ConformalParams, bump, cayley_jacobian, conformal_orbit, extremal_U,
                        f_epsilon, omega, phi)
from .functionals import (QuotientReport, hardy_quotient, hls_value, logsob_pair,
                          poisson_extension, sobolev_quotient, subseed, trace_quotient)
from .group import GroupPoint, GroupSpec
from .integrate import IntegrationSpec, integrate_G

EXIT_OK, EXIT_PRECONDITION, EXIT_VIOLATION, EXIT_USAGE, EXIT_IO = 0, 2, 3, 64, 74
SUITES = ("sobolev", "hardy", "hls", "logsob", "trace")
FIELDS = ("U", "phi", "J", "omega:j", "feps", "bump")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def fmt(x) -> str:
    """Locale-free float text with 17 significant digits."""
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


# output ---------------------------------------------------------------------

def _rows_to_text(rows: list[dict], kind: str) -> str:
    if kind == "json":
        return json.dumps(rows, indent=2, default=float) + "\n"
    if not rows:
        return ""
    cols = list(rows[0])
    if kind == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([fmt(r[c]) for c in cols])
        return buf.getvalue()
    cells = [[c for c in cols]] + [[fmt(r[c]) if not isinstance(r[c], float) else f"{r[c]:.10g}"
                                    for c in cols] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(cols))]
    return "".join("  ".join(v.ljust(wd) for v, wd in zip(row, widths)).rstrip() + "\n"
                   for row in cells)


def _emit(text: str, output: str | None) -> None:
    if output:
        try:
            Path(output).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {output}: {exc.strerror}") from exc
    else:
        sys.stdout.write(text)


def _report_row(suite: str, label: str, r: QuotientReport) -> dict:
    return {"suite": suite, "label": label, "value": r.value, "error": r.error,
            "sharp_constant": r.sharp_constant, "deficit": r.deficit, "kind": r.kind,
            "violated": int(r.violated(2.0))}


# suites ---------------------------------------------------------------------

def run_suite(name: str, G: GroupSpec, s: float, samples: int, seed: int) -> list[dict]:
    """Equality-case checks for one inequality; one row per quotient."""
    spec = IntegrationSpec("monte-carlo", samples, seed=seed)
    U = extremal_U(G, s)
    if name == "sobolev":
        eta = GroupPoint(np.eye(2 * G.n)[0], 0.5 * np.ones(G.m))
        V = conformal_orbit(G, ConformalParams(2.0, eta, s))
        return [_report_row(name, "U", sobolev_quotient(G, U, s, spec)),
                _report_row(name, "U(mu=2,eta)", sobolev_quotient(G, V, s, spec.with_seed(subseed(seed, 11))))]
    if name == "hardy":
        return [_report_row(name, "U", hardy_quotient(G, U, s, spec))]
    if name == "hls":
        return [_report_row(name, "phi_s", hls_value(G, phi(G, s, 1.0), phi(G, s, 1.0), s, spec))]
    if name == "logsob":
        rows = []
        for eps in (0.2, 0.1, 0.05):
            lhs, rhs = logsob_pair(G, f_epsilon(G, eps), spec)
            v = lhs.value / rhs.value
            e = abs(v) * math.hypot(lhs.error / lhs.value, rhs.error / rhs.value)
            rows.append(_report_row(name, f"F_eps={eps:g}", QuotientReport(v, e, 1.0, f"eps={eps:g}")))
        return rows
    if name == "trace":
        return [_report_row(name, "P(U)", trace_quotient(G, poisson_extension(G, U, s), s, spec))]
    raise PreconditionError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")


def _check_rows(rows: list[dict]) -> None:
    bad = [r for r in rows if r["violated"]]
    if bad:
        r = bad[0]
        raise InequalityViolation(
            f"{r['suite']} {r['label']}: value {r['value']:.8g} beyond sharp constant "
            f"{r['sharp_constant']:.8g} by more than 2 sigma ({r['error']:.3g})")


# subcommands ------------------------------------------------------------------

def _field(G: GroupSpec, name: str, s: float, rho: float = 1.0, eps: float = 0.1):
    if name == "U":
        return extremal_U(G, s)
    if name == "phi":
        return phi(G, s, rho)
    if name == "J":
        return cayley_jacobian(G)
    if name == "feps":
        return f_epsilon(G, eps)
    if name == "bump":
        return bump(G, GroupPoint(np.zeros(2 * G.n), np.zeros(G.m)))
    if name.startswith("omega:"):
        try:
            j = int(name.split(":", 1)[1])
        except ValueError as exc:
            raise PreconditionError(f"omega index must be an integer, got {name!r}") from exc
        return omega(G, s, j)
    raise PreconditionError(f"unknown field {name!r}; choose from {', '.join(FIELDS)}")


def _vector(text: str, size: int, what: str) -> np.ndarray:
    try:
        v = np.array([float(t) for t in text.split(",")]) if text else np.zeros(size)
    except ValueError as exc:
        raise PreconditionError(f"{what} must be comma-separated numbers, got {text!r}") from exc
    if v.shape != (size,):
        raise PreconditionError(f"{what} needs {size} components, got {v.size}")
    return v


def cmd_constants(a, G):
    rows = [{"name": k, "value": v, "error": 0.0, "context_range": rng}
            for k, (v, rng) in all_constants(G.n, G.m, a.s).items()]
    return rows


def cmd_group(a, G):
    rep = verify_generators(G.gens)
    if a.format == "json":
        d = G.to_dict()
        d["residuals"] = {"skew": rep.skew, "orthogonal": rep.orthogonal, "anticommute": rep.anticommute}
        return d
    return [{"k": k + 1, "i": i + 1, "j": j + 1, "value": float(G.mats[k, i, j])}
            for k in range(G.m) for i in range(2 * G.n) for j in range(2 * G.n)]


def cmd_field(a, G):
    f = _field(G, a.name, a.s, a.rho, a.eps)
    x = _vector(a.at, G.dim, "--at")
    return [{"field": f.name, "value": float(f(GroupPoint(x[:2 * G.n], x[2 * G.n:]))), "error": 0.0}]


def cmd_integrate(a, G):
    f = _field(G, a.name, a.s, a.rho, a.eps)
    nodes = a.nodes if a.method != "monte-carlo" else a.samples
    e = integrate_G(G, f, IntegrationSpec(a.method, nodes, seed=a.seed))
    return [{"field": f.name, "method": a.method, "value": e.value, "error": e.error, "tail": e.tail}]


def cmd_verify(a, G):
    rows = []
    for name in _suite_list(a.suite):
        rows += run_suite(name, G, a.s, a.samples, a.seed)
    return rows


def cmd_sharpness(a, G):
    from .sharpness import FAMILIES, minimize_quotient, subcritical_lambda
    if a.family not in FAMILIES:
        raise PreconditionError(f"unknown family {a.family!r}; choose from {', '.join(FAMILIES)}")
    fam = FAMILIES[a.family](G, a.s)
    kw = dict(budget=a.budget, seed=a.seed, samples=a.samples, method=a.method_search,
              grid_nodes=a.nodes)
    res = (subcritical_lambda(G, a.s, a.p, fam, **kw) if a.p is not None
           else minimize_quotient(G, a.s, fam, **kw))
    if a.format == "json":
        return {"family": fam.name, "theta": res.theta.tolist(), "value": res.value,
                "error": res.error, "sharp_constant": res.sharp_constant,
                "iterations": res.iterations, "converged": res.converged,
                "trace": [{"iteration": i, "theta": list(map(float, th)), "value": v, "error": e}
                          for i, th, v, e in res.trace]}
    rows = []
    for i, th, v, e in res.trace:
        row = {"iteration": i}
        row.update({f"theta{j}": float(t) for j, t in enumerate(th)})
        row.update({"value": v, "error": e})
        rows.append(row)
    return rows


def _suite_list(text: str) -> list[str]:
    names = [t.strip() for t in text.split(",") if t.strip()] if text else []
    for nm in names:
        if nm not in SUITES:
            raise PreconditionError(f"unknown suite {nm!r}; choose from {', '.join(SUITES)}")
    return names


DAT_COLUMNS = ("index", "value", "error", "sharp_constant", "deficit")


def write_report(G: GroupSpec, s: float, suites: list[str], samples: int, seed: int,
                 outdir: str) -> dict:
    """Run ``suites`` and write ``report.json`` plus one ``<suite>.dat`` each."""
    out = Path(outdir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc.strerror}") from exc
    report = {"n": G.n, "m": G.m, "s": s, "samples": samples, "seed": seed, "suites": {}}
    for name in suites:
        rows = run_suite(name, G, s, samples, seed)
        report["suites"][name] = rows
        lines = [f"# suite {name} at n={G.n} m={G.m} s={fmt(s)} samples={samples} seed={seed}",
                 "# columns: " + " ".join(DAT_COLUMNS)]
        lines += [f"# row {i}: {r['label']}" for i, r in enumerate(rows)]
        lines += [" ".join([str(i)] + [fmt(float(r[c])) for c in DAT_COLUMNS[1:]])
                  for i, r in enumerate(rows)]
        path = out / f"{name}.dat"
        try:
            path.write_text("\n".join(lines) + "\n")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    path = out / "report.json"
    try:
        path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return report


# argument handling ------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nodes", type=int, default=32, help="grid nodes per radial axis")
    p.add_argument("--format", choices=("csv", "json", "table"), default="table")
    p.add_argument("--csv", dest="format", action="store_const", const="csv")
    p.add_argument("--json", dest="format", action="store_const", const="json")
    p.add_argument("--output", default=None)
    p.add_argument("--config", default=None, help="file of `key = value` lines")
    p.add_argument("--threads", type=int, default=None)


def _field_args(p: argparse.ArgumentParser, default: str) -> None:
    p.add_argument("--name", "--field", dest="name", default=default,
                   help="U, phi, J, omega:j, feps or bump")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="htype", description="Sharp inequalities on H-type groups")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    p = sub.add_parser("constants", help="closed-form constants")
    _common(p)
    p = sub.add_parser("group", help="dump the generator matrices")
    _common(p)
    p.add_argument("action", nargs="?", choices=("dump",), default="dump")
    p = sub.add_parser("field", help="evaluate a built-in field at a point")
    _common(p)
    p.add_argument("action", nargs="?", choices=("eval",), default="eval")
    _field_args(p, "U")
    p.add_argument("--at", default="", help="comma-separated z then w coordinates")
    p = sub.add_parser("integrate", help="integrate a built-in field over the group")
    _common(p)
    _field_args(p, "J")
    p.add_argument("--method", choices=("monte-carlo", "polar-grid", "tensor-grid"),
                   default="monte-carlo")
    p = sub.add_parser("verify", help="run equality-case suites")
    _common(p)
    p.add_argument("--suite", default="sobolev")
    p = sub.add_parser("sharpness", help="minimise a quotient over a trial family")
    _common(p)
    p.add_argument("--family", default="a")
    p.add_argument("--budget", type=int, default=150)
    p.add_argument("--p", type=float, default=None, help="subcritical exponent")
    p.add_argument("--method", dest="method_search", choices=("auto", "polar-grid", "monte-carlo"),
                   default="auto")
    p = sub.add_parser("report", help="all suites to JSON and .dat files")
    _common(p)
    p.add_argument("--suites", default=",".join(SUITES))
    p.add_argument("--outdir", default="htype-report")
    return parser


def read_config(path: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc
    out = {}
    for no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PreconditionError(f"{path}:{no}: expected `key = value`")
        k, v = (t.strip() for t in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _parse(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {act.dest: act for act in sub._actions}
        defaults = {}
        for k, v in cfg.items():
            if k in ("config", "help") or k not in known:
                raise PreconditionError(f"{args.config}: unknown key {k!r} for {args.command}")
            act = known[k]
            try:
                defaults[k] = act.type(v) if act.type else v
            except ValueError as exc:
                raise PreconditionError(f"{args.config}: bad value for {k}: {v!r}") from exc
            if act.choices and defaults[k] not in act.choices:
                raise PreconditionError(f"{args.config}: {k} must be one of {sorted(act.choices)}")
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    env = os.environ.get("HTYPE_SEED")
    if env is not None:
        try:
            args.seed = int(env)
        except ValueError as exc:
            raise PreconditionError(f"HTYPE_SEED must be an integer, got {env!r}") from exc
    return args


def _validate(a) -> None:
    if a.samples < 1000:
        raise PreconditionError(f"--samples must be at least 1000, got {a.samples}")
    if a.threads is not None and a.threads < 1:
        raise PreconditionError(f"--threads must be positive, got {a.threads}")
    if a.command in ("verify", "sharpness", "report") and not 0 < a.s < 1:
        raise PreconditionError(f"--s must satisfy 0 < s < 1, got {a.s}")


COMMANDS = {"constants": cmd_constants, "group": cmd_group, "field": cmd_field,
            "integrate": cmd_integrate, "verify": cmd_verify, "sharpness": cmd_sharpness}


def run(argv: list[str] | None = None) -> int:
    """Execute one command; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        a = _parse(argv)
        _validate(a)
        if a.threads is not None:
            _mc.set_threads(a.threads)
        G = GroupSpec.build(a.n, a.m)
        if a.command == "report":
            rep = write_report(G, a.s, _suite_list(a.suites), a.samples, a.seed, a.outdir)
            for rows in rep["suites"].values():
                _check_rows(rows)
            return EXIT_OK
        out = COMMANDS[a.command](a, G)
        if a.command in ("verify",):
            text = _rows_to_text(out, a.format)
            _emit(text, a.output)
            _check_rows(out)
            return EXIT_OK
        text = (json.dumps(out, indent=2, default=float) + "\n" if isinstance(out, dict)
                else _rows_to_text(out, a.format))
        _emit(text, a.output)
        return EXIT_OK
    except UsageError as exc:
        sys.stderr.write(str(exc))
        return EXIT_USAGE
    except InequalityViolation as exc:
        sys.stderr.write(f"htype: inequality violated: {exc}\n")
        return EXIT_VIOLATION
    except PreconditionError as exc:
        sys.stderr.write(f"htype: precondition violated: {exc}\n")
        return EXIT_PRECONDITION
    except OSError as exc:
        sys.stderr.write(f"htype: {exc}\n")
        return EXIT_IO


def main() -> None:
    sys.exit(run())
