"""Command-line front end.

Exit status: 0 success, 1 a property or numerical check failed, 2 bad input.
Errors are written to stderr as one JSON object.  ``SMERO_THREADS`` sets the
sweep thread count and ``SMERO_LOG`` the log level.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import innerprod as ip
from .errors import DescriptorError, SmeroError
from .frobenius import frobenius_solution, is_smeromorphic
from .potential import FAMILIES, list_singularities, make_family, singularity_profile
from .transfer import default_base_point, discriminant_sweep, periodic_spectrum_gaps, sweep_csv, transfer_matrix

log = logging.getLogger("smero")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise DescriptorError(f"{self.prog}: {message}")


def _load_json(text):
    """Inline JSON, or a path to a JSON file."""
    if text is None:
        return None
    try:
        if not text.lstrip().startswith(("{", "[")) and Path(text).is_file():
            text = Path(text).read_text()
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DescriptorError(f"invalid JSON: {exc}") from None


def _potential(args):
    if args.potential is None:
        raise DescriptorError("--potential is required")
    return make_family(_load_json(args.potential))


def _sides(text):
    if text in ("upper", "lower"):
        return text
    parts = text.split(",")
    if any(p not in ("upper", "lower") for p in parts):
        raise DescriptorError(f"--side must be upper, lower or a comma list of those, got {text!r}")
    return parts


def _emit(args, payload, text=None):
    out = text if text is not None else json.dumps(payload, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)


def _interval(args, u):
    if args.interval:
        return tuple(args.interval)
    if u.period is not None:
        x0 = default_base_point(u)
        return (x0, x0 + u.period)
    return (-5.0, 5.0)


# -- subcommands ------------------------------------------------------------------

def cmd_analyze(args):
    u = _potential(args)
    a, b = _interval(args, u)
    out = []
    for p in list_singularities(u, (a, b)):
        prof = singularity_profile(u, p)
        out.append({"profile": prof.to_json(), "certificate": is_smeromorphic(u, p).to_json()})
    _emit(args, {"potential": u.to_json(), "interval": [a, b], "singularities": out})
    return 0


def cmd_frobenius(args):
    u = _potential(args)
    s = frobenius_solution(u, args.pole, complex(args.lam, args.lam_im), args.branch, args.order)
    _emit(args, s.to_json())
    return 0


def cmd_transfer(args):
    u = _potential(args)
    t = transfer_matrix(u, complex(args.lam, args.lam_im), args.x0, args.x1, _sides(args.side),
                        args.radius, args.rtol)
    _emit(args, t.to_json())
    return 0


def cmd_discriminant(args):
    u = _potential(args)
    if args.num:
        lams = np.linspace(args.lam_min, args.lam_max, args.num)
    else:
        n = int(math.floor((args.lam_max - args.lam_min) / args.lam_step + 1e-9)) + 1
        lams = args.lam_min + args.lam_step * np.arange(n)
    rows = discriminant_sweep(u, lams, args.x0, args.period, args.radius, args.rtol, args.threads)
    _emit(args, None, sweep_csv(rows))
    return 1 if any(r.error for r in rows) else 0


def cmd_gaps(args):
    u = _potential(args)
    rep = periodic_spectrum_gaps(u, args.lam_max, args.lam_min, args.dk, args.x0, args.period,
                                 args.radius, args.rtol, args.threads, args.precise, args.dps)
    for w in rep.warnings:
        log.warning(w)
    _emit(args, rep.to_json())
    return 0


_HANDLE_KEYS = {
    "monomial": {"exponent", "pole", "coeff"},
    "bump": {"center", "width", "height"},
    "frobenius": {"pole", "lam", "branch", "order"},
    "solution": {"lam", "start", "init"},
    "adler_moser_psi": set(),
}


def handle_from_descriptor(d, u=None, interval=None):
    """Build a FunctionHandle from a JSON object; see the README for the schema."""
    if not isinstance(d, dict) or "type" not in d:
        raise DescriptorError("function descriptor must be an object with a 'type' key")
    kind = d["type"]
    if kind not in _HANDLE_KEYS:
        raise DescriptorError(f"unknown function type {kind!r}")
    extra = set(d) - _HANDLE_KEYS[kind] - {"type", "window"}
    if extra:
        raise DescriptorError(f"unknown keys for {kind}: {sorted(extra)}")

    def need_u():
        if u is None:
            raise DescriptorError(f"function type {kind!r} needs --potential")
        return u

    if kind == "monomial":
        h = ip.monomial(int(d.get("exponent", -1)), float(d.get("pole", 0.0)), complex(d.get("coeff", 1.0)))
    elif kind == "bump":
        h = ip.bump(float(d["center"]), float(d["width"]), complex(d.get("height", 1.0)))
    elif kind == "frobenius":
        h = ip.frobenius_handle(need_u(), float(d.get("pole", 0.0)), complex(d.get("lam", 0.0)),
                                d.get("branch", "lower"), int(d.get("order", 40)))
    elif kind == "solution":
        init = d.get("init", [1.0, 0.0])
        if interval is None:
            raise DescriptorError("solution handles need an interval")
        h = ip.solution_handle(need_u(), complex(d.get("lam", 0.0)), float(d.get("start", interval[0])),
                               (complex(init[0]), complex(init[1])), interval)
    else:
        uu = need_u()
        desc = uu.to_json()
        if desc.get("family") != "adler_moser":
            raise DescriptorError("adler_moser_psi needs an adler_moser potential")
        f, d1, d2 = ip.adler_moser_psi(int(desc["k"]), [float(t) for t in desc.get("tau", [])])
        a, b = interval or (-math.inf, math.inf)
        h = ip.closed_form(f, [p for p in list_singularities(uu, (a, b))] if interval else [], d1, d2,
                           lam=0.0, name="psi")
    if "window" in d:
        w = d["window"]
        h = ip.windowed(h, ip.PlateauWindow(float(w["a"]), float(w["b"]), float(w.get("ramp", 0.2))))
    return h


def _pair_opts(args):
    return {"r": args.radius, "sides": _sides(args.side)}


def cmd_inner_product(args):
    u = make_family(_load_json(args.potential)) if args.potential else None
    iv = tuple(args.interval or (-1.0, 1.0))
    f = handle_from_descriptor(_load_json(args.f), u, iv)
    g = handle_from_descriptor(_load_json(args.g), u, iv)
    v = ip.inner_product(f, g, iv, **_pair_opts(args))
    _emit(args, {"value": [v.real, v.imag], "interval": list(iv)})
    return 0


def _family(args, u):
    spec = args.family
    if spec.startswith("canonical:"):
        n = int(spec.split(":", 1)[1])
        iv = tuple(args.interval or (-1.0, 1.0))
        return ip.canonical_family(n, 0.5 * (iv[0] + iv[1]), iv), iv
    if spec.startswith("adler-moser:"):
        tau = [float(t) for t in spec.split(":", 1)[1].split(",")]
        iv = tuple(args.interval or (-3.5, 1.5))
        return ip.adler_moser_family(len(tau) + 1, tau, iv)[1], iv
    data = _load_json(spec)
    if not isinstance(data, list):
        raise DescriptorError("--family must be canonical:N, adler-moser:TAU,... or a JSON list")
    iv = tuple(args.interval or (-1.0, 1.0))
    return [handle_from_descriptor(d, u, iv) for d in data], iv


def cmd_gram(args):
    u = make_family(_load_json(args.potential)) if args.potential else None
    fam, iv = _family(args, u)
    res = ip.gram_signature(fam, iv, args.tol, args.threads, **_pair_opts(args))
    _emit(args, res.to_json())
    return 0


def cmd_verify(args):
    from .verify import run_suite

    only = set(args.only) if args.only else None
    results = run_suite(only)
    if args.json:
        _emit(args, [r.to_json() for r in results])
    else:
        _emit(args, None, "".join(r.line() + "\n" for r in results))
    return 0 if all(r.passed for r in results) else 1


def cmd_family(args):
    d = {"family": args.name}
    for kv in args.params:
        if "=" not in kv:
            raise DescriptorError(f"expected key=value, got {kv!r}")
        k, v = kv.split("=", 1)
        try:
            d[k] = json.loads(v)
        except json.JSONDecodeError:
            d[k] = v
    make_family(d)  # validate
    _emit(args, d)
    return 0


def build_parser():
    p = _Parser(prog="smero", description="Singular Schrodinger operators: local analysis, "
                "monodromy, gaps and the indefinite pairing.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(sp, potential=True):
        if potential:
            sp.add_argument("-p", "--potential", help="descriptor JSON, inline or a file path")
        sp.add_argument("-o", "--out", help="write output here instead of stdout")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (default SMERO_THREADS or CPU count)")

    def contour_opts(sp):
        sp.add_argument("--radius", type=float, default=None, help="detour radius (default min(0.1, gap/4))")
        sp.add_argument("--side", default="upper", help="upper, lower, or a comma list per pole")

    sp = sub.add_parser("analyze", help="poles, local profiles and s-meromorphy certificates")
    common(sp)
    sp.add_argument("--interval", type=float, nargs=2, help="default: one period, else [-5, 5]")
    sp.set_defaults(fn=cmd_analyze)

    sp = sub.add_parser("frobenius", help="local series solution at a pole")
    common(sp)
    sp.add_argument("--pole", type=float, default=0.0)
    sp.add_argument("--lam", type=float, default=0.0)
    sp.add_argument("--lam-im", type=float, default=0.0)
    sp.add_argument("--branch", choices=("lower", "upper"), default="lower")
    sp.add_argument("--order", type=int, default=30, help="keep exponents below this")
    sp.set_defaults(fn=cmd_frobenius)

    sp = sub.add_parser("transfer", help="transfer matrix between two regular points")
    common(sp)
    contour_opts(sp)
    sp.add_argument("--lam", type=float, required=True)
    sp.add_argument("--lam-im", type=float, default=0.0)
    sp.add_argument("--x0", type=float, required=True)
    sp.add_argument("--x1", type=float, required=True)
    sp.add_argument("--rtol", type=float, default=1e-12)
    sp.set_defaults(fn=cmd_transfer)

    sp = sub.add_parser("discriminant", help="Delta(lam) sweep as CSV")
    common(sp)
    sp.add_argument("--lam-min", type=float, default=0.0)
    sp.add_argument("--lam-max", type=float, default=100.0)
    sp.add_argument("--lam-step", type=float, default=0.5)
    sp.add_argument("--num", type=int, default=None, help="number of points (overrides --lam-step)")
    sp.add_argument("--x0", type=float, default=None, help="base point (default mid pole-free stretch)")
    sp.add_argument("--period", type=float, default=None)
    sp.add_argument("--radius", type=float, default=None)
    sp.add_argument("--rtol", type=float, default=1e-12)
    sp.set_defaults(fn=cmd_discriminant)

    sp = sub.add_parser("gaps", help="band edges and gap report as JSON")
    common(sp)
    sp.add_argument("--lam-max", type=float, default=100.0)
    sp.add_argument("--lam-min", type=float, default=None)
    sp.add_argument("--dk", type=float, default=0.02, help="grid spacing in sqrt(lam)")
    sp.add_argument("--x0", type=float, default=None)
    sp.add_argument("--period", type=float, default=None)
    sp.add_argument("--radius", type=float, default=None)
    sp.add_argument("--rtol", type=float, default=1e-12)
    sp.add_argument("--precise", action="store_true", help="re-measure narrow gaps in multiprecision")
    sp.add_argument("--dps", type=int, default=None, help="digits for --precise (default 64)")
    sp.set_defaults(fn=cmd_gaps)

    sp = sub.add_parser("inner-product", help="one pairing <f, g>")
    common(sp)
    contour_opts(sp)
    sp.add_argument("--f", required=True, help="function descriptor JSON")
    sp.add_argument("--g", required=True, help="function descriptor JSON")
    sp.add_argument("--interval", type=float, nargs=2)
    sp.set_defaults(fn=cmd_inner_product)

    sp = sub.add_parser("gram", help="Gram matrix and signature of a family")
    common(sp)
    contour_opts(sp)
    sp.add_argument("--family", required=True, help="canonical:N, adler-moser:TAU[,TAU...] or JSON list")
    sp.add_argument("--interval", type=float, nargs=2)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.set_defaults(fn=cmd_gram)

    sp = sub.add_parser("verify", help="run the acceptance suite")
    common(sp, potential=False)
    sp.add_argument("--only", type=int, nargs="+", help="criterion numbers")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("family", help="emit a built-in potential descriptor")
    common(sp, potential=False)
    sp.add_argument("name", choices=FAMILIES)
    sp.add_argument("params", nargs="*", help="key=value (values parsed as JSON when possible)")
    sp.set_defaults(fn=cmd_family)
    return p


def main(argv=None):
    logging.basicConfig(level=os.environ.get("SMERO_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        return args.fn(args)
    except SmeroError as exc:
        sys.stderr.write(json.dumps(exc.to_json()) + "\n")
        return exc.code
    except (KeyError, ValueError, TypeError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
