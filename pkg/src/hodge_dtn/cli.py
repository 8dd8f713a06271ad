"""Command line front end: ``hodge-dtn gen | analyze | oracle | export``.

Exit codes: 0 success, 1 a check failed its threshold, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, algebra, cylinder, generators, probes, topology
from .dtn import SingularSystemError, assemble_all
from .galerkin import assemble_galerkin, write_matrix
from .mesh import MeshError, build_complex, extract_boundary, load_mesh, write_mesh

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
SCHEMA = 1

# numerical thresholds of the pass/fail checks in an analysis report
CONTAINMENT_ANGLE = 1e-4
CONTAINMENT_RESIDUAL = 1e-6
ORTHOGONALITY = 1e-6
ORACLE_TOLERANCE = 1e-10

log = logging.getLogger("hodge_dtn")


class InputError(ValueError):
    pass


def _clean(obj):
    """Recursively convert to JSON-native types; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def _emit(payload, out):
    text = json.dumps(_clean(payload), indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def parse_degrees(text, n):
    """``"k"`` or ``"a..b"`` -> sorted degree list inside 0..n-1."""
    if text is None:
        return list(range(n))
    m = re.fullmatch(r"\s*(\d+)\s*(?:\.\.\s*(\d+)\s*)?", text)
    if not m:
        raise InputError(f"--degrees expects 'k' or 'a..b', got {text!r}")
    lo = int(m.group(1))
    hi = int(m.group(2)) if m.group(2) is not None else lo
    if lo > hi or hi > n - 1:
        raise InputError(f"--degrees {text!r} outside 0..{n - 1}")
    return list(range(lo, hi + 1))


def resolve_mesh(spec, resolution=None):
    """A mesh file path, or a built-in generator name with optional ``:resolution``."""
    path = Path(spec)
    if path.exists():
        return load_mesh(path), path.stem
    name, _, res = spec.partition(":")
    if name in generators.GENERATORS:
        r = int(res) if res else resolution
        verts, cells = generators.generate(name, r)
        r = generators.DEFAULT_RESOLUTION[name] if r is None else r
        return build_complex(verts, cells), f"{name}:{r}"
    raise InputError(f"no mesh file {spec!r} and no built-in generator of that name")


# ---------------------------------------------------------------------------
# analysis


class _Clock:
    def __init__(self):
        self.times = {}
        self._t = time.perf_counter()

    def lap(self, name):
        now = time.perf_counter()
        self.times[name] = round(now - self._t, 3)
        self._t = now


def _check(name, value, expected=None, threshold=None, passed=None):
    if passed is None:
        if threshold is not None:
            passed = value is not None and value <= threshold
        else:
            passed = value == expected
    out = {"name": name, "value": value, "passed": bool(passed)}
    if expected is not None:
        out["expected"] = expected
    if threshold is not None:
        out["threshold"] = threshold
    return out


def _checks(c, topo, degrees):
    n = c.n
    ba, br = topo.betti_abs, topo.betti_rel
    checks = []
    for i, k in enumerate(degrees):
        checks.append(_check(f"dim ker Phi{k} = betti_abs[{k}]", topo.dim_ker_phi[i], ba[k]))
        if topo.psi_homology[i] is not None:
            checks.append(_check(f"psi_homology[{k}] = betti_rel[{k + 1}] + betti_abs[{k}]",
                                 topo.psi_homology[i], br[k + 1] + ba[k]))
            checks.append(_check(f"echo[{k}] = betti_rel[{k + 1}]", topo.echo[i], br[k + 1]))
        f = topo.fredholm[i]
        checks.append(_check(f"index of Phi{k}", f["index"], 0))
        checks.append(_check(f"image of Phi{k} orthogonal to kernel", f["orthogonality_residual"],
                             threshold=ORTHOGONALITY))
        checks.append(_check(f"ker Phi{k} inside ker Psi{k} (angle)", topo.kernel_angles[i],
                             threshold=CONTAINMENT_ANGLE))
        if topo.image_residuals[i] is not None:
            checks.append(_check(f"im Psi{k} inside im Phi{n - k}", topo.image_residuals[i],
                                 threshold=CONTAINMENT_RESIDUAL))
    if topo.cor3 is not None:
        checks.append(_check("cor3 = betti_abs[n-1]", topo.cor3, ba[n - 1]))
    ambiguous = [r.label for r in topo.ranks if r.ambiguous]
    checks.append(_check("no ambiguous rank", ambiguous, passed=not ambiguous))
    return checks


def analyze(c, name="mesh", degrees=None, identities=False, threshold=topology.DEFAULT_THRESHOLD):
    """Run the full pipeline on a complex; returns (report dict, timings dict)."""
    clock = _Clock()
    n = c.n
    degrees = list(range(n)) if degrees is None else list(degrees)
    b = extract_boundary(c)
    gs = assemble_galerkin(c, b)
    clock.lap("galerkin")
    dtn = assemble_all(c, b, gs, degrees, with_natural=identities)
    clock.lap("dtn")
    alg = algebra.BoundaryAlgebra(dtn, gs, b)
    full = set(degrees) == set(range(n))
    derived = algebra.assemble_derived(alg) if full else None
    pr = probes.probe_spaces(gs) if full else None
    clock.lap("derived")
    topo = topology.topology_report(c, b, alg, derived, pr, threshold, degrees)
    clock.lap("topology")
    h = c.max_edge_length()
    report = {
        "schema": SCHEMA,
        "version": __version__,
        "mesh": {"name": name, "n": n, "counts": list(c.counts), "h": h,
                 "euler_characteristic": c.euler_characteristic,
                 "boundary_counts": [b.count(k) for k in range(n)],
                 "boundary_components": len(b.components())},
        "sign_conventions": algebra.sign_record(),
        "degrees": degrees,
        "rank_policy": {"threshold": threshold, "floor": topology.DEFAULT_FLOOR},
        "topology": topo.to_dict(),
    }
    if derived is not None:
        report["derived_errors"] = [{"operator": op, "k": k, "error": msg}
                                    for (op, k), msg in sorted(derived.errors.items())]
    if identities:
        if derived is None:
            report["identities"] = {"skipped": "identities need every degree assembled"}
        else:
            pairing = algebra.Pairing(alg, pr)
            reps = (algebra.identity_suite(alg, derived, pairing, h)
                    + algebra.theta_reports(alg, derived, pairing, h)
                    + algebra.psi_tilde_reports(alg, derived, pairing, h))
            cross = []
            for k in range(1, n):
                if k in derived.Lambda:
                    r, na, nb = pairing.residual(derived.Lambda[k], algebra.lambda_direct(alg, k))
                    cross.append(algebra.IdentityReport("Lambda = direct Lambda", k, r, h, lhs_norm=na, rhs_norm=nb))
            for k in range(n):
                try:
                    g1 = algebra.assemble_g(alg, k, derived.Lambda, via="phi")
                    g2 = algebra.assemble_g(alg, k, derived.Lambda, via="lambda")
                except algebra.DomainError as exc:
                    log.warning("G%d constructions skipped: %s", k, exc)
                    continue
                r, na, nb = pairing.residual(g1, g2)
                cross.append(algebra.IdentityReport("G via Phi = G via Lambda", k, r, h, lhs_norm=na, rhs_norm=nb))
            report["identities"] = [r.to_dict() for r in reps + cross]
            report["probe_dimensions"] = {str(k): int(q.shape[1]) for k, q in pr.items()}
        clock.lap("identities")
    checks = _checks(c, topo, degrees)
    report["checks"] = checks
    report["passed"] = all(ch["passed"] for ch in checks)
    return report, clock.times


# ---------------------------------------------------------------------------
# sub-commands


def cmd_gen(args):
    res = args.resolution if args.resolution is not None else args.res
    verts, cells = generators.generate(args.name, res)
    res = generators.DEFAULT_RESOLUTION[args.name] if res is None else int(res)
    out = args.out or f"{args.name}-{res}.mesh"
    c = build_complex(verts, cells)
    b = extract_boundary(c)
    write_mesh(out, verts, cells, comment=f"{args.name} resolution {res}")
    _emit({"schema": SCHEMA, "mesh": out, "generator": args.name, "resolution": res,
           "counts": list(c.counts), "euler_characteristic": c.euler_characteristic,
           "boundary_components": len(b.components())}, None)
    return EXIT_OK


def cmd_analyze(args):
    c, name = resolve_mesh(args.mesh, args.resolution)
    degrees = parse_degrees(args.degrees, c.n)
    t0 = time.perf_counter()
    report, times = analyze(c, name, degrees, args.identities, args.rank_threshold)
    if not args.no_timings:
        times["total"] = round(time.perf_counter() - t0, 3)
        report["timings"] = times
    _emit(report, args.out)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_oracle(args):
    m_max = args.m_max if args.m_max_flag is None else args.m_max_flag
    length = args.length if args.length_flag is None else args.length_flag
    if m_max < 0 or length <= 0:
        raise InputError("oracle needs m_max >= 0 and L > 0")
    report = cylinder.oracle_report(length, m_max, ORACLE_TOLERANCE)
    out = {"schema": SCHEMA, "version": __version__, "sign_conventions": algebra.sign_record()}
    out.update(report)
    _emit(out, args.out)
    return EXIT_OK if report["passed"] else EXIT_FAIL


_LABEL = re.compile(r"(Phi|Psi|Lambda|G|PsiTilde|Theta|d|bmass)(\d+)")


def export_matrix(c, label):
    """Dense matrix of the operator named ``label`` (for example Phi0, Psi1, Lambda1)."""
    m = _LABEL.fullmatch(label)
    if not m:
        raise InputError(f"unknown operator label {label!r}; expected one of "
                         "Phi<k>, Psi<k>, Lambda<k>, G<k>, PsiTilde<k>, Theta<k>, d<k>, bmass<k>")
    kind, k = m.group(1), int(m.group(2))
    n = c.n
    if k > n - 1:
        raise InputError(f"{label}: degree {k} outside 0..{n - 1}")
    b = extract_boundary(c)
    gs = assemble_galerkin(c, b)
    if kind == "bmass":
        return gs.bmass[k].toarray()
    if kind == "d":
        return gs.bcoboundary[k].toarray() if k < n - 1 else np.zeros((0, b.count(k)))
    degrees = [k] if kind in ("Phi", "Psi") else list(range(n))
    alg = algebra.BoundaryAlgebra(assemble_all(c, b, gs, degrees), gs, b)
    if kind == "Phi":
        return alg.phi(k).matrix
    if kind == "Psi":
        return alg.psi(k).matrix
    if kind == "Lambda":
        return algebra.assemble_lambda(alg, k).matrix
    if kind == "G":
        return algebra.assemble_g(alg, k).matrix
    if kind == "PsiTilde":
        return algebra.assemble_psi_tilde(alg, k).matrix
    return algebra.theta_strong(alg, k).matrix


def cmd_export(args):
    c, _ = resolve_mesh(args.mesh, args.resolution)
    mat = export_matrix(c, args.label)
    out = args.out or f"{args.label}.txt"
    write_matrix(out, mat)
    _emit({"schema": SCHEMA, "label": args.label, "shape": list(mat.shape), "path": out}, None)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="hodge-dtn", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a built-in mesh")
    g.add_argument("name", choices=sorted(generators.GENERATORS))
    g.add_argument("res", nargs="?", type=int, help="resolution (default per generator)")
    g.add_argument("--resolution", type=int)
    g.add_argument("--out", help="output mesh path (default <name>-<resolution>.mesh)")
    g.set_defaults(func=cmd_gen)

    a = sub.add_parser("analyze", help="operators, identities and topology of a mesh")
    a.add_argument("mesh", help="mesh file, or built-in name such as annulus2d or disk2d:10")
    a.add_argument("--resolution", type=int, help="resolution for a built-in mesh")
    a.add_argument("--identities", action="store_true", help="include identity residuals")
    a.add_argument("--degrees", help="degree range 'k' or 'a..b' (default all)")
    a.add_argument("--rank-threshold", type=float, default=topology.DEFAULT_THRESHOLD)
    a.add_argument("--no-timings", action="store_true", help="omit wall-clock timings")
    a.add_argument("--out", help="write the JSON report here instead of stdout")
    a.set_defaults(func=cmd_analyze)

    o = sub.add_parser("oracle", help="closed-form flat cylinder operators per Fourier mode")
    o.add_argument("m_max", nargs="?", type=int, default=20)
    o.add_argument("length", nargs="?", type=float, default=1.0)
    o.add_argument("--m-max", dest="m_max_flag", type=int)
    o.add_argument("--length", dest="length_flag", type=float)
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)

    e = sub.add_parser("export", help="write one operator as a dense text matrix")
    e.add_argument("mesh")
    e.add_argument("label", help="Phi<k>, Psi<k>, Lambda<k>, G<k>, PsiTilde<k>, Theta<k>, d<k> or bmass<k>")
    e.add_argument("--resolution", type=int)
    e.add_argument("--out", help="output path (default <label>.txt)")
    e.set_defaults(func=cmd_export)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, MeshError, SingularSystemError, KeyError, ValueError, OSError) as exc:
        where = type(exc).__module__.replace("hodge_dtn.", "")
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"hodge-dtn: input error ({where}.{type(exc).__name__}): {msg}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
