"""Command line runner: ``bergman-intersection <command> [options]``.

Every command resolves a configuration from defaults, an optional JSON file
(``--config``) and flags (flags win), runs one computation and writes a CSV
or JSON file whose header embeds the resolved configuration and the package
version.  Exit status: 0 success, 1 configuration error, 2 numerical
failure, 3 insufficient range.
"""
import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .bergman import DEFAULT_BUMP, BumpSpec, bergman_project, chi, lens_kernel, disc_kernel, product_kernel
from .bergman import projection_constant
from .errors import (
    BergmanIntersectionError,
    CertificationError,
    DomainError,
    InvariantViolation,
    NumericalError,
    PreconditionError,
)
from .geometry import DomainId, lens_map_deriv, lens_map_inverse
from .hankel import Method, build_table, cap_comparison, hs_double_sum_polydisc, hs_partial_sum
from .pproperty import STOCKED_PAIRS, STOCKED_PATCHES, exceptional_points, psh_certify, sample_intersection
from .pproperty import to_real
from .quadrature import QuadratureSpec
from .regularity import Descriptor, NormSpec, Verdict, divergence_probe, lp_growth

logger = logging.getLogger("bergman_intersection")

COMMANDS = ("project", "sobolev", "lp", "kernel", "moments", "hs", "exceptional", "psh")

OK, CONFIG_ERROR, NUMERICAL_ERROR, INSUFFICIENT_RANGE = 0, 1, 2, 3


class ConfigError(Exception):
    pass


class InsufficientRange(Exception):
    pass


def default_query_points():
    """Ten interior points of the lens: preimages of a spiral in the disc."""
    m = np.arange(10)
    zeta = 0.85 * (m + 1) / 10 * np.exp(2j * np.pi * 0.37 * m)
    return lens_map_inverse(zeta)


DEFAULTS = {
    "common": {"seed": 0, "format": "csv", "out": None, "quadrature": {}, "bump": {}},
    "project": {"depth": 8, "tolerance": 1e-3, "points": None},
    "sobolev": {"depth": 8, "depths": list(range(4, 13)), "ks": [0, 1, 2, 3]},
    "lp": {"depth": 8, "ps": [2, 4, 8, 16, 32, 64], "functions": ["Fprime", "Chi"]},
    "kernel": {"domain": "Lens", "points": None},
    "moments": {"domain": "Omega", "kmax": 16, "quadrature_kmax": 16},
    "hs": {"kmax": 256, "kmax_polydisc": 64},
    "exceptional": {"pair": "two_spheres", "samples": 64, "eps_exc": 1e-8},
    "psh": {"patch": "real_plane", "region": None, "M": [0, 1, 10, 100], "step": 1e-4},
}


# ---------------------------------------------------------------------------
# configuration


def _load_file(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def resolve_config(command, args):
    """Merge defaults, the JSON file and flags (in increasing precedence)."""
    cfg = dict(DEFAULTS["common"])
    cfg.update(DEFAULTS[command])
    if args.config:
        data = _load_file(args.config)
        if data.get("command", command) != command:
            raise ConfigError(f"config is for command {data['command']!r}, not {command!r}")
        data.pop("command", None)
        unknown = set(data) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg.update(data)
    for key in ("seed", "format", "out", "depth", "tolerance"):
        val = getattr(args, key)
        if val is not None:
            cfg[key] = val
    if args.kmax is not None:
        cfg["kmax"] = args.kmax
    cfg["command"] = command
    return cfg


def _quad_spec(cfg):
    q = dict(cfg.get("quadrature") or {})
    if "depth" in cfg and cfg["depth"] is not None:
        q["depth"] = cfg["depth"]
    try:
        return QuadratureSpec(**q)
    except TypeError as exc:
        raise ConfigError(f"bad quadrature settings: {exc}") from None


def _bump(cfg):
    try:
        return BumpSpec(**(cfg.get("bump") or {})) if cfg.get("bump") else DEFAULT_BUMP
    except TypeError as exc:
        raise ConfigError(f"bad bump settings: {exc}") from None


def _points(raw, default):
    if raw is None:
        return default
    try:
        return np.array([complex(a, b) for a, b in raw])
    except (TypeError, ValueError):
        raise ConfigError("points must be a list of [re, im] pairs") from None


def _points2(raw):
    try:
        return np.array([[complex(a, b), complex(c, d)] for a, b, c, d in raw])
    except (TypeError, ValueError):
        raise ConfigError("points must be a list of [re1, im1, re2, im2] rows") from None


# ---------------------------------------------------------------------------
# output


def _metadata(cfg):
    return {"version": __version__, "config": cfg}


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def render_csv(cfg, header, rows):
    fh = io.StringIO()
    fh.write("# " + json.dumps(_metadata(cfg), sort_keys=True, default=str) + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return fh.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def render_json(cfg, result):
    doc = {"metadata": _metadata(cfg), "result": _jsonable(result)}
    return json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n"


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(cfg, table=None, result=None, suffix=None):
    """Write a table (``(header, rows)``) as CSV or ``result`` as JSON."""
    if cfg["format"] == "json" or table is None:
        text = render_json(cfg, result if result is not None else {"header": table[0], "rows": table[1]})
    else:
        text = render_csv(cfg, *table)
    out = cfg.get("out")
    if out is None:
        sys.stdout.write(text)
        return
    if suffix:
        root, ext = os.path.splitext(out)
        out = f"{root}.{suffix}{ext}"
    atomic_write(out, text)


# ---------------------------------------------------------------------------
# commands


def cmd_project(cfg):
    quad = _quad_spec(cfg)
    bump = _bump(cfg)
    pts = _points(cfg.get("points"), default_query_points())
    c = projection_constant(bump, quad)
    proj = bergman_project(DomainId.Lens, lambda w: chi(w, bump), pts, quad)
    target = c * lens_map_deriv(pts, 1)
    rel = np.abs(proj - target) / np.abs(lens_map_deriv(pts, 1))
    rows = [(z.real, z.imag, b.real, b.imag, t.real, t.imag, e) for z, b, t, e in zip(pts, proj, target, rel)]
    header = ["z_re", "z_im", "proj_re", "proj_im", "cFprime_re", "cFprime_im", "rel_error"]
    emit(cfg, (header, rows), {"c": c, "max_rel_error": float(rel.max()), "header": header, "rows": rows})
    logger.info("max relative error %.3g (c = %.16g)", rel.max(), c)
    return OK if rel.max() <= cfg["tolerance"] else NUMERICAL_ERROR


def expected_verdict(f, k):
    if Descriptor(f) is Descriptor.Chi:
        return Verdict.Bounded
    return Verdict.Bounded if k <= 1 else Verdict.Diverging


def cmd_sobolev(cfg):
    quad = _quad_spec(cfg)
    bump = _bump(cfg)
    depths = list(cfg["depths"])
    if len(depths) < 4:
        raise PreconditionError("sobolev needs at least four depths")
    rows, summary, ok = [], [], True
    for f in ("Chi", "Fprime"):
        for k in cfg["ks"]:
            tr = divergence_probe(f, NormSpec("sobolev", k=k), depths, quad, bump)
            match = tr.verdict is expected_verdict(f, k)
            ok &= match
            summary.append({"function": f, "k": k, "verdict": tr.verdict.value, "expected": match})
            for d, est in tr.levels:
                rows.append((f, k, d, est, tr.verdict.value))
            logger.info("%s W%d: %s", f, k, tr.verdict.value)
    emit(cfg, (["function", "k", "depth", "estimate", "verdict"], rows), {"verdicts": summary, "trace": rows})
    return OK if ok else NUMERICAL_ERROR


def cmd_lp(cfg):
    quad = _quad_spec(cfg)
    bump = _bump(cfg)
    rows = [(f, r["p"], r["norm"], r["rel_error"]) for f in cfg["functions"]
            for r in lp_growth(f, cfg["ps"], quad, bump)]
    emit(cfg, (["function", "p", "norm", "rel_error"], rows), {"rows": rows})
    return OK


def cmd_kernel(cfg):
    d = DomainId(cfg["domain"])
    if d is DomainId.ProductP:
        raw = cfg.get("points") or [[0.5, 0.1, 0.2, 0.0, 0.4, -0.2, 0.0, 0.3]]
        try:
            pairs = [(complex(a, b), complex(c, e), complex(f, g), complex(h, i)) for a, b, c, e, f, g, h, i in raw]
        except (TypeError, ValueError):
            raise ConfigError("ProductP points are rows [p1 re/im x2, q1 re/im x2]") from None
        rows = []
        for z1, z2, w1, w2 in pairs:
            k = product_kernel(np.array([z1, z2]), np.array([w1, w2]))
            rows.append((z1.real, z1.imag, z2.real, z2.imag, w1.real, w1.imag, w2.real, w2.imag, k.real, k.imag))
        header = ["z1_re", "z1_im", "z2_re", "z2_im", "w1_re", "w1_im", "w2_re", "w2_im", "K_re", "K_im"]
    else:
        kern = {DomainId.Lens: lens_kernel, DomainId.UnitDisc: disc_kernel}.get(d)
        if kern is None:
            raise ConfigError(f"no kernel for domain {d.value}")
        pts = _points(cfg.get("points"), default_query_points()[:4] if d is DomainId.Lens else np.array([0.1, 0.3j, -0.5]))
        rows = []
        for z in pts:
            for w in pts:
                k = complex(kern(z, w))
                rows.append((z.real, z.imag, w.real, w.imag, k.real, k.imag))
        header = ["z_re", "z_im", "w_re", "w_im", "K_re", "K_im"]
    emit(cfg, (header, rows), {"header": header, "rows": rows})
    return OK


def cmd_moments(cfg):
    d = DomainId(cfg["domain"])
    quad = QuadratureSpec(**(cfg.get("quadrature") or {}))
    kmax = int(cfg["kmax"])
    if kmax < 0:
        raise PreconditionError("kmax must be non-negative")
    cf = build_table(d, kmax, Method.ClosedForm)
    qk = min(kmax, int(cfg["quadrature_kmax"]))
    qt = build_table(d, qk, Method.Quadrature, spec=quad)
    rows = []
    worst = 0.0
    for (j, k), v in sorted(cf.entries.items()):
        q = qt.entries.get((j, k))
        dev = abs(v - q) if q is not None and np.isfinite(v) and np.isfinite(q) else (
            0.0 if q is None or (np.isinf(v) and np.isinf(q)) else np.inf)
        worst = max(worst, dev)
        rows.append((d.value, j, k, v, "ClosedForm", "" if q is None else q, "" if q is None else dev))
    header = ["domain", "j", "k", "log_c2", "method", "log_c2_quadrature", "abs_deviation"]
    cmp_rows = cap_comparison(min(kmax, 16), quad)
    emit(cfg, (header, rows), {"table": rows, "cap_comparison": cmp_rows, "max_deviation": worst})
    if cfg["format"] == "csv":
        keys = list(cmp_rows[0])
        emit(cfg, (keys, [[r[k] for k in keys] for r in cmp_rows]), suffix="cap_comparison")
    logger.info("closed form vs quadrature: max |dlog| = %.3g", worst)
    return OK if worst <= 1e-6 else NUMERICAL_ERROR


def cmd_hs(cfg):
    K, Kz = int(cfg["kmax"]), int(cfg["kmax_polydisc"])
    if K < 4 or Kz < 4:
        raise InsufficientRange("kmax and kmax_polydisc must be at least 4 for convergence verdicts")
    diags = {}
    for d in (DomainId.Omega, DomainId.OmegaPrime):
        diags[d] = hs_partial_sum(d, K, build_table(d, K + 1))
    zt = build_table(DomainId.OmegaZ, Kz + 1)
    dz = hs_double_sum_polydisc(Kz, zt)
    h, hp = diags[DomainId.Omega], diags[DomainId.OmegaPrime]
    identical = bool(np.max(np.abs(h.partial_sums - hp.partial_sums)) <= 1e-12 * abs(h.partial_sums[-1]))
    summary = {
        "Omega_converged": h.converged,
        "OmegaPrime_converged": hp.converged,
        "identical": identical,
        "decay_exponent": h.decay_exponent,
        "relative_change": float(abs(h.partial_sums[K] - h.partial_sums[K // 2]) / h.partial_sums[K]),
        "polydisc_slope": dz.slope,
        "polydisc_diverging": dz.diverging,
    }
    cfg = dict(cfg, summary=summary)
    header = ["k", "ratio", "difference", "partial_sum"]
    for d, suffix in ((DomainId.Omega, None), (DomainId.OmegaPrime, "omega_prime")):
        diag = diags[d]
        rows = list(zip(range(K + 1), diag.ratios, diag.differences, diag.partial_sums))
        if cfg["format"] == "csv":
            emit(cfg, (header, rows), suffix=suffix)
    zrows = list(zip(dz.K, dz.partial_sums, dz.diagonal_sums))
    if cfg["format"] == "csv":
        emit(cfg, (["K", "partial_sum", "diagonal_sum"], zrows), suffix="polydisc")
    else:
        emit(cfg, result={
            "summary": summary,
            **{d.value: {"ratios": x.ratios, "differences": x.differences, "partial_sums": x.partial_sums}
               for d, x in diags.items()},
            "OmegaZ": {"K": dz.K, "partial_sums": dz.partial_sums, "diagonal_sums": dz.diagonal_sums},
        })
    logger.info("HS summary: %s", summary)
    ok = h.converged and hp.converged and dz.diverging and identical
    return OK if ok else NUMERICAL_ERROR


def cmd_exceptional(cfg):
    name = cfg["pair"]
    if name not in STOCKED_PAIRS:
        raise ConfigError(f"unknown pair {name!r}; choose from {sorted(STOCKED_PAIRS)}")
    pair = STOCKED_PAIRS[name]()
    sample = sample_intersection(pair, int(cfg["samples"]), seed=int(cfg["seed"]), eps_exc=cfg["eps_exc"])
    pts = exceptional_points(pair, sample, cfg["eps_exc"])
    rows = [tuple(to_real(np.array(p))) for p in pts]
    header = ["re1", "im1", "re2", "im2"]
    emit(cfg, (header, rows), {
        "pair": name,
        "exceptional_points": rows,
        "sample": json.loads(sample.to_json()),
    })
    logger.info("%d exceptional points", len(pts))
    return OK


def cmd_psh(cfg):
    name = cfg["patch"]
    if name not in STOCKED_PATCHES:
        raise ConfigError(f"unknown patch {name!r}; choose from {sorted(STOCKED_PATCHES)}")
    patch = STOCKED_PATCHES[name]()
    region = cfg.get("region")
    if region is None:
        region = {
            "real_plane": [[0.3, 0.1, 0.2, -0.2], [1.0, 0.05, -0.5, 0.3]],
            "circle": [[1.05, 0.0, 0.0, 0.02]],
            "two_spheres_cap": [[0.52, 0.8, 0.3, 0.02]],
        }[name]
    region = _points2(region)
    rows, reports = [], []
    for M in cfg["M"]:
        cert = psh_certify(patch, region, M, h=cfg["step"], seed=int(cfg["seed"]))
        rows.append((M, cert.C, cert.scaled_min, cert.scaled_min >= M))
        if not reports:
            reports = [json.loads(r.to_json()) for r in cert.reports]
    emit(cfg, (["M", "C", "scaled_min", "certified"], rows), {"rows": rows, "hessians": reports})
    return OK if all(r[3] for r in rows) else NUMERICAL_ERROR


HANDLERS = {
    "project": cmd_project,
    "sobolev": cmd_sobolev,
    "lp": cmd_lp,
    "kernel": cmd_kernel,
    "moments": cmd_moments,
    "hs": cmd_hs,
    "exceptional": cmd_exceptional,
    "psh": cmd_psh,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="bergman-intersection", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--seed", type=int)
        p.add_argument("--depth", type=int)
        p.add_argument("--kmax", type=int)
        p.add_argument("--tolerance", type=float)
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return CONFIG_ERROR if exc.code else OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args.command, args)
        if cfg["format"] not in ("csv", "json"):
            raise ConfigError(f"unknown format {cfg['format']!r}")
        return HANDLERS[args.command](cfg)
    except (ConfigError, PreconditionError, KeyError, TypeError) as exc:
        logger.error("configuration error: %s", exc)
        return CONFIG_ERROR
    except InsufficientRange as exc:
        logger.error("insufficient range: %s", exc)
        return INSUFFICIENT_RANGE
    except (NumericalError, InvariantViolation, CertificationError, DomainError) as exc:
        logger.error("numerical failure: %s", exc)
        return NUMERICAL_ERROR
    except BergmanIntersectionError as exc:
        logger.error("%s", exc)
        return NUMERICAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
