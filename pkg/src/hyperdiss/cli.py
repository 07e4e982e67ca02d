"""``hyperdiss`` command line.

Exit codes: 0 when every expected check passes, 1 when an expected check
fails, 2 on usage or parse errors.  Every JSON report embeds the run
configuration and the package version; no timestamps are written, so
identical configurations give byte-identical outputs.
"""

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .compensator import CompensatorError, CompensatorSpec, tune_mu
from .conditions import SphereSampling, check_K, check_Kstar, condition_suite
from .decay import CertificationError, LyapunovError, Profile, l2_decay_fit, tune_and_certify
from .modelio import ModelParseError, load_model, model_to_dict
from .spectrum import InvarianceError, SpectrumSweep, classify, default_s_grid, sweep
from .svgplot import render_svg

log = logging.getLogger("hyperdiss")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    model: str = None
    knobs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = None

    def to_dict(self):
        return asdict(self)


def _threads(args):
    if args.threads is not None:
        n = args.threads
    else:
        env = os.environ.get("HYPERDISS_THREADS")
        if env is None:
            return None
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"HYPERDISS_THREADS must be an integer, got {env!r}") from None
    if n < 1:
        raise UsageError(f"thread count must be >= 1, got {n}")
    return n


def _write_json(path, payload):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _report(cfg, body):
    return {"version": __version__, "config": cfg.to_dict(), **body}


def _sphere(entry, count, seed):
    n = entry.sys.n
    if count is None or n == 1:
        return SphereSampling.default(n, seed=seed)
    if count < 2:
        raise UsageError("--sphere-count must be >= 2")
    return SphereSampling.default(n, count, seed=seed)


def _s_grid(args):
    try:
        return default_s_grid(args.s_min, args.s_max, args.s_points)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _expected_pass(entry):
    exp = entry.expected.get("pass")
    if exp is not None:
        return list(exp)
    if entry.cb is not None:
        return ["A", "C", "S", "Sstar1", "Kstar"]
    return ["A", "S", "S1", "K", "R"]


# --------------------------------------------------------------------------
# commands


def cmd_check(args, cfg):
    entry = load_model(args.model)
    sph = _sphere(entry, args.sphere_count, args.seed)
    if not 0 < args.tol <= 1e-4:
        raise UsageError(f"--tol must lie in (0, 1e-4], got {args.tol}")
    cfg.knobs.update(sphere_count=sph.count, sphere_scheme=sph.scheme, tol=args.tol)
    rep = condition_suite(entry.sys, entry.S, entry.K, sph, entry.cb, entry.S_tilde, tol=args.tol)
    expected = _expected_pass(entry)
    missing = [k for k in expected if k not in rep]
    failed = [k for k in expected if k in rep and not rep[k].passed]
    body = rep.to_dict()
    body.update(expected=expected, failed_expected=failed + missing,
                informational=[k for k in rep.entries if k not in expected])
    _write_json(args.out, _report(cfg, body))
    return EXIT_OK if not (failed or missing) else EXIT_FAIL


def cmd_build_k(args, cfg):
    entry = load_model(args.model)
    sph = _sphere(entry, args.sphere_count, args.seed)
    cfg.knobs.update(sphere_count=sph.count, target_margin=args.target_margin)
    if args.mu is not None:
        try:
            spec = CompensatorSpec.kalman(args.mu, m=entry.sys.m)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if entry.cb is None:
            e = check_K(entry.sys, spec, sph)
        else:
            e = check_Kstar(entry.sys, entry.cb, spec, sph)
    else:
        try:
            spec, e = tune_mu(entry.sys, sph, target_margin=args.target_margin, cb=entry.cb)
        except CompensatorError as exc:
            _write_json(args.out, _report(cfg, {"error": str(exc)}))
            return EXIT_FAIL
    body = {"compensator": spec.to_dict(), "certified_by": e.name, "check": e.to_dict()}
    _write_json(args.out, _report(cfg, body))
    return EXIT_OK if e.passed else EXIT_FAIL


def _restricted(args, entry):
    if args.restricted and entry.cb is None:
        raise UsageError("--restricted needs a model with a constraint block")
    return entry.cb is not None and not args.unrestricted


def cmd_spectrum(args, cfg):
    entry = load_model(args.model)
    sph = _sphere(entry, args.sphere_count, args.seed)
    cb = entry.cb if _restricted(args, entry) else None
    grid = _s_grid(args)
    cfg.knobs.update(s_min=args.s_min, s_max=args.s_max, s_points=args.s_points,
                     sphere_count=sph.count, restricted=cb is not None)
    sw = sweep(entry.sys, grid, sph, cb)
    n = entry.sys.n
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "omega_index"] + [f"omega_{j + 1}" for j in range(n)] + ["max_re_lambda"])
        for row in sw.to_rows():
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return EXIT_OK


def read_sweep_csv(path):
    """Rebuild a :class:`SpectrumSweep` from ``hyperdiss spectrum`` output."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ModelParseError(f"{path}: {exc.strerror}") from None
    if not rows:
        raise ModelParseError(f"{path}: empty sweep file")
    head = rows[0]
    if head[:2] != ["s", "omega_index"] or head[-1] != "max_re_lambda":
        raise ModelParseError(f"{path}:1: unexpected header {head}")
    n = len(head) - 3
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as exc:
        raise ModelParseError(f"{path}: {exc}") from None
    if data.size == 0:
        raise ModelParseError(f"{path}: no data rows")
    s = np.unique(data[:, 0])
    k = data[:, 1].astype(int)
    count = k.max() + 1
    if data.shape[0] != s.size * count:
        raise ModelParseError(f"{path}: incomplete (s, omega) grid")
    ab = np.empty((s.size, count))
    pts = np.empty((count, n))
    ab[np.searchsorted(s, data[:, 0]), k] = data[:, -1]
    pts[k] = data[:, 2:2 + n]
    return SpectrumSweep(s, SphereSampling(n, pts, "explicit"), ab)


def cmd_classify(args, cfg):
    if (args.sweep is None) == (args.model is None):
        raise UsageError("classify needs exactly one of --sweep or --model")
    body = {}
    if args.sweep is not None:
        cfg.knobs.update(sweep=args.sweep)
        dt = classify(read_sweep_csv(args.sweep))
        body["type"] = dt.to_dict()
        expected = None
    else:
        entry = load_model(args.model)
        sph = _sphere(entry, args.sphere_count, args.seed)
        grid = _s_grid(args)
        cfg.knobs.update(s_min=args.s_min, s_max=args.s_max, s_points=args.s_points,
                         sphere_count=sph.count)
        if entry.cb is not None:
            body["type"] = classify(sweep(entry.sys, grid, sph, entry.cb)).to_dict()
            body["unrestricted"] = classify(sweep(entry.sys, grid, sph)).to_dict()
        else:
            body["type"] = classify(sweep(entry.sys, grid, sph)).to_dict()
        expected = entry.expected.get("type")
    t = body["type"]
    ok = t["classified"]
    if expected is not None:
        body["expected_type"] = list(expected)
        ok = ok and (t["p"], t["q"]) == tuple(expected)
    body["p"], body["q"] = t["p"], t["q"]
    _write_json(args.out, _report(cfg, body))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_certify(args, cfg):
    entry = load_model(args.model)
    if entry.K is None:
        raise UsageError("model has no compensator K; certification needs one")
    envelope = args.envelope or entry.expected.get("envelope") or "eta"
    sph = _sphere(entry, args.sphere_count, args.seed)
    tune = None if entry.sys.n == 1 else _sphere(entry, args.tune_sphere_count, args.seed)
    grid = _s_grid(args)
    cfg.knobs.update(envelope=envelope, sphere_count=sph.count, s_min=args.s_min,
                     s_max=args.s_max, s_points=args.s_points,
                     tune_sphere_count=None if tune is None else tune.count)
    try:
        cert = tune_and_certify(entry.sys, entry.S, entry.K, envelope, grid, sph, entry.cb, tune)
    except (CertificationError, LyapunovError) as exc:
        _write_json(args.out, _report(cfg, {"certified": False, "error": str(exc)}))
        return EXIT_FAIL
    _write_json(args.out, _report(cfg, {"certificate": cert.to_dict(), "certified": cert.certified}))
    return EXIT_OK if cert.certified else EXIT_FAIL


def cmd_decay(args, cfg):
    entry = load_model(args.model)
    try:
        profile = Profile.parse(args.profile)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.t_max <= 1:
        raise UsageError("--t-max must exceed 1")
    sph = _sphere(entry, args.sphere_count, args.seed)
    t_grid = np.concatenate([[0.0], np.geomspace(1e-2, args.t_max, args.t_points)])
    cfg.knobs.update(profile=str(profile), k=args.k, ell=args.ell, t_max=args.t_max,
                     t_points=args.t_points, sphere_count=sph.count)
    fit = l2_decay_fit(entry.sys, profile, args.k, args.ell, t_grid, sph, entry.cb)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "norm", "local_slope"])
        for row in fit.rows():
            w.writerow([repr(v) for v in row])
    summary = {"fitted_slope": fit.fitted_slope, "target_slope": fit.target_slope,
               "fit_window": list(fit.fit_window)}
    _write_json(args.report, _report(cfg, summary))
    return EXIT_OK


def cmd_plot(args, cfg):
    try:
        with open(args.input, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ModelParseError(f"{args.input}: {exc.strerror}") from None
    if len(rows) < 2:
        raise ModelParseError(f"{args.input}: no data rows")
    head = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    guides = list(args.guide or [])
    if head[:2] == ["t", "norm"]:
        series = [("norm", 1.0 + data[:, 0], data[:, 1])]
        labels = dict(xlabel="1 + t", ylabel="L2 norm")
    elif head[:2] == ["s", "omega_index"]:
        s = np.unique(data[:, 0])
        env = np.full(s.size, -np.inf)
        np.maximum.at(env, np.searchsorted(s, data[:, 0]), data[:, -1])
        series = [("-max Re lambda", s, -env)]
        labels = dict(xlabel="|xi|", ylabel="-max Re lambda")
    else:
        raise ModelParseError(f"{args.input}:1: unrecognised header {head}")
    try:
        render_svg(series, guides, args.out, title=args.title or "", **labels)
    except ValueError as exc:
        raise ModelParseError(f"{args.input}: {exc}") from None
    return EXIT_OK


def cmd_export(args, cfg):
    entry = load_model(args.model)
    _write_json(args.out, model_to_dict(entry))
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _grid_args(p):
    p.add_argument("--s-min", type=float, default=1e-3)
    p.add_argument("--s-max", type=float, default=1e3)
    p.add_argument("--s-points", type=int, default=48)


def build_parser():
    ap = argparse.ArgumentParser(prog="hyperdiss", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"hyperdiss {__version__}")
    ap.add_argument("--threads", type=int, default=None,
                    help="BLAS thread cap (fallback: HYPERDISS_THREADS)")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized direction sets (n >= 4)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="run the structural condition suite")
    p.add_argument("--model", required=True)
    p.add_argument("--tol", type=float, default=1e-10, help="relative kernel-rank threshold")
    p.add_argument("--omega-samples", "--sphere-count", dest="sphere_count", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("build-k", help="construct a compensating matrix K")
    p.add_argument("--model", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--mu", type=float)
    g.add_argument("--auto", action="store_true", help="halving search for mu (default)")
    p.add_argument("--target-margin", type=float, default=1e-6)
    p.add_argument("--omega-samples", "--sphere-count", dest="sphere_count", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_k)

    p = sub.add_parser("spectrum", help="sweep the spectral abscissa")
    p.add_argument("--model", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--restricted", action="store_true", help="restrict to the constraint subspace (default when present)")
    g.add_argument("--unrestricted", action="store_true")
    _grid_args(p)
    p.add_argument("--omega-samples", "--sphere-count", dest="sphere_count", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("classify", help="dissipativity type (p, q) from a sweep")
    p.add_argument("--sweep")
    p.add_argument("--model")
    _grid_args(p)
    p.add_argument("--omega-samples", "--sphere-count", dest="sphere_count", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("certify", help="tune and certify a Lyapunov functional")
    p.add_argument("--model", required=True)
    p.add_argument("--envelope", choices=["eta", "rho"])
    _grid_args(p)
    p.add_argument("--omega-samples", "--sphere-count", dest="sphere_count", type=int)
    p.add_argument("--tune-sphere-count", type=int, default=32)
    p.add_argument("--out")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("decay", help="L2 decay curve for radial initial data")
    p.add_argument("--model", required=True)
    p.add_argument("--profile", default="gaussian:1.0")
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--ell", type=int, default=0)
    p.add_argument("--t-max", type=float, default=1e4)
    p.add_argument("--t-points", type=int, default=61)
    p.add_argument("--omega-samples", "--sphere-count", dest="sphere_count", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="JSON summary (default: stdout)")
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("plot", help="render decay.csv or sweep.csv as log-log SVG")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--guide", type=float, action="append", help="reference slope (repeatable)")
    p.add_argument("--title")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("export", help="write the model as JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)
    return ap


def _config(args):
    outputs = {k: getattr(args, k) for k in ("out", "report") if getattr(args, k, None)}
    return RunConfig(args.command, getattr(args, "model", None), {}, outputs, args.seed, _threads(args))


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if cfg.threads is not None:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=cfg.threads):
                return args.func(args, cfg)
        return args.func(args, cfg)
    except (UsageError, ModelParseError) as exc:
        print(f"hyperdiss: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvarianceError as exc:
        print(f"hyperdiss: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
