"""Command line interface.

    ilwlab [--config FILE] [--out-dir DIR] <subcommand> [options]

Exit codes: 0 success, 1 a test or acceptance criterion failed, 2 usage or
input error.  Config-file keys supply defaults for the matching options;
flags on the command line win.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings

import numpy as np

from . import config as cfgmod
from .dispersion import INFINITE, SHALLOW, FamilyError, Finite, h_frak, h_shallow, k_delta, l_delta, q_delta


def _floats(text: str):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str):
    return [int(x) for x in text.split(",") if x.strip()]


def _depth(delta: float):
    return INFINITE if delta == math.inf else Finite(delta)


def _out_dir(args) -> str:
    from .output import ensure_dir

    return ensure_dir(args.output_dir)


# -- subcommands --------------------------------------------------------------------------


def cmd_symbols(args):
    from .output import write_csv

    n = np.arange(1, args.nmax + 1, dtype=float)
    if args.delta == math.inf:
        rows = [(int(m), float(k_delta(INFINITE, m))) for m in n]
        write_csv(sys.stdout, ["n", "K_delta"], rows)
        return 0
    d = Finite(args.delta)
    rows = []
    for m in n:
        rows.append(
            (int(m), float(k_delta(d, m)), float(l_delta(d, m)), float(q_delta(d, m)),
             float(h_frak(args.delta * m)), float(h_shallow(d, m)))
        )
    write_csv(sys.stdout, ["n", "K_delta", "L_delta", "q_delta", "h_frak", "h_shallow"], rows)
    return 0


def cmd_wick(args):
    from .hermite import hermite_floor, sigma_deep, sigma_kdv, sigma_kdv_limit, sigma_shallow
    from .output import write_csv

    rows = []
    for N in args.Ns:
        sd = sigma_deep(_depth(args.delta), N).sigma
        ss = sigma_shallow(Finite(args.delta), N).sigma if args.delta != math.inf else math.nan
        rows.append((N, sd, ss, sigma_kdv(N).sigma, sigma_kdv_limit().sigma))
    write_csv(sys.stdout, ["N", "sigma_deep", "sigma_shallow", "sigma_kdv", "sigma_kdv_limit"], rows)
    if args.checks:
        from .experiments import criterion_4

        r = criterion_4()
        floors = {k: hermite_floor(k) for k in (2, 4, 6)}
        print(json.dumps({"identities": r.as_dict()["details"], "floors": floors}, sort_keys=True))
        return 0 if r.passed else 1
    return 0


def _density_spec(args):
    from .gibbs import CutoffCubic, Defocusing, Flat, TamedCubic

    if args.density == "defocusing":
        return Defocusing(args.k)
    if args.density == "cutoff":
        return CutoffCubic(args.K)
    if args.density == "tamed":
        return TamedCubic(args.A)
    return Flat()


def cmd_sample(args):
    from .fields import SeededRng, deep_gauss
    from .gibbs import WickContext, mh_sample, snis_sample
    from .output import write_ensemble

    kind = deep_gauss(_depth(args.delta))
    ctx = WickContext.for_kind(kind, args.N, args.k)
    spec = _density_spec(args)
    rng = SeededRng(args.seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        if args.method == "snis":
            ens = snis_sample(ctx, spec, args.samples, rng)
        else:
            ens = mh_sample(ctx, spec, args.samples, args.step, rng)
    out = _out_dir(args)
    stem = os.path.join(out, args.name)
    man = write_ensemble(
        ens, stem + ".csv", stem + ".json", args.seed,
        extra={"method": args.method, "warnings": [str(w.message) for w in caught], "config": _resolved(args)},
    )
    summary = {k: man[k] for k in ("count", "ess", "Z", "Z_stderr", "acceptance_rate")}
    summary["files"] = [stem + ".csv", stem + ".json"]
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_distances(args):
    from . import experiments as ex
    from .fields import bo_gauss, deep_gauss, kdv_gauss, scaled_gauss
    from .metrics import ProductGaussianSpec, hellinger_distance, kakutani_sum, kl_deep, pinsker_check
    from .output import distance_record

    recs = []
    m = args.metric
    if m in ("kl", "hellinger", "pinsker"):
        for d in args.deltas:
            if m == "kl":
                r = kl_deep(d, args.M)
                recs.append(distance_record("mu_delta|mu_inf", "kl", r.value, r.tail_bound, {"delta": d, "M": args.M}, None))
            elif m == "hellinger":
                a = ProductGaussianSpec.from_kind(deep_gauss(Finite(d)), args.M)
                b = ProductGaussianSpec.from_kind(bo_gauss(), args.M)
                recs.append(distance_record("mu_delta|mu_inf", "hellinger", hellinger_distance(a, b), 0.0,
                                            {"delta": d, "M": args.M}, None))
            else:
                p = pinsker_check(d, args.M)
                recs.append(distance_record("mu_delta|mu_inf", "pinsker", p.hellinger, 0.0,
                                            {"delta": d, "M": args.M, "bound": p.pinsker_bound, "ordered": p.ordered}, None))
    elif m == "kakutani":
        for d in args.deltas:
            a = ProductGaussianSpec.from_kind(scaled_gauss(Finite(d)), args.M)
            b = ProductGaussianSpec.from_kind(kdv_gauss(), args.M)
            recs.append(distance_record("mu~_delta|mu_kdv", "kakutani", float(kakutani_sum(a, b)[-1]), 0.0,
                                        {"delta": d, "M": args.M}, None))
    elif m == "scheffe-n":
        Ns = [args.N, 2 * args.N, 4 * args.N]
        for N, e in zip(Ns, ex.gibbs_tv_in_N(args.delta, args.k, Ns, args.samples, args.seed)):
            recs.append(distance_record("rho_N|rho_2N", "scheffe_tv", e.value, e.stderr,
                                        {"delta": args.delta, "k": args.k, "N": N, "samples": args.samples}, args.seed))
    elif m == "scheffe-delta":
        for d, e in zip(args.deltas, ex.gibbs_tv_deep(args.deltas, args.N, args.k, args.samples, args.seed)):
            recs.append(distance_record("rho_delta|rho_inf", "scheffe_tv", e.value, e.stderr,
                                        {"delta": d, "k": args.k, "N": args.N, "samples": args.samples}, args.seed))
    elif m == "kyfan":
        for d, e in zip(args.deltas, ex.shallow_ky_fan(args.deltas, args.N, args.samples, args.seed, args.s)):
            recs.append(distance_record("X~_delta|X_kdv", "ky_fan", e.value, e.stderr,
                                        {"delta": d, "N": args.N, "s": args.s, "samples": args.samples}, args.seed))
    elif m == "energy":
        for d, v in zip(args.deltas, ex.shallow_energy(args.deltas, args.N, args.k, args.samples, args.seed)):
            recs.append(distance_record("rho~_delta|rho_kdv", "energy_distance", v, None,
                                        {"delta": d, "N": args.N, "k": args.k, "modes": [1, 2], "samples": args.samples},
                                        args.seed))
    for r in recs:
        print(json.dumps(r, sort_keys=True))
    return 0


def _evolution_spec(args):
    from .dynamics import deep_gilw, gbo, gkdv, scaled_gilw

    fam = args.family
    if fam == "deep":
        return deep_gilw(_depth(args.delta), args.k, args.N, renormalized=args.k != 2)
    if fam == "bo":
        return gbo(args.k, args.N)
    if fam == "scaled":
        return scaled_gilw(Finite(args.delta), args.k, args.N, renormalized=args.k != 2)
    return gkdv(args.k, args.N, limit_sigma=args.limit_sigma)


def cmd_evolve(args):
    from .dynamics import evolve, write_trajectory
    from .fields import SeededRng, SpectralField, read_field_csv, sample_coefficients, write_field_csv

    spec = _evolution_spec(args)
    n_total = max(args.n_total or spec.N, spec.N)
    if args.input:
        f = read_field_csv(args.input)
        c0 = f.coeffs
    else:
        c0 = sample_coefficients(spec.kind, n_total, 1, SeededRng(args.seed))[0]
    rec = evolve(c0, spec, args.T, dt=args.dt, save_every=args.save_every, drift_tol=args.drift_tol, s=args.s)
    out = _out_dir(args)
    stem = os.path.join(out, args.name)
    write_trajectory(rec, stem + ".csv", stem + ".json", extra={"seed": args.seed, "T": args.T, "version": _version(), "config": _resolved(args)})
    final = SpectralField(rec.snapshots[-1], spec.kind, args.seed)
    delta = None if isinstance(spec.depth, type(INFINITE)) or spec.depth == SHALLOW else spec.depth.delta
    write_field_csv(final, stem + "_final.csv", delta=delta)
    d = rec.diagnostics
    H = d["hamiltonian"]
    m = d["low_mass"]
    print(json.dumps({
        "spec": spec.label(),
        "steps": rec.steps_taken,
        "rejections": rec.rejections,
        "hamiltonian_drift": float(abs(H[-1] - H[0]) / abs(H[0])) if H[0] != 0 else float(abs(H[-1])),
        "mass_drift": float(abs(m[-1] - m[0]) / m[0]) if m[0] != 0 else float(abs(m[-1])),
        "files": [stem + ".csv", stem + ".json", stem + "_final.csv"],
    }, sort_keys=True))
    return 0


def _resolved(args) -> dict:
    """The fully resolved options of this run, for manifests."""
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in ("func", "config"):
            continue
        if isinstance(v, float) and not math.isfinite(v):
            v = repr(v)
        elif isinstance(v, list):
            v = [repr(x) if isinstance(x, float) and not math.isfinite(x) else x for x in v]
        out[k] = v
    return out


def _version():
    from . import __version__

    return __version__


def cmd_invariance(args):
    from .dynamics import deep_gilw, invariance_test
    from .fields import SeededRng

    spec = deep_gilw(_depth(args.delta), args.k, args.N)
    from .gibbs import Defocusing

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rep = invariance_test(spec, Defocusing(args.k), args.T, args.samples, SeededRng(args.seed),
                              method=args.method, cfl=args.cfl)
    payload = rep.as_dict()
    payload["seed"] = args.seed
    print(json.dumps(payload, sort_keys=True))
    return 0 if rep.passed else 1


def cmd_deep_limit(args):
    from .dynamics import limit_study
    from .experiments import gibbs_tv_deep
    from .output import write_csv

    rows = limit_study("deep", args.deltas, args.N, args.k, args.seed, T=args.T, s=args.s)
    tv = gibbs_tv_deep(args.deltas, args.N, args.k, args.samples, args.seed)
    write_csv(sys.stdout, ["delta", "trajectory_gap", "initial_gap", "scheffe_tv", "scheffe_tv_se"],
              [(r.delta, r.gap, r.initial_gap, e.value, e.stderr) for r, e in zip(rows, tv)])
    return 0


def cmd_shallow_limit(args):
    from .dynamics import limit_study
    from .experiments import shallow_energy, shallow_ky_fan
    from .output import write_csv

    rows = limit_study("shallow", args.deltas, args.N, args.k, args.seed, T=args.T, s=args.s)
    kf = shallow_ky_fan(args.deltas, args.N, args.samples, args.seed, args.s)
    ed = shallow_energy(args.deltas, args.N, args.k, min(args.samples, 5000), args.seed)
    write_csv(sys.stdout, ["delta", "trajectory_gap", "initial_gap", "ky_fan", "ky_fan_se", "energy_distance"],
              [(r.delta, r.gap, r.initial_gap, e.value, e.stderr, v) for r, e, v in zip(rows, kf, ed)])
    return 0


def cmd_acceptance(args):
    from .experiments import run_acceptance

    def echo(r):
        print(r.line(), flush=True)

    results = run_acceptance(quick=args.quick, only=args.only, echo=echo)
    payload = {
        "quick": args.quick,
        "passed": all(r.passed for r in results),
        "criteria": [r.as_dict() for r in results],
        "version": _version(),
        "config": _resolved(args),
    }
    path = args.json or os.path.join(_out_dir(args), "acceptance.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    print(f"report: {path}")
    return 0 if payload["passed"] else 1


# -- parser -------------------------------------------------------------------------------


def _common(p, *names):
    opts = {
        "k": dict(type=int, help="nonlinearity degree"),
        "N": dict(type=int, help="frequency cutoff"),
        "delta": dict(type=float, help="depth parameter (inf allowed where meaningful)"),
        "deltas": dict(type=_floats, help="comma-separated depth grid"),
        "K": dict(type=float, help="cutoff level for the k=2 measure"),
        "A": dict(type=float, help="taming constant"),
        "samples": dict(type=int, help="Monte-Carlo sample count"),
        "T": dict(type=float, help="time horizon"),
        "dt": dict(type=float, help="fixed time step (default: amplitude-based)"),
        "cfl": dict(type=float, help="step-size constant"),
        "s": dict(type=float, help="Sobolev index"),
        "seed": dict(type=int, help="RNG seed"),
    }
    for n in names:
        p.add_argument(f"--{n}", dest=n, **opts[n])


def build_parser(defaults: dict | None = None) -> argparse.ArgumentParser:
    base = cfgmod.ExperimentConfig()
    d = {**{k: v for k, v in vars(base).items()}, **(defaults or {})}
    parser = argparse.ArgumentParser(prog="ilwlab", description=__doc__.split("\n")[0])
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--out-dir", dest="output_dir", help=f"output directory (env {cfgmod.OUTPUT_ENV})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("symbols", help="dispersion symbol table")
    _common(p, "delta")
    p.add_argument("--nmax", type=int, default=8)
    p.set_defaults(func=cmd_symbols)

    p = sub.add_parser("wick", help="Wick variance constants and Hermite checks")
    _common(p, "delta")
    p.add_argument("--Ns", type=_ints, default=[10, 100, 1000])
    p.add_argument("--checks", action="store_true", help="also run the Hermite identity checks")
    p.set_defaults(func=cmd_wick)

    p = sub.add_parser("sample", help="Gibbs ensemble with ESS and Z")
    _common(p, "k", "N", "delta", "K", "A", "samples", "seed")
    p.add_argument("--density", choices=["defocusing", "cutoff", "tamed", "flat"], default="defocusing")
    p.add_argument("--method", choices=["snis", "mh"], default="snis")
    p.add_argument("--step", type=float, default=0.5, help="pCN step for mh")
    p.add_argument("--name", default="ensemble", help="output file stem")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("distances", help="distance reports (JSON lines)")
    _common(p, "k", "N", "delta", "deltas", "samples", "s", "seed")
    p.add_argument("--metric", required=True,
                   choices=["kl", "hellinger", "pinsker", "kakutani", "scheffe-n", "scheffe-delta", "kyfan", "energy"])
    p.add_argument("--M", type=int, default=10_000, help="mode count for closed forms")
    p.set_defaults(func=cmd_distances)

    p = sub.add_parser("evolve", help="single trajectory with diagnostics")
    _common(p, "k", "N", "delta", "T", "dt", "s", "seed")
    p.add_argument("--family", choices=["deep", "bo", "scaled", "kdv"], default="deep")
    p.add_argument("--n-total", dest="n_total", type=int, default=None, help="modes kept (high ones rotate)")
    p.add_argument("--save-every", dest="save_every", type=float, default=None)
    p.add_argument("--drift-tol", dest="drift_tol", type=float, default=None)
    p.add_argument("--limit-sigma", dest="limit_sigma", action="store_true", help="gKdV with pi/6")
    p.add_argument("--input", help="initial field CSV")
    p.add_argument("--name", default="trajectory", help="output file stem")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("invariance", help="statistical Gibbs invariance test")
    _common(p, "k", "N", "delta", "T", "samples", "cfl", "seed")
    p.add_argument("--method", choices=["snis", "mh"], default="snis")
    p.set_defaults(func=cmd_invariance, cfl=1.0)

    for name, fn, grid in (("deep-limit", cmd_deep_limit, None), ("shallow-limit", cmd_shallow_limit, [0.3, 0.1, 0.03, 0.01])):
        p = sub.add_parser(name, help=f"{name.split('-')[0]}-water convergence table (CSV)")
        _common(p, "k", "N", "deltas", "T", "samples", "s", "seed")
        p.set_defaults(func=fn)
        if grid:
            p.set_defaults(deltas=grid)

    p = sub.add_parser("acceptance", help="run the acceptance suite")
    p.add_argument("--quick", action="store_true", help="smaller samples, same tolerances")
    p.add_argument("--only", type=_ints, default=None, help="comma-separated criterion ids")
    p.add_argument("--json", help="report path (default: <out-dir>/acceptance.json)")
    p.set_defaults(func=cmd_acceptance)

    # config values and built-in defaults fill options that were not given
    for sp in sub.choices.values():
        known = {a.dest for a in sp._actions}
        preset = {k: v for k, v in d.items() if k in known and sp.get_default(k) is None}
        # a subcommand's own default (e.g. the shallow grid) only yields to the config file
        preset.update({k: v for k, v in (defaults or {}).items() if k in known})
        sp.set_defaults(**preset)
    parser.set_defaults(output_dir=d["output_dir"])
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        defaults = cfgmod.load_config(known.config) if known.config else {}
    except (OSError, cfgmod.ConfigError) as exc:
        print(f"ilwlab: config error: {exc}", file=sys.stderr)
        return 2
    parser = build_parser(defaults)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, FamilyError) as exc:
        print(f"ilwlab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
