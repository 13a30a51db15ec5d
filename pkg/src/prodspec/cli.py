"""Command-line front end.

Subcommands: ``sample``, ``limit``, ``validate``, ``kstest``, ``kernel``.
Exit codes: 0 pass, 1 threshold failure, 2 usage error, 3 numeric error.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .ensembles import (
    EnsembleKind,
    EnsembleSpec,
    LogRadialSample,
    ScalingRule,
    attach_angles,
    sample_log_sq_moduli,
    scaled_log_values,
)
from .errors import ContractError, NumericError, ProdspecError
from .export import csv_text, dumps_json, metadata, write_text
from .kernel import KernelSpec, RadialWeight, normalizing_constant, one_point_density, radial_density_Pn
from .limits import (
    QProfile,
    Regime,
    corollary1_limit,
    corollary2_limit,
    corollary3_limit,
    corollary4_limit,
    ginibre_limit,
    numerics_record,
    profile_table,
    radial_cdf_vector,
)
from .oracle import oracle_spectra, spectrum_rows
from .rng import RandomStream
from .sampling import TWO_PI
from .stats import EmpiricalMeasure, ks_one_sample, ks_two_sample

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

ORACLE_CHUNK = 500
NOT_ECHOED = {"command", "config", "out", "spectra_out", "threads", "func"}


class UsageError(ProdspecError):
    pass


# ------------------------------------------------------------------ parsing


def _int_list(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def _float_list(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _beta(text):
    t = str(text).strip().lower()
    return math.inf if t in ("inf", "infinity", "+inf") else float(t)


def read_config(path) -> dict:
    """Flat ``key=value`` file; blank lines and ``#`` comments ignored."""
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


def _common_parent():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, help="64-bit seed (required for sample/validate/kstest)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for replicates")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--config", default=None, help="flat key=value file; flags override it")
    return p


def _ensemble_parent():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--ensemble", choices=("ginibre", "truncated"), default="ginibre")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--gaps", type=_int_list, default=None, help="l_1,...,l_m; a single value is repeated m times")
    return p


def _scaling_args(p):
    p.add_argument("--scaling", choices=("none", "ginibre-power", "truncated-power", "linear"), default="none")
    p.add_argument("--gamma", type=float, default=None, help="gamma_n for truncated-power scaling")


def _regime_args(p, required=True):
    p.add_argument("--regime", choices=("ginibre", "cor1", "cor2", "cor3", "cor4"), required=False, default=None)
    p.add_argument("--alphas", type=_float_list, default=None)
    p.add_argument("--beta", type=_beta, default=None)
    p.add_argument("--q", default=None, help="q profile: const:A or linear:S")
    p.add_argument("--q-file", default=None, help="CSV t,q tabulating q on [0,1]")
    p.add_argument("--limit-m", type=int, default=None, help="m for the ginibre/cor1 limit (defaults to --m)")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parent()
    ens = _ensemble_parent()
    parser = argparse.ArgumentParser(prog="prodspec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"prodspec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", parents=[common, ens], help="draw eigenvalue moduli")
    _scaling_args(p)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--angles", action="store_true", help="attach i.i.d. uniform angles")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("limit", parents=[common], help="tabulate a limiting profile")
    _regime_args(p)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--points", type=int, default=1001)
    p.set_defaults(func=cmd_limit)

    p = sub.add_parser("validate", parents=[common, ens], help="structural sampler vs matrix oracle")
    p.add_argument("--draws", type=int, default=4000)
    p.add_argument("--threshold", type=float, default=0.03)
    p.add_argument("--oracle-ensemble", choices=("ginibre", "truncated"), default=None)
    p.add_argument("--oracle-m", type=int, default=None)
    p.add_argument("--oracle-gaps", type=_int_list, default=None)
    p.add_argument("--spectra-out", default=None, help="also write oracle spectra as CSV")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("kstest", parents=[common, ens], help="scaled sample vs limiting profile")
    _scaling_args(p)
    _regime_args(p)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--arc-window", type=float, default=0.1)
    p.add_argument("--arc-mass", type=float, default=0.95)
    p.set_defaults(func=cmd_kstest)

    p = sub.add_parser("kernel", parents=[common], help="kernel constants and radial density grid")
    p.add_argument("--weight", choices=("ginibre", "truncated", "tabulated"), default="ginibre")
    p.add_argument("--l", type=int, default=1)
    p.add_argument("--weight-file", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--rmax", type=float, default=None)
    p.add_argument("--points", type=int, default=401)
    p.set_defaults(func=cmd_kernel)
    return parser


def parse_args(argv):
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config:
        cfg = read_config(known.config)
        args0 = parser.parse_args(argv)
        subparser = parser._subparsers._group_actions[0].choices[args0.command]
        valid = {a.dest for a in subparser._actions}
        unknown = set(cfg) - valid
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        for action in subparser._actions:
            if action.dest in cfg and isinstance(action, argparse._StoreTrueAction):
                flag = cfg[action.dest].lower()
                if flag not in ("true", "false", "1", "0", "yes", "no"):
                    raise UsageError(f"config key {action.dest} expects true/false")
                cfg[action.dest] = flag in ("true", "1", "yes")
        subparser.set_defaults(**cfg)
    args = parser.parse_args(argv)
    return args


# ---------------------------------------------------------------- helpers


def _echo(args) -> dict:
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in NOT_ECHOED or value is None:
            continue
        out[key] = value
    return out


def _spec_from(kind, n, m, gaps) -> EnsembleSpec:
    if n is None:
        raise UsageError("--n is required")
    if kind == "ginibre":
        if gaps:
            raise UsageError("--gaps only applies to --ensemble truncated")
        return EnsembleSpec.ginibre(n, m or 1)
    if not gaps:
        raise UsageError("--ensemble truncated needs --gaps")
    if m is None:
        m = len(gaps)
    if len(gaps) == 1:
        gaps = gaps * m
    if len(gaps) != m:
        raise UsageError(f"--gaps has {len(gaps)} entries but --m is {m}")
    return EnsembleSpec.truncated(n, gaps)


def _spec(args) -> EnsembleSpec:
    return _spec_from(args.ensemble, args.n, args.m, args.gaps)


def _rule(args, spec):
    if args.scaling == "none":
        return None
    if args.scaling == "ginibre-power":
        return ScalingRule.ginibre_power(spec)
    if args.scaling == "truncated-power":
        if args.gamma is None:
            raise UsageError("--scaling truncated-power needs --gamma")
        return ScalingRule.truncated_power(spec, args.gamma)
    return ScalingRule.linear(spec)


def _require_seed(args):
    if args.seed is None:
        raise UsageError(f"{args.command} requires --seed")


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _q_profile(args) -> QProfile:
    if args.q_file:
        data = np.genfromtxt(args.q_file, delimiter=",", names=True, comments="#")
        if set(data.dtype.names or ()) != {"t", "q"}:
            raise UsageError("q file must have header t,q")
        return QProfile(grid=data["t"], values=data["q"], tag=f"file:{args.q_file}")
    if not args.q:
        raise UsageError("cor2 needs --q or --q-file")
    kind, _, value = args.q.partition(":")
    try:
        v = float(value)
    except ValueError:
        raise UsageError(f"cannot parse --q {args.q!r}") from None
    if kind == "const":
        return QProfile.constant(v)
    if kind == "linear":
        return QProfile.linear(v)
    if kind == "linear-tab":
        return QProfile.tabulate(lambda t: v * t, tag=args.q)
    raise UsageError(f"unknown q profile kind {kind!r}")


def _profile(args, m_default=None):
    regime = args.regime
    if regime is None:
        raise UsageError("--regime is required")
    m = getattr(args, "limit_m", None) or getattr(args, "m", None) or m_default
    if regime == "ginibre":
        return ginibre_limit(m or 1)
    if regime == "cor1":
        if args.alphas is None:
            raise UsageError("cor1 needs --alphas")
        return corollary1_limit(len(args.alphas), args.alphas)
    if regime == "cor2":
        return corollary2_limit(_q_profile(args))
    if regime == "cor3":
        if args.beta is None:
            raise UsageError("cor3 needs --beta")
        return corollary3_limit(args.beta)
    return corollary4_limit()


def _summary(spec, elapsed, points, rule):
    parts = [f"n={spec.n}", f"m={spec.m}"]
    if spec.kind is EnsembleKind.TRUNCATED:
        parts.append(f"b_n={math.exp(spec.log_b()):.6g} (log {spec.log_b():.6g})")
    if rule is not None and rule.kind.value == "linear":
        parts.append(f"a_n=exp({rule.log_scale:.6g})")
    rate = points / elapsed if elapsed > 0 else float("inf")
    parts.append(f"wall={elapsed:.3f}s")
    parts.append(f"points/sec={rate:.3g}")
    print("prodspec: " + " ".join(parts), file=sys.stderr)


# ------------------------------------------------------------- subcommands


def cmd_sample(args) -> int:
    _require_seed(args)
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    spec = _spec(args)
    rule = _rule(args, spec)
    fmt_ = args.format or "csv"

    def one(rep):
        rng = RandomStream(args.seed, rep)
        sample = LogRadialSample(spec, sample_log_sq_moduli(spec, rng, 1)[0])
        if args.angles:
            sample = attach_angles(sample, rng)
        scaled = None if rule is None else np.exp(scaled_log_values(sample.log_sq_moduli, spec, rule))
        return rep, sample, scaled

    t0 = time.perf_counter()
    results = sorted(_map(one, range(args.reps), args.threads), key=lambda r: r[0])
    _summary(spec, time.perf_counter() - t0, spec.n * args.reps, rule)

    meta = metadata("sample", _echo(args))
    if fmt_ == "json":
        doc = {"metadata": meta, "replicates": []}
        for rep, sample, scaled in results:
            entry = {"replicate": rep, "log_sq_modulus": sample.log_sq_moduli}
            entry["angle"] = sample.angles if sample.angles is not None else None
            if scaled is not None:
                entry["scaled"] = scaled
            doc["replicates"].append(entry)
        write_text(args.out, dumps_json(doc))
        return EXIT_PASS

    header = ["j", "log_sq_modulus", "angle"]
    if rule is not None:
        header.append("scaled")
    if args.reps > 1:
        header.insert(0, "replicate")
    rows = []
    for rep, sample, scaled in results:
        for j in range(spec.n):
            row = [j + 1, sample.log_sq_moduli[j], None if sample.angles is None else sample.angles[j]]
            if scaled is not None:
                row.append(scaled[j])
            if args.reps > 1:
                row.insert(0, rep)
            rows.append(row)
    write_text(args.out, csv_text(header, rows, meta))
    return EXIT_PASS


def cmd_limit(args) -> int:
    profile = _profile(args)
    table = profile_table(profile, args.points)
    meta = metadata("limit", _echo(args))
    if (args.format or "json") == "json":
        doc = {
            "metadata": meta,
            "regime": profile.regime.value,
            "parameters": profile.params,
            "numerics": numerics_record(args.points),
            "table": table,
        }
        write_text(args.out, dumps_json(doc))
        return EXIT_PASS
    cols = [c for c in ("x", "F", "F_inverse", "f_star", "planar_density") if table.get(c) is not None]
    meta["params"]["regime_tag"] = profile.regime.value
    rows = zip(*(table[c] for c in cols))
    write_text(args.out, csv_text(cols, rows, meta))
    return EXIT_PASS


def _report(args, statistic, sizes, threshold, passed, extra=None):
    doc = {
        "statistic": statistic,
        "sample_sizes": list(sizes),
        "seed": args.seed,
        "threshold": threshold,
        "pass": bool(passed),
    }
    if extra:
        doc.update(extra)
    doc["metadata"] = metadata(args.command, _echo(args))
    write_text(args.out, dumps_json(doc))


def cmd_validate(args) -> int:
    _require_seed(args)
    spec = _spec(args)
    if args.oracle_ensemble is None:
        ospec = spec
    else:
        ospec = _spec_from(
            args.oracle_ensemble,
            spec.n,
            args.oracle_m or (None if args.oracle_gaps else spec.m),
            args.oracle_gaps,
        )
    draws = args.draws
    if draws < 1:
        raise UsageError("--draws must be >= 1")
    structural = sample_log_sq_moduli(spec, RandomStream(args.seed, 0), draws)
    chunks = [(c, min(ORACLE_CHUNK, draws - c * ORACLE_CHUNK)) for c in range(math.ceil(draws / ORACLE_CHUNK))]
    parts = _map(lambda ck: oracle_spectra(ospec, RandomStream(args.seed, 1 + ck[0]), ck[1]), chunks, args.threads)
    spectra = [res for part in parts for res in part]
    oracle = np.array([res.log_sq_moduli for res in spectra])
    if args.spectra_out:
        header = ["replicate", "re", "im", "log_sq_modulus", "argument"]
        write_text(args.spectra_out, csv_text(header, spectrum_rows(spectra), metadata("validate", _echo(args))))
    stat = ks_two_sample(EmpiricalMeasure(structural), EmpiricalMeasure(oracle))
    passed = stat <= args.threshold
    _report(args, stat, (structural.size, oracle.size), args.threshold, passed, {"compared": "log_sq_modulus"})
    return EXIT_PASS if passed else EXIT_FAIL


def cmd_kstest(args) -> int:
    _require_seed(args)
    spec = _spec(args)
    rule = _rule(args, spec)
    if rule is None:
        raise UsageError("kstest needs --scaling")
    profile = _profile(args, m_default=spec.m)
    _check_pairing(rule, profile)

    def one(rep):
        rng = RandomStream(args.seed, rep)
        sample = attach_angles(LogRadialSample(spec, sample_log_sq_moduli(spec, rng, 1)[0]), rng)
        return np.exp(scaled_log_values(sample.log_sq_moduli, spec, rule)), sample.angles

    results = _map(one, range(args.reps), args.threads)
    radial = EmpiricalMeasure(np.concatenate([r[0] for r in results]))
    angles = EmpiricalMeasure(np.concatenate([r[1] for r in results]))
    ang_stat = ks_one_sample(angles, lambda t: np.asarray(t) / TWO_PI)
    extra = {"angular_statistic": ang_stat, "regime": profile.regime.value}
    if profile.regime is Regime.ARC_LAW:
        v = radial.values
        mass = float(np.mean((v >= 1.0 - args.arc_window) & (v <= 1.0 + args.arc_window)))
        extra["mass_near_one"] = mass
        extra["arc_mass_required"] = args.arc_mass
        stat = 1.0 - mass
        passed = mass >= args.arc_mass and ang_stat <= args.threshold
    else:
        stat = ks_one_sample(radial, radial_cdf_vector(profile))
        passed = stat <= args.threshold and ang_stat <= args.threshold
    _report(args, stat, (radial.count,), args.threshold, passed, extra)
    return EXIT_PASS if passed else EXIT_FAIL


def _check_pairing(rule, profile):
    kind = rule.kind.value
    if profile.regime is Regime.GINIBRE_POWER and kind != "ginibre-power":
        raise UsageError("the ginibre regime pairs with --scaling ginibre-power")
    if profile.regime in (Regime.GENERAL_F, Regime.CIRCULAR_LAW) and kind != "truncated-power":
        raise UsageError(f"regime {profile.regime.value} pairs with --scaling truncated-power")
    if profile.regime is Regime.ARC_LAW and kind not in ("linear", "truncated-power"):
        raise UsageError("the arc law pairs with --scaling linear or truncated-power")


def cmd_kernel(args) -> int:
    if args.n is None or args.n < 1:
        raise UsageError("kernel needs --n >= 1")
    if args.weight == "ginibre":
        weight = RadialWeight.ginibre()
    elif args.weight == "truncated":
        weight = RadialWeight.truncated(args.l)
    else:
        if not args.weight_file:
            raise UsageError("--weight tabulated needs --weight-file")
        weight = RadialWeight.from_csv(args.weight_file)
    spec = KernelSpec.build(args.n, weight)
    log_C = normalizing_constant(args.n, weight)
    rmax = args.rmax
    if rmax is None:
        rmax = weight.support_max if math.isfinite(weight.support_max) else math.sqrt(args.n) + 6.0
    r = np.linspace(0.0, rmax, args.points)
    pn = radial_density_Pn(spec, r)
    opd = np.array([one_point_density(spec, x) for x in r])
    ck_rows = [(k, spec.log_c[k], math.exp(spec.log_c[k])) for k in range(args.n)]
    meta = metadata("kernel", _echo(args))
    meta["params"]["log_C"] = log_C
    if (args.format or "csv") == "json":
        doc = {
            "metadata": meta,
            "log_C": log_C,
            "ck": {"k": [c[0] for c in ck_rows], "log_c": [c[1] for c in ck_rows], "c": [c[2] for c in ck_rows]},
            "grid": {"r": r, "P_n": pn, "one_point_density": opd},
        }
        write_text(args.out, dumps_json(doc))
        return EXIT_PASS
    write_text(args.out, csv_text(["r", "P_n", "one_point_density"], zip(r, pn, opd), meta))
    ck_text = csv_text(["k", "log_c", "c"], ck_rows, meta)
    if args.out is None or args.out == "-":
        write_text(None, ck_text)
    else:
        out = Path(args.out)
        write_text(out.with_name(out.stem + ".ck.csv"), ck_text)
    return EXIT_PASS


# -------------------------------------------------------------------- main


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except NumericError as exc:
        print(f"prodspec: numeric error: {exc} {exc.diagnostics}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ContractError, ValueError, OSError) as exc:
        print(f"prodspec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
