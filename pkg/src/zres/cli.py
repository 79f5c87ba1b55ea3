"""Command-line interface.

Subcommands: zeta-eval, resonate, sums, bounds, search, verify, report.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import dickman, harness, nearhalf, nearone, sums as sums_mod, zeta
from .errors import ZresError
from .params import EvalConfig, ProgressionParams, SigmaMode, log_ratio_target, sigma_of


def _parse_t_range(spec: str) -> list[float]:
    """T0, or T0:T1:steps for an inclusive linear grid."""
    parts = spec.split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) == 3:
        t0, t1, steps = float(parts[0]), float(parts[1]), int(parts[2])
        if steps < 2:
            return [t0]
        return [float(x) for x in np.linspace(t0, t1, steps)]
    raise SystemExit(f"bad --t spec {spec!r}; use T0 or T0:T1:steps")


def _cmd_zeta_eval(args) -> int:
    ts = _parse_t_range(args.t)
    out = sys.stdout
    print("t,re,im,abs,error_bound", file=out)
    cfg = EvalConfig(truncation=args.truncation, epsilon=args.epsilon,
                     precision_bits=args.precision_bits)
    for t in ts:
        if args.mode in ("approx", "both"):
            sample = zeta.zeta_derivative_approx(args.j, args.sigma, t, cfg, force=True)
            value, bound = sample.value, sample.error_bound
        if args.mode in ("ref", "both"):
            ref = zeta.zeta_derivative_ref(args.j, args.sigma, t, args.precision_bits)
        if args.mode == "ref":
            value, bound = ref, 0.0
        elif args.mode == "both":
            # both: report the approx value with the measured residual
            bound = abs(value - ref)
        print(f"{t!r},{value.real!r},{value.imag!r},{abs(value)!r},{bound!r}", file=out)
    return 0


def _cmd_resonate(args) -> int:
    if args.action != "build":
        raise SystemExit("resonate supports the 'build' action")
    if args.mode == "near-half":
        params = ProgressionParams(alpha=1.0, n_range=args.n, j=0,
                                   a_param=args.a_param, sigma_mode=SigmaMode.NEAR_HALF)
        cfg = nearhalf.ResonatorConfig(gamma=args.gamma, b=args.b, kappa=args.kappa)
        res = nearhalf.build_resonator_near_half(
            args.n, args.t_len or args.n, cfg, sigma=sigma_of(params), seed=args.seed)
        digest = nearhalf.write_resonator(res, args.out)
    else:
        res = nearone.build_resonator_near_one(args.n, _smooth_rule(args.smooth_x))
        digest = nearone.write_resonator_near_one(res, args.out)
    print(f"{args.out} sha256={digest}")
    return 0


def _smooth_rule(expr: str | None):
    if expr is None:
        return "log1*log2"
    try:
        return float(expr)
    except ValueError:
        return expr


def _cmd_sums(args) -> int:
    mode = SigmaMode(args.mode)
    params = ProgressionParams(alpha=args.alpha, n_range=args.n, j=args.j,
                               a_param=args.a_param, sigma_mode=mode)
    if mode is SigmaMode.NEAR_HALF:
        res, _ = nearhalf.read_resonator(args.resonator)
        nh = sums_mod.compute_near_half_sums(res, params)
        bound = math.exp(dickman.lambda_of_A(args.a_param) * log_ratio_target(args.n))
        payload = {"s1": nh.s1, "s2_re": nh.s2.real, "s2_im": nh.s2.imag,
                   "e1_abs": abs(nh.e1), "e2_abs": abs(nh.e2),
                   "ratio": abs(nh.s2) / nh.s1, "theoretical_bound": bound,
                   "kernel": "gaussian", "truncation_radius": nh.truncation_radius}
    else:
        res1, _ = nearone.read_resonator_near_one(args.resonator)
        g = sums_mod.sum_G1_G2(res1, params)
        from .params import _logs123
        bound = dickman.d_j_of_A(args.j, args.a_param) * _logs123(args.n)[1] ** (args.j + 1)
        payload = {"s1": g.g1, "s2_re": g.g2.real, "s2_im": g.g2.imag,
                   "e1_abs": 0.0, "e2_abs": 0.0,
                   "ratio": abs(g.g2) / g.g1, "theoretical_bound": bound,
                   "kernel": "bump", "truncation_radius": 2 * args.n}
    text = json.dumps(payload, indent=1, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def _cmd_bounds(args) -> int:
    if args.lam is not None:
        print(f"{dickman.lambda_of_A(args.lam):.15g}")
        return 0
    if args.dja is not None:
        j, a = int(args.dja[0]), float(args.dja[1])
        print(f"{dickman.d_j_of_A(j, a):.15g}")
        return 0
    if args.table:
        print("j,A,D_j(A)")
        for j in range(0, 5):
            for a in (0.0, 0.25, 0.5, 0.75, 1.0):
                print(f"{j},{a!r},{dickman.d_j_of_A(j, a):.15g}")
        return 0
    raise SystemExit("bounds: pass --lambda A, --dja J A, or --table")


def _cmd_search(args) -> int:
    cfg = harness.parse_config(args.config)
    report = harness.experiment_from_config(cfg)
    data = harness.emit_report(report, args.format)
    if args.format == "csv":
        data = (harness.CSV_HEADER + "\n").encode() + data
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode())
    print(harness.LEADING_ORDER_BANNER, file=sys.stderr)
    return 0


def _verify_lemma1(rng) -> bool:
    ok = True
    for big_t in (10 ** 3, 10 ** 4):
        cfg = EvalConfig(truncation=big_t, epsilon=0.1)
        for _ in range(20):
            j = int(rng.integers(0, 4))
            sigma = float(rng.uniform(0.6, 1.2))
            t = float(rng.uniform(big_t, 2 * big_t))
            sample = zeta.zeta_derivative_approx(j, sigma, t, cfg)
            ref = zeta.zeta_derivative_ref(j, sigma, t)
            ok &= abs(sample.value - ref) <= sample.error_bound
    return ok


def _verify_lemma2(rng) -> bool:
    ok = sums_mod.gallagher_check(lambda t: 1.0 + 0j, lambda t: 0j, 0.0, 10.0, 64).passed
    ok &= sums_mod.gallagher_check(lambda t: complex(math.sin(2 * math.pi * t)),
                                   lambda t: complex(2 * math.pi * math.cos(2 * math.pi * t)),
                                   0.0, 10.0, 256).passed
    for _ in range(10):
        j = int(rng.integers(0, 3))
        sigma = float(rng.uniform(0.55, 0.95))
        alpha = float(rng.uniform(0.5, 2.0))
        ok &= sums_mod.gallagher_check_zeta(j, sigma, alpha, 20.0, 80.0, 512).passed
    return ok


def _verify_lemma3(_) -> bool:
    ok = True
    for j in (0, 1):
        for sigma in (0.6, 0.75, 0.9):
            vals = []
            for n in (500, 1000):
                params = ProgressionParams(alpha=1.0, n_range=n, j=j, a_param=0.5,
                                           sigma_mode=SigmaMode.NEAR_HALF)
                vals.append(sums_mod.discrete_mean_square(params, sigma=sigma))
            ok &= 0.5 <= vals[1] / vals[0] <= 2.0
    return ok


def _verify_poisson(_) -> bool:
    params = ProgressionParams(alpha=1.0, n_range=10 ** 4, j=0, a_param=0.5,
                               sigma_mode=SigmaMode.NEAR_HALF)
    cfg = nearhalf.ResonatorConfig()
    res = nearhalf.build_resonator_near_half(10 ** 4, 10 ** 4, cfg, sigma=sigma_of(params))
    return sums_mod.poisson_check(res, params, pairs=30) < 1e-8


def _verify_dickman(_) -> bool:
    ok = abs(dickman.dickman_rho(2.0) - (1.0 - math.log(2.0))) < 1e-10
    ok &= abs(dickman.dickman_rho(3.0) - 0.048608388291131567) < 1e-10
    ok &= abs(dickman.d_j_of_A(0, 0.0) - 1.7810724179901979) < 1e-6
    ok &= abs(dickman.lambda_of_A(0.0) - 0.41151967591991631) < 1e-12
    return ok


_VERIFIERS = {"lemma1": _verify_lemma1, "lemma2": _verify_lemma2,
              "lemma3": _verify_lemma3, "poisson": _verify_poisson,
              "dickman": _verify_dickman}


def _cmd_verify(args) -> int:
    rng = np.random.default_rng(args.seed)
    passed = _VERIFIERS[args.what](rng)
    print(f"verify {args.what}: {'PASS' if passed else 'FAIL'}")
    return 0 if passed else 1


def _cmd_report(args) -> int:
    reports = [harness.parse_report(Path(f).read_bytes()) for f in args.files]
    print(harness.CSV_HEADER)
    for rep in reports:
        sys.stdout.write(harness.emit_report(rep, "csv").decode())
    if args.plot_data:
        outdir = Path(args.plot_data)
        outdir.mkdir(parents=True, exist_ok=True)
        ordered = sorted(reports, key=lambda r: r.params.n_range)
        ns = [r.params.n_range for r in ordered]
        harness.export_curve(outdir / "ratio_vs_n.csv", ns,
                             [r.sum_report.ratio for r in ordered])
        harness.export_curve(outdir / "bound_vs_n.csv", ns,
                             [r.sum_report.theoretical_bound for r in ordered])
        harness.export_curve(outdir / "brute_max_vs_n.csv", ns,
                             [r.sum_report.brute_max for r in ordered])
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="zres",
                                 description="resonance experiments for zeta derivatives "
                                             "on homogeneous progressions")
    sub = ap.add_subparsers(dest="cmd", required=True)

    ze = sub.add_parser("zeta-eval", help="evaluate zeta^(j) along a t-grid")
    ze.add_argument("--j", type=int, required=True)
    ze.add_argument("--sigma", type=float, required=True)
    ze.add_argument("--t", required=True, help="T0 or T0:T1:steps")
    ze.add_argument("--mode", choices=("approx", "ref", "both"), default="ref")
    ze.add_argument("--truncation", type=int, default=10 ** 4)
    ze.add_argument("--epsilon", type=float, default=0.1)
    ze.add_argument("--precision-bits", type=int, default=53)
    ze.set_defaults(func=_cmd_zeta_eval)

    rb = sub.add_parser("resonate", help="build and persist a resonator")
    rb.add_argument("action", choices=("build",))
    rb.add_argument("--mode", choices=("near-half", "near-one"), required=True)
    rb.add_argument("--n", type=int, required=True)
    rb.add_argument("--gamma", type=float, default=0.45)
    rb.add_argument("--b", type=float, default=1.8)
    rb.add_argument("--kappa", type=float, default=0.45)
    rb.add_argument("--t-len", type=int, default=None)
    rb.add_argument("--seed", type=int, default=0)
    rb.add_argument("--a-param", type=float, default=1.0)
    rb.add_argument("--smooth-x", default=None)
    rb.add_argument("--out", required=True)
    rb.set_defaults(func=_cmd_resonate)

    sm = sub.add_parser("sums", help="weighted progression sums for a stored resonator")
    sm.add_argument("--mode", choices=("near-half", "near-one"), required=True)
    sm.add_argument("--resonator", required=True)
    sm.add_argument("--n", type=int, required=True)
    sm.add_argument("--alpha", type=float, required=True)
    sm.add_argument("--j", type=int, required=True)
    sm.add_argument("--a-param", type=float, required=True)
    sm.add_argument("--out", default=None)
    sm.set_defaults(func=_cmd_sums)

    bd = sub.add_parser("bounds", help="closed-form constants and moment tables")
    bd.add_argument("--lambda", dest="lam", type=float, default=None)
    bd.add_argument("--dja", nargs=2, metavar=("J", "A"), default=None)
    bd.add_argument("--table", action="store_true")
    bd.set_defaults(func=_cmd_bounds)

    se = sub.add_parser("search", help="run the experiment a config file describes")
    se.add_argument("--config", required=True)
    se.add_argument("--out", default=None)
    se.add_argument("--format", choices=("json", "csv"), default="json")
    se.set_defaults(func=_cmd_search)

    vf = sub.add_parser("verify", help="self-check suites")
    vf.add_argument("what", choices=sorted(_VERIFIERS))
    vf.add_argument("--seed", type=int, default=7)
    vf.set_defaults(func=_cmd_verify)

    rp = sub.add_parser("report", help="render stored JSON reports as CSV")
    rp.add_argument("files", nargs="+")
    rp.add_argument("--plot-data", default=None)
    rp.set_defaults(func=_cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ZresError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
