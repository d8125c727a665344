"""Command-line front end.

Every command writes either a CSV table (manifest in '#' header lines,
numbers with 17 significant digits) or a flat JSON object.  Exit status is
0 on success, 1 on numerical failure and 2 on bad arguments.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .errors import DomainError, NumericalError
from .fredholm import gap_nystrom, handle_for
from .kernels import EnsembleConfig, SParam
from .painleve import pv_report, pvi_report
from .ratelab import BOUNDED_RATIO, cdf_rate, kernel_rate
from .sampler import ChainConfig, ks_distance, run_chain
from .unitary import correspondence_check, kernel_u_finite, kernel_u_limit

PV_PASS = 1e-3


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        from . import __version__
        return __version__


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seed: int = 0
    tool_version: str = field(default_factory=tool_version)
    wall_time_s: float = float("nan")
    started: float = field(default_factory=time.perf_counter, repr=False)

    def finish(self):
        self.wall_time_s = time.perf_counter() - self.started

    def header_lines(self, with_time=True):
        lines = [f"command: {self.command}", f"tool_version: {self.tool_version}",
                 f"seed: {self.seed}"]
        if with_time:
            lines.append(f"wall_time_s: {self.wall_time_s:.3f}")
        lines += [f"param.{k}: {v}" for k, v in sorted(self.parameters.items())]
        return ["# " + ln for ln in lines]

    def as_json(self):
        return {"command": self.command, "tool_version": self.tool_version, "seed": self.seed,
                "wall_time_s": round(self.wall_time_s, 3), "parameters": self.parameters}


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path, manifest: RunManifest, columns, rows, with_time=True):
    buf = io.StringIO()
    for ln in manifest.header_lines(with_time):
        buf.write(ln + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    _emit(path, buf.getvalue())


def write_json(path, manifest: RunManifest, payload: dict):
    out = dict(manifest.as_json())
    out.update(payload)
    _emit(path, json.dumps(out, indent=2, default=_json_default) + "\n")


def _json_default(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialise {type(v).__name__}")


def _emit(path, text):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _s(args) -> SParam:
    return SParam(args.s_re, args.s_im)


def _kind(args):
    s = _s(args)
    return s if args.n == 0 else EnsembleConfig(s, args.n)


def _params(args):
    skip = {"func", "out"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def cmd_cdf(args, manifest):
    if not args.x_min > 0:
        raise DomainError("--x-min must be positive")
    if args.x_max < args.x_min:
        raise DomainError("--x-max must be >= --x-min")
    if args.points < 1:
        raise DomainError("--points must be >= 1")
    if args.n < 0:
        raise DomainError("--n must be >= 0 (0 selects the limit law)")
    kh = handle_for(_kind(args))
    xs = np.geomspace(args.x_min, args.x_max, args.points) if args.points > 1 else [args.x_min]
    rows = []
    for x in xs:
        r = gap_nystrom(kh, float(x), order=args.order)
        rows.append((float(x), r.value, r.error_estimate, r.method))
    manifest.finish()
    write_csv(args.out, manifest, ["x", "F", "error_estimate", "method"], rows)
    return 0


def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("list must hold positive integers")
    return vals


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}")


def cmd_rate(args, manifest):
    s = _s(args)
    if args.mode == "kernel":
        table = kernel_rate(s, args.x0, args.n_list)
        xlabels = ["sup"]
    else:
        xs = args.x_points or [args.x0, 2 * args.x0, 4 * args.x0]
        table = cdf_rate(s, xs, args.n_list)
        xlabels = [fmt(x) for x in table.x_grid]
    rows = []
    for i, n in enumerate(table.n_list):
        for j, xl in enumerate(xlabels):
            rows.append((n, xl, table.raw_gaps[i, j], table.scaled_gaps[i, j]))
    passed = table.bounded(BOUNDED_RATIO)
    manifest.finish()
    write_csv(args.out, manifest, ["N", "x", "raw_gap", "scaled_gap"], rows)
    spread = ", ".join(f"{v:.3g}" for v in table.spread())
    print(f"{'PASS' if passed else 'FAIL'}: max/min of N*gap = {spread} (limit {BOUNDED_RATIO:g})",
          file=sys.stderr)
    return 0


def cmd_painleve(args, manifest):
    if not 0 < args.tau_min < args.tau_max:
        raise DomainError("need 0 < --tau-min < --tau-max")
    if args.points < 2:
        raise DomainError("--points must be >= 2")
    s = _s(args)
    taus = np.linspace(args.tau_min, args.tau_max, args.points)
    if args.target == "pv":
        kind = s if args.n == 0 else EnsembleConfig(s, args.n)
        report = pv_report(kind, taus)
        grid_name = "tau"
    else:
        if args.n < 1:
            raise DomainError("--target pvi needs --n >= 1")
        cfg = EnsembleConfig(s, args.n)
        report = pvi_report(cfg, np.sort(args.n / taus))
        grid_name = "t"
    manifest.finish()
    write_json(args.out, manifest, {
        "target": args.target, "grid_variable": grid_name, "grid": report.grid,
        "residuals": report.residuals, "normalizers": report.normalizers,
        "max_relative": report.max_relative, "pass": report.max_relative < PV_PASS,
    })
    return 0


def cmd_sample(args, manifest):
    if args.n < 1:
        raise DomainError("--n must be >= 1")
    burn = args.burn_in if args.burn_in is not None else args.steps // 10
    cfg = EnsembleConfig(_s(args), args.n)
    cc = ChainConfig(cfg, args.steps, burn, 1, 1.0, args.seed, args.chains)
    batch = run_chain(cc)
    ks_finite = ks_distance(batch, cfg)
    ks_limit = ks_distance(batch, cfg.s)
    manifest.finish()
    draws = batch.draws.reshape(args.chains, -1)
    rows = [(c, k, v) for c in range(draws.shape[0]) for k, v in enumerate(draws[c])]
    # wall time stays out of the draws file so seeded runs are byte-identical
    write_csv(args.out, manifest, ["chain", "index", "lambda1_over_n"], rows, with_time=False)
    summary = {
        "draws": batch.size, "ess": batch.ess, "acceptance_rate": batch.acceptance_rate,
        "ks_finite": ks_finite, "ks_limit": ks_limit,
        "pass_finite": ks_finite < 0.01, "pass_limit": ks_limit < 0.02,
    }
    write_json(_summary_path(args.out), manifest, summary)
    return 0


def _summary_path(out):
    if out is None or str(out) == "-":
        return None
    p = Path(out)
    return p.with_name(p.stem + ".ks.json")


def cmd_unitary_check(args, manifest):
    s = _s(args)
    rep = correspondence_check(s)
    rng = np.random.default_rng(args.seed)
    herm = 0.0
    cfg = EnsembleConfig(s, 8)
    for _ in range(20):
        a, b = rng.uniform(0.1, 3.0, 2) * rng.choice([-1, 1], 2)
        if a == b:
            continue
        k1 = kernel_u_finite(a, b, cfg)
        herm = max(herm, abs(k1 - np.conj(kernel_u_finite(b, a, cfg))) / abs(k1))
        k2 = kernel_u_limit(a, b, s)
        herm = max(herm, abs(k2 - np.conj(kernel_u_limit(b, a, s))) / abs(k2))
    manifest.finish()
    write_json(args.out, manifest, {
        "selected_ratio": rep.selected, "constant_modulus": abs(rep.constant),
        "variation_with_jacobian": rep.variation_jacobian, "variation_bare": rep.variation_bare,
        "ratio_pass": True, "hermiticity_max_relative": herm, "hermiticity_pass": herm < 1e-10,
    })
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gcye", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, need_n=True, n_default=0):
        sp.add_argument("--s-re", type=float, default=0.0)
        sp.add_argument("--s-im", type=float, default=0.0)
        if need_n:
            sp.add_argument("--n", type=int, default=n_default)
        sp.add_argument("--out", default=None, help="output file (stdout if omitted)")

    c = sub.add_parser("cdf", help="tabulate P[lambda_1/N <= x]")
    common(c)
    c.add_argument("--x-min", type=float, required=True)
    c.add_argument("--x-max", type=float, required=True)
    c.add_argument("--points", type=int, default=20)
    c.add_argument("--order", type=int, default=40)
    c.set_defaults(func=cmd_cdf)

    r = sub.add_parser("rate", help="N * gap tables for kernels or CDFs")
    common(r, need_n=False)
    r.add_argument("--mode", choices=["kernel", "cdf"], required=True)
    r.add_argument("--x0", type=float, default=0.5)
    r.add_argument("--n-list", type=_int_list, default=[10, 20, 40, 80])
    r.add_argument("--x-points", type=_float_list, default=None)
    r.set_defaults(func=cmd_rate)

    pa = sub.add_parser("painleve", help="ODE residuals of sigma / theta")
    common(pa, n_default=20)
    pa.add_argument("--target", choices=["pvi", "pv"], required=True)
    pa.add_argument("--tau-min", type=float, default=0.2)
    pa.add_argument("--tau-max", type=float, default=1.0)
    pa.add_argument("--points", type=int, default=17)
    pa.set_defaults(func=cmd_painleve)

    sa = sub.add_parser("sample", help="Metropolis draws of lambda_1/N with KS summary")
    common(sa, n_default=5)
    sa.add_argument("--steps", type=int, default=4000)
    sa.add_argument("--burn-in", type=int, default=None)
    sa.add_argument("--chains", type=int, default=128)
    sa.add_argument("--seed", type=int, default=0)
    sa.set_defaults(func=cmd_sample)

    u = sub.add_parser("unitary-check", help="unitary/Hermitian kernel correspondence")
    common(u, need_n=False)
    u.add_argument("--seed", type=int, default=0)
    u.set_defaults(func=cmd_unitary_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    manifest = RunManifest(args.command, _params(args), seed=getattr(args, "seed", 0))
    try:
        return args.func(args, manifest)
    except DomainError as exc:
        print(f"gcye: error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"gcye: numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
