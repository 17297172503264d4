"""``fockcoh`` command line.

Named states are written ``name:key=value,...``, e.g. ``bec:N=4,n=1``,
``psi:theta=0.7853981633974483,m=3,N=8`` or ``phi:N=2``.  Anything that is
an existing path is read as JSON (a state, a density matrix or a Kraus set).

Exit codes: 0 success, 1 internal failure, 2 bad arguments, 3 resource guard.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .coherence import measure
from .distill import rate_bec, rate_indefinite, rate_mc_from_pure
from .errors import InvalidArgumentsError, ResourceLimitError, UndefinedRateError, UndefinedSectorError
from .fock import DensityMatrix, FockSpaceState
from .freesets import hom_channel, is_delta_a, kraus_in_e_a, pure_in_delta_b
from .optimize import sweep_psi, theta_grid, verify_kkt
from .protocol import simulate
from .states import HOM_TWO_PHOTON_WEIGHT, NAMED, hom_phi, phi_law, psi

_INT_KEYS = {"N", "n", "m", "copies", "N_max"}


def _parse_value(key: str, raw: str):
    if key in _INT_KEYS:
        return int(raw)
    if key in ("alpha", "c1", "c2"):
        return complex(raw.replace(" ", ""))
    if key == "spinor":
        return tuple(complex(x) for x in raw.split(";"))
    return float(raw)


def parse_state_spec(spec: str, default_N: int | None = None):
    """Build a state from a file path or a ``name:key=value`` spec."""
    if os.path.exists(spec):
        with open(spec) as fh:
            return load_json_object(json.load(fh))
    name, _, rest = spec.partition(":")
    if name not in NAMED:
        raise InvalidArgumentsError(f"unknown state {name!r}; choose from {sorted(NAMED)}")
    kwargs = {}
    for item in filter(None, rest.split(",")):
        key, _, raw = item.partition("=")
        kwargs[key.strip()] = _parse_value(key.strip(), raw.strip())
    if "N" not in kwargs and default_N is not None and name not in ("hom_phi", "hw_coherent"):
        kwargs["N"] = default_N
    if name == "phi" and kwargs.get("N", 0) > 200:
        return phi_law(kwargs["N"])
    try:
        return NAMED[name](**kwargs)
    except TypeError as exc:
        raise InvalidArgumentsError(str(exc)) from exc


def load_json_object(data):
    if "kraus" in data:
        return [np.array([[complex(re, im) for re, im in row] for row in K]) for K in data["kraus"]]
    if "blocks" in data:
        return DensityMatrix.from_dict(data)
    if "sectors" in data:
        return FockSpaceState.from_dict(data)
    raise InvalidArgumentsError("JSON is neither a state, a density matrix nor a Kraus set")


def _envelope(args, payload: dict, seed=None) -> dict:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "command")}
    return {"version": __version__, "command": args.command, "seed": seed, "parameters": params, **payload}


def _emit(args, text: str):
    if getattr(args, "out", None):
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, payload: dict, seed=None):
    _emit(args, json.dumps(_envelope(args, payload, seed), sort_keys=True, default=_default) + "\n")


def _default(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit_csv(args, header: list[str], rows: list[list]):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    _emit(args, buf.getvalue())


# subcommands


def cmd_state(args):
    state = parse_state_spec(args.spec)
    if not isinstance(state, FockSpaceState):
        state = state.materialize()
    _emit_json(args, {"state": state.to_dict()})


def cmd_coherence(args):
    state = parse_state_spec(args.state)
    value = measure(state, args.measure, args.N)
    _emit_json(args, {"measure": args.measure, "value_bits": value})


def cmd_membership(args):
    obj = parse_state_spec(args.input)
    if args.test == "deltaA":
        report = is_delta_a(obj, args.tol if args.tol is not None else 1e-12)
    elif args.test == "deltaB":
        if not isinstance(obj, FockSpaceState):
            raise InvalidArgumentsError("deltaB membership needs a pure state")
        report = pure_in_delta_b(obj, args.tol if args.tol is not None else 1e-9)
    else:
        if not isinstance(obj, list):
            raise InvalidArgumentsError("krausA membership needs a JSON Kraus set")
        report = kraus_in_e_a(obj, args.tol if args.tol is not None else 1e-12)
    _emit_json(args, {"test": args.test, "report": report.to_dict()})


def _rate_for(args, N: int):
    if args.protocol == "bec":
        return rate_bec(N)
    if args.state is None:
        raise InvalidArgumentsError(f"protocol {args.protocol} needs --state")
    state = parse_state_spec(args.state, default_N=N)
    if args.protocol == "pure":
        return rate_mc_from_pure(state, N)
    return rate_indefinite(state, N)


def cmd_rate(args):
    reports = [(N, _rate_for(args, N)) for N in args.N]
    if args.csv:
        rows = [[N, r.rate, r.numerator_bits, r.denominator_bits] for N, r in reports]
        _emit_csv(args, ["N", "rate[dimensionless]", "numerator[bits]", "denominator[bits]"], rows)
    elif len(reports) == 1:
        _emit_json(args, reports[0][1].to_dict())
    else:
        _emit_json(args, {"reports": [{"N": N, **r.to_dict()} for N, r in reports]})


def cmd_simulate(args):
    state = parse_state_spec(args.state)
    rep = simulate(state, args.n, args.shots, args.target_dim, args.seed, args.exact, args.threads)
    d = rep.to_dict()
    if args.csv:
        keys = sorted(d)
        _emit_csv(args, keys, [[d[k] for k in keys]])
    else:
        _emit_json(args, {"report": d}, seed=args.seed)


def cmd_sweep(args):
    m_values = None if args.m == "all" else [int(x) for x in args.m.split(",")]
    res = sweep_psi(args.N, theta_grid(args.theta_points), m_values, refine=args.refine, threads=args.threads)
    rows = [[res.N, g.theta, g.m, g.coherence_bits, g.rate] for g in res.grid]
    _emit_csv(args, ["N", "theta[rad]", "m", "C[bits]", "rate[dimensionless]"], rows)


def _fig2_row(N: int) -> list:
    h = N // 2
    row = [N]
    for m in (0, h, max(h - 1, 0)):
        row.append(rate_mc_from_pure(psi(math.pi / 4, m, N), N).rate)
    row.append(rate_indefinite(phi_law(N), N).rate)
    return row


def fig2_rows(N_max: int, step: int, threads: int = 1) -> list[list]:
    if step < 1 or N_max < step:
        raise InvalidArgumentsError("need 1 <= step <= Nmax")
    Ns = range(step, N_max + 1, step)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(_fig2_row, Ns))
    return [_fig2_row(N) for N in Ns]


def cmd_fig2(args):
    header = ["N", "rate_m0[dimensionless]", "rate_mN2[dimensionless]", "rate_mN2m1[dimensionless]",
              "rate_phi_inset[dimensionless]"]
    _emit_csv(args, header, fig2_rows(args.Nmax, args.step, args.threads))


def cmd_hom_check(args):
    c1, c2 = complex(args.c1), complex(args.c2)
    single = FockSpaceState.from_amplitudes(2, {(1, 0): c1, (0, 1): c2})
    rho = hom_channel(single)
    two = rho.block(2)
    target = hom_phi(c1, c2).sectors[2]
    expected = HOM_TWO_PHOTON_WEIGHT * np.outer(target, np.conj(target))
    payload = {
        "block_weights": {str(N): w for N, w in sorted(rho.sector_weights().items())},
        "expected_weights": {"0": abs(c1) ** 2 / 2, "1": abs(c2) ** 2 / 2, "2": HOM_TWO_PHOTON_WEIGHT},
        "two_particle_block_residual": float(np.abs(two - expected).max()),
        "two_particle_membership": pure_in_delta_b(hom_phi(c1, c2)).to_dict(),
    }
    _emit_json(args, payload)


def cmd_kkt(args):
    reports = [verify_kkt(N, args.kmax, args.tol, seed=args.seed).to_dict() for N in args.N]
    _emit_json(args, {"reports": reports}, seed=args.seed)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fockcoh", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--out", help="write output to this file instead of stdout")
        p.set_defaults(func=func)
        return p

    p = add("state", cmd_state, "emit a named state as JSON")
    p.add_argument("spec")

    p = add("coherence", cmd_coherence, "evaluate a coherence measure")
    p.add_argument("--state", required=True)
    p.add_argument("--measure", choices=["CN", "C", "CA"], default="CA")
    p.add_argument("--N", type=int)

    p = add("membership", cmd_membership, "free-set membership tests")
    p.add_argument("--test", choices=["deltaA", "deltaB", "krausA"], required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--tol", type=float)

    p = add("rate", cmd_rate, "analytic distillation rates")
    p.add_argument("--protocol", choices=["bec", "pure", "indefinite"], required=True)
    p.add_argument("--N", type=int, nargs="+", required=True)
    p.add_argument("--state")
    p.add_argument("--csv", action="store_true")

    p = add("simulate", cmd_simulate, "Monte-Carlo protocol simulation")
    p.add_argument("--state", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--shots", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target-dim", type=int)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--csv", action="store_true")

    p = add("sweep", cmd_sweep, "sweep the two-factor family (CSV)")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--m", default="all")
    p.add_argument("--theta-points", type=int, default=33)
    p.add_argument("--refine", action="store_true")
    p.add_argument("--threads", type=int, default=1)

    p = add("fig2", cmd_fig2, "rate curves for m = 0, N/2, N/2-1 and the maximally coherent inset (CSV)")
    p.add_argument("--Nmax", type=int, default=4000)
    p.add_argument("--step", type=int, default=100)
    p.add_argument("--threads", type=int, default=1)

    p = add("hom-check", cmd_hom_check, "photon-added beamsplitter channel output")
    p.add_argument("--c1", default="1")
    p.add_argument("--c2", default="0")

    p = add("kkt-verify", cmd_kkt, "check the constrained entropy maximizer")
    p.add_argument("--N", type=float, nargs="+", default=[1.0, 2.0, 5.0, 10.0])
    p.add_argument("--kmax", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (InvalidArgumentsError, UndefinedSectorError, UndefinedRateError) as exc:
        print(f"fockcoh: error: {exc}", file=sys.stderr)
        return 2
    except ResourceLimitError as exc:
        print(f"fockcoh: resource limit: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001
        print(f"fockcoh: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
