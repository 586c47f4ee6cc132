"""Command line interface.

    pairhedge price --T 2 --s 2 --m 3
    pairhedge horizon --epsilon 0.1 --m 30
    pairhedge hindsight --input returns.csv [--mode prices] [--s 3] [--full]
    pairhedge run --input returns.csv --out results/ [--pairs-report]
    pairhedge simulate --model demon --out data/ --seed 7
    pairhedge verify [--m 3 --s 2 --T 4]

Exit codes: 0 success, 2 input error, 3 scale guard, 4 failed verification.
Errors go to stderr as a single JSON line.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .aggregator import run_full
from .errors import InputError, PairHedgeError
from .game import distinct_path_price, game_value, verify_conservation, verify_game
from .hindsight import ReturnSequence, best_pairs_rule_overall, best_s_rule, best_single_stock
from .pricing import (PriceQuery, horizon_for_tolerance, log_price, pairs_hedge_cost,
                      price_upper_bound, regret_bound)
from .simulate import (GbmPairSpec, HorseRaceSpec, LogNormalSpec, simulate_horse_race,
                       simulate_lognormal, simulate_shannon_demon)

VERIFY_FAILED = 4
DEFAULT_GAMES = ((2, 2, 4), (3, 2, 4), (3, 3, 3))
DEFAULT_CONSERVATION = ((2, 10), (3, 6))


# --- CSV ----------------------------------------------------------------------


def ingest(path, mode: str = "returns") -> ReturnSequence:
    """Read a ``t,asset_1,...,asset_m`` CSV of gross returns or prices."""
    if mode not in ("returns", "prices"):
        raise InputError(f"unknown mode {mode!r}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputError(f"{path}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    if len(header) < 2:
        raise InputError(f"{path}: header needs a session column and at least one asset")
    names = tuple(h.strip() for h in header[1:])
    m = len(names)
    data = np.empty((len(body), m))
    for r, row in enumerate(body, start=2):
        if len(row) != m + 1:
            raise InputError(f"{path}: line {r} has {len(row)} fields, expected {m + 1}")
        for c, cell in enumerate(row[1:]):
            try:
                v = float(cell)
            except ValueError:
                raise InputError(f"{path}: line {r}, column {names[c]!r}: not a number: {cell!r}")
            if not math.isfinite(v):
                raise InputError(f"{path}: line {r}, column {names[c]!r}: non-finite value")
            if v < 0:
                raise InputError(f"{path}: line {r}, column {names[c]!r}: negative value {v}")
            data[r - 2, c] = v
    if mode == "prices":
        if len(data) < 2:
            raise InputError(f"{path}: prices mode needs at least two rows")
        prev = data[:-1]
        bad = np.argwhere(prev == 0)
        if len(bad):
            r, c = bad[0]
            raise InputError(f"{path}: line {r + 2}, column {names[c]!r}: zero price")
        data = data[1:] / prev
    dead = np.flatnonzero(~np.any(data > 0, axis=1))
    if len(dead):
        line = dead[0] + (3 if mode == "prices" else 2)
        raise InputError(f"{path}: line {line}: all returns are zero")
    if len(data) == 0:
        raise InputError(f"{path}: no data rows")
    return ReturnSequence(data, names)


def write_returns(path, seq: ReturnSequence) -> None:
    names = seq.names or tuple(f"asset_{k + 1}" for k in range(seq.m))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t",) + names)
        for t, row in enumerate(seq.returns, start=1):
            w.writerow([t] + [repr(float(v)) for v in row])


def _log_pair(lv: float) -> dict:
    return {"value": math.exp(lv) if lv < 709 else math.inf, "log": lv}


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, default=_jsonable))


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(type(v))


def _load(args) -> ReturnSequence:
    if not args.input:
        raise InputError("--input is required")
    seq = ingest(args.input, args.mode)
    if args.T is not None:
        if args.T > seq.T or args.T < 1:
            raise InputError(f"--T {args.T} outside 1..{seq.T} available rows")
        seq = ReturnSequence(seq.returns[: args.T], seq.names)
    return seq


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


# --- subcommands ------------------------------------------------------------------


def cmd_price(args) -> int:
    s = args.s
    m = args.m if args.m is not None else s
    q = PriceQuery(args.T, s, m)
    lp = log_price(args.T, s)
    cost = pairs_hedge_cost(q)
    out = {"version": __version__, "config": _config(args), "T": args.T, "s": s, "m": m,
           "p": math.exp(lp), "log_p": lp, "cost": cost.value, "log_cost": cost.log_value}
    if s == 2:
        out["regret_bound"] = regret_bound(q)
        out["p_upper_bound"] = price_upper_bound(args.T)
    _emit(out)
    return 0


def cmd_horizon(args) -> int:
    T = horizon_for_tolerance(args.epsilon, args.m)
    out = {"version": __version__, "config": _config(args), "epsilon": args.epsilon, "m": args.m,
           "T": T, "bound_at_T": regret_bound(PriceQuery(T, 2, args.m))}
    if T > 1:
        out["bound_at_T_minus_1"] = regret_bound(PriceQuery(T - 1, 2, args.m))
    _emit(out)
    return 0


def cmd_hindsight(args) -> int:
    seq = _load(args)
    x = seq.returns
    stock, lw1 = best_single_stock(x)
    out = {"version": __version__, "config": _config(args), "T": seq.T, "m": seq.m,
           "d1": {"stock": stock, **_log_pair(lw1)}}
    if seq.m >= 2:
        pair, sol = best_pairs_rule_overall(x)
        out["d2"] = {"pair": list(pair), "b": float(sol.weights[pair[0]]),
                     "bankrupt": sol.log_wealth == -math.inf, **_log_pair(sol.log_wealth)}
    extra = set()
    if args.s is not None and args.s not in (1, 2):
        extra.add(args.s)
    if args.full and seq.m > 2:
        extra.add(seq.m)
    for s in sorted(extra):
        sol = best_s_rule(x, s)
        out[f"d{s}"] = {"weights": sol.weights, "support": list(sol.support),
                        "bankrupt": sol.log_wealth == -math.inf, **_log_pair(sol.log_wealth)}
    _emit(out)
    return 0


def cmd_run(args) -> int:
    seq = _load(args)
    res = run_full(seq.returns, hindsight_every=args.hindsight_every)
    names = seq.names or tuple(f"asset_{k + 1}" for k in range(seq.m))
    cost = pairs_hedge_cost(PriceQuery(res.T, 2, res.m))
    report = {
        "version": __version__, "config": _config(args), "seed": args.seed,
        "T": res.T, "m": res.m, "assets": list(names),
        "wealth": _log_pair(res.final_log_wealth),
        "d2": _log_pair(res.log_d2), "best_pair": list(res.best_pair),
        "best_pair_b": res.best_pair_weight,
        "best_stock": res.best_stock, "best_stock_wealth": _log_pair(res.log_best_stock),
        "hedge_cost": {"value": cost.value, "log": cost.log_value},
        "realized_excess_growth": res.excess_growth,
        "regret_bound": res.bound,
        "regret_bound_holds": bool(res.excess_growth <= res.bound + 1e-9),
        "market_diagnostic": res.market_diagnostic,
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "trajectory.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "wealth", "log_wealth"] + [f"theta_{n}" for n in names]
                       + ["running_regret"])
            for t, wealth, lw, theta, reg in res.trajectory():
                w.writerow([t, repr(wealth), repr(lw)] + [repr(float(v)) for v in theta]
                           + [repr(reg)])
        if args.pairs_report:
            with open(out / "pairs.csv", "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["i", "j", "log_wealth", "b_last"])
                left, right = np.triu_indices(res.m, 1)
                for i, j, lw, b in zip(left, right, res.pair_log_wealth, res.pair_weight):
                    w.writerow([int(i), int(j), repr(float(lw)), repr(float(b))])
        with open(out / "report.json", "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, default=_jsonable)
    _emit(report)
    return 0


def cmd_simulate(args) -> int:
    if args.model == "demon":
        spec = GbmPairSpec(sigma=args.sigma, dt=args.dt, horizon=args.horizon, seed=args.seed)
        seq, diag = simulate_shannon_demon(spec)
        info = dict(vars(diag))
    elif args.model == "lognormal":
        m = args.m or 2
        nu = args.nu if args.nu is not None else [0.0] * m
        sig = args.sigma_vec if args.sigma_vec is not None else [args.sigma] * m
        corr = None
        if args.rho is not None:
            corr = np.full((m, m), args.rho)
            np.fill_diagonal(corr, 1.0)
        seq = simulate_lognormal(LogNormalSpec(tuple(nu), tuple(sig), args.T or 250, corr, args.seed))
        info = {}
    else:
        m = args.m or 3
        seq = simulate_horse_race(HorseRaceSpec(m=m, T=args.T or 20, odds=args.odds, seed=args.seed))
        info = {}
    report = {"version": __version__, "config": _config(args), "seed": args.seed,
              "model": args.model, "T": seq.T, "m": seq.m, **info}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_returns(out / "returns.csv", seq)
        with open(out / "simulation.json", "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, default=_jsonable)
    _emit(report)
    return 0


def cmd_verify(args) -> int:
    if args.m is not None or args.s is not None or args.T is not None:
        if None in (args.m, args.s, args.T):
            raise InputError("give all of --m, --s, --T or none")
        games = [(args.m, args.s, args.T)]
        conservation = [(args.m, args.T)]
    else:
        games, conservation = DEFAULT_GAMES, DEFAULT_CONSERVATION
    results = []
    for m, T in conservation:
        results += verify_conservation(m, T, seed=args.seed)
    info = []
    for m, s, T in games:
        results += verify_game(m, s, T, n_random=args.n_random, seed=args.seed)
        info.append({"m": m, "s": s, "T": T, "claimed_value": game_value(m, s, T),
                     "distinct_path_value": 1.0 / distinct_path_price(m, s, T)})
    passed = all(r["passed"] for r in results)
    _emit({"version": __version__, "config": _config(args), "seed": args.seed,
           "passed": passed, "results": results, "game_values": info})
    return 0 if passed else VERIFY_FAILED


# --- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pairhedge", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output directory")
        return p

    p = common(sub.add_parser("price", help="super-hedging price p(T,s) and hedge cost"))
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--m", type=int, default=None)
    p.set_defaults(func=cmd_price)

    p = common(sub.add_parser("horizon", help="smallest T with regret bound below epsilon"))
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.set_defaults(func=cmd_horizon)

    for name, func, helptext in (("hindsight", cmd_hindsight, "best rules in hindsight"),
                                 ("run", cmd_run, "run the aggregated pairs strategy")):
        p = common(sub.add_parser(name, help=helptext))
        p.add_argument("--input", required=True)
        p.add_argument("--mode", choices=("returns", "prices"), default="returns")
        p.add_argument("--T", type=int, default=None)
        p.set_defaults(func=func)
        if name == "hindsight":
            p.add_argument("--s", type=int, default=None, help="also report D^(s)")
            p.add_argument("--full", action="store_true", help="also report D^(m)")
        else:
            p.add_argument("--s", type=int, default=2, choices=(2,))
            p.add_argument("--pairs-report", action="store_true")
            p.add_argument("--hindsight-every", type=int, default=None)

    p = common(sub.add_parser("simulate", help="write a simulated return sequence"))
    p.add_argument("--model", choices=("demon", "lognormal", "horse"), default="demon")
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--sigma", type=float, default=math.log(2.0))
    p.add_argument("--sigma-vec", type=float, nargs="+", default=None)
    p.add_argument("--nu", type=float, nargs="+", default=None)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--horizon", type=float, default=10.0)
    p.add_argument("--odds", type=float, default=1.0)
    p.set_defaults(func=cmd_simulate)

    p = common(sub.add_parser("verify", help="exhaustive game and conservation checks"))
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--s", type=int, default=None)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--n-random", type=int, default=100)
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PairHedgeError as exc:
        print(json.dumps({"error": exc.kind, "message": str(exc)}), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(json.dumps({"error": "input", "message": str(exc)}), file=sys.stderr)
        return InputError.exit_code


if __name__ == "__main__":
    sys.exit(main())
