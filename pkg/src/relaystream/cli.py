"""Command line front end.

Five subcommands cover the workflow: ``bounds`` prints the closed-form
planner quantities for a network config, ``plan`` emits a full allocation
document for one scheme, ``verify`` re-checks a document against the
adversary, ``simulate`` streams Monte Carlo packets through an assembled
document, and ``ensemble`` compares the planners over random networks.

Configs and allocation documents are JSON. Exact rates appear as "p/q"
strings next to a float so logs stay greppable and lossless at once.
Exit codes: 0 success or pass, 1 verification failure, 2 bad usage or
unparseable input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from typing import Optional

from .channels import GeParams
from .planner import (
    Allocation,
    NetworkConfig,
    cswdf_closed_form,
    cswdf_plan,
    mwdf_plan,
    mwdf_rate,
    oswdf_optimize,
    t_min,
    upper_bound,
)
from .relay import assemble
from .sim import ChannelSpec, run_ensemble, run_monte_carlo, verify_adversarial
from .spectrum import DelayGrouping


class CliError(Exception):
    """Carries the process exit code alongside the message."""

    def __init__(self, message: str, code: int = 2):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# JSON documents
# ---------------------------------------------------------------------------


def fraction_doc(fr: Fraction) -> dict:
    return {"exact": f"{fr.numerator}/{fr.denominator}", "decimal": float(fr)}


def load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise CliError(f"{path}: no such file")
    except json.JSONDecodeError as e:
        raise CliError(f"{path}: parse error at line {e.lineno}, column {e.colno}: {e.msg}")


def config_from_doc(doc: dict, path: str) -> NetworkConfig:
    if not isinstance(doc, dict):
        raise CliError(f"{path}: top level must be an object")
    missing = [key for key in ("T", "N1", "N2") if key not in doc]
    if missing:
        raise CliError(f"{path}: missing required keys: {', '.join(missing)}")
    try:
        return NetworkConfig(
            T=int(doc["T"]),
            N1=tuple(int(x) for x in doc["N1"]),
            N2=tuple(int(x) for x in doc["N2"]),
            dT1=tuple(int(x) for x in doc.get("dT1", ())),
            dT2=tuple(int(x) for x in doc.get("dT2", ())),
        )
    except (TypeError, ValueError) as e:
        raise CliError(f"{path}: bad config: {e}")


def config_to_doc(config: NetworkConfig) -> dict:
    return {
        "T": config.T,
        "N1": list(config.N1),
        "N2": list(config.N2),
        "dT1": list(config.dT1),
        "dT2": list(config.dT2),
    }


def allocation_to_doc(alloc: Allocation) -> dict:
    def hop(ns, ks, groupings, budgets, net_budgets):
        entries = []
        for i, (n, k, g) in enumerate(zip(ns, ks, groupings)):
            e = {
                "n": int(n),
                "k": int(k),
                "grouping": [[int(d), int(c)] for d, c in g.entries if c],
            }
            if budgets[i] != net_budgets[i]:
                e["budget"] = int(budgets[i])
            entries.append(e)
        return entries

    doc = {
        "scheme": alloc.scheme,
        "config": config_to_doc(alloc.config),
        "rate": fraction_doc(alloc.rate),
        "n": int(alloc.n),
        "hop1": hop(alloc.n1, alloc.k1, alloc.groupings1,
                    alloc.build_budgets1(), alloc.config.N1),
        "hop2": hop(alloc.n2, alloc.k2, alloc.groupings2,
                    alloc.build_budgets2(), alloc.config.N2),
        "bottleneck": alloc.bottleneck,
        "relabel_delay": alloc.relabel_delay,
        "capped": alloc.capped,
    }
    code = assemble(alloc)
    pairing: dict[tuple[int, int], int] = {}
    for r in code.routes:
        pairing[(r.relay_delay, r.dest_delay)] = pairing.get((r.relay_delay, r.dest_delay), 0) + 1
    doc["pairing"] = [
        {"relay_delay": d1, "dest_delay": d2, "count": c}
        for (d1, d2), c in sorted(pairing.items(), reverse=True)
    ]
    return doc


def allocation_from_doc(doc: dict, path: str) -> Allocation:
    for key in ("scheme", "config", "hop1", "hop2"):
        if key not in doc:
            raise CliError(f"{path}: allocation document missing {key!r}")
    config = config_from_doc(doc["config"], path)

    def hop(entries, net_budgets):
        if len(entries) != len(net_budgets):
            raise CliError(
                f"{path}: document lists {len(entries)} links where the config has {len(net_budgets)}"
            )
        ns, ks, gs, bs = [], [], [], []
        for e, net in zip(entries, net_budgets):
            ns.append(int(e["n"]))
            ks.append(int(e["k"]))
            gs.append(DelayGrouping.from_pairs((int(d), int(c)) for d, c in e["grouping"]))
            bs.append(int(e.get("budget", net)))
        budgets = tuple(bs) if tuple(bs) != tuple(net_budgets) else None
        return tuple(ns), tuple(ks), tuple(gs), budgets

    try:
        n1, k1, g1, b1 = hop(doc["hop1"], config.N1)
        n2, k2, g2, b2 = hop(doc["hop2"], config.N2)
    except (KeyError, TypeError, ValueError) as e:
        raise CliError(f"{path}: bad hop entry: {e}")
    relabel = doc.get("relabel_delay")
    return Allocation(
        scheme=str(doc.get("scheme", "oswdf")),
        config=config,
        n1=n1,
        n2=n2,
        k1=k1,
        k2=k2,
        groupings1=g1,
        groupings2=g2,
        bottleneck=str(doc.get("bottleneck", "hop1")),
        relabel_delay=None if relabel is None else int(relabel),
        capped=bool(doc.get("capped", False)),
        budgets1=b1,
        budgets2=b2,
    )


def emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_bounds(args) -> int:
    config = config_from_doc(load_json(args.config), args.config)
    rate_mw, t1, t2 = mwdf_rate(config)
    rate_csw, _ = cswdf_plan(config)
    doc = {
        "config": config_to_doc(config),
        "T_min": t_min(config),
        "upper": fraction_doc(upper_bound(config)),
        "mwdf": {**fraction_doc(rate_mw), "split": [t1, t2]},
        "cswdf_closed_form": fraction_doc(cswdf_closed_form(config)),
        "cswdf": fraction_doc(rate_csw),
    }
    emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def cmd_plan(args) -> int:
    config = config_from_doc(load_json(args.config), args.config)
    try:
        if args.scheme == "mwdf":
            alloc = mwdf_plan(config)
        elif args.scheme == "cswdf":
            alloc = cswdf_plan(config)[1]
        else:
            alloc = oswdf_optimize(config)
    except ValueError as e:
        raise CliError(f"cannot plan {args.scheme} for this config: {e}")
    emit(json.dumps(allocation_to_doc(alloc), indent=2) + "\n", args.out)
    return 0


def cmd_verify(args) -> int:
    doc = load_json(args.allocation)
    alloc = allocation_from_doc(doc, args.allocation)
    for hop, ks, groupings in (("hop1", alloc.k1, alloc.groupings1), ("hop2", alloc.k2, alloc.groupings2)):
        for link, (k, g) in enumerate(zip(ks, groupings)):
            if g.total() != k:
                print(
                    f"FAIL: {hop} link {link} declares k={k} but its grouping "
                    f"carries {g.total()} symbols",
                    file=sys.stderr,
                )
                return 1
    try:
        code = assemble(alloc)
    except ValueError as e:
        print(f"FAIL: allocation does not assemble: {e}", file=sys.stderr)
        return 1
    check_config = alloc.config
    if args.deadline is not None:
        check_config = NetworkConfig(
            T=args.deadline,
            N1=alloc.config.N1,
            N2=alloc.config.N2,
            dT1=alloc.config.dT1,
            dT2=alloc.config.dT2,
        )
    report = verify_adversarial(code, config=check_config)
    mode = "exhaustive" if report.exhaustive else "sampled (not exhaustive)"
    if report.ok:
        print(
            f"PASS: rate {alloc.rate} within deadline T={check_config.T}; "
            f"{report.checked_patterns} patterns checked, {mode}"
        )
        return 0
    print(f"FAIL: {report.detail} ({mode})", file=sys.stderr)
    w = report.failure
    if w is not None:
        print(
            f"  witness: source packet {w.src_time}, symbol {w.sym}; "
            f"required delay {w.required_delay}, achieved "
            f"{w.actual_delay if w.actual_delay is not None else 'never'}",
            file=sys.stderr,
        )
        print(f"  hop-1 erasures: {[list(e) for e in w.erasures1]}", file=sys.stderr)
        print(f"  hop-2 erasures: {[list(e) for e in w.erasures2]}", file=sys.stderr)
    return 1


SIM_COLUMNS = [
    "scheme", "rate", "channel", "eps", "alpha", "beta",
    "packets", "lost", "loss_rate", "seed",
]


def _parse_eps_grid(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise CliError(f"bad --eps value: {text!r}")


def cmd_simulate(args) -> int:
    doc = load_json(args.allocation)
    alloc = allocation_from_doc(doc, args.allocation)
    try:
        code = assemble(alloc)
    except ValueError as e:
        raise CliError(f"allocation does not assemble: {e}", code=1)
    if args.packets < 0:
        raise CliError("--packets must be nonnegative")

    if args.channel == "iid":
        channels = [ChannelSpec("iid", eps=e) for e in _parse_eps_grid(args.eps)]
    else:
        try:
            params = GeParams(alpha=args.alpha, beta=args.beta, eps=float(args.eps))
        except ValueError as e:
            raise CliError(f"bad channel params: {e}")
        channels = [ChannelSpec("ge", ge=params)]

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(SIM_COLUMNS)
    if args.packets > 0:
        for spec in channels:
            res = run_monte_carlo(code, spec, args.packets, args.seed)
            ch = res.channel
            writer.writerow([
                res.scheme,
                f"{alloc.rate.numerator}/{alloc.rate.denominator}",
                ch["channel"], ch["eps"], ch["alpha"], ch["beta"],
                res.packets, res.lost, f"{res.loss_rate:.8f}", res.seed,
            ])
    emit(buf.getvalue(), args.out)
    return 0


ENSEMBLE_COLUMNS = [
    "T", "N1", "N2", "upper", "mwdf", "cswdf", "oswdf",
    "upper_decimal", "mwdf_decimal", "cswdf_decimal", "oswdf_decimal", "seed",
]


def cmd_ensemble(args) -> int:
    if args.trials < 1:
        raise CliError("--trials must be positive")
    rows = run_ensemble(args.seed, args.trials)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(ENSEMBLE_COLUMNS)
    violations = 0
    hits = 0
    for r in rows:
        violations += 0 if r.dominant else 1
        hits += 1 if r.hits_upper else 0
        writer.writerow([
            r.config.T,
            " ".join(map(str, r.config.N1)),
            " ".join(map(str, r.config.N2)),
            f"{r.upper.numerator}/{r.upper.denominator}",
            f"{r.mwdf.numerator}/{r.mwdf.denominator}",
            f"{r.cswdf.numerator}/{r.cswdf.denominator}",
            f"{r.oswdf.numerator}/{r.oswdf.denominator}",
            float(r.upper), float(r.mwdf), float(r.cswdf), float(r.oswdf),
            args.seed,
        ])
    emit(buf.getvalue(), args.out)
    print(
        f"ensemble: {args.trials} trials, seed {args.seed}; "
        f"dominance violations: {violations}; "
        f"upper bound hit in {hits}/{args.trials} trials ({hits / args.trials:.1%})",
        file=sys.stderr,
    )
    return 0


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="relaystream",
        description="plan, verify and simulate streaming codes for a relayed link",
    )
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="closed-form rates for a network config")
    b.add_argument("--config", required=True, help="network config JSON")
    b.add_argument("--out", help="write the document here instead of stdout")
    b.set_defaults(func=cmd_bounds)

    pl = sub.add_parser("plan", help="emit a full allocation document")
    pl.add_argument("--config", required=True, help="network config JSON")
    pl.add_argument("--scheme", choices=["mwdf", "cswdf", "oswdf"], default="oswdf")
    pl.add_argument("--out", help="write the document here instead of stdout")
    pl.set_defaults(func=cmd_plan)

    v = sub.add_parser("verify", help="re-check an allocation document")
    v.add_argument("allocation", help="allocation document JSON")
    v.add_argument(
        "--deadline", type=int, default=None,
        help="audit against this deadline instead of the document's T",
    )
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="Monte Carlo loss of an assembled allocation")
    s.add_argument("allocation", help="allocation document JSON")
    s.add_argument("--channel", choices=["iid", "ge"], default="iid")
    s.add_argument("--eps", default="0.01", help="loss probability; comma list sweeps a grid (iid)")
    s.add_argument("--alpha", type=float, default=0.0, help="good-to-bad transition (ge)")
    s.add_argument("--beta", type=float, default=0.0, help="bad-to-good transition (ge)")
    s.add_argument("--packets", type=int, default=10000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="write the CSV here instead of stdout")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("ensemble", help="compare planners over random networks")
    e.add_argument("--trials", type=int, default=1000)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", help="write the CSV here instead of stdout")
    e.set_defaults(func=cmd_ensemble)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
