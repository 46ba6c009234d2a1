"""Command-line front end: ``syrlab <subcommand> ...``.

Exit codes: 0 success; 1 a check failed; 2 a trajectory hit a cap;
64 usage error; 65 checkpoint does not match the configuration; 74 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .errors import ConfigMismatch, SyracuseError
from .maps import Caps, new_map, parse_int

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CAP = 2
EXIT_USAGE = 64
EXIT_CONFIG = 65
EXIT_IO = 74


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _bigint(text: str) -> int:
    try:
        return parse_int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    from .sweep import atomic_write

    atomic_write(Path(out), text.encode())


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _caps(args) -> Caps:
    return Caps.from_env(args.max_steps, args.max_value)


def _add_caps(p) -> None:
    p.add_argument("--max-steps", type=_bigint, default=None,
                   help="step cap (default: $SYRLAB_MAX_STEPS or 10^6)")
    p.add_argument("--max-value", type=_bigint, default=None,
                   help="value cap, e.g. 2**128 (default: $SYRLAB_MAX_VALUE or 2^128)")


def _add_map(p) -> None:
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--b", type=int, required=True)


# ------------------------------------------------------------ commands

_CAP_NAMES = {"steps": "StepCap", "value": "ValueCap"}


def cmd_trajectory(args) -> int:
    from .maps import trajectory

    m = new_map(args.a, args.b)
    t = trajectory(m, args.n, _caps(args))
    if args.json:
        d = {"map": {"a": m.a, "b": m.b}, "start": t.start, "steps": list(t.steps)}
        if t.entered_cycle:
            d["terminal"] = {"kind": "EnteredCycle", "at": t.terminal.at, "cycle": list(t.cycle())}
        else:
            d["terminal"] = {"kind": "CapExceeded", "cap": _CAP_NAMES[t.terminal.kind]}
        sys.stdout.write(_dumps(d))
    else:
        print(",".join(map(str, t.steps)))
        if t.entered_cycle:
            cyc = t.cycle()
            print(f"EnteredCycle at step {t.terminal.at}: cycle min {min(cyc)}, length {len(cyc)}")
        else:
            print(f"CapExceeded ({_CAP_NAMES[t.terminal.kind]})")
    return EXIT_OK if t.entered_cycle else EXIT_CAP


def cmd_census(args) -> int:
    from .sweep import SweepConfig, render, run_census

    caps = _caps(args)
    cfg = SweepConfig(args.a, args.b, args.N, caps.max_steps, caps.max_value, args.shard_size,
                      args.workers, args.checkpoint, args.format)
    new_map(args.a, args.b)
    if caps.max_value < args.N:
        raise UsageError("--max-value must be at least N")
    report = run_census(cfg, backend=args.backend)
    _emit(render(report, args.format), args.out)
    return EXIT_OK


def cmd_convergents(args) -> int:
    from .diophantine import convergents, xi_enclosure

    cs = convergents(args.a, args.count, args.strategy)
    d = {
        "a": args.a,
        "convergents": [
            {"n": c.index, "a_n": c.partial_quotient, "p": c.p, "q": c.q} for c in cs
        ],
    }
    if args.budget is not None:
        enc = xi_enclosure(args.a, args.budget)
        d["enclosure"] = {"lower": str(enc.lower), "upper": str(enc.upper), "n": enc.n,
                          "width": str(enc.width)}
    sys.stdout.write(_dumps(d))
    return EXIT_OK


def cmd_bound(args) -> int:
    from .bounds import (
        BoundCertificate,
        check_certificate,
        min_length_bound,
        mu_length_bound,
        oscillation_bound,
    )

    if args.check:
        try:
            cert = BoundCertificate.from_dict(json.loads(Path(args.check).read_text()))
        except (KeyError, TypeError, ValueError) as e:
            raise UsageError(f"malformed certificate: {e}")
        problems = check_certificate(cert)
        sys.stdout.write(_dumps({"certificate": args.check, "valid": not problems, "problems": problems}))
        return EXIT_OK if not problems else EXIT_FAIL
    if args.a is None or args.b is None or args.N0 is None:
        raise UsageError("--a, --b and --N0 are required unless --check is given")
    m = new_map(args.a, args.b)
    if args.target == "oscillations":
        cert = oscillation_bound(m, args.N0, args.n_max, args.mu, args.n0)
    elif args.mu is not None:
        cert = mu_length_bound(m, args.N0, args.mu, args.n_max, args.n0)
    else:
        cert = min_length_bound(m, args.N0, args.n_max)
    _emit(cert.to_json(), args.out)
    return EXIT_OK


def cmd_circuit_check(args) -> int:
    from .oscillations import one_oscillation_search

    if args.nu is not None:
        a = (1 << args.nu) + 1
        m = new_map(a, a - 2)
    elif args.a is not None and args.b is not None:
        m = new_map(args.a, args.b)
    else:
        raise UsageError("give --nu, or --a and --b")
    rep = one_oscillation_search(m, args.mu)
    sys.stdout.write(_dumps(rep.to_dict()))
    return EXIT_OK


def cmd_family(args) -> int:
    from .families import FamilyKind, family_map, family_trivial_schema, verify_family

    try:
        kind = FamilyKind.parse(args.kind)
    except ValueError as e:
        raise UsageError(str(e))
    if args.verify:
        summary = verify_family(kind, args.nu, args.N)
        sys.stdout.write(_dumps(summary))
        return EXIT_OK if summary["passed"] else EXIT_FAIL
    m = family_map(kind, args.nu)
    sys.stdout.write(_dumps({
        "family": kind.value, "nu": args.nu, "a": m.a, "b": m.b,
        "trivial_cycles": [[o, l] for o, l in family_trivial_schema(kind, args.nu)],
    }))
    return EXIT_OK


def cmd_verify_paper(args) -> int:
    from . import acceptance

    only = [t for tok in (args.only or []) for t in tok.split(",") if t]
    try:
        acceptance.select(only)
    except ValueError as e:
        raise UsageError(str(e))
    tables = acceptance.load_tables(args.tables) if args.tables else None
    ctx = acceptance.Context(tables, workers=args.workers)
    results = acceptance.run(only, ctx, echo=lambda line: print(line, flush=True))
    failed = [r for r in results if not r.passed]
    payload = {"passed": not failed, "failed": [f"{r.id}: {r.name}" for r in failed],
               "criteria": [r.to_dict() for r in results]}
    if args.json:
        _emit(_dumps(payload), args.json)
    if failed:
        print("FAILED: " + "; ".join(payload["failed"]), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _parse_map_list(text: str) -> list[tuple[int, int]]:
    out = []
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        try:
            a, b = (int(x) for x in item.split(","))
        except ValueError:
            raise UsageError(f"bad map {item!r}; expected 'a,b'")
        out.append((a, b))
    return out


def _parse_range(text: str) -> range:
    if ":" in text:
        lo, hi = text.split(":", 1)
        return range(int(lo), int(hi) + 1)
    return range(int(text), int(text) + 1)


def cmd_sweep(args) -> int:
    from .families import FamilyKind, family_map
    from .sweep import sweep_maps

    if bool(args.maps) == bool(args.family):
        raise UsageError("give exactly one of --maps or --family")
    if args.maps:
        maps = [new_map(a, b) for a, b in _parse_map_list(args.maps)]
    else:
        try:
            kind = FamilyKind.parse(args.family)
            nus = _parse_range(args.nu)
        except ValueError as e:
            raise UsageError(str(e))
        maps = [family_map(kind, nu) for nu in nus]
    caps = _caps(args)
    summary = sweep_maps(maps, args.N, caps, args.out_dir, shard_size=args.shard_size,
                         workers=args.workers, fmt=args.format, resume=not args.fresh)
    sys.stdout.write(_dumps(summary))
    return EXIT_OK


# --------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    from .census import DEFAULT_SHARD_SIZE

    p = _Parser(prog="syrlab", description="Generalized Syracuse map laboratory.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("trajectory", help="print the orbit of n")
    _add_map(t)
    t.add_argument("--n", type=_bigint, required=True)
    _add_caps(t)
    t.add_argument("--json", action="store_true", help="emit JSON instead of text")
    t.set_defaults(func=cmd_trajectory)

    c = sub.add_parser("census", help="classify every n in [1, N]")
    _add_map(c)
    c.add_argument("--N", type=_bigint, required=True)
    _add_caps(c)
    c.add_argument("--shard-size", type=int, default=DEFAULT_SHARD_SIZE)
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--checkpoint", metavar="DIR", help="checkpoint directory; resumes if it exists")
    c.add_argument("--format", choices=("json", "csv"), default="json")
    c.add_argument("--out", help="report path (default: stdout)")
    c.add_argument("--backend", choices=("cython", "python"), default=None)
    c.set_defaults(func=cmd_census)

    v = sub.add_parser("convergents", help="continued fraction of log2(a)")
    v.add_argument("--a", type=int, required=True)
    v.add_argument("--count", type=int, default=25)
    v.add_argument("--strategy", choices=("auto", "exact", "staged"), default="auto")
    v.add_argument("--budget", type=_bigint, help="also print the tightest enclosure with q <= BUDGET")
    v.set_defaults(func=cmd_convergents)

    b = sub.add_parser("bound", help="certified cycle-length lower bound")
    b.add_argument("--a", type=int)
    b.add_argument("--b", type=int)
    b.add_argument("--N0", type=_bigint, help="assumed lower bound on the cycle minimum, e.g. 5*2**60")
    b.add_argument("--n-max", type=int, default=25)
    b.add_argument("--mu", help="irrationality measure (integer or p/q); switches to the mu form")
    b.add_argument("--n0", type=int, default=1, help="first convergent index where mu applies")
    b.add_argument("--target", choices=("length", "oscillations"), default="length")
    b.add_argument("--out", help="certificate path (default: stdout)")
    b.add_argument("--check", metavar="CERT.json", help="re-verify a certificate instead")
    b.set_defaults(func=cmd_bound)

    o = sub.add_parser("circuit-check", help="one-oscillation search for b = a - 2")
    o.add_argument("--nu", type=int, help="use a = 2^nu + 1, b = 2^nu - 1")
    o.add_argument("--a", type=int)
    o.add_argument("--b", type=int)
    o.add_argument("--mu", default="14")
    o.set_defaults(func=cmd_circuit_check)

    f = sub.add_parser("family", help="family parameters and checks")
    f.add_argument("--kind", required=True, help="PlusPlus, MinusPlus, PlusMinus or MinusOne")
    f.add_argument("--nu", type=int, required=True)
    f.add_argument("--verify", action="store_true", help="run the family check suite")
    f.add_argument("--N", type=_bigint, default=2000, help="census size for --verify")
    f.set_defaults(func=cmd_family)

    r = sub.add_parser("verify-paper", help="run the acceptance criteria")
    r.add_argument("--only", action="append", help="group name or criterion number (repeatable, comma list)")
    r.add_argument("--json", metavar="PATH", help="write machine-readable results")
    r.add_argument("--tables", metavar="PATH", help="JSON cycle tables replacing the built-in ones")
    r.add_argument("--workers", type=int, default=1)
    r.set_defaults(func=cmd_verify_paper)

    s = sub.add_parser("sweep", help="census several maps with per-map checkpoints")
    s.add_argument("--maps", help="semicolon-separated list, e.g. '3,5;3,-1'")
    s.add_argument("--family", help="family kind; combine with --nu")
    s.add_argument("--nu", default="1:4", help="nu or lo:hi range (default 1:4)")
    s.add_argument("--N", type=_bigint, required=True)
    _add_caps(s)
    s.add_argument("--shard-size", type=int, default=DEFAULT_SHARD_SIZE)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--format", choices=("json", "csv"), default="json")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--fresh", action="store_true", help="recompute maps whose reports exist")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigMismatch as e:
        print(f"syrlab: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (UsageError, SyracuseError, ValueError) as e:
        print(f"syrlab: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"syrlab: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
