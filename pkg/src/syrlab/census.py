"""Cycle discovery, basin census and cycle verification.

Every n in [1, N] gets exactly one resolution.  n is walked until its orbit
drops below n (it then inherits the resolution of that smaller value), repeats
a value (a cycle is found), or trips a cap.  Because a classification only
ever depends on smaller values, [1, N] can be cut into shards that run in
any order or in parallel; shards are merged in increasing order, which
resolves cross-shard dependencies and gives output independent of sharding.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import kernel
from ._pykernel import CONVERGED, DEPENDS, UNRES_DEPENDS, UNRES_STEPS, UNRES_VALUE
from .errors import NotACycle
from .maps import Caps, MapParams, step

UNRESOLVED_SAMPLE_SIZE = 100
DEFAULT_SHARD_SIZE = 1 << 18

REASONS = {
    UNRES_STEPS: "StepCap",
    UNRES_VALUE: "ValueCap",
    UNRES_DEPENDS: "DependsOnUnresolved",
}


@dataclass(frozen=True)
class Cycle:
    elements: tuple[int, ...]

    @property
    def omega(self) -> int:
        return self.elements[0]

    @property
    def length(self) -> int:
        return len(self.elements)

    @property
    def K(self) -> int:
        return sum(x & 1 for x in self.elements)

    @property
    def L(self) -> int:
        return self.length - self.K

    @property
    def min_odd(self) -> Optional[int]:
        odd = [x for x in self.elements if x & 1]
        return min(odd) if odd else None

    @property
    def max(self) -> int:
        return max(self.elements)

    def to_dict(self) -> dict:
        return {
            "omega": self.omega,
            "length": self.length,
            "K": self.K,
            "L": self.L,
            "min_odd": self.min_odd,
            "max": self.max,
            "elements": list(self.elements),
        }


def verify_cycle(m: MapParams, claimed: Sequence[int]) -> bool:
    """True iff ``claimed`` lists a genuine T-cycle in orbit order."""
    if not claimed or any(x < 1 for x in claimed):
        return False
    if len(set(claimed)) != len(claimed):
        return False
    k = len(claimed)
    return all(step(m, claimed[i]) == claimed[(i + 1) % k] for i in range(k))


def canonicalize(raw: Sequence[int], m: Optional[MapParams] = None) -> Cycle:
    """Rotate a cycle so it starts at its minimum.

    With ``m`` given, the step relation is checked and NotACycle raised on
    failure; without it only distinctness is checked.
    """
    raw = [int(x) for x in raw]
    if not raw or len(set(raw)) != len(raw):
        raise NotACycle(f"elements must be distinct and nonempty: {raw}")
    if m is not None and not verify_cycle(m, raw):
        raise NotACycle(f"not a cycle of {m}: {raw}")
    r = raw.index(min(raw))
    return Cycle(tuple(raw[r:] + raw[:r]))


@dataclass(frozen=True)
class Converged:
    omega: int
    steps_to_cycle: int


@dataclass(frozen=True)
class Unresolved:
    reason: str  # StepCap | ValueCap | DependsOnUnresolved


Resolution = Converged | Unresolved


def detect_cycle(
    m: MapParams,
    n: int,
    caps: Caps = Caps(),
    known: Optional[dict[int, Resolution]] = None,
) -> tuple[Resolution, Optional[Cycle]]:
    """Follow the orbit of n until it repeats, hits a known value below n, or a cap.

    Returns the resolution and, when the orbit closed on its own, the cycle.
    Without ``known`` the orbit is followed until it repeats; caps count
    total steps from n.
    """
    if n < 1:
        raise ValueError("n must be positive")
    a, b = m.a, m.b
    seen = {n: 0}
    path = [n]
    v = n
    while True:
        if len(path) > caps.max_steps:
            return Unresolved("StepCap"), None
        v = (a * v + b) >> 1 if v & 1 else v >> 1
        j = len(path)
        if v > caps.max_value:
            return Unresolved("ValueCap"), None
        if known is not None and v < n and v in known:
            res = known[v]
            if not isinstance(res, Converged):
                return Unresolved("DependsOnUnresolved"), None
            if res.steps_to_cycle > 0:
                # v is off the cycle, so no earlier point of this path is on it
                return Converged(res.omega, j + res.steps_to_cycle), None
            members = {v}
            w = step(m, v)
            while w != v:
                members.add(w)
                w = step(m, w)
            entry = next(i for i, x in enumerate(path) if x in members) if members & seen.keys() else j
            return Converged(res.omega, entry), None
        first = seen.get(v)
        if first is not None:
            cyc = canonicalize(path[first:])
            return Converged(cyc.omega, first), cyc
        seen[v] = j
        path.append(v)


# ---------------------------------------------------------------- sharding

@dataclass
class ShardResult:
    index: int
    lo: int
    hi: int
    status: np.ndarray
    ref: np.ndarray
    steps: np.ndarray
    cycles: list  # raw cycles, each starting at its minimum


def shard_bounds(N: int, shard_size: int) -> list[tuple[int, int]]:
    if shard_size < 1:
        raise ValueError("shard_size must be >= 1")
    return [(lo, min(lo + shard_size - 1, N)) for lo in range(1, N + 1, shard_size)]


def run_shard(a: int, b: int, index: int, lo: int, hi: int, max_steps: int, max_value: int,
              backend: Optional[str] = None) -> ShardResult:
    fn = kernel.census_shard
    if backend == "python":
        fn = kernel.py_census_shard
    elif backend == "cython":
        if kernel.c_census_shard is None:
            raise RuntimeError("compiled kernel not available")
        fn = kernel.c_census_shard
    status, ref, steps, cycles = fn(a, b, lo, hi, max_steps, max_value)
    return ShardResult(index, lo, hi, status, ref, steps, cycles)


def compute_shards(
    m: MapParams,
    N: int,
    caps: Caps,
    shard_size: int,
    workers: int = 1,
    skip: Iterable[int] = (),
    on_done: Optional[Callable[[ShardResult], None]] = None,
    stop_after: Optional[int] = None,
    backend: Optional[str] = None,
) -> dict[int, ShardResult]:
    """Run every shard not in ``skip``; ``on_done`` sees each as it completes.

    ``stop_after`` aborts after that many shards complete (used to simulate
    an interrupted run).
    """
    bounds = shard_bounds(N, shard_size)
    skip = set(skip)
    todo = [i for i in range(len(bounds)) if i not in skip]
    out: dict[int, ShardResult] = {}
    args = [(m.a, m.b, i, bounds[i][0], bounds[i][1], caps.max_steps, caps.max_value, backend)
            for i in todo]

    def accept(res: ShardResult) -> bool:
        out[res.index] = res
        if on_done is not None:
            on_done(res)
        return stop_after is not None and len(out) >= stop_after

    if workers <= 1:
        for arg in args:
            if accept(run_shard(*arg)):
                break
        return out
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_shard, *arg) for arg in args]
        for fut in futures:
            if accept(fut.result()):
                for f in futures:
                    f.cancel()
                break
    return out


@dataclass
class ResolutionTable:
    """Per-n classification of [1, N]; index 0 is unused.

    For converged n, ``steps`` holds the first hitting time of the cycle's
    minimum.  :meth:`resolution` turns it into the entry time into the cycle.
    """

    status: np.ndarray
    cycle_id: np.ndarray
    steps: np.ndarray
    cycles: list[Cycle]
    map: Optional[MapParams] = None
    _members: dict = field(default_factory=dict, repr=False)

    def resolution(self, n: int) -> Resolution:
        s = int(self.status[n])
        if s != CONVERGED:
            return Unresolved(REASONS[s])
        cid = int(self.cycle_id[n])
        cyc = self.cycles[cid]
        if self.map is None:
            raise ValueError("table has no map attached; cannot walk to the cycle")
        members = self._members.get(cid)
        if members is None:
            members = self._members[cid] = frozenset(cyc.elements)
        v, k = n, 0
        while v not in members:
            v = step(self.map, v)
            k += 1
        return Converged(cyc.omega, k)


def merge_shards(N: int, shards: Sequence[ShardResult]) -> ResolutionTable:
    """Merge shard tables in increasing order of their ranges."""
    status = np.full(N + 1, -1, dtype=np.int8)
    cycle_id = np.full(N + 1, -1, dtype=np.int64)
    steps = np.zeros(N + 1, dtype=np.int64)
    cycles: list[Cycle] = []
    id_of: dict[int, int] = {}
    expect = 1
    for sh in sorted(shards, key=lambda s: s.lo):
        if sh.lo != expect:
            raise ValueError(f"missing shard covering {expect}..{sh.lo - 1}")
        expect = sh.hi + 1
        remap = np.empty(len(sh.cycles), dtype=np.int64)
        for k, raw in enumerate(sh.cycles):
            omega = raw[0]
            gid = id_of.get(omega)
            if gid is None:
                gid = id_of[omega] = len(cycles)
                cycles.append(Cycle(tuple(int(x) for x in raw)))
            elif cycles[gid].elements != tuple(raw):
                raise AssertionError(f"conflicting cycles share omega={omega}")
            remap[k] = gid
        st = sh.status.astype(np.int8, copy=True)
        ref = sh.ref
        stp = sh.steps.astype(np.int64, copy=True)
        cid = np.full(len(st), -1, dtype=np.int64)

        conv = st == CONVERGED
        cid[conv] = remap[ref[conv]]
        dep = np.nonzero(st == DEPENDS)[0]
        if len(dep):
            targets = ref[dep]
            tstat = status[targets]
            if np.any(tstat < 0):
                raise AssertionError("dependency on an unmerged value")
            ok = tstat == CONVERGED
            st[dep[ok]] = CONVERGED
            cid[dep[ok]] = cycle_id[targets[ok]]
            stp[dep[ok]] += steps[targets[ok]]
            st[dep[~ok]] = UNRES_DEPENDS
            stp[dep[~ok]] = 0
        stp[st != CONVERGED] = 0
        status[sh.lo:sh.hi + 1] = st
        cycle_id[sh.lo:sh.hi + 1] = cid
        steps[sh.lo:sh.hi + 1] = stp
    if expect != N + 1:
        raise ValueError(f"shards stop at {expect - 1}, expected {N}")
    return ResolutionTable(status, cycle_id, steps, cycles)


# ---------------------------------------------------------------- reports

@dataclass
class CensusReport:
    map: MapParams
    N: int
    cycles: list[Cycle]
    basin_counts: dict[int, int]
    unresolved_count: int
    unresolved_by_reason: dict[str, int]
    unresolved_sample: list[tuple[int, str]]
    caps: Caps
    table: Optional[ResolutionTable] = field(default=None, repr=False, compare=False)

    @property
    def omegas(self) -> list[int]:
        return [c.omega for c in self.cycles]

    def cycle(self, omega: int) -> Cycle:
        for c in self.cycles:
            if c.omega == omega:
                return c
        raise KeyError(omega)

    def to_dict(self) -> dict:
        return {
            "map": {"a": self.map.a, "b": self.map.b},
            "N": self.N,
            "caps": {"max_steps": self.caps.max_steps, "max_value": self.caps.max_value},
            "cycles": [c.to_dict() for c in self.cycles],
            "basin_counts": {str(k): v for k, v in self.basin_counts.items()},
            "unresolved_count": self.unresolved_count,
            "unresolved_by_reason": dict(self.unresolved_by_reason),
            "unresolved_sample": [{"n": n, "reason": r} for n, r in self.unresolved_sample],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["omega", "length", "K", "L", "basin_count"])
        for c in self.cycles:
            w.writerow([c.omega, c.length, c.K, c.L, self.basin_counts.get(c.omega, 0)])
        return buf.getvalue()


def report_from_table(m: MapParams, N: int, caps: Caps, table: ResolutionTable) -> CensusReport:
    table.map = m
    order = sorted(range(len(table.cycles)), key=lambda i: table.cycles[i].omega)
    cycles = [table.cycles[i] for i in order]
    status = table.status[1:]
    conv = status == CONVERGED
    counts = np.bincount(table.cycle_id[1:][conv], minlength=len(table.cycles))
    basin = {table.cycles[i].omega: int(counts[i]) for i in order}
    unresolved_idx = np.nonzero(~conv)[0]
    by_reason = {name: int(np.count_nonzero(status == code)) for code, name in REASONS.items()}
    sample = [(int(i) + 1, REASONS[int(status[i])]) for i in unresolved_idx[:UNRESOLVED_SAMPLE_SIZE]]
    return CensusReport(m, N, cycles, basin, int(len(unresolved_idx)), by_reason, sample, caps, table)


def census(
    m: MapParams,
    N: int,
    caps: Caps = Caps(),
    workers: int = 1,
    shard_size: int = DEFAULT_SHARD_SIZE,
    backend: Optional[str] = None,
) -> CensusReport:
    """Classify every n in [1, N] and collect the cycles reached."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if caps.max_value < N:
        raise ValueError("max_value must be at least N")
    shards = compute_shards(m, N, caps, shard_size, workers, backend=backend)
    table = merge_shards(N, list(shards.values()))
    return report_from_table(m, N, caps, table)
