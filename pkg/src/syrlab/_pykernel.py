"""Reference census kernel in plain Python.

A *segment* of n is its orbit n = v0, v1, ... up to the first of:

* ``DROP``      v_j < n at some j <= max_steps;
* ``CYCLE``     v_j equals an earlier v_i (first repeat, j <= max_steps);
* ``VALUECAP``  v_j > max_value at some j <= max_steps;
* ``STEPCAP``   none of the above within max_steps steps.

Classification of n depends only on its own segment and on the
classification of the drop target m < n, so any processing order that
handles smaller values first gives identical results.  The compiled kernel
implements the same contract and must agree bit for bit.
"""

from __future__ import annotations

import numpy as np

DROP, CYCLE, STEPCAP, VALUECAP = 0, 1, 2, 3

# status codes in shard tables
CONVERGED = 0
DEPENDS = 1
UNRES_STEPS = 2
UNRES_VALUE = 3
UNRES_DEPENDS = 4


def walk_segment(a, b, n, max_steps, max_value):
    """Walk the segment of n.

    Returns ``(kind, j, m, mu, cycle)``: for DROP, m = v_j < n at step j;
    for CYCLE, mu is the index where the cycle is entered and ``cycle`` the
    raw cycle starting at v_mu; other fields are 0/None.
    """
    seen = {n: 0}
    v = n
    j = 0
    while True:
        if j >= max_steps:
            return STEPCAP, j, 0, 0, None
        v = (a * v + b) >> 1 if v & 1 else v >> 1
        j += 1
        if v > max_value:
            return VALUECAP, j, 0, 0, None
        if v < n:
            return DROP, j, v, 0, None
        first = seen.get(v)
        if first is not None:
            cyc = [v]
            w = (a * v + b) >> 1 if v & 1 else v >> 1
            while w != v:
                cyc.append(w)
                w = (a * w + b) >> 1 if w & 1 else w >> 1
            return CYCLE, j, 0, first, cyc
        seen[v] = j


def census_shard(a, b, lo, hi, max_steps, max_value):
    """Classify every n in [lo, hi].

    Returns ``(status, ref, steps, cycles)``.  ``cycles`` is a list of raw
    cycles (each rotated to start at its minimum) in discovery order; for a
    CONVERGED entry ``ref`` indexes that list and ``steps`` is the number of
    steps until the orbit first hits the cycle's minimum.  That hitting time
    composes exactly along drops (j + steps[m]), which the entry time into
    the cycle does not.  For DEPENDS, ``ref`` is a value m < lo whose
    classification the entry inherits after ``steps`` steps.
    """
    size = hi - lo + 1
    status = [0] * size
    ref = [0] * size
    steps = [0] * size
    cycles = []
    index_of = {}
    for i in range(size):
        n = lo + i
        kind, j, m, mu, cyc = walk_segment(a, b, n, max_steps, max_value)
        if kind == DROP:
            if m >= lo:
                k = m - lo
                s = status[k]
                if s == CONVERGED or s == DEPENDS:
                    status[i], ref[i], steps[i] = s, ref[k], j + steps[k]
                else:
                    status[i], ref[i], steps[i] = UNRES_DEPENDS, m, 0
            else:
                status[i], ref[i], steps[i] = DEPENDS, m, j
        elif kind == CYCLE:
            omega = min(cyc)
            r = cyc.index(omega)
            cid = index_of.get(omega)
            if cid is None:
                cid = index_of[omega] = len(cycles)
                cycles.append(cyc[r:] + cyc[:r])
            status[i], ref[i], steps[i] = CONVERGED, cid, mu + r
        elif kind == STEPCAP:
            status[i] = UNRES_STEPS
        else:
            status[i] = UNRES_VALUE
    return (
        np.array(status, dtype=np.int8),
        np.array(ref, dtype=np.int64),
        np.array(steps, dtype=np.int64),
        cycles,
    )
