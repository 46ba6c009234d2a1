# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled census kernel.

Same contract as ``_pykernel``.  Orbits run in uint64 with an exact overflow
guard; any n whose segment would leave uint64 is handed to the pure-Python
walker, so results never depend on the fast path.  Cycle detection uses
Brent's algorithm, which needs no per-orbit hash set; the first-repeat index
is recovered as mu + lambda so step-cap semantics match the reference.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, int8_t

from . import _pykernel

cnp.import_array()

cdef enum:
    K_DROP = 0
    K_CYCLE = 1
    K_STEPCAP = 2
    K_VALUECAP = 3
    K_OVERFLOW = 4

cdef enum:
    S_CONVERGED = 0
    S_DEPENDS = 1
    S_UNRES_STEPS = 2
    S_UNRES_VALUE = 3
    S_UNRES_DEPENDS = 4

cdef uint64_t U64_MAX = 0xFFFFFFFFFFFFFFFF


cdef inline uint64_t _t(uint64_t v, uint64_t a, uint64_t bpos, uint64_t bneg) nogil:
    if v & 1:
        return (a * v + bpos - bneg) >> 1
    return v >> 1


cdef int _walk(uint64_t n, uint64_t a, uint64_t bpos, uint64_t bneg,
               int64_t max_steps, uint64_t vcap, bint has_vcap, uint64_t ovf,
               int64_t* out_j, uint64_t* out_v, int64_t* out_mu,
               int64_t* out_lam) nogil:
    cdef uint64_t v = n, tort = n, h
    cdef int64_t j = 0, power = 1, lam = 0, limit = 3 * max_steps + 3, mu, i
    while j < limit:
        if v & 1:
            if v > ovf:
                return K_OVERFLOW
            v = (a * v + bpos - bneg) >> 1
        else:
            v >>= 1
        j += 1
        lam += 1
        if has_vcap and v > vcap:
            return K_STEPCAP if j > max_steps else K_VALUECAP
        if v < n:
            if j > max_steps:
                return K_STEPCAP
            out_j[0] = j
            out_v[0] = v
            return K_DROP
        if v == tort:
            # lam is the exact cycle length; locate the entry index mu
            tort = n
            h = n
            for i in range(lam):
                h = _t(h, a, bpos, bneg)
            mu = 0
            while tort != h:
                tort = _t(tort, a, bpos, bneg)
                h = _t(h, a, bpos, bneg)
                mu += 1
            if mu + lam > max_steps:
                return K_STEPCAP
            out_mu[0] = mu
            out_lam[0] = lam
            out_v[0] = tort
            return K_CYCLE
        if power == lam:
            tort = v
            power <<= 1
            lam = 0
    return K_STEPCAP


def census_shard(a, b, lo, hi, max_steps, max_value):
    """Classify every n in [lo, hi]; see ``_pykernel.census_shard``."""
    if not (1 <= a < 2**31 and -2**31 < b < 2**31 and 1 <= lo <= hi < 2**62
            and 1 <= max_steps < 2**60):
        return _pykernel.census_shard(a, b, lo, hi, max_steps, max_value)

    cdef Py_ssize_t size = hi - lo + 1, i, k
    cdef cnp.ndarray[int8_t, ndim=1] status_a = np.zeros(size, dtype=np.int8)
    cdef cnp.ndarray[int64_t, ndim=1] ref_a = np.zeros(size, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] steps_a = np.zeros(size, dtype=np.int64)
    cdef int8_t[:] status = status_a
    cdef int64_t[:] ref = ref_a
    cdef int64_t[:] steps = steps_a

    cdef uint64_t ua = a
    cdef uint64_t bpos = b if b > 0 else 0
    cdef uint64_t bneg = -b if b < 0 else 0
    cdef uint64_t ovf = (U64_MAX - bpos) // ua
    cdef int64_t msteps = max_steps
    cdef bint has_vcap = max_value < 2**64
    cdef uint64_t vcap = max_value if has_vcap else 0
    cdef uint64_t n, ulo = lo, v, w, omega
    cdef int64_t j, mu, lam, t, r
    cdef int kind
    cdef int8_t s

    cycles = []
    index_of = {}

    for i in range(size):
        n = ulo + i
        with nogil:
            kind = _walk(n, ua, bpos, bneg, msteps, vcap, has_vcap, ovf,
                         &j, &v, &mu, &lam)
        if kind == K_OVERFLOW:
            kind, pj, pm, pmu, cyc = _pykernel.walk_segment(
                a, b, n, max_steps, max_value)
            if kind == K_CYCLE:
                omega_obj = min(cyc)
                cid = index_of.get(omega_obj)
                if cid is None:
                    r = cyc.index(omega_obj)
                    cid = index_of[omega_obj] = len(cycles)
                    cycles.append(cyc[r:] + cyc[:r])
                status[i] = S_CONVERGED
                ref[i] = cid
                steps[i] = pmu + cyc.index(omega_obj)
                continue
            if kind == K_DROP:
                j = pj
                v = pm
            # STEPCAP / VALUECAP fall through to the common branches below
        if kind == K_DROP:
            if v >= ulo:
                k = <Py_ssize_t>(v - ulo)
                s = status[k]
                if s == S_CONVERGED or s == S_DEPENDS:
                    status[i] = s
                    ref[i] = ref[k]
                    steps[i] = j + steps[k]
                else:
                    status[i] = S_UNRES_DEPENDS
                    ref[i] = <int64_t>v
                    steps[i] = 0
            else:
                status[i] = S_DEPENDS
                ref[i] = <int64_t>v
                steps[i] = j
        elif kind == K_CYCLE:
            # v is the entry point; find the minimum and its offset from v
            omega = v
            w = v
            r = 0
            for t in range(lam - 1):
                w = _t(w, ua, bpos, bneg)
                if w < omega:
                    omega = w
                    r = t + 1
            cid = index_of.get(omega)
            if cid is None:
                cyc = []
                w = omega
                for t in range(lam):
                    cyc.append(w)
                    w = _t(w, ua, bpos, bneg)
                cid = index_of[omega] = len(cycles)
                cycles.append(cyc)
            status[i] = S_CONVERGED
            ref[i] = cid
            steps[i] = mu + r
        elif kind == K_STEPCAP:
            status[i] = S_UNRES_STEPS
        else:
            status[i] = S_UNRES_VALUE
    return status_a, ref_a, steps_a, cycles
