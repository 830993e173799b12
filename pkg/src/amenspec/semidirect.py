"""Spectral models for two non-compact duals: a reflection family on a
half-line grid, and integer pair classes under coordinate shifts.

Half-line family. The spectrum is parametrized by r > 0 with a continuous
measure of density 1/(4 pi) and constant fiber dimension 2. A uniform grid
with step h carries cell midpoints (j + 1/2) h as sample points and cell
mass h / (4 pi). The reflection operator for parameter r moves mass between
cells j -> j - k, j -> j + k and j -> k - j - 1 with k = r / h, so shifts
are kept grid exact by snapping r to the nearest positive multiple of h.
Integrating the reflection family over an interval window gives the test
operator whose membership target is the window mass (b - a) / (2 pi).

Pair family. Classes are unordered pairs of distinct integers {g, g'}
inside a box [-B, B]; a shift pair (r, r') moves {g, g'} to {g - r, g' - r'}
and {g - r', g' - r}, dropping degenerate targets and anything outside the
box. Conjugation negates both coordinates. Fiber dimension is 2 throughout,
so a window of w shifts has mass target 2 w.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .spectral import (CERT_TOL, DEFAULT_SEED, DISCRETE_LABELS, UNIFORM_GRID,
                       AmenabilityVerdict, InputError, LinOp, SpectrumDomain,
                       in_spectrum)

_QUAD_DENSITY = 1.0 / (4.0 * math.pi)


class HalfLineGrid:
    """Uniform half-line discretization: n cells of width h up to max_r."""

    def __init__(self, h: float, max_r: float):
        if not (isinstance(h, (int, float)) and np.isfinite(h) and h > 0):
            raise InputError("grid step h must be a positive number")
        if not (isinstance(max_r, (int, float)) and np.isfinite(max_r) and max_r > 0):
            raise InputError("grid extent max_r must be a positive number")
        n = int(round(max_r / h))
        if n < 2 or abs(n * h - max_r) > 1e-9 * max(1.0, max_r):
            raise InputError("max_r must be an integer multiple of h, at least 2 cells")
        self.h = float(h)
        self.max_r = float(max_r)
        self.n = n
        pts = tuple((j + 0.5) * self.h for j in range(n))
        self.domain = SpectrumDomain(UNIFORM_GRID, pts,
                                     np.full(n, 2.0), np.full(n, self.h * _QUAD_DENSITY))

    def snap(self, r: float) -> int:
        """Nearest positive multiple of h, in cell units, rounding half up."""
        if not (isinstance(r, (int, float)) and np.isfinite(r) and r > 0):
            raise InputError("shift parameter r must be a positive number")
        return max(1, int(math.floor(r / self.h + 0.5)))


def half_line_grid(h: float, max_r: float) -> HalfLineGrid:
    return HalfLineGrid(h, max_r)


def _reflection_bands(n: int, k: int):
    """Index pairs of the three unit bands of the reflection shift by k cells."""
    rows, cols = [], []
    for j in range(k, n):
        rows.append(j)
        cols.append(j - k)
    for j in range(0, n - k):
        rows.append(j)
        cols.append(j + k)
    for j in range(0, min(k, n)):
        rows.append(j)
        cols.append(k - j - 1)
    return rows, cols


def shift_operator(grid: HalfLineGrid, r: float) -> LinOp:
    """Reflection operator for parameter r, snapped to the grid.

    Rows hold at most two unit entries; the operator is exactly symmetric
    and its norm is bounded by the fiber dimension 2.
    """
    k = grid.snap(r)
    if k >= grid.n:
        raise InputError(f"shift parameter {r} reaches past the grid extent")
    rows, cols = _reflection_bands(grid.n, k)
    op = LinOp.from_entries(grid.domain, rows, cols, np.ones(len(rows)),
                            symmetric=True,
                            meta={"r": float(r), "r_snapped": k * grid.h,
                                  "snap_delta": k * grid.h - float(r),
                                  "shift_cells": k})
    return op


def interval_operator(grid: HalfLineGrid, a: float, b: float) -> LinOp:
    """Window operator for the interval [a, b], endpoints snapped outward.

    Quadrature nodes sit at the positive multiples of h covering the
    snapped interval, each carrying cell mass h / (4 pi). The membership
    target (b_s - a_s) / (2 pi) is stored in meta["target"].
    """
    for name, v in (("a", a), ("b", b)):
        if not (isinstance(v, (int, float)) and np.isfinite(v)):
            raise InputError(f"interval endpoint {name} must be a number")
    if not 0 <= a <= b <= grid.max_r:
        raise InputError("interval must satisfy 0 <= a <= b <= max_r")
    w = grid.h * _QUAD_DENSITY
    if a == b:
        return LinOp.from_entries(grid.domain, [], [], [], symmetric=True,
                                  meta={"a": float(a), "b": float(b),
                                        "snapped": [float(a), float(a)],
                                        "nodes": 0, "target": 0.0})
    k_lo = int(math.floor(a / grid.h + 1e-9))
    k_hi = int(math.ceil(b / grid.h - 1e-9))
    rows, cols, vals = [], [], []
    for k in range(k_lo + 1, k_hi + 1):
        r, c = _reflection_bands(grid.n, k)
        rows.extend(r)
        cols.extend(c)
        vals.extend([w] * len(r))
    a_s, b_s = k_lo * grid.h, k_hi * grid.h
    target = (b_s - a_s) / (2.0 * math.pi)
    return LinOp.from_entries(grid.domain, rows, cols, vals, symmetric=True,
                              meta={"a": float(a), "b": float(b),
                                    "snapped": [a_s, b_s],
                                    "nodes": k_hi - k_lo, "target": target})


def interval_witness(grid: HalfLineGrid, m: float) -> np.ndarray:
    """Indicator of the dyadic band [m, 2m], unit norm in the cell measure.

    The residual of the interval operator against these witnesses decays
    like 1/m: the band is long enough that only its edges feel the window.
    """
    if not (isinstance(m, (int, float)) and np.isfinite(m) and m > 0):
        raise InputError("witness scale m must be a positive number")
    if 2 * m > grid.max_r:
        raise InputError("witness band [m, 2m] must fit inside the grid")
    pts = np.array(grid.domain.points)
    v = np.where((pts >= m) & (pts <= 2 * m), math.sqrt(4.0 * math.pi / m), 0.0)
    nrm2 = float(v @ (grid.domain.quad_weight * v))
    if nrm2 == 0:
        raise InputError("witness band contains no grid point")
    return v / math.sqrt(nrm2)


def interval_spectrum_test(grid: HalfLineGrid, a: float, b: float,
                           witness_ms: Sequence[float] = (2.0, 4.0, 8.0),
                           tol: float = 5e-2, seed: int = DEFAULT_SEED,
                           max_iter: int = 300) -> AmenabilityVerdict:
    """Membership test for the interval mass, with banded witnesses."""
    op = interval_operator(grid, a, b)
    target = op.meta["target"]
    witnesses = []
    for m in witness_ms:
        witnesses.append((f"band-{m:g}", interval_witness(grid, m)))
    cert = in_spectrum(op, target, tol=tol, witnesses=witnesses,
                       seed=seed, max_iter=max_iter)
    per = {}
    for wid, v in witnesses:
        per[wid] = float(np.linalg.norm(op.apply(v) - target * v) / np.linalg.norm(v))
    notes = {"snapped": op.meta["snapped"], "nodes": op.meta["nodes"],
             "grid": {"h": grid.h, "max_r": grid.max_r, "cells": grid.n},
             "witness_residuals": per}
    return AmenabilityVerdict(cert.target, cert.tolerance, cert.best_residual,
                              cert.certified, cert.witness_id, cert.gap_hint, notes)


# -- integer pair classes ----------------------------------------------------


def canonical_pair(a: int, b: int) -> tuple:
    return (a, b) if a < b else (b, a)


def conj_pair(c: tuple) -> tuple:
    return canonical_pair(-c[0], -c[1])


class PairLattice:
    """Unordered distinct integer pairs inside the box [-B, B]^2."""

    def __init__(self, bound: int):
        if not isinstance(bound, int) or bound < 1:
            raise InputError("bound must be a positive integer")
        self.bound = bound
        rng = range(-bound, bound + 1)
        self.classes = tuple((a, b) for a in rng for b in rng if a < b)
        self.index = {c: i for i, c in enumerate(self.classes)}
        n = len(self.classes)
        self.domain = SpectrumDomain(DISCRETE_LABELS, self.classes,
                                     np.full(n, 2.0), np.ones(n))

    @property
    def size(self) -> int:
        return len(self.classes)


def pair_lattice(bound: int) -> PairLattice:
    return PairLattice(bound)


def pair_shift_operator(pairs: PairLattice, shift, p: float = 1.0) -> LinOp:
    """Class-shift operator for one shift pair (r, r') with r != r'.

    Each class {g, g'} feeds its two shifted classes; degenerate targets
    (equal coordinates) are dropped, as is anything leaving the box. The
    modular prefactor is identically 1 for this family but kept in the
    arithmetic. Transposing gives the operator of the negated shift, so a
    single shift is symmetric only when {r, r'} = {-r, -r'}.
    """
    r, rp = shift
    if not (isinstance(r, int) and isinstance(rp, int)):
        raise InputError("shift coordinates must be integers")
    if r == rp:
        raise InputError("shift coordinates must be distinct")
    if not (isinstance(p, (int, float)) and np.isfinite(p) and p >= 1):
        raise InputError("exponent p must be a number >= 1")
    c = 1.0 ** ((1.0 - p) / 2.0)      # modular term, unimodular family
    rows, cols, vals = [], [], []
    dropped = 0
    for i, (g, gp) in enumerate(pairs.classes):
        for t in (canonical_pair(g - r, gp - rp), canonical_pair(g - rp, gp - r)):
            if t[0] == t[1]:
                dropped += 1
                continue
            j = pairs.index.get(t)
            if j is None:
                dropped += 1
            else:
                rows.append(i)
                cols.append(j)
                vals.append(c)
    symmetric = {r, rp} == {-r, -rp}
    return LinOp.from_entries(pairs.domain, rows, cols, vals, symmetric=symmetric,
                              meta={"shift": (r, rp), "bound": pairs.bound,
                                    "p": float(p), "dropped": dropped})


def pair_window_operator(pairs: PairLattice, omega: Sequence, p: float = 1.0) -> LinOp:
    """Sum of class shifts over a negation-closed window of shift pairs."""
    omega = [tuple(s) for s in omega]
    if not omega:
        raise InputError("shift window must be nonempty")
    if len(set(omega)) != len(omega):
        raise InputError("shift window must not repeat shifts")
    closure = {canonical_pair(-r, -rp) for r, rp in omega}
    if closure != {canonical_pair(r, rp) for r, rp in omega}:
        raise InputError("shift window must be closed under negation")
    ops = [pair_shift_operator(pairs, s, p=p) for s in omega]
    mat = ops[0].matrix
    for o in ops[1:]:
        mat = mat + o.matrix
    return LinOp(pairs.domain, mat, symmetric=True,
                 meta={"bound": pairs.bound, "omega": [list(s) for s in omega],
                       "p": float(p),
                       "dropped": sum(o.meta["dropped"] for o in ops)})


def _box_witness(pairs: PairLattice, m: int) -> np.ndarray:
    flags = np.array([max(abs(a), abs(b)) <= m for a, b in pairs.classes], dtype=float)
    total = flags.sum()
    return flags / math.sqrt(total) if total else flags


def bicrossed_amenability_test(bounds, omega: Sequence, tol: float = 5e-2,
                               seed: int = DEFAULT_SEED,
                               max_iter: int = 300) -> AmenabilityVerdict:
    """Membership test for the window mass over a sweep of box bounds.

    omega is a conjugation-closed list of shift pairs; the window operator
    is the sum of their class shifts and the primary target is 2 |omega|
    (fiber dimension times window count). Witnesses are normalized box
    indicators at three scales plus the Ritz route. notes additionally
    reports the plain window count |omega| as a secondary membership check
    at the final bound.
    """
    if isinstance(bounds, int):
        bounds = [bounds]
    bounds = [int(b) for b in bounds]
    if not bounds or any(b <= a for a, b in zip(bounds, bounds[1:])):
        raise InputError("bounds must be strictly increasing and nonempty")
    omega = [tuple(s) for s in omega]

    target = 2.0 * len(omega)
    trace = []
    cert = None
    best_bound = None
    secondary = None
    for b in bounds:
        pairs = pair_lattice(b)
        op = pair_window_operator(pairs, omega)
        witnesses = []
        for m in sorted({max(1, b // 4), max(1, b // 2), b}):
            v = _box_witness(pairs, m)
            if np.any(v):
                witnesses.append((f"box-{m}", v))
        here = in_spectrum(op, target, tol=tol, witnesses=witnesses,
                           seed=seed, max_iter=max_iter)
        if cert is None or here.best_residual < cert.best_residual:
            cert = here
            best_bound = b
        trace.append({"bound": b, "classes": pairs.size,
                      "best_residual": here.best_residual,
                      "witness_id": here.witness_id})
        if b == bounds[-1]:
            sec = in_spectrum(op, float(len(omega)), tol=tol, seed=seed,
                              max_iter=max_iter)
            secondary = {"target": sec.target, "best_residual": sec.best_residual,
                         "certified": sec.certified, "gap_hint": sec.gap_hint}
    notes = {"bounds": bounds, "best_bound": best_bound, "trace": trace,
             "window": [list(s) for s in omega], "secondary": secondary}
    return AmenabilityVerdict(cert.target, cert.tolerance, cert.best_residual,
                              cert.certified, cert.witness_id, cert.gap_hint, notes)
