"""Entropy diagnostics: separated/covering orbit counts on the
quotient box, admissible word counts for the induced subshift, and
volume growth of analytic disks.

Grid counts are bracketing diagnostics for topological entropy, not
the entropy itself: the separated count divided by n underestimates
only in the limit, and at small n it is dominated by the packing of
the grid. Orbit distance is the maximum quotient distance over the
samples j = 0, ..., n-1; including j = 0 makes distinct points with
identical images count as separated, which the symbolic lower bounds
require.
"""

from __future__ import annotations

import heapq
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .shiftlike import QuotientBox, ShiftLikeMap, quotient_orbit_array

_COVER_GUARD = 8192


def real_axis_grid(box: QuotientBox, per_axis: int) -> np.ndarray:
    """Real-slice lattice of the closed box: per_axis real samples in
    [-r, r] for each of the n_dim coordinates."""
    if per_axis < 1:
        raise ValueError("per_axis must be positive")
    axis = np.linspace(-box.radius, box.radius, per_axis)
    grids = np.meshgrid(*([axis] * box.n_dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    return pts.astype(complex)


def _orbit_data(box, F, points, n):
    samples, collapsed = quotient_orbit_array(box, F, points, n)
    # slab distance per sample; zero for collapsed entries so that the
    # collapsed class is at distance zero from itself
    tail = np.abs(samples[:, :, box.n_dim - box.shift :])
    slab = np.clip(box.radius - tail.max(axis=2), 0.0, None)
    slab[collapsed] = 0.0
    return samples, collapsed, slab


def _orbit_distances(samples, collapsed, slab, i: int, idx: np.ndarray) -> np.ndarray:
    """Max-over-time quotient distance from orbit i to orbits idx."""
    direct = np.abs(samples[idx] - samples[i][None]).max(axis=2)
    both = np.minimum(direct, np.minimum(slab[idx], slab[i][None]))
    one_dead = np.where(collapsed[i][None], slab[idx], slab[i][None])
    d = np.where(collapsed[idx] | collapsed[i][None], one_dead, both)
    d[collapsed[idx] & collapsed[i][None]] = 0.0
    return d.max(axis=1)


def _orbit_distance_block(samples, collapsed, slab, rows: np.ndarray, cols: np.ndarray):
    """Pairwise orbit distances, rows x cols.

    Works in squared distances (all terms nonnegative, so min/max
    commute with squaring) and takes one sqrt at the end; accumulates
    one time step and coordinate at a time to bound the temporaries.
    """
    out = np.zeros((rows.size, cols.size))
    slab2 = slab * slab
    for j in range(samples.shape[1]):
        direct2 = None
        for c in range(samples.shape[2]):
            sr = samples[rows, j, c]
            sc = samples[cols, j, c]
            dre = sr.real[:, None] - sc.real[None, :]
            dim = sr.imag[:, None] - sc.imag[None, :]
            cur = dre * dre + dim * dim
            direct2 = cur if direct2 is None else np.maximum(direct2, cur)
        slr = slab2[rows, j][:, None]
        slc = slab2[cols, j][None, :]
        d2 = np.minimum(direct2, np.minimum(slr, slc))
        cr = collapsed[rows, j][:, None]
        cc = collapsed[cols, j][None, :]
        d2 = np.where(cr | cc, np.where(cr, slc, slr), d2)
        d2[cr & cc] = 0.0
        np.maximum(out, d2, out=out)
    return np.sqrt(out)


@dataclass(frozen=True)
class SeparatedSet:
    count: int
    indices: tuple[int, ...]
    n: int
    epsilon: float
    grid_size: int
    survivors: int


def separated_lower(
    box: QuotientBox,
    F: ShiftLikeMap,
    points: np.ndarray,
    n: int,
    epsilon: float,
    surviving_only: bool = False,
) -> SeparatedSet:
    """Greedy maximal (n, epsilon)-separated subset of the grid orbits.

    Candidates are scanned in grid order and kept when their orbit
    distance to every kept orbit is at least epsilon; the count is a
    certified lower bound for the maximum separated cardinality.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    pts = np.asarray(points, dtype=complex)
    samples, collapsed, slab = _orbit_data(box, F, pts, n)
    order = np.arange(pts.shape[0])
    survivors = int((~collapsed.any(axis=1)).sum())
    if surviving_only:
        order = order[~collapsed.any(axis=1)]
    kept: list[int] = []
    kept_arr = np.empty(order.size, dtype=np.int64)
    for i in order:
        # scan the kept set newest-first in chunks: the scan is in grid
        # order, so a rejecting neighbor is almost always recent, and
        # the short circuit skips the bulk of the distance work
        ok = True
        hi = len(kept)
        while hi > 0:
            lo = max(0, hi - 64)
            d = _orbit_distances(samples, collapsed, slab, int(i), kept_arr[lo:hi])
            if (d < epsilon).any():
                ok = False
                break
            hi = lo
        if ok:
            kept_arr[len(kept)] = i
            kept.append(int(i))
    return SeparatedSet(
        count=len(kept),
        indices=tuple(kept),
        n=n,
        epsilon=epsilon,
        grid_size=pts.shape[0],
        survivors=survivors,
    )


@dataclass(frozen=True)
class CoveringSet:
    count: int
    indices: tuple[int, ...]
    n: int
    epsilon: float
    grid_size: int


def covering_upper(
    box: QuotientBox,
    F: ShiftLikeMap,
    points: np.ndarray,
    n: int,
    epsilon: float,
    surviving_only: bool = False,
) -> CoveringSet:
    """Greedy (n, epsilon)-cover of the grid orbits by grid orbits.

    Each step picks the candidate covering the most uncovered orbits
    (ties broken by grid order). The count upper-bounds the covering
    number of the sampled orbit set only, which is why it is reported
    as a diagnostic next to the separated count.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    pts = np.asarray(points, dtype=complex)
    samples, collapsed, slab = _orbit_data(box, F, pts, n)
    order = np.arange(pts.shape[0])
    if surviving_only:
        order = order[~collapsed.any(axis=1)]
    m = order.size
    if m == 0:
        return CoveringSet(0, (), n, epsilon, pts.shape[0])
    if m > _COVER_GUARD:
        raise ValueError(
            f"covering grid of {m} orbits exceeds the {_COVER_GUARD} guard; "
            "restrict the grid or use surviving_only"
        )
    within = np.empty((m, m), dtype=bool)
    block = max(1, (1 << 22) // max(1, m))
    for lo in range(0, m, block):
        rows = order[lo : lo + block]
        within[lo : lo + block] = (
            _orbit_distance_block(samples, collapsed, slab, rows, order) < epsilon
        )
    # lazy greedy: gains only shrink as the cover grows, so a heap entry
    # whose recomputed gain still tops the heap is the true argmax; ties
    # resolve to the smallest row index, matching a fresh full argmax
    uncovered = np.ones(m, dtype=bool)
    chosen: list[int] = []
    heap = [(-int(within[row].sum()), row) for row in range(m)]
    heapq.heapify(heap)
    while uncovered.any():
        while True:
            neg_gain, pick = heap[0]
            fresh = int((within[pick] & uncovered).sum())
            if fresh == -neg_gain:
                heapq.heappop(heap)
                break
            heapq.heapreplace(heap, (-fresh, pick))
        if fresh == 0:
            raise AssertionError("cover stalled; epsilon must be positive")
        chosen.append(int(order[pick]))
        uncovered &= ~within[pick]
    return CoveringSet(
        count=len(chosen),
        indices=tuple(chosen),
        n=n,
        epsilon=epsilon,
        grid_size=pts.shape[0],
    )


@dataclass(frozen=True)
class EntropyEstimate:
    n: int
    epsilon: float
    separated: int
    covering: int | None
    h_lower: float
    h_upper: float | None


@dataclass(frozen=True)
class EntropyReport:
    rows: tuple[EntropyEstimate, ...]
    grid_size: int
    grid_resolution: float
    monotonicity_violations: tuple[str, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,epsilon,s_lower,c_upper,h_lower,h_upper\n")
        for row in self.rows:
            cov = "" if row.covering is None else str(row.covering)
            hup = "" if row.h_upper is None else repr(row.h_upper)
            buf.write(
                f"{row.n},{row.epsilon!r},{row.separated},{cov},"
                f"{row.h_lower!r},{hup}\n"
            )
        return buf.getvalue()


def entropy_estimate(
    box: QuotientBox,
    F: ShiftLikeMap,
    points: np.ndarray,
    n_values,
    epsilons,
    with_covering: bool = False,
    surviving_only: bool = False,
) -> EntropyReport:
    """Separated/covering table over (n, epsilon) pairs with
    monotonicity diagnostics (the separated count must not drop when
    epsilon shrinks; recorded violations indicate a bug or a starved
    grid rather than being silently accepted)."""
    pts = np.asarray(points, dtype=complex)
    rows: list[EntropyEstimate] = []
    for n in n_values:
        for eps in epsilons:
            sep = separated_lower(box, F, pts, n, eps, surviving_only)
            cov = None
            if with_covering:
                cov = covering_upper(box, F, pts, n, eps, surviving_only)
            rows.append(
                EntropyEstimate(
                    n=n,
                    epsilon=eps,
                    separated=sep.count,
                    covering=None if cov is None else cov.count,
                    h_lower=math.log(sep.count) / n if sep.count else float("-inf"),
                    h_upper=(
                        None
                        if cov is None
                        else (math.log(cov.count) / n if cov.count else float("-inf"))
                    ),
                )
            )
    violations: list[str] = []
    for n in n_values:
        sub = sorted(
            (r for r in rows if r.n == n), key=lambda r: r.epsilon, reverse=True
        )
        for prev, cur in zip(sub, sub[1:]):
            if cur.separated < prev.separated:
                violations.append(
                    f"s(n={n}, eps={cur.epsilon}) = {cur.separated} < "
                    f"{prev.separated} = s(n={n}, eps={prev.epsilon})"
                )
    if pts.shape[0] > 1:
        resolution = float(np.abs(pts[1:] - pts[:-1]).max(axis=1).min())
    else:
        resolution = 0.0
    return EntropyReport(
        rows=tuple(rows),
        grid_size=pts.shape[0],
        grid_resolution=resolution,
        monotonicity_violations=tuple(violations),
    )


# Admissible words of the induced subshift ------------------------------


def full_table(k: int) -> list[list[list[int]]]:
    """Every transition allowed: the full shift on k symbols."""
    return [[list(range(k)) for _ in range(k)] for _ in range(k)]


def uniform_excluded_table(k: int, excluded: int = 2) -> list[list[list[int]]]:
    """Table where every cell drops `excluded` symbols (cyclically
    chosen from the second index), so each cell has exactly k - excluded
    entries."""
    if not 0 <= excluded <= k:
        raise ValueError("excluded must lie in 0..k")
    table = []
    for _ in range(k):
        row = []
        for l in range(k):
            banned = {(l + t) % k for t in range(excluded)}
            row.append([j for j in range(k) if j not in banned])
        table.append(row)
    return table


def _allowed_sets(table) -> list[list[frozenset[int]]]:
    raw = getattr(table, "allowed", table)
    k = len(raw)
    out = []
    for i in range(k):
        if len(raw[i]) != k:
            raise ValueError("transition table must be k x k")
        out.append([frozenset(int(j) for j in raw[i][l]) for l in range(k)])
    return out


@dataclass(frozen=True)
class WordCount:
    length: int
    count: int
    growth_rate: float


def count_admissible_words(table, n_dim: int, shift: int, length: int) -> WordCount:
    """Exact number of admissible words of the given length.

    The first n_dim symbols are free; symbol at position p >= n_dim
    (0-based) must lie in allowed[w[p - shift]][w[p - n_dim]]. Counting
    runs over exact integers via dynamic programming on the sliding
    window of the last n_dim symbols.
    """
    sets = _allowed_sets(table)
    k = len(sets)
    if n_dim < 2 or not 1 <= shift <= n_dim - 1:
        raise ValueError("need n_dim >= 2 and 1 <= shift <= n_dim - 1")
    if length < 1:
        raise ValueError("length must be positive")
    if length <= n_dim:
        count = k**length
        return WordCount(length, count, math.log(count) / length if count else float("-inf"))
    if k**n_dim > 2_000_000:
        raise ValueError("state space k**n_dim too large")
    from itertools import product

    state_count = {state: 1 for state in product(range(k), repeat=n_dim)}
    for _ in range(length - n_dim):
        nxt: dict[tuple[int, ...], int] = {}
        for state, cnt in state_count.items():
            options = sets[state[n_dim - shift]][state[0]]
            tail = state[1:]
            for sym in options:
                key = tail + (sym,)
                nxt[key] = nxt.get(key, 0) + cnt
        state_count = nxt
    total = sum(state_count.values())
    rate = math.log(total) / length if total else float("-inf")
    return WordCount(length, total, rate)


def symbolic_entropy_lower(table, n_dim: int, shift: int, length: int) -> float:
    """log of the exact ratio count(length) / count(length - 1).

    For a table whose cells all have cardinality c this is exactly
    log c (the ratio is computed in integer arithmetic before the one
    floating log). Zero counts give -inf.
    """
    if length < 2:
        raise ValueError("length must be at least 2")
    hi = count_admissible_words(table, n_dim, shift, length).count
    lo = count_admissible_words(table, n_dim, shift, length - 1).count
    if hi == 0 or lo == 0:
        return float("-inf")
    q, rem = divmod(hi, lo)
    if rem == 0:
        return math.log(q)
    return math.log(hi) - math.log(lo)


def words_to_json(counts: list[WordCount], entropy_lower: float | None = None) -> str:
    doc = {
        "counts": [
            {
                "m": wc.length,
                "count": str(wc.count),
                "growth_rate": wc.growth_rate,
            }
            for wc in counts
        ],
    }
    if entropy_lower is not None:
        doc["entropy_lower"] = None if math.isinf(entropy_lower) else entropy_lower
    return json.dumps(doc, sort_keys=True, indent=2)


# Volume growth of an analytic disk -------------------------------------


@dataclass(frozen=True)
class VolumeGrowth:
    areas: tuple[float, ...]
    rate: float
    rate_over_n: float
    axis: int
    depth: int


def volume_growth(
    box: QuotientBox,
    F: ShiftLikeMap,
    axis: int,
    base,
    depth: int,
    per_axis: int = 200,
) -> VolumeGrowth:
    """Area growth of the image of a coordinate-line disk.

    The disk {base with coordinate `axis` replaced by t, |t| <= r} is
    pushed forward by the shift-fold map; at each depth only parameters
    whose partial orbit stayed in the closed box contribute, and the
    area is the cell-weighted sum of squared tangent norms (the area
    form of a holomorphic curve). rate is the last-step log ratio,
    which vanishes identically for isometric dynamics; rate_over_n is
    log(area at full depth) / depth.
    """
    if (F.n_dim, F.shift) != (box.n_dim, box.shift):
        raise ValueError("map and box dimensions do not match")
    if not box.n_dim - box.shift <= axis <= box.n_dim - 1:
        raise ValueError("axis must index one of the trailing shift coordinates")
    if depth < 2:
        raise ValueError("depth must be at least 2")
    base = tuple(complex(w) for w in base)
    if len(base) != box.n_dim:
        raise ValueError("base point has wrong dimension")
    r = box.radius
    h = 2.0 * r / per_axis
    side = np.linspace(-r + h / 2, r - h / 2, per_axis)
    tx, ty = np.meshgrid(side, side, indexing="ij")
    t = (tx + 1j * ty).ravel()
    t = t[np.abs(t) <= r]
    m = t.shape[0]
    z = np.tile(np.asarray(base, dtype=complex), (m, 1))
    z[:, axis] = t
    v = np.zeros((m, box.n_dim), dtype=complex)
    v[:, axis] = 1.0
    alive = np.ones(m, dtype=bool)
    cell = h * h
    areas: list[float] = []
    for _ in range(depth):
        for _ in range(box.shift):
            v = F.tangent_apply_grid(z, v)
            z = F.apply_grid(z)
        with np.errstate(invalid="ignore"):
            ok = np.isfinite(z).all(axis=1) & (np.abs(z) <= r).all(axis=1)
        alive &= ok
        z[~alive] = 0.0
        v[~alive] = 0.0
        weight = (np.abs(v) ** 2).sum(axis=1)
        areas.append(float(weight[alive].sum() * cell))
    if areas[-1] <= 0.0 or areas[-2] <= 0.0:
        rate = float("-inf")
    else:
        rate = math.log(areas[-1]) - math.log(areas[-2])
    rate_over_n = math.log(areas[-1]) / depth if areas[-1] > 0 else float("-inf")
    return VolumeGrowth(
        areas=tuple(areas),
        rate=rate,
        rate_over_n=rate_over_n,
        axis=axis,
        depth=depth,
    )
