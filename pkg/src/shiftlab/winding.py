"""Zero counting and expansion certificates via contour winding numbers.

The winding number of f - w around a circle is computed from argument
increments of adaptively refined contour samples. Refinement doubles
the sample count until every increment is below pi/2; contours that
pass too close to a zero, or that fail to settle before the sample
cap, yield an explicit inconclusive outcome rather than a guess.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .expressions import EntireFunction, evaluate_grid, rescale

_START_SAMPLES = 256
_SAMPLE_CAP = 2**20
_VECTOR_CAP = 2**16
_NEAR_ZERO_FACTOR = 1e-9
_MAX_RESIDUAL = 0.25


class InconclusiveContour(Exception):
    """The contour test could not certify a winding number."""


@dataclass(frozen=True)
class WindingResult:
    value: int
    residual: float
    samples: int


def _circle(center: complex, radius: float, m: int) -> np.ndarray:
    t = np.arange(m) * (2.0 * np.pi / m)
    return center + radius * np.exp(1j * t)


def _increments(closed_vals: np.ndarray) -> np.ndarray:
    # angle of successive quotients, written multiplicatively to avoid
    # wrap-around bookkeeping
    return np.angle(closed_vals[1:] * np.conj(closed_vals[:-1]))


def winding_number(
    f: EntireFunction,
    center: complex,
    radius: float,
    about: complex = 0j,
    start: int = _START_SAMPLES,
    cap: int = _SAMPLE_CAP,
) -> WindingResult:
    """Winding number of t -> f(circle(t)) - about around zero."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    m = int(start)
    while True:
        vals = evaluate_grid(f, _circle(center, radius, m)) - complex(about)
        if not np.isfinite(vals).all():
            raise InconclusiveContour("contour evaluation overflowed")
        mods = np.abs(vals)
        scale = mods.max()
        if scale == 0.0 or mods.min() <= _NEAR_ZERO_FACTOR * scale:
            raise InconclusiveContour("contour passes too close to a zero")
        closed = np.concatenate([vals, vals[:1]])
        inc = _increments(closed)
        if np.abs(inc).max() < 0.5 * np.pi:
            total = inc.sum() / (2.0 * np.pi)
            value = int(round(total))
            residual = abs(total - value)
            if residual > _MAX_RESIDUAL:
                raise InconclusiveContour(
                    f"winding sum did not settle (residual {residual:.3f})"
                )
            return WindingResult(value=value, residual=residual, samples=m)
        if m >= cap:
            raise InconclusiveContour("sample cap reached before increments settled")
        m *= 2


def zero_count(f: EntireFunction, value: complex, center: complex, radius: float) -> int:
    """Number of solutions of f(z) = value inside the disk, counted
    with multiplicity; inconclusive contours raise."""
    return winding_number(f, center, radius, about=value).value


def min_modulus_on_circle(
    f: EntireFunction, center: complex, radius: float, samples: int
) -> float:
    vals = evaluate_grid(f, _circle(center, radius, samples))
    if not np.isfinite(vals).all():
        raise InconclusiveContour("contour evaluation overflowed")
    return float(np.abs(vals).min())


@dataclass(frozen=True)
class ExpansionCertificate:
    """Certified lower entropy bound from boundary expansion.

    valid means: the minimum modulus of f on the circle of radius r
    strictly exceeds (|a| + 1) r and the winding degree d is at least
    one, which pins a horseshoe of d branches inside the box and gives
    topological entropy at least log d for the nu-fold map.
    """

    min_modulus: float
    threshold: float
    degree: int | None
    valid: bool
    conclusive: bool
    entropy_lower: float | None
    samples: int


def horseshoe_certificate(
    f: EntireFunction, a: complex, r: float, min_samples: int = 8192
) -> ExpansionCertificate:
    if r <= 0:
        raise ValueError("radius must be positive")
    threshold = (abs(complex(a)) + 1.0) * r
    try:
        wind = winding_number(f, 0j, r)
    except InconclusiveContour:
        sample_count = min_samples
        min_mod = min_modulus_on_circle(f, 0j, r, sample_count)
        return ExpansionCertificate(
            min_modulus=min_mod,
            threshold=threshold,
            degree=None,
            valid=False,
            conclusive=False,
            entropy_lower=None,
            samples=sample_count,
        )
    sample_count = max(wind.samples, min_samples)
    min_mod = min_modulus_on_circle(f, 0j, r, sample_count)
    valid = min_mod > threshold and wind.value >= 1
    return ExpansionCertificate(
        min_modulus=min_mod,
        threshold=threshold,
        degree=wind.value,
        valid=valid,
        conclusive=True,
        entropy_lower=math.log(wind.value) if valid else None,
        samples=sample_count,
    )


# Biholomorphic preimage tests and transition tables -------------------

YES = "yes"
NO = "no"
INCONCLUSIVE = "inconclusive"


def _polar_grid(center: complex, radius: float, n_r: int, n_theta: int) -> np.ndarray:
    """Deterministic polar sample of the disk, strictly inside the
    closed disk (largest ring at radius (n_r-1)/n_r) so that boundary
    preimages of an exact biholomorphism stay off the source contour."""
    pts = [center]
    for j in range(1, n_r):
        rho = radius * j / n_r
        ang = np.arange(n_theta) * (2.0 * np.pi / n_theta)
        pts.extend(center + rho * np.exp(1j * ang))
    return np.asarray(pts, dtype=complex)


def _batch_windings(
    f: EntireFunction,
    center: complex,
    radius: float,
    about: np.ndarray,
    chunk: int = 64,
) -> tuple[np.ndarray, np.ndarray]:
    """Winding numbers of f - w for many w over one contour.

    Returns (values, conclusive). Refinement is shared per chunk up to
    a vector cap; stragglers fall back to the scalar path.
    """
    about = np.asarray(about, dtype=complex)
    values = np.zeros(about.shape[0], dtype=int)
    conclusive = np.zeros(about.shape[0], dtype=bool)
    contour_cache: dict[int, np.ndarray] = {}

    def contour_vals(m: int) -> np.ndarray:
        if m not in contour_cache:
            contour_cache[m] = evaluate_grid(f, _circle(center, radius, m))
        return contour_cache[m]

    for lo in range(0, about.shape[0], chunk):
        idx = np.arange(lo, min(lo + chunk, about.shape[0]))
        pending = idx
        m = _START_SAMPLES
        while pending.size and m <= _VECTOR_CAP:
            base = contour_vals(m)
            if not np.isfinite(base).all():
                break
            vals = base[None, :] - about[pending][:, None]
            closed = np.concatenate([vals, vals[:, :1]], axis=1)
            mods = np.abs(closed)
            scale = mods.max(axis=1)
            bad = (scale == 0.0) | (
                mods.min(axis=1) <= _NEAR_ZERO_FACTOR * scale
            )
            inc = np.angle(closed[:, 1:] * np.conj(closed[:, :-1]))
            settled = (np.abs(inc).max(axis=1) < 0.5 * np.pi) & ~bad
            if settled.any():
                totals = inc[settled].sum(axis=1) / (2.0 * np.pi)
                rounded = np.round(totals).astype(int)
                ok = np.abs(totals - rounded) <= _MAX_RESIDUAL
                done = pending[settled]
                values[done[ok]] = rounded[ok]
                conclusive[done[ok]] = True
                pending = np.concatenate([pending[~settled], done[~ok]])
                pending.sort()
            m *= 2
        for i in pending:
            try:
                res = winding_number(f, center, radius, about=complex(about[i]))
            except InconclusiveContour:
                continue
            values[i] = res.value
            conclusive[i] = True
    return values, conclusive


def biholo_preimage_test(
    f: EntireFunction,
    source_center: complex,
    source_radius: float,
    target_center: complex,
    target_radius: float,
    n_r: int = 21,
    n_theta: int = 21,
) -> str:
    """Does f map some subdomain of the source disk biholomorphically
    onto the target disk?

    Certified by the argument principle on a polar grid of target
    values: every sampled w must have exactly one f-preimage in the
    source disk. Any conclusive count other than one answers no; an
    inconclusive contour with no conclusive counterexample answers
    inconclusive.
    """
    if source_radius <= 0 or target_radius <= 0:
        raise ValueError("radii must be positive")
    ws = _polar_grid(target_center, target_radius, n_r, n_theta)
    values, conclusive = _batch_windings(f, source_center, source_radius, ws)
    if (conclusive & (values != 1)).any():
        return NO
    if not conclusive.all():
        return INCONCLUSIVE
    return YES


@dataclass(frozen=True)
class TransitionTable:
    """Which target disks admit one-to-one preimages in which sources.

    allowed[i][l] lists the indices j such that the disk of radius
    big_radius around centers[j] + a * centers[l] has a certified
    biholomorphic preimage under f inside the disk of radius
    small_radius around centers[i]. inconclusive[i][l] lists indices
    whose test did not settle either way.
    """

    centers: tuple[complex, ...]
    small_radius: float
    big_radius: float
    a: complex
    allowed: tuple[tuple[tuple[int, ...], ...], ...]
    inconclusive: tuple[tuple[tuple[int, ...], ...], ...]

    @property
    def k(self) -> int:
        return len(self.centers)


def transition_min_cardinality(table: TransitionTable) -> int:
    return min(len(cell) for row in table.allowed for cell in row)


def dominated_cells(table: TransitionTable) -> tuple[tuple[int, int], ...]:
    """Cells (i, l) where unsettled tests outnumber certified ones;
    a nonempty result means the minimum cardinality is not trustworthy
    and the geometry or grid density should change."""
    out = []
    for i, (arow, irow) in enumerate(zip(table.allowed, table.inconclusive)):
        for l, (acell, icell) in enumerate(zip(arow, irow)):
            if len(icell) > len(acell):
                out.append((i, l))
    return tuple(out)


def _validate_table_geometry(centers, r: float, R: float, a: complex):
    if not 0 < r < R:
        raise ValueError("need 0 < r < R")
    if abs(a) * r >= R - r:
        raise ValueError("need |a| r < R - r")
    k = len(centers)
    if k < 1:
        raise ValueError("need at least one center")
    for i in range(k):
        for j in range(i + 1, k):
            if abs(centers[i] - centers[j]) <= 2.0 * R:
                raise ValueError(
                    f"closed target disks around centers {i} and {j} are not disjoint"
                )


def _table_row(args) -> tuple[list[list[int]], list[list[int]]]:
    f_text, i, centers, r, R, a, n_r, n_theta = args
    from .expressions import parse_text

    f = parse_text(f_text)
    k = len(centers)
    allowed_row: list[list[int]] = []
    inconclusive_row: list[list[int]] = []
    for l in range(k):
        hits: list[int] = []
        unsettled: list[int] = []
        for j in range(k):
            verdict = biholo_preimage_test(
                f, centers[i], r, centers[j] + a * centers[l], R, n_r, n_theta
            )
            if verdict == YES:
                hits.append(j)
            elif verdict == INCONCLUSIVE:
                unsettled.append(j)
        allowed_row.append(hits)
        inconclusive_row.append(unsettled)
    return allowed_row, inconclusive_row


def build_transition_table(
    f: EntireFunction,
    a: complex,
    centers,
    small_radius: float,
    big_radius: float,
    n_r: int = 21,
    n_theta: int = 21,
    threads: int = 1,
) -> TransitionTable:
    """Run the full k x k x k battery of preimage tests.

    Raises ValueError when the geometry violates the standing
    assumptions (disjoint closed target disks, 0 < r < R, |a| r < R - r).
    """
    centers = tuple(complex(c) for c in centers)
    a = complex(a)
    _validate_table_geometry(centers, small_radius, big_radius, a)
    from .expressions import to_text

    args = [
        (to_text(f), i, centers, small_radius, big_radius, a, n_r, n_theta)
        for i in range(len(centers))
    ]
    if threads > 1 and len(centers) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_table_row, args))
    else:
        rows = [_table_row(arg) for arg in args]
    allowed = tuple(tuple(tuple(cell) for cell in row[0]) for row in rows)
    inconclusive = tuple(tuple(tuple(cell) for cell in row[1]) for row in rows)
    return TransitionTable(
        centers=centers,
        small_radius=small_radius,
        big_radius=big_radius,
        a=a,
        allowed=allowed,
        inconclusive=inconclusive,
    )


def table_to_json(table: TransitionTable) -> str:
    doc = {
        "k": table.k,
        "centers": [[c.real, c.imag] for c in table.centers],
        "r": table.small_radius,
        "R": table.big_radius,
        "a": [table.a.real, table.a.imag],
        "allowed": [[list(cell) for cell in row] for row in table.allowed],
        "inconclusive": [
            [list(cell) for cell in row] for row in table.inconclusive
        ],
        "min_cardinality": transition_min_cardinality(table),
        "dominated": [list(cell) for cell in dominated_cells(table)],
    }
    return json.dumps(doc, sort_keys=True, indent=2)


def table_from_json(text: str) -> TransitionTable:
    doc = json.loads(text)
    return TransitionTable(
        centers=tuple(complex(c[0], c[1]) for c in doc["centers"]),
        small_radius=float(doc["r"]),
        big_radius=float(doc["R"]),
        a=complex(doc["a"][0], doc["a"][1]),
        allowed=tuple(
            tuple(tuple(int(j) for j in cell) for cell in row)
            for row in doc["allowed"]
        ),
        inconclusive=tuple(
            tuple(tuple(int(j) for j in cell) for cell in row)
            for row in doc["inconclusive"]
        ),
    )


# Rescaled family probe ------------------------------------------------


@dataclass(frozen=True)
class ProbeRow:
    n: int
    min_modulus: float
    winding: int | None
    conclusive: bool
    passed: bool


@dataclass(frozen=True)
class ProbeReport:
    rows: tuple[ProbeRow, ...]
    first_passing: int | None
    degree: int
    big_radius: float

    def to_csv(self) -> str:
        lines = ["n,min_modulus,winding,pass"]
        for row in self.rows:
            wind = "" if row.winding is None else str(row.winding)
            lines.append(f"{row.n},{row.min_modulus!r},{wind},{int(row.passed)}")
        return "\n".join(lines) + "\n"


def rescaled_family_probe(
    f: EntireFunction,
    small_radius: float,
    big_radius: float,
    degree: int,
    n_start: int,
    n_end: int,
    min_samples: int = 4096,
) -> ProbeReport:
    """Scan the rescaled family f_n(z) = f(n z)/n for eventual expansion.

    A member passes at n when its minimum modulus on the circle of
    small_radius reaches big_radius and its winding degree is at least
    `degree`. The modulus comparison is closed with a 1e-12 relative
    slack: the canonical scan f = z^2, r = 1/2, R = 10 crosses exactly
    at n = 40 where the minimum modulus equals R in exact arithmetic,
    and sampled points sit an ulp below that; the slack makes the
    crossing index a reproducible integer instead of a roundoff coin
    flip while staying far under any modulus gap of interest.

    first_passing is the smallest n from which every scanned member
    passes, or None when the final member still fails.
    """
    if not 1 <= n_start <= n_end:
        raise ValueError("need 1 <= n_start <= n_end")
    if degree < 1:
        raise ValueError("degree must be at least 1")
    rows: list[ProbeRow] = []
    for n in range(n_start, n_end + 1):
        fn = rescale(f, n)
        winding: int | None = None
        conclusive = True
        samples = min_samples
        try:
            wind = winding_number(fn, 0j, small_radius)
            winding = wind.value
            samples = max(wind.samples, min_samples)
        except InconclusiveContour:
            conclusive = False
        min_mod = min_modulus_on_circle(fn, 0j, small_radius, samples)
        passed = (
            conclusive
            and min_mod >= big_radius * (1.0 - 1e-12)
            and winding >= degree
        )
        rows.append(
            ProbeRow(
                n=n,
                min_modulus=min_mod,
                winding=winding,
                conclusive=conclusive,
                passed=passed,
            )
        )
    first_passing: int | None = None
    if rows[-1].passed:
        first_passing = rows[-1].n
        for row in reversed(rows):
            if not row.passed:
                break
            first_passing = row.n
    return ProbeReport(
        rows=tuple(rows),
        first_passing=first_passing,
        degree=degree,
        big_radius=big_radius,
    )
