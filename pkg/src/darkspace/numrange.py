"""Rank-k numerical ranges and explicit compression constructions.

The rank-k numerical range of an operator ``T`` is the set of scalars
``lam`` for which a k-dimensional subspace exists with
``C^dag T C = lam * 1_k`` (``C`` the isometry onto the subspace).  Membership
is certified constructively: every point this module claims is attainable
comes with an isometry and a max-norm residual.

For Hermitian ``T`` the range is the closed interval
``[x_k, x_{n+1-k}]`` of the ascending spectrum, and interior points are
reached by pairing low eigenvectors with high ones, two per code dimension.
For unitaries only partial machinery exists:

* an exact rank-2 construction in dimension 4 from the intersection of the
  two chords joining phase-alternating eigenvalues, and
* an intersection-of-hulls *outer* bound for general ``k`` (every spectral
  subset of size ``n + 1 - k`` must see the point inside its convex hull).

``joint_compression`` searches for one subspace that simultaneously
compresses a whole commuting family to scalars, which is exactly what a dark
code does to the POVM of a channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import (
    CertificateError,
    DegeneratePairMismatchError,
    DegenerateSpectrumError,
    LambdaOutOfRangeError,
    NotFoundError,
    ParallelChordsError,
    ShapeMismatchError,
)
from .linalg import (
    DEFAULT_TOL,
    Isometry,
    eig_hermitian,
    eig_unitary,
    max_abs,
    require_square,
    simultaneous_diagonalization,
)

#: Geometry predicates (orientation, clipping) use this absolute tolerance.
GEOM_TOL = 1e-12

#: Phase clusters tighter than this count as one (degenerate) eigenvalue.
PHASE_DEGENERACY = 1e-8

#: Exhaustive grouping search is attempted only up to this many eigenvalues.
EXHAUSTIVE_LIMIT = 12


@dataclass(frozen=True)
class RealInterval:
    """Closed interval ``[lo, hi]``; ``empty`` when ``lo > hi``."""

    lo: float
    hi: float

    @property
    def empty(self) -> bool:
        return self.lo > self.hi

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return (not self.empty) and (self.lo - tol <= x <= self.hi + tol)


@dataclass(frozen=True)
class PlanarRegion:
    """Convex region in the complex plane, possibly degenerate.

    ``kind`` is one of ``"empty"``, ``"point"``, ``"segment"`` or
    ``"polygon"``; ``vertices`` holds 0, 1, 2 or >= 3 complex numbers
    (counter-clockwise for polygons).  ``inner_points`` lists scalars that
    were additionally certified attainable by an explicit compression; the
    region itself is only an outer bound.
    """

    kind: str
    vertices: np.ndarray
    inner_points: tuple = field(default_factory=tuple)

    def __post_init__(self):
        self.vertices.setflags(write=False)

    @property
    def empty(self) -> bool:
        return self.kind == "empty"

    def contains(self, z: complex, tol: float = 1e-9) -> bool:
        """Whether ``z`` lies in the region (within ``tol``)."""
        if self.kind == "empty":
            return False
        if self.kind == "point":
            return abs(z - self.vertices[0]) <= tol
        if self.kind == "segment":
            return _segment_distance(z, self.vertices[0], self.vertices[1]) <= tol
        verts = self.vertices
        m = len(verts)
        for i in range(m):
            u, v = verts[i], verts[(i + 1) % m]
            if _cross(v - u, z - u) < -tol:
                return False
        return True


@dataclass(frozen=True)
class CompressionCertificate:
    """Constructive proof that ``C^dag T C = value * 1`` up to ``residual``."""

    isometry: Isometry
    value: complex
    residual: float


def certify_compression(operator, isometry: Isometry, value: complex,
                        tol: float = DEFAULT_TOL) -> CompressionCertificate:
    """Build a certificate, measuring and gating the compression residual."""
    residual = max_abs(isometry.compress(operator) - value * np.eye(isometry.code_dim))
    if residual > tol:
        raise CertificateError(
            f"compression residual {residual:.3e} exceeds tol {tol:.3e}"
        )
    return CompressionCertificate(isometry=isometry, value=complex(value), residual=residual)


# ---------------------------------------------------------------------------
# Hermitian operators


def hermitian_rank_range(t, k: int, tol: float = DEFAULT_TOL) -> RealInterval:
    """Rank-k numerical range of a Hermitian matrix.

    Equals ``[x_k, x_{n+1-k}]`` for the ascending spectrum ``x_1 <= ... <=
    x_n`` (1-based); the interval is empty when the endpoints cross, which
    happens generically once ``k`` exceeds ``(n+1)/2``.
    """
    dec = eig_hermitian(t, tol)
    n = dec.values.shape[0]
    if not 1 <= k <= n:
        raise ShapeMismatchError(f"k must be in 1..{n}, got {k}")
    return RealInterval(lo=float(dec.values[k - 1]), hi=float(dec.values[n - k]))


def hermitian_compression(t, k: int, value: float, pairing: str = "mirror",
                          tol: float = DEFAULT_TOL) -> CompressionCertificate:
    """Isometry compressing Hermitian ``t`` to ``value * 1_k``.

    Code vector ``m`` mixes one low eigenvector with one high one,
    ``cos(theta) phi_lo + sin(theta) phi_hi`` with
    ``sin^2(theta) = (value - x_lo) / (x_hi - x_lo)``.

    Parameters
    ----------
    pairing : {"mirror", "offset"}
        ``"mirror"`` pairs eigenvalue ``m`` with ``n+1-m`` (always legal for
        ``value`` inside the rank-k range); ``"offset"`` pairs ``m`` with
        ``m+k`` which needs ``2k <= n`` and may reject interior values.

    Raises
    ------
    LambdaOutOfRangeError
        If ``value`` lies outside the rank-k interval, or a pair of the
        chosen pairing cannot represent it.
    DegeneratePairMismatchError
        If a degenerate pair (``x_lo = x_hi``) is asked for a different value.
    """
    dec = eig_hermitian(t, tol)
    x, vecs = dec.values, dec.vectors
    n = x.shape[0]
    if not 1 <= k <= (n + 1) // 2:
        raise ShapeMismatchError(f"k must be in 1..{(n + 1) // 2} for dimension {n}, got {k}")
    lam = float(np.real(value))
    interval = RealInterval(lo=float(x[k - 1]), hi=float(x[n - k]))
    if interval.empty or not interval.contains(lam, tol):
        raise LambdaOutOfRangeError(
            f"value {lam!r} outside rank-{k} range [{interval.lo!r}, {interval.hi!r}]"
        )
    lam = min(max(lam, interval.lo), interval.hi)

    if pairing == "mirror":
        pairs = [(m, n - 1 - m) for m in range(k)]
    elif pairing == "offset":
        if 2 * k > n:
            raise ShapeMismatchError("offset pairing needs 2k <= n")
        pairs = [(m, m + k) for m in range(k)]
    else:
        raise ValueError(f"unknown pairing {pairing!r}")

    columns = []
    scale = max(1.0, max_abs(x))
    for lo_i, hi_i in pairs:
        x_lo, x_hi = float(x[lo_i]), float(x[hi_i])
        gap = x_hi - x_lo
        if lo_i == hi_i or gap <= tol * scale:
            # Degenerate pair: only the eigenvalue itself is representable.
            if abs(lam - x_lo) > max(tol * scale, gap):
                raise DegeneratePairMismatchError(
                    f"pair ({lo_i + 1}, {hi_i + 1}) is degenerate at {x_lo!r}, "
                    f"cannot represent {lam!r}"
                )
            columns.append(vecs[:, lo_i])
            continue
        s2 = (lam - x_lo) / gap
        if s2 < -tol / gap or s2 > 1.0 + tol / gap:
            raise LambdaOutOfRangeError(
                f"pair ({lo_i + 1}, {hi_i + 1}) = [{x_lo!r}, {x_hi!r}] "
                f"cannot represent {lam!r}"
            )
        s2 = min(max(s2, 0.0), 1.0)
        theta = np.arcsin(np.sqrt(s2))
        columns.append(np.cos(theta) * vecs[:, lo_i] + np.sin(theta) * vecs[:, hi_i])

    iso = Isometry(np.column_stack(columns))
    return certify_compression(t, iso, lam, tol=max(tol, 10 * tol * scale))


# ---------------------------------------------------------------------------
# unitary operators


def _circular_gaps(phases: np.ndarray) -> np.ndarray:
    ordered = np.sort(np.mod(phases, 2.0 * np.pi))
    gaps = np.diff(ordered)
    wrap = 2.0 * np.pi - (ordered[-1] - ordered[0])
    return np.append(gaps, wrap)


def _chord_intersection(z_a0, z_a1, z_b0, z_b1):
    """Intersection of the lines through (z_a0, z_a1) and (z_b0, z_b1).

    Returns ``(lam, a, b)`` with ``lam = z_a0 + a (z_a1 - z_a0)`` or ``None``
    when the chords are numerically parallel.
    """
    d1 = z_a1 - z_a0
    d2 = z_b1 - z_b0
    det = d1.real * d2.imag - d1.imag * d2.real
    if abs(det) <= GEOM_TOL * max(1.0, abs(d1) * abs(d2)):
        return None
    rhs = z_b0 - z_a0
    a = (rhs.real * d2.imag - rhs.imag * d2.real) / det
    b = (rhs.real * d1.imag - rhs.imag * d1.real) / det
    return z_a0 + a * d1, a, b


def unitary_rank2_compression(u, tol: float = DEFAULT_TOL) -> CompressionCertificate:
    """Rank-2 compression of a 4x4 unitary with non-degenerate spectrum.

    With the eigenvalues ``z_1..z_4`` ordered by phase, the chords
    ``z_1 z_3`` and ``z_2 z_4`` interleave on the circle; their intersection
    ``lam`` is reached by mixing eigenvector 1 with 3 and 2 with 4 using the
    affine weights along each chord.

    Raises
    ------
    DegenerateSpectrumError
        If two eigenphases coincide to within ``tol`` (use the degenerate
        eigenspace directly in that case; no chords are needed).
    ParallelChordsError
        If both chord pairings are numerically parallel.
    LambdaOutOfRangeError
        If a fallback pairing places the intersection outside a chord.
    """
    dec = eig_unitary(u, tol)
    if dec.values.shape[0] != 4:
        raise ShapeMismatchError("chord construction is specific to dimension 4")
    z = dec.values
    if np.min(_circular_gaps(np.angle(z))) <= max(tol, 1e-14):
        raise DegenerateSpectrumError("spectrum has a (near-)degenerate phase pair")

    pairings = [((0, 2), (1, 3)), ((0, 3), (1, 2))]
    hit = None
    for (i0, i1), (j0, j1) in pairings:
        result = _chord_intersection(z[i0], z[i1], z[j0], z[j1])
        if result is not None:
            hit = ((i0, i1), (j0, j1), result)
            break
    if hit is None:
        raise ParallelChordsError("both chord pairings are parallel")
    (i0, i1), (j0, j1), (lam, a, b) = hit
    slack = 100.0 * max(tol, 1e-12)
    if not (-slack <= a <= 1.0 + slack and -slack <= b <= 1.0 + slack):
        raise LambdaOutOfRangeError(
            f"chord weights ({a!r}, {b!r}) fall outside [0, 1]"
        )
    a = min(max(a, 0.0), 1.0)
    b = min(max(b, 0.0), 1.0)

    vecs = dec.vectors
    theta1 = np.arcsin(np.sqrt(a))
    theta2 = np.arcsin(np.sqrt(b))
    psi1 = np.cos(theta1) * vecs[:, i0] + np.sin(theta1) * vecs[:, i1]
    psi2 = np.cos(theta2) * vecs[:, j0] + np.sin(theta2) * vecs[:, j1]
    iso = Isometry(np.column_stack([psi1, psi2]))
    return certify_compression(u, iso, lam, tol=max(tol, 100 * tol))


# --- convex geometry (private): hulls, half-planes, clipping ----------------


def _cross(a: complex, b: complex) -> float:
    return a.real * b.imag - a.imag * b.real


def _segment_distance(z: complex, p: complex, q: complex) -> float:
    d = q - p
    denom = abs(d) ** 2
    if denom <= GEOM_TOL:
        return abs(z - p)
    t = ((z - p).real * d.real + (z - p).imag * d.imag) / denom
    t = min(max(t, 0.0), 1.0)
    return abs(z - (p + t * d))


def _dedupe(points, tol: float):
    out = []
    for p in points:
        if all(abs(p - q) > tol for q in out):
            out.append(p)
    return out


def _halfplanes_of_hull(points):
    """Half-planes ``n . (x, y) <= c`` whose intersection is the convex hull.

    Degenerate hulls (segments and single points) are pinned by opposing
    half-plane pairs, so the caller can treat every subset uniformly.
    """
    pts = _dedupe([complex(p) for p in points], 10 * GEOM_TOL)
    if len(pts) == 1:
        p = pts[0]
        return [((1.0, 0.0), p.real), ((-1.0, 0.0), -p.real),
                ((0.0, 1.0), p.imag), ((0.0, -1.0), -p.imag)]
    hull = _convex_hull(pts)
    planes = []
    if len(hull) == 2:
        p, q = hull
        d = q - p
        nrm = abs(d)
        n_line = (d.imag / nrm, -d.real / nrm)
        c_line = n_line[0] * p.real + n_line[1] * p.imag
        planes.append((n_line, c_line))
        planes.append(((-n_line[0], -n_line[1]), -c_line))
        # caps perpendicular to the segment at both endpoints
        t = (d.real / nrm, d.imag / nrm)
        planes.append((t, t[0] * q.real + t[1] * q.imag))
        planes.append(((-t[0], -t[1]), -(t[0] * p.real + t[1] * p.imag)))
        return planes
    m = len(hull)
    for i in range(m):
        a, b = hull[i], hull[(i + 1) % m]
        d = b - a
        n = (d.imag, -d.real)
        planes.append((n, n[0] * a.real + n[1] * a.imag))
    return planes


def _convex_hull(pts):
    """Monotone-chain hull, counter-clockwise; collinear inputs collapse to 2 points."""
    pts = sorted(pts, key=lambda p: (p.real, p.imag))

    def build(seq):
        chain = []
        for p in seq:
            while len(chain) >= 2 and _cross(chain[-1] - chain[-2], p - chain[-2]) <= GEOM_TOL:
                chain.pop()
            chain.append(p)
        return chain

    lower = build(pts)
    upper = build(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 2:
        return pts[:1] + pts[-1:]
    return hull


def _clip_halfplane(poly, normal, offset):
    """One Sutherland-Hodgman pass of a convex (possibly flat) polygon."""
    nx, ny = normal
    out = []
    m = len(poly)
    for i in range(m):
        cur = poly[i]
        nxt = poly[(i + 1) % m]
        d_cur = nx * cur.real + ny * cur.imag - offset
        d_nxt = nx * nxt.real + ny * nxt.imag - offset
        if d_cur <= GEOM_TOL:
            out.append(cur)
        if (d_cur < -GEOM_TOL and d_nxt > GEOM_TOL) or (d_cur > GEOM_TOL and d_nxt < -GEOM_TOL):
            t = d_cur / (d_cur - d_nxt)
            out.append(cur + t * (nxt - cur))
    return _dedupe(out, 10 * GEOM_TOL)


def _canonical_region(poly, inner_points=()) -> PlanarRegion:
    pts = _dedupe(poly, 1e-9)
    if not pts:
        return PlanarRegion("empty", np.array([], dtype=complex), tuple(inner_points))
    if len(pts) == 1:
        return PlanarRegion("point", np.array(pts, dtype=complex), tuple(inner_points))
    if len(pts) > 2:
        # collapse numerically collinear results to a segment
        p0 = pts[0]
        direction = max((p - p0 for p in pts[1:]), key=abs)
        direction /= abs(direction)
        if all(abs(_cross(direction, p - p0)) <= 1e-9 for p in pts):
            proj = [(p - p0).real * direction.real + (p - p0).imag * direction.imag for p in pts]
            pts = [p0 + min(proj) * direction, p0 + max(proj) * direction]
    if len(pts) == 2:
        return PlanarRegion("segment", np.array(pts, dtype=complex), tuple(inner_points))
    return PlanarRegion("polygon", np.array(pts, dtype=complex), tuple(inner_points))


def unitary_rank_range_outer(u, k: int, tol: float = DEFAULT_TOL) -> PlanarRegion:
    """Outer bound on the rank-k numerical range of a unitary.

    Intersects the convex hulls of all spectral subsets of size
    ``n + 1 - k``: any attainable scalar must lie in every such hull.  The
    result is an OUTER estimate; points listed in ``inner_points`` were
    additionally certified attainable by an explicit construction (degenerate
    eigenvalue of multiplicity >= k, or the 4x4 rank-2 chord intersection).
    """
    dec = eig_unitary(u, tol)
    n = dec.values.shape[0]
    if not 1 <= k <= n:
        raise ShapeMismatchError(f"k must be in 1..{n}, got {k}")
    z = [complex(v) for v in dec.values]

    region_poly = [complex(-2, -2), complex(2, -2), complex(2, 2), complex(-2, 2)]
    for subset in combinations(range(n), n + 1 - k):
        for normal, offset in _halfplanes_of_hull([z[i] for i in subset]):
            region_poly = _clip_halfplane(region_poly, normal, offset)
            if not region_poly:
                break
        if not region_poly:
            break

    inner = []
    phases = np.angle(z)
    used = np.zeros(n, dtype=bool)
    for i in range(n):
        if used[i]:
            continue
        cluster = [j for j in range(n)
                   if abs(np.exp(1j * phases[j]) - np.exp(1j * phases[i])) <= PHASE_DEGENERACY]
        for j in cluster:
            used[j] = True
        if len(cluster) >= k:
            inner.append(z[i])
    if k == 2 and n == 4 and not inner:
        try:
            inner.append(unitary_rank2_compression(u, tol).value)
        except (DegenerateSpectrumError, ParallelChordsError, LambdaOutOfRangeError):
            pass
    return _canonical_region(region_poly, inner_points=tuple(inner))


# ---------------------------------------------------------------------------
# joint compressions of commuting families


def _solve_grouping(diags, groups, tol: float):
    """Weights and shared values making every group average to the same scalars.

    ``diags[m][j]`` is the eigenvalue of operator ``m`` on basis column ``j``;
    ``groups`` is a tuple of disjoint index tuples, one per code dimension.
    Returns ``(weights_per_group, values)`` or ``None``.
    """
    n_ops = len(diags)
    k = len(groups)
    size = len(groups[0])
    n_w = k * size
    # unknowns: weights (k*size reals), then Re/Im of each shared value
    rows = []
    rhs = []
    for g, group in enumerate(groups):
        for m in range(n_ops):
            t = np.array([diags[m][j] for j in group])
            row_re = np.zeros(n_w + 2 * n_ops)
            row_re[g * size : (g + 1) * size] = t.real
            row_re[n_w + 2 * m] = -1.0
            rows.append(row_re)
            rhs.append(0.0)
            row_im = np.zeros(n_w + 2 * n_ops)
            row_im[g * size : (g + 1) * size] = t.imag
            row_im[n_w + 2 * m + 1] = -1.0
            rows.append(row_im)
            rhs.append(0.0)
        norm_row = np.zeros(n_w + 2 * n_ops)
        norm_row[g * size : (g + 1) * size] = 1.0
        rows.append(norm_row)
        rhs.append(1.0)
    a = np.array(rows)
    b = np.array(rhs)
    solution, *_ = np.linalg.lstsq(a, b, rcond=None)
    if not np.all(np.isfinite(solution)):
        return None
    residual = max_abs(a @ solution - b)
    if residual > max(100.0 * tol, 1e-10):
        return None
    weights = solution[:n_w].reshape(k, size)
    if np.any(weights < -100.0 * tol) or np.any(weights > 1.0 + 100.0 * tol):
        return None
    weights = np.clip(weights, 0.0, None)
    weights /= weights.sum(axis=1, keepdims=True)
    values = solution[n_w::2] + 1j * solution[n_w + 1 :: 2]
    return weights, values


def _partitions_into_groups(subset, size):
    """All partitions of ``subset`` into groups of ``size``, lexicographically."""
    if not subset:
        yield ()
        return
    first, rest = subset[0], subset[1:]
    for others in combinations(rest, size - 1):
        group = (first,) + others
        remaining = [x for x in rest if x not in others]
        for tail in _partitions_into_groups(remaining, size):
            yield (group,) + tail


def joint_compression(ops, k: int, tol: float = DEFAULT_TOL):
    """Subspace compressing a commuting normal family to scalars.

    Searches for ``k`` disjoint groups of shared eigenvectors and one weight
    vector per group so that every operator averages to the same value on
    each group.  Tried in order: equal-weight mirror pairs on the canonically
    sorted spectrum, repeated eigenvalue columns (weight-1 singleton groups),
    then an exhaustive search over pair groupings and over triple groupings
    (the latter two only for dimension <= 12).

    Returns
    -------
    (Isometry, ndarray)
        The code isometry and the array of joint compression values, one per
        operator, for the first (lexicographically smallest) grouping found.

    Raises
    ------
    NotCommutingError
        If the family is not commuting-normal.
    NotFoundError
        If the search is exhausted without a valid grouping.
    """
    basis, raw_diags = simultaneous_diagonalization(ops, tol)
    n = basis.shape[0]
    if not 1 <= k <= n:
        raise ShapeMismatchError(f"k must be in 1..{n}, got {k}")
    n_ops = len(raw_diags)

    keys = [tuple(np.round([f(raw_diags[m][j]) for m in range(n_ops)
                            for f in (np.real, np.imag)], 9))
            for j in range(n)]
    order = sorted(range(n), key=lambda j: keys[j])
    basis = basis[:, order]
    diags = [d[order] for d in raw_diags]

    mats = [require_square(t) for t in ops]

    def assemble(groups, weights):
        columns = []
        for group, w in zip(groups, weights):
            col = np.zeros(n, dtype=complex)
            for j, wj in zip(group, w):
                col += np.sqrt(wj) * basis[:, j]
            columns.append(col)
        return Isometry(np.column_stack(columns))

    def verify(iso):
        values = []
        for t in mats:
            compressed = iso.compress(t)
            value = np.trace(compressed) / k
            if max_abs(compressed - value * np.eye(k)) > max(tol, 100 * tol):
                return None
            values.append(value)
        return np.array(values)

    candidates = []

    # 1. mirror pairing with equal weights on the sorted spectrum
    if 2 * k <= n:
        groups = tuple((g, n - 1 - g) for g in range(k))
        weights = np.full((k, 2), 0.5)
        candidates.append((groups, weights))

    # 2. singleton groups on a repeated eigenvalue column
    seen = {}
    for j in range(n):
        seen.setdefault(keys[j], []).append(j)
    for key in sorted(seen):
        if len(seen[key]) >= k:
            groups = tuple((j,) for j in seen[key][:k])
            candidates.append((groups, np.ones((k, 1))))

    for groups, weights in candidates:
        iso = assemble(groups, weights)
        values = verify(iso)
        if values is not None:
            return iso, values

    # 3./4. exhaustive search over pair and triple groupings
    if n <= EXHAUSTIVE_LIMIT:
        for size in (2, 3):
            if size * k > n:
                continue
            for used in combinations(range(n), size * k):
                for groups in _partitions_into_groups(list(used), size):
                    solved = _solve_grouping(diags, groups, tol)
                    if solved is None:
                        continue
                    weights, _ = solved
                    iso = assemble(groups, weights)
                    values = verify(iso)
                    if values is not None:
                        return iso, values
    raise NotFoundError(
        f"no joint rank-{k} compression found for {n_ops} operators in dimension {n}"
    )
