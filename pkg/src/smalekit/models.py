"""Concrete Smale-space models behind one uniform interface.

Two families: hyperbolic toral automorphisms (points are numpy arrays
with coordinates in [0,1)) and subshifts of finite type (points are
eventually-periodic bi-infinite words, represented exactly).

The bracket orientation is fixed so that {y : [x,y] = x} is the stable
plaque: on the torus [x,y] = x + P-(y~ - x~) mod 1 with P- the projection
onto the expanding subspace; on a shift [x,y] keeps x's symbols at k <= 0
and y's at k >= 0.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import linear
from .errors import Oversize, ValidationError

MAX_SAMPLE_POINTS = 2_000_000

# points within this distance of a leaf count as on it (torus samples)
LEAF_TOL = 1e-9


# ---------------------------------------------------------------------------
# toral systems


@dataclass
class ToralSystem:
    """Hyperbolic automorphism of the d-torus given by an integer matrix."""

    matrix: np.ndarray
    spectral_split: linear.SpectralSplit = field(repr=False, default=None)
    bracket_radius: float = 0.05

    def __post_init__(self):
        if self.spectral_split is None:
            self.spectral_split = linear.spectral_split(self.matrix)
        self.matrix = self.spectral_split.matrix
        if self.matrix.shape[0] < 2:
            raise ValidationError("torus dimension must be at least 2")
        if not (0 < self.bracket_radius <= 0.25):
            raise ValidationError("bracket_radius must lie in (0, 0.25]")
        self.matrix_inv = linear.int_inverse(self.matrix)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def kind(self):
        return "torus"


@dataclass
class ShiftSystem:
    """Subshift of finite type with an irreducible 0/1 transition matrix."""

    alphabet_size: int
    transitions: np.ndarray
    symbol_decay: float = math.log(2.0)

    def __post_init__(self):
        t = np.asarray(self.transitions, dtype=np.int8)
        if t.shape != (self.alphabet_size, self.alphabet_size):
            raise ValidationError("transition matrix shape must match alphabet size")
        if not np.all((t == 0) | (t == 1)):
            raise ValidationError("transition matrix entries must be 0/1")
        if self.symbol_decay <= 0:
            raise ValidationError("symbol_decay must be positive")
        self.transitions = t
        if not _irreducible(t):
            raise ValidationError("transition matrix must be irreducible")

    @property
    def kind(self):
        return "sft"

    def allowed(self, a, b):
        return bool(self.transitions[a, b])


def _irreducible(t):
    n = len(t)
    reach = (t > 0).astype(bool)
    power = reach.copy()
    acc = reach.copy()
    for _ in range(n - 1):
        power = power @ reach
        acc |= power
    return bool(acc.all())


@dataclass(frozen=True)
class SymbolicPoint:
    """Eventually periodic bi-infinite word.

    core[i] sits at position i - origin; positions left of the core
    repeat left_cycle (phase: its last symbol is just left of the core),
    positions right of it repeat right_cycle (phase: its first symbol is
    just right of the core).
    """

    left_cycle: tuple
    core: tuple
    right_cycle: tuple
    origin: int = 0

    def __post_init__(self):
        if not (0 <= self.origin < len(self.core)):
            raise ValidationError("origin must index into the core")
        if not self.left_cycle or not self.right_cycle:
            raise ValidationError("cycles must be non-empty")

    def symbol_at(self, p: int) -> int:
        i = p + self.origin
        if 0 <= i < len(self.core):
            return self.core[i]
        if i < 0:
            return self.left_cycle[i % len(self.left_cycle)]
        return self.right_cycle[(i - len(self.core)) % len(self.right_cycle)]

    def window(self, lo: int, hi: int) -> tuple:
        return tuple(self.symbol_at(p) for p in range(lo, hi + 1))

    def core_span(self):
        """Positions [lo, hi] covered by the explicit core."""
        return -self.origin, len(self.core) - self.origin - 1


def make_point(system: ShiftSystem, left_cycle, core, right_cycle, origin=0):
    """Validated SymbolicPoint constructor (checks every transition seam)."""
    pt = SymbolicPoint(tuple(left_cycle), tuple(core), tuple(right_cycle), origin)
    _validate_transitions(system, pt)
    return pt


def _validate_transitions(system, pt):
    lc, c, rc = pt.left_cycle, pt.core, pt.right_cycle
    pairs = list(zip(lc, lc[1:] + lc[:1]))
    pairs += [(lc[-1], c[0])]
    pairs += list(zip(c, c[1:]))
    pairs += [(c[-1], rc[0])]
    pairs += list(zip(rc, rc[1:] + rc[:1]))
    for a, b in pairs:
        if not (0 <= a < system.alphabet_size and 0 <= b < system.alphabet_size):
            raise ValidationError("symbol outside alphabet")
        if not system.allowed(a, b):
            raise ValidationError(f"forbidden transition {a} -> {b}")


def _expanded(pt: SymbolicPoint, lo: int, hi: int) -> SymbolicPoint:
    """Equivalent representation whose core covers at least [lo, hi]."""
    clo, chi = pt.core_span()
    lo = min(lo, clo)
    hi = max(hi, chi)
    p = len(pt.left_cycle)
    q = len(pt.right_cycle)
    left = tuple(pt.symbol_at(x) for x in range(lo - p, lo))
    right = tuple(pt.symbol_at(x) for x in range(hi + 1, hi + 1 + q))
    core = pt.window(lo, hi)
    return SymbolicPoint(left, core, right, origin=-lo)


def _first_disagreement(x: SymbolicPoint, y: SymbolicPoint):
    """Smallest |p| with x_p != y_p, or None when the points are equal."""
    bound = _equality_bound(x, y)
    for r in range(0, bound + 1):
        if x.symbol_at(r) != y.symbol_at(r):
            return r
        if r > 0 and x.symbol_at(-r) != y.symbol_at(-r):
            return r
    return None


def _equality_bound(x, y):
    # Two eventually periodic words agreeing on a window this wide agree
    # everywhere: it spans both cores plus an lcm of each pair of cycles.
    lo = min(x.core_span()[0], y.core_span()[0])
    hi = max(x.core_span()[1], y.core_span()[1])
    left = math.lcm(len(x.left_cycle), len(y.left_cycle))
    right = math.lcm(len(x.right_cycle), len(y.right_cycle))
    return max(abs(lo) + left, abs(hi) + right) + 1


def points_equal(system, x, y) -> bool:
    if isinstance(x, SymbolicPoint):
        return _first_disagreement(x, y) is None
    return bool(np.all(np.abs(_wrap(np.asarray(x) - np.asarray(y))) < 1e-12))


def _wrap(delta):
    """Difference vector wrapped to the nearest lattice translate."""
    return delta - np.round(delta)


def reduce_torus(coords):
    return np.mod(np.asarray(coords, dtype=float), 1.0)


# ---------------------------------------------------------------------------
# uniform operations


def iterate(system, point, k: int):
    """k-th iterate of the dynamics (k may be negative)."""
    if system.kind == "torus":
        x = reduce_torus(point)
        m = system.matrix if k >= 0 else system.matrix_inv
        for _ in range(abs(int(k))):
            x = np.mod(m.astype(float) @ x, 1.0)
        return x
    k = int(k)
    lo, hi = point.core_span()
    r = _expanded(point, min(lo, k), max(hi, k))
    return SymbolicPoint(r.left_cycle, r.core, r.right_cycle, r.origin + k)


def iterate_array(system: ToralSystem, points: np.ndarray, k: int):
    """Vectorized torus iteration of an (N, d) array of points."""
    x = np.mod(np.asarray(points, dtype=float), 1.0)
    m = (system.matrix if k >= 0 else system.matrix_inv).astype(float)
    for _ in range(abs(int(k))):
        x = np.mod(x @ m.T, 1.0)
    return x


def dist(system, x, y) -> float:
    """Metric: nearest-translate Euclidean norm (torus) or e^{-kappa m}
    with m the first disagreement index (shift)."""
    if system.kind == "torus":
        return float(np.linalg.norm(_wrap(np.asarray(x, float) - np.asarray(y, float))))
    m = _first_disagreement(x, y)
    if m is None:
        return 0.0
    return math.exp(-system.symbol_decay * m)


def orbit_distance(system, x, y, k: int) -> float:
    """dist(f^k x, f^k y), evaluated on the pair difference.

    For the linear torus models the separation of two orbits is
    wrap(M^k wrap(x - y)), which is exact; iterating the two orbits
    individually would drown the answer in exponentially amplified
    rounding noise beyond ~30 steps.
    """
    if system.kind == "torus":
        delta = _wrap(np.asarray(x, float) - np.asarray(y, float))
        m = (system.matrix if k >= 0 else system.matrix_inv).astype(float)
        for _ in range(abs(int(k))):
            delta = _wrap(m @ delta)
        return float(np.linalg.norm(delta))
    return dist(system, iterate(system, x, k), iterate(system, y, k))


def bracket(system, x, y):
    """Local product [x, y]; None when the pair is outside its domain."""
    if system.kind == "torus":
        xa = reduce_torus(x)
        delta = _wrap(np.asarray(y, float) - xa)
        if np.linalg.norm(delta) >= system.bracket_radius:
            return None
        return np.mod(xa + system.spectral_split.p_minus @ delta, 1.0)
    if x.symbol_at(0) != y.symbol_at(0):
        return None
    xe = _expanded(x, min(x.core_span()[0], -1), 0)
    ye = _expanded(y, 0, max(y.core_span()[1], 1))
    lo, _ = xe.core_span()
    _, hi = ye.core_span()
    core = xe.window(lo, 0) + ye.window(1, hi)
    return SymbolicPoint(xe.left_cycle, core, ye.right_cycle, origin=-lo)


# ---------------------------------------------------------------------------
# leaf samples


@dataclass
class LeafSample:
    """Finite net on a leaf patch through base_point."""

    side: str
    base_point: object
    points: list
    params: np.ndarray
    offsets: np.ndarray = None  # torus only: unwrapped leaf offsets, (N, d)
    kind: str = "ray"
    spacing: float = None
    window: float = None
    depth: int = None
    direction: np.ndarray = None

    def __len__(self):
        return len(self.points)

    def coords(self):
        """(N, d) array of torus coordinates."""
        return np.asarray(self.points, dtype=float)


def leaf_directions(system: ToralSystem, side: str):
    """Unit directions spanning the requested leaf subspace.

    Eigendirections (real/imaginary parts for complex pairs), ordered
    from slowest to fastest leaf-internal expansion, so rays along them
    see a single contraction rate each.
    """
    m = system.matrix.astype(float)
    w, v = np.linalg.eig(m)
    sel = np.abs(w) < 1.0 if side == "stable" else np.abs(w) > 1.0
    idx = np.flatnonzero(sel)
    # slowest leaf expansion first: stable moduli descending, unstable ascending
    key = -np.abs(w[idx]) if side == "stable" else np.abs(w[idx])
    idx = idx[np.argsort(key)]
    dirs = []
    used = set()
    for i in idx:
        if i in used:
            continue
        used.add(i)
        lam, vec = w[i], v[:, i]
        cands = [np.real(vec)]
        if abs(lam.imag) > 1e-12:
            j = int(np.argmin(np.abs(w - np.conj(lam))))
            used.add(j)
            cands.append(np.imag(vec))
        for cand in cands:
            norm = np.linalg.norm(cand)
            if norm < 1e-12:
                continue
            cand = cand / norm
            nz = np.flatnonzero(np.abs(cand) > 1e-12)
            if len(nz) and cand[nz[0]] < 0:
                cand = -cand
            dirs.append(cand)
    return dirs


def leaf_sample(
    system,
    base,
    side: str,
    window: float = None,
    spacing: float = None,
    depth: int = None,
    direction=None,
    max_points: int = MAX_SAMPLE_POINTS,
) -> LeafSample:
    """Finite net on the leaf of `base` on the given side.

    Torus: points base + t*v mod 1 for t in {-window, ..., window} with
    step `spacing` along the leaf direction(s); when the side subspace is
    two-dimensional and no explicit direction is given, a 2-D grid slice
    is sampled.  Shift: all points agreeing with base outside a window of
    `depth` symbols on the appropriate side, in lexicographic order.
    """
    if side not in ("stable", "unstable"):
        raise ValidationError("side must be 'stable' or 'unstable'")
    if system.kind == "torus":
        if window is None:
            raise ValidationError("torus samples need a window")
        if window < 0 or (window > 0 and (spacing is None or spacing <= 0)):
            raise ValidationError("torus samples need window >= 0 and spacing > 0")
        base = reduce_torus(base)
        dirs = leaf_directions(system, side)
        if direction is not None:
            direction = np.asarray(direction, dtype=float)
            direction = direction / np.linalg.norm(direction)
            dirs = [direction]
        if window == 0:
            offsets = np.zeros((1, system.dim))
            params = np.zeros(1)
            kind = "ray"
        elif len(dirs) == 1:
            steps = int(math.floor(window / spacing + 1e-9))
            if 2 * steps + 1 > max_points:
                raise Oversize(f"sample of {2 * steps + 1} points exceeds budget")
            params = np.arange(-steps, steps + 1) * spacing
            offsets = params[:, None] * dirs[0][None, :]
            kind = "ray"
        elif len(dirs) == 2:
            steps = int(math.floor(window / spacing + 1e-9))
            if (2 * steps + 1) ** 2 > max_points:
                raise Oversize("grid sample exceeds budget")
            ts = np.arange(-steps, steps + 1) * spacing
            t1, t2 = np.meshgrid(ts, ts, indexing="ij")
            offsets = t1.reshape(-1, 1) * dirs[0] + t2.reshape(-1, 1) * dirs[1]
            # grid points have no single arclength; params enumerate them
            params = np.arange(offsets.shape[0], dtype=float)
            kind = "grid"
        else:
            raise ValidationError(
                "leaf sampling supports 1- or 2-dimensional side subspaces; "
                "pass an explicit direction for higher dimensions"
            )
        points = np.mod(base[None, :] + offsets, 1.0)
        return LeafSample(
            side=side,
            base_point=base,
            points=points,
            params=params,
            offsets=offsets,
            kind=kind,
            spacing=spacing,
            window=window,
            direction=dirs[0] if kind == "ray" else None,
        )

    if depth is None or depth < 0:
        raise ValidationError("shift samples need depth >= 0")
    if system.alphabet_size**depth > max_points:
        raise Oversize("cylinder enumeration exceeds budget")
    if depth == 0:
        return LeafSample(side, base, [base], np.zeros(1), kind="cylinder", depth=0)
    if side == "stable":
        lo, hi = -depth, -1
        before, after = base.symbol_at(lo - 1), base.symbol_at(hi + 1)
    else:
        lo, hi = 1, depth
        before, after = base.symbol_at(lo - 1), base.symbol_at(hi + 1)
    ext = _expanded(base, lo - 1, hi + 1)
    points = []
    for word in itertools.product(range(system.alphabet_size), repeat=depth):
        if not system.allowed(before, word[0]) or not system.allowed(word[-1], after):
            continue
        if any(not system.allowed(a, b) for a, b in zip(word, word[1:])):
            continue
        clo, _ = ext.core_span()
        core = list(ext.core)
        for off, sym in enumerate(word):
            core[(lo + off) - clo] = sym
        points.append(
            SymbolicPoint(ext.left_cycle, tuple(core), ext.right_cycle, ext.origin)
        )
    params = np.arange(len(points), dtype=float)
    return LeafSample(side, base, points, params, kind="cylinder", depth=depth)


# ---------------------------------------------------------------------------
# system descriptions


def load_system(source):
    """Build a system from a JSON document, dict, or file path."""
    if isinstance(source, (str,)):
        with open(source, "r", encoding="utf-8") as fh:
            source = json.load(fh)
    if not isinstance(source, dict):
        raise ValidationError("system description must be a JSON object")
    kind = source.get("type")
    if kind == "torus":
        if "matrix" not in source:
            raise ValidationError("torus system needs a 'matrix' field")
        return ToralSystem(
            matrix=np.asarray(source["matrix"]),
            bracket_radius=float(source.get("bracket_radius", 0.05)),
        )
    if kind == "sft":
        missing = [k for k in ("alphabet", "transitions") if k not in source]
        if missing:
            raise ValidationError(f"sft system missing keys: {missing}")
        return ShiftSystem(
            alphabet_size=int(source["alphabet"]),
            transitions=np.asarray(source["transitions"]),
            symbol_decay=float(source.get("kappa", math.log(2.0))),
        )
    raise ValidationError("system 'type' must be 'torus' or 'sft'")


def default_base(system):
    """Canonical base point: the origin (torus) or a short periodic word."""
    if system.kind == "torus":
        return np.zeros(system.dim)
    for a in range(system.alphabet_size):
        if system.allowed(a, a):
            return make_point(system, (a,), (a,), (a,))
    for a in range(system.alphabet_size):
        for b in range(system.alphabet_size):
            if a != b and system.allowed(a, b) and system.allowed(b, a):
                return make_point(system, (a, b), (a, b), (a, b))
    raise ValidationError("no short periodic point found")
