"""Domain types shared by every module: delay configuration, piecewise
potentials, solution traces, spectra and characteristic-function tables.

All objects are immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import DomainError, SpectrumIncompleteError, ValidationError

PI = math.pi
# Absolute tolerance used when comparing abscissae (segment joins, grid nodes).
XTOL = 1e-12


def _as_complex_array(x) -> np.ndarray:
    return np.asarray(x, dtype=complex)


# ---------------------------------------------------------------------------
# Delay configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DelayConfig:
    """Delay length ``a`` together with its bracket index ``N``.

    ``N`` is the unique positive integer with ``pi/(N+1) <= a < pi/N``; it is
    also the number of non-trivial successive-approximation terms.
    """

    a: float
    N: int
    interval_length: float = field(default=PI, init=False)

    def __post_init__(self):
        if not (0.0 < self.a < PI):
            raise ValidationError(f"delay a = {self.a!r} must lie in the open interval (0, pi)")
        if self.N < 1 or _bracket_index(self.a) != self.N:
            raise ValidationError(f"N = {self.N} is not the bracket index of a = {self.a!r}")


def _bracket_index(a: float) -> int:
    r = PI / a
    nearest = round(r)
    if abs(r - nearest) <= 1e-12 * r:
        # a = pi/(k+1) up to rounding: closed left end of the bracket for N = k
        return int(nearest) - 1
    return int(math.ceil(r)) - 1


def make_delay_config(a: float) -> DelayConfig:
    """Validate ``a`` and compute its bracket index.

    Raises
    ------
    ValidationError
        If ``a`` is not in the open interval (0, pi).
    """
    a = float(a)
    if not (0.0 < a < PI) or not math.isfinite(a):
        raise ValidationError(f"delay a = {a!r} must lie in the open interval (0, pi)")
    return DelayConfig(a=a, N=_bracket_index(a))


# ---------------------------------------------------------------------------
# Segment shapes
# ---------------------------------------------------------------------------


class Shape:
    """A function of the absolute abscissa ``x`` used on one segment."""

    kind = "abstract"

    def __call__(self, x):  # pragma: no cover - interface
        raise NotImplementedError

    @property
    def is_zero(self) -> bool:
        return False

    def kinks(self) -> tuple:
        """Interior abscissae where the shape is not smooth."""
        return ()

    def scaled(self, s: complex) -> "Shape":  # pragma: no cover - interface
        raise NotImplementedError

    def to_json(self) -> dict:  # pragma: no cover - interface
        raise NotImplementedError


@dataclass(frozen=True)
class Zero(Shape):
    kind = "zero"

    def __call__(self, x):
        return np.zeros(np.shape(x), dtype=complex)

    @property
    def is_zero(self):
        return True

    def scaled(self, s):
        return self

    def to_json(self):
        return {"shape": "zero"}


@dataclass(frozen=True)
class Constant(Shape):
    value: complex
    kind = "constant"

    def __call__(self, x):
        return np.full(np.shape(x), complex(self.value), dtype=complex)

    @property
    def is_zero(self):
        return self.value == 0

    def scaled(self, s):
        return Constant(complex(self.value) * s)

    def to_json(self):
        return {"shape": "constant", "value": complex_to_json(self.value)}


@dataclass(frozen=True)
class Cosine(Shape):
    """``amplitude * cos(angular_frequency * x + phase)`` with absolute ``x``."""

    amplitude: complex
    angular_frequency: float
    phase: float = 0.0
    kind = "cosine"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return complex(self.amplitude) * np.cos(self.angular_frequency * x + self.phase)

    @property
    def is_zero(self):
        return self.amplitude == 0

    def scaled(self, s):
        return Cosine(complex(self.amplitude) * s, self.angular_frequency, self.phase)

    def to_json(self):
        return {
            "shape": "cosine",
            "amplitude": complex_to_json(self.amplitude),
            "angular_frequency": self.angular_frequency,
            "phase": self.phase,
        }


@dataclass(frozen=True)
class Samples(Shape):
    """Linear interpolation through ``(nodes[k], values[k])``."""

    nodes: tuple
    values: tuple
    kind = "samples"

    def __post_init__(self):
        if len(self.nodes) != len(self.values) or len(self.nodes) < 2:
            raise ValidationError("samples shape needs at least two nodes and one value per node")
        if np.any(np.diff(np.asarray(self.nodes, dtype=float)) <= 0):
            raise ValidationError("sample nodes must be strictly increasing")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        nodes = np.asarray(self.nodes, dtype=float)
        vals = np.asarray(self.values, dtype=complex)
        return np.interp(x, nodes, vals.real) + 1j * np.interp(x, nodes, vals.imag)

    @property
    def is_zero(self):
        return all(v == 0 for v in self.values)

    def kinks(self):
        return tuple(float(t) for t in self.nodes[1:-1])

    def scaled(self, s):
        return Samples(self.nodes, tuple(complex(v) * s for v in self.values))

    def to_json(self):
        return {
            "shape": "samples",
            "nodes": [float(t) for t in self.nodes],
            "values": [complex_to_json(v) for v in self.values],
        }


@dataclass(frozen=True)
class Legendre(Shape):
    """Legendre series ``sum c_k P_k(2 (x - lo)/(hi - lo) - 1)``."""

    coeffs: tuple
    lo: float
    hi: float
    kind = "legendre"

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValidationError("legendre shape needs hi > lo")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        u = 2.0 * (x - self.lo) / (self.hi - self.lo) - 1.0
        return npleg.legval(u, np.asarray(self.coeffs, dtype=complex))

    @property
    def is_zero(self):
        return all(c == 0 for c in self.coeffs)

    def scaled(self, s):
        return Legendre(tuple(complex(c) * s for c in self.coeffs), self.lo, self.hi)

    def to_json(self):
        return {
            "shape": "legendre",
            "coeffs": [complex_to_json(c) for c in self.coeffs],
            "lo": self.lo,
            "hi": self.hi,
        }


@dataclass(frozen=True)
class Sum(Shape):
    terms: tuple
    kind = "sum"

    def __call__(self, x):
        out = np.zeros(np.shape(x), dtype=complex)
        for t in self.terms:
            out = out + t(x)
        return out

    @property
    def is_zero(self):
        return all(t.is_zero for t in self.terms)

    def kinks(self):
        return tuple(sorted({k for t in self.terms for k in t.kinks()}))

    def scaled(self, s):
        return Sum(tuple(t.scaled(s) for t in self.terms))

    def to_json(self):
        return {"shape": "sum", "terms": [t.to_json() for t in self.terms]}


def add_shapes(f: Shape, g: Shape) -> Shape:
    if f.is_zero:
        return g
    if g.is_zero:
        return f
    if isinstance(f, Constant) and isinstance(g, Constant):
        return Constant(complex(f.value) + complex(g.value))
    terms = (f.terms if isinstance(f, Sum) else (f,)) + (g.terms if isinstance(g, Sum) else (g,))
    return Sum(terms)


# ---------------------------------------------------------------------------
# Piecewise functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    x0: float
    x1: float
    shape: Shape


@dataclass(frozen=True)
class PiecewiseFunction:
    """Complex function on [0, pi] given by shapes on consecutive segments.

    Segments are half-open ``[x0, x1)``; the last one also contains ``pi``.
    """

    segments: tuple

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        segs = self.segments
        if not segs:
            raise ValidationError("a piecewise function needs at least one segment")
        if abs(segs[0].x0) > XTOL or abs(segs[-1].x1 - PI) > XTOL:
            raise ValidationError(
                f"segments must cover [0, pi]; got [{segs[0].x0!r}, {segs[-1].x1!r}]"
            )
        for s in segs:
            if not s.x1 > s.x0:
                raise ValidationError(f"empty or reversed segment [{s.x0!r}, {s.x1!r})")
        for s, t in zip(segs, segs[1:]):
            if abs(s.x1 - t.x0) > XTOL:
                raise ValidationError(
                    f"segments [{s.x0!r}, {s.x1!r}) and [{t.x0!r}, {t.x1!r}) are not contiguous"
                )

    # construction helpers -------------------------------------------------

    @classmethod
    def zero(cls) -> "PiecewiseFunction":
        return cls((Segment(0.0, PI, Zero()),))

    @classmethod
    def from_pieces(cls, pieces: Iterable[tuple]) -> "PiecewiseFunction":
        """Build from ``(x0, x1, shape)`` triples; gaps are filled with zero."""
        pieces = sorted(((float(x0), float(x1), s) for x0, x1, s in pieces), key=lambda p: p[0])
        segs = []
        cursor = 0.0
        for x0, x1, shape in pieces:
            if x0 < cursor - XTOL:
                raise ValidationError(f"segment starting at {x0!r} overlaps the previous one")
            if x0 > cursor + XTOL:
                segs.append(Segment(cursor, x0, Zero()))
            else:
                x0 = cursor if segs else x0
            segs.append(Segment(x0, x1, shape))
            cursor = x1
        if cursor < PI - XTOL:
            segs.append(Segment(cursor, PI, Zero()))
        if segs and abs(segs[0].x0) <= XTOL:
            segs[0] = Segment(0.0, segs[0].x1, segs[0].shape)
        if segs and abs(segs[-1].x1 - PI) <= XTOL:
            segs[-1] = Segment(segs[-1].x0, PI, segs[-1].shape)
        return cls(tuple(segs))

    # evaluation ----------------------------------------------------------

    @property
    def starts(self) -> np.ndarray:
        return np.array([s.x0 for s in self.segments])

    def _index(self, x: np.ndarray, side: str) -> np.ndarray:
        starts = self.starts
        if side == "right":
            idx = np.searchsorted(starts - XTOL, x, side="right") - 1
        elif side == "left":
            idx = np.searchsorted(starts + XTOL, x, side="left") - 1
        else:
            raise ValueError(f"side must be 'left' or 'right', not {side!r}")
        return np.clip(idx, 0, len(self.segments) - 1)

    def evaluate(self, x, side: str = "right"):
        """Evaluate at ``x``; ``side`` picks the one-sided limit at joins."""
        xa = np.asarray(x, dtype=float)
        if np.any(xa < -XTOL) or np.any(xa > PI + XTOL):
            raise DomainError(f"x must lie in [0, pi]; got values in [{xa.min()!r}, {xa.max()!r}]")
        flat = np.atleast_1d(xa).ravel()
        idx = self._index(flat, side)
        out = np.zeros(flat.shape, dtype=complex)
        for k in np.unique(idx):
            sel = idx == k
            shape = self.segments[k].shape
            if not shape.is_zero:
                out[sel] = shape(flat[sel])
        out = out.reshape(np.shape(xa))
        return complex(out) if np.ndim(xa) == 0 else out

    __call__ = evaluate

    # structure -----------------------------------------------------------

    def breakpoints(self) -> list:
        """Segment joins plus interior kinks of the shapes, sorted."""
        pts = {s.x0 for s in self.segments[1:]}
        for s in self.segments:
            pts.update(k for k in s.shape.kinks() if s.x0 < k < s.x1)
        return sorted(pts)

    def support(self):
        """Hull ``(lo, hi)`` of the non-zero segments, or ``None``."""
        nz = [s for s in self.segments if not s.shape.is_zero]
        if not nz:
            return None
        return nz[0].x0, nz[-1].x1

    def nonzero_segments(self):
        return [s for s in self.segments if not s.shape.is_zero]

    @property
    def is_zero(self) -> bool:
        return all(s.shape.is_zero for s in self.segments)

    def restricted(self, lo: float, hi: float) -> list:
        """``(x0, x1, shape)`` pieces clipped to ``[lo, hi]``."""
        out = []
        for s in self.segments:
            x0, x1 = max(s.x0, lo), min(s.x1, hi)
            if x1 > x0 + XTOL:
                out.append((x0, x1, s.shape))
        return out

    def scaled(self, c: complex) -> "PiecewiseFunction":
        return PiecewiseFunction(tuple(Segment(s.x0, s.x1, s.shape.scaled(c)) for s in self.segments))

    def to_json(self) -> list:
        return [{"from": s.x0, "to": s.x1, **s.shape.to_json()} for s in self.segments]


def linear_combination(f: PiecewiseFunction, g: PiecewiseFunction, s: complex = 1.0, t: complex = 1.0):
    """Return ``s*f + t*g`` on the common refinement of both segmentations."""
    cuts = sorted({0.0, PI, *(seg.x0 for seg in f.segments), *(seg.x0 for seg in g.segments)})
    merged = [cuts[0]]
    for c in cuts[1:]:
        if c - merged[-1] > XTOL:
            merged.append(c)
    merged[-1] = PI
    pieces = []
    for x0, x1 in zip(merged, merged[1:]):
        mid = 0.5 * (x0 + x1)
        fs = f.segments[int(f._index(np.array([mid]), "right")[0])].shape.scaled(s)
        gs = g.segments[int(g._index(np.array([mid]), "right")[0])].shape.scaled(t)
        pieces.append((x0, x1, add_shapes(fs, gs)))
    return PiecewiseFunction.from_pieces(pieces)


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PotentialPair:
    """The pair ``(p, q)`` defining ``Q = [[p, q], [q, -p]]``."""

    p: PiecewiseFunction
    q: PiecewiseFunction

    @classmethod
    def zero(cls) -> "PotentialPair":
        z = PiecewiseFunction.zero()
        return cls(z, z)

    def breakpoints(self) -> list:
        return sorted(set(self.p.breakpoints()) | set(self.q.breakpoints()))

    def support(self):
        """Hull of the joint support of ``p`` and ``q`` or ``None``."""
        hulls = [h for h in (self.p.support(), self.q.support()) if h is not None]
        if not hulls:
            return None
        return min(h[0] for h in hulls), max(h[1] for h in hulls)

    @property
    def is_zero(self) -> bool:
        return self.p.is_zero and self.q.is_zero

    def evaluate(self, x, side: str = "right"):
        return self.p.evaluate(x, side), self.q.evaluate(x, side)

    def to_json(self) -> dict:
        return {"p": self.p.to_json(), "q": self.q.to_json()}


def validate_potential(pp: PotentialPair, cfg: DelayConfig, n_check: int = 100, seed: int = 0) -> PotentialPair:
    """Check that ``p`` and ``q`` vanish on ``(0, a)``.

    The check is structural (no non-zero segment may reach into ``(0, a)``)
    and is confirmed by sampling ``n_check`` random points.
    """
    for name, f in (("p", pp.p), ("q", pp.q)):
        for s in f.nonzero_segments():
            if s.x0 < cfg.a - XTOL:
                raise ValidationError(
                    f"{name} has a non-zero {s.shape.kind} segment [{s.x0:.6g}, {s.x1:.6g}) "
                    f"reaching into (0, a) = (0, {cfg.a:.6g})"
                )
    xs = np.random.default_rng(seed).uniform(0.0, cfg.a, n_check)
    pv, qv = pp.evaluate(xs)
    if np.any(pv != 0) or np.any(qv != 0):
        raise ValidationError("potential does not vanish on (0, a)")
    return pp


def eval_potential(pp: PotentialPair, x: float) -> tuple:
    """Pointwise ``(p(x), q(x))`` for ``x`` in [0, pi]."""
    x = float(x)
    if not (0.0 <= x <= PI):
        raise DomainError(f"x = {x!r} is outside [0, pi]")
    return pp.p.evaluate(x), pp.q.evaluate(x)


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SolutionTrace:
    """Fundamental solution sampled on a delay-aligned grid.

    ``values[:, 0]`` holds ``s1`` and ``values[:, 1]`` holds ``s2``.  The grid
    step is ``a/m``; only the last cell may be shorter so that it ends at pi.
    """

    x_grid: np.ndarray
    values: np.ndarray
    lam: complex
    m: int

    @property
    def endpoint(self) -> tuple:
        return complex(self.values[-1, 0]), complex(self.values[-1, 1])

    def to_rows(self):
        for x, (s1, s2) in zip(self.x_grid, self.values):
            yield (float(x), s1.real, s1.imag, s2.real, s2.imag)


@dataclass(frozen=True)
class CharfnTable:
    lambda_grid: np.ndarray
    delta1: np.ndarray
    delta2: np.ndarray

    def __post_init__(self):
        if not (len(self.lambda_grid) == len(self.delta1) == len(self.delta2)):
            raise ValidationError("charfn table columns must have equal length")


def spectrum_center(n: int, j: int) -> float:
    """Asymptotic location ``n + (1 - j)/2`` of the n-th eigenvalue."""
    return n + (1 - j) / 2


@dataclass(frozen=True)
class Spectrum:
    """Indexed eigenvalues of one boundary problem.

    ``entries`` maps ``n`` to the eigenvalue; unresolved indices appear in
    ``flags`` with a short reason instead.
    """

    j: int
    n_max: int
    entries: dict
    flags: dict = field(default_factory=dict)
    method: str = "disk"

    def __post_init__(self):
        if self.j not in (1, 2):
            raise ValidationError(f"boundary index j must be 1 or 2, not {self.j!r}")
        if self.n_max < 1:
            raise ValidationError("n_max must be a positive integer")

    @property
    def complete(self) -> bool:
        return not self.flags and all(n in self.entries for n in self.indices)

    @property
    def indices(self) -> range:
        return range(-self.n_max, self.n_max + 1)

    def require_complete(self):
        if not self.complete:
            bad = sorted(set(self.flags) | {n for n in self.indices if n not in self.entries})
            raise SpectrumIncompleteError(f"spectrum has unresolved entries at n = {bad}")
        return self

    def values(self) -> np.ndarray:
        return np.array([self.entries[n] for n in self.indices if n in self.entries], dtype=complex)

    def to_json(self) -> dict:
        rows = []
        for n in self.indices:
            row = {"n": n}
            if n in self.entries:
                lam = complex(self.entries[n])
                row.update(re=lam.real, im=lam.imag)
            if n in self.flags:
                row["flag"] = self.flags[n]
            rows.append(row)
        return {"j": self.j, "n_max": self.n_max, "method": self.method, "entries": rows}

    @classmethod
    def from_json(cls, doc: dict) -> "Spectrum":
        try:
            j = int(doc["j"])
            n_max = int(doc["n_max"])
            rows = doc["entries"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"spectrum document is missing field {exc}") from exc
        entries, flags = {}, {}
        for k, row in enumerate(rows):
            if "n" not in row:
                raise ValidationError(f"spectrum entry {k} has no 'n' field")
            n = int(row["n"])
            if "re" in row:
                entries[n] = complex(float(row["re"]), float(row.get("im", 0.0)))
            if "flag" in row:
                flags[n] = str(row["flag"])
            elif "re" not in row:
                flags[n] = "missing"
        return cls(j=j, n_max=n_max, entries=entries, flags=flags, method=str(doc.get("method", "disk")))


# ---------------------------------------------------------------------------
# JSON helpers for complex numbers
# ---------------------------------------------------------------------------


def complex_to_json(z):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def complex_from_json(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, dict) and "re" in v:
        return complex(float(v["re"]), float(v.get("im", 0.0)))
    raise ValidationError(f"cannot read a complex number from {v!r}")


Evaluator = Callable[[np.ndarray], np.ndarray]


def as_lambda_array(lams) -> np.ndarray:
    return np.atleast_1d(np.asarray(lams, dtype=complex)).ravel()


def grid_cells(a: float, m: int) -> tuple:
    """Full-cell count ``K`` and trailing fraction for the grid of step ``a/m``."""
    d = a / m
    r = PI / d
    K = int(round(r))
    if abs(r - K) <= 1e-9:
        return K, 0.0
    K = int(math.floor(r))
    return K, (PI - K * d) / d


def unique_sorted(points: Sequence[float], tol: float = XTOL) -> list:
    out = []
    for p in sorted(points):
        if not out or p - out[-1] > tol:
            out.append(float(p))
    return out
