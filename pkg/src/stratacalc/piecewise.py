"""Piecewise-polynomial maps over hyperplane arrangements.

A map R^n -> R^m is given by an ordered list of hyperplanes plus one
polynomial piece per nonempty full-dimensional sign cell, continuous across
facets. Cells of lower dimension carry no data of their own: values and
derivatives there come from adjacent full-dimensional pieces, which is
exactly the Clarke construction over the set of differentiability points.

Everything is exact: directional derivatives are piece Jacobians times the
direction, Clarke Jacobians are finite vertex lists of adjacent piece
Jacobians, and curve composition substitutes the curve into the active piece
after isolating all hyperplane crossing times.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .geometry import MatrixPolytope, Polytope, Subspace, as_vector

EPS_CELL = 1e-10       # sign-vector zero declaration threshold
EPS_EQ = 1e-9          # value-agreement tolerance (continuity, curves)
MAX_DEGREE = 6         # maximum total degree of a piece polynomial
N_FACET_SAMPLES = 50   # facet points for continuity validation
DEFAULT_BOX_HALFWIDTH = 10.0
ROOT_SEED_INTERVALS = 1024
ROOT_TOL = 1e-13
REJECTION_CAP = 100_000
SAMPLE_MARGIN = 1e-6   # sign margin when sampling cell interiors

_SIGN_ORDER = {"-": 0, "0": 1, "+": 2}


class PiecewiseError(ValueError):
    """Malformed piecewise data: missing pieces, empty cells, bad signs."""


def sign_key(sign: str) -> tuple[int, ...]:
    """Sort key realizing the '-' < '0' < '+' character order."""
    return tuple(_SIGN_ORDER[c] for c in sign)


# ---------------------------------------------------------------------------
# Polynomials

@dataclass(frozen=True, eq=False)
class Polynomial:
    """Multivariate polynomial as (exponent multi-index, coefficient) terms.

    Terms are normalized: duplicate multi-indices merged, zero coefficients
    dropped, rows sorted. The zero polynomial has no terms.
    """

    num_vars: int
    exponents: np.ndarray  # (T, num_vars) nonnegative ints
    coeffs: np.ndarray     # (T,)

    def __post_init__(self):
        exps = np.asarray(self.exponents, dtype=int).reshape(-1, self.num_vars)
        cfs = np.asarray(self.coeffs, dtype=float).reshape(-1)
        if exps.shape[0] != cfs.shape[0]:
            raise ValueError("exponent rows and coefficients disagree")
        if exps.size and exps.min() < 0:
            raise ValueError("exponents must be nonnegative")
        if exps.size and int(exps.sum(axis=1).max()) > MAX_DEGREE:
            raise ValueError(f"degree exceeds the configured maximum {MAX_DEGREE}")
        merged: dict[tuple[int, ...], float] = {}
        for e, c in zip(map(tuple, exps), cfs):
            merged[e] = merged.get(e, 0.0) + float(c)
        items = sorted((e, c) for e, c in merged.items() if c != 0.0)
        exps = np.array([e for e, _ in items], dtype=int).reshape(-1, self.num_vars)
        cfs = np.array([c for _, c in items], dtype=float)
        exps.flags.writeable = False
        cfs.flags.writeable = False
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "coeffs", cfs)

    @classmethod
    def from_terms(cls, num_vars: int, terms) -> "Polynomial":
        terms = list(terms)
        if not terms:
            return cls(num_vars, np.zeros((0, num_vars), dtype=int), np.zeros(0))
        return cls(num_vars,
                   np.array([t[0] for t in terms], dtype=int),
                   np.array([t[1] for t in terms], dtype=float))

    @classmethod
    def constant(cls, num_vars: int, c: float) -> "Polynomial":
        return cls.from_terms(num_vars, [((0,) * num_vars, c)])

    @classmethod
    def coordinate(cls, num_vars: int, j: int) -> "Polynomial":
        e = [0] * num_vars
        e[j] = 1
        return cls.from_terms(num_vars, [(tuple(e), 1.0)])

    @property
    def degree(self) -> int:
        if self.exponents.shape[0] == 0:
            return 0
        return int(self.exponents.sum(axis=1).max())

    def terms(self) -> list[tuple[tuple[int, ...], float]]:
        return [(tuple(int(v) for v in e), float(c))
                for e, c in zip(self.exponents, self.coeffs)]

    def __call__(self, x) -> float:
        if self.coeffs.size == 0:
            return 0.0
        x = np.asarray(x, dtype=float)
        return float(self.coeffs @ np.prod(x[None, :] ** self.exponents, axis=1))

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        """Evaluate on an (N, num_vars) array of points (term-by-term)."""
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[0])
        for e, c in zip(self.exponents, self.coeffs):
            term = np.full(X.shape[0], c)
            for j, p in enumerate(e):
                if p:
                    term *= X[:, j] ** int(p)
            out += term
        return out

    def partial(self, j: int) -> "Polynomial":
        rows = []
        for e, c in zip(self.exponents, self.coeffs):
            if e[j] > 0:
                e2 = e.copy()
                e2[j] -= 1
                rows.append((tuple(e2), c * e[j]))
        return Polynomial.from_terms(self.num_vars, rows)

    def gradient(self) -> list["Polynomial"]:
        return [self.partial(j) for j in range(self.num_vars)]

    def __add__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial.from_terms(self.num_vars, self.terms() + other.terms())

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.num_vars, self.exponents, -self.coeffs)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def scale(self, c: float) -> "Polynomial":
        return Polynomial(self.num_vars, self.exponents, c * self.coeffs)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        rows = []
        for e1, c1 in zip(self.exponents, self.coeffs):
            for e2, c2 in zip(other.exponents, other.coeffs):
                rows.append((tuple(e1 + e2), c1 * c2))
        return Polynomial.from_terms(self.num_vars, rows)

    def compose_univariate(self, coord_polys: list[np.ndarray]) -> np.ndarray:
        """Substitute univariate polynomials t -> gamma_j(t) for each variable.

        coord_polys[j] holds low-to-high coefficients of gamma_j. Returns the
        low-to-high coefficients of the composed univariate polynomial.
        """
        power_cache: dict[tuple[int, int], np.ndarray] = {}

        def upow(j: int, p: int) -> np.ndarray:
            if p == 0:
                return np.array([1.0])
            key = (j, p)
            if key not in power_cache:
                power_cache[key] = np.convolve(upow(j, p - 1), coord_polys[j])
            return power_cache[key]

        out = np.zeros(1)
        for e, c in zip(self.exponents, self.coeffs):
            term = np.array([float(c)])
            for j, p in enumerate(e):
                if p:
                    term = np.convolve(term, upow(j, int(p)))
            if term.size > out.size:
                out = np.pad(out, (0, term.size - out.size))
            out[: term.size] += term
        return out


class _StackedPolys:
    """Batch evaluator for a fixed tuple of polynomials sharing a point.

    Stacks all terms into one exponent matrix so a single vectorized pass
    evaluates every output slot; used for piece values and Jacobians on the
    hot paths of the verifiers.
    """

    def __init__(self, polys: list[Polynomial], shape: tuple[int, ...]):
        exps, cfs, slots = [], [], []
        for slot, p in enumerate(polys):
            for e, c in zip(p.exponents, p.coeffs):
                exps.append(e)
                cfs.append(c)
                slots.append(slot)
        self.shape = shape
        self.size = int(np.prod(shape))
        if exps:
            self.exponents = np.array(exps, dtype=float)
            self.coeffs = np.array(cfs, dtype=float)
            self.slots = np.array(slots, dtype=int)
        else:
            self.exponents = None

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if self.exponents is None:
            return np.zeros(self.shape)
        vals = self.coeffs * np.prod(x[None, :] ** self.exponents, axis=1)
        out = np.bincount(self.slots, weights=vals, minlength=self.size)
        return out.reshape(self.shape)

    def term_values(self, x: np.ndarray):
        """Per-term products and their output slots (for compensated sums)."""
        if self.exponents is None:
            return np.zeros(0), np.zeros(0, dtype=int)
        vals = self.coeffs * np.prod(x[None, :] ** self.exponents, axis=1)
        return vals, self.slots


# ---------------------------------------------------------------------------
# Hyperplanes and arrangements

@dataclass(frozen=True, eq=False)
class Hyperplane:
    """Affine hyperplane {x : <a, x> = b} with the normal scaled to unit length.

    Orientation (the sign of a) is preserved as given: sign vectors are
    defined relative to it.
    """

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = as_vector(self.normal)
        nrm = float(np.linalg.norm(a))
        if nrm == 0.0:
            raise PiecewiseError("hyperplane normal must be nonzero")
        b = float(self.offset)
        # skip the division for already-unit normals so serialized
        # hyperplanes round-trip bit-exactly
        if abs(nrm - 1.0) > 1e-12:
            a = a / nrm
            b = b / nrm
        else:
            a = a.copy()
        a.flags.writeable = False
        object.__setattr__(self, "normal", a)
        object.__setattr__(self, "offset", b)

    def side(self, x) -> float:
        return float(self.normal @ np.asarray(x, dtype=float) - self.offset)

    def same_as(self, other: "Hyperplane", eps: float = EPS_CELL) -> bool:
        """Geometric equality, treating opposite orientations as equal."""
        if np.allclose(self.normal, other.normal, atol=eps) and \
                abs(self.offset - other.offset) <= eps:
            return True
        return np.allclose(self.normal, -other.normal, atol=eps) and \
            abs(self.offset + other.offset) <= eps


@dataclass(frozen=True, eq=False)
class Arrangement:
    """Ordered list of hyperplanes; order is part of identity since sign
    vectors index into it."""

    ambient_dim: int
    hyperplanes: tuple[Hyperplane, ...]

    # caches (not part of identity)
    _normals: np.ndarray = field(init=False, repr=False, compare=False)
    _offsets: np.ndarray = field(init=False, repr=False, compare=False)
    _nonempty_cache: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        hps = tuple(self.hyperplanes)
        for h in hps:
            if h.normal.size != self.ambient_dim:
                raise PiecewiseError("hyperplane dimension mismatch")
        object.__setattr__(self, "hyperplanes", hps)
        A = np.array([h.normal for h in hps], dtype=float).reshape(len(hps), self.ambient_dim)
        b = np.array([h.offset for h in hps], dtype=float)
        A.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "_normals", A)
        object.__setattr__(self, "_offsets", b)
        object.__setattr__(self, "_nonempty_cache", {})

    @property
    def k(self) -> int:
        return len(self.hyperplanes)

    @property
    def normals(self) -> np.ndarray:
        return self._normals

    @property
    def offsets(self) -> np.ndarray:
        return self._offsets

    def residuals(self, x) -> np.ndarray:
        """<a_i, x> - b_i for every hyperplane."""
        x = np.asarray(x, dtype=float)
        if self.k == 0:
            return np.zeros(0)
        return self._normals @ x - self._offsets

    def sign_vector(self, x, eps: float = EPS_CELL) -> str:
        r = self.residuals(x)
        return "".join("0" if abs(v) <= eps else ("+" if v > 0 else "-") for v in r)

    def _solve_cell_lp(self, sign: str):
        """Max-margin LP deciding nonemptiness; returns (margin, point)."""
        n, k = self.ambient_dim, self.k
        if k == 0:
            return 1.0, np.zeros(n)
        A_ub, b_ub, A_eq, b_eq = [], [], [], []
        for i, c in enumerate(sign):
            a, b = self._normals[i], self._offsets[i]
            if c == "0":
                A_eq.append(np.append(a, 0.0))
                b_eq.append(b)
            else:
                s = 1.0 if c == "+" else -1.0
                # s*(a.x - b) >= m  <=>  -s*a.x + m <= -s*b
                A_ub.append(np.append(-s * a, 1.0))
                b_ub.append(-s * b)
        bound = 1e4
        bounds = [(-bound, bound)] * n + [(None, 1.0)]
        c_obj = np.zeros(n + 1)
        c_obj[-1] = -1.0
        res = linprog(c_obj,
                      A_ub=np.array(A_ub) if A_ub else None,
                      b_ub=np.array(b_ub) if b_ub else None,
                      A_eq=np.array(A_eq) if A_eq else None,
                      b_eq=np.array(b_eq) if b_eq else None,
                      bounds=bounds, method="highs")
        if not res.success:
            return -np.inf, None
        return float(res.x[-1]), res.x[:-1].copy()

    def cell_nonempty(self, sign: str) -> bool:
        if len(sign) != self.k:
            raise PiecewiseError(f"sign vector length {len(sign)} != {self.k}")
        cached = self._nonempty_cache.get(sign)
        if cached is None:
            margin, point = self._solve_cell_lp(sign)
            cached = (margin > 1e-9, point)
            self._nonempty_cache[sign] = cached
        return cached[0]

    def cell_point(self, sign: str) -> np.ndarray:
        """A max-margin interior witness point of the cell."""
        if not self.cell_nonempty(sign):
            raise PiecewiseError(f"cell {sign!r} is empty")
        return self._nonempty_cache[sign][1]

    def cell(self, sign: str) -> "Cell":
        point = self.cell_point(sign)
        zeros = [i for i, c in enumerate(sign) if c == "0"]
        if zeros:
            tangent = Subspace.null_space_of(self._normals[zeros], self.ambient_dim)
        else:
            tangent = Subspace.full(self.ambient_dim)
        return Cell(sign=sign, dimension=tangent.dim, tangent=tangent, point=point)

    def all_nonempty_signs(self) -> list[str]:
        """Every nonempty cell's sign vector, in '-'<'0'<'+' lexicographic order."""
        signs = ["".join(s) for s in itertools.product("-0+", repeat=self.k)]
        signs.sort(key=sign_key)
        return [s for s in signs if self.cell_nonempty(s)]

    def full_dim_signs(self) -> list[str]:
        signs = ["".join(s) for s in itertools.product("-+", repeat=self.k)]
        signs.sort(key=sign_key)
        return [s for s in signs if self.cell_nonempty(s)]

    def compatible_full_signs(self, sign: str) -> list[str]:
        """Nonempty full-dimensional sign vectors whose closure contains the
        cell `sign` (coordinatewise: equal where sign is nonzero)."""
        options = [("-", "+") if c == "0" else (c,) for c in sign]
        out = ["".join(s) for s in itertools.product(*options)]
        out.sort(key=sign_key)
        return [s for s in out if self.cell_nonempty(s)]


@dataclass(frozen=True, eq=False)
class Cell:
    """Relatively open polyhedron of an arrangement, with its tangent space."""

    sign: str
    dimension: int
    tangent: Subspace
    point: np.ndarray

    @property
    def normal_space(self) -> Subspace:
        return self.tangent.orthogonal_complement()


def refine(a1: Arrangement, a2: Arrangement, eps: float = EPS_CELL) -> Arrangement:
    """Common refinement: concatenate hyperplane lists, dropping geometric
    duplicates (orientation-insensitive). Every cell of the result lies in
    exactly one cell of each input."""
    if a1.ambient_dim != a2.ambient_dim:
        raise PiecewiseError("arrangements live in different dimensions")
    kept: list[Hyperplane] = []
    for h in a1.hyperplanes + a2.hyperplanes:
        if not any(h.same_as(g, eps) for g in kept):
            kept.append(h)
    return Arrangement(a1.ambient_dim, tuple(kept))


def sample_cell_point(arr: Arrangement, sign: str, box: np.ndarray,
                      rng: np.random.Generator,
                      margin: float = SAMPLE_MARGIN,
                      cap: int = REJECTION_CAP) -> np.ndarray | None:
    """Rejection-sample a point of the cell inside the box.

    Box draws are projected onto the affine hull of the cell's zero
    constraints, then the strict signs are checked with a safety margin.
    Returns None when the cap is exhausted (caller logs and skips).
    """
    n = arr.ambient_dim
    zeros = [i for i, c in enumerate(sign) if c == "0"]
    if zeros:
        A = arr._normals[zeros]
        b = arr._offsets[zeros]
        pinv = np.linalg.pinv(A)
    lo, hi = box
    for _ in range(cap):
        x = rng.uniform(lo, hi)
        if zeros:
            x = x - pinv @ (A @ x - b)
            if np.any(x < lo) or np.any(x > hi):
                continue
        r = arr.residuals(x)
        ok = True
        for i, c in enumerate(sign):
            if c == "0":
                if abs(r[i]) > EPS_CELL:
                    ok = False
                    break
            elif c == "+":
                if r[i] < margin:
                    ok = False
                    break
            else:
                if r[i] > -margin:
                    ok = False
                    break
        if ok:
            return x
    return None


# ---------------------------------------------------------------------------
# Piecewise functions

@dataclass(frozen=True, eq=False)
class PiecewiseFunction:
    """Continuous piecewise-polynomial map over a hyperplane arrangement.

    `pieces` maps full-dimensional sign vectors (strings over '-','+') to
    tuples of `output_dim` polynomials. Every nonempty full-dimensional cell
    must have a piece; adjacent pieces must agree on shared facets (checked
    by validate_continuity, not at construction).
    """

    arrangement: Arrangement
    output_dim: int
    pieces: dict[str, tuple[Polynomial, ...]]
    lipschitz_hint: float | None = None
    box_halfwidth: float = DEFAULT_BOX_HALFWIDTH

    _value_cache: dict = field(init=False, repr=False, compare=False)
    _jac_cache: dict = field(init=False, repr=False, compare=False)
    _grad_polys: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.arrangement.ambient_dim
        norm_pieces = {}
        for sign, polys in self.pieces.items():
            if len(sign) != self.arrangement.k or any(c not in "+-" for c in sign):
                raise PiecewiseError(f"bad full-dimensional sign vector {sign!r}")
            polys = tuple(polys)
            if len(polys) != self.output_dim:
                raise PiecewiseError(
                    f"piece {sign!r} has {len(polys)} components, expected {self.output_dim}")
            for p in polys:
                if p.num_vars != n:
                    raise PiecewiseError(f"piece {sign!r} has wrong num_vars")
            norm_pieces[sign] = polys
        object.__setattr__(self, "pieces", norm_pieces)
        object.__setattr__(self, "_value_cache", {})
        object.__setattr__(self, "_jac_cache", {})
        object.__setattr__(self, "_grad_polys", {})

    @property
    def ambient_dim(self) -> int:
        return self.arrangement.ambient_dim

    @property
    def box(self) -> np.ndarray:
        h = self.box_halfwidth
        n = self.ambient_dim
        return np.array([[-h] * n, [h] * n])

    def validate(self) -> None:
        """Structural check: every nonempty full-dimensional cell has a piece."""
        for sign in self.arrangement.full_dim_signs():
            if sign not in self.pieces:
                raise PiecewiseError(
                    f"missing piece for nonempty full-dimensional cell {sign!r}")

    # -- evaluators --------------------------------------------------------

    def _value_eval(self, sign: str) -> _StackedPolys:
        ev = self._value_cache.get(sign)
        if ev is None:
            ev = _StackedPolys(list(self.pieces[sign]), (self.output_dim,))
            self._value_cache[sign] = ev
        return ev

    def _jac_eval(self, sign: str) -> _StackedPolys:
        ev = self._jac_cache.get(sign)
        if ev is None:
            grads = self.gradient_polys(sign)
            flat = [grads[i][j] for i in range(self.output_dim)
                    for j in range(self.ambient_dim)]
            ev = _StackedPolys(flat, (self.output_dim, self.ambient_dim))
            self._jac_cache[sign] = ev
        return ev

    def gradient_polys(self, sign: str) -> list[list[Polynomial]]:
        g = self._grad_polys.get(sign)
        if g is None:
            g = [p.gradient() for p in self.pieces[sign]]
            self._grad_polys[sign] = g
        return g

    def adjacent_full_signs(self, x) -> list[str]:
        """Nonempty full-dimensional cells (with pieces) whose closure contains x."""
        sigma = self.arrangement.sign_vector(np.asarray(x, dtype=float))
        out = [s for s in self.arrangement.compatible_full_signs(sigma)
               if s in self.pieces]
        if not out:
            raise PiecewiseError(
                f"no adjacent full-dimensional piece at sign vector {sigma!r}")
        return out

    def value(self, x) -> np.ndarray:
        """Evaluate the map; well-defined by continuity at boundary points."""
        x = as_vector(x, self.ambient_dim)
        sign = self.adjacent_full_signs(x)[0]
        return self._value_eval(sign)(x)

    def value_difference_exact(self, y, x) -> np.ndarray:
        """F(y) - F(x) with one exactly-rounded summation over the monomials
        of both active pieces.

        Naive differencing loses ~eps*|F| absolute accuracy to cancellation,
        which dominates semismooth residuals at small radii; summing all
        monomial products in one fsum removes it entirely (piecewise-linear
        residuals become exact zeros when the products themselves are exact).
        """
        y = as_vector(y, self.ambient_dim)
        x = as_vector(x, self.ambient_dim)
        vy, sy = self._value_eval(self.adjacent_full_signs(y)[0]).term_values(y)
        vx, sx = self._value_eval(self.adjacent_full_signs(x)[0]).term_values(x)
        out = np.zeros(self.output_dim)
        for i in range(self.output_dim):
            parts = [float(v) for v, s in zip(vy, sy) if s == i]
            parts += [-float(v) for v, s in zip(vx, sx) if s == i]
            out[i] = math.fsum(parts)
        return out

    def piece_value(self, sign: str, x) -> np.ndarray:
        return self._value_eval(sign)(np.asarray(x, dtype=float))

    def piece_jacobian(self, sign: str, x) -> np.ndarray:
        return self._jac_eval(sign)(np.asarray(x, dtype=float))

    def directional_cell(self, x, u, eps: float = EPS_CELL) -> str:
        """Full-dimensional sign vector of the piece active on (x, x+eps*u].

        Residual zero signs after consulting <a_i, u> are tie-broken to '+';
        continuity across the facet makes the tangential derivative
        independent of that choice.
        """
        x = as_vector(x, self.ambient_dim)
        u = as_vector(u, self.ambient_dim)
        unorm = float(np.linalg.norm(u))
        if unorm == 0.0:
            raise PiecewiseError("direction must be nonzero")
        r = self.arrangement.residuals(x)
        if self.arrangement.k:
            du = self.arrangement._normals @ u
        else:
            du = np.zeros(0)
        chars = []
        for i in range(self.arrangement.k):
            if abs(r[i]) > eps:
                chars.append("+" if r[i] > 0 else "-")
            elif abs(du[i]) > eps * unorm:
                chars.append("+" if du[i] > 0 else "-")
            else:
                chars.append("+")
        sign = "".join(chars)
        if not self.arrangement.cell_nonempty(sign):
            raise PiecewiseError(
                f"directional cell {sign!r} is empty: arrangement is degenerate "
                "(duplicate hyperplanes with opposite orientations?)")
        if sign not in self.pieces:
            raise PiecewiseError(f"no piece for directional cell {sign!r}")
        return sign

    def directional_derivative(self, x, u) -> np.ndarray:
        """One-sided directional derivative; exact for piecewise polynomials."""
        x = as_vector(x, self.ambient_dim)
        u = as_vector(u, self.ambient_dim)
        if float(np.linalg.norm(u)) == 0.0:
            return np.zeros(self.output_dim)
        sign = self.directional_cell(x, u)
        return self._jac_eval(sign)(x) @ u

    def clarke_jacobian(self, x) -> MatrixPolytope:
        """Vertex list of adjacent piece Jacobians at x (hull = Clarke Jacobian)."""
        x = as_vector(x, self.ambient_dim)
        mats = [self._jac_eval(s)(x) for s in self.adjacent_full_signs(x)]
        return MatrixPolytope(np.array(mats))

    def component_clarke(self, x, i: int) -> Polytope:
        """Clarke subdifferential of the scalar component F_i at x (row vectors)."""
        if not 1 <= i <= self.output_dim:
            raise PiecewiseError(f"component index {i} out of range")
        x = as_vector(x, self.ambient_dim)
        rows = [self._jac_eval(s)(x)[i - 1] for s in self.adjacent_full_signs(x)]
        return Polytope(np.array(rows))


@dataclass(frozen=True, eq=False)
class ContinuityViolation:
    sign_a: str
    sign_b: str
    point: np.ndarray
    gap: float


@dataclass(frozen=True, eq=False)
class ContinuityReport:
    ok: bool
    violations: tuple[ContinuityViolation, ...]
    pairs_checked: int


def validate_continuity(F: PiecewiseFunction, n_samples: int = N_FACET_SAMPLES,
                        eps: float = EPS_EQ, seed: int = 0) -> ContinuityReport:
    """Sample shared facets of adjacent full-dimensional pieces and compare
    the two piece values. Report-only; lists violating pairs with witnesses."""
    arr = F.arrangement
    rng = np.random.default_rng(seed)
    violations: list[ContinuityViolation] = []
    pairs = 0
    full = [s for s in arr.full_dim_signs() if s in F.pieces]
    seen = set()
    for sign in full:
        for i in range(arr.k):
            other = sign[:i] + ("-" if sign[i] == "+" else "+") + sign[i + 1:]
            key = (min(sign, other), max(sign, other), i)
            if key in seen or other not in F.pieces:
                continue
            seen.add(key)
            facet = sign[:i] + "0" + sign[i + 1:]
            if not arr.cell_nonempty(facet):
                continue
            pairs += 1
            worst_gap, worst_pt = 0.0, None
            for _ in range(n_samples):
                pt = sample_cell_point(arr, facet, F.box, rng, cap=2000)
                if pt is None:
                    continue
                gap = float(np.linalg.norm(
                    F.piece_value(sign, pt) - F.piece_value(other, pt)))
                if gap > worst_gap:
                    worst_gap, worst_pt = gap, pt
            if worst_gap > eps:
                violations.append(ContinuityViolation(sign, other, worst_pt, worst_gap))
    return ContinuityReport(ok=not violations, violations=tuple(violations),
                            pairs_checked=pairs)


# ---------------------------------------------------------------------------
# Curves

@dataclass(frozen=True, eq=False)
class Curve:
    """Piecewise-polynomial curve [0,1] -> R^n.

    `pieces[j]` is an (n, deg_j+1) array of low-to-high coefficients on the
    interval [breakpoints[j], breakpoints[j+1]]. `boundary[j]` marks
    intervals on which the curve travels inside some arrangement hyperplane
    (set by compose_exact; all-False for hand-built curves).
    """

    breakpoints: np.ndarray
    pieces: tuple[np.ndarray, ...]
    boundary: tuple[bool, ...] = ()

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2 or bp[0] != 0.0 or bp[-1] != 1.0:
            raise ValueError("breakpoints must run from 0.0 to 1.0")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        bp = bp.copy()
        pieces = tuple(np.atleast_2d(np.asarray(p, dtype=float)).copy()
                       for p in self.pieces)
        if len(pieces) != bp.size - 1:
            raise ValueError("need one piece per breakpoint interval")
        dims = {p.shape[0] for p in pieces}
        if len(dims) != 1:
            raise ValueError("pieces disagree on curve dimension")
        boundary = tuple(self.boundary) if self.boundary else (False,) * len(pieces)
        if len(boundary) != len(pieces):
            raise ValueError("boundary flags disagree with piece count")
        for j in range(len(pieces) - 1):  # continuity across breakpoints
            t = bp[j + 1]
            left = _upolyval(pieces[j], t)
            right = _upolyval(pieces[j + 1], t)
            if float(np.linalg.norm(left - right)) > EPS_EQ:
                raise ValueError(f"curve discontinuous at t={t}")
        bp.flags.writeable = False
        for p in pieces:
            p.flags.writeable = False
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "boundary", boundary)

    @property
    def dim(self) -> int:
        return self.pieces[0].shape[0]

    @classmethod
    def from_coeffs(cls, coeffs) -> "Curve":
        """Single-piece curve from per-coordinate low-to-high coefficient
        rows (ragged rows are zero-padded)."""
        rows = [np.atleast_1d(np.asarray(r, dtype=float)) for r in coeffs]
        width = max(r.size for r in rows)
        mat = np.zeros((len(rows), width))
        for i, r in enumerate(rows):
            mat[i, : r.size] = r
        return cls(np.array([0.0, 1.0]), (mat,))

    def interval_index(self, t: float) -> int:
        """Piece index with the left-derivative convention: t in (t_j, t_{j+1}]
        maps to j, and t=0 maps to 0 (right-sided, matching one-sided velocity)."""
        bp = self.breakpoints
        if t <= bp[0]:
            return 0
        if t >= bp[-1]:
            return len(self.pieces) - 1
        j = int(np.searchsorted(bp, t, side="left")) - 1
        return min(max(j, 0), len(self.pieces) - 1)

    def value(self, t: float) -> np.ndarray:
        tt = min(max(float(t), 0.0), 1.0)
        return _upolyval(self.pieces[self.interval_index(tt)], tt)

    def velocity(self, t: float) -> np.ndarray:
        """Derivative of the active piece: right-sided at t=0, left-sided at
        interior breakpoints and t=1."""
        tt = min(max(float(t), 0.0), 1.0)
        piece = self.pieces[self.interval_index(tt)]
        return _upolyval(_upolyder(piece), tt)

    def on_boundary(self, t: float) -> bool:
        return self.boundary[self.interval_index(float(t))]

    def crossing_times(self) -> np.ndarray:
        """Interior breakpoints (candidate stratum-crossing times)."""
        return self.breakpoints[1:-1]


def _upolyval(coeffs: np.ndarray, t: float) -> np.ndarray:
    """Evaluate rows of low-to-high univariate coefficients at t (Horner)."""
    out = np.zeros(coeffs.shape[0])
    for c in coeffs.T[::-1]:
        out = out * t + c
    return out


def _upolyder(coeffs: np.ndarray) -> np.ndarray:
    if coeffs.shape[1] <= 1:
        return np.zeros((coeffs.shape[0], 1))
    return coeffs[:, 1:] * np.arange(1, coeffs.shape[1])


def _isolate_roots(coeffs: np.ndarray, t_lo: float, t_hi: float,
                   n_seed: int = ROOT_SEED_INTERVALS,
                   tol: float = ROOT_TOL) -> list[float]:
    """Roots of a univariate polynomial in (t_lo, t_hi) by sign-change
    bisection over a seed grid. Even-order touch points produce no sign
    change and are intentionally not subdivision points: the active piece is
    identical on both sides."""
    grid = np.linspace(t_lo, t_hi, n_seed + 1)
    vals = np.zeros(grid.size)
    for c in coeffs[::-1]:
        vals = vals * grid + c
    roots = []
    scale = max(1.0, float(np.max(np.abs(vals))))
    for i in range(n_seed):
        a, b = float(grid[i]), float(grid[i + 1])
        va, vb = float(vals[i]), float(vals[i + 1])
        if abs(va) <= 1e-14 * scale:
            roots.append(a)
            continue
        if va * vb < 0:
            while b - a > tol:
                m = 0.5 * (a + b)
                vm = 0.0
                for c in coeffs[::-1]:
                    vm = vm * m + c
                if va * vm <= 0:
                    b = m
                else:
                    a, va = m, vm
            roots.append(0.5 * (a + b))
    if abs(vals[-1]) <= 1e-14 * scale:
        roots.append(float(grid[-1]))
    return [r for r in roots if t_lo < r < t_hi]


def compose_exact(F: PiecewiseFunction, curve: Curve,
                  eps: float = EPS_CELL) -> Curve:
    """Exact composition F(curve(t)) as a piecewise-polynomial curve in R^m.

    [0,1] is subdivided at the curve's own breakpoints and at every
    transversal hyperplane-crossing time (isolated by bisection). On each
    subinterval, the curve is substituted into the piece of a sign-compatible
    full-dimensional cell; continuity makes the result independent of the
    choice. Subintervals on which the curve travels inside some hyperplane
    are flagged as boundary rather than rejected.
    """
    if curve.dim != F.ambient_dim:
        raise PiecewiseError("curve dimension does not match the map")
    arr = F.arrangement
    times = set(float(t) for t in curve.breakpoints)
    zero_flags: list[np.ndarray] = []
    for j, piece in enumerate(curve.pieces):
        t_lo, t_hi = float(curve.breakpoints[j]), float(curve.breakpoints[j + 1])
        flags = np.zeros(arr.k, dtype=bool)
        for i in range(arr.k):
            # h_i(t) = <a_i, curve(t)> - b_i restricted to this piece
            h = arr._normals[i] @ piece
            h = h.copy()
            h[0] -= arr._offsets[i]
            hscale = max(1.0, float(np.max(np.abs(piece))))
            if np.max(np.abs(h)) <= 1e-12 * hscale:
                flags[i] = True  # curve lies inside the hyperplane here
                continue
            times.update(_isolate_roots(h, t_lo, t_hi))
        zero_flags.append(flags)

    cuts = sorted(times)
    merged = [cuts[0]]
    for t in cuts[1:]:
        if t - merged[-1] > 1e-12:
            merged.append(t)
    merged[0], merged[-1] = 0.0, 1.0

    out_pieces: list[np.ndarray] = []
    out_boundary: list[bool] = []
    for j in range(len(merged) - 1):
        t_lo, t_hi = merged[j], merged[j + 1]
        t_mid = 0.5 * (t_lo + t_hi)
        src = curve.interval_index(t_mid)
        piece = curve.pieces[src]
        boundary = bool(np.any(zero_flags[src]))
        # Classify the interval's side of each hyperplane from the max-|h|
        # probe: h has constant sign on the open subinterval except at
        # even-order touch points, where both sides agree anyway.
        probes = np.linspace(t_lo, t_hi, max(4, piece.shape[1] + 2))[1:-1]
        sigma = []
        for i in range(arr.k):
            if zero_flags[src][i]:
                sigma.append("0")
                continue
            h = arr._normals[i] @ piece
            h = h.copy()
            h[0] -= arr._offsets[i]
            vals = np.zeros(probes.size)
            for c in h[::-1]:
                vals = vals * probes + c
            v = vals[int(np.argmax(np.abs(vals)))]
            sigma.append("0" if v == 0.0 else ("+" if v > 0 else "-"))
        candidates = [s for s in arr.compatible_full_signs("".join(sigma))
                      if s in F.pieces]
        if not candidates:
            raise PiecewiseError(
                f"no piece adjacent to the curve on [{t_lo}, {t_hi}]")
        chosen = candidates[0]
        coord_polys = [piece[c] for c in range(curve.dim)]
        rows = [F.pieces[chosen][i].compose_univariate(coord_polys)
                for i in range(F.output_dim)]
        width = max(r.size for r in rows)
        mat = np.zeros((F.output_dim, width))
        for i, r in enumerate(rows):
            mat[i, : r.size] = r
        out_pieces.append(mat)
        out_boundary.append(boundary)
    return Curve(np.array(merged), tuple(out_pieces), tuple(out_boundary))
