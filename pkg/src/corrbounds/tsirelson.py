"""Quantum maxima of linear Bell functionals with planar dichotomic observables.

Each party measures ``K_s = cos(t) X + (-1)^s sin(t) Y`` for settings
``s in {0, 1}`` and a single angle ``t in [0, pi/2]``.  The largest eigenvalue
of the resulting operator is located through its characteristic polynomial:
``z`` bounds every root from above iff all Taylor coefficients of the
polynomial at ``z`` are positive.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linprog

from corrbounds._optim import golden_max
from corrbounds._validation import check_int, check_real
from corrbounds.exceptions import ConvergenceError

PARTY_NAMES = "ABCD"
MAX_PARTIES = 4

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_TERM_RE = re.compile(r"([A-D])([01])")

Term = tuple[tuple[int, int], ...]  # ((party, setting), ...) sorted by party


def _parse_term(label: str) -> Term:
    pieces = _TERM_RE.findall(label)
    if not pieces or "".join(p + s for p, s in pieces) != label:
        raise ValueError(f"cannot parse term {label!r}")
    term = tuple(sorted((PARTY_NAMES.index(p), int(s)) for p, s in pieces))
    parties = [p for p, _ in term]
    if len(set(parties)) != len(parties):
        raise ValueError(f"term {label!r} repeats a party")
    return term


def _term_label(term: Term) -> str:
    return "".join(f"{PARTY_NAMES[p]}{s}" for p, s in term)


@dataclass(frozen=True)
class TsirelsonFunctional:
    """Linear functional sum_T c_T <prod_{(p,s) in T} M_{p,s}> over k parties.

    ``coeffs`` holds fixed coefficients; ``x_coeffs`` holds multipliers of the
    sweep weight ``x`` so the effective coefficient is ``c_T + x * d_T``.
    """

    parties: int
    coeffs: Mapping[Term, float] = field(default_factory=dict)
    x_coeffs: Mapping[Term, float] = field(default_factory=dict)

    def __post_init__(self):
        k = check_int("parties", self.parties, 2, MAX_PARTIES)
        for mapping in (self.coeffs, self.x_coeffs):
            for term in mapping:
                if not term or any(p >= k or s not in (0, 1) for p, s in term):
                    raise ValueError(f"term {term} invalid for {k} parties")
        if len(set(self.coeffs) | set(self.x_coeffs)) > 3 ** k - 1:
            raise ValueError("too many coefficients")
        object.__setattr__(self, "coeffs", dict(self.coeffs))
        object.__setattr__(self, "x_coeffs", dict(self.x_coeffs))

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, float | str], parties: int | None = None):
        """Build from labels like ``{"A0": 1, "A0B1": "x", "A1B1": "-x"}``.

        String values are affine in ``x``: ``"x"``, ``"-x"``, ``"2*x"`` or a number.
        """
        coeffs: dict[Term, float] = {}
        x_coeffs: dict[Term, float] = {}
        highest = 0
        for label, value in mapping.items():
            term = _parse_term(label)
            highest = max(highest, term[-1][0] + 1)
            const, slope = _parse_coefficient(value)
            if const:
                coeffs[term] = coeffs.get(term, 0.0) + const
            if slope:
                x_coeffs[term] = x_coeffs.get(term, 0.0) + slope
        return cls(parties or max(highest, 2), coeffs, x_coeffs)

    def to_mapping(self) -> dict[str, float | str]:
        out: dict[str, float | str] = {}
        for term in sorted(set(self.coeffs) | set(self.x_coeffs)):
            c, d = self.coeffs.get(term, 0.0), self.x_coeffs.get(term, 0.0)
            out[_term_label(term)] = c if not d else (f"{d!r}*x" if not c else f"{c!r}+{d!r}*x")
        return out

    @property
    def has_sweep(self) -> bool:
        return any(self.x_coeffs.values())

    def at(self, x: float | None = None) -> dict[Term, float]:
        """Effective coefficients with the sweep weight substituted."""
        if self.has_sweep and x is None:
            raise ValueError("functional has x-dependent coefficients; supply x")
        out = dict(self.coeffs)
        for term, d in self.x_coeffs.items():
            out[term] = out.get(term, 0.0) + d * float(x)
        return out

    def bipartite_vector(self, x: float | None = None) -> np.ndarray:
        """Coefficients in behavior order (A0, A1, B0, B1, A0B0, A1B0, A0B1, A1B1)."""
        if self.parties != 2:
            raise ValueError("bipartite_vector requires two parties")
        c = self.at(x)
        keys = [((0, 0),), ((0, 1),), ((1, 0),), ((1, 1),),
                ((0, 0), (1, 0)), ((0, 1), (1, 0)), ((0, 0), (1, 1)), ((0, 1), (1, 1))]
        return np.array([c.get(k, 0.0) for k in keys])

    @classmethod
    def from_bipartite_vector(cls, v) -> "TsirelsonFunctional":
        v = np.asarray(v, dtype=float).ravel()
        if v.size != 8:
            raise ValueError("expected 8 coefficients")
        labels = ["A0", "A1", "B0", "B1", "A0B0", "A1B0", "A0B1", "A1B1"]
        return cls.from_mapping({k: float(c) for k, c in zip(labels, v)}, parties=2)


def _parse_coefficient(value) -> tuple[float, float]:
    if isinstance(value, (int, float, np.floating, np.integer)) and not isinstance(value, bool):
        return float(value), 0.0
    if not isinstance(value, str):
        raise ValueError(f"unsupported coefficient {value!r}")
    text = value.replace(" ", "")
    const, slope = 0.0, 0.0
    for tok in re.findall(r"[+-]?[^+-]+", text):
        if tok.endswith("x"):
            body = tok[:-1].rstrip("*")
            slope += float(body + "1") if body in ("", "+", "-") else float(body)
        else:
            const += float(tok)
    return const, slope


# named rows of the bounds table; x is the sweep weight
_NAMED = {
    "TB": {"A0B0": 1, "A1B0": 1, "A0B1": 1, "A1B1": -1},
    "QB1": {"A0B0": 1, "A1B0": 1, "A0B1": 1, "A1B1": "x"},
    "QB2": {"A0": "x", "A0B0": 1, "A1B0": 1, "A0B1": 1, "A1B1": -1},
    "QB3": {"A0": "x", "A1": "x", "B0": "-x", "A0B0": 1, "A1B0": 1, "A0B1": 1, "A1B1": -1},
}


def named_functional(name: str) -> TsirelsonFunctional:
    try:
        return TsirelsonFunctional.from_mapping(_NAMED[name.upper()], parties=2)
    except KeyError:
        raise ValueError(f"unknown functional {name!r}; choose from {sorted(_NAMED)}") from None


def chsh_functional() -> TsirelsonFunctional:
    return named_functional("TB")


# ---------------------------------------------------------------- operators

def _observables(theta: np.ndarray) -> np.ndarray:
    """Return K[batch, setting] as (B, 2, 2, 2) complex arrays."""
    c = np.cos(theta)[:, None, None]
    s = np.sin(theta)[:, None, None]
    k0 = c * _SX + s * _SY
    k1 = c * _SX - s * _SY
    return np.stack([k0, k1], axis=1)


def _batched_kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, m = a.shape[-1], b.shape[-1]
    out = np.einsum("...ij,...kl->...ikjl", a, b)
    return out.reshape(a.shape[:-2] + (n * m, n * m))


def build_operators(coeffs: Mapping[Term, float], parties: int, angles) -> np.ndarray:
    """Batched operator assembly; ``angles`` has shape (B, parties)."""
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    if angles.shape[1] != parties:
        raise ValueError(f"need {parties} angles per point, got {angles.shape[1]}")
    nb = angles.shape[0]
    dim = 2 ** parties
    obs = [_observables(angles[:, p]) for p in range(parties)]
    eye = np.broadcast_to(np.eye(2, dtype=complex), (nb, 2, 2))
    z = np.zeros((nb, dim, dim), dtype=complex)
    for term, c in coeffs.items():
        if c == 0.0:
            continue
        settings = dict(term)
        op = None
        for p in range(parties):
            f = obs[p][:, settings[p]] if p in settings else eye
            op = f if op is None else _batched_kron(op, f)
        z += c * op
    return z


def build_operator(f: TsirelsonFunctional, angles, x: float | None = None) -> np.ndarray:
    """Hermitian operator of ``f`` at one set of angles (complex, zero diagonal)."""
    a = np.asarray(angles, dtype=float).ravel()
    if a.size != f.parties:
        raise ValueError(f"need {f.parties} angles, got {a.size}")
    return build_operators(f.at(x), f.parties, a[None, :])[0]


# ------------------------------------------------------- characteristic poly

@dataclass(frozen=True, eq=False)
class CharPolynomial:
    """Monic polynomial, coefficients highest degree first."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).ravel()
        if c.size < 2 or c[0] != 1.0:
            raise ValueError("coefficients must be monic with degree >= 1")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, m):
        return np.polyval(self.coeffs, m)

    def taylor(self, z: float) -> np.ndarray:
        """p^(q)(z)/q! for q = 0..deg, lowest order first."""
        return _taylor_coeffs(self.coeffs[None, :], np.array([z], dtype=float))[0]

    def largest_root(self, tol: float = 1e-12) -> float:
        return float(_largest_roots(self.coeffs[None, :], tol=tol)[0])


def _char_coeffs(z: np.ndarray) -> np.ndarray:
    """Faddeev-LeVerrier recursion on a batch of square matrices.

    Returns real coefficients, highest degree first, shape (B, n+1).
    """
    z = np.asarray(z)
    squeeze = z.ndim == 2
    if squeeze:
        z = z[None]
    nb, n, _ = z.shape
    eye = np.eye(n, dtype=z.dtype)
    c = np.zeros((nb, n + 1), dtype=z.dtype)
    c[:, 0] = 1.0
    m = np.zeros_like(z)
    for k in range(1, n + 1):
        m = z @ m + c[:, k - 1][:, None, None] * eye
        c[:, k] = -np.trace(z @ m, axis1=1, axis2=2) / k
    out = c.real.copy()
    return out[0] if squeeze else out


def char_poly(z) -> CharPolynomial:
    z = np.asarray(z)
    if z.ndim != 2 or z.shape[0] != z.shape[1]:
        raise ValueError("Z must be square")
    if z.shape[0] > 2 ** MAX_PARTIES:
        raise ValueError("dimension above 16 is not supported")
    return CharPolynomial(_char_coeffs(z))


def _taylor_coeffs(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Taylor coefficients at z by repeated synthetic division.

    coeffs (B, n+1) highest first; returns (B, n+1) lowest order first.
    """
    work = np.array(coeffs, dtype=float, copy=True)
    nb, n1 = work.shape
    out = np.empty((nb, n1))
    for q in range(n1):
        # Horner pass: remainder is the q-th Taylor coefficient
        acc = work[:, 0].copy()
        for j in range(1, n1 - q):
            acc = acc * z + work[:, j]
            work[:, j] = acc
        out[:, q] = acc
    return out


def _upper_bound_mask(coeffs: np.ndarray, z: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    t = _taylor_coeffs(coeffs, z)
    return np.all(t > -tol, axis=1)


def is_upper_bound(p: CharPolynomial, z: float, tol: float = 1e-12) -> bool:
    """True iff every Taylor coefficient of ``p`` at ``z`` is positive (up to tol).

    For a polynomial with only real roots this holds exactly when ``z`` is
    not below the largest root.
    """
    return bool(_upper_bound_mask(p.coeffs[None, :], np.array([float(z)]), tol)[0])


def _taylor_positive(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    """All Taylor coefficients at z strictly positive; coeffs (B, n+1), z (B, S)."""
    nb, n1 = coeffs.shape
    work = np.broadcast_to(coeffs[:, None, :], z.shape + (n1,)).copy()
    ok = np.ones(z.shape, dtype=bool)
    for q in range(n1 - 1):
        acc = work[..., 0]
        for j in range(1, n1 - q):
            acc = acc * z + work[..., j]
            work[..., j] = acc
        ok &= acc > 0.0
    return ok


def _largest_roots(coeffs: np.ndarray, tol: float = 1e-13, sections: int | None = None) -> np.ndarray:
    """Multi-section search on the Taylor-positivity test, batched over polynomials.

    Each round tests ``sections - 1`` interior points at once and keeps the
    sub-interval where the test flips from false to true.
    """
    coeffs = np.atleast_2d(coeffs)
    nb = coeffs.shape[0]
    if sections is None:
        sections = 64 if nb <= 64 else 16
    bound = 1.0 + np.abs(coeffs[:, 1:]).max(axis=1)  # Cauchy root bound
    lo, hi = -bound, bound.copy()
    frac = np.linspace(0.0, 1.0, sections + 1)[1:-1]
    rows = np.arange(nb)
    for _ in range(100):
        if np.all(hi - lo <= tol * np.maximum(1.0, np.abs(hi))):
            break
        z = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
        ok = _taylor_positive(coeffs, z)
        # the test is monotone in z, so the first passing point brackets the root
        first = np.where(ok.any(axis=1), ok.argmax(axis=1), len(frac))
        hi = np.where(first < len(frac), z[rows, np.minimum(first, len(frac) - 1)], hi)
        lo = np.where(first > 0, z[rows, np.maximum(first - 1, 0)], lo)
    return hi


# ------------------------------------------------------------ angle search

def _poly_scores(coeffs_map, parties):
    def score(angles):
        z = build_operators(coeffs_map, parties, angles)
        # coarse resolution suffices for ranking grid points
        tol = 1e-9 if len(angles) > 256 else 1e-13
        return _largest_roots(_char_coeffs(z), tol=tol)
    return score


def _eig_scores(coeffs_map, parties):
    def score(angles):
        z = build_operators(coeffs_map, parties, angles)
        return np.linalg.eigvalsh(z)[:, -1]
    return score


def default_grid(parties: int) -> int:
    return {2: 97, 3: 25, 4: 9}[parties]


@dataclass(frozen=True)
class SearchResult:
    value: float
    angles: np.ndarray
    candidates: np.ndarray
    passes: int


def _directions(parties: int) -> np.ndarray:
    """Coordinate axes plus pairwise diagonals, so ridges along x = y are followed."""
    dirs = list(np.eye(parties))
    for i, j in itertools.combinations(range(parties), 2):
        for sgn in (1.0, -1.0):
            d = np.zeros(parties)
            d[i], d[j] = 1.0, sgn
            dirs.append(d / math.sqrt(2.0))
    return np.array(dirs)


def _line_bounds(pts: np.ndarray, d: np.ndarray, half: float):
    """Step range [lo, hi] per start keeping pts + t*d inside the angle box."""
    lo = np.full(len(pts), -half)
    hi = np.full(len(pts), half)
    for p, dp in enumerate(d):
        if dp == 0.0:
            continue
        a = (0.0 - pts[:, p]) / dp
        b = (math.pi / 2 - pts[:, p]) / dp
        lo = np.maximum(lo, np.minimum(a, b))
        hi = np.minimum(hi, np.maximum(a, b))
    return lo, np.maximum(hi, lo)


def _angle_search(score, parties: int, grid: int, starts: int = 6,
                  max_passes: int = 60, tol: float = 1e-10) -> SearchResult:
    """Exhaustive grid followed by cyclic golden-section line searches from the best starts."""
    axis = np.linspace(0.0, math.pi / 2, grid)
    mesh = np.array(list(itertools.product(axis, repeat=parties)))
    vals = np.concatenate([score(chunk) for chunk in np.array_split(mesh, max(1, len(mesh) // 4096))])
    order = np.argsort(-vals, kind="stable")[:starts]
    pts = mesh[order].copy()
    best = vals[order].copy()
    half = (math.pi / 2) / max(grid - 1, 1)
    dirs = _directions(parties)
    for passes in range(1, max_passes + 1):
        prev = best.max()
        for d in dirs:
            lo, hi = _line_bounds(pts, d, half)

            def along(t, d=d):
                return score(pts + t[:, None] * d[None, :])

            t, v = golden_max(along, lo, hi, tol=1e-6)
            improve = v > best
            pts[improve] = np.clip(pts[improve] + t[improve, None] * d, 0.0, math.pi / 2)
            best = np.where(improve, v, best)
        if best.max() - prev <= tol * max(1.0, abs(prev)):
            break
        half = max(half / 2, 1e-4)
    else:
        raise ConvergenceError(f"angle refinement did not settle in {max_passes} passes")
    # refined points plus the best grid points; the rest lie below them
    candidates = np.vstack([mesh[np.argsort(-vals, kind="stable")[:64]], pts])
    i = int(np.argmax(best))
    return SearchResult(float(best[i]), pts[i].copy(), candidates, passes)


def tsirelson_bound(f: TsirelsonFunctional, x: float | None = None, grid: int | None = None,
                    tol: float = 1e-7, starts: int = 6) -> float:
    """Quantum maximum of ``f`` found through the characteristic-polynomial test."""
    coeffs = f.at(x)
    if not any(coeffs.values()):
        return 0.0
    grid = default_grid(f.parties) if grid is None else check_int("grid", grid, 2)
    res = _angle_search(_poly_scores(coeffs, f.parties), f.parties, grid, starts)
    # outer bisection on z: smallest value that bounds every candidate's polynomial
    polys = _char_coeffs(build_operators(coeffs, f.parties, res.candidates))
    lo = res.value - 10 * tol - 1e-9
    hi = res.value + 10 * tol + 1e-9
    while not np.all(_upper_bound_mask(polys, np.full(len(polys), hi))):
        hi += max(1.0, abs(hi))
    while np.all(_upper_bound_mask(polys, np.full(len(polys), lo))):
        lo -= max(1.0, abs(lo))
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if np.all(_upper_bound_mask(polys, np.full(len(polys), mid))):
            hi = mid
        else:
            lo = mid
    return hi


def eigen_oracle(f: TsirelsonFunctional, x: float | None = None, grid: int | None = None,
                 starts: int = 6) -> float:
    """Same angle search scored by a dense Hermitian eigensolver."""
    coeffs = f.at(x)
    if not any(coeffs.values()):
        return 0.0
    grid = default_grid(f.parties) if grid is None else check_int("grid", grid, 2)
    return _angle_search(_eig_scores(coeffs, f.parties), f.parties, grid, starts).value


def optimal_angles(f: TsirelsonFunctional, x: float | None = None, grid: int | None = None) -> np.ndarray:
    coeffs = f.at(x)
    grid = default_grid(f.parties) if grid is None else grid
    return _angle_search(_eig_scores(coeffs, f.parties), f.parties, grid).angles


# --------------------------------------------------------- other maxima

def classical_max(f: TsirelsonFunctional, x: float | None = None) -> float:
    """Maximum over deterministic +-1 assignments of every observable."""
    coeffs = f.at(x)
    k = f.parties
    best = -math.inf
    for assignment in itertools.product((-1.0, 1.0), repeat=2 * k):
        val = sum(c * math.prod(assignment[2 * p + s] for p, s in term) for term, c in coeffs.items())
        best = max(best, val)
    return best


def nosig_max(f: TsirelsonFunctional, x: float | None = None) -> float:
    """Maximum over the bipartite no-signalling polytope via a linear program."""
    v = f.bipartite_vector(x)
    # variables p[a,b,x,y] flattened; expectation of each coordinate is linear in p
    sign = np.array([-1.0, 1.0])
    rows = []
    for (xa,) in [(0,), (1,)]:
        rows.append(np.einsum("a,b,x,y->abxy", sign, np.ones(2), np.eye(2)[xa], np.eye(2)[0]).ravel())
    for (yb,) in [(0,), (1,)]:
        rows.append(np.einsum("a,b,x,y->abxy", np.ones(2), sign, np.eye(2)[0], np.eye(2)[yb]).ravel())
    for xa, yb in [(0, 0), (1, 0), (0, 1), (1, 1)]:
        rows.append(np.einsum("a,b,x,y->abxy", sign, sign, np.eye(2)[xa], np.eye(2)[yb]).ravel())
    obj = v @ np.array(rows)
    a_eq, b_eq = [], []
    for xa, yb in itertools.product((0, 1), repeat=2):
        r = np.zeros((2, 2, 2, 2))
        r[:, :, xa, yb] = 1.0
        a_eq.append(r.ravel())
        b_eq.append(1.0)
    for a in (0, 1):
        for xa in (0, 1):
            r = np.zeros((2, 2, 2, 2))
            r[a, :, xa, 0] = 1.0
            r[a, :, xa, 1] = -1.0
            a_eq.append(r.ravel())
            b_eq.append(0.0)
    for b in (0, 1):
        for yb in (0, 1):
            r = np.zeros((2, 2, 2, 2))
            r[:, b, 0, yb] = 1.0
            r[:, b, 1, yb] = -1.0
            a_eq.append(r.ravel())
            b_eq.append(0.0)
    res = linprog(-obj, A_eq=np.array(a_eq), b_eq=b_eq, bounds=(0, 1), method="highs")
    if not res.success:
        raise ConvergenceError(res.message)
    return float(-res.fun)


# ---------------------------------------------------------- closed forms

def _qb3_quantum(x: float) -> float:
    ax = abs(x)
    if ax <= 1.0:
        return 2.0 * (4.0 - x * x) / (x * x + math.sqrt((2.0 - x * x) * (4.0 - 3.0 * x * x)))
    if ax <= 2.0:
        return ax + 2.0
    return 3.0 * ax - 2.0


def _qb1_quantum(x: float) -> float:
    if x >= -1.0 / 3.0:
        return x + 3.0
    return math.sqrt((x - 1.0) ** 3 / x)


_TABLE = {
    ("TB", "quantum"): lambda x: 2.0 * math.sqrt(2.0),
    ("TB", "lhvm"): lambda x: 2.0,
    ("TB", "nosig"): lambda x: 4.0,
    ("QB1", "quantum"): _qb1_quantum,
    ("QB1", "lhvm"): lambda x: abs(x + 1.0) + 2.0,
    ("QB1", "nosig"): lambda x: abs(x) + 3.0,
    ("QB2", "quantum"): lambda x: math.sqrt(2 * x * x + 8) if abs(x) <= 2 else abs(x) + 2.0,
    ("QB2", "lhvm"): lambda x: abs(x) + 2.0,
    ("QB2", "nosig"): lambda x: 4.0 if abs(x) <= 2 else abs(x) + 2.0,
    ("QB3", "quantum"): _qb3_quantum,
    ("QB3", "lhvm"): lambda x: abs(x) + 2.0 if abs(x) <= 2 else 3.0 * abs(x) - 2.0,
    ("QB3", "nosig"): lambda x: 4.0 if abs(x) <= 2 else 3.0 * abs(x) - 2.0,
}


def table_bound(name: str, x: float = 0.0) -> float:
    """Closed-form bound; ``name`` is a row (``QB2``) optionally prefixed ``LHVM-`` or ``NOSIG-``."""
    name = name.upper()
    column = "quantum"
    for prefix in ("LHVM-", "NOSIG-"):
        if name.startswith(prefix):
            column, name = prefix[:-1].lower(), name[len(prefix):]
    x = check_real("x", x)
    if (name, column) not in _TABLE:
        raise ValueError(f"unknown table entry {name!r}")
    if name == "QB1" and column == "quantum" and x == 0.0:
        return 3.0
    return float(_TABLE[name, column](x))
