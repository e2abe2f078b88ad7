"""Quantum-bound criteria on the two PR-box slices and boundary tracing.

Every ``*_max_xi`` function returns the largest PR weight ``xi`` compatible
with one criterion at a fixed slice parameter.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from corrbounds._optim import golden_min_scalar
from corrbounds._validation import check_int, check_real
from corrbounds.boxes import Behavior222, ProbTable222, SliceKind, SliceSpec, slice_behavior, to_probabilities
from corrbounds.exceptions import ConvergenceError

NPA1AB_FEASIBLE = -1e-7


def _kind(kind) -> SliceKind:
    return SliceKind(kind)


def _param(param) -> float:
    return check_real("param", param, 0.0, 1.0)


# ------------------------------------------------------------------ Uffink

def uffink_max_xi(kind, param: float) -> float:
    kind, g = _kind(kind), _param(param)
    if kind is SliceKind.GAMMA:
        return max(0.0, (math.sqrt(2.0 - g * g) - g) / 2.0)
    return min(1.0 / math.sqrt(2.0), 1.0 - g)


# ------------------------------------------------------------------- NPA^1

def npa1_sum(b: Behavior222) -> float:
    """Signed arcsine sum of the macroscopic-locality criterion."""
    total = 0.0
    for x in (0, 1):
        for y in (0, 1):
            ma, mb = b.marginal_a(x), b.marginal_b(y)
            num = b.corr(x, y) - ma * mb
            den2 = (1.0 - ma * ma) * (1.0 - mb * mb)
            if den2 < 1e-18:
                arg = math.copysign(1.0, num) if abs(num) > 1e-12 else 0.0
            else:
                arg = min(1.0, max(-1.0, num / math.sqrt(den2)))
            total += (-1) ** (x * y) * math.asin(arg)
    return total


def npa1_satisfied(b: Behavior222, tol: float = 1e-12) -> bool:
    return npa1_sum(b) <= math.pi + tol


def _npa1_gamma_root(g: float) -> float:
    # boundary: u^3 - u/2 - g/(2(1+g)) = 0, largest real root
    w = 3.0 * math.sqrt(6.0) * g / (2.0 * (1.0 + g))
    r = math.sqrt(2.0 / 3.0)
    if w <= 1.0:
        return r * math.cos(math.acos(w) / 3.0)
    return r * math.cosh(math.acosh(w) / 3.0)


def npa1_max_xi(kind, param: float) -> float:
    kind, g = _kind(kind), _param(param)
    if kind is SliceKind.BETA:
        return min(math.sqrt((1.0 - g * g) / 2.0), 1.0 - g)
    u = _npa1_gamma_root(g)
    xi = u * (1.0 - g * g) - (g - g * g)
    return min(max(xi, 0.0), 1.0 - g)


def npa1_max_xi_radical(param: float) -> float:
    """Gamma-slice boundary written with real radicals; valid where 3g(25g-4) >= 6."""
    g = _param(param)
    rad = 3.0 * g * (25.0 * g - 4.0) - 6.0
    if rad < 0:
        raise ValueError("radical form needs 3g(25g-4) >= 6 (g above about 0.374)")
    if g == 1.0:
        return 0.0
    h = np.cbrt(6.0 * (1.0 - g) ** 3 * (g + 1.0) ** 2 * (9.0 * g + math.sqrt(rad)))
    return g * (g - 1.0) + (g * g - 1.0) ** 2 / h + h / 6.0


# ----------------------------------------------------------------- QB3 family

def _qb3_first(c: float) -> float:
    c2 = c * c
    return 2.0 * (4.0 - c2) / (c2 + math.sqrt((2.0 - c2) * (4.0 - 3.0 * c2)))


def qb3_min_term(g: float) -> float:
    """Minimum over c in [0, 1] of the QB3 right-hand side minus ``c * g``."""
    g = check_real("g", g, 0.0)
    f = lambda c: _qb3_first(c) - c * g
    _, val = golden_min_scalar(f, 0.0, 1.0, tol=1e-10)
    return min(val, f(0.0), f(1.0))


def qb3_max_xi(kind, param: float) -> float:
    kind, g = _kind(kind), _param(param)
    if kind is SliceKind.GAMMA:
        return min(max((qb3_min_term(g) - 2.0 * g) / 4.0, 0.0), 1.0 - g)
    return min(qb3_min_term(2.0 * g) / 4.0, 1.0 - g)


def envelope_polynomial(g: float) -> np.poly1d:
    """Degree-8 polynomial in ``lam`` whose extreme real root is the QB3 envelope."""
    lam = np.poly1d([1.0, 0.0])
    return (3 * (lam ** 2 - 8) * (lam ** 2 + 2 * lam - 2) ** 3 + 8 * g ** 8
            - 2 * g ** 6 * (13 * lam ** 2 - 56 * lam + 220)
            + g ** 4 * (31 * lam ** 4 - 104 * lam ** 3 - 470 * lam ** 2 + 960 * lam + 4080)
            - g ** 2 * (16 * lam ** 6 + 10 * lam ** 5 - 449 * lam ** 4 - 1060 * lam ** 3
                        + 1360 * lam ** 2 + 7264 * lam + 8032))


def envelope_term(g: float) -> float:
    """Minus the smallest real root of the envelope polynomial."""
    r = envelope_polynomial(g).roots
    real = r[np.abs(r.imag) < 1e-7].real
    return float(-real.min())


# -------------------------------------------------------------------- LO^2

# (a, b, c, d | x, y, z, w) labels of the ten clique terms
LO2_TERMS = (
    ("1111", "1100"), ("1110", "1100"), ("1101", "1001"), ("1100", "0001"),
    ("1011", "1101"), ("1001", "1001"), ("0111", "1100"), ("0011", "1111"),
    ("0010", "0111"), ("0000", "1010"),
)


def lo2_clique_sum(pa: ProbTable222, pb: ProbTable222, swap_second: bool = True) -> float:
    """Sum of the ten clique terms for two boxes wired side by side.

    With ``swap_second`` the second box enters with its parties interchanged,
    i.e. term (abcd|xyzw) uses pb[d, c, w, z]; this pairing reproduces both
    slice reductions.  ``swap_second=False`` gives the literal pb[c, d, z, w].
    """
    total = 0.0
    for outs, ins in LO2_TERMS:
        a, b, c, d = (int(ch) for ch in outs)
        x, y, z, w = (int(ch) for ch in ins)
        second = pb.p[d, c, w, z] if swap_second else pb.p[c, d, z, w]
        total += pa.p[a, b, x, y] * second
    return float(total)


def lo2_max_xi(kind, param: float) -> float:
    kind, g = _kind(kind), _param(param)
    if kind is SliceKind.GAMMA:
        return (math.sqrt(10.0) - 1.0) * (1.0 - g) / 3.0
    return min((math.sqrt(2.0) * math.sqrt((1.0 - g) * (g + 5.0)) + g - 1.0) / 3.0, 1.0 - g)


# -------------------------------------------------------------- NPA^{1+AB}

FREE_VARIABLES = ("A0.A1", "B0.B1", "A0.A1 B0", "A0.A1 B1", "B0.B1 A0", "B0.B1 A1",
                  "A0.A1 B0.B1", "A0.A1 B1.B0")
GAMMA_LABELS = ("1", "A0", "A1", "B0", "B1", "A0B0", "A0B1", "A1B0", "A1B1")


def _gamma_entries(m, free):
    mA0, mA1, mB0, mB1, c00, c10, c01, c11 = m
    a01, b01, a01b0, a01b1, b01a0, b01a1, a01b01, a01b10 = free
    one = 1.0
    return [
        [one, mA0, mA1, mB0, mB1, c00, c01, c10, c11],
        [mA0, one, a01, c00, c01, mB0, mB1, a01b0, a01b1],
        [mA1, a01, one, c10, c11, a01b0, a01b1, mB0, mB1],
        [mB0, c00, c10, one, b01, mA0, b01a0, mA1, b01a1],
        [mB1, c01, c11, b01, one, b01a0, mA0, b01a1, mA1],
        [c00, mB0, a01b0, mA0, b01a0, one, b01, a01, a01b01],
        [c01, mB1, a01b1, b01a0, mA0, b01, one, a01b10, a01],
        [c10, a01b0, mB0, mA1, b01a1, a01, a01b10, one, b01],
        [c11, a01b1, mB1, b01a1, mA1, a01b01, a01, b01, one],
    ]


@dataclass(frozen=True, eq=False)
class GammaMatrix:
    """Affine moment matrix ``F0 + sum_i v_i E_i`` for a fixed behavior."""

    behavior: Behavior222
    F0: np.ndarray = field(init=False)
    E: np.ndarray = field(init=False)

    def __post_init__(self):
        m = self.behavior.as_array()
        f0 = np.array(_gamma_entries(m, [0.0] * 8))
        basis = []
        for i in range(8):
            unit = [0.0] * 8
            unit[i] = 1.0
            basis.append(np.array(_gamma_entries(np.zeros(8), unit)) - np.array(_gamma_entries(np.zeros(8), [0.0] * 8)))
        object.__setattr__(self, "F0", f0)
        object.__setattr__(self, "E", np.array(basis))

    def matrix(self, free) -> np.ndarray:
        v = np.asarray(free, dtype=float)
        return self.F0 + np.tensordot(v, self.E, axes=(-1, 0))

    def min_eigenvalue(self, free) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix(free))[..., 0]


def npa1ab_max_lambda_min(b: Behavior222, restarts: int = 16, iters: int = 2000,
                          seed=0, stop_at: float | None = None) -> float:
    """Largest attainable minimum eigenvalue of the moment matrix.

    Projected-free subgradient ascent with step 1/k from uniform starts in
    [-1, 1]^8, all restarts advanced together.  ``stop_at`` ends early once
    the best value reaches it.
    """
    gm = GammaMatrix(b)
    rng = np.random.default_rng(seed)
    v = rng.uniform(-1.0, 1.0, size=(check_int("restarts", restarts, 1), 8))
    best = -np.inf
    for k in range(1, check_int("iters", iters, 1) + 1):
        w, vec = np.linalg.eigh(gm.F0 + np.tensordot(v, gm.E, axes=(1, 0)))
        best = max(best, float(w[:, 0].max()))
        if stop_at is not None and best >= stop_at:
            break
        u = vec[:, :, 0]
        grad = np.einsum("ri,kij,rj->rk", u, gm.E, u)
        v = v + grad / k
    return best


def npa1ab_feasible(b: Behavior222, seed=0, **kw) -> bool:
    return npa1ab_max_lambda_min(b, seed=seed, stop_at=NPA1AB_FEASIBLE, **kw) >= NPA1AB_FEASIBLE


def npa1ab_max_xi(kind, param: float, tol: float = 1e-4, seed=0, restarts: int = 16,
                  iters: int = 2000) -> float:
    """Bisection on xi for moment-matrix feasibility; a lower bound on the true edge."""
    kind, g = _kind(kind), _param(param)
    hi = 1.0 - g
    lo = 0.0

    def feasible(xi):
        b = slice_behavior(SliceSpec(kind, g, min(xi, 1.0 - g)))
        return npa1ab_feasible(b, seed=seed, restarts=restarts, iters=iters)

    # xi = 0 is a local box on both slices, so lo is feasible by construction
    if hi <= tol or feasible(hi):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


# --------------------------------------------------------- boundary tracing

CRITERIA: dict[str, Callable[..., float]] = {
    "uffink": uffink_max_xi,
    "npa1": npa1_max_xi,
    "qb3": qb3_max_xi,
    "lo2": lo2_max_xi,
    "npa1ab": npa1ab_max_xi,
}


@dataclass(frozen=True)
class BoundaryRow:
    param: float
    criterion: str
    xi_max: float
    converged: bool


@dataclass(frozen=True)
class BoundaryCurve:
    kind: SliceKind
    rows: tuple[BoundaryRow, ...]

    def __post_init__(self):
        for r in self.rows:
            if r.converged and not (-1e-12 <= r.xi_max <= 1.0 - r.param + 1e-12):
                raise ValueError(f"xi_max {r.xi_max} outside [0, 1-param] at {r.param}")

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.rows)

    def values(self, criterion: str) -> tuple[np.ndarray, np.ndarray]:
        sel = [r for r in self.rows if r.criterion == criterion]
        return np.array([r.param for r in sel]), np.array([r.xi_max for r in sel])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["param", "criterion", "xi_max", "converged"])
        for r in self.rows:
            w.writerow([format(r.param, ".17g"), r.criterion, format(r.xi_max, ".17g"), str(r.converged).lower()])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"slice": self.kind.value,
                           "rows": [{"param": r.param, "criterion": r.criterion,
                                     "xi_max": r.xi_max, "converged": r.converged} for r in self.rows]},
                          indent=1)


def _point_seed(seed: int, index: int) -> np.random.SeedSequence:
    # derived from the grid index so results do not depend on scheduling
    return np.random.SeedSequence([seed, index])


def _evaluate_point(args) -> list[BoundaryRow]:
    kind, param, criteria, seed, index, tol = args
    rows = []
    for name in criteria:
        fn = CRITERIA[name]
        try:
            if name == "npa1ab":
                xi = fn(kind, param, tol=tol, seed=_point_seed(seed, index))
            else:
                xi = fn(kind, param)
            rows.append(BoundaryRow(param, name, float(xi), True))
        except ConvergenceError:
            rows.append(BoundaryRow(param, name, float("nan"), False))
    return rows


def trace_boundary(kind, criteria: Sequence[str], params: Iterable[float], seed: int = 0,
                   workers: int = 1, tol: float = 1e-4) -> BoundaryCurve:
    kind = _kind(kind)
    criteria = list(criteria)
    unknown = [c for c in criteria if c not in CRITERIA]
    if unknown:
        raise ValueError(f"unknown criteria {unknown}; choose from {sorted(CRITERIA)}")
    params = [_param(p) for p in params]
    jobs = [(kind, p, criteria, seed, i, tol) for i, p in enumerate(params)]
    if not criteria or not params:
        return BoundaryCurve(kind, ())
    workers = check_int("workers", workers, 1)
    if workers == 1:
        results = [_evaluate_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_evaluate_point, jobs))
    return BoundaryCurve(kind, tuple(r for rows in results for r in rows))


def red_region(curve: BoundaryCurve, threshold: float = 5e-4) -> list[tuple[float, float]]:
    """Params where the moment-matrix edge exceeds the QB3 edge by more than ``threshold``."""
    p1, npa = curve.values("npa1ab")
    p2, qb3 = curve.values("qb3")
    q = dict(zip(p2.tolist(), qb3.tolist()))
    out = []
    for p, v in zip(p1.tolist(), npa.tolist()):
        if p in q and v - q[p] > threshold:
            out.append((p, v - q[p]))
    return out


def default_grid(points: int = 41) -> np.ndarray:
    return np.linspace(0.0, 1.0, check_int("points", points, 0))
