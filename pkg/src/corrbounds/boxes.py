"""Two-party, two-setting, two-outcome correlation points.

Outcome labels ``{0, 1}`` in probability tables correspond to the
eigenvalues ``{-1, +1}`` of the dichotomic observables, i.e. label 1 is +1.
Expectation coordinates are canonical; probability tables are derived views.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import asdict, dataclass, fields

import numpy as np

from corrbounds._validation import check_real
from corrbounds.exceptions import OutsidePolytopeError

FIELDS = ("mA0", "mA1", "mB0", "mB1", "c00", "c10", "c01", "c11")
TOL = 1e-12


def _sign(label: int) -> int:
    return 2 * label - 1


@dataclass(frozen=True)
class Behavior222:
    """Expectation coordinates; ``cxy`` is the correlator of A_x and B_y."""

    mA0: float
    mA1: float
    mB0: float
    mB1: float
    c00: float
    c10: float
    c01: float
    c11: float

    def __post_init__(self):
        for f in fields(self):
            v = check_real(f.name, getattr(self, f.name))
            if not -1.0 - TOL <= v <= 1.0 + TOL:
                raise ValueError(f"{f.name}={v} outside [-1, 1]")
            object.__setattr__(self, f.name, v)

    def marginal_a(self, x: int) -> float:
        return (self.mA0, self.mA1)[x]

    def marginal_b(self, y: int) -> float:
        return (self.mB0, self.mB1)[y]

    def corr(self, x: int, y: int) -> float:
        return ((self.c00, self.c01), (self.c10, self.c11))[x][y]

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in FIELDS])

    @classmethod
    def from_array(cls, values) -> "Behavior222":
        values = np.asarray(values, dtype=float).ravel()
        if values.size != 8:
            raise ValueError(f"expected 8 coordinates, got {values.size}")
        return cls(*values.tolist())

    def probability(self, a: int, b: int, x: int, y: int) -> float:
        sa, sb = _sign(a), _sign(b)
        return (1.0 + sa * self.marginal_a(x) + sb * self.marginal_b(y)
                + sa * sb * self.corr(x, y)) / 4.0

    def is_nonsignalling_point(self, tol: float = TOL) -> bool:
        """True when all derived probabilities are nonnegative."""
        return bool(_probabilities(self).min() >= -tol)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "Behavior222":
        missing = set(FIELDS) - set(data)
        if missing:
            raise ValueError(f"missing behavior fields: {sorted(missing)}")
        return cls(**{k: data[k] for k in FIELDS})

    @classmethod
    def from_json(cls, text: str) -> "Behavior222":
        return cls.from_dict(json.loads(text))


def _probabilities(b: Behavior222) -> np.ndarray:
    p = np.empty((2, 2, 2, 2))
    for a, bb, x, y in itertools.product((0, 1), repeat=4):
        p[a, bb, x, y] = b.probability(a, bb, x, y)
    return p


@dataclass(frozen=True, eq=False)
class ProbTable222:
    """Table ``p[a, b, x, y]`` of conditional probabilities P(ab|xy)."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.shape != (2, 2, 2, 2):
            raise ValueError(f"probability table must have shape (2,2,2,2), got {p.shape}")
        if p.min() < -TOL:
            raise OutsidePolytopeError(f"negative probability {p.min():.3g}")
        norm = p.sum(axis=(0, 1))
        if np.abs(norm - 1.0).max() > TOL:
            raise ValueError("each context must be normalized")
        pa = p.sum(axis=1)  # [a, x, y]
        pb = p.sum(axis=0)  # [b, x, y]
        if np.abs(pa[:, :, 0] - pa[:, :, 1]).max() > TOL or np.abs(pb[:, 0, :] - pb[:, 1, :]).max() > TOL:
            raise ValueError("table is signalling")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    def __getitem__(self, idx):
        return self.p[idx]

    def __eq__(self, other):
        return isinstance(other, ProbTable222) and np.array_equal(self.p, other.p)

    def __hash__(self):
        return hash(self.p.tobytes())

    def prob(self, a: int, b: int, x: int, y: int) -> float:
        return float(self.p[a, b, x, y])


def to_probabilities(b: Behavior222) -> ProbTable222:
    p = _probabilities(b)
    if p.min() < -TOL:
        raise OutsidePolytopeError(f"behavior implies probability {p.min():.3g} < 0")
    return ProbTable222(np.clip(p, 0.0, None))


def to_behavior(t: ProbTable222) -> Behavior222:
    p = t.p
    s = np.array([-1.0, 1.0])
    mA = [float(s @ p[:, :, x, 0].sum(axis=1)) for x in (0, 1)]
    mB = [float(s @ p[:, :, 0, y].sum(axis=0)) for y in (0, 1)]
    c = {(x, y): float(s @ p[:, :, x, y] @ s) for x in (0, 1) for y in (0, 1)}
    return Behavior222(mA[0], mA[1], mB[0], mB[1], c[0, 0], c[1, 0], c[0, 1], c[1, 1])


def pr_box() -> ProbTable222:
    p = np.zeros((2, 2, 2, 2))
    for a, b, x, y in itertools.product((0, 1), repeat=4):
        if a ^ b == x * y:
            p[a, b, x, y] = 0.5
    return ProbTable222(p)


def invariant_local_box(m: float, n: float) -> ProbTable222:
    """Product box where Alice outputs 1 with probability ``m`` and Bob with ``n``."""
    m = check_real("m", m, 0.0, 1.0)
    n = check_real("n", n, 0.0, 1.0)
    pa = np.array([1.0 - m, m])
    pb = np.array([1.0 - n, n])
    p = np.einsum("a,b,xy->abxy", pa, pb, np.ones((2, 2)))
    return ProbTable222(p)


product_box = invariant_local_box


def white_noise() -> Behavior222:
    return Behavior222(*([0.0] * 8))


def deterministic_boxes() -> list[Behavior222]:
    """The 16 local deterministic points."""
    out = []
    for a0, a1, b0, b1 in itertools.product((-1.0, 1.0), repeat=4):
        out.append(Behavior222(a0, a1, b0, b1, a0 * b0, a1 * b0, a0 * b1, a1 * b1))
    return out


def mix(behaviors, weights) -> Behavior222:
    w = np.asarray(weights, dtype=float)
    if w.min() < 0 or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be a probability vector")
    arr = np.array([b.as_array() for b in behaviors])
    return Behavior222.from_array(np.clip(w @ arr, -1.0, 1.0))


class SliceKind(str, enum.Enum):
    GAMMA = "gamma"
    BETA = "beta"


@dataclass(frozen=True)
class SliceSpec:
    """One point on a one-parameter family of PR-box mixtures."""

    kind: SliceKind
    param: float
    xi: float

    def __post_init__(self):
        object.__setattr__(self, "kind", SliceKind(self.kind))
        param = check_real("param", self.param, 0.0, 1.0)
        xi = check_real("xi", self.xi, 0.0, 1.0)
        if xi + param > 1.0 + TOL:
            raise ValueError(f"xi + param = {xi + param} exceeds 1")
        object.__setattr__(self, "param", param)
        object.__setattr__(self, "xi", xi)


def slice_behavior(s: SliceSpec) -> Behavior222:
    g, xi = s.param, s.xi
    if s.kind is SliceKind.GAMMA:
        return Behavior222(g, g, g, g, g + xi, g + xi, g + xi, g - xi)
    return Behavior222(g, g, 0.0, 0.0, xi, xi, xi, -xi)


def chsh_value(b: Behavior222) -> float:
    return b.c00 + b.c10 + b.c01 - b.c11
