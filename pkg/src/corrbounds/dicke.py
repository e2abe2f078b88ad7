"""States diagonal in the Dicke basis: separable decompositions, PPT tests, volumes.

Populations ``chi[n1]`` are indexed by the number of excited qubits ``n1``;
``n0 = N - n1``.  A symmetric separable state built from identical qubits
with ground-state population ``y`` has ``chi[n1] = C(N, n1) y^n0 (1-y)^n1``.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.linalg
from scipy.optimize import least_squares

from corrbounds._validation import check_int, check_populations, check_real

RESIDUAL_TOL = 1e-8
RANGE_TOL = 1e-9
DET_TOL = 1e-12
MC_CHUNK = 1 << 18


@dataclass(frozen=True, eq=False)
class DickeDiagonalState:
    N: int
    chi: np.ndarray

    def __post_init__(self):
        n = check_int("N", self.N, 1)
        chi = check_populations(self.chi, n)
        chi = chi.copy()
        chi.setflags(write=False)
        object.__setattr__(self, "N", n)
        object.__setattr__(self, "chi", chi)

    def __eq__(self, other):
        return isinstance(other, DickeDiagonalState) and self.N == other.N and np.array_equal(self.chi, other.chi)

    def moments(self) -> np.ndarray:
        """chi[k] / C(N, k): the per-configuration weights."""
        return self.chi / _binoms(self.N)

    def to_json(self) -> str:
        return json.dumps({"N": self.N, "chi": self.chi.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "DickeDiagonalState":
        data = json.loads(text)
        if not isinstance(data, dict) or "N" not in data or "chi" not in data:
            raise ValueError('state JSON must look like {"N": int, "chi": [...]}')
        return cls(data["N"], np.asarray(data["chi"], dtype=float))


@lru_cache(maxsize=None)
def _binoms_cached(n: int) -> tuple[float, ...]:
    return tuple(float(math.comb(n, k)) for k in range(n + 1))


def _binoms(n: int) -> np.ndarray:
    return np.array(_binoms_cached(n))


def jx_max(N: int) -> int:
    return (N + 2) // 2


def jy_max(N: int) -> int:
    return (N + 1) // 2


def _sds_chi(x: np.ndarray, y: np.ndarray, N: int) -> np.ndarray:
    n1 = np.arange(N + 1)
    y = np.asarray(y, dtype=float)[:, None]
    terms = y ** (N - n1) * (1.0 - y) ** n1
    return _binoms(N) * (np.asarray(x, dtype=float) @ terms)


def sds_populations(y: float, N: int) -> DickeDiagonalState:
    y = check_real("y", y, 0.0, 1.0)
    N = check_int("N", N, 1)
    return DickeDiagonalState(N, _sds_chi(np.array([1.0]), np.array([y]), N))


def sds_mixture(x, y, N: int) -> DickeDiagonalState:
    """Convex mixture of symmetric product states with weights ``x``."""
    return DickeDiagonalState(N, _sds_chi(np.asarray(x, float), np.asarray(y, float), N))


# ------------------------------------------------------------------ fitting

@dataclass(frozen=True, eq=False)
class SDSDecomposition:
    """Weights ``x`` and ground-state amplitudes ``y`` (nonincreasing)."""

    N: int
    x: np.ndarray
    y: np.ndarray
    residual: float
    method: str

    @property
    def range_violation(self) -> float:
        lo = max(0.0, -self.x.min(initial=0.0), -self.y.min(initial=0.0))
        hi = max(0.0, self.x.max(initial=0.0) - 1.0, self.y.max(initial=0.0) - 1.0)
        return float(max(lo, hi))

    @property
    def failure(self) -> str | None:
        if not np.isfinite(self.residual) or self.residual >= RESIDUAL_TOL:
            return "residual"
        if self.range_violation > RANGE_TOL:
            return "range"
        return None

    @property
    def certified(self) -> bool:
        return self.failure is None

    def populations(self) -> np.ndarray:
        return _sds_chi(self.x, self.y, self.N)


def _make_decomposition(x, y, chi, N, method) -> SDSDecomposition:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    order = np.argsort(-y, kind="stable")
    x, y = x[order], y[order]
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        return SDSDecomposition(N, x, y, math.inf, method)
    resid = float(np.abs(_sds_chi(x, y, N) - chi).max()) if x.size else float(np.abs(chi).max())
    return SDSDecomposition(N, x, y, resid, method)


def _prony_nodes(m: np.ndarray, r: int):
    """Nodes t and weights w with sum_j w_j t_j^k = m_k for k < 2r, or None."""
    if r == 0:
        return np.zeros(0), np.zeros(0)
    h0 = scipy.linalg.hankel(m[:r], m[r - 1:2 * r - 1])
    h1 = scipy.linalg.hankel(m[1:r + 1], m[r:2 * r])
    try:
        t, vec = scipy.linalg.eigh(h1, h0)
    except (np.linalg.LinAlgError, ValueError):
        return None
    # for the normalization v^T H0 v = 1 the weight is (H0 v)_0 squared
    w = (h0 @ vec)[0] ** 2
    return t, w


def _candidates(chi: np.ndarray, N: int):
    m = chi / _binoms(N)
    for r in range(jy_max(N), -1, -1):
        nodes = _prony_nodes(m, r)
        if nodes is None:
            continue
        t, w = nodes
        with np.errstate(over="ignore", invalid="ignore"):
            y = 1.0 / (1.0 + t)
            x = w * (1.0 + t) ** N
        for pin in ((True, False) if N % 2 == 0 else (False, True)):
            if r + pin > jx_max(N) or (pin and 2 * r > N):
                continue
            if pin:
                # a node at y = 0 contributes only to the fully excited population
                xp = m[N] - float(np.sum(x * (1.0 - y) ** N))
                yield np.append(x, xp), np.append(y, 0.0), f"prony{r}+pin"
            else:
                yield x, y, f"prony{r}"


def _lsq_fit(chi: np.ndarray, N: int, starts: int, seed: int) -> SDSDecomposition:
    jx, jy = jx_max(N), jy_max(N)
    pinned = jx > jy

    def unpack(p):
        x = p[:jx]
        y = np.append(p[jx:], 0.0) if pinned else p[jx:]
        return x, y

    def resid(p):
        x, y = unpack(p)
        return _sds_chi(x, y, N) - chi

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(starts):
        p0 = np.concatenate([rng.dirichlet(np.ones(jx)), np.sort(rng.uniform(0, 1, jy))[::-1]])
        sol = least_squares(resid, p0, bounds=(0.0, 1.0), xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            max_nfev=2000)
        cand = _make_decomposition(*unpack(sol.x), chi, N, "lsq")
        if best is None or cand.residual < best.residual:
            best = cand
        if best.certified:
            break
    return best


@dataclass(frozen=True, eq=False)
class SDSFit:
    """Outcome of a separability fit; ``best`` is the certificate when it fails."""

    best: SDSDecomposition
    ppt: bool

    @property
    def certified(self) -> bool:
        return self.best.certified

    @property
    def decomposition(self) -> SDSDecomposition | None:
        return self.best if self.best.certified else None

    @property
    def failure(self) -> str | None:
        return self.best.failure

    @property
    def residual(self) -> float:
        return self.best.residual


def sds_fit(s: DickeDiagonalState, starts: int = 32, seed: int = 0, fallback: bool = True) -> SDSFit:
    """Decompose ``s`` into symmetric product states, certifying residual and ranges."""
    chi, N = np.asarray(s.chi), s.N
    ppt = ppt_all(s)
    best = None
    for x, y, method in _candidates(chi, N):
        cand = _make_decomposition(x, y, chi, N, method)
        if cand.certified:
            return SDSFit(_drop_empty(cand, chi), ppt)
        if best is None or (cand.residual, cand.range_violation) < (best.residual, best.range_violation):
            best = cand
    if fallback and ppt:
        cand = _lsq_fit(chi, N, starts, seed)
        if cand.certified:
            return SDSFit(_drop_empty(cand, chi), ppt)
        if best is None or cand.residual < best.residual:
            best = cand
    if best is None:
        best = SDSDecomposition(N, np.zeros(0), np.zeros(0), math.inf, "none")
    return SDSFit(best, ppt)


def _drop_empty(d: SDSDecomposition, chi) -> SDSDecomposition:
    """Remove free nodes with weight below the range tolerance; keep a y = 0 node."""
    keep = (d.x >= RANGE_TOL) | (d.y == 0.0)
    if keep.all() or not keep.any():
        return d
    smaller = _make_decomposition(d.x[keep], d.y[keep], chi, d.N, d.method)
    return smaller if smaller.certified else d


# --------------------------------------------------------------------- PPT

@lru_cache(maxsize=None)
def _ppt_scale(N: int, q: int, m: int) -> np.ndarray:
    c = np.empty((q + 1, q + 1))
    for a in range(q + 1):
        for b in range(q + 1):
            c[a, b] = math.sqrt(math.comb(q, a) * math.comb(q, b) * math.comb(N - q, m + a)
                                * math.comb(N - q, m + b)) / math.comb(N, m + a + b)
    return c


def _ppt_index(q: int, m: int) -> np.ndarray:
    return m + np.add.outer(np.arange(q + 1), np.arange(q + 1))


def ppt_matrix(s: DickeDiagonalState, q: int, m: int) -> np.ndarray:
    """Block of the partial transpose over ``q`` qubits with offset ``m``."""
    N = s.N
    q = check_int("q", q, 1, N // 2)
    m = check_int("m", m, 0, N - 2 * q)
    return np.asarray(s.chi)[_ppt_index(q, m)] * _ppt_scale(N, q, m)


def ppt_blocks(N: int):
    return [(q, m) for q in range(1, N // 2 + 1) for m in range(N - 2 * q + 1)]


def ppt_determinants(s: DickeDiagonalState) -> dict[tuple[int, int], float]:
    return {(q, m): float(np.linalg.det(ppt_matrix(s, q, m))) for q, m in ppt_blocks(s.N)}


def ppt_all(s: DickeDiagonalState) -> bool:
    return all(d >= -DET_TOL for d in ppt_determinants(s).values())


def ppt_all_batch(chi: np.ndarray) -> np.ndarray:
    """Vectorized ``ppt_all`` over rows of a (S, N+1) population array."""
    chi = np.atleast_2d(np.asarray(chi, dtype=float))
    N = chi.shape[1] - 1
    ok = np.ones(len(chi), dtype=bool)
    for q, m in ppt_blocks(N):
        mats = chi[:, _ppt_index(q, m)] * _ppt_scale(N, q, m)
        ok &= np.linalg.det(mats) >= -DET_TOL
    return ok


# ---------------------------------------------------- Jacobian and volumes

def _zn(N: int) -> int:
    return math.prod(math.comb(N, n) for n in range(N + 1))


def _full_amplitudes(y, N: int) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if y.size == jy_max(N) and jx_max(N) > jy_max(N):
        y = np.append(y, 0.0)
    if y.size != jx_max(N):
        raise ValueError(f"expected {jy_max(N)} free amplitudes for N={N}, got {y.size}")
    return y


def jacobian_det(x, y, N: int) -> float:
    """Absolute Jacobian determinant of (x, y) -> chi.

    ``x`` has jx_max entries; ``y`` the jy_max free amplitudes (a trailing zero
    node is added for even N).
    """
    N = check_int("N", N, 1)
    x = np.asarray(x, dtype=float).ravel()
    if x.size != jx_max(N):
        raise ValueError(f"expected {jx_max(N)} weights for N={N}, got {x.size}")
    y = _full_amplitudes(y, N)
    val = float(_zn(N)) * abs(float(np.prod(x[:jy_max(N)])))
    for k in range(jy_max(N)):
        for j in range(jx_max(N)):
            if j != k:
                val *= (y[j] - y[k]) ** 2
    return val


def sds_jacobian_fd(x, y, N: int, h: float = 1e-6) -> float:
    """Central-difference Jacobian determinant of the same map."""
    x = np.asarray(x, dtype=float).ravel()
    y = _full_amplitudes(y, N)
    jy = jy_max(N)

    def f(p):
        yy = y.copy()
        yy[:jy] = p[x.size:]
        return _sds_chi(p[:x.size], yy, N)

    p0 = np.concatenate([x, y[:jy]])
    J = np.empty((N + 1, p0.size))
    for i in range(p0.size):
        e = np.zeros_like(p0)
        e[i] = h
        J[:, i] = (f(p0 + e) - f(p0 - e)) / (2 * h)
    return abs(float(np.linalg.det(J)))


def sds_volume_closed(N: int) -> Fraction:
    N = check_int("N", N, 1, 12)
    v = Fraction(1)
    for z in range(1, N + 1):
        v *= Fraction(z ** (z - 1) * math.factorial(z - 1), math.factorial(2 * z - 1))
    return v


def sds_volume_quadrature(N: int) -> float:
    """Volume of the separable set by exact Gauss-Legendre quadrature of the Jacobian."""
    N = check_int("N", N, 1, 8)
    jx, jy = jx_max(N), jy_max(N)
    npts = 2 * (jx - 1) + 1
    nodes, weights = np.polynomial.legendre.leggauss(npts)
    nodes, weights = (nodes + 1) / 2, weights / 2
    grids = np.array(list(itertools.product(range(npts), repeat=jy)))
    ys = nodes[grids]
    w = np.prod(weights[grids], axis=1)
    if jx > jy:
        ys = np.hstack([ys, np.zeros((len(ys), 1))])
    integrand = np.ones(len(ys))
    for k in range(jy):
        for j in range(jx):
            if j != k:
                integrand *= (ys[:, j] - ys[:, k]) ** 2
    # weights integrate to the Dirichlet factor 1/N!; unordered nodes counted jy! times
    return float(_zn(N) / (math.factorial(jy) * math.factorial(N)) * (w @ integrand))


def _simplex_chunk(N: int, size: int, seed_seq) -> np.ndarray:
    rng = np.random.default_rng(seed_seq)
    u = np.sort(rng.random((size, N)), axis=1)
    edges = np.hstack([np.zeros((size, 1)), u, np.ones((size, 1))])
    return np.diff(edges, axis=1)


def _chunk_plan(samples: int, seed: int):
    sizes = [MC_CHUNK] * (samples // MC_CHUNK)
    if samples % MC_CHUNK:
        sizes.append(samples % MC_CHUNK)
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    return list(zip(sizes, seqs))


def _count_ppt(args) -> int:
    N, size, seq = args
    return int(ppt_all_batch(_simplex_chunk(N, size, seq)).sum())


def pptds_volume_mc(N: int, samples: int, seed: int = 0, workers: int = 1) -> tuple[float, float]:
    """Monte Carlo volume of the PPT set; returns (estimate, standard error).

    The sample stream is cut into fixed chunks with spawned seeds, so the
    result does not depend on ``workers``.
    """
    N = check_int("N", N, 1, 12)
    samples = check_int("samples", samples, 10_000)
    seed = check_int("seed", seed, 0)
    jobs = [(N, size, seq) for size, seq in _chunk_plan(samples, seed)]
    if check_int("workers", workers, 1) == 1:
        hits = sum(_count_ppt(j) for j in jobs)
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            hits = sum(ex.map(_count_ppt, jobs))
    p = hits / samples
    scale = 1.0 / math.factorial(N)  # volume of the population simplex
    return p * scale, math.sqrt(p * (1.0 - p) / samples) * scale


def sample_ppt_states(N: int, count: int, seed: int = 0) -> np.ndarray:
    """Rejection-sample ``count`` PPT population vectors from the uniform simplex."""
    out = []
    have = 0
    ss = np.random.SeedSequence(seed)
    while have < count:
        chunk = _simplex_chunk(N, MC_CHUNK, ss.spawn(1)[0])
        good = chunk[ppt_all_batch(chunk)]
        out.append(good)
        have += len(good)
    return np.vstack(out)[:count]


def mc_equivalence_scan(N: int, samples: int, seed: int = 0) -> int:
    """Number of sampled PPT states for which no separable decomposition is found."""
    N = check_int("N", N, 1, 8)
    samples = check_int("samples", samples, 1)
    failures = 0
    for chi in sample_ppt_states(N, samples, seed):
        state = DickeDiagonalState(N, chi / chi.sum())
        if not sds_fit(state).certified:
            failures += 1
    return failures


# ---------------------------------------------------- computational basis

def dicke_basis(N: int) -> np.ndarray:
    """Columns are Dicke states |D_n1> in the 2^N computational basis (bit 1 = excited)."""
    N = check_int("N", N, 1, 14)
    dim = 2 ** N
    weights = np.array([bin(i).count("1") for i in range(dim)])
    basis = np.zeros((dim, N + 1))
    for n in range(N + 1):
        basis[weights == n, n] = 1.0 / math.sqrt(math.comb(N, n))
    return basis


def full_density_matrix(s: DickeDiagonalState) -> np.ndarray:
    D = dicke_basis(s.N)
    return (D * s.chi) @ D.T


def partial_transpose(rho: np.ndarray, n_qubits: int, k: int) -> np.ndarray:
    """Transpose the first ``k`` qubits of an ``n_qubits`` register."""
    d1, d2 = 2 ** k, 2 ** (n_qubits - k)
    r = rho.reshape(d1, d2, d1, d2)
    return r.transpose(2, 1, 0, 3).reshape(d1 * d2, d1 * d2)
