"""Steady states of coherently driven collective decay in the symmetric sector.

Density matrices are stored as a real symmetric array ``X`` with
``rho[a, b] = X[a, b] * 1j ** (a - b)`` in the Dicke basis, where ``a`` and
``b`` count excitations.  The drive is ``(omega/2)(J+ + J-)`` and the
collapse operator is ``sqrt(Gamma) J-``; times are in units of 1/Gamma.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

from corrbounds._validation import check_int, check_real
from corrbounds.dicke import dicke_basis, partial_transpose
from corrbounds.exceptions import ConvergenceError, SingularSystemError, ZeroMeanSpinError

RESIDUAL_TOL = 1e-9


def ladder_factors(n: int, N: int) -> tuple[float, float]:
    """Raising and lowering amplitudes: J+|n> = f+|n+1>, J-|n> = f-|n-1>."""
    N = check_int("N", N, 1)
    n = check_int("n", n, 0, N)
    return math.sqrt((n + 1) * (N - n)), math.sqrt(n * (N - n + 1))


def _phases(N: int) -> np.ndarray:
    n = np.arange(N + 1)
    return 1j ** np.subtract.outer(n, n)


@dataclass(frozen=True, eq=False)
class SymmetricDensityMatrix:
    N: int
    X: np.ndarray

    def __post_init__(self):
        N = check_int("N", self.N, 1)
        X = np.array(self.X, dtype=float)
        if X.shape != (N + 1, N + 1):
            raise ValueError(f"X must be {(N + 1, N + 1)}, got {X.shape}")
        if not np.allclose(X, X.T, atol=1e-12, rtol=0):
            raise ValueError("X must be symmetric")
        if abs(np.trace(X) - 1.0) > 1e-10:
            raise ValueError(f"trace {np.trace(X):.15g} differs from 1")
        X = (X + X.T) / 2
        lam = float(np.linalg.eigvalsh(X * _phases(N))[0])
        if lam < -1e-8:
            raise ValueError(f"density matrix not positive semidefinite (min eigenvalue {lam:.3g})")
        X.setflags(write=False)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "X", X)

    def matrix(self) -> np.ndarray:
        """Complex density matrix in the Dicke basis."""
        return self.X * _phases(self.N)

    @classmethod
    def from_matrix(cls, rho: np.ndarray, tol: float = 1e-8) -> "SymmetricDensityMatrix":
        N = rho.shape[0] - 1
        X = rho / _phases(N)
        if np.abs(X.imag).max() > tol:
            raise ValueError("matrix does not follow the real phase convention")
        return cls(N, X.real)

    def computational(self) -> np.ndarray:
        """Full 2^N density matrix."""
        D = dicke_basis(self.N)
        return D @ self.matrix() @ D.T

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix())[0])

    def to_json(self) -> str:
        iu = np.triu_indices(self.N + 1)
        return json.dumps({"N": self.N, "upper": self.X[iu].tolist()})


def ground_state(N: int) -> SymmetricDensityMatrix:
    X = np.zeros((N + 1, N + 1))
    X[0, 0] = 1.0
    return SymmetricDensityMatrix(N, X)


@dataclass(frozen=True)
class DriveSpec:
    N: int
    omega: float

    def __post_init__(self):
        object.__setattr__(self, "N", check_int("N", self.N, 1, 80))
        object.__setattr__(self, "omega", check_real("omega", self.omega))


# ------------------------------------------------------------ X equations

def _fp(N):
    n = np.arange(N + 1)
    return np.sqrt((n + 1.0) * (N - n))


def _fm(N):
    n = np.arange(N + 1)
    return np.sqrt(n * (N - n + 1.0))


def drive_rhs(X: np.ndarray, N: int, omega: float) -> np.ndarray:
    """Time derivative of the real element array."""
    fp, fm = _fp(N), _fm(N)
    Xp = np.zeros((N + 3, N + 3))
    Xp[1:-1, 1:-1] = X
    up_a = Xp[2:, 1:-1]     # X[a+1, b]
    up_b = Xp[1:-1, 2:]     # X[a, b+1]
    dn_a = Xp[:-2, 1:-1]    # X[a-1, b]
    dn_b = Xp[1:-1, :-2]    # X[a, b-1]
    up_ab = Xp[2:, 2:]      # X[a+1, b+1]
    a, b = fp[:, None], fp[None, :]
    ma, mb = fm[:, None], fm[None, :]
    return (omega / 2 * (a * up_a + b * up_b) - omega / 2 * (ma * dn_a + mb * dn_b)
            + a * b * up_ab - (ma ** 2 + mb ** 2) / 2 * X)


def _upper_index(N: int):
    iu = np.triu_indices(N + 1)
    idx = -np.ones((N + 1, N + 1), dtype=int)
    idx[iu] = np.arange(len(iu[0]))
    idx = np.maximum(idx, idx.T)
    return iu, idx


def _system(N: int, omega: float):
    """Dense stationarity system over the upper triangle with the trace row."""
    iu, idx = _upper_index(N)
    n = len(iu[0])
    fp, fm = _fp(N), _fm(N)
    A = np.zeros((n, n))
    for row, (a, b) in enumerate(zip(*iu)):
        def add(i, j, c):
            if 0 <= i <= N and 0 <= j <= N and c != 0.0:
                A[row, idx[i, j]] += c
        add(a + 1, b, omega / 2 * fp[a])
        add(a, b + 1, omega / 2 * fp[b])
        add(a - 1, b, -omega / 2 * fm[a])
        add(a, b - 1, -omega / 2 * fm[b])
        add(a + 1, b + 1, fp[a] * fp[b])
        add(a, b, -(fm[a] ** 2 + fm[b] ** 2) / 2)
    rhs = np.zeros(n)
    # the (0,0) equation is implied by the others through trace preservation
    A[0, :] = 0.0
    A[0, idx[np.arange(N + 1), np.arange(N + 1)]] = 1.0
    rhs[0] = 1.0
    return A, rhs, iu


def steady_state(d: DriveSpec) -> SymmetricDensityMatrix:
    A, rhs, iu = _system(d.N, d.omega)
    lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    diag = np.abs(np.diag(lu))
    if diag.min() <= 1e-13 * max(diag.max(), 1.0):
        raise SingularSystemError(f"stationarity system singular for N={d.N}, omega={d.omega}")
    sol = scipy.linalg.lu_solve((lu, piv), rhs)
    X = np.zeros((d.N + 1, d.N + 1))
    X[iu] = sol
    X = X + np.triu(X, 1).T
    res = stationarity_residual(X, d.N, d.omega)
    if res > RESIDUAL_TOL:
        raise ConvergenceError(f"stationarity residual {res:.3g} exceeds {RESIDUAL_TOL}")
    return SymmetricDensityMatrix(d.N, X / np.trace(X))


def stationarity_residual(X, N: int, omega: float) -> float:
    X = X.X if isinstance(X, SymmetricDensityMatrix) else np.asarray(X)
    return float(np.abs(drive_rhs(X, N, omega)).max())


def _spin_ladder(N: int) -> np.ndarray:
    """J+ for spin j = N/2 in the basis m = -j..j, built from the angular-momentum formula."""
    j = N / 2
    m = np.arange(-j, j + 1)
    Jp = np.zeros((N + 1, N + 1))
    for k in range(N):
        Jp[k + 1, k] = math.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    return Jp


def lindblad_oracle(d: DriveSpec, T: float = 50.0, rtol: float = 1e-10,
                    atol: float = 1e-12) -> SymmetricDensityMatrix:
    """Integrate the complex master equation from the ground state up to time T."""
    if d.N > 10:
        raise ValueError("oracle integration is limited to N <= 10")
    Jp = _spin_ladder(d.N).astype(complex)
    Jm = Jp.conj().T
    H = d.omega / 2 * (Jp + Jm)
    eye = np.eye(d.N + 1)
    # row-major vectorization: vec(A rho B) = kron(A, B^T) vec(rho)
    L = (-1j * (np.kron(H, eye) - np.kron(eye, H.T)) + np.kron(Jm, Jp.T)
         - 0.5 * np.kron(Jp @ Jm, eye) - 0.5 * np.kron(eye, (Jp @ Jm).T))
    rho0 = np.zeros((d.N + 1, d.N + 1), dtype=complex)
    rho0[0, 0] = 1.0
    sol = solve_ivp(lambda t, y: L @ y, (0.0, T), rho0.ravel(), method="DOP853",
                    rtol=rtol, atol=atol)
    if not sol.success:
        raise ConvergenceError(sol.message)
    rho = sol.y[:, -1].reshape(d.N + 1, d.N + 1)
    return SymmetricDensityMatrix.from_matrix(rho, tol=1e-7)


def lindblad_trace_drift(d: DriveSpec, T: float = 50.0) -> float:
    """Largest deviation of the trace from one along the oracle trajectory."""
    Jp = _spin_ladder(d.N).astype(complex)
    Jm = Jp.conj().T
    H = d.omega / 2 * (Jp + Jm)
    eye = np.eye(d.N + 1)
    L = (-1j * (np.kron(H, eye) - np.kron(eye, H.T)) + np.kron(Jm, Jp.T)
         - 0.5 * np.kron(Jp @ Jm, eye) - 0.5 * np.kron(eye, (Jp @ Jm).T))
    rho0 = np.zeros((d.N + 1) ** 2, dtype=complex)
    rho0[0] = 1.0
    sol = solve_ivp(lambda t, y: L @ y, (0.0, T), rho0, method="DOP853", rtol=1e-10, atol=1e-12,
                    t_eval=np.linspace(0, T, 101))
    tr = sol.y.reshape(d.N + 1, d.N + 1, -1).trace(axis1=0, axis2=1)
    return float(np.abs(tr - 1.0).max())


# --------------------------------------------------------- reduced states

def cg_coefficient(N: int, d: int, n1: int, n2: int) -> float:
    """Overlap factor splitting |D^N_{n1+n2}> into |D^d_{n1}>|D^{N-d}_{n2}>."""
    n1 = check_int("nPrime", n1, 0, d)
    n2 = check_int("nDoublePrime", n2, 0, N - d)
    return math.sqrt(math.comb(d, n1) * math.comb(N - d, n2) / math.comb(N, n1 + n2))


def reduced_state(rho: SymmetricDensityMatrix, d: int) -> SymmetricDensityMatrix:
    N = rho.N
    d = check_int("d", d, 1, N - 1)
    cg = np.array([[cg_coefficient(N, d, a, k) for k in range(N - d + 1)] for a in range(d + 1)])
    Xd = np.zeros((d + 1, d + 1))
    for a in range(d + 1):
        for b in range(d + 1):
            ks = np.arange(N - d + 1)
            Xd[a, b] = np.sum(cg[a] * cg[b] * rho.X[a + ks, b + ks])
    return SymmetricDensityMatrix(d, Xd)


def two_qubit_matrix(rho2: SymmetricDensityMatrix) -> np.ndarray:
    if rho2.N != 2:
        raise ValueError("expected a two-qubit reduced state")
    return rho2.computational()


def sigma_xx(rho: SymmetricDensityMatrix) -> float:
    """Two-body correlator <sigma_x sigma_x> on the two-qubit reduced state."""
    sx = np.array([[0, 1], [1, 0]])
    r2 = rho if rho.N == 2 else reduced_state(rho, 2)
    return float(np.trace(r2.computational() @ np.kron(sx, sx)).real)


# ----------------------------------------------------------- diagnostics

def spin_squeezing(rho: SymmetricDensityMatrix) -> float:
    N = rho.N
    if N < 2:
        raise ValueError("squeezing needs N >= 2")
    X = rho.X
    total = 0.0
    for q in range(1, N):
        total += q * (N - q) * X[q, q]
        total -= math.sqrt(q * (q + 1) * (N - q) * (N - q + 1)) * X[q - 1, q + 1]
    return 1.0 + 2.0 / N * total


def collective_spin(N: int):
    """J_x, J_y, J_z in the Dicke basis ordered by excitation number."""
    fp = _fp(N)
    Jp = np.diag(fp[:-1], -1).astype(complex)  # <n+1| J+ |n>
    Jm = Jp.conj().T
    Jx = (Jp + Jm) / 2
    Jy = (Jp - Jm) / 2j
    Jz = np.diag(np.arange(N + 1) - N / 2).astype(complex)
    return Jx, Jy, Jz


def general_spin_squeezing(rho: SymmetricDensityMatrix) -> float:
    """Minimal transverse variance relative to the coherent-state value."""
    N = rho.N
    r = rho.matrix()
    Jx, Jy, Jz = collective_spin(N)
    ex = lambda A: float(np.trace(r @ A).real)
    mx, my, mz = ex(Jx), ex(Jy), ex(Jz)
    norm = math.sqrt(mx * mx + my * my + mz * mz)
    if norm < 1e-12:
        raise ZeroMeanSpinError("mean spin vanishes; squeezing direction undefined")
    theta = math.acos(max(-1.0, min(1.0, mz / norm)))
    phi = math.atan2(my, mx)
    J1 = -Jx * math.sin(phi) + Jy * math.cos(phi)
    J2 = (Jx * math.cos(theta) * math.cos(phi) + Jy * math.cos(theta) * math.sin(phi)
          - Jz * math.sin(theta))
    a = ex(J1 @ J1 + J2 @ J2)
    b = ex(J1 @ J1 - J2 @ J2)
    c = ex(J1 @ J2 + J2 @ J1)
    return 2.0 * (a - math.sqrt(b * b + c * c)) / N


def negativity(rho: np.ndarray, k: int) -> float:
    """(trace norm of the partial transpose over the first k qubits - 1) / 2."""
    rho = np.asarray(rho)
    dim = rho.shape[0]
    n = int(round(math.log2(dim)))
    if 2 ** n != dim or dim > 2 ** 10:
        raise ValueError("matrix dimension must be a power of two up to 2^10")
    k = check_int("k", k, 1, n - 1)
    ev = np.linalg.eigvalsh(partial_transpose(rho, n, k))
    return float((np.abs(ev).sum() - 1.0) / 2.0)


def pair_negativity(rho: SymmetricDensityMatrix) -> float:
    r2 = rho if rho.N == 2 else reduced_state(rho, 2)
    return negativity(r2.computational(), 1)


# ------------------------------------------------------------------ sweeps

@dataclass(frozen=True)
class SweepRow:
    N: int
    omega: float
    xi2: float
    negativity: float
    converged: bool


@dataclass(frozen=True)
class SweepTable:
    N: int
    rows: tuple[SweepRow, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "Omega", "xi2", "negativity", "converged"])
        for r in self.rows:
            w.writerow([r.N, format(r.omega, ".17g"), format(r.xi2, ".17g"),
                        format(r.negativity, ".17g"), str(r.converged).lower()])
        return buf.getvalue()

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.rows)

    def minimizer(self) -> tuple[float, float]:
        ok = [r for r in self.rows if r.converged]
        best = min(ok, key=lambda r: r.xi2)
        return best.omega, best.xi2


def default_omegas(N: int, points: int = 48) -> np.ndarray:
    return N * np.logspace(-2, 2, points)


def xi2_at(N: int, omega: float) -> float:
    return spin_squeezing(steady_state(DriveSpec(N, omega)))


def omega_sweep(N: int, omegas=None) -> SweepTable:
    N = check_int("N", N, 2, 80)
    omegas = default_omegas(N) if omegas is None else np.asarray(omegas, dtype=float)
    rows = []
    for om in omegas:
        try:
            s = steady_state(DriveSpec(N, float(om)))
            rows.append(SweepRow(N, float(om), spin_squeezing(s), pair_negativity(s), True))
        except (ConvergenceError, SingularSystemError):
            rows.append(SweepRow(N, float(om), math.nan, math.nan, False))
    return SweepTable(N, tuple(rows))


def squeezing_window_edge(N: int, table: SweepTable | None = None) -> float:
    """Largest drive strength below which the steady state is squeezed."""
    table = omega_sweep(N) if table is None else table
    rows = [r for r in table.rows if r.converged and r.omega > 0]
    for lo, hi in zip(rows[::-1][1:], rows[::-1]):
        if lo.xi2 < 1.0 <= hi.xi2:
            return brentq(lambda om: xi2_at(N, om) - 1.0, lo.omega, hi.omega, xtol=1e-10)
    raise ConvergenceError("no squeezing window edge inside the sweep range")


def squeezing_minimum(N: int, table: SweepTable | None = None) -> tuple[float, float]:
    """Refined (omega, xi2) at the minimum of the squeezing curve."""
    table = omega_sweep(N) if table is None else table
    rows = [r for r in table.rows if r.converged]
    i = min(range(len(rows)), key=lambda k: rows[k].xi2)
    lo = rows[max(i - 1, 0)].omega
    hi = rows[min(i + 1, len(rows) - 1)].omega
    res = minimize_scalar(lambda om: xi2_at(N, om), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-8})
    return float(res.x), float(res.fun)


def edge_trend(Ns, points: int = 48) -> tuple[float, float, np.ndarray]:
    """Least-squares fit (edge/N)^2 = a ln N + b over the given sizes; returns (a, b, edges).

    Descriptive only: no quantitative claim is attached to the fitted values.
    """
    Ns = [check_int("N", n, 2, 80) for n in Ns]
    edges = np.array([squeezing_window_edge(n, omega_sweep(n, default_omegas(n, points))) for n in Ns])
    a, b = np.polyfit(np.log(Ns), (edges / np.array(Ns)) ** 2, 1)
    return float(a), float(b), edges
