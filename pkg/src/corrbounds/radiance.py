"""Population dynamics of collective (superradiant) and independent decay.

Both models are linear rate equations on the Dicke populations starting
from the fully excited state; they differ only in the decay rate out of
level ``n1``: ``Gamma (n0 + 1) n1`` collectively versus ``Gamma n1``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from corrbounds._validation import check_int, check_real
from corrbounds.dicke import DickeDiagonalState, SDSFit, sds_fit, sds_populations

MODELS = ("superrad", "standardrad")


@dataclass(frozen=True, eq=False)
class RadianceParams:
    N: int
    gamma: float
    t: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "N", check_int("N", self.N, 1))
        g = check_real("gamma", self.gamma)
        if g <= 0:
            raise ValueError("gamma must be positive")
        object.__setattr__(self, "gamma", g)
        t = np.asarray(self.t, dtype=float).ravel()
        if t.size == 0 or t[0] < 0 or np.any(np.diff(t) <= 0) or not np.all(np.isfinite(t)):
            raise ValueError("time grid must be nonempty, finite, nonnegative and strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "t", t)


def default_times(gamma: float = 1.0, model: str = "superrad", n: int = 60) -> np.ndarray:
    upper = 10.0 if model == "superrad" else 100.0
    return np.logspace(-3, math.log10(upper), n) / gamma


@dataclass(frozen=True, eq=False)
class PopulationTrajectory:
    """Populations ``chi[i, n1]`` at times ``t[i]``."""

    N: int
    gamma: float
    t: np.ndarray
    chi: np.ndarray
    model: str

    def states(self) -> list[DickeDiagonalState]:
        return [DickeDiagonalState(self.N, c / c.sum()) for c in self.chi]

    @property
    def rescaled_time(self) -> np.ndarray:
        return 1.0 - np.exp(-self.gamma * self.t)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "n1", "chi"])
        for ti, row in zip(self.t, self.chi):
            for n1, c in enumerate(row):
                w.writerow([format(ti, ".17g"), n1, format(c, ".17g")])
        return buf.getvalue()


def decay_generator(rates) -> np.ndarray:
    """Generator G with d chi/dt = G chi for a one-step cascade n1 -> n1 - 1.

    ``rates[n1]`` is the total rate out of level ``n1`` (``rates[0]`` must be 0).
    """
    rates = np.asarray(rates, dtype=float)
    G = np.diag(-rates)
    G[np.arange(len(rates) - 1), np.arange(1, len(rates))] = rates[1:]
    return G


def superrad_rates(N: int, gamma: float) -> np.ndarray:
    n1 = np.arange(N + 1)
    return gamma * (N - n1 + 1) * n1


def standardrad_rates(N: int, gamma: float) -> np.ndarray:
    return gamma * np.arange(N + 1, dtype=float)


def _initial(N: int) -> np.ndarray:
    chi0 = np.zeros(N + 1)
    chi0[N] = 1.0
    return chi0


def evolve(G: np.ndarray, chi0: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.array([scipy.linalg.expm(G * ti) @ chi0 for ti in t])


def superrad_evolve(p: RadianceParams) -> PopulationTrajectory:
    G = decay_generator(superrad_rates(p.N, p.gamma))
    chi = evolve(G, _initial(p.N), p.t)
    return PopulationTrajectory(p.N, p.gamma, p.t, chi, "superrad")


def standardrad_evolve(p: RadianceParams) -> PopulationTrajectory:
    """Independent decay through the same rate-equation machinery."""
    G = decay_generator(standardrad_rates(p.N, p.gamma))
    chi = evolve(G, _initial(p.N), p.t)
    return PopulationTrajectory(p.N, p.gamma, p.t, chi, "standardrad")


def standardrad_populations(N: int, gamma: float, t: float) -> DickeDiagonalState:
    t = check_real("t", t, 0.0)
    return sds_populations(1.0 - math.exp(-gamma * t), N)


def standardrad_trajectory(p: RadianceParams) -> PopulationTrajectory:
    chi = np.array([standardrad_populations(p.N, p.gamma, ti).chi for ti in p.t])
    return PopulationTrajectory(p.N, p.gamma, p.t, chi, "standardrad")


def trajectory(p: RadianceParams, model: str) -> PopulationTrajectory:
    if model == "superrad":
        return superrad_evolve(p)
    if model == "standardrad":
        return standardrad_trajectory(p)
    raise ValueError(f"unknown model {model!r}; choose from {MODELS}")


def fluorescence_pdf(traj: PopulationTrajectory) -> np.ndarray:
    """Per-particle photon emission rate at each time stamp."""
    N, g = traj.N, traj.gamma
    if traj.model == "standardrad":
        return g * np.exp(-g * traj.t)
    n1 = np.arange(N + 1)
    return g * traj.chi @ ((N - n1 + 1) * n1 / N)


def fluorescence_rate(N: int, gamma: float, t, model: str) -> np.ndarray:
    p = RadianceParams(N, gamma, np.atleast_1d(t))
    return fluorescence_pdf(trajectory(p, model))


@dataclass(frozen=True, eq=False)
class CertificationReport:
    t: np.ndarray
    fits: tuple[SDSFit, ...]

    @property
    def all_certified(self) -> bool:
        return all(f.certified for f in self.fits)

    @property
    def max_residual(self) -> float:
        return max(f.residual for f in self.fits)

    def rows(self):
        for ti, fit in zip(self.t, self.fits):
            d = fit.best
            for j, (xj, yj) in enumerate(zip(d.x, d.y), start=1):
                yield ti, j, xj, yj, d.residual, fit.certified

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "j", "x_j", "y_j", "residual", "certified"])
        for ti, j, xj, yj, r, ok in self.rows():
            w.writerow([format(ti, ".17g"), j, format(xj, ".17g"), format(yj, ".17g"),
                        format(r, ".17g"), str(ok).lower()])
        return buf.getvalue()


def certify_separability_over_time(p: RadianceParams, model: str = "superrad") -> CertificationReport:
    if p.N > 8:
        raise ValueError("certification is supported for N <= 8")
    traj = trajectory(p, model)
    fits = tuple(sds_fit(s) for s in traj.states())
    return CertificationReport(p.t, fits)
