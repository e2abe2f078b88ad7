"""Acceptance criteria, one test each; every test records a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear in the terminal
summary) or ``python tests/test_acceptance.py``.
"""

import math
import sys
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from corrbounds import cli, dicke, driven, qbounds, radiance, tsirelson
from corrbounds.boxes import SliceSpec, pr_box, slice_behavior, to_probabilities

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []

SQ2 = math.sqrt(2)


@contextmanager
def criterion(number: int, title: str):
    info: dict = {}
    start = time.perf_counter()
    ok = False
    try:
        yield info
        ok = True
    finally:
        took = time.perf_counter() - start
        detail = info.get("detail", "")
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  [{took:.1f} s] {detail}".rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)


def test_criterion_01_tsirelson_reproduction():
    with criterion(1, "Tsirelson bounds CHSH, QB2(x=1), QB3(x=1)") as info:
        cases = [(tsirelson.chsh_functional(), None, 2 * SQ2, 1e-6),
                 (tsirelson.named_functional("QB2"), 1.0, math.sqrt(10), 1e-6),
                 (tsirelson.named_functional("QB3"), 1.0, 3.0, 1e-5)]
        errs = []
        for f, x, want, tol in cases:
            t0 = time.perf_counter()
            got = tsirelson.tsirelson_bound(f, x)
            took = time.perf_counter() - t0
            errs.append(abs(got - want))
            assert abs(got - want) < tol, (got, want)
            assert took < 10.0
        info["detail"] = f"max err {max(errs):.2e}"


def test_criterion_02_method_agreement():
    with criterion(2, "polynomial vs eigen oracle on 200 random functionals") as info:
        rng = np.random.default_rng(20240)
        t0 = time.perf_counter()
        worst = 0.0
        for _ in range(200):
            f = tsirelson.TsirelsonFunctional.from_bipartite_vector(rng.normal(size=8))
            worst = max(worst, abs(tsirelson.tsirelson_bound(f) - tsirelson.eigen_oracle(f)))
        took = time.perf_counter() - t0
        info["detail"] = f"max diff {worst:.2e}"
        assert worst < 1e-5
        assert took < 120.0


def test_criterion_03_function_valued_table():
    with criterion(3, "QB1/QB2/QB3 numeric vs closed forms at 9 x each") as info:
        xs = {"QB1": [-3.0, -2.0, -1.0, -0.5, -1 / 3, 0.0, 0.5, 1.0, 2.5],
              "QB2": [-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0],
              "QB3": [-3.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 3.0]}
        worst = 0.0
        for name, grid in xs.items():
            f = tsirelson.named_functional(name)
            for x in grid:
                worst = max(worst, abs(tsirelson.tsirelson_bound(f, x) - tsirelson.table_bound(name, x)))
        branch = tsirelson.tsirelson_bound(tsirelson.named_functional("QB1"), -1 / 3)
        info["detail"] = f"max err {worst:.2e}; QB1(-1/3)={branch:.8f}"
        assert worst < 1e-4
        assert abs(branch - 8 / 3) < 1e-4
        assert abs(tsirelson.table_bound("QB1", -1 / 3 - 1e-9) - tsirelson.table_bound("QB1", -1 / 3 + 1e-9)) < 1e-6


def test_criterion_04_slice_origin():
    with criterion(4, "all criteria give 1/sqrt2 at param=0 on both slices") as info:
        worst = 0.0
        for kind in ("gamma", "beta"):
            for name in ("uffink", "npa1", "qb3", "npa1ab"):
                worst = max(worst, abs(qbounds.CRITERIA[name](kind, 0.0) - 1 / SQ2))
        info["detail"] = f"max dev {worst:.2e}"
        assert worst < 2e-3


def test_criterion_05_red_region():
    with criterion(5, "beta slice: npa1ab exceeds qb3 by > 5e-4 somewhere in [0.27, 0.45]") as info:
        t0 = time.perf_counter()
        curve = qbounds.trace_boundary("beta", ["qb3", "npa1ab"], qbounds.default_grid(41), seed=0)
        took = time.perf_counter() - t0
        red = [(b, g) for b, g in qbounds.red_region(curve, 5e-4) if 0.27 <= b <= 0.45]
        best = max((g for _, g in red), default=float("nan"))
        info["detail"] = f"{len(red)} points, largest gap {best:.2e}"
        assert curve.converged
        assert red
        assert took < 600.0


def test_criterion_06_lo2():
    with criterion(6, "LO2 PR x PR = 1.25 and gamma-slice root") as info:
        pr = lo = qbounds.lo2_clique_sum(pr_box(), pr_box())
        worst = 0.0
        for g in np.linspace(0.0, 0.95, 20):
            def f(xi):
                t = to_probabilities(slice_behavior(SliceSpec("gamma", g, xi)))
                return qbounds.lo2_clique_sum(t, t) - 1.0
            root = brentq(f, 0.0, 1.0 - g, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            worst = max(worst, abs(root - (math.sqrt(10) - 1) * (1 - g) / 3))
        info["detail"] = f"PRxPR={pr!r}; max root err {worst:.2e}"
        assert lo == 1.25
        assert worst < 1e-8


def test_criterion_07_volumes():
    with criterion(7, "volumes: 2/525 closed, MC within 3 sigma, equivalence scan") as info:
        t0 = time.perf_counter()
        closed = dicke.sds_volume_closed(4)
        est, se = dicke.pptds_volume_mc(4, 10 ** 7, seed=0)
        z = abs(est - float(closed)) / se
        fails = dicke.mc_equivalence_scan(4, 10 ** 5, seed=0)
        took = time.perf_counter() - t0
        info["detail"] = f"MC {est * 1e6:.1f}e-6 +- {se * 1e6:.1f}e-6 ({z:.2f} sigma); counterexamples {fails}"
        assert closed == Fraction(2, 525)
        assert z < 3.0
        assert fails == 0
        assert took < 300.0


def test_criterion_08_superradiance_separability():
    with criterion(8, "superradiant populations certified separable, N=2..6, 50 times") as info:
        worst = 0.0
        for N in range(2, 7):
            p = radiance.RadianceParams(N, 1.0, radiance.default_times(1.0, "superrad", 50))
            rep = radiance.certify_separability_over_time(p)
            worst = max(worst, rep.max_residual)
            assert rep.all_certified, N
        info["detail"] = f"max residual {worst:.2e}"
        assert worst < 1e-8


def test_criterion_09_radiance_oracles():
    with criterion(9, "radiance: closed form vs expm, expm vs RK, fluorescence integrals") as info:
        e1 = e2 = e3 = 0.0
        t = np.linspace(0.0, 10.0, 101)
        for N in range(1, 9):
            p = radiance.RadianceParams(N, 1.0, t)
            e1 = max(e1, np.abs(radiance.standardrad_trajectory(p).chi - radiance.standardrad_evolve(p).chi).max())
            G = radiance.decay_generator(radiance.superrad_rates(N, 1.0))
            chi0 = np.eye(N + 1)[N]
            sol = solve_ivp(lambda _, c: G @ c, (0, t[-1]), chi0, t_eval=t, method="RK45", rtol=1e-10, atol=1e-12)
            e2 = max(e2, np.abs(radiance.superrad_evolve(p).chi - sol.y.T).max())
            for model in radiance.MODELS:
                val, _ = quad(lambda s: radiance.fluorescence_rate(N, 1.0, s, model)[0], 0, np.inf, limit=200)
                e3 = max(e3, abs(val - 1.0))
        info["detail"] = f"errors {e1:.1e}, {e2:.1e}, {e3:.1e}"
        assert e1 < 1e-10
        assert e2 < 1e-7
        assert e3 < 1e-4


def test_criterion_10_driven():
    with criterion(10, "driven steady state: Lindblad, squeezing forms, window edge, negativity") as info:
        lind = form = neg = 0.0
        for N in range(2, 9):
            for om in (0.5, 1.0, 5.0):
                d = driven.DriveSpec(N, om)
                s = driven.steady_state(d)
                lind = max(lind, np.abs(s.X - driven.lindblad_oracle(d).X).max())
        for N in (2, 4, 8, 10, 16):
            for om in np.linspace(0.05, 1.0, 12) * N:
                s = driven.steady_state(driven.DriveSpec(N, om))
                xi2 = driven.spin_squeezing(s)
                form = max(form, abs(xi2 - driven.general_spin_squeezing(s)))
                if xi2 < 1:
                    neg = max(neg, abs(xi2 - (1 - 2 * (N - 1) * driven.pair_negativity(s))))
        edge = driven.squeezing_window_edge(10)
        info["detail"] = f"lindblad {lind:.1e}, forms {form:.1e}, negativity {neg:.1e}, edge {edge:.4f}"
        assert lind < 1e-6
        assert form < 1e-8
        assert abs(edge - 0.475 * 10) <= 0.15 * 0.475 * 10
        assert neg < 1e-8


def _cli_body(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr().out
    assert code == 0
    return out


def test_criterion_11_determinism(capsys):
    with criterion(11, "identical seeds give byte-identical CSV across runs and worker counts") as info:
        runs = [["volumes", "--N", "4", "--samples", "600000", "--seed", "123"],
                ["slice", "--kind", "beta", "--criteria", "qb3,npa1ab", "--grid", "5", "--seed", "9"]]
        for args in runs:
            bodies = [_cli_body(args + ["--workers", w], capsys) for w in ("1", "1", "2")]
            assert bodies[0] == bodies[1] == bodies[2]
        a = dicke.pptds_volume_mc(5, 300_000, seed=3, workers=1)
        b = dicke.pptds_volume_mc(5, 300_000, seed=3, workers=3)
        assert a == b
        info["detail"] = "volumes, slice and MC outputs identical"


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
