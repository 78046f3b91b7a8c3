"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (shown in the terminal summary) before
asserting. Run ``python3 tests/test_acceptance.py`` for the lines alone.
"""

from functools import lru_cache
from statistics import median

import numpy as np
import pytest

from acceptance_log import record
from oracles import smoothed_gradient_lasso
from residual_lasso import experiments as ex
from residual_lasso.cli import main as cli_main
from residual_lasso.experiments import ExperimentConfig
from residual_lasso.forward_models import sigma2_from_snr
from residual_lasso.grid_signals import build_grid, jump_vector, sample_f2
from residual_lasso.operators import (global_edge_matrix, local_diff_matrix, rank_diagnostics,
                                      residual_operator)
from residual_lasso.solver import LassoProblem, solve_generalized_lasso

SMOOTH = "smooth-f1"


@lru_cache(maxsize=None)
def _run(cfg: ExperimentConfig):
    return tuple(ex.run_experiment(cfg))


def _median_rel(cfg):
    return median(r.e_rel_windows[SMOOTH] for r in _run(cfg))


def test_c01_operator_identity():
    worst = 0.0
    for n in (16, 64, 128):
        for p in (0, 1):
            T = local_diff_matrix(n, p).matrix
            S = global_edge_matrix(n, p, 0.5).matrix
            # column l of (T - S) is (T - S) e_l
            gap = np.abs(T - S).max(axis=0).max() / np.abs(T).max()
            worst = max(worst, gap)
    ok = worst <= 1e-8
    assert record(1, ok, f"max ||(T-S_1/2)e_l||_inf / ||T||_max = {worst:.2e} (<= 1e-8)")


def test_c02_rank_degeneracy_at_half():
    parts, ok = [], True
    for p in (0, 1):
        rep = rank_diagnostics(residual_operator(128, p, 0.5), 1e-8)
        gap = rep.singular_values[1] / rep.singular_values[2]
        ok &= rep.numerical_rank == 2 and gap >= 1e6
        parts.append(f"p={p}: rank {rep.numerical_rank}, s2/s3 {gap:.2g}")
    assert record(2, ok, "; ".join(parts) + " (want rank 2, gap >= 1e6)")


def test_c03_conditioning_at_quarter():
    ranks = [rank_diagnostics(residual_operator(128, p, 0.25), 1e-8).numerical_rank
             for p in (0, 1)]
    ok = all(r >= 0.9 * 128 for r in ranks)
    assert record(3, ok, f"ranks p=0,1: {ranks} (>= 115.2)")


def test_c04_near_equivalence_rate():
    errs = {}
    for n in (32, 64, 128, 256):
        f = np.sin(build_grid(n).points)
        d = local_diff_matrix(n, 0).matrix @ f - global_edge_matrix(n, 0, 0.25).matrix @ f
        errs[n] = np.abs(d).max()
    ratios = [errs[2 * n] / errs[n] for n in (32, 64, 128)]
    ok = all(r <= 0.6 for r in ratios)
    assert record(4, ok, "E(2n)/E(n) = " + ", ".join(f"{r:.3f}" for r in ratios) + " (<= 0.6)")


def test_c05_noise_calibration():
    s2 = sigma2_from_snr(sample_f2(build_grid(128)), 10.0)
    ok = abs(s2 - 0.295) <= 0.002
    assert record(5, ok, f"sigma2(f2, 10 dB) = {s2:.5f} (0.295 +- 0.002)")


def _instances(count=50, n=16):
    rng = np.random.default_rng(2024)
    ops = [local_diff_matrix(n, 0).matrix, local_diff_matrix(n, 1).matrix,
           residual_operator(n, 0).matrix]
    out = []
    for i in range(count):
        if i % 2:
            q, _ = np.linalg.qr(rng.standard_normal((n, n)))
            A = q @ np.diag(np.linspace(1.0, 10.0, n) ** 0.5) @ q.T
        else:
            A = np.eye(n)
        x0 = np.repeat(rng.standard_normal(4), n // 4)
        y = A @ x0 + 0.1 * rng.standard_normal(n)
        out.append((A, y, ops[i % 3], float(10 ** rng.uniform(-2, 0))))
    return out


def test_c06_solver_matches_oracle():
    inst = _instances()
    A = np.stack([i[0] for i in inst])
    y = np.stack([i[1] for i in inst])
    L = np.stack([i[2] for i in inst])
    alpha = np.array([i[3] for i in inst])
    _, ref = smoothed_gradient_lasso(A, y, L, alpha, iters_per_stage=6000)
    got = np.array([solve_generalized_lasso(LassoProblem(*i)).objective for i in inst])
    rel = np.abs(got - ref) / np.maximum(np.abs(ref), 1e-12)
    ok = rel.max() <= 1e-5
    assert record(6, ok, f"max relative objective gap over 50 instances = {rel.max():.2e} (<= 1e-5)")


def test_c07_tv_step_recovery():
    cfg = ExperimentConfig(signal="f2", task="denoise", snr_db=20, p=0, operator="local")
    res = _run(cfg)
    g = jump_vector("f2", build_grid(128))
    cells = g.jump_cells
    jump = np.abs(g.values[cells]).max()
    e_abs = np.median([r.e_abs[cells] for r in res], axis=0)
    T = local_diff_matrix(128, 0).matrix
    tx = np.median([np.abs(T @ r.x) for r in res], axis=0)
    support = np.flatnonzero(tx > 0.05 * jump)
    near = np.abs(support[:, None] - cells[None, :]).min(axis=1) <= 1
    hits = all(np.any(np.abs(support - c) <= 1) for c in cells)
    ok = bool(np.all(e_abs <= 0.15) and near.all() and hits)
    assert record(7, ok, f"median E_abs at cells {cells.tolist()}: "
                         f"{np.round(e_abs, 4).tolist()} (<= 0.15); "
                         f"median |T x| support {support.tolist()}")


def test_c08_figure3_ordering():
    parts, ok = [], True
    for snr in (4, 8, 16, 32):
        loc, res = (_median_rel(ExperimentConfig(signal="f1", task="denoise", snr_db=snr, p=0,
                                                 operator=op)) for op in ("local", "residual"))
        ok &= res < loc
        parts.append(f"SNR {snr}: {res:.3f} vs {loc:.3f}")
    assert record(8, ok, "residual vs local median E_rel; " + "; ".join(parts))


def test_c09_figure5_ordering():
    parts, ok = [], True
    for gamma in (0.01, 0.03, 0.05, 0.08):
        loc, res = (_median_rel(ExperimentConfig(signal="f1", task="deblur", gamma=gamma, p=0,
                                                 operator=op)) for op in ("local", "residual"))
        ok &= res < loc
        parts.append(f"gamma {gamma}: {res:.3f} vs {loc:.3f}")
    assert record(9, ok, "residual vs local E_rel; " + "; ".join(parts))


def test_c10_undersampling_ordering():
    loc, res = (_median_rel(ExperimentConfig(signal="f1", task="undersample", ratio=0.3,
                                             snr_db=20, p=0, operator=op))
                for op in ("local", "residual"))
    ok = res < loc
    assert record(10, ok, f"median E_rel residual {res:.3f} vs local {loc:.3f}")


def test_c11_residual_sparsity():
    parts, ok = [], True
    for snr, p in ((20, 0), (10, 0), (5, 0), (20, 1)):
        loc, res = (median(r.residual_l1 for r in _run(ExperimentConfig(
            signal="f1", task="denoise", snr_db=snr, p=p, operator=op)))
            for op in ("local", "residual"))
        ok &= res < loc
        parts.append(f"SNR {snr} p={p}: {res:.2f} vs {loc:.2f}")
    assert record(11, ok, "median ||R x||_1 residual vs local; " + "; ".join(parts))


def test_c12_reproduce_is_deterministic(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv(ex.OUTPUT_DIR_ENV, raising=False)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert cli_main(["reproduce", "--figure", "3", "--seed", "0", "--out", str(path)]) == 0
    capsys.readouterr()
    ok = a.read_bytes() == b.read_bytes()
    assert record(12, ok, f"two reproduce --figure 3 runs byte-identical ({a.stat().st_size} bytes)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
