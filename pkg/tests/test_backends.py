import os
import subprocess
import sys

import numpy as np
import pytest

from whittlecp._backend import HAVE_NUMBA, resolve_backend
from whittlecp._kernels import fit_pairs, fit_rows
from whittlecp.segmentation import build_candidate_grid, build_cost_table
from whittlecp.spectral import build_prefix
from whittlecp.synthesis import ProcessSpec, synthesize

pytestmark = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


def test_fit_rows_agree():
    rng = np.random.default_rng(1)
    I = rng.exponential(size=(500, 60)) * (np.arange(1, 61) / 60) ** rng.uniform(-1.2, 0.3, (500, 1))
    d1, w1 = fit_rows(I, backend="numba")
    d2, w2 = fit_rows(I, backend="numpy")
    np.testing.assert_allclose(d1, d2, atol=1e-8)
    np.testing.assert_allclose(w1, w2, rtol=1e-12, atol=1e-12)


def test_cost_tables_agree():
    x = synthesize(ProcessSpec.single("farima00", (0.4, 0.1), (0.5,), n=1500), 4).values
    pre = build_prefix(x, 116)
    grid = build_candidate_grid(1500, 10, 40)
    a = build_cost_table(pre, grid, backend="numba")
    b = build_cost_table(pre, grid, backend="numpy")
    fin = np.isfinite(a.cost)
    assert np.array_equal(fin, np.isfinite(b.cost))
    np.testing.assert_allclose(a.cost[fin], b.cost[fin], rtol=1e-11)
    np.testing.assert_allclose(a.dmin[fin], b.dmin[fin], atol=1e-8)


def test_warm_start_does_not_change_result():
    # fit_pairs warm-starts from the previous pair; order must not matter.
    x = np.random.default_rng(2).standard_normal(800)
    pre = build_prefix(x, 40)
    nodes = np.arange(0, 801, 50)
    P = pre.cumsums[:, nodes].T.copy()
    ia, ib = np.triu_indices(len(nodes), 1)
    d1, w1 = fit_pairs(P, nodes, ia, ib, backend="numba")
    perm = np.random.default_rng(3).permutation(len(ia))
    d2, w2 = fit_pairs(P, nodes, ia[perm], ib[perm], backend="numba")
    np.testing.assert_allclose(d1[perm], d2, atol=1e-9)
    np.testing.assert_allclose(w1[perm], w2, rtol=1e-12)


def test_env_flag_selects_numpy():
    code = "from whittlecp._backend import resolve_backend; print(resolve_backend())"
    env = dict(os.environ, WHITTLECP_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env.pop("WHITTLECP_DISABLE_NUMBA")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numba"


def test_explicit_backend_wins():
    assert resolve_backend("numpy") == "numpy"
    assert resolve_backend("numba") == "numba"
    with pytest.raises(ValueError):
        resolve_backend("cuda")
