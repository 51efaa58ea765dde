"""The compiled and pure-Python kernels must agree bit for bit."""

import numpy as np
import pytest

from exactsv import _pycore as P

C = pytest.importorskip("exactsv._core")

SEED, SID = 12345, 7
LAW = (2, 1, 1.0, 1.0, 1.0, 1.0, 1.0, (), (), 1.0 - np.exp(-1.0))


@pytest.mark.parametrize("name,args", [
    ("draw_u64", ()), ("draw_uniform", ()), ("draw_normal", ()),
    ("draw_gamma", (0.3,)), ("draw_gamma", (1.0,)), ("draw_gamma", (2.5,)),
    ("draw_beta", (0.5, 3.0)), ("draw_beta", (1.0, 0.2)),
    ("draw_beta", (4.0, 1.0)),
])
@pytest.mark.parametrize("ctr", [0, 3, 17])
def test_scalar_draws(name, args, ctr):
    assert getattr(P, name)(SEED, SID, ctr, *args) == getattr(C, name)(SEED, SID, ctr, *args)


def test_philox_block_and_split():
    assert P.philox4x64(6, 1, 2, 3, SEED, SID) == C.philox4x64(6, 1, 2, 3, SEED, SID)
    assert P.split_id(SEED, SID, 99) == C.split_id(SEED, SID, 99)


@pytest.mark.parametrize("method,delta", [(0, 0.3), (0, 1.0), (0, 2.5),
                                          (1, 0.5), (2, 1.0), (3, 3.0)])
def test_dm_batch(method, delta):
    res = []
    for mod in (P, C):
        v = np.empty(40)
        c = np.empty(40, np.int64)
        r = np.empty(40, np.int64)
        code = mod.dm_batch(SEED, SID, 5, LAW, delta, method, 20, 2.2e-16,
                            LAW[-1], 10 ** 9, v, c, r)
        res.append((code, v, c, r))
    assert res[0][0] == res[1][0] == 0
    for a, b in zip(res[0][1:], res[1][1:]):
        np.testing.assert_array_equal(a, b)


def test_coupled_and_joint_pair():
    outs = []
    for mod in (P, C):
        e, t = np.empty(20), np.empty(20)
        mod.dm_coupled_batch(SEED, SID, 0, LAW, 1.0, 5, 10 ** 9, e, t)
        outs.append((e, t))
    np.testing.assert_array_equal(outs[0][0], outs[1][0])
    np.testing.assert_array_equal(outs[0][1], outs[1][1])
    args = (SEED, SID, 0, 1, 1.0, 1.0, 10.0, 1.0, 1.0, 0.7, 2, 0, 2.2e-16, 1.0)
    assert P.joint_pair(*args) == C.joint_pair(*args)


def _sim(mod, variant, superposed, method, path_mode, nf=2, indep=False,
         skip=False, theta=0.8):
    n, m = 6, 3
    outs = ([np.empty((n, m)) for _ in range(3)]
            + [np.empty((n, m, nf)) for _ in range(3)]
            + [np.empty(n, np.int64), np.empty(n, np.int64)])
    lams = np.array([2.0, 0.05][:nf])
    v0 = np.array([0.004, 0.0001][:nf])
    code = mod.simulate_chunk(
        SEED, SID, 0, variant, -0.5, theta, 1 if variant == 1 else 0, 0.3, 3.6,
        0.1, 0.01, lams, v0, np.array([0.5, 1.0, 2.0]), 100.0, method, 50,
        2.2e-16, 10 ** 9, superposed, path_mode, skip, indep, *outs)
    return code, outs


@pytest.mark.parametrize("cfg", [
    (0, False, 0, 1), (0, True, 0, 0), (1, False, 0, 0), (1, False, 0, 1),
    (1, False, 1, 1), (1, True, 2, 0), (0, False, 2, 1, 2, True, True),
    (0, False, 0, 1, 2, False, False, 0.0),
])
def test_simulate_chunk(cfg):
    a, b = _sim(P, *cfg), _sim(C, *cfg)
    assert a[0] == b[0] == 0
    for x, y in zip(a[1], b[1]):
        np.testing.assert_array_equal(x, y)
