import itertools
import math

import mpmath as mp
import numpy as np
import pytest

from eetlab.backend import available_backends
from eetlab.convolution import (PrecisionUnreachable, conv_table, conv_value,
                                export_csv, fft_rows, leading_term_share,
                                single_long_jump_share)
from eetlab.kernels import KernelSpec

NN = KernelSpec.nearest_neighbor()
P2 = KernelSpec.power_law(2.0)
P3 = KernelSpec.power_law(3.0)


def brute_force_nn(r, q):
    """Enumerate displacement tuples over {-1, +1}^r summing to q."""
    return sum(
        1 for tup in itertools.product((-1, 1), repeat=r) if sum(tup) == q
    )


def test_delta_row():
    t = conv_table(P2, 3, q_max=8)
    assert t.value(0, 0) == 1.0
    assert all(t.value(0, q) == 0.0 for q in range(1, 20))


def test_row_one_equals_kernel():
    # the DP row is the kernel window itself; the sign/log10 storage costs
    # one rounding on readback
    from eetlab.kernels import eval_kernel_many

    t = conv_table(P2, 1, q_max=16)
    ker = eval_kernel_many(P2, np.arange(-16, 17))
    got = np.array([t.value(1, q) for q in range(-16, 17)])
    assert np.allclose(got, ker, rtol=2e-15, atol=0.0)
    assert np.array_equal(got == 0.0, ker == 0.0)


def test_nn_counts_match_brute_force():
    t = conv_table(NN, 4, q_max=6)
    for q in range(-5, 6):
        assert t.value(4, q) == brute_force_nn(4, q)
    assert t.value(4, 4) == 1.0
    assert t.value(4, 2) == 4.0


def test_power2_second_convolution_at_origin_vs_zeta_oracle():
    # independent identity: J^{*2}(0) = sum_d d^-4 * 2 = 2 zeta(4)
    M = 4000
    oracle = 2.0 * math.fsum(n**-4.0 for n in range(1, M + 1))
    tail = 2.0 / (3.0 * M**3)
    t = conv_table(P2, 2, q_max=8)
    assert abs(t.value(2, 0) - oracle) <= t.row_error[2] + tail


def test_sum_rule_matches_kernel_sum_powers():
    from eetlab.kernels import _tail_bound

    for spec in (NN, P3, KernelSpec.sharp_truncated(2.5, 5)):
        t = conv_table(spec, 6, q_max=16)
        tail_W = _tail_bound(spec, t.W)
        for r in range(7):
            lhs = t.row_sum(r)
            rhs = t.S**r
            # linearity of convolution forces the sum rule; the row misses
            # kernel mass beyond the window plus per-entry rounding
            tol = (
                2.0 * r * t.S_abs ** max(r - 1, 0) * tail_W
                + (2 * t.W + 1) * t.row_error[r]
                + abs(rhs) * 1e-12
            )
            assert abs(lhs - rhs) <= tol


def test_rows_bitwise_symmetric():
    for spec in (P2, SOFT := KernelSpec.soft_truncated(2.5, 5, 0.5)):
        t = conv_table(spec, 5, q_max=12)
        for r in range(6):
            row = t.row(r)
            assert np.array_equal(row, row[::-1])


def test_fft_path_agrees_with_dp_path():
    # relative to the row majorant S^r, as the rows contain exact zeros
    for spec in (NN, P2):
        W = 1024
        dp = conv_table(spec, 8, W=W)
        ff = fft_rows(spec, 8, W)
        for r in range(9):
            scale = max(dp.S_abs**r, 1.0)
            assert np.max(np.abs(ff[r] - dp.row(r))) / scale <= 1e-10


def test_fft_path_larger_window_and_order():
    dp = conv_table(P3, 12, W=4096)
    ff = fft_rows(P3, 12, 4096)
    worst = max(
        np.max(np.abs(ff[r] - dp.row(r))) / max(dp.S_abs**r, 1.0)
        for r in range(13)
    )
    assert worst <= 1e-10


def test_majorant_rows_bounded_by_S_powers():
    t = conv_table(P2, 6, q_max=32)
    for r in range(7):
        assert np.max(np.abs(t.row(r))) <= t.S_abs**r * (1 + 1e-12) + t.row_error[r]


def test_backends_bit_identical():
    backends = available_backends()
    if len(backends) < 2:
        pytest.skip("compiled backend not built")
    rng = np.random.RandomState(7)
    W = 300
    prev = rng.rand(2 * W + 1)
    prev = prev + prev[::-1]
    ker = rng.rand(2 * W + 1) - 0.3
    ker[W] = 0.0
    ker = ker + ker[::-1]
    outs = []
    for fn in backends.values():
        out = np.zeros(W + 1)
        fn(prev, ker, W, out)
        outs.append(out)
    assert np.array_equal(outs[0], outs[1])


def test_conv_value_single_hop_exact():
    v, err = conv_value(P3, 1, 7, digits=16)
    with mp.workdps(30):
        assert abs(v - mp.mpf(7) ** -3) <= mp.mpf(7) ** -3 * mp.mpf("1e-16")


def test_conv_value_nn_diagonal_path():
    for q in (1, 3, 6):
        v, err = conv_value(NN, q, q, digits=16)
        assert v == 1
        assert err <= 1e-10


def test_conv_value_digit_consistency():
    v16, _ = conv_value(P3, 2, 10, digits=16)
    v32, _ = conv_value(P3, 2, 10, digits=32)
    assert abs(float((v16 - v32) / v32)) <= 1e-14


def test_conv_value_vs_direct_double_sum():
    # direct double sum over d1 + d2 = 10 with |d_i| <= 1e6
    D = 1_000_000
    d = np.arange(-D, D + 1, dtype=np.int64)
    mask = (d != 0) & (d != 10)
    dv = np.abs(d[mask]).astype(float)
    other = np.abs(10 - d[mask]).astype(float)
    direct = float(np.sum(dv**-3.0 * other**-3.0))
    v, err = conv_value(P3, 2, 10, digits=16)
    assert abs(float(v) - direct) <= err + 1e-13


def test_conv_value_unreachable_precision_reported():
    with pytest.raises(PrecisionUnreachable):
        conv_value(KernelSpec.power_law(2.1), 5, 50, digits=40,
                   window_budget=20_000)


def test_flagged_table_still_returned():
    t = conv_table(P2, 6, W=64, q_max=64)
    assert t.flagged
    assert t.W == 64


def test_leading_term_share_r1_exact():
    assert leading_term_share(P3, 1, 12) == pytest.approx(1.0, rel=1e-12)


def test_leading_term_share_r2_small_q():
    # the single leading arrangement is dominant only near q = 5r
    assert leading_term_share(P3, 2, 10) >= 0.5
    assert leading_term_share(P3, 2, 40) < 0.5


@pytest.mark.parametrize("r", [2, 3, 4, 5])
def test_single_long_jump_class_dominates(r):
    q = 5 * r
    assert single_long_jump_share(P3, r, q) >= 0.5


def test_export_csv_schema(tmp_path):
    t = conv_table(NN, 2, W=4)
    path = tmp_path / "table.csv"
    export_csv(t, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "r,q,sign,log10_abs,row_error"
    assert len(lines) == 1 + 3 * 9
