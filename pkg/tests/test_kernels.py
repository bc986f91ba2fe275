import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eetlab.kernels import (InvalidKernel, KernelSpec, KernelType,
                            classify_kernel, eval_kernel, eval_kernel_fraction,
                            eval_kernel_many, kernel_sum, load_table)

POWER = KernelSpec.power_law(2.0)
SHARP = KernelSpec.sharp_truncated(2.5, 5)
SOFT = KernelSpec.soft_truncated(2.5, 5, 0.5)
NN = KernelSpec.nearest_neighbor()
ALL_SPECS = [POWER, SHARP, SOFT, NN,
             KernelSpec.tabulated([(1, 1.0), (2, 0.25), (7, -0.125)])]


def test_power_law_direct_value():
    assert eval_kernel(POWER, 3) == pytest.approx(1.0 / 9.0, rel=0, abs=0)


def test_zero_offset_is_zero_for_every_family():
    for spec in ALL_SPECS:
        assert eval_kernel(spec, 0) == 0.0


def test_sharp_cutoff_beyond_range():
    assert eval_kernel(SHARP, 6) == 0.0
    assert eval_kernel(SHARP, 5) == 5.0 ** -2.5


def test_soft_cutoff_value():
    # two sites past the range: power value times exp(-sigma * 2)
    expected = 7.0 ** -2.5 * math.exp(-1.0)
    assert eval_kernel(SOFT, 7) == pytest.approx(expected, rel=1e-15)


@given(st.integers(min_value=-10_000, max_value=10_000))
@settings(max_examples=200, deadline=None)
def test_symmetry_exact(n):
    for spec in ALL_SPECS:
        assert eval_kernel(spec, n) == eval_kernel(spec, -n)


def test_vectorized_matches_scalar():
    # scalar libm pow and numpy's ufunc may differ in the last ulp
    ns = np.arange(-50, 51)
    for spec in ALL_SPECS:
        vec = eval_kernel_many(spec, ns)
        scal = np.array([eval_kernel(spec, int(n)) for n in ns])
        assert np.allclose(vec, scal, rtol=3e-16, atol=0.0)
        assert np.array_equal(vec == 0.0, scal == 0.0)


def test_invalid_specs_rejected_at_construction():
    with pytest.raises(InvalidKernel):
        KernelSpec.power_law(1.0)  # divergent
    with pytest.raises(InvalidKernel):
        KernelSpec.power_law(0.5)
    with pytest.raises(InvalidKernel):
        KernelSpec.soft_truncated(2.5, 5, sigma=0.0)
    with pytest.raises(InvalidKernel):
        KernelSpec.sharp_truncated(2.5, eta=0)
    with pytest.raises(InvalidKernel):
        KernelSpec("tabulated", table=())
    with pytest.raises(InvalidKernel):
        KernelSpec.tabulated([(1, 1.0), (1, 2.0)])  # duplicate offset


def test_kernel_sum_power_two_vs_zeta_oracle():
    # independent oracle: 2 * zeta(2) by partial sums with an integral tail
    M = 200_000
    partial = 2.0 * math.fsum(1.0 / (n * n) for n in range(1, M + 1))
    ztail = 2.0 / M  # integral bound for sum_{n>M} n^-2
    ks = kernel_sum(POWER)
    assert abs(ks.S - partial) <= ks.tail_bound + ztail
    assert abs(ks.S - math.pi**2 / 3.0) <= ks.tail_bound + 1e-12


def test_kernel_sum_nearest_neighbor_exact():
    ks = kernel_sum(NN)
    assert ks.S == 2.0
    assert ks.tail_bound <= 1e-14


def test_kernel_sum_sharp_finite():
    ks = kernel_sum(KernelSpec.sharp_truncated(2.0, 3))
    assert ks.S == pytest.approx(2.0 * (1 + 0.25 + 1.0 / 9.0), rel=1e-15)
    assert ks.tail_bound <= 1e-14


def test_tail_bound_monotone_in_window():
    from eetlab.kernels import _tail_bound

    bounds = [_tail_bound(POWER, W) for W in (1024, 2048, 4096, 8192)]
    assert all(a >= b for a, b in zip(bounds, bounds[1:]))


@pytest.mark.parametrize("p", [2.1, 2.5, 3.0, 3.5, 5.0])
def test_classify_power_law_type1(p):
    assert classify_kernel(KernelSpec.power_law(p)) is KernelType.TYPE1


def test_classify_sharp_indeterminate():
    assert classify_kernel(SHARP) is KernelType.INDETERMINATE
    assert classify_kernel(NN) is KernelType.INDETERMINATE


def test_classify_tabulated_exponential_type1():
    table = [(n, math.exp(-n)) for n in range(1, 60)]
    spec = KernelSpec.tabulated(table)
    # closed form: D(n) = e^-n + e^-2n > 0 (finite differences keep the sign)
    assert classify_kernel(spec) is KernelType.TYPE1


def test_classify_tabulated_concave_type2():
    # decreasing, positive, concave table with J'' < J' J throughout
    table = [(n, 0.1 - 0.001 * n * n) for n in range(1, 10)]
    spec = KernelSpec.tabulated(table)
    assert classify_kernel(spec) is KernelType.TYPE2


def test_soft_converges_to_sharp_as_sigma_grows():
    soft = KernelSpec.soft_truncated(2.5, 5, sigma=50.0)
    for n in range(1, 101):
        assert abs(eval_kernel(soft, n) - eval_kernel(SHARP, n)) <= 1e-20


def test_fraction_path():
    assert eval_kernel_fraction(KernelSpec.power_law(3.0), 4) == Fraction(1, 64)
    assert eval_kernel_fraction(NN, 1) == 1
    assert eval_kernel_fraction(NN, 5) == 0
    with pytest.raises(ValueError):
        eval_kernel_fraction(KernelSpec.power_law(2.5), 2)


def test_load_table_roundtrip(tmp_path):
    path = tmp_path / "kernel.csv"
    path.write_text("n,value\n1,1.0\n2,0.5\n4,0.0625\n")
    spec = load_table(path)
    assert eval_kernel(spec, 2) == 0.5
    assert eval_kernel(spec, 3) == 0.0  # missing entries default to zero
    assert eval_kernel(spec, -4) == 0.0625
