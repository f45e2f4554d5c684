import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mprkimex.system import PartitionMap, Region, SplitSystem, validate_partition

F, B, S = int(Region.FAST), int(Region.BUFFER), int(Region.SLOW)


def block_map(n, lo, hi, width):
    labels = np.full(n, S)
    labels[lo - width:lo] = B
    labels[hi + 1:hi + 1 + width] = B
    labels[lo:hi + 1] = F
    return PartitionMap(labels)


def test_valid_buffered_block():
    rep = validate_partition(block_map(81, 20, 40, 2), stencil_reach=2)
    assert rep.valid and not rep.violations


def test_all_fast_valid():
    assert validate_partition(PartitionMap.uniform(10, Region.FAST), 2).valid


def test_missing_buffer_reported():
    rep = validate_partition(block_map(30, 10, 15, 0), stencil_reach=2)
    assert not rep.valid
    assert any("slow cell 9" in v for v in rep.violations)


def test_thin_buffer_reported():
    assert not validate_partition(block_map(30, 10, 15, 1), stencil_reach=2).valid


def test_periodic_wraparound():
    labels = np.full(20, S)
    labels[0:3] = F
    labels[3:5] = B
    labels[18:20] = B
    assert validate_partition(PartitionMap(labels), 2).valid
    assert not validate_partition(PartitionMap(labels), 2, periodic=True).violations
    labels[18] = S
    assert not validate_partition(PartitionMap(labels), 2).valid


def test_masks_cover_disjointly():
    pm = block_map(30, 10, 15, 2)
    assert not np.any(pm.fast_mask & pm.slow_mask)
    assert np.all(pm.fast_mask | pm.slow_mask)
    assert pm.count(Region.BUFFER) == 4


def test_bad_labels():
    with pytest.raises(ValueError):
        PartitionMap([0, 1, 7])
    with pytest.raises(ValueError):
        PartitionMap([[0, 1]])


def _nonlinear_system(n):
    rng = np.random.default_rng(n)
    L = rng.normal(size=(n, n))
    return SplitSystem(n, lambda y: L @ np.tanh(y) + y**2)


@given(arrays(float, 8, elements=st.floats(-10, 10)), arrays(bool, 8))
def test_mask_additivity(y, mask):
    sys = _nonlinear_system(8)
    full = sys.eval_f(y)
    split = sys.eval_f(y, mask) + sys.eval_f(y, ~mask)
    assert np.array_equal(full, split)


def test_custom_masked_eval_used():
    calls = []

    def fm(y, mask):
        calls.append(mask.copy())
        return np.where(mask, 2 * y, 0.0)

    sys = SplitSystem(3, lambda y: 2 * y, f_masked=fm)
    out = sys.eval_f(np.ones(3), np.array([True, False, True]))
    assert np.array_equal(out, [2, 0, 2]) and len(calls) == 1


def test_no_g_is_zero():
    sys = SplitSystem(3, lambda y: y)
    assert not sys.has_g
    assert np.array_equal(sys.eval_g(np.ones(3)), np.zeros(3))
    assert np.array_equal(sys.jacobian_g(np.ones(3)), np.zeros((3, 3)))


def test_missing_jacobian():
    sys = SplitSystem(2, lambda y: y, g=lambda y: -y)
    with pytest.raises(NotImplementedError):
        sys.jacobian_g(np.ones(2))


def test_linear_constructor():
    sys = SplitSystem.linear(np.eye(2), -3 * np.eye(2))
    y = np.array([1.0, 2.0])
    assert np.array_equal(sys.eval_f(y), y)
    assert np.array_equal(sys.eval_g(y), -3 * y)
    assert np.array_equal(sys.jacobian_g(y), -3 * np.eye(2))
