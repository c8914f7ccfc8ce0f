import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from photonblind.errors import DegenerateKernelError
from photonblind.fields import (
    as_field, check_kernel, crop_center, crop_center_adjoint, delta_kernel, embed_kernel,
    pad_symmetric, pad_symmetric_adjoint, project_kernel,
)

finite = st.floats(-10, 10, allow_nan=False)


def test_pad_row_mirrors_edge():
    out = pad_symmetric(np.array([[1.0, 2.0, 3.0]]), 0, 0, 1, 1)
    np.testing.assert_array_equal(out, [[1, 1, 2, 3, 3]])


def test_pad_zero_is_identity():
    a = np.arange(12.0).reshape(3, 4)
    np.testing.assert_array_equal(pad_symmetric(a, 0, 0, 0, 0), a)


def test_pad_2x2_by_one():
    # reflection indices per axis: [0, 0, 1, 1]
    out = pad_symmetric(np.array([[1.0, 2.0], [3.0, 4.0]]), 1, 1, 1, 1)
    expected = np.array([[1, 1, 2, 2],
                         [1, 1, 2, 2],
                         [3, 3, 4, 4],
                         [3, 3, 4, 4]], dtype=float)
    np.testing.assert_array_equal(out, expected)


def test_pad_matches_numpy_symmetric(rng):
    a = rng.normal(size=(7, 5))
    np.testing.assert_array_equal(pad_symmetric(a, 2, 3, 4, 1),
                                  np.pad(a, ((2, 3), (4, 1)), mode="symmetric"))


def test_pad_larger_than_image_rejected():
    with pytest.raises(ValueError):
        pad_symmetric(np.ones((2, 2)), 3, 0, 0, 0)


def test_crop_delta_stays_centered():
    a = np.zeros((5, 5))
    a[2, 2] = 1.0
    out = crop_center(a, 3, 3)
    assert out.shape == (3, 3) and out[1, 1] == 1.0 and out.sum() == 1.0


def test_crop_same_size_identity(rng):
    a = rng.normal(size=(4, 6))
    np.testing.assert_array_equal(crop_center(a, 4, 6), a)


@given(arrays(np.float64, st.tuples(st.integers(1, 9), st.integers(1, 9)), elements=finite),
       st.integers(0, 4), st.integers(0, 4))
def test_pad_then_crop_roundtrip(a, p, q):
    p = min(p, a.shape[0])
    q = min(q, a.shape[1])
    padded = pad_symmetric(a, p, p, q, q)
    np.testing.assert_array_equal(crop_center(padded, *a.shape), a)


@settings(max_examples=40)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 3), st.integers(0, 3),
       st.integers(0, 3), st.integers(0, 3), st.integers(0, 2**31))
def test_pad_adjoint_identity(h, w, t, b, l, r, seed):
    t, b, l, r = min(t, h), min(b, h), min(l, w), min(r, w)
    g = np.random.default_rng(seed)
    x = g.normal(size=(h, w))
    z = g.normal(size=(h + t + b, w + l + r))
    lhs = np.sum(pad_symmetric(x, t, b, l, r) * z)
    rhs = np.sum(x * pad_symmetric_adjoint(z, (h, w), t, b, l, r))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_crop_adjoint_identity(rng):
    x = rng.normal(size=(9, 8))
    z = rng.normal(size=(5, 3))
    assert np.sum(crop_center(x, 5, 3) * z) == pytest.approx(
        np.sum(x * crop_center_adjoint(z, x.shape)), rel=1e-12)


def test_project_by_hand():
    np.testing.assert_array_equal(project_kernel([[-1.0, 2.0], [0.0, 2.0]]),
                                  [[0, 0.5], [0, 0.5]])


def test_project_delta_with_negative_lobe():
    k = np.zeros((3, 3))
    k[1, 1] = 1.1
    k[1, 0] = -0.1
    np.testing.assert_array_equal(project_kernel(k), delta_kernel(3))


@given(arrays(np.float64, (5, 5), elements=st.floats(-1, 1, allow_nan=False)))
def test_project_invariants_and_idempotence(k):
    if not np.any(k > 0):
        with pytest.raises(DegenerateKernelError):
            project_kernel(k)
        return
    p = project_kernel(k)
    assert np.all(p >= 0)
    assert abs(p.sum() - 1.0) <= 1e-12
    np.testing.assert_array_equal(project_kernel(p), p)


def test_project_rejects_all_nonpositive():
    with pytest.raises(DegenerateKernelError):
        project_kernel(-np.ones((3, 3)))


def test_as_field_rejects_nan_and_1d():
    with pytest.raises(ValueError):
        as_field([1.0, 2.0])
    with pytest.raises(ValueError):
        as_field([[np.nan]])


def test_check_kernel_needs_odd_square():
    with pytest.raises(ValueError):
        check_kernel(np.ones((4, 4)))
    with pytest.raises(ValueError):
        check_kernel(np.ones((3, 5)))


def test_embed_kernel_keeps_center():
    out = embed_kernel(delta_kernel(3), 7)
    np.testing.assert_array_equal(out, delta_kernel(7))
