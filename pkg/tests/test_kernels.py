import math

import numpy as np
import pytest

from ahpatron.kernels import (
    KernelSpec,
    LabeledExample,
    SparseVector,
    gram_matrix,
    kernel_diag,
    kernel_eval,
    pairwise_kernel,
    sparse_sq_dist,
)
from ahpatron.prng import SplitMix64

from oracles import random_sparse

GAUSS = KernelSpec.gaussian(1.0)


# -- SparseVector --------------------------------------------------------------


def test_sparse_vector_drops_explicit_zeros():
    v = SparseVector([(0, 1.0), (3, 0.0), (7, -2.0)])
    assert v.indices == (0, 7)
    assert v.values == (1.0, -2.0)
    assert SparseVector([(2, 0.0)]) == SparseVector([])


def test_sparse_vector_rejects_bad_input():
    with pytest.raises(ValueError):
        SparseVector([(1, 1.0), (1, 2.0)])  # duplicate index
    with pytest.raises(ValueError):
        SparseVector([(3, 1.0), (2, 2.0)])  # decreasing
    with pytest.raises(ValueError):
        SparseVector([(-1, 1.0)])
    with pytest.raises(ValueError):
        SparseVector([(0, math.inf)])
    with pytest.raises(ValueError):
        SparseVector([(0, math.nan)])


def test_sparse_vector_equality_and_hash():
    a = SparseVector([(1, 0.5), (4, 2.0)])
    b = SparseVector([(1, 0.5), (4, 2.0), (9, 0.0)])
    assert a == b and hash(a) == hash(b)
    assert a != SparseVector([(1, 0.5)])


def test_sparse_vector_dense_and_width():
    v = SparseVector([(1, 2.0), (3, -1.0)])
    assert v.width == 4
    assert np.array_equal(v.dense(5), np.array([0.0, 2.0, 0.0, -1.0, 0.0]))
    with pytest.raises(ValueError):
        v.dense(2)
    assert SparseVector([]).width == 0


def test_labeled_example_validates_label():
    x = SparseVector([(0, 1.0)])
    LabeledExample(x, 1)
    LabeledExample(x, -1)
    with pytest.raises(ValueError):
        LabeledExample(x, 0)


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec.gaussian(0.0)
    with pytest.raises(ValueError):
        KernelSpec.polynomial(0)
    with pytest.raises(ValueError):
        KernelSpec.polynomial(2, offset=-1.0)
    with pytest.raises(ValueError):
        KernelSpec("spline")


# -- sparse_sq_dist -------------------------------------------------------------


def test_sq_dist_identical_is_zero():
    v = SparseVector([(0, 1.5), (2, -3.0)])
    assert sparse_sq_dist(v, v) == 0.0


def test_sq_dist_disjoint_supports():
    assert sparse_sq_dist(SparseVector([(1, 1.0)]), SparseVector([(2, 1.0)])) == 2.0


def test_sq_dist_shared_support():
    assert sparse_sq_dist(SparseVector([(1, 3.0)]), SparseVector([(1, 1.0)])) == 4.0


def test_sq_dist_matches_dense_oracle():
    gen = SplitMix64(5)
    for _ in range(50):
        u = random_sparse(gen, 8)
        v = random_sparse(gen, 8)
        du, dv = u.dense(8), v.dense(8)
        expected = float(np.sum((du - dv) ** 2))
        assert abs(sparse_sq_dist(u, v) - expected) < 1e-12


# -- kernel_eval ----------------------------------------------------------------


def test_gaussian_zero_distance_is_one():
    v = SparseVector([(0, 0.3), (5, 2.0)])
    assert kernel_eval(GAUSS, v, v) == 1.0


def test_gaussian_against_empty_vector():
    u = SparseVector([(1, 1.0)])
    empty = SparseVector([])
    assert kernel_eval(GAUSS, u, empty) == pytest.approx(math.exp(-0.5), abs=1e-12)


def test_linear_sparse_overlap():
    u = SparseVector([(1, 2.0), (3, 1.0)])
    v = SparseVector([(1, 0.5), (2, 4.0)])
    assert kernel_eval(KernelSpec.linear(), u, v) == 1.0


def test_polynomial_eval():
    u = SparseVector([(0, 2.0)])
    v = SparseVector([(0, 3.0)])
    spec = KernelSpec.polynomial(2, offset=1.0)
    assert kernel_eval(spec, u, v) == 49.0
    assert kernel_diag(spec, u) == 25.0


def test_kernel_symmetry_exact():
    gen = SplitMix64(6)
    specs = [GAUSS, KernelSpec.linear(), KernelSpec.polynomial(3, 0.5)]
    for _ in range(25):
        u = random_sparse(gen, 6)
        v = random_sparse(gen, 6)
        for spec in specs:
            assert kernel_eval(spec, u, v) == kernel_eval(spec, v, u)


def test_gaussian_range_and_equality_condition():
    gen = SplitMix64(9)
    for _ in range(50):
        u = random_sparse(gen, 6)
        v = random_sparse(gen, 6)
        k = kernel_eval(GAUSS, u, v)
        assert 0.0 < k <= 1.0
        if u != v:
            assert k < 1.0
        assert kernel_eval(GAUSS, u, u) == 1.0


# -- gram matrices ---------------------------------------------------------------


def test_gram_single_vector():
    x = SparseVector([(0, 1.0)])
    m = gram_matrix(GAUSS, [x])
    assert m.shape == (1, 1) and m[0, 0] == 1.0


def test_gram_two_identical_gaussian():
    x = SparseVector([(0, 0.5), (2, 1.0)])
    m = gram_matrix(GAUSS, [x, SparseVector([(0, 0.5), (2, 1.0)])])
    assert np.array_equal(m, np.ones((2, 2)))


def test_gram_matches_entrywise_eval_exactly():
    gen = SplitMix64(17)
    xs = [random_sparse(gen, 5) for _ in range(7)]
    for spec in (GAUSS, KernelSpec.linear(), KernelSpec.polynomial(2, 1.0)):
        m = gram_matrix(spec, xs)
        for i in range(len(xs)):
            for j in range(len(xs)):
                assert m[i, j] == kernel_eval(spec, xs[i], xs[j])
        assert np.array_equal(m, m.T)


def test_gram_rejects_empty():
    with pytest.raises(ValueError):
        gram_matrix(GAUSS, [])


def test_gram_positive_semidefinite():
    gen = SplitMix64(23)
    for spec in (GAUSS, KernelSpec.linear()):
        for n in (5, 20, 50):
            xs = [random_sparse(gen, 10) for _ in range(n)]
            eigs = np.linalg.eigvalsh(gram_matrix(spec, xs))
            assert eigs.min() >= -1e-9 * n


def test_pairwise_kernel_agrees_with_gram():
    gen = SplitMix64(31)
    xs = [random_sparse(gen, 6) for _ in range(12)]
    for spec in (GAUSS, KernelSpec.linear(), KernelSpec.polynomial(2, 0.5)):
        fast = pairwise_kernel(spec, xs)
        exact = gram_matrix(spec, xs)
        assert np.allclose(fast, exact, rtol=0.0, atol=1e-12)
        assert np.array_equal(fast, fast.T)
