"""Every autodiff op is checked against central finite differences."""

import numpy as np
import pytest

from persona_dialogue import autodiff as ad
from persona_dialogue.autodiff import Var, backward

from helpers import fd_grad, max_rel_err

rng = np.random.default_rng(12345)


def check_op(build, *shapes, tol=1e-6):
    """Gradient-check a graph builder taking len(shapes) Var inputs."""
    arrays = [np.asarray(rng.standard_normal(size=s)) for s in shapes]
    proj = None

    def scalar(*xs):
        nonlocal proj
        out = build(*[Var(x) for x in xs])
        if proj is None:
            proj = rng.standard_normal(out.data.shape)
        return float((out.data * proj).sum())

    scalar(*arrays)  # fix the projection
    leaves = [Var(a) for a in arrays]
    loss = ad.vsum(build(*leaves) * proj)
    backward(loss)
    for i, leaf in enumerate(leaves):
        def f(x, i=i):
            xs = [a.copy() for a in arrays]
            xs[i] = x
            return scalar(*xs)
        numeric = fd_grad(f, arrays[i].copy())
        assert leaf.grad is not None
        assert max_rel_err(leaf.grad, numeric) < tol, f"input {i}"


def test_add_broadcast():
    check_op(lambda a, b: a + b, (3, 4), (4,))
    check_op(lambda a, b: a + b, (3, 1), (3, 4))


def test_mul_broadcast():
    check_op(lambda a, b: a * b, (3, 4), (4,))
    check_op(lambda a, b: a * b, (5,), ())


def test_sub_neg():
    check_op(lambda a, b: a - b, (4,), (4,))
    check_op(lambda a: -a, (3, 2))


def test_matmul_all_ranks():
    check_op(lambda a, b: a @ b, (3, 4), (4, 2))
    check_op(lambda a, b: a @ b, (3, 4), (4,))
    check_op(lambda a, b: a @ b, (4,), (4, 2))
    check_op(lambda a, b: a @ b, (4,), (4,))


def test_elementwise_nonlinearities():
    check_op(ad.tanh, (3, 3))
    check_op(ad.sigmoid, (5,))
    check_op(ad.exp, (4,))
    check_op(lambda a: ad.log(ad.exp(a) + 1.5), (4,))


def test_sums_and_means():
    check_op(lambda a: ad.vsum(a), (3, 4))
    check_op(lambda a: ad.vsum(a, axis=0), (3, 4))
    check_op(lambda a: ad.vsum(a, axis=1, keepdims=True), (3, 4))
    check_op(lambda a: ad.vmean(a), (6,))
    check_op(lambda a: ad.vmean(a, axis=1), (2, 5))


def test_softmax_and_log_softmax():
    check_op(ad.softmax, (6,))
    check_op(ad.softmax, (2, 5))
    check_op(ad.log_softmax, (6,))
    check_op(ad.log_softmax, (3, 4))


def test_softmax_rows_sum_to_one():
    x = rng.standard_normal((4, 7))
    s = ad.softmax(Var(x)).data
    assert np.allclose(s.sum(axis=-1), 1.0, atol=1e-12)
    assert (s >= 0).all()


def test_concat_stack():
    check_op(lambda a, b: ad.concat([a, b]), (3,), (4,))
    check_op(lambda a, b: ad.concat([a, b], axis=1), (2, 3), (2, 2))
    check_op(lambda a, b, c: ad.stack([a, b, c]), (4,), (4,), (4,))


def test_rows_with_duplicate_indices():
    idx = np.array([0, 2, 2, 1])
    check_op(lambda a: ad.rows(a, idx), (4, 3))


def test_getitem_variants():
    check_op(lambda a: ad.getitem(a, 1), (4, 3))
    check_op(lambda a: ad.getitem(a, slice(1, 3)), (5, 2))
    steps, cols = np.array([0, 1, 2]), np.array([2, 2, 0])
    check_op(lambda a: ad.getitem(a, (steps, cols)), (3, 4))


def test_reshape_transpose_maxpool():
    from persona_dialogue.layers import transpose
    check_op(lambda a: ad.reshape(a, (6,)), (2, 3))
    check_op(transpose, (3, 5))
    check_op(ad.maxpool_columns, (4, 6))


def test_reused_node_accumulates():
    check_op(lambda a: a * a + ad.tanh(a) * a, (5,))


def test_backward_seeds_scalar_with_one():
    x = Var(np.array(2.0))
    y = x * x
    backward(y)
    assert np.allclose(x.grad, 4.0)


def test_additive_pool_masked():
    from persona_dialogue.layers import additive_pool
    mask = np.array([1.0, 1.0, 0.0, 1.0])

    def build(states, w, v):
        pooled, _ = additive_pool(states, w, v, mask)
        return pooled

    check_op(build, (4, 3), (2, 3), (2,))


def test_additive_pool_rejects_fully_masked():
    from persona_dialogue.layers import additive_pool
    with pytest.raises(ValueError):
        additive_pool(Var(rng.standard_normal((2, 3))),
                      Var(rng.standard_normal((3, 3))),
                      Var(rng.standard_normal(3)), np.zeros(2))
