import numpy as np
import pytest

from ontomatch import autodiff as ad


def finite_difference(f, arrays, eps=1e-6):
    """Central-difference gradients of scalar f w.r.t. each input array."""
    grads = []
    for k, arr in enumerate(arrays):
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + eps
            up = f(arrays)
            arr[idx] = orig - eps
            down = f(arrays)
            arr[idx] = orig
            g[idx] = (up - down) / (2 * eps)
            it.iternext()
        grads.append(g)
    return grads


def check_op(build, shapes, seed, atol=1e-7):
    """Compare tape gradients against finite differences for one graph."""
    rng = np.random.default_rng(seed)
    arrays = [rng.standard_normal(shape) * 0.5 for shape in shapes]

    def value(arrs):
        tensors = [ad.Tensor(a.copy()) for a in arrs]
        return float(build(tensors).data.sum())

    tensors = [ad.Tensor(a) for a in arrays]
    out = build(tensors)
    loss = ad.sum_(out)
    loss.backward()
    numeric = finite_difference(value, arrays)
    for tensor, num in zip(tensors, numeric):
        analytic = tensor.grad if tensor.grad is not None else np.zeros_like(num)
        np.testing.assert_allclose(analytic, num, atol=atol)


class TestElementwise:
    def test_add_broadcast(self):
        check_op(lambda t: ad.add(t[0], t[1]), [(3, 4), (4,)], seed=0)

    def test_mul_broadcast(self):
        check_op(lambda t: ad.mul(t[0], t[1]), [(3, 4), (3, 1)], seed=1)

    def test_tanh(self):
        check_op(lambda t: ad.tanh(t[0]), [(5,)], seed=2)

    def test_sigmoid(self):
        check_op(lambda t: ad.sigmoid(t[0]), [(5,)], seed=3)

    def test_relu(self):
        # Offset away from the kink so finite differences stay valid.
        check_op(lambda t: ad.relu(ad.add(t[0], 0.3)), [(6,)], seed=4)

    def test_log(self):
        check_op(lambda t: ad.log(ad.add(ad.mul(t[0], t[0]), 1.5)), [(4,)], seed=5)

    def test_clip_inside_region(self):
        check_op(lambda t: ad.clip(t[0], -10.0, 10.0), [(4,)], seed=6)

    def test_clip_blocks_gradient_outside(self):
        x = ad.Tensor(np.array([5.0, -5.0, 0.2]))
        out = ad.sum_(ad.clip(x, -1.0, 1.0))
        out.backward()
        np.testing.assert_array_equal(x.grad, [0.0, 0.0, 1.0])


class TestLinearAlgebra:
    def test_matmul_2d(self):
        check_op(lambda t: ad.matmul(t[0], t[1]), [(3, 4), (4, 2)], seed=7)

    def test_matmul_batched_left(self):
        check_op(lambda t: ad.matmul(t[0], t[1]), [(2, 3, 4), (4, 2)], seed=8)

    def test_chain(self):
        def build(t):
            h = ad.tanh(ad.matmul(t[0], t[1]))
            return ad.matmul(h, t[2])

        check_op(build, [(5, 3), (3, 4), (4, 1)], seed=9)


class TestShapeOps:
    def test_take_rows(self):
        idx = np.array([0, 2, 2, 1])

        def build(t):
            return ad.take(t[0], idx)

        check_op(build, [(4, 3)], seed=10)

    def test_take_slice(self):
        def build(t):
            return ad.take(t[0], (slice(None), 1))

        check_op(build, [(4, 3)], seed=11)

    def test_concat(self):
        check_op(lambda t: ad.concat([t[0], t[1]], axis=1), [(2, 3), (2, 2)], seed=12)

    def test_stack(self):
        check_op(lambda t: ad.stack([t[0], t[1]], axis=0), [(2, 3), (2, 3)], seed=13)

    def test_reshape(self):
        check_op(lambda t: ad.reshape(t[0], (6,)), [(2, 3)], seed=14)

    def test_sum_axis(self):
        check_op(lambda t: ad.sum_(t[0], axis=0), [(3, 4)], seed=15)

    def test_mean_axis(self):
        check_op(lambda t: ad.mean(t[0], axis=1), [(3, 4)], seed=16)

    def test_max_axis(self):
        # Distinct values keep the argmax stable under the probe step.
        arr = np.array([[0.1, 1.2, -0.4], [2.0, -1.0, 0.5]])

        def build(t):
            return ad.max_(t[0], axis=1)

        def value(arrs):
            return float(ad.max_(ad.Tensor(arrs[0].copy()), axis=1).data.sum())

        x = ad.Tensor(arr.copy())
        ad.sum_(build([x])).backward()
        numeric = finite_difference(value, [arr.copy()])[0]
        np.testing.assert_allclose(x.grad, numeric, atol=1e-7)


class TestEngine:
    def test_gradient_accumulates_on_reuse(self):
        x = ad.Tensor(np.array([2.0]))
        y = ad.add(ad.mul(x, x), ad.mul(x, 3.0))  # x^2 + 3x
        ad.sum_(y).backward()
        np.testing.assert_allclose(x.grad, [2 * 2.0 + 3.0])

    def test_no_grad_builds_no_tape(self):
        x = ad.Tensor(np.ones(3))
        with ad.no_grad():
            y = ad.mul(x, 2.0)
        assert y._parents == ()
        assert y._backward is None

    def test_deep_chain_no_recursion_error(self):
        x = ad.Tensor(np.ones(2))
        y = x
        for _ in range(3000):
            y = ad.add(y, 1.0)
        ad.sum_(y).backward()
        np.testing.assert_allclose(x.grad, [1.0, 1.0])

    def test_dropout_scales_kept_units(self):
        rng = np.random.default_rng(0)
        x = ad.Tensor(np.ones((1000,)))
        out = ad.dropout(x, 0.2, rng)
        kept = out.data[out.data > 0]
        np.testing.assert_allclose(kept, 1.0 / 0.8)
        assert 0.7 < (out.data > 0).mean() < 0.9

    def test_dropout_zero_p_is_identity(self):
        x = ad.Tensor(np.ones(4))
        assert ad.dropout(x, 0.0, np.random.default_rng(0)) is x
