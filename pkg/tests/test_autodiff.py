import numpy as np
import pytest

from eegbench import _kernels
from eegbench.autodiff import AdamState, Tape, Tensor, adam_step, backward, grad_check, ops
from eegbench.dataset import make_rng
from eegbench.errors import InvalidInputError, ShapeError
from eegbench.models.layers import lstm_unrolled

TOL = 1e-4


def P(rng, *shape, scale=1.0):
    return Tensor(scale * rng.standard_normal(shape), requires_grad=True)


def weighted(out, rng_seed=99):
    """Scalar probe sum(out * R) with a fixed random R (avoids symmetric gradients)."""
    r = np.random.default_rng(rng_seed).standard_normal(out.shape)
    return ops.sum(ops.mul(out, r))


class TestForward:
    def test_relu(self):
        out = ops.relu(Tensor([-1.0, 0.0, 2.0]))
        assert np.array_equal(out.data, [0, 0, 2])

    def test_conv_same_length(self, rng):
        out = ops.conv1d(rng.standard_normal((2, 3, 8)), rng.standard_normal((5, 3, 3)), stride=1, padding="same")
        assert out.shape == (2, 5, 8)

    def test_conv_matches_direct_sum(self, rng):
        x, w, b = rng.standard_normal((2, 3, 10)), rng.standard_normal((4, 3, 5)), rng.standard_normal(4)
        out = ops.conv1d(x, w, b, padding="valid").data
        ref = np.zeros((2, 4, 6))
        for n in range(2):
            for o in range(4):
                for t in range(6):
                    ref[n, o, t] = np.sum(x[n, :, t : t + 5] * w[o]) + b[o]
        assert np.allclose(out, ref, atol=1e-12)

    def test_conv_stride(self, rng):
        out = ops.conv1d(rng.standard_normal((1, 1, 9)), rng.standard_normal((1, 1, 3)), stride=2, padding="valid")
        assert out.shape == (1, 1, 4)

    def test_mse_zero(self, rng):
        x = rng.standard_normal((3, 4))
        assert ops.mse(x, x.copy()).data == 0.0

    def test_forward_by_name(self, rng):
        tape = Tape()
        a = P(rng, 3)
        out = ops.forward(tape, "relu", a)
        assert len(tape.records) == 1 and tape.records[0].primitive == "relu" and out.shape == (3,)

    def test_no_record_without_grad(self, rng):
        with Tape() as tape:
            ops.relu(Tensor(rng.standard_normal(3)))
        assert len(tape) == 0

    def test_shape_errors(self, rng):
        with pytest.raises(ShapeError):
            ops.matmul(np.ones((2, 3)), np.ones((2, 3)))
        with pytest.raises(ShapeError):
            ops.mse(np.ones(3), np.ones(4))
        with pytest.raises(ShapeError):
            ops.conv1d(np.ones((1, 1, 8)), np.ones((1, 1, 2)))


class TestHandDerivatives:
    def test_sum_wx(self, rng):
        w, x = P(rng, 5), rng.standard_normal(5)
        with Tape() as tape:
            loss = ops.sum(ops.mul(w, x))
        (g,) = backward(tape, loss, [w])
        assert np.array_equal(g, x)

    def test_mse_gradient(self, rng):
        pred, tgt = P(rng, 4, 6), rng.standard_normal((4, 6))
        with Tape() as tape:
            loss = ops.mse(pred, tgt)
        (g,) = tape.backward(loss, [pred])
        assert np.allclose(g, 2 * (pred.data - tgt) / 24, atol=1e-15)

    def test_unused_param_gets_zero(self, rng):
        a, b = P(rng, 3), P(rng, 3)
        with Tape() as tape:
            loss = ops.sum(a)
        ga, gb = tape.backward(loss, [a, b])
        assert np.array_equal(ga, np.ones(3)) and np.array_equal(gb, np.zeros(3))

    def test_non_scalar_loss(self, rng):
        a = P(rng, 3)
        with Tape() as tape:
            out = ops.relu(a)
        with pytest.raises(InvalidInputError):
            tape.backward(out)

    def test_linearity(self, rng):
        w = P(rng, 4, 3)
        x = rng.standard_normal((5, 4))

        def grads(fn):
            with Tape() as tape:
                loss = fn()
            return tape.backward(loss, [w])[0]

        l1 = lambda: ops.sum(ops.tanh(ops.matmul(x, w)))  # noqa: E731
        l2 = lambda: ops.mse(ops.matmul(x, w), np.ones((5, 3)))  # noqa: E731
        combo = lambda: ops.add(ops.scale(l1(), 2.5), ops.scale(l2(), -0.7))  # noqa: E731
        assert np.allclose(grads(combo), 2.5 * grads(l1) - 0.7 * grads(l2), atol=1e-12)

    def test_operator_overloads(self, rng):
        a, b = P(rng, 2, 2), P(rng, 2, 2)
        with Tape() as tape:
            loss = ops.sum((a @ b) * a - b + (-a))
        ga, gb = tape.backward(loss, [a, b])
        ones = np.ones((2, 2))
        assert np.allclose(ga, a.data @ b.data.T + a.data @ b.data - ones, atol=1e-12)
        assert np.allclose(gb, a.data.T @ a.data - ones, atol=1e-12)


def _cases():
    r = make_rng(2024)
    x3 = r.standard_normal((3, 2, 8))
    mask = (r.random((4, 5)) < 0.8).astype(float)
    away = r.standard_normal((4, 5))
    away[np.abs(away) < 0.05] = 0.3  # keep relu probes off the kink
    return {
        "matmul": lambda R: ([P(R, 4, 3), P(R, 3, 5)], lambda a, b: ops.matmul(a, b)),
        "add": lambda R: ([P(R, 4, 5), P(R, 5)], lambda a, b: ops.add(a, b)),
        "sub": lambda R: ([P(R, 4, 5), P(R, 4, 1)], lambda a, b: ops.sub(a, b)),
        "mul": lambda R: ([P(R, 4, 5), P(R, 1, 5)], lambda a, b: ops.mul(a, b)),
        "scale": lambda R: ([P(R, 4, 5)], lambda a: ops.scale(a, -1.7)),
        "sum": lambda R: ([P(R, 4, 5)], lambda a: ops.mul(ops.sum(a), ops.sum(a))),
        "relu": lambda R: ([Tensor(away.copy(), requires_grad=True)], lambda a: ops.relu(a)),
        "sigmoid": lambda R: ([P(R, 4, 5)], lambda a: ops.sigmoid(a)),
        "tanh": lambda R: ([P(R, 4, 5)], lambda a: ops.tanh(a)),
        "dropout": lambda R: ([P(R, 4, 5)], lambda a: ops.dropout(a, mask, 0.8)),
        "conv1d": lambda R: ([P(R, 2, 3, 9), P(R, 4, 3, 3), P(R, 4)], lambda x, w, b: ops.conv1d(x, w, b)),
        "conv1d_strided": lambda R: ([P(R, 2, 3, 11), P(R, 2, 3, 5)], lambda x, w: ops.conv1d(x, w, stride=2, padding="valid")),
        "batchnorm1d": lambda R: (
            [Tensor(x3.copy(), requires_grad=True), P(R, 2), P(R, 2)],
            lambda x, g, b: ops.batchnorm1d(x, g, b, training=True),
        ),
        "batchnorm1d_2d": lambda R: ([P(R, 6, 3), P(R, 3), P(R, 3)], lambda x, g, b: ops.batchnorm1d(x, g, b, training=True)),
        "batchnorm1d_eval": lambda R: (
            [P(R, 4, 2, 5), P(R, 2), P(R, 2)],
            lambda x, g, b: ops.batchnorm1d(x, g, b, np.array([0.1, -0.2]), np.array([0.5, 2.0]), training=False),
        ),
        "reshape": lambda R: ([P(R, 4, 6)], lambda a: ops.reshape(a, (2, 3, 4))),
        "flatten": lambda R: ([P(R, 2, 3, 4)], lambda a: ops.flatten(a)),
        "slice": lambda R: ([P(R, 3, 7)], lambda a: ops.slice_axis(a, 1, 2, 5)),
        "concat": lambda R: ([P(R, 2, 3), P(R, 2, 4)], lambda a, b: ops.concat([a, b], axis=1)),
        "mse": lambda R: ([P(R, 3, 4), P(R, 3, 4)], lambda a, b: ops.mse(a, b)),
        "lstm": lambda R: ([P(R, 2, 5, 3, scale=0.5), P(R, 3, 8, scale=0.5), P(R, 2, 8, scale=0.5), P(R, 8, scale=0.5)], lambda *t: ops.lstm(*t)),
    }


CASES = _cases()


@pytest.mark.parametrize("name", sorted(CASES))
def test_primitive_gradients(name):
    params, fn = CASES[name](make_rng(7, len(name)))

    def loss():
        out = fn(*params)
        return out if out.size == 1 else weighted(out)

    assert grad_check(loss, params) < TOL


def test_every_registered_primitive_is_checked():
    covered = {k.split("_")[0] for k in CASES}
    assert set(ops.PRIMITIVES) <= covered


def test_dense_mse_tight(rng):
    w, b = P(rng, 6, 4), P(rng, 4)
    x, y = rng.standard_normal((5, 6)), rng.standard_normal((5, 4))
    assert grad_check(lambda: ops.mse(ops.add(ops.matmul(x, w), b), y), [w, b]) < 1e-6


def test_lstm_unrolled_five_steps(rng):
    params = [P(rng, 2, 5, 1), P(rng, 1, 12), P(rng, 3, 12), P(rng, 12)]
    assert grad_check(lambda: weighted(lstm_unrolled(*params)), params) < TOL


def test_grad_check_eps_bounds(rng):
    a = P(rng, 2)
    with pytest.raises(InvalidInputError):
        grad_check(lambda: ops.sum(a), [a], eps=1e-2)


def test_grad_check_flags_wrong_gradient(rng):
    a = P(rng, 4)

    def bad():
        out = ops.sum(ops.mul(a, a))
        out.data = out.data + float(np.sum(a.data))  # forward changed without a matching backward
        return out

    assert grad_check(bad, [a]) > 0.1


class TestLstmKernel:
    def test_fused_matches_unrolled(self, rng):
        x, wx, wh, b = rng.standard_normal((3, 7, 2)), rng.standard_normal((2, 16)), rng.standard_normal((4, 16)), rng.standard_normal(16)
        assert np.allclose(ops.lstm(x, wx, wh, b).data, lstm_unrolled(x, wx, wh, b).data, atol=1e-12)

    def test_fused_gradients_match_unrolled(self, rng):
        ts = [P(rng, 2, 6, 1), P(rng, 1, 8), P(rng, 2, 8), P(rng, 8)]
        out = []
        for f in (ops.lstm, lstm_unrolled):
            with Tape() as tape:
                loss = weighted(f(*ts))
            out.append(tape.backward(loss, ts))
        for a, b in zip(*out):
            assert np.allclose(a, b, atol=1e-12)

    def test_zero_weights_zero_states(self):
        h = ops.lstm(np.ones((1, 10, 1)), np.zeros((1, 4)), np.zeros((1, 4)), np.zeros(4))
        assert np.array_equal(h.data, np.zeros((1, 10, 1)))

    @pytest.mark.skipif(_kernels.compiled is None, reason="compiled kernels not built")
    def test_backends_agree(self, rng):
        xw, wh = rng.standard_normal((3, 9, 8)), rng.standard_normal((2, 8))
        fc, fp = _kernels.compiled.lstm_forward(xw, wh), _kernels.python.lstm_forward(xw, wh)
        for a, b in zip(fc, fp):
            assert np.allclose(a, b, atol=1e-13)
        dh = rng.standard_normal((3, 9, 2))
        bc = _kernels.compiled.lstm_backward(dh, wh, *fc)
        bp = _kernels.python.lstm_backward(dh, wh, *fp)
        for a, b in zip(bc, bp):
            assert np.allclose(a, b, atol=1e-12)


class TestDropout:
    def test_all_ones_identity(self, rng):
        x = rng.standard_normal((3, 4))
        assert np.array_equal(ops.dropout(x, np.ones((3, 4)), 1.0).data, x)

    def test_expectation(self, rng):
        keep = 0.8
        x = np.ones(8)
        masks = (rng.random((20000, 8)) < keep).astype(float)
        raw = np.mean([m * x for m in masks], axis=0)  # before inverted scaling
        assert np.allclose(raw, keep * x, rtol=0.01)
        scaled = np.mean([ops.dropout(x, m, keep).data for m in masks], axis=0)
        assert np.allclose(scaled, x, rtol=0.01)

    def test_mask_shape(self):
        with pytest.raises(ShapeError):
            ops.dropout(np.ones(3), np.ones(4), 0.5)


class TestBatchnorm:
    def test_normalized_statistics(self, rng):
        x = 3.0 + 5.0 * rng.standard_normal((16, 4, 32))
        out = ops.batchnorm1d(x, np.ones(4), np.zeros(4), training=True).data
        assert np.allclose(out.mean(axis=(0, 2)), 0, atol=1e-6)
        assert np.allclose(out.var(axis=(0, 2)), 1, atol=1e-6)

    def test_running_stats(self, rng):
        x = rng.standard_normal((8, 2, 5)) + np.array([1.0, -2.0])[None, :, None]
        rm, rv = np.zeros(2), np.ones(2)
        ops.batchnorm1d(x, np.ones(2), np.zeros(2), rm, rv, training=True, momentum=0.9)
        assert np.allclose(rm, 0.1 * x.mean(axis=(0, 2)))
        assert np.allclose(rv, 0.9 + 0.1 * x.var(axis=(0, 2)))
        ev = ops.batchnorm1d(x, np.ones(2), np.zeros(2), rm, rv, training=False).data
        assert np.allclose(ev, (x - rm[None, :, None]) / np.sqrt(rv[None, :, None] + 1e-8))


class TestAdam:
    def test_first_step_sign(self, rng):
        p = Tensor(rng.standard_normal(6), requires_grad=True)
        start = p.data.copy()
        g = np.array([0.3, -2.0, 1e-3, -1e-2, 5.0, -0.7])
        st = AdamState([p], lr=1e-3)
        adam_step(st, [g])
        assert np.allclose(p.data - start, -1e-3 * np.sign(g), rtol=1e-4)

    def test_zero_gradient(self, rng):
        p = Tensor(rng.standard_normal(3), requires_grad=True)
        start = p.data.copy()
        st = AdamState([p])
        adam_step(st, [np.zeros(3)])
        assert np.array_equal(p.data, start) and st.t == 1

    def test_defaults(self):
        st = AdamState([])
        assert (st.lr, st.beta1, st.beta2, st.eps) == (5e-5, 0.5, 0.9, 1e-8)

    def test_deterministic_runs(self):
        def run():
            r = make_rng(3)
            w = Tensor(r.standard_normal((4, 2)), requires_grad=True)
            x, y = r.standard_normal((10, 4)), r.standard_normal((10, 2))
            st = AdamState([w], lr=1e-2)
            for _ in range(25):
                with Tape() as tape:
                    loss = ops.mse(ops.matmul(x, w), y)
                adam_step(st, tape.backward(loss, [w]))
            return w.data

        assert run().tobytes() == run().tobytes()

    def test_gradient_count_mismatch(self, rng):
        with pytest.raises(ShapeError):
            adam_step(AdamState([P(rng, 2)]), [])
