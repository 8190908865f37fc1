import numpy as np
import pytest

from esmda import (
    DeclineCurveModel,
    Ensemble,
    ForwardModel,
    ForwardModelError,
    LinearModel,
    RunCounter,
    decline_apply,
    evaluate_batch,
    linear_apply,
)


class TestLinear:
    def test_zero_matrix_gives_bias(self):
        model = LinearModel(np.zeros((2, 3)), [1.0, -1.0])
        np.testing.assert_array_equal(linear_apply(np.array([1.0, 2.0, 3.0]), model), [1.0, -1.0])

    def test_sum(self):
        assert linear_apply(np.array([2.0, 3.0]), LinearModel([[1.0, 1.0]], [0.0])).tolist() == [5.0]

    def test_dot_product_oracle(self, rng):
        G = rng.standard_normal((5, 4))
        bias = rng.standard_normal(5)
        m = rng.standard_normal(4)
        expected = [sum(G[i, k] * m[k] for k in range(4)) + bias[i] for i in range(5)]
        np.testing.assert_allclose(linear_apply(m, LinearModel(G, bias)), expected, rtol=0, atol=1e-14)

    def test_dimension_errors(self):
        with pytest.raises(ValueError):
            LinearModel(np.eye(2), [0.0])
        with pytest.raises(ValueError):
            linear_apply(np.zeros(3), LinearModel(np.eye(2)))


class TestDecline:
    def test_zero_decline(self):
        model = DeclineCurveModel([0.0, 1.0, 10.0, 1000.0])
        np.testing.assert_allclose(decline_apply(np.array([0.0, -745.0]), model), 1.0, rtol=1e-12)

    def test_initial_rate(self):
        q = decline_apply(np.array([np.log(100.0), np.log(0.5)]), DeclineCurveModel([0.0]))
        assert q[0] == pytest.approx(100.0, rel=1e-15)

    def test_hand_value(self):
        # 100 * exp(-1) evaluated at 30 digits
        q = decline_apply(np.array([np.log(100.0), np.log(0.5)]), DeclineCurveModel([2.0]))
        assert q[0] == pytest.approx(36.7879441171442321595523770161, rel=1e-14)

    def test_strictly_decreasing(self):
        q = decline_apply(np.array([2.0, -1.0]), DeclineCurveModel(np.linspace(0, 20, 50)))
        assert np.all(np.diff(q) < 0)

    def test_overflow(self):
        with pytest.raises(ForwardModelError):
            decline_apply(np.array([800.0, 0.0]), DeclineCurveModel([0.0]))

    @pytest.mark.parametrize("times", [[1.0, 1.0], [2.0, 1.0], [-1.0, 0.0], []])
    def test_bad_times(self, times):
        with pytest.raises(ValueError):
            DeclineCurveModel(times)


class TestEvaluateBatch:
    def test_identity(self, rng):
        e = Ensemble(rng.standard_normal((6, 3)))
        out = evaluate_batch(LinearModel(np.eye(3)), e)
        np.testing.assert_array_equal(out.members, e.members)

    def test_decline_at_time_zero(self, rng):
        e = Ensemble(rng.standard_normal((8, 2)))
        out = evaluate_batch(DeclineCurveModel([0.0]), e)
        np.testing.assert_allclose(out.members[:, 0], np.exp(e.members[:, 0]), rtol=1e-15)

    def test_parallel_bitwise(self, rng):
        model = LinearModel(rng.standard_normal((7, 5)), rng.standard_normal(7))
        e = Ensemble(rng.standard_normal((100, 5)))
        a = evaluate_batch(model, e, parallelism=1)
        b = evaluate_batch(model, e, parallelism=8)
        np.testing.assert_array_equal(a.members, b.members)

    def test_order_preserved_under_shuffle(self, rng):
        model = DeclineCurveModel(np.linspace(0, 3, 5))
        e = Ensemble(rng.standard_normal((40, 2)) * 0.3)
        p = rng.permutation(40)
        shuffled = evaluate_batch(model, Ensemble(e.members[p]), parallelism=4)
        unshuffled = np.empty_like(shuffled.members)
        unshuffled[p] = shuffled.members
        np.testing.assert_array_equal(unshuffled, evaluate_batch(model, e).members)

    def test_counter(self, rng):
        counter = RunCounter()
        e = Ensemble(rng.standard_normal((9, 2)))
        evaluate_batch(LinearModel(np.eye(2)), e, counter=counter)
        evaluate_batch(LinearModel(np.eye(2)), e, parallelism=3, counter=counter)
        assert counter.total == 18

    def test_counter_monotone(self):
        with pytest.raises(ValueError):
            RunCounter().add(-1)

    def test_nonfinite_member_named(self):
        class Blowup(ForwardModel):
            n_m, n_d = 1, 1

            def evaluate(self, m):
                return np.array([np.inf if m[0] > 0 else 0.0])

        e = Ensemble([[-1.0], [-2.0], [3.0]])
        for par in (1, 2):
            with pytest.raises(ForwardModelError, match="member 2") as info:
                evaluate_batch(Blowup(), e, parallelism=par)
            assert info.value.member == 2

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            evaluate_batch(LinearModel(np.eye(3)), Ensemble(np.zeros((3, 2))))
