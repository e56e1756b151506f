"""Network mechanics: state initialization, clamping, relaxation, update
directions, feedback schemes. The backprop baseline serves as the oracle for
the output-layer update identity."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biopc import encodings as enc
from biopc.baseline import init_mlp
from biopc.linalg import ActivationKind, ShapeMismatchError
from biopc.network import (
    KolenPollack,
    PCNetwork,
    RandomFixed,
    Transpose,
    init_network,
    kp_step,
)

SIG = ActivationKind.SIGMOID


def _zero_net(dims, **kwargs):
    weights = [np.zeros((dims[l + 1], dims[l])) for l in range(len(dims) - 1)]
    return PCNetwork(dims, weights, **kwargs)


def _random_batch(net, batch, seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=(net.dims[0], batch))
    y = np.zeros((net.dims[-1], batch))
    y[rng.integers(0, net.dims[-1], size=batch), np.arange(batch)] = 1.0
    return x, y


class TestInitNetwork:
    def test_same_seed_bit_identical(self):
        a = init_network([8, 5, 3], feedback=RandomFixed(), seed=123)
        b = init_network([8, 5, 3], feedback=RandomFixed(), seed=123)
        for wa, wb in zip(a.weights, b.weights):
            np.testing.assert_array_equal(wa, wb)
        for ba, bb in zip(a.feedback_weights, b.feedback_weights):
            np.testing.assert_array_equal(ba, bb)

    def test_different_seed_differs(self):
        a = init_network([8, 5, 3], seed=1)
        b = init_network([8, 5, 3], seed=2)
        assert not np.array_equal(a.weights[0], b.weights[0])

    def test_full_scale_shapes(self):
        net = init_network([784, 300, 300, 10], seed=0)
        assert [w.shape for w in net.weights] == [(300, 784), (300, 300), (10, 300)]

    def test_xavier_bounds(self):
        net = init_network([40, 30], seed=5)
        bound = np.sqrt(6.0 / (40 + 30))
        assert np.max(np.abs(net.weights[0])) <= bound
        # spread should actually use the range
        assert np.max(np.abs(net.weights[0])) > 0.5 * bound

    def test_kp_feedback_starts_unaligned(self):
        net = init_network([200, 150, 10], feedback=KolenPollack(), seed=3)
        for l in range(2):
            b = net.feedback_weights[l].ravel()
            wt = net.weights[l].T.ravel()
            cos = b @ wt / (np.linalg.norm(b) * np.linalg.norm(wt))
            assert abs(cos) < 0.05

    def test_division_requires_positivity(self):
        with pytest.raises(ValueError, match="positive_activities"):
            init_network([4, 3], encoding=enc.Division(), positive_activities=False)

    def test_shape_validation(self):
        with pytest.raises(ShapeMismatchError):
            PCNetwork([4, 3], [np.zeros((2, 4))])
        with pytest.raises(ValueError):
            init_network([4])


class TestInitForward:
    def test_zero_weights_sigmoid_gives_half(self):
        net = _zero_net([3, 4, 2])
        state = net.init_forward(np.zeros((3, 5)))
        np.testing.assert_array_equal(state.a[1], np.full((4, 5), 0.5))
        np.testing.assert_array_equal(state.a[2], np.full((2, 5), 0.5))

    def test_errors_zero_before_clamp(self):
        net = init_network([6, 5, 4, 3], seed=11, bias=0.2)
        x, _ = _random_batch(net, 4, 0)
        state = net.compute_errors(net.init_forward(x))
        for l in range(1, net.n_levels + 1):
            np.testing.assert_array_equal(state.e[l], np.zeros_like(state.e[l]))

    def test_scalar_chain(self):
        net = _zero_net([1, 1, 1])
        state = net.init_forward(np.array([[1.0]]))
        assert state.p[1][0, 0] == 0.0 and state.p[2][0, 0] == 0.0
        assert state.a[1][0, 0] == 0.5 and state.a[2][0, 0] == 0.5

    def test_input_shape_checked(self):
        net = init_network([6, 3], seed=0)
        with pytest.raises(ShapeMismatchError):
            net.init_forward(np.zeros((5, 2)))

    def test_input_copied_not_aliased(self):
        net = init_network([3, 2], seed=0)
        x = np.zeros((3, 2))
        state = net.init_forward(x)
        x[0, 0] = 99.0
        assert state.a[0][0, 0] == 0.0


class TestClampOutput:
    def test_error_is_target_minus_effective_prediction(self):
        net = init_network([5, 4, 3], seed=7, bias=0.1)
        x, y = _random_batch(net, 3, 1)
        state = net.init_forward(x)
        net.clamp_output(state, y)
        net.compute_errors(state)
        np.testing.assert_allclose(state.e[2], y - state.phat[2], atol=0)

    def test_matched_target_zero_error(self):
        net = init_network([5, 4, 3], seed=7)
        x, _ = _random_batch(net, 3, 1)
        state = net.init_forward(x)
        y = state.phat[2].copy()
        net.clamp_output(state, y)
        net.compute_errors(state)
        np.testing.assert_array_equal(state.e[2], np.zeros_like(y))

    def test_one_hot_against_half_predictions(self):
        net = _zero_net([3, 2])
        state = net.init_forward(np.zeros((3, 4)))
        y = np.zeros((2, 4))
        y[0] = 1.0
        net.clamp_output(state, y)
        net.compute_errors(state)
        assert set(np.unique(state.e[1])) == {-0.5, 0.5}

    def test_shape_checked(self):
        net = init_network([5, 4, 3], seed=7)
        state = net.init_forward(np.zeros((5, 2)))
        with pytest.raises(ShapeMismatchError):
            net.clamp_output(state, np.zeros((4, 2)))
        with pytest.raises(ShapeMismatchError):
            net.clamp_output(state, np.zeros((3, 9)))


class TestComputeErrors:
    def test_matched_state_all_encodings(self):
        for encoding in (enc.Subtractive(), enc.SubtractiveThreshold(), enc.Division()):
            positive = isinstance(encoding, enc.Division)
            net = init_network([5, 4, 3], encoding=encoding, seed=2,
                               positive_activities=positive, bias=0.1)
            x, _ = _random_batch(net, 3, 5)
            state = net.compute_errors(net.init_forward(x))
            for l in (1, 2):
                if isinstance(encoding, enc.Subtractive):
                    np.testing.assert_array_equal(state.e[l], np.zeros_like(state.e[l]))
                elif isinstance(encoding, enc.SubtractiveThreshold):
                    baseline = 2.0 * (0.0 - encoding.e_min) / encoding.e_max
                    np.testing.assert_allclose(state.e_star[l], baseline, atol=1e-12)
                    np.testing.assert_allclose(state.e[l], 0.0, atol=1e-12)
                else:
                    np.testing.assert_allclose(state.e[l], 1.0, atol=1e-12)

    def test_error_shapes_match_activities(self):
        net = init_network([6, 5, 4, 3], seed=4)
        x, y = _random_batch(net, 7, 2)
        state = net.init_forward(x)
        net.clamp_output(state, y)
        net.compute_errors(state)
        for l in range(1, net.n_levels + 1):
            assert state.e[l].shape == state.a[l].shape


class TestActivityStep:
    def test_beta_zero_is_identity(self):
        net = init_network([5, 4, 3], seed=9)
        x, y = _random_batch(net, 3, 3)
        state = net.init_forward(x)
        net.clamp_output(state, y)
        net.compute_errors(state)
        before_a = [a.copy() for a in state.a]
        before_p = [None] + [p.copy() for p in state.p[1:]]
        net.activity_step(state, 0.0)
        for l in range(len(before_a)):
            np.testing.assert_array_equal(state.a[l], before_a[l])
        for l in range(1, len(before_p)):
            np.testing.assert_array_equal(state.p[l], before_p[l])

    def test_beta_out_of_range(self):
        net = init_network([5, 4, 3], seed=9)
        x, y = _random_batch(net, 3, 3)
        state = net.init_forward(x)
        net.clamp_output(state, y)
        net.compute_errors(state)
        with pytest.raises(ValueError, match="beta"):
            net.activity_step(state, 1.5)
        with pytest.raises(ValueError, match="beta"):
            net.activity_step(state, -0.1)

    def test_first_direction_is_pure_bottom_up(self):
        # hidden errors are zero right after init + clamp, so the top hidden
        # level's direction reduces to feedback of the output error
        net = init_network([6, 5, 4], seed=13)
        x, y = _random_batch(net, 2, 4)
        state = net.init_forward(x)
        net.clamp_output(state, y)
        net.compute_errors(state)
        dirs = net.activity_directions(state)
        from biopc.linalg import activate_deriv
        expected = net.weights[1].T @ (state.e[2] * activate_deriv(SIG, state.p[2]))
        np.testing.assert_allclose(dirs[1], expected, atol=0)

    def test_scalar_chain_direction_zero(self):
        net = _zero_net([1, 1, 1])
        state = net.init_forward(np.array([[1.0]]))
        net.clamp_output(state, np.array([[1.0]]))
        net.compute_errors(state)
        assert state.e[2][0, 0] == 0.5
        dirs = net.activity_directions(state)
        assert dirs[1][0, 0] == 0.0  # 0 * (0.5 * 0.25) - 0

    def test_clamped_levels_never_move(self):
        net = init_network([6, 5, 4, 3], seed=1)
        x, y = _random_batch(net, 3, 8)
        state = net.init_forward(x)
        net.clamp_output(state, y)
        x_before, y_before = state.a[0].copy(), state.a[3].copy()
        for _ in range(17):
            net.compute_errors(state)
            net.activity_step(state, 0.1)
        np.testing.assert_array_equal(state.a[0], x_before)
        np.testing.assert_array_equal(state.a[3], y_before)

    @given(seed=st.integers(0, 50), batch=st.integers(1, 4))
    @settings(max_examples=25, deadline=None)
    def test_positivity_enforced(self, seed, batch):
        net = init_network([6, 5, 4, 3], seed=seed, positive_activities=True,
                           hidden_activation=ActivationKind.TANH)
        x, y = _random_batch(net, batch, seed + 1000)
        state = net.init_forward(x)
        net.clamp_output(state, y)
        for _ in range(5):
            net.compute_errors(state)
            net.activity_step(state, 0.2)
            for l in range(net.n_levels + 1):
                assert np.min(state.a[l]) >= 0.0

    def test_energy_descends_with_small_steps(self):
        ok = 0
        trials = 30
        for seed in range(trials):
            net = init_network([6, 5, 4, 3], seed=seed)
            x, y = _random_batch(net, 4, seed + 77)
            state = net.init_forward(x)
            net.clamp_output(state, y)
            energies = []
            for _ in range(20):
                net.compute_errors(state)
                energies.append(net.objective(state))
                net.activity_step(state, 0.05)
            net.compute_errors(state)
            energies.append(net.objective(state))
            diffs = np.diff(energies)
            if np.all(diffs <= 1e-12):
                ok += 1
        assert ok >= 0.95 * trials


class TestWeightUpdateDirection:
    def test_zero_errors_zero_directions(self):
        net = init_network([5, 4, 3], seed=21, bias=0.3)
        x, _ = _random_batch(net, 3, 2)
        state = net.compute_errors(net.init_forward(x))
        for d in net.weight_update_direction(state):
            np.testing.assert_array_equal(d, np.zeros_like(d))

    def test_scalar_case(self):
        # x = 1, W = 0, y = 1, sigmoid: e = 0.5, f'(0) = 0.25, a_0 = 1
        net = _zero_net([1, 1])
        state = net.init_forward(np.array([[1.0]]))
        net.clamp_output(state, np.array([[1.0]]))
        net.compute_errors(state)
        d = net.weight_update_direction(state)
        assert d[0][0, 0] == 0.125

    @pytest.mark.parametrize("bias", [0.0, 0.15])
    def test_output_layer_matches_backprop(self, bias):
        # with zero activity steps the top update equals the negated MSE
        # gradient of the baseline holding the same weights
        net = init_network([6, 5, 4], seed=31, bias=bias)
        mlp = init_mlp([6, 5, 4], seed=31, bias=bias)
        x, y = _random_batch(net, 5, 6)
        state = net.init_forward(x)
        net.clamp_output(state, y)
        net.compute_errors(state)
        pc_top = net.weight_update_direction(state)[-1]
        bp_top = mlp.backward(x, y)[-1]
        np.testing.assert_allclose(pc_top, -bp_top, atol=1e-10)

    def test_threshold_equivalent_to_subtractive_within_1e12(self):
        sub = init_network([6, 5, 4], seed=8)
        thr = init_network([6, 5, 4], encoding=enc.SubtractiveThreshold(), seed=8)
        x, y = _random_batch(sub, 4, 9)
        states = []
        for net in (sub, thr):
            state = net.init_forward(x)
            net.clamp_output(state, y)
            net.relax(state, 5, 0.1)
            net.compute_errors(state)
            states.append(state)
        for da, db in zip(sub.weight_update_direction(states[0]),
                          thr.weight_update_direction(states[1])):
            np.testing.assert_allclose(da, db, atol=1e-12)
        for aa, ab in zip(states[0].a, states[1].a):
            np.testing.assert_allclose(aa, ab, atol=1e-12)


class TestKolenPollackStep:
    def test_pure_decay(self):
        rng = np.random.default_rng(14)
        w = rng.normal(size=(3, 4))
        b = rng.normal(size=(4, 3))
        w2, b2 = kp_step(w, b, np.zeros_like(w), 0.05)
        np.testing.assert_allclose(w2, 0.95 * w, atol=1e-15)
        np.testing.assert_allclose(b2, 0.95 * b, atol=1e-15)

    def test_transpose_alignment_preserved(self):
        rng = np.random.default_rng(15)
        w = rng.normal(size=(3, 4))
        b = w.T.copy()
        for _ in range(10):
            adj = rng.normal(size=(3, 4)) * 0.1
            w, b = kp_step(w, b, adj, 0.01)
        np.testing.assert_allclose(b, w.T, atol=1e-12)

    def test_convergence_over_random_adjustments(self):
        rng = np.random.default_rng(16)
        w = rng.normal(size=(5, 7))
        b = rng.normal(size=(7, 5))
        gaps = [np.linalg.norm(b - w.T)]
        for _ in range(1000):
            adj = rng.normal(size=(5, 7)) * 0.05
            w, b = kp_step(w, b, adj, 0.01)
            gaps.append(np.linalg.norm(b - w.T))
        diffs = np.diff(gaps)
        assert np.all(diffs <= 1e-12)  # gap contracts by (1 - gamma) each step
        assert gaps[-1] < 1e-3 * np.linalg.norm(w)

    def test_shape_checks(self):
        with pytest.raises(ShapeMismatchError):
            kp_step(np.ones((2, 3)), np.ones((2, 3)), np.ones((2, 3)), 0.01)
        with pytest.raises(ShapeMismatchError):
            kp_step(np.ones((2, 3)), np.ones((3, 2)), np.ones((3, 3)), 0.01)


class TestPredict:
    def test_matches_init_forward(self):
        for positive in (False, True):
            net = init_network([6, 5, 4, 3], seed=19, bias=0.1,
                               hidden_activation=ActivationKind.TANH,
                               positive_activities=positive)
            x, _ = _random_batch(net, 6, 3)
            state = net.init_forward(x)
            np.testing.assert_array_equal(net.predict(x), state.a[3])

    def test_zero_weights(self):
        net = _zero_net([4, 3, 2])
        np.testing.assert_array_equal(net.predict(np.zeros((4, 6))),
                                      np.full((2, 6), 0.5))

    def test_deterministic(self):
        net = init_network([6, 5, 3], seed=23)
        x, _ = _random_batch(net, 4, 4)
        np.testing.assert_array_equal(net.predict(x), net.predict(x))


class TestFeedbackSchemes:
    def test_transpose_uses_weight_transpose(self):
        net = init_network([5, 4, 3], seed=1)
        np.testing.assert_array_equal(net.feedback_matrix(0), net.weights[0].T)

    def test_random_uses_separate_matrix(self):
        net = init_network([5, 4, 3], feedback=RandomFixed(), seed=1)
        assert net.feedback_matrix(0) is net.feedback_weights[0]
        assert not np.allclose(net.feedback_matrix(0), net.weights[0].T)

    def test_kp_gamma_validated(self):
        with pytest.raises(ValueError):
            KolenPollack(gamma=0.0)
        with pytest.raises(ValueError):
            KolenPollack(gamma=1.0)

    def test_transpose_rejects_feedback_matrices(self):
        with pytest.raises(ValueError):
            PCNetwork([3, 2], [np.zeros((2, 3))], [np.zeros((3, 2))],
                      feedback=Transpose())
