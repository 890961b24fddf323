import numpy as np
import pytest

from qtrl import dense, quantum
from qtrl.dense import DenseNetSpec
from qtrl.errors import ConfigurationError, NumericalError, ShapeError
from qtrl.generator import (
    QTConfig,
    bitstring_features,
    generate_theta,
    init_params,
    qt_backward,
    qt_param_count,
    qubits_for,
)
from qtrl.quantum import CircuitParams

from conftest import central_diff, grad_mismatch, oracle_circuit


@pytest.mark.parametrize("i,n,bits", [
    (0, 3, [0, 0, 0]),
    (5, 3, [1, 0, 1]),
    (897, 10, [1, 1, 1, 0, 0, 0, 0, 0, 0, 1]),
])
def test_bitstring_features(i, n, bits):
    np.testing.assert_array_equal(bitstring_features(i, n), bits)


@pytest.mark.parametrize("i", [-1, 8])
def test_bitstring_out_of_range(i):
    with pytest.raises(ConfigurationError):
        bitstring_features(i, 3)


@pytest.mark.parametrize("k,n", [(1, 1), (2, 1), (3, 2), (4, 2), (5, 3), (898, 10), (1024, 10), (1025, 11), (4835, 13)])
def test_qubits_for(k, n):
    assert qubits_for(k) == n
    cfg = QTConfig(k, 1)
    assert cfg.n == n and cfg.mapping_spec.layer_sizes == (n + 1, 10, 10, 1)
    if k > 1:
        assert 2 ** n >= k > 2 ** (n - 1)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        QTConfig(0, 1)
    with pytest.raises(ConfigurationError):
        QTConfig(10, 0)
    with pytest.raises(ConfigurationError):
        QTConfig(10, 1, DenseNetSpec((4, 3)))


@pytest.mark.parametrize("k,depth,count", [(898, 5, 541), (4835, 3, 505), (2, 1, 157)])
def test_qt_param_count(k, depth, count):
    assert qt_param_count(QTConfig(k, depth)) == count


@pytest.mark.parametrize("k,depth", [(898, 1), (898, 3), (898, 5), (4835, 3), (4835, 7), (4835, 13)])
def test_compression(k, depth):
    assert qt_param_count(QTConfig(k, depth)) < k


def test_zero_everything_gives_zero_theta():
    cfg = QTConfig(5, 2)
    out = generate_theta(CircuitParams.zeros(cfg.n, 2), np.zeros(dense.param_count(cfg.mapping_spec)), cfg)
    assert out.values.shape == (5,)
    assert not np.any(out.values)


def _passthrough(cfg, c=0.75, bias=-0.2):
    """Mapping that ignores the bits and returns c * relu(prob) + bias."""
    (w1, b1), (w2, b2), (w3, b3) = [(w.copy(), b.copy()) for w, b in
                                    dense.unflatten(cfg.mapping_spec, np.zeros(dense.param_count(cfg.mapping_spec)))]
    w1[0, -1] = 1.0
    w2[0, 0] = 1.0
    w3[0, 0] = c
    b3[0] = bias
    return np.concatenate([w1.ravel(), b1, w2.ravel(), b2, w3.ravel(), b3])


def test_passthrough_on_ground_state():
    cfg = QTConfig(6, 1, prob_scale=1.0)
    theta = generate_theta(CircuitParams.zeros(cfg.n, 1), _passthrough(cfg), cfg).values
    f = lambda p: 0.75 * p - 0.2  # noqa: E731
    assert theta[0] == pytest.approx(f(1.0), abs=1e-15)
    np.testing.assert_allclose(theta[1:], f(0.0), atol=1e-15)


def test_default_feature_scale_is_two_to_n():
    cfg = QTConfig(6, 1)
    assert cfg.feature_scale == 8.0
    theta = generate_theta(CircuitParams.zeros(cfg.n, 1), _passthrough(cfg, bias=0.0), cfg).values
    assert theta[0] == pytest.approx(0.75 * 8.0)


def _oracle_theta(angles, mapping, k, scale):
    """Straight-line composition: dense circuit oracle then a hand-written MLP."""
    n = angles.shape[1]
    probs = np.abs(oracle_circuit(angles)) ** 2
    sizes = [n + 1, 10, 10, 1]
    out = []
    for i in range(k):
        h = np.array([(i >> (n - 1 - b)) & 1 for b in range(n)] + [scale * probs[i]], dtype=float)
        pos = 0
        for li in range(3):
            fi, fo = sizes[li], sizes[li + 1]
            W = mapping[pos:pos + fi * fo].reshape(fo, fi)
            pos += fi * fo
            b = mapping[pos:pos + fo]
            pos += fo
            h = W @ h + b
            if li < 2:
                h = np.maximum(h, 0.0)
        out.append(h[0])
    return np.array(out)


@pytest.mark.parametrize("scale", [None, 1.0])
def test_generate_matches_composition_oracle(rng, scale):
    cfg = QTConfig(3, 2, prob_scale=scale)
    circuit, mapping = init_params(cfg, rng)
    mapping = rng.normal(size=mapping.size)
    got = generate_theta(circuit, mapping, cfg).values
    np.testing.assert_allclose(got, _oracle_theta(circuit.angles, mapping, 3, cfg.feature_scale), atol=1e-12)


def _end_to_end(cfg, rng, loss_grad=lambda t: 2 * t, loss=lambda t: np.sum(t ** 2)):
    circuit, _ = init_params(cfg, rng)
    mapping = rng.normal(size=dense.param_count(cfg.mapping_spec))
    theta = generate_theta(circuit, mapping, cfg).values
    g_angles, g_map = qt_backward(circuit, mapping, cfg, loss_grad(theta))

    def f_angles(a):
        return loss(generate_theta(CircuitParams(a), mapping, cfg).values)

    def f_map(m):
        return loss(generate_theta(circuit, m, cfg).values)

    fd_angles = central_diff(f_angles, circuit.angles)
    fd_map = central_diff(f_map, mapping)
    return grad_mismatch(g_angles, fd_angles), grad_mismatch(g_map, fd_map)


def test_backward_sum_of_squares_n2_k3(rng):
    for rel, tiny in _end_to_end(QTConfig(3, 1), rng):
        assert rel < 1e-5 and tiny < 1e-8


def test_backward_weighted_functional(rng):
    w = rng.normal(size=7)
    cfg = QTConfig(7, 2)
    for rel, tiny in _end_to_end(cfg, rng, lambda t: w * np.cos(t), lambda t: np.sum(w * np.sin(t))):
        assert rel < 1e-5 and tiny < 1e-8


def test_backward_zero_upstream(rng):
    cfg = QTConfig(5, 2)
    circuit, mapping = init_params(cfg, rng)
    ga, gm = qt_backward(circuit, mapping, cfg, np.zeros(5))
    assert not np.any(ga) and not np.any(gm)


def test_dead_probability_path(rng):
    cfg = QTConfig(5, 2)
    circuit, mapping = init_params(cfg, rng)
    (w1, _), *_ = dense.unflatten(cfg.mapping_spec, mapping)
    w1[:, -1] = 0.0
    before = quantum.invocation_count()
    ga, gm = qt_backward(circuit, mapping, cfg, rng.normal(size=5))
    assert not np.any(ga)
    assert np.any(gm)
    # forward for the probabilities only; the adjoint pass is skipped
    assert quantum.invocation_count() == before + 1


def test_backward_rejects_bad_grad(rng):
    cfg = QTConfig(5, 1)
    circuit, mapping = init_params(cfg, rng)
    with pytest.raises(NumericalError):
        qt_backward(circuit, mapping, cfg, np.array([np.nan, 0, 0, 0, 0]))
    with pytest.raises(ShapeError):
        qt_backward(circuit, mapping, cfg, np.zeros(4))


def test_shape_checks(rng):
    cfg = QTConfig(5, 2)
    circuit, mapping = init_params(cfg, rng)
    with pytest.raises(ShapeError):
        generate_theta(CircuitParams.zeros(2, 2), mapping, cfg)
    with pytest.raises(ShapeError):
        generate_theta(CircuitParams.zeros(3, 1), mapping, cfg)
    with pytest.raises(ShapeError):
        generate_theta(circuit, mapping[:-1], cfg)


def test_determinism():
    cfg = QTConfig(898, 2)
    a = generate_theta(*init_params(cfg, np.random.default_rng(5)), cfg).values
    b = generate_theta(*init_params(cfg, np.random.default_rng(5)), cfg).values
    np.testing.assert_array_equal(a, b)


def test_init_angles_in_range(rng):
    circuit, mapping = init_params(QTConfig(100, 3), rng)
    assert np.all(circuit.angles >= 0) and np.all(circuit.angles < 2 * np.pi)
    assert mapping.shape == (dense.param_count(QTConfig(100, 3).mapping_spec),)


@pytest.mark.parametrize("c", [1e3, -1e6, 1e9])
def test_theta_unbounded(c):
    cfg = QTConfig(4, 1, prob_scale=1.0)
    theta = generate_theta(CircuitParams.zeros(cfg.n, 1), _passthrough(cfg, c=c, bias=0.0), cfg).values
    assert theta[0] == pytest.approx(c)
