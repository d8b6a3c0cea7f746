import math

import numpy as np
import pytest
from conftest import oracle_unitary, oracle_z

from qcartpole.dynamics import ReducedState
from qcartpole.quantum import (
    Backend,
    CircuitInput,
    EncodingAngles,
    NoiseParams,
    ShotCounts,
    amplitudes,
    encode_features,
    estimate_z,
    expectation_z,
    expectation_z_batch,
    parameter_shift_grad,
    sample_counts,
)

PI = math.pi


def ci(b1, b2, b3, theta):
    return CircuitInput(EncodingAngles(b1, b2, b3), theta)


@pytest.mark.parametrize(
    "obs,expected",
    [((0, 0, 0), (0, 0, 0)), ((1, 0, -1), (PI / 4, 0, -PI / 4))],
)
def test_encode_features(obs, expected):
    assert encode_features(ReducedState(*obs)) == pytest.approx(expected)


def test_encode_asymptote():
    b = encode_features(ReducedState(1e6, 0, 0))
    assert PI / 2 - 1e-5 < b.beta1 < PI / 2


@pytest.mark.parametrize(
    "angles",
    [(0, 0, 0, 0), (0, PI / 2, 0, 0), (PI / 2, 0, 0, PI / 2)],
)
def test_expectation_examples(angles):
    expected = oracle_z(*angles)
    assert expectation_z(ci(*angles)) == pytest.approx(expected, abs=1e-12)


def test_expectation_frozen_values():
    # values computed with the expm oracle in conftest
    assert oracle_z(0, 0, 0, 0) == pytest.approx(0.0, abs=1e-12)
    assert oracle_z(0, PI / 2, 0, 0) == pytest.approx(-1.0, abs=1e-12)
    assert oracle_z(PI / 2, 0, 0, PI / 2) == pytest.approx(1.0, abs=1e-12)
    assert expectation_z(ci(0, PI / 2, 0, 0)) == pytest.approx(-1.0, abs=1e-12)
    assert expectation_z(ci(PI / 2, 0, 0, PI / 2)) == pytest.approx(1.0, abs=1e-12)


def test_closed_form_matches_oracle_on_random_inputs(rng):
    params = rng.uniform(-2 * PI, 2 * PI, size=(2000, 4))
    want = np.array([oracle_z(*p) for p in params])
    got = np.array([expectation_z(ci(*p)) for p in params])
    batch = expectation_z_batch(params[:, :3], params[:, 3])
    assert np.max(np.abs(got - want)) <= 1e-12
    assert np.max(np.abs(batch - want)) <= 1e-12


def test_amplitudes_normalised_and_match_oracle(rng):
    for p in rng.uniform(-PI, PI, size=(100, 4)):
        a = amplitudes(ci(*p))
        assert abs(a.a0) ** 2 + abs(a.a1) ** 2 == pytest.approx(1.0, abs=1e-12)
        psi = oracle_unitary(*p)[:, 0]
        assert abs(a.a0) == pytest.approx(abs(psi[0]), abs=1e-12)


def test_sample_counts_deterministic_outcome():
    inp = ci(PI / 2, 0, 0, PI / 2)  # <Z> = 1
    counts = sample_counts(inp, 100, NoiseParams(), np.random.default_rng(0))
    assert counts == ShotCounts(100, 0)


def test_sample_counts_readout_flip_rate():
    inp = ci(0, PI / 2, 0, 0)  # <Z> = -1, qubit always in |1>
    noise = NoiseParams(eps01=0.0295, eps10=0.0615)
    n = 1_000_000
    counts = sample_counts(inp, n, noise, np.random.default_rng(1))
    se = math.sqrt(0.0615 * (1 - 0.0615) / n)
    assert abs(counts.n0 / n - 0.0615) < 4 * se


def test_sample_counts_symmetric_case(rng):
    inp = ci(0, 0, 0, 0)
    n = 400
    draws = [sample_counts(inp, n, NoiseParams(), rng).n0 for _ in range(2000)]
    assert np.mean(draws) == pytest.approx(n / 2, abs=4 * math.sqrt(n / 4 / 2000))
    assert np.var(draws) == pytest.approx(n / 4, rel=0.15)


def test_sample_counts_rejects_zero_shots():
    with pytest.raises(ValueError):
        sample_counts(ci(0, 0, 0, 0), 0, NoiseParams(), np.random.default_rng(0))


@pytest.mark.parametrize("counts,z", [((100, 0), 1.0), ((0, 100), -1.0), ((75, 25), 0.5)])
def test_estimate_z(counts, z):
    assert estimate_z(ShotCounts(*counts)) == z


def test_estimate_z_needs_shots():
    with pytest.raises(ValueError):
        estimate_z(ShotCounts(0, 0))


@pytest.mark.parametrize("n_shots", [128, 1024])
def test_shot_estimator_spread(n_shots, rng):
    inp = ci(0.3, -0.4, 0.8, 1.1)
    z = expectation_z(inp)
    est = [estimate_z(sample_counts(inp, n_shots, NoiseParams(), rng)) for _ in range(4000)]
    expected = math.sqrt((1 - z * z) / n_shots)
    assert np.std(est, ddof=1) == pytest.approx(expected, rel=0.2)


def test_noise_affine_law(rng):
    noise = NoiseParams.device()
    inp = ci(0.2, 0.7, -0.3, 0.9)
    z = expectation_z(inp)
    n = 1_000_000
    est = estimate_z(sample_counts(inp, n, noise, rng))
    mean = (1 - noise.eps01 - noise.eps10) * (1 - noise.gate_depol) ** 3 * z + (noise.eps10 - noise.eps01)
    p0 = (1 + mean) / 2
    se = 2 * math.sqrt(p0 * (1 - p0) / n)
    assert abs(est - mean) < 3 * se
    assert noise.expected_z(z) == pytest.approx(mean, abs=1e-15)


def test_device_noise_defaults():
    noise = NoiseParams.device()
    assert noise.eps01 == 0.0295 and noise.eps10 == 0.0615
    assert noise.gate_depol == pytest.approx(0.0048, abs=1e-15)
    assert noise.readout_fidelity == pytest.approx(0.9545, abs=1e-15)
    with pytest.raises(ValueError):
        NoiseParams(eps01=1.5)


def test_backend_validation():
    with pytest.raises(ValueError):
        Backend("sampled", 0)
    with pytest.raises(ValueError):
        Backend("analytic", 10)
    with pytest.raises(ValueError):
        Backend("sampled", 10, NoiseParams.device())
    assert Backend.sampled_noisy(128).noise == NoiseParams.device()


def test_shift_rule_examples():
    for theta in np.linspace(-3, 3, 7):
        assert parameter_shift_grad(ci(0, 0, 0, theta)) == pytest.approx(0.0, abs=1e-15)
    # with b1 = pi/2 the output is sin(theta)
    for theta in np.linspace(-3, 3, 7):
        assert parameter_shift_grad(ci(PI / 2, 0, 0, theta)) == pytest.approx(math.cos(theta), abs=1e-12)
    assert parameter_shift_grad(ci(PI / 2, 0, 0, 0.0)) == pytest.approx(1.0, abs=1e-12)


def test_shift_rule_matches_finite_differences(rng):
    h = 1e-6
    for p in rng.uniform(-PI, PI, size=(100, 4)):
        fd = (oracle_z(*p[:3], p[3] + h) - oracle_z(*p[:3], p[3] - h)) / (2 * h)
        assert parameter_shift_grad(ci(*p)) == pytest.approx(fd, abs=1e-6)


def test_shift_rule_is_exact_derivative(rng):
    # d/dtheta of A sin(theta) - B cos(theta) in closed form
    for b1, b2, b3, theta in rng.uniform(-PI, PI, size=(200, 4)):
        a = math.cos(b1) * math.cos(b2) * math.sin(b3) + math.sin(b1) * math.cos(b3)
        b = math.cos(b1) * math.sin(b2)
        exact = a * math.cos(theta) + b * math.sin(theta)
        assert parameter_shift_grad(ci(b1, b2, b3, theta)) == pytest.approx(exact, abs=1e-13)


def test_sampled_shift_rule_is_unbiased(rng):
    inp = ci(0.4, 0.1, -0.6, 0.3)
    exact = parameter_shift_grad(inp)
    backend = Backend.sampled(1024)
    draws = [parameter_shift_grad(inp, backend, rng) for _ in range(3000)]
    # each shifted estimate has variance <= 1/N; the difference halves it
    se = math.sqrt(0.5 / 1024 / 3000)
    assert abs(np.mean(draws) - exact) < 4 * se
