import numpy as np
import pytest

from ultraflat_lab.generators import (
    FlattenerConfig,
    FlattenerTrace,
    flat_sweep,
    flatten,
    quadratic_phase,
    random_unimodular,
    rudin_shapiro,
    rudin_shapiro_pair,
)
from ultraflat_lab.phase import flatness_report
from ultraflat_lab.poly_core import evaluate_on_grid, grid_values, make_unimodular, mean_square


def test_quadratic_phase_small_cases():
    np.testing.assert_array_equal(quadratic_phase(0).coeffs, [1])
    np.testing.assert_allclose(quadratic_phase(1).coeffs, [1, 1j], atol=1e-15)
    with pytest.raises(ValueError):
        quadratic_phase(-1)


def test_quadratic_phase_matches_float_formula():
    n = 40
    k = np.arange(n + 1)
    np.testing.assert_allclose(quadratic_phase(n).coeffs, np.exp(1j * np.pi * k**2 / (n + 1)), atol=1e-12)


def test_quadratic_phase_is_unimodular_for_large_n():
    c = quadratic_phase(100_000).coeffs
    assert np.max(np.abs(np.abs(c) - 1)) <= 1e-15


def test_rudin_shapiro_examples():
    np.testing.assert_array_equal(rudin_shapiro(1).coeffs, [1, 1])
    np.testing.assert_array_equal(rudin_shapiro(2).coeffs, [1, 1, 1, -1])
    np.testing.assert_array_equal(rudin_shapiro(3).coeffs, [1, 1, 1, -1, 1, 1, -1, 1])
    assert rudin_shapiro(0).degree == 0
    with pytest.raises(ValueError):
        rudin_shapiro(-1)


@pytest.mark.parametrize("m", [1, 4, 8, 11])
def test_rudin_shapiro_pair_identity(m):
    p, q = rudin_shapiro_pair(m)
    assert set(np.unique(p)) <= {-1.0, 1.0} and set(np.unique(q)) <= {-1.0, 1.0}
    M = 4 * p.size
    total = np.abs(grid_values(p, M)) ** 2 + np.abs(grid_values(q, M)) ** 2
    assert np.max(np.abs(total - 2 ** (m + 1))) <= 1e-10 * 2 ** (m + 1)


@pytest.mark.parametrize("m", [3, 6, 10])
def test_rudin_shapiro_sup_bound(m):
    P = rudin_shapiro(m)
    R = np.abs(evaluate_on_grid(P, 16 * 2**m).values)
    assert R.max() <= np.sqrt(2) * np.sqrt(P.degree + 1) + 1e-9


def test_random_unimodular_determinism():
    a = random_unimodular(50, 7)
    assert a == random_unimodular(50, 7)
    assert a != random_unimodular(50, 8)
    assert mean_square(a) == pytest.approx(51)


def test_config_validation():
    FlattenerConfig()
    for bad in (dict(target_eps=0), dict(max_iters=0), dict(damping=0), dict(damping=1.5),
                dict(method="nope"), dict(oversample=1)):
        with pytest.raises(ValueError):
            FlattenerConfig(**bad)


def test_flatten_degree_zero():
    P, trace = flatten(make_unimodular([1j]))
    assert trace.converged and trace.iterations == 1 and trace.final_eps == 0
    assert P == make_unimodular([1j])


def test_flatten_already_flat_input_takes_one_iteration():
    P0, t0 = flatten(quadratic_phase(64), FlattenerConfig(target_eps=0.3))
    assert t0.converged
    P, trace = flatten(P0, FlattenerConfig(target_eps=0.3))
    assert trace.converged and trace.iterations == 1
    assert P == P0


def test_flatten_respects_max_iters_and_reports():
    P, trace = flatten(random_unimodular(200, 1), FlattenerConfig(max_iters=5))
    assert trace.iterations == 5 and not trace.converged
    assert len(trace.eps_history) == 5
    assert np.max(np.abs(np.abs(P.coeffs) - 1)) <= 1e-12
    assert flatness_report(P).eps == pytest.approx(trace.final_eps)


def test_plain_projection_history_is_certified_flatness():
    P0 = random_unimodular(60, 4)
    cfg = FlattenerConfig(method="ap", damping=1.0, max_iters=6, target_eps=1e-3)
    _, trace = flatten(P0, cfg)
    # replay the undamped iteration independently and certify each iterate
    N, M = 61, 16 * 64
    a = P0.coeffs
    expected = [flatness_report(make_unimodular(a)).eps]
    for _ in range(5):
        v = grid_values(a, M)
        v = np.sqrt(N) * v / np.abs(v)
        c = np.fft.fft(v)[:N] / M
        a = np.exp(1j * np.angle(c))
        expected.append(flatness_report(make_unimodular(a)).eps)
    np.testing.assert_allclose(trace.eps_history, expected, rtol=1e-9)
    assert trace.stages == ["start"] + ["ap"] * 5


def test_flatten_is_deterministic():
    cfg = FlattenerConfig(max_iters=80, seed=3)
    P1, t1 = flatten(random_unimodular(100, 2), cfg)
    P2, t2 = flatten(random_unimodular(100, 2), cfg)
    assert P1 == P2 and t1.eps_history == t2.eps_history


def test_flatten_reaches_moderate_target():
    P, trace = flatten(quadratic_phase(128), FlattenerConfig(target_eps=0.2))
    assert trace.converged
    assert flatness_report(P).eps <= 0.2


def test_trace_csv():
    t = FlattenerTrace()
    t.record(0.5, "start")
    t.record(0.25, "ap")
    assert t.to_csv() == "iter,eps,stage\n1,0.5,start\n2,0.25,ap\n"
    assert t.final_eps == 0.25
    assert np.isnan(FlattenerTrace().final_eps)


def test_flat_sweep_single_and_ordering():
    out = flat_sweep([63], FlattenerConfig(max_iters=3))
    assert len(out) == 1 and out[0][0] == 63 and out[0][1].degree == 63
    with pytest.raises(ValueError):
        flat_sweep([63, 63])
    with pytest.raises(ValueError):
        flat_sweep([63], kind="chirp")


def test_flat_sweep_workers_do_not_change_results():
    cfg = FlattenerConfig(max_iters=30)
    a = flat_sweep([31, 47], cfg, workers=1)
    b = flat_sweep([31, 47], cfg, workers=2)
    for (n1, P1, t1), (n2, P2, t2) in zip(a, b):
        assert n1 == n2 and P1 == P2 and t1.eps_history == t2.eps_history
