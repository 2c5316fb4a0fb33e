# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest
from scipy.optimize import minimize
from hypothesis import given, settings, strategies as st

from .. import security
from ..security import OptimizerConfig
from ..stats import ConditionalStats
from ..quantum import ideal_stats, SourceSpec
from ..channel import (
    mdiqkd_stats, bb84_stats, MdiChannelParams, Bb84ChannelParams,
    loss_db_to_eta, channel_stats,
)
from ..optimizer import EpsilonSearch, ObjectiveCoefficients
from ..helpers import (
    ValidationError, NoClicksError, InfeasibleStatsError, SymmetryError,
    DegenerateBasisError,
)
from ..attack import true_coefficients

HALF = 1 / math.sqrt(2)
FEAS_TOL = 1e-9
# Search effort may move the maximum by rounding of the polishing steps
EFFORT_TOL = 1e-7
BOX2 = OptimizerConfig(c_max=2.0)


def ideal():
    return mdiqkd_stats(MdiChannelParams(eta=1, d=0))


def collapse():
    return ideal_stats(SourceSpec.collapse())


def table(**entries):
    '''A 4x4 table from keyword arguments like p00=0.5, all others 0'''
    p = np.zeros((4, 4))
    for key, value in entries.items():
        p[int(key[1]), int(key[2])] = value
    return ConditionalStats(p)


def symmetric_table(e_b, e_b_prime, scale=0.5):
    p = np.full((4, 4), scale / 2)
    p[0, 0] = p[1, 1] = scale * (1 - e_b)
    p[0, 1] = p[1, 0] = scale * e_b
    p[3, 2] = scale * e_b_prime
    return ConditionalStats(p)


def reference_f(c30, c31, cp20, cp21, p):
    '''Plain transcription of the four-case objective on a raw table'''
    total = p[0, 0] + p[1, 1] + p[0, 1] + p[1, 0]
    P, Q = c30 * cp20, c31 * cp21
    base = (math.sqrt(p[3, 2]) + math.sqrt(p[0, 1]) * c30 * cp21
            + math.sqrt(p[1, 0]) * c31 * cp20)
    if P == 0 and Q == 0:
        return 1 - (p[0, 1] + p[1, 0]) / total
    t1 = t2 = math.inf
    if P != 0:
        t1 = (base + math.sqrt(p[1, 1]) * abs(P - Q)) ** 2 / (
            2 * total * P ** 2)
    if Q != 0:
        t2 = (base + math.sqrt(p[0, 0]) * abs(P - Q)) ** 2 / (
            2 * total * Q ** 2)
    return min(t1, t2)


def pair_rows(p):
    '''Rows (p, a, b) of the two coefficient pairs on a normalized table'''
    return (
        ((p[3, 0], p[0, 0], p[1, 0]), (p[3, 1], p[0, 1], p[1, 1])),
        ((p[0, 2], p[0, 0], p[0, 1]), (p[1, 2], p[1, 0], p[1, 1])),
    )


def feasible_grid(rows, x, y, tol=FEAS_TOL):
    mask = np.ones(np.broadcast(x, y).shape, dtype=bool)
    for value, a, b in rows:
        middle = value - a * x ** 2 - b * y ** 2
        mask &= np.abs(middle) <= 2 * math.sqrt(a * b) * x * y + tol
    return mask


def brute_force(stats, c_max=2.0, points=401, zooms=3):
    '''
    Exhaustive maximization on a grid over [0, c_max]^4, followed by local
    zoom grids around the best point. Independent of the angle search.
    '''
    p = np.array(stats.p1)
    p = p / (p[0, 0] + p[1, 1] + p[0, 1] + p[1, 0])
    rows_c, rows_cp = pair_rows(p)

    def best_of(first, second):
        best, where = -np.inf, None
        for start in range(0, len(first), 256):
            a = first[start:start + 256, None, :]
            b = second[None, :, :]
            values = ObjectiveCoefficients.from_table(p)(
                a[..., 0], a[..., 1], b[..., 0], b[..., 1])
            index = np.unravel_index(np.argmax(values), values.shape)
            if values[index] > best:
                best = values[index]
                where = np.concatenate(
                    [first[start + index[0]], second[index[1]]])
        return min(best, 1.0), where

    def feasible_points(rows, lo_x, hi_x, lo_y, hi_y, n):
        xs = np.linspace(max(lo_x, 0), min(hi_x, c_max), n)
        ys = np.linspace(max(lo_y, 0), min(hi_y, c_max), n)
        x, y = np.meshgrid(xs, ys, indexing='ij')
        mask = feasible_grid(rows, x, y)
        return np.column_stack([x[mask], y[mask]])

    first = feasible_points(rows_c, 0, c_max, 0, c_max, points)
    second = feasible_points(rows_cp, 0, c_max, 0, c_max, points)
    assert len(first) and len(second), 'grid misses the feasible set'
    best, where = best_of(first, second)
    width = c_max / (points - 1)
    for _ in range(zooms):
        span = 3 * width
        first = feasible_points(rows_c, where[0] - span, where[0] + span,
                                where[1] - span, where[1] + span, 41)
        second = feasible_points(rows_cp, where[2] - span, where[2] + span,
                                 where[3] - span, where[3] + span, 41)
        if len(first) and len(second):
            local, local_where = best_of(first, second)
            if local > best:
                best, where = local, local_where
        width = 2 * span / 40
    return best, where


def test_binary_entropy():
    assert security.binary_entropy(0) == 0
    assert security.binary_entropy(1) == 0
    assert security.binary_entropy(0.5) == pytest.approx(1, abs=1e-15)
    assert security.binary_entropy(0.11) == pytest.approx(0.499916, abs=1e-6)
    with pytest.raises(ValidationError):
        security.binary_entropy(1.1)


def test_bit_error_rate():
    assert security.bit_error_rate(ideal()) == 0
    noisy = table(p00=0.45, p11=0.45, p01=0.05, p10=0.05)
    assert security.bit_error_rate(noisy) == pytest.approx(0.1)
    flat = table(p00=0.2, p11=0.2, p01=0.2, p10=0.2)
    assert security.bit_error_rate(flat) == 0.5
    with pytest.raises(NoClicksError):
        security.bit_error_rate(table())


def test_f_objective_examples():
    assert security.f_objective(HALF, HALF, HALF, HALF, ideal()) == 0
    noisy = symmetric_table(0.05, 0.03)
    assert security.f_objective(0, 0, 0, 0, noisy) == pytest.approx(0.95)
    assert security.f_objective(0, 1, 1, 0, collapse()) == 1


def test_f_objective_matches_transcription():
    """
    The vectorized objective equals a scalar transcription of the four
    cases, including points on the case boundaries
    """
    rng = np.random.default_rng(11)
    stats = bb84_stats(Bb84ChannelParams(eta=0.2, p_d=1e-3, a=4, c=7))
    p = stats.p1
    points = [tuple(rng.uniform(0, 2, size=4)) for _ in range(200)]
    points += [(0, 1.2, 0.3, 0.8), (0.7, 0, 0.5, 0.4), (0, 0, 0.5, 0.5),
               (0.6, 0.6, 0, 0.9)]
    for point in points:
        assert security.f_objective(*point, stats) == pytest.approx(
            reference_f(*point, p), rel=1e-12, abs=1e-15)


@settings(derandomize=True, max_examples=100)
@given(
    st.floats(min_value=0, max_value=0.5),
    st.floats(min_value=0, max_value=0.5),
    st.floats(min_value=1e-3, max_value=1),
    st.lists(st.one_of(st.just(0.0), st.floats(min_value=1e-3, max_value=3)),
             min_size=4, max_size=4),
)
def test_symmetric_objective_consistent(e_b, e_b_prime, scale, point):
    """
    On symmetric statistics the general objective reduces to the simplified
    one, for any common scale of the table
    """
    stats = symmetric_table(e_b, e_b_prime, scale=scale)
    general = security.f_objective(*point, stats)
    simple = security.f_objective_symmetric(*point, e_b, e_b_prime)
    assert general == pytest.approx(simple, rel=1e-9, abs=1e-12)


def test_constraints_residuals():
    slacks = security.constraints_residuals(HALF, HALF, HALF, HALF, ideal())
    for pair in slacks:
        for value in pair:
            assert value == pytest.approx(0, abs=1e-15)
    slacks = security.constraints_residuals(1, 1, 1, 1, ideal())
    assert slacks[0][0] == pytest.approx(-0.25)
    quarter = ConditionalStats(np.full((4, 4), 0.25))
    assert security.is_feasible((HALF, HALF, HALF, HALF), quarter)
    assert not security.is_feasible((1, 1, 1, 1), ideal())


def test_phase_error_bound():
    assert security.phase_error_bound(0, 0) == 0
    assert security.phase_error_bound(0, 1) == 0.5
    assert security.phase_error_bound(0.05, 0.1) == pytest.approx(0.15)


@settings(derandomize=True)
@given(st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0, 2))
def test_phase_error_bound_monotone(e_b, extra, epsilon):
    low = security.phase_error_bound(e_b, epsilon)
    assert low <= 0.5
    assert security.phase_error_bound(min(e_b + extra, 0.5), epsilon) >= low
    assert security.phase_error_bound(e_b, epsilon + extra) >= low


def test_epsilon_ideal():
    """
    Lossless honest statistics pin every coefficient to 1/sqrt(2) and leave
    no deviation
    """
    epsilon, argmax, boundary_hit = security.epsilon_max(ideal())
    assert epsilon <= 1e-6
    assert not boundary_hit
    for value in argmax:
        assert value == pytest.approx(HALF, abs=1e-3)


def test_epsilon_collapse():
    """
    The collapse attack has perfect matched statistics, the mismatched ones
    give it away
    """
    search = security.epsilon_max(collapse())
    assert search.epsilon == pytest.approx(1, abs=1e-3)
    c30, c31, cp20, cp21 = search.argmax
    assert c30 == pytest.approx(0, abs=1e-3)
    assert cp21 == pytest.approx(0, abs=1e-3)
    result = security.key_rate(collapse())
    assert result.rate_per_sifted_bit == 0
    assert result.rate_per_pulse == 0
    assert result.e_p == 0.5


def test_key_rate_ideal():
    result = security.key_rate(ideal())
    assert result.e_b == 0
    assert result.epsilon <= 1e-6
    assert result.e_p <= 1e-6
    assert result.rate_per_sifted_bit >= 1 - 1e-5
    assert result.rate_per_pulse == pytest.approx(0.25, abs=1e-5)
    assert result.to_dict()['argmax'] == list(result.argmax)
    assert 'diagnostics' in result.to_dict(diagnostics=True)


def test_rate_exactly_one_without_errors():
    search = EpsilonSearch(0.0, (HALF,) * 4, False, 1)
    result = security.result_from_search(0.0, search, 0.25)
    assert result.rate_per_sifted_bit == 1
    assert result.rate_per_pulse == 0.25


def test_negative_rate_clamped():
    search = EpsilonSearch(0.3, (1.0,) * 4, False, 1)
    result = security.result_from_search(0.2, search, 0.1)
    assert result.rate_per_sifted_bit == 0
    assert result.raw_rate_per_sifted_bit < 0
    assert result.reference_rate_per_pulse == 0


def test_key_rate_below_reference():
    """
    At 3 dB per arm the rate stays positive but below the rate for trusted
    sources
    """
    stats = mdiqkd_stats(MdiChannelParams(eta=loss_db_to_eta(3), d=1e-5))
    result = security.key_rate(stats)
    assert result.rate_per_pulse > 0
    assert result.rate_per_pulse < result.reference_rate_per_pulse
    assert security.reference_rate(stats) > result.rate_per_sifted_bit


def test_infeasible_statistics():
    stats = table(p00=1e-6, p11=1e-6, p30=0.5, p31=0.5, p02=0.5, p12=0.5)
    with pytest.raises(InfeasibleStatsError):
        security.epsilon_max(stats)


def test_no_clicks():
    with pytest.raises(NoClicksError):
        security.key_rate(table(p30=0.1, p31=0.1, p02=0.1, p12=0.1))


def test_invalid_statistics():
    bad = np.array(ideal().p1)
    bad[3, 2] = np.nan
    with pytest.raises(ValidationError):
        security.key_rate(ConditionalStats(bad))


def test_brute_force_agreement():
    """
    The maximum agrees with an exhaustive grid over [0, 2]^4 and no feasible
    grid point exceeds it
    """
    stats = mdiqkd_stats(MdiChannelParams(eta=0.1, d=1e-5))
    epsilon = security.epsilon_max(stats, BOX2).epsilon
    best, _ = brute_force(stats)
    assert best <= epsilon + 1e-6
    assert best == pytest.approx(epsilon, abs=1e-3)


@pytest.mark.parametrize('params', [
    MdiChannelParams(eta=0.3, d=1e-3),
    MdiChannelParams(eta=0.02, d=1e-5),
    Bb84ChannelParams(eta=0.5, p_d=1e-3, a=3, b=3, c=3),
    Bb84ChannelParams(eta=0.1, p_d=1e-4, a=6, b=0, c=2),
    Bb84ChannelParams(eta=0.1, p_d=1e-4, a=9, b=9, c=9, mode='states'),
])
def test_brute_force_tables(params):
    stats = channel_stats(params)
    epsilon = security.epsilon_max(stats, BOX2).epsilon
    best, _ = brute_force(stats, points=301)
    assert best <= epsilon + 1e-6
    assert best == pytest.approx(epsilon, abs=1e-3)


def random_source_table(seed, c_max=1.8, noise=0.05):
    '''
    Table of four random states per party whose expansion coefficients lie
    in the brute-force box, mixed with a measurement unit that announces
    z=1 at random with probability 1/4
    '''
    rng = np.random.default_rng(seed)
    while True:
        sources = SourceSpec.random(rng)
        try:
            coefficients, _ = true_coefficients(sources)
        except DegenerateBasisError:
            continue
        if max(coefficients) <= c_max:
            break
    p = (1 - noise) * np.array(ideal_stats(sources).p1) + noise / 4
    return ConditionalStats(p)


@pytest.mark.parametrize('seed', range(10))
def test_brute_force_random_sources(seed):
    """
    Tables of random states agree with the exhaustive grid as well
    """
    stats = random_source_table(seed)
    epsilon = security.epsilon_max(stats, BOX2).epsilon
    best, _ = brute_force(stats)
    assert best <= epsilon + 1e-6
    assert best == pytest.approx(epsilon, abs=1e-3)


def test_random_feasible_points():
    """
    Spot check with 1000 random feasible points: none beats the maximum
    """
    stats = bb84_stats(Bb84ChannelParams(eta=0.3, p_d=1e-3, a=5, b=5, c=5))
    epsilon = security.epsilon_max(stats).epsilon
    p = np.array(stats.p1)
    p = p / (p[0, 0] + p[1, 1] + p[0, 1] + p[1, 0])
    rows_c, rows_cp = pair_rows(p)
    grid = np.linspace(0, 3, 601)
    x, y = np.meshgrid(grid, grid, indexing='ij')
    mask = feasible_grid(rows_c, x, y)
    first = np.column_stack((x[mask], y[mask]))
    mask = feasible_grid(rows_cp, x, y)
    second = np.column_stack((x[mask], y[mask]))
    rng = np.random.default_rng(5)
    picks = zip(rng.integers(len(first), size=1000),
                rng.integers(len(second), size=1000))
    for i, j in picks:
        point = (*first[i], *second[j])
        assert security.is_feasible(point, stats)
        value = min(security.f_objective(*point, stats), 1.0)
        assert value <= epsilon + 1e-6


def test_symmetric_variant_ideal():
    assert security.epsilon_max_symmetric(ideal()) <= 1e-6
    with pytest.raises(SymmetryError):
        security.epsilon_max_symmetric(collapse())
    result = security.key_rate(ideal(), symmetric=True)
    assert result.rate_per_sifted_bit >= 1 - 1e-5


def test_symmetric_half_error_clamped():
    stats = symmetric_table(0.5, 0.5)
    assert 0 <= security.epsilon_max_symmetric(stats) <= 1


def test_symmetric_cross_check():
    """
    On 50 symmetric noisy tables the simplified and the general search agree
    """
    rng = np.random.default_rng(1234)
    cfg = OptimizerConfig(multistarts=16)
    for _ in range(50):
        e_b = rng.uniform(0, 0.1)
        e_b_prime = rng.uniform(0, 0.1)
        stats = symmetric_table(e_b, e_b_prime, scale=rng.uniform(0.01, 0.5))
        general = security.epsilon_max(stats, cfg).epsilon
        simple = security.epsilon_max_symmetric(stats, cfg)
        assert general == pytest.approx(simple, abs=1e-3)


def test_symmetric_noisy_example():
    stats = symmetric_table(0.02, 0.02)
    assert security.epsilon_max(stats).epsilon == pytest.approx(
        security.epsilon_max_symmetric(stats), abs=1e-3)


def test_search_effort_monotone():
    """
    A larger box or a denser grid never lowers the maximum beyond the
    rounding of the search
    """
    stats = bb84_stats(Bb84ChannelParams(eta=0.2, p_d=1e-4, a=3, b=3, c=3))
    base = security.epsilon_max(stats).epsilon
    wider = security.epsilon_max(stats, OptimizerConfig(c_max=20)).epsilon
    denser = security.epsilon_max(
        stats, OptimizerConfig(coarse_grid=81)).epsilon
    assert wider >= base - EFFORT_TOL
    assert denser >= base - EFFORT_TOL


def test_scale_invariance():
    stats = bb84_stats(Bb84ChannelParams(eta=0.2, p_d=1e-4, a=3, b=3, c=3))
    assert security.epsilon_max(stats.scaled(0.5)).epsilon == pytest.approx(
        security.epsilon_max(stats).epsilon, abs=1e-7)


def test_deterministic():
    stats = mdiqkd_stats(MdiChannelParams(eta=0.05, d=1e-5))
    first = security.epsilon_max(stats)
    second = security.epsilon_max(stats)
    assert first.epsilon == second.epsilon
    assert first.argmax == second.argmax
    assert first.history == second.history


def test_local_solver_never_exceeds():
    """
    A local constrained solver started from random points never finds a
    feasible value above the maximum
    """
    stats = bb84_stats(Bb84ChannelParams(eta=0.3, p_d=1e-3, a=4, b=4, c=4))
    epsilon = security.epsilon_max(stats).epsilon
    p = np.array(stats.p1)
    p = p / (p[0, 0] + p[1, 1] + p[0, 1] + p[1, 0])
    rows_c, rows_cp = pair_rows(p)

    def slacks(point):
        result = []
        for rows, (x, y) in ((rows_c, point[:2]), (rows_cp, point[2:])):
            for value, a, b in rows:
                cross = 2 * math.sqrt(a * b) * x * y
                middle = value - a * x ** 2 - b * y ** 2
                result += [cross - middle, cross + middle]
        return np.array(result)

    rng = np.random.default_rng(17)
    checked = 0
    for _ in range(20):
        start = rng.uniform(0.3, 1.2, size=4)
        found = minimize(
            lambda point: -security.f_objective(*point, stats), start,
            method='SLSQP', bounds=[(0, 10)] * 4,
            constraints=[{'type': 'ineq', 'fun': slacks}],
        )
        if not security.is_feasible(found.x, stats, tol=1e-7):
            continue
        checked += 1
        value = min(security.f_objective(*found.x, stats), 1.0)
        assert value <= epsilon + 1e-4
    assert checked > 0
