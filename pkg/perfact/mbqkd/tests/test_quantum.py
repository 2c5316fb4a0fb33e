# -*- coding: utf-8 -*-
import math
import cmath
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from .. import quantum
from ..quantum import QubitState, SourceSpec, ket0, ket1, plus, minus
from ..helpers import ValidationError, DegenerateBasisError

angles = st.floats(min_value=0, max_value=2 * math.pi, allow_nan=False)


@st.composite
def qubits(draw):
    '''Normalized qubit from a Bloch angle pair and a global phase'''
    theta = draw(st.floats(min_value=0, max_value=math.pi))
    phi, glob = draw(angles), draw(angles)
    return QubitState.from_amplitudes(
        cmath.exp(1j * glob) * math.cos(theta / 2),
        cmath.exp(1j * (glob + phi)) * math.sin(theta / 2),
        normalize=True,
    )


def test_unnormalized_state():
    """
    States off the unit sphere are refused unless normalization is asked for
    """
    with pytest.raises(ValidationError):
        QubitState(1, 1)
    state = QubitState.from_amplitudes(3, 4j, normalize=True)
    assert state.a0 == pytest.approx(0.6)
    assert state.a1 == pytest.approx(0.8j)
    with pytest.raises(ValidationError):
        QubitState.from_amplitudes(0, 0, normalize=True)


def test_fidelity_ignores_global_phase():
    state = plus()
    rotated = QubitState(cmath.exp(0.3j) * state.a0,
                         cmath.exp(0.3j) * state.a1)
    assert state.fidelity(rotated) == pytest.approx(1)
    assert plus().fidelity(minus()) == pytest.approx(0)


def test_bell_projection_examples():
    """
    The honest announcement probabilities of the BB84 states
    """
    assert quantum.bell_projection_prob(ket0(), ket0()) == pytest.approx(0.5)
    assert quantum.bell_projection_prob(ket0(), ket1()) == 0
    assert quantum.bell_projection_prob(ket0(), plus()) == pytest.approx(0.25)
    with pytest.raises(ValidationError):
        quantum.bell_projection_prob(ket0(), (1, 0))


@settings(derandomize=True, max_examples=200)
@given(qubits(), qubits())
def test_bell_projection_properties(a, b):
    """
    The probability lies in [0, 1/2] and is invariant under conjugating both
    states
    """
    value = quantum.bell_projection_prob(a, b)
    assert -1e-15 <= value <= 0.5 + 1e-12
    conj = quantum.bell_projection_prob(a.conjugate(), b.conjugate())
    assert conj == pytest.approx(value, abs=1e-14)


@settings(derandomize=True, max_examples=200)
@given(qubits(), qubits())
def test_measurement_prob_is_born_rule(state, measurement):
    """
    The projection formulation agrees with |<m|phi>|^2
    """
    born = abs(np.vdot(measurement.vector, state.vector)) ** 2
    assert quantum.measurement_prob(state, measurement) == pytest.approx(
        born, abs=1e-12)


def test_expansion_examples():
    coeff = quantum.expansion_coefficients(plus(), ket0(), ket1())
    assert coeff.c0 == pytest.approx(1 / math.sqrt(2))
    assert coeff.c1 == pytest.approx(1 / math.sqrt(2))
    assert coeff.theta == pytest.approx(0)

    coeff = quantum.expansion_coefficients(ket0(), ket0(), ket1())
    assert (coeff.c0, coeff.c1, coeff.theta) == (1, 0, 0)

    coeff = quantum.expansion_coefficients(minus(), ket0(), ket1())
    assert coeff.theta == pytest.approx(math.pi)


def test_expansion_degenerate():
    """
    Parallel states, also with a different global phase, cannot span a basis
    """
    with pytest.raises(DegenerateBasisError):
        quantum.expansion_coefficients(plus(), ket0(), ket0())
    with pytest.raises(DegenerateBasisError):
        quantum.expansion_coefficients(
            plus(), ket1(), QubitState(0, 1j))


def test_expansion_reconstruction():
    """
    Expansion followed by reconstruction is the identity on 1000 random
    instances
    """
    rng = np.random.default_rng(20240501)
    checked = 0
    while checked < 1000:
        target, base0, base1 = SourceSpec.random(rng).alice_states[:3]
        try:
            coeff = quantum.expansion_coefficients(target, base0, base1)
        except DegenerateBasisError:
            continue
        assert coeff.c0 >= 0 and coeff.c1 >= 0
        assert 0 <= coeff.theta < 2 * math.pi
        rebuilt = quantum.reconstruct(coeff, base0, base1)
        assert rebuilt.fidelity(target) == pytest.approx(1, abs=1e-10)
        checked += 1


def test_ideal_stats_matched_entries():
    """
    Ideal BB84 sources give 1/2 for matching and 0 for opposite states in
    both bases, checked as exact fractions, and 1/4 across bases
    """
    stats = quantum.ideal_stats(SourceSpec.ideal_bb84())
    matched = {
        (0, 0): Fraction(1, 2), (0, 1): Fraction(0),
        (1, 0): Fraction(0), (1, 1): Fraction(1, 2),
        (2, 2): Fraction(1, 2), (2, 3): Fraction(0),
        (3, 2): Fraction(0), (3, 3): Fraction(1, 2),
    }
    for key, expected in matched.items():
        value = Fraction(stats[key]).limit_denominator(64)
        assert value == expected
        assert stats[key] == pytest.approx(float(expected), abs=1e-15)
    for x, y in ((3, 0), (3, 1), (0, 2), (1, 2), (2, 0), (1, 3)):
        assert stats[x, y] == pytest.approx(0.25, abs=1e-15)
    np.testing.assert_allclose(stats.p0 + stats.p1, 1, rtol=0, atol=1e-15)


def test_ideal_stats_collapse():
    stats = quantum.ideal_stats(SourceSpec.collapse())
    assert stats[0, 2] == pytest.approx(0.5)
    assert stats[3, 0] == 0
    assert stats[3, 2] == 0


def test_misaligned_sources():
    """
    Zero misalignment is the ideal set, other angles keep the states
    normalized
    """
    ideal = SourceSpec.ideal_bb84()
    aligned = SourceSpec.misaligned(0, 0, 0)
    for mine, other in zip(aligned.alice_states, ideal.alice_states):
        assert mine.fidelity(other) == pytest.approx(1)
    tilted = SourceSpec.misaligned(5, 7, 9)
    assert tilted.alice_states[1].fidelity(ket1()) == pytest.approx(
        math.cos(math.radians(5)) ** 2)


def test_source_spec_serialization():
    rng = np.random.default_rng(3)
    sources = SourceSpec.random(rng)
    restored = SourceSpec.from_dict(sources.to_dict())
    for name in ('alice_states', 'bob_states'):
        for mine, other in zip(getattr(sources, name),
                               getattr(restored, name)):
            assert mine.fidelity(other) == pytest.approx(1, abs=1e-14)
    with pytest.raises(ValidationError):
        SourceSpec((ket0(),) * 3, (ket0(),) * 4)
