#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Exact small-dimension linear algebra on the encoding qubits: states, the
|phi+> projection performed by the measurement unit and the expansion of the
basis-1 states in terms of the (non-orthogonal) basis-0 states.
"""

import math
import cmath
from dataclasses import dataclass

import numpy as np

from .helpers import ValidationError, DegenerateBasisError
from .stats import ConditionalStats

NORM_TOL = 1e-12
GRAM_TOL = 1e-12


@dataclass(frozen=True)
class QubitState:
    '''A pure qubit a0|0> + a1|1>. The global phase carries no meaning, use
    fidelity() to compare states.'''
    a0: complex
    a1: complex

    def __post_init__(self):
        norm = abs(self.a0) ** 2 + abs(self.a1) ** 2
        if abs(norm - 1) > NORM_TOL:
            raise ValidationError(
                'Qubit state is not normalized: |a0|^2+|a1|^2 = {!r}'.format(
                    norm)
            )

    @classmethod
    def from_amplitudes(cls, a0, a1, normalize=False):
        a0, a1 = complex(a0), complex(a1)
        if normalize:
            norm = math.sqrt(abs(a0) ** 2 + abs(a1) ** 2)
            if norm == 0:
                raise ValidationError('Cannot normalize the zero vector')
            a0, a1 = a0 / norm, a1 / norm
        return cls(a0, a1)

    @classmethod
    def from_vector(cls, vector, normalize=False):
        a0, a1 = np.asarray(vector, dtype=complex)
        return cls.from_amplitudes(a0, a1, normalize=normalize)

    @property
    def vector(self):
        return np.array([self.a0, self.a1], dtype=complex)

    def conjugate(self):
        return QubitState(self.a0.conjugate(), self.a1.conjugate())

    def fidelity(self, other):
        return abs(np.vdot(self.vector, other.vector)) ** 2


def ket0():
    return QubitState(1, 0)


def ket1():
    return QubitState(0, 1)


def plus():
    return QubitState(1 / math.sqrt(2), 1 / math.sqrt(2))


def minus():
    return QubitState(1 / math.sqrt(2), -1 / math.sqrt(2))


def _real_state(cos_part, sin_part):
    # Renormalize away rounding of the trigonometric functions
    return QubitState.from_amplitudes(cos_part, sin_part, normalize=True)


@dataclass(frozen=True)
class SourceSpec:
    '''The four encoding states of each party. Index 0/1 is basis 0, index 2/3
    is basis 1.'''
    alice_states: tuple
    bob_states: tuple

    def __post_init__(self):
        problems = []
        for name in ('alice_states', 'bob_states'):
            states = tuple(getattr(self, name))
            object.__setattr__(self, name, states)
            if len(states) != 4:
                problems.append('{} needs four states, got {}'.format(
                    name, len(states)))
            for idx, state in enumerate(states):
                if not isinstance(state, QubitState):
                    problems.append('{}[{}] is not a QubitState'.format(
                        name, idx))
        if problems:
            raise ValidationError(problems)

    @classmethod
    def ideal_bb84(cls):
        states = (ket0(), ket1(), plus(), minus())
        return cls(states, states)

    @classmethod
    def collapse(cls):
        '''Basis 1 silently equals basis 0 on both sides. Matched-basis
        statistics look perfect, but Eve knows every key bit.'''
        states = (ket0(), ket1(), ket0(), ket1())
        return cls(states, states)

    @classmethod
    def misaligned(cls, a=0.0, b=0.0, c=0.0):
        '''Alice's states with encoding misalignments a, b, c (degrees), Bob
        ideal.'''
        a, b, c = (math.radians(angle) for angle in (a, b, c))
        quarter = math.pi / 4
        alice = (
            ket0(),
            _real_state(math.sin(a), math.cos(a)),
            _real_state(math.cos(quarter + b), math.sin(quarter + b)),
            _real_state(math.sin(quarter + c), -math.cos(quarter + c)),
        )
        return cls(alice, (ket0(), ket1(), plus(), minus()))

    @classmethod
    def random(cls, rng):
        '''Four Haar-random qubits per party'''
        def draw():
            vec = rng.normal(size=2) + 1j * rng.normal(size=2)
            return QubitState.from_vector(vec, normalize=True)
        return cls(
            tuple(draw() for _ in range(4)),
            tuple(draw() for _ in range(4)),
        )

    def to_dict(self):
        return {
            name: [
                [[s.a0.real, s.a0.imag], [s.a1.real, s.a1.imag]]
                for s in getattr(self, name)
            ]
            for name in ('alice_states', 'bob_states')
        }

    @classmethod
    def from_dict(cls, data):
        def state(item):
            (r0, i0), (r1, i1) = item
            return QubitState.from_amplitudes(
                complex(r0, i0), complex(r1, i1), normalize=True)
        return cls(
            tuple(state(item) for item in data['alice_states']),
            tuple(state(item) for item in data['bob_states']),
        )


@dataclass(frozen=True)
class ExpansionCoefficients:
    '''target = c0*base0 + c1*exp(i*theta)*base1 up to a global phase'''
    c0: float
    c1: float
    theta: float


def bell_projection_prob(a, b):
    '''|<phi+|a (x) b>|^2 with |phi+> = (|00> + |11>)/sqrt(2). This is the
    lossless probability that an honest measurement unit announces z=1.'''
    for state in (a, b):
        if not isinstance(state, QubitState):
            raise ValidationError('Expected QubitState, got {!r}'.format(
                state))
    overlap = (a.a0 * b.a0 + a.a1 * b.a1) / math.sqrt(2)
    return abs(overlap) ** 2


def measurement_prob(state, measurement):
    '''|<m|phi>|^2, obtained as a |phi+> projection of the state together
    with the complex conjugate of the measurement vector.'''
    return 2 * bell_projection_prob(state, measurement.conjugate())


def expansion_coefficients(target, base0, base1):
    '''
    Express target in the basis (base0, base1), which need not be orthogonal.
    Returns non-negative magnitudes and the relative phase of the second
    component; the global phase is dropped.
    '''
    b0, b1 = base0.vector, base1.vector
    gram = (np.vdot(b0, b0) * np.vdot(b1, b1)).real - abs(np.vdot(b0, b1)) ** 2
    if gram <= GRAM_TOL:
        raise DegenerateBasisError(
            'Expansion basis is degenerate (Gram determinant {:.3g})'.format(
                gram)
        )
    matrix = np.column_stack([b0, b1])
    alpha, beta = np.linalg.solve(matrix, target.vector)
    c0, c1 = abs(alpha), abs(beta)
    if c0 == 0 or c1 == 0:
        theta = 0.0
    else:
        theta = (cmath.phase(beta) - cmath.phase(alpha)) % (2 * math.pi)
    return ExpansionCoefficients(float(c0), float(c1), float(theta))


def reconstruct(coefficients, base0, base1):
    '''Inverse of expansion_coefficients (up to global phase)'''
    vec = (coefficients.c0 * base0.vector
           + coefficients.c1 * cmath.exp(1j * coefficients.theta)
           * base1.vector)
    return QubitState.from_vector(vec, normalize=True)


def ideal_stats(sources):
    '''Table of an honest, lossless measurement unit projecting onto |phi+>'''
    p1 = np.array([
        [bell_projection_prob(a, b) for b in sources.bob_states]
        for a in sources.alice_states
    ])
    return ConditionalStats(p1)
