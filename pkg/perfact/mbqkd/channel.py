#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Click-probability models that generate ConditionalStats: MDIQKD with four
single-photon detectors and BB84 with loss, dark counts and encoding
misalignment.
"""

import math
import dataclasses
from dataclasses import dataclass

import numpy as np

from .helpers import ValidationError
from .stats import ConditionalStats
from .quantum import SourceSpec, measurement_prob

BB84_MODES = ('formula', 'states')


def _check_probability(problems, name, value, upper_open=False):
    if not isinstance(value, (int, float)) or math.isnan(value):
        problems.append('{} must be a number, got {!r}'.format(name, value))
    elif upper_open and not 0 <= value < 1:
        problems.append('{} must lie in [0, 1), got {!r}'.format(name, value))
    elif not upper_open and not 0 <= value <= 1:
        problems.append('{} must lie in [0, 1], got {!r}'.format(name, value))


@dataclass(frozen=True)
class MdiChannelParams:
    '''Transmission efficiency per arm and dark-count probability per
    detector and pulse'''
    eta: float = 1.0
    d: float = 1e-5

    def __post_init__(self):
        problems = []
        _check_probability(problems, 'eta', self.eta)
        _check_probability(problems, 'd', self.d, upper_open=True)
        if problems:
            raise ValidationError(problems)

    protocol = 'mdiqkd'


@dataclass(frozen=True)
class Bb84ChannelParams:
    '''
    Channel plus detector efficiency, dark-count probability and Alice's
    encoding misalignments in degrees. mode "formula" evaluates the closed
    expressions of the misalignment model, mode "states" derives the full
    table from the misaligned states.
    '''
    eta: float = 1.0
    p_d: float = 1e-5
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    mode: str = 'formula'

    def __post_init__(self):
        problems = []
        _check_probability(problems, 'eta', self.eta)
        _check_probability(problems, 'p_d', self.p_d, upper_open=True)
        for name in ('a', 'b', 'c'):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                problems.append('Angle {} must be finite, got {!r}'.format(
                    name, value))
        if self.mode not in BB84_MODES:
            problems.append('mode must be one of {}, got {!r}'.format(
                BB84_MODES, self.mode))
        if problems:
            raise ValidationError(problems)

    protocol = 'bb84'


def loss_db_to_eta(loss_db):
    if loss_db < 0:
        raise ValidationError(
            'Loss must be non-negative, got {!r} dB'.format(loss_db))
    return 10 ** (-loss_db / 10)


def mdiqkd_stats(params):
    '''
    The measurement unit announces 1 if exactly the two detectors belonging
    to |phi+> click. Basis-0 and basis-1 matched pairs share the "correct"
    and "wrong" probabilities, mismatched pairs get their average.
    '''
    eta, d = params.eta, params.d
    loss = 1 - eta
    wrong = 2 * loss ** 2 * d ** 2 * (1 - d) ** 2 \
        + 2 * eta * loss * d * (1 - d) ** 2
    correct = eta ** 2 * (1 - d) ** 2 / 2 + wrong
    mismatched = (correct + wrong) / 2

    table = np.full((4, 4), mismatched)
    for first, second in ((0, 1), (2, 3)):
        table[first, first] = table[second, second] = correct
        table[first, second] = table[second, first] = wrong
    return ConditionalStats(table)


def _click(eta, p_d, t):
    # Detection of the signal or, after loss, a dark count
    return eta * t * (1 - p_d) + (1 - eta) * p_d * (1 - p_d)


def bb84_stats(params):
    eta, p_d = params.eta, params.p_d
    if params.mode == 'states':
        sources = SourceSpec.misaligned(params.a, params.b, params.c)
        t = np.array([
            [measurement_prob(phi, m) for m in sources.bob_states]
            for phi in sources.alice_states
        ])
        return ConditionalStats(_click(eta, p_d, t))

    # Angle b only enters |phi_2>, which none of these entries involve
    a, c = math.radians(params.a), math.radians(params.c)
    quarter_c = math.pi / 4 + c
    t = np.full((4, 4), np.nan)
    t[0, 0] = 1
    t[1, 1] = math.cos(a) ** 2
    t[0, 1] = 0
    t[1, 0] = math.sin(a) ** 2
    t[3, 2] = (math.sin(quarter_c) - math.cos(quarter_c)) ** 2 / 2
    t[3, 0] = math.sin(quarter_c) ** 2
    t[3, 1] = math.cos(quarter_c) ** 2
    t[0, 2] = 1 / 2
    t[1, 2] = (math.sin(a) + math.cos(a)) ** 2 / 2
    return ConditionalStats(_click(eta, p_d, t))


def channel_stats(params):
    '''Dispatch on the parameter type'''
    if isinstance(params, MdiChannelParams):
        return mdiqkd_stats(params)
    if isinstance(params, Bb84ChannelParams):
        return bb84_stats(params)
    raise ValidationError('Unknown channel parameters {!r}'.format(params))


def with_eta(params, eta):
    return dataclasses.replace(params, eta=eta)


def coherent_gains(params, mu):
    '''
    Gain table of a BB84 Poisson source with mean photon number mu. An n-photon
    pulse is detected with efficiency 1-(1-eta)^n, and the Poisson average of
    the affine click model equals the single-photon table at the effective
    efficiency 1-exp(-mu*eta).
    '''
    if not isinstance(params, Bb84ChannelParams):
        raise ValidationError('Coherent gains are modelled for BB84 only')
    if mu < 0:
        raise ValidationError(
            'Mean photon number must be non-negative, got {!r}'.format(mu))
    return bb84_stats(with_eta(params, 1 - math.exp(-mu * params.eta)))


def gain_basis0(stats):
    '''Probability per basis-0 pulse pair of a z=1 announcement'''
    p = stats.p1
    return float((p[0, 0] + p[0, 1] + p[1, 0] + p[1, 1]) / 4)
