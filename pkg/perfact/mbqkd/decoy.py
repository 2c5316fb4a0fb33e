#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Key rates for Poisson sources: infinite decoy (exact single-photon
statistics), three decoy intensities (vacuum + weak + signal) with
finite-size fluctuations, and the interval-valued maximization they need.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .helpers import ValidationError, UsageError, NoClicksError, parse_count
from .stats import StatsIntervals, REQUIRED_ENTRIES, ensure_valid
from .channel import (
    MdiChannelParams, Bb84ChannelParams, channel_stats, coherent_gains,
)
from .optimizer import OptimizerConfig, ObjectiveCoefficients, Row, maximize
from .security import key_rate, result_from_search


@dataclass(frozen=True)
class DecoyParams:
    '''
    Signal and weak decoy mean photon numbers, pulses per encoding state and
    the number of standard deviations taken into account.
    '''
    mu: float = 0.5
    nu: float = 0.1
    n_pulses: float = math.inf
    k_sigma: float = 5.0

    def __post_init__(self):
        problems = []
        if not 0 < self.nu < self.mu:
            problems.append(
                'Need 0 < nu < mu, got nu={!r}, mu={!r}'.format(
                    self.nu, self.mu))
        if not self.n_pulses > 0:
            problems.append('n_pulses must be positive or inf, got {!r}'
                            .format(self.n_pulses))
        if not self.k_sigma >= 0:
            problems.append('k_sigma must be non-negative, got {!r}'.format(
                self.k_sigma))
        if problems:
            raise ValidationError(problems)

    @classmethod
    def from_config(cls, config):
        kwargs = {}
        for name, cast in (('mu', float), ('nu', float),
                           ('n_pulses', parse_count), ('k_sigma', float)):
            if config.get(name) is not None:
                try:
                    kwargs[name] = cast(config[name])
                except (TypeError, ValueError, UsageError):
                    raise ValidationError('Invalid {}: {!r}'.format(
                        name, config[name]))
        return cls(**kwargs)


@dataclass(frozen=True)
class DecoyBounds:
    y1_lower: float
    e1_upper: float
    flagged: bool = False


def single_photon_weight(params, mu):
    '''Probability that the source (both sources for MDIQKD) emit exactly
    one photon'''
    if isinstance(params, MdiChannelParams):
        return mu ** 2 * math.exp(-2 * mu)
    return mu * math.exp(-mu)


def infinite_decoy_rate(channel, decoy=None, cfg=None):
    '''
    With infinitely many decoy intensities the single-photon statistics are
    known exactly, so the single-photon table of the channel model goes
    through the full pipeline and the rate is weighted by the single-photon
    emission probability.
    '''
    decoy = decoy or DecoyParams()
    result = key_rate(channel_stats(channel), cfg)
    return result.scaled(single_photon_weight(channel, decoy.mu))


def _interval(value):
    if isinstance(value, (tuple, list)):
        lo, hi = value
        return float(lo), float(hi)
    return float(value), float(value)


def _y1_lower(q0_hi, q_nu_lo, q_mu_hi, mu, nu):
    return mu / (mu * nu - nu ** 2) * (
        q_nu_lo * math.exp(nu)
        - q_mu_hi * math.exp(mu) * nu ** 2 / mu ** 2
        - (mu ** 2 - nu ** 2) / mu ** 2 * q0_hi
    )


def yield_interval(q0, q_nu, q_mu, decoy):
    '''
    Bounds on the single-photon yield from vacuum, weak and signal gains,
    each given as a value or a (lo, hi) interval.
    '''
    q0_lo, q0_hi = _interval(q0)
    q_nu_lo, q_nu_hi = _interval(q_nu)
    _, q_mu_hi = _interval(q_mu)
    lower = _y1_lower(q0_hi, q_nu_lo, q_mu_hi, decoy.mu, decoy.nu)
    upper = (q_nu_hi * math.exp(decoy.nu) - q0_lo) / decoy.nu
    upper = min(max(upper, 0.0), 1.0)
    lower = min(max(lower, 0.0), upper)
    return lower, upper


def three_decoy_bounds(q0, q_nu, q_mu, eq0, eq_nu, decoy):
    '''
    Lower bound on the single-photon yield and upper bound on the
    single-photon error rate from vacuum, weak and signal observations. The
    eq arguments are the error gains (gain times error rate). A yield bound
    that is not positive is clamped to 0 and flagged.
    '''
    q0_lo, q0_hi = _interval(q0)
    q_nu_lo, _ = _interval(q_nu)
    _, q_mu_hi = _interval(q_mu)
    eq0_lo, _ = _interval(eq0)
    _, eq_nu_hi = _interval(eq_nu)
    for name, value in (('q0', q0_lo), ('q_nu', q_nu_lo), ('q_mu', q_mu_hi),
                        ('eq0', eq0_lo), ('eq_nu', eq_nu_hi)):
        if not 0 <= value <= 1:
            raise ValidationError(
                'Observed {} out of range [0,1]: {!r}'.format(name, value))
    mu, nu = decoy.mu, decoy.nu
    y1 = _y1_lower(q0_hi, q_nu_lo, q_mu_hi, mu, nu)
    if not y1 > 0:
        return DecoyBounds(0.0, 0.5, flagged=True)
    e1 = (eq_nu_hi * math.exp(nu) - eq0_lo) / (y1 * nu)
    return DecoyBounds(y1, min(max(e1, 0.0), 0.5))


def interval_rows(lo, hi, scale):
    '''Constraint rows with interval-valued coefficients, divided by scale'''
    def row(p, a, b):
        return Row(lo[p] / scale, hi[p] / scale, lo[a] / scale,
                   hi[a] / scale, lo[b] / scale, hi[b] / scale)
    rows_c = (row((3, 0), (0, 0), (1, 0)), row((3, 1), (0, 1), (1, 1)))
    rows_cp = (row((0, 2), (0, 0), (0, 1)), row((1, 2), (1, 0), (1, 1)))
    return rows_c, rows_cp


def search_interval(intervals, cfg=None):
    '''
    Maximize over coefficients and over tables inside the box. A row counts
    as satisfiable if some values in the box satisfy it, and the objective
    takes the extremes of its coefficients that make it largest, so the
    result dominates the maximum of every table in the box.
    '''
    cfg = cfg or OptimizerConfig()
    lo, hi = intervals.lo, intervals.hi
    missing = [key for key in REQUIRED_ENTRIES if math.isnan(lo[key])]
    if missing:
        raise ValidationError([
            'Missing required entry ({},{})'.format(*key) for key in missing])
    basis0 = ((0, 0), (1, 1), (0, 1), (1, 0))
    total_lo = sum(lo[key] for key in basis0)
    total_hi = sum(hi[key] for key in basis0)
    if not total_hi > 0:
        raise NoClicksError(
            'No basis-0 announcements, the key rate is undefined')
    scale = total_lo if total_lo > 0 else total_hi
    rows_c, rows_cp = interval_rows(lo, hi, scale)
    objective = ObjectiveCoefficients.from_intervals(lo, hi, scale)
    return maximize(objective, rows_c, rows_cp, cfg)


def epsilon_max_interval(intervals, cfg=None):
    return search_interval(intervals, cfg).epsilon


def observed_gains(channel, decoy):
    '''Gain tables of the vacuum, weak and signal intensities'''
    return {
        'vacuum': coherent_gains(channel, 0.0),
        'weak': coherent_gains(channel, decoy.nu),
        'signal': coherent_gains(channel, decoy.mu),
    }


def _basis0_aggregate(intervals):
    '''(gain, error gain) intervals of basis 0, averaged over the four
    basis-0 pairs'''
    lo, hi = intervals.lo, intervals.hi
    gain = (sum(lo[key] for key in ((0, 0), (1, 1), (0, 1), (1, 0))) / 4,
            sum(hi[key] for key in ((0, 0), (1, 1), (0, 1), (1, 0))) / 4)
    errors = ((lo[0, 1] + lo[1, 0]) / 4, (hi[0, 1] + hi[1, 0]) / 4)
    return gain, errors


def three_decoy_rate(channel, decoy=None, cfg=None):
    '''
    BB84 with a coherent source and three intensities. Every observed gain
    is widened by k_sigma standard deviations for n_pulses pulses, the
    single-photon table is bounded entry by entry and its box goes into the
    interval maximization. Yield and error rate of basis 0 come from the
    aggregated basis-0 observations.
    '''
    decoy = decoy or DecoyParams()
    cfg = cfg or OptimizerConfig()
    if not isinstance(channel, Bb84ChannelParams):
        raise ValidationError('Three decoy intensities are modelled for BB84 '
                              'only')
    gains = observed_gains(channel, decoy)
    widened = {
        name: StatsIntervals.widened(
            ensure_valid(table), decoy.n_pulses, decoy.k_sigma)
        for name, table in gains.items()
    }

    lo = np.full((4, 4), np.nan)
    hi = np.full((4, 4), np.nan)
    for key in zip(*np.nonzero(~np.isnan(widened['signal'].lo))):
        lo[key], hi[key] = yield_interval(
            *((widened[name].lo[key], widened[name].hi[key])
              for name in ('vacuum', 'weak', 'signal')),
            decoy=decoy,
        )
    single = StatsIntervals(lo, hi)

    (q0, eq0), (q_nu, eq_nu), (q_mu, _) = (
        _basis0_aggregate(widened[name])
        for name in ('vacuum', 'weak', 'signal')
    )
    bounds = three_decoy_bounds(q0, q_nu, q_mu, eq0, eq_nu, decoy)
    search = search_interval(single, cfg)
    weight = single_photon_weight(channel, decoy.mu)
    result = result_from_search(bounds.e1_upper, search, bounds.y1_lower)
    return replace(result.scaled(weight), boundary_hit=(
        result.boundary_hit or bounds.flagged))
