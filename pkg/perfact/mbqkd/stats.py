#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Conditional announcement statistics p(1|x,y) and their interval-valued
counterpart used for finite-size analysis.
"""

import math
import json
from dataclasses import dataclass

import numpy as np

from .helpers import ValidationError, UsageError, parse_count

# The entries consumed by the phase-error bound
REQUIRED_ENTRIES = (
    (0, 0), (0, 1), (1, 0), (1, 1),
    (3, 2), (3, 0), (3, 1), (0, 2), (1, 2),
)


def _as_table(values, name='p1'):
    '''Read-only 4x4 float array, NaN marks an absent entry'''
    table = np.array(values, dtype=float)
    if table.shape != (4, 4):
        raise ValidationError('{} must be a 4x4 table, got shape {}'.format(
            name, table.shape))
    table.setflags(write=False)
    return table


@dataclass(frozen=True, eq=False)
class ConditionalStats:
    '''
    The table p(1|x,y) indexed by Alice's encoding x and Bob's encoding y;
    p(0|x,y) is implied as 1 - p(1|x,y). Range checks are left to
    validate() so that broken tables can be reported entry by entry.
    '''
    p1: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'p1', _as_table(self.p1))

    def __getitem__(self, key):
        return float(self.p1[key])

    def __eq__(self, other):
        if not isinstance(other, ConditionalStats):
            return NotImplemented
        return np.array_equal(self.p1, other.p1, equal_nan=True)

    @property
    def p0(self):
        return 1 - self.p1

    def has(self, x, y):
        return not math.isnan(self.p1[x, y])

    def scaled(self, factor):
        '''Every entry multiplied by factor. The phase-error bound does not
        change under a common scale factor.'''
        return ConditionalStats(self.p1 * factor)

    def to_dict(self):
        return {
            '{},{}'.format(x, y): float(self.p1[x, y])
            for x in range(4) for y in range(4)
            if self.has(x, y)
        }

    @classmethod
    def from_dict(cls, entries):
        table = np.full((4, 4), np.nan)
        problems = []
        for key, value in entries.items():
            try:
                x, y = (int(part) for part in key.split(','))
            except ValueError:
                problems.append('Malformed entry key {!r}'.format(key))
                continue
            if not (0 <= x < 4 and 0 <= y < 4):
                problems.append('Entry ({},{}) out of range'.format(x, y))
                continue
            try:
                table[x, y] = float(value)
            except (TypeError, ValueError):
                problems.append('Entry ({},{}) is not a number: {!r}'.format(
                    x, y, value))
        if problems:
            raise ValidationError(problems)
        return cls(table)


def validate(stats):
    '''
    Return the list of problems of the given table, empty if it is usable by
    the bound.
    '''
    problems = []
    for x, y in REQUIRED_ENTRIES:
        if not stats.has(x, y):
            problems.append('Missing required entry ({},{})'.format(x, y))
    for x in range(4):
        for y in range(4):
            value = stats.p1[x, y]
            if math.isnan(value):
                continue
            if not 0 <= value <= 1:
                problems.append(
                    'Entry ({},{}) out of range [0,1]: {!r}'.format(
                        x, y, float(value))
                )
    return problems


def ensure_valid(stats):
    problems = validate(stats)
    if problems:
        raise ValidationError(problems)
    return stats


def is_symmetric_case(stats, tol=1e-12):
    '''
    Check the identities under which the simplified bound applies:
    p(1|0,0)=p(1|1,1), p(1|0,1)=p(1|1,0) and all four mismatched entries
    (3,0), (3,1), (0,2), (1,2) equal to (p(1|0,0)+p(1|0,1))/2.
    '''
    p = stats.p1
    half = (p[0, 0] + p[0, 1]) / 2
    checks = [
        p[0, 0] - p[1, 1],
        p[0, 1] - p[1, 0],
        p[3, 0] - half,
        p[3, 1] - half,
        p[0, 2] - half,
        p[1, 2] - half,
    ]
    return all(abs(value) <= tol for value in checks)


def fluctuation_interval(p_hat, n, k_sigma=5.0):
    '''
    Normal approximation interval p_hat -/+ k_sigma*sqrt(p_hat(1-p_hat)/n),
    clamped to [0, 1]. n may be float('inf'), which returns the point.
    '''
    if not 0 <= p_hat <= 1:
        raise ValidationError(
            'Probability out of range [0,1]: {!r}'.format(p_hat))
    if not n > 0:
        raise ValidationError(
            'Pulse count must be positive, got {!r}'.format(n))
    if math.isinf(n):
        return (p_hat, p_hat)
    delta = k_sigma * math.sqrt(p_hat * (1 - p_hat) / n)
    return (max(p_hat - delta, 0.0), min(p_hat + delta, 1.0))


@dataclass(frozen=True, eq=False)
class StatsIntervals:
    '''Entry-wise lower and upper bounds on p(1|x,y)'''
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _as_table(self.lo, 'lo')
        hi = _as_table(self.hi, 'hi')
        object.__setattr__(self, 'lo', lo)
        object.__setattr__(self, 'hi', hi)
        problems = []
        for x in range(4):
            for y in range(4):
                a, b = lo[x, y], hi[x, y]
                if math.isnan(a) != math.isnan(b):
                    problems.append(
                        'Entry ({},{}) present in only one bound'.format(x, y))
                elif not math.isnan(a) and not 0 <= a <= b <= 1:
                    problems.append(
                        'Entry ({},{}) violates 0 <= lo <= hi <= 1: '
                        '[{!r}, {!r}]'.format(x, y, float(a), float(b))
                    )
        if problems:
            raise ValidationError(problems)

    @classmethod
    def point(cls, stats):
        return cls(stats.p1, stats.p1)

    @classmethod
    def widened(cls, stats, n, k_sigma=5.0):
        '''fluctuation_interval applied to every present entry'''
        lo = np.full((4, 4), np.nan)
        hi = np.full((4, 4), np.nan)
        for x in range(4):
            for y in range(4):
                if stats.has(x, y):
                    lo[x, y], hi[x, y] = fluctuation_interval(
                        stats[x, y], n, k_sigma)
        return cls(lo, hi)

    @classmethod
    def padded(cls, stats, delta):
        '''Every present entry widened by an absolute amount'''
        lo = np.clip(stats.p1 - delta, 0, 1)
        hi = np.clip(stats.p1 + delta, 0, 1)
        return cls(lo, hi)

    def contains(self, stats, tol=0.0):
        for x, y in REQUIRED_ENTRIES:
            value = stats.p1[x, y]
            if math.isnan(value):
                return False
            if not (self.lo[x, y] - tol <= value <= self.hi[x, y] + tol):
                return False
        return True

    def includes(self, other, tol=0.0):
        '''Whether the box "other" lies inside this one'''
        return all(
            self.lo[key] - tol <= other.lo[key]
            and other.hi[key] <= self.hi[key] + tol
            for key in REQUIRED_ENTRIES
        )


def read_stats(path):
    '''
    Read a statistics file. Returns the table and the optional pulse count,
    which is None if the file does not give one.
    '''
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ValidationError('{}: not valid JSON ({})'.format(path, exc))
    except OSError as exc:
        raise UsageError('Unable to read {}: {}'.format(path, exc.strerror))
    if not isinstance(data, dict) or not isinstance(data.get('p1'), dict):
        raise ValidationError(
            '{}: expected a JSON object with a "p1" object'.format(path))
    stats = ensure_valid(ConditionalStats.from_dict(data['p1']))
    n_pulses = data.get('n_pulses')
    if n_pulses is not None:
        try:
            n_pulses = parse_count(n_pulses)
        except (TypeError, ValueError, UsageError):
            raise ValidationError(
                '{}: invalid n_pulses {!r}'.format(path, n_pulses))
    return stats, n_pulses


def dump_stats(stats, n_pulses=None, **extra):
    '''The statistics file contents as a string. Additional keys are stored
    as they are and ignored when reading.'''
    data = {'p1': stats.to_dict()}
    if n_pulses is not None:
        data['n_pulses'] = 'inf' if math.isinf(n_pulses) else int(n_pulses)
    data.update(extra)
    return json.dumps(data, indent=2) + '\n'


def write_stats(stats, path, n_pulses=None, **extra):
    with open(path, 'w') as f:
        f.write(dump_stats(stats, n_pulses, **extra))
