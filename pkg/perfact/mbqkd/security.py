#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Bit error rate, the deviation epsilon, the phase-error bound and the
resulting key rate for basis 0.
"""

import math
from dataclasses import dataclass, field, replace

from scipy.special import entr

from .helpers import ValidationError, NoClicksError, SymmetryError
from .stats import ensure_valid, is_symmetric_case
from .channel import gain_basis0
from .optimizer import (
    OptimizerConfig, ObjectiveCoefficients, Row, EpsilonSearch, maximize,
)

__all__ = [
    'OptimizerConfig', 'EpsilonSearch', 'SecurityResult', 'binary_entropy',
    'bit_error_rate', 'reference_rate', 'f_objective',
    'f_objective_symmetric', 'symmetric_parameters', 'constraints_residuals',
    'is_feasible', 'constraint_rows', 'epsilon_max', 'search_symmetric',
    'epsilon_max_symmetric', 'phase_error_bound', 'key_rate',
    'result_from_search',
]


def binary_entropy(x):
    '''Shannon entropy in bits, H(0) = H(1) = 0'''
    if not 0 <= x <= 1:
        raise ValidationError(
            'Entropy argument out of range [0,1]: {!r}'.format(x))
    return float((entr(x) + entr(1 - x)) / math.log(2))


def _basis0_clicks(stats):
    p = stats.p1
    return p[0, 0] + p[1, 1] + p[0, 1] + p[1, 0]


def bit_error_rate(stats):
    total = _basis0_clicks(stats)
    if not total > 0:
        raise NoClicksError(
            'No basis-0 announcements, the key rate is undefined')
    return float((stats.p1[0, 1] + stats.p1[1, 0]) / total)


def reference_rate(stats):
    '''Per sifted bit for trusted, perfectly characterized sources'''
    return 1 - 2 * binary_entropy(bit_error_rate(stats))


def f_objective(c30, c31, cp20, cp21, stats):
    '''The four-case objective, with exact zero tests on the products
    C30*C'20 and C31*C'21'''
    return ObjectiveCoefficients.from_table(stats.p1)(c30, c31, cp20, cp21)


def symmetric_parameters(stats):
    '''(e_b, e'_b) with e'_b = p(1|3,2) / (p(1|0,0) + p(1|0,1))'''
    e_b = bit_error_rate(stats)
    p = stats.p1
    return e_b, float(p[3, 2] / (p[0, 0] + p[0, 1]))


def f_objective_symmetric(c30, c31, cp20, cp21, e_b, e_b_prime):
    '''The simplified objective for symmetric statistics'''
    u, v = c30 * cp20, c31 * cp21
    if u == 0 and v == 0:
        return 1 - e_b
    numerator = (
        math.sqrt(e_b_prime)
        + math.sqrt(e_b) * (c30 * cp21 + c31 * cp20)
        + math.sqrt(1 - e_b) * abs(u - v)
    ) ** 2
    return numerator / (4 * max(u, v) ** 2)


def _normalized(stats):
    total = _basis0_clicks(stats)
    if not total > 0:
        raise NoClicksError(
            'No basis-0 announcements, the key rate is undefined')
    return stats.p1 / total, total


def constraint_rows(p):
    '''The rows on (C30, C31) and on (C'20, C'21) for a table p[x, y]'''
    rows_c = (
        Row.point(p[3, 0], p[0, 0], p[1, 0]),
        Row.point(p[3, 1], p[0, 1], p[1, 1]),
    )
    rows_cp = (
        Row.point(p[0, 2], p[0, 0], p[0, 1]),
        Row.point(p[1, 2], p[1, 0], p[1, 1]),
    )
    return rows_c, rows_cp


def constraints_residuals(c30, c31, cp20, cp21, stats):
    '''
    For each of the four rows a pair (lower slack, upper slack) that is
    non-negative iff that side of the row holds.
    '''
    rows_c, rows_cp = constraint_rows(stats.p1)
    return tuple(
        [row.residuals(c30, c31) for row in rows_c]
        + [row.residuals(cp20, cp21) for row in rows_cp]
    )


def is_feasible(point, stats, tol=1e-9):
    '''Feasibility on the normalized table, as used by the search'''
    p, _ = _normalized(stats)
    c30, c31, cp20, cp21 = point
    rows_c, rows_cp = constraint_rows(p)
    slacks = [row.residuals(c30, c31) for row in rows_c] \
        + [row.residuals(cp20, cp21) for row in rows_cp]
    return all(value >= -tol for pair in slacks for value in pair)


def epsilon_max(stats, cfg=None):
    '''
    Maximum of f over all coefficients consistent with the table within the
    box [0, c_max]^4. The returned EpsilonSearch unpacks into
    (epsilon, argmax, boundary_hit).
    '''
    cfg = cfg or OptimizerConfig()
    ensure_valid(stats)
    p, _ = _normalized(stats)
    rows_c, rows_cp = constraint_rows(p)
    return maximize(ObjectiveCoefficients.from_table(p), rows_c, rows_cp, cfg)


def search_symmetric(stats, cfg=None, symmetry_tol=1e-9):
    cfg = cfg or OptimizerConfig()
    ensure_valid(stats)
    if not is_symmetric_case(stats, symmetry_tol):
        raise SymmetryError(
            'Statistics do not satisfy the symmetric identities, use '
            'epsilon_max instead')
    e_b, e_b_prime = symmetric_parameters(stats)
    rows_c = (Row.point(0.5, 1 - e_b, e_b), Row.point(0.5, e_b, 1 - e_b))
    rows_cp = rows_c
    # Rows are normalized by p(1|0,0)+p(1|0,1), half the basis-0 sum
    return maximize(
        ObjectiveCoefficients.symmetric(e_b, e_b_prime), rows_c, rows_cp,
        cfg, tol=2 * cfg.feasibility_tol,
    )


def epsilon_max_symmetric(stats, cfg=None, symmetry_tol=1e-9):
    return search_symmetric(stats, cfg, symmetry_tol).epsilon


def phase_error_bound(e_b, epsilon):
    return min(e_b + epsilon, 0.5)


@dataclass(frozen=True)
class SecurityResult:
    '''Key rate of basis 0 together with the quantities it is built from'''
    e_b: float
    epsilon: float
    e_p: float
    gain: float
    rate_per_sifted_bit: float
    rate_per_pulse: float
    argmax: tuple
    boundary_hit: bool
    raw_rate_per_sifted_bit: float = 0.0
    reference_rate_per_pulse: float = 0.0
    search: EpsilonSearch = field(default=None, compare=False)

    def to_dict(self, diagnostics=False):
        data = {
            'e_b': self.e_b,
            'epsilon': self.epsilon,
            'e_p': self.e_p,
            'gain': self.gain,
            'rate_per_sifted_bit': self.rate_per_sifted_bit,
            'rate_per_pulse': self.rate_per_pulse,
            'argmax': list(self.argmax),
            'boundary_hit': self.boundary_hit,
            'raw_rate_per_sifted_bit': self.raw_rate_per_sifted_bit,
            'reference_rate_per_pulse': self.reference_rate_per_pulse,
        }
        if diagnostics and self.search is not None:
            data['diagnostics'] = self.search.to_dict()
        return data

    def scaled(self, weight):
        '''Per pulse quantities multiplied by a photon-number weight'''
        return replace(
            self,
            gain=self.gain * weight,
            rate_per_pulse=self.rate_per_pulse * weight,
            reference_rate_per_pulse=self.reference_rate_per_pulse * weight,
        )


def result_from_search(e_b, search, gain, e_b_reference=None):
    '''Compose the rates once e_b and the search outcome are known'''
    e_p = phase_error_bound(e_b, search.epsilon)
    raw = 1 - binary_entropy(min(e_b, 1.0)) - binary_entropy(e_p)
    rate = max(raw, 0.0)
    e_ref = e_b if e_b_reference is None else e_b_reference
    reference = max(1 - 2 * binary_entropy(min(e_ref, 1.0)), 0.0)
    return SecurityResult(
        e_b=e_b,
        epsilon=search.epsilon,
        e_p=e_p,
        gain=gain,
        rate_per_sifted_bit=rate,
        rate_per_pulse=gain * rate,
        argmax=search.argmax,
        boundary_hit=search.boundary_hit,
        raw_rate_per_sifted_bit=raw,
        reference_rate_per_pulse=gain * reference,
        search=search,
    )


def key_rate(stats, cfg=None, symmetric=False):
    '''
    The full pipeline on one table. With symmetric=True the simplified
    formula is used, which requires the symmetric identities to hold.
    '''
    cfg = cfg or OptimizerConfig()
    ensure_valid(stats)
    e_b = bit_error_rate(stats)
    if symmetric:
        search = search_symmetric(stats, cfg)
    else:
        search = epsilon_max(stats, cfg)
    return result_from_search(e_b, search, gain_basis0(stats))
