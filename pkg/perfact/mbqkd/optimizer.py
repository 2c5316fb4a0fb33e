#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Maximization of the deviation objective over expansion coefficients that are
consistent with observed statistics.

The variables split into two independent pairs, (C30, C31) and (C'20, C'21),
each bounded by two constraint rows of the form

    |p - a x^2 - b y^2| <= 2 sqrt(a b) x y.

Writing a pair as r (cos phi, sin phi), a row confines r^2 to
[p / (sqrt(a) cos + sqrt(b) sin)^2, p / (sqrt(a) cos - sqrt(b) sin)^2] at a
fixed angle. The objective does not increase with the product of the two
radii, so at fixed angles the maximum lies at the smallest feasible radii.
This leaves a search over the two angles, restricted to the angle sets on
which each pair is feasible.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .helpers import ValidationError, InfeasibleStatsError

HALF_PI = math.pi / 2
TRIG_SNAP = 1e-15
NEAR_ZERO = 1e-12
REL_SLACK = 1e-12
SCAN_POINTS = 2049
# smallest relative tolerance brentq accepts
BRENT_RTOL = 4 * np.finfo(float).eps
MIN_STEP = 1e-13
MAX_PATTERN_ITERATIONS = 400


@dataclass(frozen=True)
class OptimizerConfig:
    '''Search box and effort of the maximization'''
    c_max: float = 10.0
    coarse_grid: int = 41
    refine_rounds: int = 4
    refine_shrink: float = 0.2
    multistarts: int = 32
    feasibility_tol: float = 1e-9

    def __post_init__(self):
        problems = []
        for name in ('c_max', 'refine_shrink', 'feasibility_tol'):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not value > 0:
                problems.append('{} must be positive, got {!r}'.format(
                    name, value))
        for name in ('coarse_grid', 'refine_rounds', 'multistarts'):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                problems.append('{} must be an integer, got {!r}'.format(
                    name, value))
            elif value < 1:
                problems.append('{} must be positive, got {!r}'.format(
                    name, value))
        if isinstance(self.coarse_grid, int) and self.coarse_grid < 3:
            problems.append('coarse_grid must be at least 3')
        if isinstance(self.refine_shrink, (int, float)) \
                and not self.refine_shrink < 1:
            problems.append('refine_shrink must be below 1')
        if problems:
            raise ValidationError(problems)

    @classmethod
    def from_config(cls, config):
        '''Pick the optimizer keys out of a merged config mapping'''
        kwargs = {}
        for name, cast in (('c_max', float), ('coarse_grid', int),
                           ('refine_rounds', int), ('refine_shrink', float),
                           ('multistarts', int), ('feasibility_tol', float)):
            if config.get(name) is not None:
                try:
                    kwargs[name] = cast(config[name])
                except (TypeError, ValueError):
                    raise ValidationError('Invalid {}: {!r}'.format(
                        name, config[name]))
        return cls(**kwargs)


@dataclass(frozen=True)
class Row:
    '''
    One two-sided constraint |p - a x^2 - b y^2| <= 2 sqrt(ab) x y with each
    of p, a, b known up to an interval.
    '''
    p_lo: float
    p_hi: float
    a_lo: float
    a_hi: float
    b_lo: float
    b_hi: float

    @classmethod
    def point(cls, p, a, b):
        return cls(p, p, a, a, b, b)

    def residuals(self, x, y):
        '''(lower slack, upper slack) at the interval midpoint values'''
        p = (self.p_lo + self.p_hi) / 2
        a = (self.a_lo + self.a_hi) / 2
        b = (self.b_lo + self.b_hi) / 2
        middle = p - a * x ** 2 - b * y ** 2
        cross = 2 * math.sqrt(a * b) * x * y
        return (middle + cross, cross - middle)

    def radius_bounds(self, c, s, tol):
        '''Lower and upper bound on r^2 at the given cos/sin arrays'''
        high = (math.sqrt(self.a_hi) * c + math.sqrt(self.b_hi) * s) ** 2
        d_lo = math.sqrt(self.a_lo) * c - math.sqrt(self.b_hi) * s
        d_hi = math.sqrt(self.a_hi) * c - math.sqrt(self.b_lo) * s
        low = np.where(
            (d_lo <= 0) & (d_hi >= 0), 0.0,
            np.minimum(d_lo ** 2, d_hi ** 2),
        )
        need = max(self.p_lo - tol, 0.0)
        with np.errstate(divide='ignore', invalid='ignore'):
            lower = np.where(
                high > 0, need / high, 0.0 if need == 0 else np.inf)
            upper = np.where(low > 0, (self.p_hi + tol) / low, np.inf)
        return lower, upper

    def zero_crossings(self):
        '''Angles at which the lower side starts to admit any radius'''
        angles = []
        for a, b in ((self.a_lo, self.b_hi), (self.a_hi, self.b_lo)):
            if b > 0:
                angles.append(math.atan(math.sqrt(a / b)))
        return angles


def trig(phi):
    c, s = np.cos(phi), np.sin(phi)
    c = np.where(np.abs(c) < TRIG_SNAP, 0.0, c)
    s = np.where(np.abs(s) < TRIG_SNAP, 0.0, s)
    return c, s


class PairConstraints(object):
    '''
    The feasible set of one coefficient pair in polar form. The angle set is
    kept as a tuple of closed intervals, isolated feasible angles appear as
    intervals of length zero.
    '''

    def __init__(self, rows, tol, c_max):
        self.rows = tuple(rows)
        self.tol = tol
        self.c_max = c_max
        self.intervals = self._find_intervals()

    def bounds(self, phi):
        phi = np.asarray(phi, dtype=float)
        c, s = trig(phi)
        lower = np.zeros_like(phi)
        upper = np.full_like(phi, np.inf)
        for row in self.rows:
            lo, hi = row.radius_bounds(c, s, self.tol)
            lower = np.maximum(lower, lo)
            upper = np.minimum(upper, hi)
        if math.isfinite(self.c_max):
            upper = np.minimum(
                upper, self.c_max ** 2 / np.maximum(c, s) ** 2)
        return lower, upper

    def feasible(self, phi):
        lower, upper = self.bounds(phi)
        return lower <= upper * (1 + REL_SLACK)

    def min_radius(self, phi):
        '''Smallest feasible radius, NaN where the angle is infeasible'''
        lower, upper = self.bounds(phi)
        ok = lower <= upper * (1 + REL_SLACK)
        return np.where(ok, np.sqrt(np.where(ok, lower, 0.0)), np.nan)

    def _gaps(self, phi):
        '''
        Continuous functions whose sign changes mark every point at which an
        upper bound meets a lower bound. 1/(1+r^2) maps infinite bounds to
        zero continuously.
        '''
        phi = np.asarray(phi, dtype=float)
        c, s = trig(phi)
        pairs = [row.radius_bounds(c, s, self.tol) for row in self.rows]
        uppers = [hi for _, hi in pairs]
        if math.isfinite(self.c_max):
            uppers.append(self.c_max ** 2 / np.maximum(c, s) ** 2)
        with np.errstate(divide='ignore', over='ignore'):
            for i, upper in enumerate(uppers):
                for j, (lower, _) in enumerate(pairs):
                    if i != j:
                        yield 1 / (1 + lower) - 1 / (1 + upper)

    def _critical_angles(self):
        grid = np.linspace(0, HALF_PI, SCAN_POINTS)
        critical = [0.0, HALF_PI / 2, HALF_PI]
        for row in self.rows:
            critical.extend(row.zero_crossings())

        gaps = list(self._gaps(grid))
        for index, values in enumerate(gaps):
            critical.extend(grid[values == 0])
            changes = np.nonzero(values[:-1] * values[1:] < 0)[0]
            for k in changes:
                def gap(t, index=index):
                    return float(list(self._gaps(np.array([t])))[index][0])
                critical.append(brentq(
                    gap, grid[k], grid[k + 1], xtol=1e-15, rtol=BRENT_RTOL))
        return grid, critical

    def _find_intervals(self):
        grid, critical = self._critical_angles()
        points = np.unique(np.clip(
            np.concatenate([grid, np.asarray(critical, dtype=float)]),
            0, HALF_PI))
        mask = self.feasible(points)
        intervals = []
        start = None
        for point, ok in zip(points, mask):
            if ok and start is None:
                start = point
            if ok:
                end = point
            elif start is not None:
                intervals.append((float(start), float(end)))
                start = None
        if start is not None:
            intervals.append((float(start), float(end)))
        return tuple(intervals)

    def project(self, phi):
        '''Move every angle to the nearest point of the feasible angle set'''
        phi = np.asarray(phi, dtype=float)
        lo = np.array([interval[0] for interval in self.intervals])
        hi = np.array([interval[1] for interval in self.intervals])
        flat = phi.reshape(-1, 1)
        distance = np.maximum(np.maximum(lo - flat, flat - hi), 0)
        nearest = np.argmin(distance, axis=1)
        result = np.clip(flat[:, 0], lo[nearest], hi[nearest])
        return result.reshape(phi.shape)

    def spread(self, count):
        '''About count angles spread over the feasible set, endpoints
        included'''
        total = sum(hi - lo for lo, hi in self.intervals)
        points = []
        for lo, hi in self.intervals:
            points.extend((lo, hi))
            if total > 0 and hi > lo:
                num = max(2, int(round(count * (hi - lo) / total)))
                points.extend(np.linspace(lo, hi, num))
        return np.unique(np.asarray(points, dtype=float))


@dataclass(frozen=True)
class ObjectiveCoefficients:
    '''
    The coefficients of the deviation objective. Called with coefficient
    values it evaluates the four-case expression with exact zero tests.
    '''
    sqrt_p32: float
    sqrt_p01: float
    sqrt_p10: float
    sqrt_p11: float
    sqrt_p00: float
    denominator: float
    case4: float

    @classmethod
    def from_table(cls, p, scale=1.0):
        '''From an array indexed [x, y], divided by scale'''
        q = np.asarray(p, dtype=float) / scale
        total = q[0, 0] + q[1, 1] + q[0, 1] + q[1, 0]
        return cls(
            sqrt_p32=math.sqrt(q[3, 2]),
            sqrt_p01=math.sqrt(q[0, 1]),
            sqrt_p10=math.sqrt(q[1, 0]),
            sqrt_p11=math.sqrt(q[1, 1]),
            sqrt_p00=math.sqrt(q[0, 0]),
            denominator=2 * total,
            case4=1 - (q[0, 1] + q[1, 0]) / total,
        )

    @classmethod
    def from_intervals(cls, lo, hi, scale=1.0):
        '''
        Upper values in the numerator and lower values in the denominator,
        so that the objective dominates every table inside the box.
        '''
        lo = np.asarray(lo, dtype=float) / scale
        hi = np.asarray(hi, dtype=float) / scale
        errors_lo = lo[0, 1] + lo[1, 0]
        return cls(
            sqrt_p32=math.sqrt(hi[3, 2]),
            sqrt_p01=math.sqrt(hi[0, 1]),
            sqrt_p10=math.sqrt(hi[1, 0]),
            sqrt_p11=math.sqrt(hi[1, 1]),
            sqrt_p00=math.sqrt(hi[0, 0]),
            denominator=2 * (lo[0, 0] + lo[1, 1] + lo[0, 1] + lo[1, 0]),
            case4=1 - errors_lo / (errors_lo + hi[0, 0] + hi[1, 1]),
        )

    @classmethod
    def symmetric(cls, e_b, e_b_prime):
        '''The simplified objective: its max{} denominator is the min of the
        two general terms once p00=p11 and p01=p10.'''
        return cls(
            sqrt_p32=math.sqrt(e_b_prime),
            sqrt_p01=math.sqrt(e_b),
            sqrt_p10=math.sqrt(e_b),
            sqrt_p11=math.sqrt(1 - e_b),
            sqrt_p00=math.sqrt(1 - e_b),
            denominator=4.0,
            case4=1 - e_b,
        )

    def _cases(self, a0, P, Q, W1, W2, zero_p, zero_q):
        with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
            base = a0 + self.sqrt_p01 * W1 + self.sqrt_p10 * W2
            diff = np.abs(P - Q)
            t1 = (base + self.sqrt_p11 * diff) ** 2 / (
                self.denominator * P ** 2)
            t2 = (base + self.sqrt_p00 * diff) ** 2 / (
                self.denominator * Q ** 2)
            return np.where(
                ~zero_p & ~zero_q, np.minimum(t1, t2),
                np.where(~zero_p, t1, np.where(~zero_q, t2, self.case4)),
            )

    def __call__(self, c30, c31, cp20, cp21):
        c30, c31, cp20, cp21 = np.broadcast_arrays(
            *(np.asarray(v, dtype=float) for v in (c30, c31, cp20, cp21)))
        P, Q = c30 * cp20, c31 * cp21
        value = self._cases(
            self.sqrt_p32, P, Q, c30 * cp21, c31 * cp20, P == 0, Q == 0)
        return value if value.ndim else float(value)

    def on_angles(self, rho, c, s, cp, sp):
        '''
        Search objective at angles (c, s), (cp, sp) and radius product rho,
        clamped to 1. Products below NEAR_ZERO are also evaluated as zero and
        the larger value kept. At rho = 0 the value is the larger of the
        doubly-zero case and the limit rho -> 0+.
        '''
        u, v = c * cp, s * sp
        w1, w2 = c * sp, s * cp
        with np.errstate(divide='ignore'):
            a0 = np.where(
                rho > 0, self.sqrt_p32 / np.where(rho > 0, rho, 1.0),
                np.inf if self.sqrt_p32 > 0 else 0.0,
            )
        zero_p, zero_q = u == 0, v == 0
        small_p, small_q = rho * u < NEAR_ZERO, rho * v < NEAR_ZERO
        value = self._cases(a0, u, v, w1, w2, zero_p, zero_q)
        if np.any(small_p | small_q):
            for zp, zq in ((small_p, zero_q), (zero_p, small_q),
                           (small_p, small_q)):
                value = np.maximum(
                    value, self._cases(a0, u, v, w1, w2, zp, zq))
        return np.minimum(value, 1.0)


@dataclass(frozen=True)
class EpsilonSearch:
    '''Outcome of a maximization together with its diagnostics'''
    epsilon: float
    argmax: tuple
    boundary_hit: bool
    feasible_points: int
    history: tuple = field(default=())

    def __iter__(self):
        return iter((self.epsilon, self.argmax, self.boundary_hit))

    def to_dict(self):
        return {
            'epsilon': self.epsilon,
            'argmax': list(self.argmax),
            'boundary_hit': self.boundary_hit,
            'feasible_points': self.feasible_points,
            'history': [
                {'stage': stage, 'epsilon': value}
                for stage, value in self.history
            ],
        }


class _Search(object):
    '''Book keeping of evaluated angle pairs'''

    def __init__(self, objective, first, second):
        self.objective = objective
        self.first = first
        self.second = second
        self.phi = []
        self.phip = []
        self.values = []

    def evaluate(self, phi, phip):
        phi, phip = np.broadcast_arrays(
            np.asarray(phi, dtype=float), np.asarray(phip, dtype=float))
        r = self.first.min_radius(phi)
        rp = self.second.min_radius(phip)
        c, s = trig(phi)
        cp, sp = trig(phip)
        ok = ~(np.isnan(r) | np.isnan(rp))
        rho = np.where(ok, r * rp, 0.0)
        values = np.where(
            ok, self.objective.on_angles(rho, c, s, cp, sp), -np.inf)
        self.phi.append(phi.ravel())
        self.phip.append(phip.ravel())
        self.values.append(values.ravel())
        return values

    def arrays(self):
        return (np.concatenate(self.phi), np.concatenate(self.phip),
                np.concatenate(self.values))

    def coordinates(self, phi, phip):
        r = self.first.min_radius(phi)
        rp = self.second.min_radius(phip)
        c, s = trig(phi)
        cp, sp = trig(phip)
        return np.stack([r * c, r * s, rp * cp, rp * sp], axis=-1)

    def ranked(self):
        '''Indices by decreasing value, ties by smallest coordinates'''
        phi, phip, values = self.arrays()
        coords = self.coordinates(phi, phip)
        order = np.lexsort((
            coords[:, 3], coords[:, 2], coords[:, 1], coords[:, 0], -values))
        return order, phi, phip, values, coords

    def best(self):
        order, phi, phip, values, coords = self.ranked()
        k = order[0]
        return phi[k], phip[k], values[k], coords[k]


def _pattern_search(search, starts, step):
    '''Compass search in eight directions from every start at once'''
    directions = np.array([
        (1, 0), (-1, 0), (0, 1), (0, -1),
        (1, 1), (1, -1), (-1, 1), (-1, -1),
    ], dtype=float)
    directions[4:] /= math.sqrt(2)

    pos = np.array(starts, dtype=float)
    current = search.evaluate(pos[:, 0], pos[:, 1])
    steps = np.full(len(pos), step)
    for _ in range(MAX_PATTERN_ITERATIONS):
        active = steps >= MIN_STEP
        if not np.any(active):
            break
        cand = pos[:, None, :] + steps[:, None, None] * directions[None]
        cand[..., 0] = search.first.project(cand[..., 0])
        cand[..., 1] = search.second.project(cand[..., 1])
        values = search.evaluate(cand[..., 0], cand[..., 1])
        pick = np.argmax(values, axis=1)
        best = values[np.arange(len(pos)), pick]
        improve = active & (best > current)
        pos[improve] = cand[np.arange(len(pos)), pick][improve]
        current = np.where(improve, best, current)
        steps = np.where(active & ~improve, steps / 2, steps)
    return current


def maximize(objective, rows_c, rows_cp, cfg, tol=None):
    '''
    Maximize the objective over both coefficient pairs. rows_c constrain
    (C30, C31), rows_cp constrain (C'20, C'21). Raises InfeasibleStatsError
    if either pair has no feasible point inside the search box.
    '''
    tol = cfg.feasibility_tol if tol is None else tol
    first = PairConstraints(rows_c, tol, cfg.c_max)
    second = PairConstraints(rows_cp, tol, cfg.c_max)
    for name, pair in (('(C30, C31)', first), ("(C'20, C'21)", second)):
        if not pair.intervals:
            raise InfeasibleStatsError(
                'No feasible {} within [0, {}]^2: the statistics are not '
                'consistent with any qubit source'.format(name, cfg.c_max))

    search = _Search(objective, first, second)
    history = []

    phi = first.spread(cfg.coarse_grid)
    phip = second.spread(cfg.coarse_grid)
    search.evaluate(phi[:, None], phip[None, :])
    best_phi, best_phip, best_value, _ = search.best()
    history.append(('coarse', float(best_value)))

    cell = HALF_PI / (cfg.coarse_grid - 1)
    width = cell
    for round_no in range(1, cfg.refine_rounds + 1):
        offsets = np.linspace(-width, width, cfg.coarse_grid)
        phi = first.project(np.clip(best_phi + offsets, 0, HALF_PI))
        phip = second.project(np.clip(best_phip + offsets, 0, HALF_PI))
        search.evaluate(phi[:, None], phip[None, :])
        best_phi, best_phip, best_value, _ = search.best()
        history.append(('refine-{}'.format(round_no), float(best_value)))
        width *= cfg.refine_shrink

    order, phi_all, phip_all, values, _ = search.ranked()
    starts = []
    seen = set()
    for k in order:
        if not np.isfinite(values[k]):
            break
        key = (phi_all[k], phip_all[k])
        if key in seen:
            continue
        seen.add(key)
        starts.append(key)
        if len(starts) >= cfg.multistarts:
            break
    _pattern_search(search, starts, cell)
    best_phi, best_phip, best_value, coords = search.best()
    history.append(('pattern', float(best_value)))

    _, _, values = search.arrays()
    feasible_points = int(np.count_nonzero(np.isfinite(values)))

    boundary_hit = False
    if math.isfinite(cfg.c_max):
        margin = cfg.c_max - cfg.c_max / (cfg.coarse_grid - 1)
        boundary_hit = bool(np.max(coords) >= margin)
        if not boundary_hit:
            unboxed = (PairConstraints(rows_c, tol, math.inf),
                       PairConstraints(rows_cp, tol, math.inf))
            boundary_hit = any(
                not _same_intervals(boxed.intervals, free.intervals)
                for boxed, free in zip((first, second), unboxed)
            )

    epsilon = float(min(max(best_value, 0.0), 1.0))
    return EpsilonSearch(
        epsilon=epsilon,
        argmax=tuple(float(value) for value in coords),
        boundary_hit=boundary_hit,
        feasible_points=feasible_points,
        history=tuple(history),
    )


def _same_intervals(first, second, tol=1e-12):
    if len(first) != len(second):
        return False
    return all(
        abs(a[0] - b[0]) <= tol and abs(a[1] - b[1]) <= tol
        for a, b in zip(first, second)
    )
