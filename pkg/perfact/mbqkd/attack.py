#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Explicit collective attacks and an audit that the phase-error bound
dominates the phase error they actually cause.

An attack maps |phi_x>_C |phi'_y>_D |e>_Ea |0>_M to
sqrt(p(0|x,y)) |Gamma_xy0>_E |0>_M + sqrt(p(1|x,y)) |Gamma_xy1>_E |1>_M,
where Eve's register E holds the photons C and D together with her ancilla.
Attacks are always built from an explicit isometry, so every amplitude table
here is physically realizable.
"""

import os
import json
import math
import logging
from dataclasses import dataclass, field, replace
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.stats import unitary_group
from scipy.optimize import minimize_scalar

from .helpers import (
    ValidationError, UsageError, DegenerateBasisError, NoClicksError,
    InfeasibleStatsError,
)
from .quantum import (
    SourceSpec, bell_projection_prob, expansion_coefficients,
)
from .stats import ConditionalStats
from .optimizer import OptimizerConfig
from .security import epsilon_max, phase_error_bound

NORM_TOL = 1e-10
SOUNDNESS_SLACK = 1e-6
PHASE_GRID = 360
DEFAULT_EVE_DIM = 2
MAX_EVE_DIM = 8

logger = logging.getLogger('MBQKD')


@dataclass(frozen=True, eq=False)
class AttackInstance:
    '''
    gamma[x, y, z] is the normalized state |Gamma_xyz> of Eve's register of
    dimension 4*eve_dim, p_table[x, y, z] the announcement probability.
    '''
    eve_dim: int
    gamma: np.ndarray
    p_table: np.ndarray
    sources: SourceSpec
    kind: str = 'custom'
    seed: int = None

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=complex)
        p_table = np.asarray(self.p_table, dtype=float)
        object.__setattr__(self, 'gamma', gamma)
        object.__setattr__(self, 'p_table', p_table)
        problems = []
        if not isinstance(self.eve_dim, int) or self.eve_dim < 1:
            problems.append('eve_dim must be a positive integer')
        elif gamma.shape != (4, 4, 2, 4 * self.eve_dim):
            problems.append('gamma has shape {}, expected {}'.format(
                gamma.shape, (4, 4, 2, 4 * self.eve_dim)))
        if p_table.shape != (4, 4, 2):
            problems.append('p_table has shape {}, expected (4, 4, 2)'.format(
                p_table.shape))
        if problems:
            raise ValidationError(problems)

        if np.any(p_table < 0) or np.any(p_table > 1):
            problems.append('Announcement probabilities out of [0,1]')
        totals = p_table.sum(axis=2)
        if np.max(np.abs(totals - 1)) > NORM_TOL:
            problems.append('p(0|x,y) + p(1|x,y) deviates from 1')
        norms = np.sum(np.abs(gamma) ** 2, axis=3)
        live = p_table > 0
        if np.any(np.abs(norms[live] - 1) > NORM_TOL):
            problems.append('Some |Gamma_xyz> with p(z|x,y) > 0 is not '
                            'normalized')
        if problems:
            raise ValidationError(problems)

    @property
    def stats(self):
        return ConditionalStats(self.p_table[..., 1])

    def amplitude(self, x, y, z):
        '''sqrt(p(z|x,y)) |Gamma_xyz>'''
        return math.sqrt(self.p_table[x, y, z]) * self.gamma[x, y, z]


@dataclass(frozen=True)
class PhaseErrorReport:
    e_p_actual: float
    e_b_actual: float
    bound: float = None
    sound: bool = None
    epsilon: float = None

    def with_bound(self, epsilon):
        bound = float(phase_error_bound(self.e_b_actual, epsilon))
        return replace(
            self, epsilon=float(epsilon), bound=bound,
            sound=bool(self.e_p_actual <= bound + SOUNDNESS_SLACK),
        )

    @property
    def margin(self):
        return None if self.bound is None else self.bound - self.e_p_actual


def _from_outputs(outputs, sources, eve_dim, kind, seed=None):
    '''Build an instance from the (unnormalized) M=0 and M=1 parts of the
    attack output, outputs[x, y, z]'''
    p_table = np.sum(np.abs(outputs) ** 2, axis=3)
    p_table = p_table / p_table.sum(axis=2, keepdims=True)
    norms = np.sqrt(np.sum(np.abs(outputs) ** 2, axis=3, keepdims=True))
    with np.errstate(invalid='ignore', divide='ignore'):
        gamma = np.where(norms > 0, outputs / norms, 0)
    p_table = np.where(norms[..., 0] > 0, p_table, 0.0)
    return AttackInstance(eve_dim, gamma, p_table, sources, kind, seed)


def honest_attack(sources):
    '''The measurement unit projects onto |phi+> and announces the result.
    Nothing beyond the photons is kept, so eve_dim is 1.'''
    phi_plus = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
    gamma = np.zeros((4, 4, 2, 4), dtype=complex)
    p_table = np.zeros((4, 4, 2))
    for x, a in enumerate(sources.alice_states):
        for y, b in enumerate(sources.bob_states):
            joint = np.kron(a.vector, b.vector)
            success = np.vdot(phi_plus, joint) * phi_plus
            p1 = bell_projection_prob(a, b)
            p_table[x, y] = (1 - p1, p1)
            for z, part in ((1, success), (0, joint - success)):
                norm = np.linalg.norm(part)
                if norm > 0 and p_table[x, y, z] > 0:
                    gamma[x, y, z] = part / norm
    return AttackInstance(1, gamma, p_table, sources, 'honest')


def measure_resend_attack(sources):
    '''
    Eve measures C and D in the computational basis and records the outcome
    (i, j). She announces z=1 with amplitude 1/sqrt(2) if i == j, else z=0.
    '''
    eve_dim = 4
    outputs = np.zeros((4, 4, 2, 16), dtype=complex)
    for x, a in enumerate(sources.alice_states):
        for y, b in enumerate(sources.bob_states):
            for i in range(2):
                for j in range(2):
                    amp = a.vector[i] * b.vector[j]
                    # register |i, j>_CD |2i+j>_Ea
                    index = (2 * i + j) * eve_dim + (2 * i + j)
                    if i == j:
                        outputs[x, y, 0, index] += amp / math.sqrt(2)
                        outputs[x, y, 1, index] += amp / math.sqrt(2)
                    else:
                        outputs[x, y, 0, index] += amp
    return _from_outputs(outputs, sources, eve_dim, 'measure-resend')


def random_attack(seed, sources, eve_dim=DEFAULT_EVE_DIM):
    '''
    Haar-random unitary on C (x) D (x) Ea (x) M applied to the sources with
    Eve's ancilla in a random initial state. Deterministic given seed.
    '''
    if not isinstance(eve_dim, int) or eve_dim < 1:
        raise ValidationError(
            'eve_dim must be a positive integer, got {!r}'.format(eve_dim))
    rng = np.random.default_rng(seed)
    ancilla = rng.normal(size=eve_dim) + 1j * rng.normal(size=eve_dim)
    ancilla /= np.linalg.norm(ancilla)
    dim = 8 * eve_dim
    unitary = unitary_group.rvs(dim, random_state=rng)
    message0 = np.array([1, 0], dtype=complex)

    outputs = np.zeros((4, 4, 2, 4 * eve_dim), dtype=complex)
    for x, a in enumerate(sources.alice_states):
        for y, b in enumerate(sources.bob_states):
            state = np.kron(np.kron(np.kron(a.vector, b.vector), ancilla),
                            message0)
            # the message qubit is the last tensor factor
            outputs[x, y] = (unitary @ state).reshape(4 * eve_dim, 2).T
    return _from_outputs(outputs, sources, eve_dim, 'random', seed)


def _min_over_phase(total, overlap):
    '''
    min over alpha of total - 2 Re(exp(-i alpha) overlap): a 360-point grid
    followed by golden-section search around the best grid point.
    '''
    def term(alpha):
        return total - 2 * (np.exp(-1j * alpha) * overlap).real

    grid = np.arange(PHASE_GRID) * (2 * math.pi / PHASE_GRID)
    values = term(grid)
    k = int(np.argmin(values))
    best = float(values[k])
    step = 2 * math.pi / PHASE_GRID
    left, mid, right = grid[k] - step, grid[k], grid[k] + step
    if term(mid) < term(left) and term(mid) < term(right):
        refined = minimize_scalar(
            term, bracket=(left, mid, right), method='golden')
        best = min(best, float(refined.fun))
    return max(best, 0.0)


def actual_errors(attack):
    '''
    Bit and phase error rate of the basis-0 pairs the attack leaves behind,
    with the phase error minimized over both distillation phases. The two
    phases enter separate terms, so each is minimized on its own.
    '''
    p = attack.p_table[..., 1]
    total = p[0, 0] + p[1, 1] + p[0, 1] + p[1, 0]
    if not total > 0:
        raise NoClicksError('Attack produces no basis-0 announcements')
    w00, w11 = attack.amplitude(0, 0, 1), attack.amplitude(1, 1, 1)
    w01, w10 = attack.amplitude(0, 1, 1), attack.amplitude(1, 0, 1)
    matched = _min_over_phase(p[0, 0] + p[1, 1], np.vdot(w00, w11))
    crossed = _min_over_phase(p[0, 1] + p[1, 0], np.vdot(w01, w10))
    return PhaseErrorReport(
        e_p_actual=float(min((matched + crossed) / (2 * total), 1.0)),
        e_b_actual=float((p[0, 1] + p[1, 0]) / total),
    )


def phase_error_closed_form(attack):
    '''The same minimum, in closed form'''
    p = attack.p_table[..., 1]
    total = p[0, 0] + p[1, 1] + p[0, 1] + p[1, 0]
    matched = p[0, 0] + p[1, 1] - 2 * abs(np.vdot(
        attack.amplitude(0, 0, 1), attack.amplitude(1, 1, 1)))
    crossed = p[0, 1] + p[1, 0] - 2 * abs(np.vdot(
        attack.amplitude(0, 1, 1), attack.amplitude(1, 0, 1)))
    return float((matched + crossed) / (2 * total))


def true_coefficients(sources):
    '''(C30, C31, C'20, C'21) and the phase theta_3 + theta'_2'''
    alice, bob = sources.alice_states, sources.bob_states
    three = expansion_coefficients(alice[3], alice[0], alice[1])
    two = expansion_coefficients(bob[2], bob[0], bob[1])
    return (three.c0, three.c1, two.c0, two.c1), three.theta + two.theta


def intermediate_bound(attack):
    '''
    Both sides of the inequality that links the attack amplitudes to the
    (3,2) announcement, evaluated with the true expansion coefficients.
    Returns (lhs, rhs); lhs <= rhs holds for every physical attack.
    '''
    (c30, c31, cp20, cp21), theta = true_coefficients(attack.sources)
    p = attack.p_table[..., 1]
    combined = c30 * cp20 * attack.amplitude(0, 0, 1) \
        + c31 * cp21 * np.exp(1j * theta) * attack.amplitude(1, 1, 1)
    lhs = float(np.sum(np.abs(combined) ** 2))
    rhs = (math.sqrt(p[3, 2]) + math.sqrt(p[0, 1]) * c30 * cp21
           + math.sqrt(p[1, 0]) * c31 * cp20) ** 2
    return lhs, float(rhs)


def check_attack(attack, cfg=None):
    '''Run the bound on the induced statistics and compare'''
    cfg = cfg or OptimizerConfig()
    search = epsilon_max(attack.stats, cfg)
    return actual_errors(attack).with_bound(search.epsilon)


def attack_to_dict(attack):
    return {
        'kind': attack.kind,
        'seed': attack.seed,
        'eve_dim': attack.eve_dim,
        'sources': attack.sources.to_dict(),
        'gamma_real': attack.gamma.real.tolist(),
        'gamma_imag': attack.gamma.imag.tolist(),
        'p_table': attack.p_table.tolist(),
    }


def attack_from_dict(data):
    try:
        gamma = np.asarray(data['gamma_real'], dtype=float) \
            + 1j * np.asarray(data['gamma_imag'], dtype=float)
        return AttackInstance(
            eve_dim=int(data['eve_dim']),
            gamma=gamma,
            p_table=np.asarray(data['p_table'], dtype=float),
            sources=SourceSpec.from_dict(data['sources']),
            kind=data.get('kind', 'custom'),
            seed=data.get('seed'),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError('Malformed attack record: {!r}'.format(exc))


def replay(path, cfg=None):
    '''Re-run the check on a recorded attack'''
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ValidationError('{}: not valid JSON ({})'.format(path, exc))
    except OSError as exc:
        raise UsageError('Unable to read {}: {}'.format(path, exc.strerror))
    if not isinstance(data, dict):
        raise ValidationError('{}: expected a JSON object'.format(path))
    attack = attack_from_dict(data.get('attack', data))
    return attack, check_attack(attack, cfg)


@dataclass(frozen=True)
class AuditReport:
    trials: int
    passes: int
    failures: int
    skipped: int
    worst_margin: float
    failed: tuple = field(default=())

    @property
    def ok(self):
        return self.failures == 0

    def to_dict(self):
        return {
            'trials': self.trials,
            'passes': self.passes,
            'failures': self.failures,
            'skipped': self.skipped,
            'worst_margin': self.worst_margin,
            'failed': list(self.failed),
        }


def _coefficients_fit(sources, c_max):
    try:
        coefficients, _ = true_coefficients(sources)
    except DegenerateBasisError:
        return False
    return max(coefficients) <= c_max


def sample_sources(index, rng, c_max):
    '''
    Sources of trial number index. The first trials and two in every ten use
    the ideal and the collapse corner cases, the rest are Haar-random
    quadruples. Random quadruples whose coefficients leave the search box are
    drawn again.
    '''
    if index in (0, 2) or index % 10 == 3:
        return SourceSpec.ideal_bb84()
    if index == 1 or index % 10 == 7:
        return SourceSpec.collapse()
    while True:
        sources = SourceSpec.random(rng)
        if _coefficients_fit(sources, c_max):
            return sources


def _trial_attack(index, sources, rng, eve_dim):
    if index == 0 or index == 1:
        return honest_attack(sources)
    if index == 2:
        return measure_resend_attack(sources)
    attack_seed = int(rng.integers(2 ** 63))
    return random_attack(attack_seed, sources, eve_dim)


def run_trial(index, seed_sequence, cfg, eve_dim):
    '''One audit trial. Returns (status, margin, attack, detail).'''
    rng = np.random.default_rng(seed_sequence)
    sources = sample_sources(index, rng, cfg.c_max)
    attack = _trial_attack(index, sources, rng, eve_dim)
    try:
        report = check_attack(attack, cfg)
    except NoClicksError:
        return 'skipped', None, attack, 'no basis-0 announcements'
    except InfeasibleStatsError as exc:
        return 'failed', None, attack, str(exc)
    lhs, rhs = intermediate_bound(attack)
    if not report.sound:
        return 'failed', report.margin, attack, (
            'e_p {:.9g} above bound {:.9g}'.format(
                report.e_p_actual, report.bound))
    if lhs > rhs + 1e-9 * max(1.0, rhs):
        return 'failed', report.margin, attack, (
            'amplitude inequality violated: {:.9g} > {:.9g}'.format(lhs, rhs))
    return 'passed', report.margin, attack, None


def write_artifact(directory, record):
    '''Store the record of a failing trial, returns its path'''
    path = os.path.join(
        directory, 'failure-{:05d}.json'.format(record['trial']))
    try:
        with open(path, 'w') as f:
            json.dump(record, f, indent=2)
    except OSError as exc:
        raise UsageError('Unable to write {}: {}'.format(
            path, exc.strerror))
    return path


def soundness_audit(trials, seed, cfg=None, eve_dim=DEFAULT_EVE_DIM,
                    threads=1, artifacts_dir=None, logger=logger):
    '''
    Sample sources and attacks, run the bound on the statistics each attack
    induces and check it against the phase error it actually causes. Every
    trial draws from its own child of SeedSequence(seed), so the outcome does
    not depend on the number of threads.
    '''
    if not isinstance(trials, int) or trials < 1:
        raise ValidationError(
            'Number of trials must be positive, got {!r}'.format(trials))
    cfg = cfg or OptimizerConfig()
    children = np.random.SeedSequence(seed).spawn(trials)

    def work(index):
        result = run_trial(index, children[index], cfg, eve_dim)
        logger.debug('Trial %s: %s', index, result[0])
        return result

    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(work, range(trials)))

    passes = failures = skipped = 0
    worst = math.inf
    failed = []
    for index, (status, margin, attack, detail) in enumerate(results):
        if margin is not None:
            worst = min(worst, margin)
        if status == 'passed':
            passes += 1
            continue
        if status == 'skipped':
            skipped += 1
            continue
        failures += 1
        entry = {'trial': index, 'margin': margin, 'detail': detail}
        if artifacts_dir:
            path = write_artifact(artifacts_dir, {
                'trial': index, 'seed': seed, 'detail': detail,
                'attack': attack_to_dict(attack),
            })
            entry['artifact'] = path
        logger.error('Trial %s violates the bound: %s', index, detail)
        failed.append(entry)

    return AuditReport(
        trials=trials,
        passes=passes,
        failures=failures,
        skipped=skipped,
        worst_margin=float(worst) if math.isfinite(worst) else None,
        failed=tuple(failed),
    )
