#!/usr/bin/env python
import os

from ..subcommand import SubCommand
from ..helpers import UsageError, AuditViolation, thread_count
from ..attack import (
    soundness_audit, replay, DEFAULT_EVE_DIM, MAX_EVE_DIM,
)


class AttackAudit(SubCommand):
    '''Check the bound against randomized collective attacks'''
    subcommand = 'attack-audit'

    @staticmethod
    def add_args(parser):
        parser.add_argument(
            '--trials', type=int, default=1000,
            help='Number of sampled attacks (default 1000)',
        )
        parser.add_argument(
            '--seed', type=int, default=0,
            help='Root seed, the run is reproducible given the seed',
        )
        parser.add_argument(
            '--eve-dim', type=int, default=DEFAULT_EVE_DIM, dest='eve_dim',
            help='Dimension of the ancilla of random attacks '
                 '(1 to {})'.format(MAX_EVE_DIM),
        )
        parser.add_argument(
            '--artifacts', type=str,
            help='Directory to store a JSON record of every failing attack',
        )
        parser.add_argument(
            '--replay', type=str,
            help='Re-check a recorded attack instead of sampling',
        )
        SubCommand.add_optimizer_args(parser)
        parser.add_argument(
            '--output', '-o', type=str,
            help='JSON report to write, stdout if omitted or "-"',
        )

    def lock_dir(self):
        if self.args.artifacts:
            return os.path.abspath(self.args.artifacts)
        return super().lock_dir()

    def check_args(self):
        args = self.args
        if args.trials < 1:
            raise UsageError('--trials must be positive, got {}'.format(
                args.trials))
        if not 1 <= args.eve_dim <= MAX_EVE_DIM:
            raise UsageError('--eve-dim must lie between 1 and {}'.format(
                MAX_EVE_DIM))
        if args.artifacts:
            try:
                os.makedirs(args.artifacts, exist_ok=True)
            except OSError as exc:
                raise UsageError('Unable to create {}: {}'.format(
                    args.artifacts, exc.strerror))

    def run_replay(self, cfg):
        attack, report = replay(self.args.replay, cfg)
        data = {
            'replay': self.args.replay,
            'kind': attack.kind,
            'seed': attack.seed,
            'e_p_actual': report.e_p_actual,
            'e_b_actual': report.e_b_actual,
            'epsilon': report.epsilon,
            'bound': report.bound,
            'margin': report.margin,
            'sound': report.sound,
        }
        self.write_json(data)
        if not report.sound:
            raise AuditViolation(
                'Recorded attack violates the bound by {:.3g}'.format(
                    -report.margin))

    def run(self):
        self.check_args()
        self.acquire_lock()
        try:
            self.run_locked()
        finally:
            self.release_lock()

    def run_locked(self):
        cfg = self.optimizer_config()
        if self.args.replay:
            self.run_replay(cfg)
            return

        threads = thread_count(self.config)
        self.logger.info(
            'Auditing %d attacks with seed %d on %d thread(s)',
            self.args.trials, self.args.seed, threads,
        )
        report = soundness_audit(
            self.args.trials, self.args.seed, cfg,
            eve_dim=self.args.eve_dim, threads=threads,
            artifacts_dir=self.args.artifacts, logger=self.logger,
        )
        data = report.to_dict()
        data['seed'] = self.args.seed
        data['eve_dim'] = self.args.eve_dim
        self.write_json(data)
        self.logger.info(
            '%d passed, %d failed, %d skipped', report.passes,
            report.failures, report.skipped,
        )
        if not report.ok:
            raise AuditViolation('{} of {} attacks violate the bound'.format(
                report.failures, report.trials))
