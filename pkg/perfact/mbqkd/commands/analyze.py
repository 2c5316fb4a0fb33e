#!/usr/bin/env python
from ..subcommand import SubCommand
from ..helpers import UsageError
from ..stats import read_stats, StatsIntervals
from ..decoy import search_interval
from ..security import (
    key_rate, bit_error_rate, result_from_search, reference_rate,
)
from ..channel import gain_basis0


class Analyze(SubCommand):
    '''Bound the phase error and the key rate of a statistics file'''

    @staticmethod
    def add_args(parser):
        parser.add_argument(
            'path', type=str,
            help='JSON file holding the table p(1|x,y)',
        )
        parser.add_argument(
            '--symmetric', action='store_true', default=False,
            help='Use the simplified bound for symmetric statistics',
        )
        parser.add_argument(
            '--diagnostics', action='store_true', default=False,
            help='Include the search history in the output',
        )
        parser.add_argument(
            '--ksigma', type=float, dest='k_sigma',
            help='Widen every entry by this many standard deviations if the '
                 'file gives n_pulses (default 5)',
        )
        SubCommand.add_optimizer_args(parser)
        parser.add_argument(
            '--output', '-o', type=str,
            help='JSON file to write, stdout if omitted or "-"',
        )

    def analyze(self, stats, n_pulses):
        cfg = self.optimizer_config()
        if n_pulses is None or n_pulses == float('inf'):
            return key_rate(stats, cfg, symmetric=self.args.symmetric)
        if self.args.symmetric:
            raise UsageError(
                '--symmetric applies to exact statistics only, the file '
                'gives n_pulses')

        k_sigma = self.settings('k_sigma').get('k_sigma', 5.0)
        self.logger.info(
            'Widening the statistics for %d pulses by %s standard deviations',
            n_pulses, k_sigma,
        )
        intervals = StatsIntervals.widened(stats, n_pulses, k_sigma)
        search = search_interval(intervals, cfg)
        return result_from_search(
            bit_error_rate(stats), search, gain_basis0(stats))

    @SubCommand.with_lock
    def run(self):
        stats, n_pulses = read_stats(self.args.path)
        result = self.analyze(stats, n_pulses)
        if result.boundary_hit:
            self.logger.warning('Maximum found at the search boundary')
        data = result.to_dict(diagnostics=self.args.diagnostics)
        data['reference_rate_per_sifted_bit'] = max(
            reference_rate(stats), 0.0)
        self.write_json(data)
