#!/usr/bin/env python
import dataclasses

from ..subcommand import SubCommand
from ..helpers import UsageError, parse_count
from ..stats import dump_stats
from ..channel import (
    MdiChannelParams, Bb84ChannelParams, channel_stats, coherent_gains,
    loss_db_to_eta,
)


class Simulate(SubCommand):
    '''Write the statistics of a channel model as a statistics file'''

    @staticmethod
    def add_args(parser):
        parser.add_argument('protocol', choices=('mdiqkd', 'bb84'))
        transmission = parser.add_mutually_exclusive_group()
        transmission.add_argument(
            '--eta', type=float,
            help='Transmission efficiency (per arm for MDIQKD)',
        )
        transmission.add_argument(
            '--loss-db', type=float, dest='loss_db',
            help='Loss in dB (per arm for MDIQKD)',
        )
        parser.add_argument('--dark', type=float, dest='d',
                            help='MDIQKD dark count probability')
        parser.add_argument('--pd', type=float, dest='p_d',
                            help='BB84 dark count probability')
        for name in ('a', 'b', 'c'):
            parser.add_argument(
                '--mis-' + name, type=float, dest=name,
                help='BB84 encoding misalignment {} in degrees'.format(name),
            )
        parser.add_argument('--mode', choices=('formula', 'states'))
        parser.add_argument(
            '--mu', type=float,
            help='Gains of a BB84 coherent source with this mean photon '
                 'number instead of the single-photon table',
        )
        parser.add_argument(
            '--pulses', type=parse_count, dest='n_pulses',
            help='Pulse count to record in the file',
        )
        parser.add_argument(
            '--output', '-o', type=str,
            help='File to write, stdout if omitted or "-"',
        )

    def channel(self):
        args = self.args
        if args.loss_db is not None:
            eta = loss_db_to_eta(args.loss_db)
        elif args.eta is not None:
            eta = args.eta
        else:
            eta = 1.0
        if args.protocol == 'mdiqkd':
            if args.p_d is not None or args.mu is not None:
                raise UsageError('--pd and --mu apply to bb84 only')
            kwargs = {'d': args.d} if args.d is not None else {}
            return MdiChannelParams(eta=eta, **kwargs)
        if args.d is not None:
            raise UsageError('--dark applies to mdiqkd only, use --pd')
        kwargs = {
            name: getattr(args, name)
            for name in ('p_d', 'a', 'b', 'c', 'mode')
            if getattr(args, name) is not None
        }
        return Bb84ChannelParams(eta=eta, **kwargs)

    @SubCommand.with_lock
    def run(self):
        params = self.channel()
        if self.args.mu is not None:
            stats = coherent_gains(params, self.args.mu)
        else:
            stats = channel_stats(params)
        extra = {
            'protocol': self.args.protocol,
            'channel': dataclasses.asdict(params),
        }
        if self.args.mu is not None:
            extra['mu'] = self.args.mu
        self.logger.debug('Simulated %s with %r', self.args.protocol, params)
        self.write_output(dump_stats(stats, self.args.n_pulses, **extra))
