#!/usr/bin/env python
import io
import csv
import math
import functools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..subcommand import SubCommand
from ..helpers import (
    ValidationError, UsageError, NoClicksError, InfeasibleStatsError,
    merge_config, parse_count, thread_count,
)
from ..channel import (
    MdiChannelParams, Bb84ChannelParams, channel_stats, loss_db_to_eta,
    with_eta,
)
from ..optimizer import OptimizerConfig
from ..security import key_rate
from ..decoy import DecoyParams, infinite_decoy_rate, three_decoy_rate

PROTOCOLS = ('mdiqkd', 'bb84')
SOURCES = ('single-photon', 'coherent')
DECOY_MODES = ('infinite', 'three')

COLUMNS = ('loss_db', 'eta', 'e_b', 'epsilon', 'e_p', 'gain',
           'rate_per_pulse', 'reference_rate_per_pulse', 'boundary_hit',
           'status')

# Keys of a sweep, as used in config files, curve overrides and flags
SWEEP_KEYS = (
    'protocol', 'source', 'decoy', 'loss_start', 'loss_stop', 'loss_step',
    'd', 'p_d', 'a', 'b', 'c', 'mode', 'mu', 'nu', 'n_pulses', 'k_sigma',
) + SubCommand.optimizer_keys


@dataclass(frozen=True)
class SweepConfig:
    '''One curve: a protocol, a source and a range of losses in dB. For
    MDIQKD the loss is per arm, for BB84 it is the total loss.'''
    protocol: str = 'mdiqkd'
    source: str = 'single-photon'
    decoy: str = 'infinite'
    loss_start: float = 0.0
    loss_stop: float = 40.0
    loss_step: float = 1.0
    channel: object = field(default_factory=MdiChannelParams)
    decoy_params: DecoyParams = field(default_factory=DecoyParams)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self):
        problems = []
        if self.protocol not in PROTOCOLS:
            problems.append('protocol must be one of {}, got {!r}'.format(
                PROTOCOLS, self.protocol))
        if self.source not in SOURCES:
            problems.append('source must be one of {}, got {!r}'.format(
                SOURCES, self.source))
        if self.decoy not in DECOY_MODES:
            problems.append('decoy must be one of {}, got {!r}'.format(
                DECOY_MODES, self.decoy))
        if not self.loss_step > 0:
            problems.append('loss_step must be positive, got {!r}'.format(
                self.loss_step))
        if not 0 <= self.loss_start <= self.loss_stop:
            problems.append('Need 0 <= loss_start <= loss_stop, got {!r} and '
                            '{!r}'.format(self.loss_start, self.loss_stop))
        if (self.protocol == 'mdiqkd' and self.source == 'coherent'
                and self.decoy == 'three'):
            problems.append('Three decoy intensities are modelled for BB84 '
                            'only')
        if problems:
            raise ValidationError(problems)

    @classmethod
    def from_config(cls, config):
        '''Build from a flat mapping as merged from defaults, config file,
        curve overrides and flags'''
        protocol = config.get('protocol', 'mdiqkd')
        try:
            if protocol == 'bb84':
                channel = Bb84ChannelParams(**{
                    key: float(config[key])
                    for key in ('p_d', 'a', 'b', 'c') if key in config
                }, mode=config.get('mode', 'formula'))
            else:
                channel = MdiChannelParams(**(
                    {'d': float(config['d'])} if 'd' in config else {}))
            ranges = {
                key: float(config[key])
                for key in ('loss_start', 'loss_stop', 'loss_step')
                if key in config
            }
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError('Invalid sweep parameter: {}'.format(exc))
        return cls(
            protocol=protocol,
            source=config.get('source', 'single-photon'),
            decoy=config.get('decoy', 'infinite'),
            channel=channel,
            decoy_params=DecoyParams.from_config(config),
            optimizer=OptimizerConfig.from_config(config),
            **ranges
        )

    def losses(self):
        count = int(math.floor(
            (self.loss_stop - self.loss_start) / self.loss_step + 1e-9)) + 1
        return [
            round(self.loss_start + index * self.loss_step, 10)
            for index in range(count)
        ]


def sweep_point(sweep, loss_db, logger=None):
    '''The row of one loss value as a dict'''
    eta = loss_db_to_eta(loss_db)
    channel = with_eta(sweep.channel, eta)
    row = {'loss_db': loss_db, 'eta': eta}
    try:
        if sweep.source == 'single-photon':
            result = key_rate(channel_stats(channel), sweep.optimizer)
        elif sweep.decoy == 'three':
            result = three_decoy_rate(
                channel, sweep.decoy_params, sweep.optimizer)
        else:
            result = infinite_decoy_rate(
                channel, sweep.decoy_params, sweep.optimizer)
    except (NoClicksError, InfeasibleStatsError) as exc:
        status = 'no-clicks' if isinstance(exc, NoClicksError) \
            else 'infeasible'
        if logger:
            logger.warning('Loss %s dB: %s', loss_db, exc)
        row.update({
            'e_b': math.nan, 'epsilon': math.nan, 'e_p': math.nan,
            'gain': 0.0, 'rate_per_pulse': 0.0,
            'reference_rate_per_pulse': 0.0, 'boundary_hit': False,
            'status': status,
        })
        return row

    if result.boundary_hit and logger:
        logger.warning('Loss %s dB: maximum found at the search boundary',
                       loss_db)
    if logger:
        logger.debug('Loss %s dB: rate %.6g', loss_db, result.rate_per_pulse)
    row.update({
        'e_b': result.e_b,
        'epsilon': result.epsilon,
        'e_p': result.e_p,
        'gain': result.gain,
        'rate_per_pulse': result.rate_per_pulse,
        'reference_rate_per_pulse': result.reference_rate_per_pulse,
        'boundary_hit': result.boundary_hit,
        'status': 'boundary' if result.boundary_hit else 'ok',
    })
    return row


def run_sweep(sweep, threads=1, logger=None):
    '''All rows of a sweep, in loss order'''
    point = functools.partial(sweep_point, sweep, logger=logger)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(point, sweep.losses()))


def format_value(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return format(value, '.12g')
    return str(value)


def rows_to_csv(rows, curve_column=False):
    out = io.StringIO()
    writer = csv.writer(out)
    columns = (('curve',) if curve_column else ()) + COLUMNS
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row[column]) for column in columns])
    return out.getvalue()


class Sweep(SubCommand):
    '''Compute the key rate over a range of losses and write it as CSV'''

    @staticmethod
    def add_args(parser):
        parser.add_argument('--protocol', choices=PROTOCOLS)
        parser.add_argument('--source', choices=SOURCES)
        parser.add_argument(
            '--decoy', choices=DECOY_MODES,
            help='Decoy method of a coherent source',
        )
        parser.add_argument('--loss-start', type=float, dest='loss_start')
        parser.add_argument('--loss-stop', type=float, dest='loss_stop')
        parser.add_argument('--loss-step', type=float, dest='loss_step')
        parser.add_argument(
            '--dark', type=float, dest='d',
            help='MDIQKD dark count probability per detector and pulse',
        )
        parser.add_argument(
            '--pd', type=float, dest='p_d',
            help='BB84 dark count probability per pulse',
        )
        for name in ('a', 'b', 'c'):
            parser.add_argument(
                '--mis-' + name, type=float, dest=name,
                help='BB84 encoding misalignment {} in degrees'.format(name),
            )
        parser.add_argument('--mode', choices=('formula', 'states'))
        parser.add_argument('--mu', type=float,
                            help='Mean photon number of the signal')
        parser.add_argument('--nu', type=float,
                            help='Mean photon number of the weak decoy')
        parser.add_argument(
            '--pulses', type=parse_count, dest='n_pulses',
            help='Pulses per encoding state, an integer or "inf"',
        )
        parser.add_argument('--ksigma', type=float, dest='k_sigma')
        SubCommand.add_optimizer_args(parser)
        parser.add_argument(
            '--output', '-o', type=str,
            help='CSV file to write, stdout if omitted or "-"',
        )

    def curves(self):
        '''
        (name, SweepConfig) for each curve. A config file may hold a list
        "curves" of named overrides, each giving one curve of a figure.
        '''
        base = self.config or {}
        flags = {key: getattr(self.args, key, None) for key in SWEEP_KEYS}
        common = {key: base[key] for key in SWEEP_KEYS if key in base}
        curves = base.get('curves')
        if not curves:
            return [(None, SweepConfig.from_config(
                merge_config(common, flags)))]
        result = []
        for index, curve in enumerate(curves):
            if not isinstance(curve, dict):
                raise UsageError('Curve {} is not an object'.format(index))
            name = str(curve.get('name', index))
            overrides = {
                key: value for key, value in curve.items() if key != 'name'
            }
            result.append((name, SweepConfig.from_config(
                merge_config(common, overrides, flags))))
        return result

    @SubCommand.with_lock
    def run(self):
        curves = self.curves()
        threads = thread_count(self.config)
        rows = []
        for name, sweep in curves:
            self.logger.info(
                'Sweeping %s (%s, %s) from %s to %s dB',
                name or 'curve', sweep.protocol, sweep.source,
                sweep.loss_start, sweep.loss_stop,
            )
            for row in run_sweep(sweep, threads, self.logger):
                row['curve'] = name
                rows.append(row)
        self.write_output(rows_to_csv(rows, curve_column=len(curves) > 1
                                      or curves[0][0] is not None))
