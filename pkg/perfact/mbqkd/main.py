#!/usr/bin/env python

import sys
import argparse
import logging

try:
    import perfact.loggingtools
except ImportError:
    pass

from .helpers import load_config, MBQKDError, UsageError

from .commands.sweep import Sweep
from .commands.analyze import Analyze
from .commands.simulate import Simulate
from .commands.attack_audit import AttackAudit


class ArgumentParser(argparse.ArgumentParser):
    """
    Report usage errors as UsageError so that they get the same exit code
    handling as all other errors.
    """
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


class Runner(object):
    """
    Parses arguments to select the correct SubCommand subclass.
    """
    commands = [Sweep, Analyze, Simulate, AttackAudit]

    def __init__(self):
        """
        Set up the argument parser with the possible subcommands
        """
        parser = ArgumentParser(description='''
            Key rates of BB84 and measurement-device-independent QKD with
            uncharacterized qubit sources, bounded from the mismatched-basis
            statistics.
        ''')
        parser.add_argument(
            '--config', '-c', type=str,
            help='Path to a config file (.json or .py)',
        )
        parser.add_argument(
            '--no-lock', action='store_true',
            help='Do not lock the output directory.',
        )
        level = parser.add_mutually_exclusive_group()
        level.add_argument('--verbose', '-v', action='store_true',
                           help='Log debug messages')
        level.add_argument('--quiet', '-q', action='store_true',
                           help='Log only warnings and errors')
        if 'perfact.loggingtools' in sys.modules:
            perfact.loggingtools.addArgs(parser, name='MBQKD')

        # Add all available SubCommand classes as sub-command runners, using
        # either the property "subcommand" or the name of the class.
        # The chosen subcommand class will be available as args.command
        subs = parser.add_subparsers()
        for cls in self.commands:
            name = getattr(cls, 'subcommand', cls.__name__.lower())
            subparser = subs.add_parser(
                name,
                help=cls.__doc__,
            )
            cls.add_args(subparser)
            subparser.set_defaults(command=cls)

        self.parser = parser

        # These are set by parse()
        self.args = None
        self.logger = None
        self.config = None
        self.command = None

    def create_logger(self, args):
        if 'perfact.loggingtools' in sys.modules:
            logger = perfact.loggingtools.createLogger(
                args=args, name='MBQKD'
            )
        else:
            logger = logging.getLogger('MBQKD')
            if not logger.handlers:
                logger.addHandler(logging.StreamHandler())
            logger.propagate = True
        if args.verbose:
            logger.setLevel(logging.DEBUG)
        elif args.quiet:
            logger.setLevel(logging.WARNING)
        else:
            logger.setLevel(logging.INFO)
        return logger

    def parse(self, *argv):
        """
        Parse the given arguments and set the command accordingly. If no
        arguments are given, sys.argv is used.
        """
        args = self.parser.parse_args(argv if argv else None)
        if getattr(args, 'command', None) is None:
            self.parser.error('No subcommand given')
        self.args = args
        self.logger = self.create_logger(args)

        if args.config:
            try:
                self.config = load_config(args.config)
            except OSError as exc:
                raise UsageError('Unable to read config {}: {}'.format(
                    args.config, exc.strerror))
        else:
            self.config = {}

        self.command = args.command(
            args=self.args,
            logger=self.logger,
            config=self.config,
        )

        return self.command

    def run(self, *argv):
        """
        Parse arguments and run command
        """
        return self.parse(*argv).run()


def main(*argv):
    """
    Run the command line and return its exit code: 0 on success, otherwise
    the exit_code of the raised MBQKDError.
    """
    try:
        Runner().run(*argv)
    except MBQKDError as exc:
        logging.getLogger('MBQKD').error('%s', exc)
        return exc.exit_code
    return 0
