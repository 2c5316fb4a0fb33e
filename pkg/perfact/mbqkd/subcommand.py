#!/usr/bin/env python

import os
import sys
import json

import filelock

from .helpers import Namespace, UsageError, merge_config
from .optimizer import OptimizerConfig

LOCK_NAME = '.mbqkd.lock'


class SubCommand(Namespace):
    '''
    Base class for different sub-commands to be used by mbqkd.
    '''

    # Config keys that may come from the config file or the command line
    optimizer_keys = ('c_max', 'coarse_grid', 'refine_rounds',
                      'refine_shrink', 'multistarts', 'feasibility_tol')

    @staticmethod
    def add_args(parser):
        ''' Overwrite to add arguments specific to sub-command. '''
        pass

    @staticmethod
    def add_optimizer_args(parser):
        parser.add_argument(
            '--c-max', type=float, dest='c_max',
            help='Upper end of the search box for the coefficients',
        )
        parser.add_argument(
            '--grid', type=int, dest='coarse_grid',
            help='Number of angles per pair in the coarse scan',
        )
        parser.add_argument(
            '--multistarts', type=int,
            help='Number of starting points of the pattern search',
        )

    def settings(self, *names):
        '''Config file values overridden by explicitly given flags'''
        flags = {
            name: getattr(self.args, name, None) for name in names
        }
        file_values = {
            name: self.config.get(name) for name in names
        } if self.config else {}
        return merge_config(file_values, flags)

    def optimizer_config(self):
        return OptimizerConfig.from_config(self.settings(*self.optimizer_keys))

    def lock_dir(self):
        '''
        Directory whose lock protects the files written by this command.
        Commands writing to stdout return None and run without lock.
        '''
        output = getattr(self.args, 'output', None)
        if output is None or output == '-':
            return None
        return os.path.dirname(os.path.abspath(output))

    def acquire_lock(self, timeout=10):
        if self.args.no_lock:
            return
        directory = self.lock_dir()
        if directory is None:
            return
        self.lock = filelock.FileLock(os.path.join(directory, LOCK_NAME))
        try:
            self.lock.acquire(timeout=1)
        except filelock.Timeout:
            self.logger.debug("Acquiring exclusive lock on %s...", directory)
            try:
                self.lock.acquire(timeout=timeout-1)
            except filelock.Timeout:
                self.logger.error("Unable to acquire lock on %s.", directory)
                raise UsageError('Output directory {} is locked'.format(
                    directory))

    def release_lock(self):
        if getattr(self, 'lock', None) is not None:
            self.lock.release()
            self.lock = None

    @staticmethod
    def with_lock(func):
        """
        Decorator for instance methods that are enveloped by a lock
        """
        def wrapper(self, *args, **kwargs):
            self.acquire_lock()
            try:
                result = func(self, *args, **kwargs)
            finally:
                self.release_lock()
            return result

        return wrapper

    def write_output(self, text):
        '''Write to the file given by --output, or to stdout'''
        output = getattr(self.args, 'output', None)
        if output is None or output == '-':
            sys.stdout.write(text)
            return
        try:
            with open(output, 'w', newline='') as f:
                f.write(text)
        except OSError as exc:
            raise UsageError('Unable to write {}: {}'.format(
                output, exc.strerror))

    def write_json(self, data):
        self.write_output(json.dumps(data, indent=2, sort_keys=True) + '\n')

    def run(self):
        '''
        Overwrite for the action that is to be performed if this subcommand is
        chosen.
        '''
        print(self.args)
