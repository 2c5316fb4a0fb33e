# -*- coding: utf-8 -*-
import os
import json
import importlib.machinery
import importlib.util


class Namespace(object):
    """
    Convert a dict to a namespace, allowing access via a.b instead of a['b']
    """
    def __init__(self, data=None, **kw):
        if data:
            self.__dict__.update(data)
        self.__dict__.update(kw)


class MBQKDError(Exception):
    """Base class for all errors raised by this package. The exit code is
    used by the command line runner."""
    exit_code = 1


class UsageError(MBQKDError):
    """Invalid combination of command line arguments or config values"""
    exit_code = 1


class ValidationError(MBQKDError, ValueError):
    """Input data failed validation. `problems` lists every finding, so a
    caller can report all of them at once."""
    exit_code = 2

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__('; '.join(self.problems))


class DegenerateBasisError(ValidationError):
    """The two states spanning an expansion are (nearly) parallel"""


class SymmetryError(ValidationError):
    """The simplified formula was requested for a table that does not satisfy
    the symmetric identities"""


class NoClicksError(MBQKDError):
    """No basis-0 announcement at all, so no statistics to bound anything"""
    exit_code = 3


class InfeasibleStatsError(MBQKDError):
    """The constraint set is empty, which means the statistics are
    inconsistent with any qubit source"""
    exit_code = 3


class AuditViolation(MBQKDError):
    """A collective attack produced a phase error above the bound"""
    exit_code = 4


def load_config(filename):
    '''Load the config at "filename". A .json file is read as an object, any
    other file is executed as a Python module whose contents are returned as a
    dictionary. Skips contents starting with '_'. Content that cannot be
    parsed raises ValidationError.
    '''
    if filename.endswith('.json'):
        with open(filename) as f:
            try:
                data = json.load(f)
            except ValueError as exc:
                raise ValidationError('Config {}: {}'.format(filename, exc))
        if not isinstance(data, dict):
            raise ValidationError('Config {} must hold a JSON object'.format(
                filename))
        return data

    loader = importlib.machinery.SourceFileLoader('config', filename)
    spec = importlib.util.spec_from_loader(loader.name, loader)
    mod = importlib.util.module_from_spec(spec)
    try:
        loader.exec_module(mod)
    except (SyntaxError, NameError, ValueError) as exc:
        raise ValidationError('Config {}: {}'.format(filename, exc))

    return {
        name: getattr(mod, name)
        for name in dir(mod)
        if not name.startswith('_')
    }


def merge_config(*layers):
    '''Merge dictionaries from left to right. Values that are None do not
    override, which lets unset command line flags fall through to the config
    file and the defaults.'''
    result = {}
    for layer in layers:
        if not layer:
            continue
        result.update({
            key: value for key, value in layer.items()
            if value is not None
        })
    return result


def thread_count(config=None):
    '''Number of workers for parallel sweeps and audits. MBQKD_THREADS wins
    over the config key "threads".'''
    value = os.environ.get('MBQKD_THREADS')
    if value is None and config:
        value = config.get('threads')
    if value is None:
        return 1
    try:
        count = int(value)
    except (TypeError, ValueError):
        raise UsageError('Invalid thread count: {!r}'.format(value))
    if count < 1:
        raise UsageError('Thread count must be positive, got {}'.format(count))
    return count


def parse_count(value):
    '''Parse a pulse count that may be given as "inf".'''
    if isinstance(value, str) and value.strip().lower() in ('inf', 'infinity'):
        return float('inf')
    number = float(value)
    if number != float('inf') and number != int(number):
        raise UsageError('Pulse count must be an integer or "inf"')
    return number
