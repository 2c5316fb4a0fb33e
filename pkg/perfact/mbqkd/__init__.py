from .stats import ConditionalStats, StatsIntervals, read_stats, write_stats
from .security import key_rate, epsilon_max, SecurityResult
from .decoy import DecoyParams, infinite_decoy_rate, three_decoy_rate

__all__ = [
    'ConditionalStats',
    'StatsIntervals',
    'read_stats',
    'write_stats',
    'key_rate',
    'epsilon_max',
    'SecurityResult',
    'DecoyParams',
    'infinite_decoy_rate',
    'three_decoy_rate',
]
