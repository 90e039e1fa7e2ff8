"""Benchmark errors.

Classes:
    ConfigError
"""


class ConfigError(Exception):
    """Invalid benchmark configuration !"""
