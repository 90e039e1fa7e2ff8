"""Custom errors for pmem module.

Classes:
    AllocationError()
    ArenaRangeError()
    AlignmentError()
    ArenaConfigError()
    CrashExplosionError()
    SimulatedCrash()
"""

class AllocationError(Exception):
    """Not enough room left in the arena !"""

class ArenaRangeError(Exception):
    """Access out of the handle bounds !"""

class AlignmentError(Exception):
    """Atomic access is not 8 bytes aligned !"""

class ArenaConfigError(Exception):
    """Invalid arena geometry !"""

class CrashExplosionError(Exception):
    """Too many dirty words to enumerate crash images !"""

class SimulatedCrash(Exception):  # noqa: N818
    """Power failure injected at an armed persistence event !"""
