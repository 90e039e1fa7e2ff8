"""Custom errors for circ module.

Classes:
    NotPowerOfTwoError()
    NodeFullError()
    DuplicateKeyError()
    KeyNotFoundError()
    ContractError()
    CorruptionError()
"""

class NotPowerOfTwoError(Exception):
    """Node capacity is not a power of two !"""

class NodeFullError(Exception):
    """The node must be split first !"""

class DuplicateKeyError(Exception):
    """The key is already in the tree !"""

class KeyNotFoundError(Exception):
    """The key is not in the node !"""

class ContractError(Exception):
    """Operation called outside its preconditions !"""

class CorruptionError(Exception):
    """The durable image is outside the recoverable states !"""
