"""Resource caps guarding combinatorial blow-ups.

Every cap can be overridden through an environment variable so that large
instances can be pushed through deliberately:

- ``EXACTMDP_ENUMERATION_CAP``     decision rules materialized per MDP
- ``EXACTMDP_SYMBOLIC_HORIZON_CAP`` horizons of piecewise-symbolic value iteration
- ``EXACTMDP_PREFIX_CAP``          policy prefixes enumerated per condition check
- ``EXACTMDP_PIECE_CAP``           pieces per symbolic horizon
"""

from __future__ import annotations

import os

DEFAULT_ENUMERATION_CAP = 4096
DEFAULT_SYMBOLIC_HORIZON_CAP = 64
DEFAULT_PREFIX_CAP = 1_000_000
DEFAULT_PIECE_CAP = 10_000


class CapExceededError(RuntimeError):
    """A configured resource cap would be exceeded."""

    def __init__(self, cap_name: str, needed, cap):
        super().__init__(f"{cap_name} cap exceeded: need {needed}, cap is {cap}")
        self.cap_name = cap_name
        self.needed = needed
        self.cap = cap


def _from_env(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    return int(raw)


def enumeration_cap() -> int:
    return _from_env("EXACTMDP_ENUMERATION_CAP", DEFAULT_ENUMERATION_CAP)


def symbolic_horizon_cap() -> int:
    return _from_env("EXACTMDP_SYMBOLIC_HORIZON_CAP", DEFAULT_SYMBOLIC_HORIZON_CAP)


def prefix_cap() -> int:
    return _from_env("EXACTMDP_PREFIX_CAP", DEFAULT_PREFIX_CAP)


def piece_cap() -> int:
    return _from_env("EXACTMDP_PIECE_CAP", DEFAULT_PIECE_CAP)
