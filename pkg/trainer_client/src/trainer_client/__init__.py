"""Thin client for the thinkanywhere reward service."""

from .client import (ClientConfig, EmptyGroup, ItemError, RewardClient,
                     TransportFailure)

__version__ = "0.1.0"
__all__ = ["ClientConfig", "EmptyGroup", "ItemError", "RewardClient",
           "TransportFailure"]
