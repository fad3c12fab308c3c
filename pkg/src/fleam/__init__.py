"""Federated GRU detection, mitigation placement and attack-economics simulation."""

__version__ = "0.1.0"
