"""Beacon-chain fork choice / finality simulator with reorg and finality-delay attacks."""

__version__ = "0.1.0"
