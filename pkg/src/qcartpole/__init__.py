"""Hybrid single-qubit actor-critic agents for CartPole, with shot-noise and latency models."""

__version__ = "0.1.0"
