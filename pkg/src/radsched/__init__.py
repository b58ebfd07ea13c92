"""Radiotherapy patient-scheduling engine: greedy, batch-IP and
prediction-based strategies with a rolling-horizon simulator."""

__version__ = "0.1.0"
