"""Rack-aware MDS array codes with partially cooperative multi-rack repair."""

from .params import SystemParams, lower_bound, predicted_bandwidth, validate

__all__ = ["SystemParams", "lower_bound", "predicted_bandwidth", "validate"]
