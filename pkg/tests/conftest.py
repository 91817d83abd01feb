"""Shared test configuration."""

from __future__ import annotations

from hypothesis import HealthCheck, settings

# property tests drive O(n^3) kernels; per-example deadlines only add noise
settings.register_profile(
    "pcscreen",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("pcscreen")
