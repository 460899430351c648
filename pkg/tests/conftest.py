"""Shared pytest configuration: a forgiving hypothesis profile.

The property tests wrap numerical pipelines whose first call may JIT-warm
numpy buffers; per-example deadlines would flag that as flakiness.
"""

from hypothesis import HealthCheck, settings

settings.register_profile(
    "blocktau",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("blocktau")
