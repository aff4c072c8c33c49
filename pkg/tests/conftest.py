"""Shared test configuration.

BLAS threading is pinned to one thread for the whole session: the
factorizations in this package are small, fan-out only adds noise to
timing-sensitive tests, and pinning keeps results byte-identical across
worker counts.
"""

from threadpoolctl import threadpool_limits

_limits = threadpool_limits(limits=1)
