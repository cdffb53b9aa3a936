"""Opt-in flop counter for the complexity benchmarks.

Wall time at desk scale is noisy, so the scaling acceptance checks run on
an instrumented count of floating-point operations charged inside the small
per-node kernels.  The counter is off unless a ``count_flops`` context is
active; the disabled path is a single global check.
"""

from __future__ import annotations

from contextlib import contextmanager


class FlopCounter:
    __slots__ = ("total",)

    def __init__(self):
        self.total = 0

    def add(self, flops: int) -> None:
        self.total += flops


_ACTIVE: FlopCounter | None = None


def tick(flops: int) -> None:
    if _ACTIVE is not None:
        _ACTIVE.add(flops)


@contextmanager
def count_flops():
    global _ACTIVE
    prev = _ACTIVE
    counter = FlopCounter()
    _ACTIVE = counter
    try:
        yield counter
    finally:
        _ACTIVE = prev


def matmul_flops(m: int, k: int, n: int) -> int:
    return 2 * m * k * n


def qr_flops(m: int, n: int) -> int:
    # Householder QR of an m x n tall matrix, complete Q accumulation
    return 2 * m * n * n + 2 * m * m * n
