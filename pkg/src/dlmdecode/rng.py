"""Counter-based deterministic randomness.

All stochastic pieces of the engine (random confidence scores, seeded
tie-breaks, synthetic distractor picks) derive from a keyed 64-bit mix
so results are reproducible across runs, platforms, and processes.
No stream state is carried between calls.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
# splitmix64 finalizer constants
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
# distinct odd multipliers keep the key components from aliasing
_KA = 0x9E3779B97F4A7C15
_KB = 0xC2B2AE3D27D4EB4F
_KC = 0x165667B19E3779F9


def _finalize(z: int) -> int:
    z = (z ^ (z >> 30)) * _M1 & _MASK64
    z = (z ^ (z >> 27)) * _M2 & _MASK64
    return z ^ (z >> 31)


def mix64(a: int, b: int = 0, c: int = 0) -> int:
    """Mix up to three integer key components into a 64-bit word."""
    z = (a & _MASK64) * _KA & _MASK64
    z ^= (b & _MASK64) * _KB & _MASK64
    z ^= (c & _MASK64) * _KC & _MASK64
    z = _finalize(z)
    # second round: decorrelates near-identical keys
    return _finalize(z ^ _KA)


def uniform(a: int, b: int = 0, c: int = 0) -> float:
    """Deterministic uniform draw in [0, 1) keyed by the components."""
    return (mix64(a, b, c) >> 11) * 2.0 ** -53
