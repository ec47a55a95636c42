"""Seed-deterministic correlated Gaussian stream generators.

Randomness comes from the counter-based Philox bit generator keyed directly
with the user's seed, drawn as 53-bit integers and mapped to uniforms
``(k + 0.5) / 2**53`` in the open interval, then to standard normals through
the inverse normal CDF (``scipy.special.ndtri``).  Every step is an explicit,
named transform with no platform-dependent state, so a given ``(n, seed)``
always produces the same bytes.

Correlation is imposed by an explicit lower-triangular (Cholesky) mixing of
the independent normals; the trivariate factor is written in closed form
with guards for the boundary cases ``|rho| = 1``.
"""

from __future__ import annotations

import math
from typing import Iterator, Tuple

import numpy as np
from scipy.special import ndtri

#: Rows drawn per internal block; the value is invisible in the output
#: because bounded power-of-two draws consume exactly one Philox word each.
BLOCK_ROWS = 4096

_TWO53 = float(2**53)


def _check_n_seed(n: int, seed: int) -> None:
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if not isinstance(seed, int) or seed < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {seed!r}")


def _check_rho(name: str, rho: float) -> float:
    rho = float(rho)
    if not math.isfinite(rho) or not -1.0 <= rho <= 1.0:
        raise ValueError(f"{name} must lie in [-1, 1], got {rho!r}")
    return rho


def _normal_blocks(n: int, width: int, seed: int) -> Iterator[np.ndarray]:
    """Yield ``(k, width)`` blocks of independent standard normals."""
    gen = np.random.Generator(np.random.Philox(key=seed))
    remaining = n
    while remaining > 0:
        k = min(BLOCK_ROWS, remaining)
        raw = gen.integers(0, 2**53, size=(k, width), dtype=np.uint64)
        uniforms = (raw.astype(np.float64) + 0.5) / _TWO53
        yield ndtri(uniforms)
        remaining -= k


def validate_correlation_triple(
    rho12: float, rho23: float, rho13: float
) -> Tuple[float, float, float]:
    """Check that the implied 3x3 correlation matrix is positive
    semidefinite via its determinant; return the validated triple.

    :raises ValueError: when any entry leaves ``[-1, 1]`` or the determinant
        ``1 + 2*r12*r23*r13 - r12^2 - r23^2 - r13^2`` is negative.
    """
    r12 = _check_rho("rho12", rho12)
    r23 = _check_rho("rho23", rho23)
    r13 = _check_rho("rho13", rho13)
    det = 1.0 + 2.0 * r12 * r23 * r13 - r12 * r12 - r23 * r23 - r13 * r13
    if det < -1e-12:
        raise ValueError(
            f"correlations (rho12={r12}, rho23={r23}, rho13={r13}) do not "
            f"form a positive semidefinite matrix (det={det:.3e})"
        )
    return r12, r23, r13


def _tri_factor(
    r12: float, r23: float, r13: float
) -> Tuple[float, float, float, float]:
    """Closed-form lower-triangular factor entries (l22, l32, l33) plus a
    zero-pivot guard: when ``|rho12| = 1`` the second pivot vanishes and PSD
    validation already forces ``rho23 == rho12 * rho13``."""
    l22 = math.sqrt(max(0.0, 1.0 - r12 * r12))
    if l22 > 0.0:
        l32 = (r23 - r12 * r13) / l22
    else:
        l32 = 0.0
    l33 = math.sqrt(max(0.0, 1.0 - r13 * r13 - l32 * l32))
    return r12, l22, l32, l33


def gaussian_pair_array(n: int, rho: float, seed: int) -> np.ndarray:
    """``(n, 2)`` array of standard-normal pairs with correlation ``rho``.

    ``x1`` is a standard normal; ``x2 = rho * x1 + sqrt(1 - rho^2) * z``
    with an independent normal ``z``, so ``rho = 1`` gives ``x2 == x1``
    exactly.
    """
    _check_n_seed(n, seed)
    rho = _check_rho("rho", rho)
    comp = math.sqrt(max(0.0, 1.0 - rho * rho))
    out = np.empty((n, 2))
    at = 0
    for z in _normal_blocks(n, 2, seed):
        k = z.shape[0]
        out[at : at + k, 0] = z[:, 0]
        out[at : at + k, 1] = rho * z[:, 0] + comp * z[:, 1]
        at += k
    return out


def gaussian_pair_stream(
    n: int, rho: float, seed: int
) -> Iterator[Tuple[float, float]]:
    """Row iterator with exactly the values of :func:`gaussian_pair_array`.

    Arguments are validated here, before the first row is requested.
    """
    _check_n_seed(n, seed)
    rho = _check_rho("rho", rho)

    def rows() -> Iterator[Tuple[float, float]]:
        comp = math.sqrt(max(0.0, 1.0 - rho * rho))
        for z in _normal_blocks(n, 2, seed):
            x1 = z[:, 0]
            x2 = rho * z[:, 0] + comp * z[:, 1]
            for a, b in zip(x1, x2):
                yield float(a), float(b)

    return rows()


def gaussian_tri_array(
    n: int, rho12: float, rho23: float, rho13: float, seed: int
) -> np.ndarray:
    """``(n, 3)`` standard-normal rows with the given pairwise correlations.

    :raises ValueError: if the correlation matrix is not positive
        semidefinite (see :func:`validate_correlation_triple`).
    """
    _check_n_seed(n, seed)
    r12, r23, r13 = validate_correlation_triple(rho12, rho23, rho13)
    l21, l22, l32, l33 = _tri_factor(r12, r23, r13)
    out = np.empty((n, 3))
    at = 0
    for z in _normal_blocks(n, 3, seed):
        k = z.shape[0]
        out[at : at + k, 0] = z[:, 0]
        out[at : at + k, 1] = l21 * z[:, 0] + l22 * z[:, 1]
        out[at : at + k, 2] = r13 * z[:, 0] + l32 * z[:, 1] + l33 * z[:, 2]
        at += k
    return out


def gaussian_tri_stream(
    n: int, rho12: float, rho23: float, rho13: float, seed: int
) -> Iterator[Tuple[float, float, float]]:
    """Row iterator with exactly the values of :func:`gaussian_tri_array`.

    Arguments are validated here, before the first row is requested.
    """
    _check_n_seed(n, seed)
    r12, r23, r13 = validate_correlation_triple(rho12, rho23, rho13)
    l21, l22, l32, l33 = _tri_factor(r12, r23, r13)

    def rows() -> Iterator[Tuple[float, float, float]]:
        for z in _normal_blocks(n, 3, seed):
            x1 = z[:, 0]
            x2 = l21 * z[:, 0] + l22 * z[:, 1]
            x3 = r13 * z[:, 0] + l32 * z[:, 1] + l33 * z[:, 2]
            for a, b, c in zip(x1, x2, x3):
                yield float(a), float(b), float(c)

    return rows()
