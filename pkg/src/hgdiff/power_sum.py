"""Power-sum embeddings of multisets and the sum-decomposition they induce.

``power_sum_encode`` maps ``z in [0, 1]^K`` to its first ``M`` power sums,
which determine the multiset of entries. ``power_sum_decode`` inverts that
map through Newton's identities and the roots of the monic polynomial with
the recovered elementary symmetric coefficients.

:func:`sum_decomposition` uses the pair to rewrite any permutation-equivariant
``psi`` as ``psi(Z)_i = rho(z_i, sum_j phi(z_j))``.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .exceptions import DecodeError, ValidationError


def power_sum_encode(z, m: int) -> np.ndarray:
    z = np.asarray(z, dtype=float).ravel()
    if m < z.size:
        raise ValidationError(f"need at least {z.size} moments for {z.size} entries, got {m}")
    if z.size and (z.min() < 0 or z.max() > 1):
        raise ValidationError("entries must lie in [0, 1]")
    powers = np.arange(1, m + 1)
    return (z[:, None] ** powers[None, :]).sum(axis=0)


def elementary_from_power_sums(moments, k: int) -> np.ndarray:
    """Elementary symmetric polynomials ``e_0..e_k`` via Newton's identities."""
    p = np.asarray(moments, dtype=float)
    e = np.zeros(k + 1)
    e[0] = 1.0
    for n in range(1, k + 1):
        acc = 0.0
        for i in range(1, n + 1):
            acc += (-1) ** (i - 1) * e[n - i] * p[i - 1]
        e[n] = acc / n
    return e


def power_sum_decode(moments, k: int, tol: float = 1e-6) -> np.ndarray:
    """Recover the ascending-sorted multiset with the given power sums.

    Raises :class:`DecodeError` when the roots are not (numerically) real or
    do not reproduce the moments within ``tol``.
    """
    moments = np.asarray(moments, dtype=float).ravel()
    if k < 0 or moments.size < k:
        raise ValidationError(f"need at least {k} moments, got {moments.size}")
    if k == 0:
        return np.zeros(0)
    e = elementary_from_power_sums(moments, k)
    coeffs = e * (-1.0) ** np.arange(k + 1)
    roots = np.roots(coeffs) if k > 1 else np.array([e[1]], dtype=complex)
    scale = max(1.0, float(np.max(np.abs(roots))))
    if np.max(np.abs(roots.imag)) > np.sqrt(tol) * scale:
        raise DecodeError(f"moments are not produced by a real multiset (max imag {np.max(np.abs(roots.imag)):.3g})")
    z = np.sort(roots.real)
    recon = (z[:, None] ** np.arange(1, moments.size + 1)[None, :]).sum(axis=0)
    err = float(np.max(np.abs(recon - moments) / np.maximum(1.0, np.abs(moments))))
    if err > tol:
        raise DecodeError(f"decoded multiset misses the moments by {err:.3g}")
    return z


def sum_decomposition(psi: Callable[[np.ndarray], np.ndarray], k: int):
    """Split an equivariant ``psi`` on ``[0, 1]^k`` into ``(phi, rho)``.

    ``phi(z)`` returns the ``k`` power features of a scalar; ``rho(z_i, s)``
    decodes the multiset from the summed features ``s``, evaluates ``psi``
    on its sorted representative and reads off the output at the entry
    matching ``z_i``.
    """

    def phi(zi):
        return np.asarray(zi, dtype=float) ** np.arange(1, k + 1)

    def rho(zi, summed):
        sorted_z = power_sum_decode(summed, k)
        out = np.asarray(psi(sorted_z), dtype=float)
        return out[int(np.argmin(np.abs(sorted_z - zi)))]

    return phi, rho


def apply_sum_decomposition(phi, rho, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    summed = np.sum([phi(zi) for zi in z], axis=0)
    return np.array([rho(zi, summed) for zi in z])
