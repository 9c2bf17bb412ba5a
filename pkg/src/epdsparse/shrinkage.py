"""Weighted soft-thresholding."""

import numpy as np


def shrink(z, v, lam):
    """Weighted soft-thresholding ``sign(z) * max(|z| - lam * v, 0)``.

    This is the proximal map of ``x -> <v, |x|>`` with step ``lam``, i.e.
    the unique minimizer of ``<v, |x|> + ||x - z||^2 / (2 lam)``.

    Parameters
    ----------
    z : array_like
        Point to shrink.
    v : array_like or float
        Nonnegative weights, broadcast against ``z``.
    lam : float
        Positive step.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    z = np.asarray(z, dtype=float)
    v = np.asarray(v, dtype=float)
    if v.ndim and v.shape != z.shape:
        raise ValueError(f"weights of shape {v.shape} do not match z of shape {z.shape}")
    return np.sign(z) * np.maximum(np.abs(z) - lam * v, 0.0)


def shrink_identities_check(z, v, lam, atol=1e-10):
    """Check the two inner-product identities satisfied by ``S = shrink(z, v, lam)``.

    ``<v, |S|> == <sign(z) * v, S>`` and
    ``<S, S> == <S, z> - lam * <sign(z) * v, S>``.
    """
    z = np.asarray(z, dtype=float)
    v = np.asarray(v, dtype=float)
    s = shrink(z, v, lam)
    sv = np.sign(z) * v
    first = abs(v @ np.abs(s) - sv @ s)
    second = abs(s @ s - (s @ z - lam * (sv @ s)))
    return bool(first <= atol and second <= atol)
