"""Input validation helpers shared by every module.

These mirror the ``sklearn.utils.validation`` helpers in spirit: each one
accepts loosely typed input, checks it, and returns a canonical object
(``complex128`` ndarray, ``numpy.random.Generator``) or raises
:class:`~fastmusic.exceptions.ParameterError`.
"""

import numbers

import numpy as np

from .exceptions import ParameterError

# Inputs whose anti-Hermitian part exceeds this (relative, Frobenius) are
# rejected rather than silently symmetrized.
_HERMITIAN_REJECT_TOL = 1e-6


def check_matrix(A, name="A", *, dtype=np.complex128, allow_empty=False):
    """Return ``A`` as a finite 2-D array of ``dtype``."""
    A = np.asarray(A)
    if A.ndim != 2:
        raise ParameterError(f"{name} must be 2-D, got shape {A.shape}")
    if not allow_empty and (A.shape[0] < 1 or A.shape[1] < 1):
        raise ParameterError(f"{name} must have at least one row and column, got {A.shape}")
    A = np.asarray(A, dtype=dtype)
    if not np.all(np.isfinite(A)):
        raise ParameterError(f"{name} contains NaN or Inf")
    return A


def check_hermitian(S, name="S"):
    """Validate a square matrix and return its Hermitian part ``(S + S^H)/2``."""
    S = check_matrix(S, name)
    if S.shape[0] != S.shape[1]:
        raise ParameterError(f"{name} must be square, got {S.shape}")
    skew = np.linalg.norm(S - S.conj().T)
    scale = np.linalg.norm(S)
    if scale > 0 and skew > _HERMITIAN_REJECT_TOL * scale:
        raise ParameterError(
            f"{name} is not Hermitian: relative skew {skew / scale:.2e}"
        )
    return 0.5 * (S + S.conj().T)


def check_count(value, name, *, minimum=1, maximum=None):
    """Return ``value`` as an ``int`` within ``[minimum, maximum]``."""
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ParameterError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ParameterError(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ParameterError(f"{name} must be <= {maximum}, got {value}")
    return value


def check_random_state(seed):
    """Turn ``seed`` into a :class:`numpy.random.Generator`.

    Integers are interpreted as unsigned 64-bit seeds for the PCG64 bit
    generator, so the same seed always reproduces the same stream.
    ``SeedSequence`` objects and existing generators are accepted as is.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    if seed is None:
        return np.random.default_rng()
    if isinstance(seed, bool) or not isinstance(seed, numbers.Integral):
        raise ParameterError(f"seed must be an int, SeedSequence or Generator, got {seed!r}")
    if not 0 <= int(seed) < 2**64:
        raise ParameterError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(int(seed)))


def child_seeds(seed, n):
    """Derive ``n`` independent integer sub-seeds from ``seed``."""
    ss = np.random.SeedSequence(int(seed))
    return [int(c.generate_state(1, np.uint64)[0]) for c in ss.spawn(n)]
