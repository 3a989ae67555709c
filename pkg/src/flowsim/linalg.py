"""Dense matrix kernels shared by the whole package.

All matrices are plain ``numpy.ndarray`` of float64, row-major, with every
entry finite.  Symmetric positive-definite work goes through a Cholesky
factor (:class:`SpdFactor`); spectra come from :func:`sym_eig`.  The
factorizations themselves are delegated to LAPACK via numpy/scipy; this
module pins the shapes, tolerances and error types the rest of the code
relies on.

Randomness: every generator in the package is a ``numpy.random.Generator``
backed by the PCG64 bit generator, a fixed, documented 128-bit LCG with
output permutation.  Identical seeds give identical streams, and purpose
seeds are derived from one root seed by :func:`derive_seed` (root XOR the
leading 8 bytes of SHA-256 of the purpose tag).
"""

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve


class NotPositiveDefinite(Exception):
    """Cholesky hit a non-positive (or vanishing) pivot."""


class NoConvergence(Exception):
    """The eigensolver failed to converge; the input is pathological."""


class DimensionMismatch(ValueError):
    """Operand shapes are incompatible."""


# A pivot at or below this is treated as rank deficiency.
_PIVOT_FLOOR = 1e-300
_SYM_RTOL = 1e-10


def check_matrix(a, name="matrix"):
    """Validate and return a 2-D float64 array with finite entries.

    The result is always C-contiguous: BLAS summation order depends on the
    memory layout, so normalizing here keeps results bit-identical no matter
    how the caller sliced the input.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {a.shape}")
    if a.size and not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")
    return a


def _require_symmetric(a, name):
    scale = np.abs(a).max() if a.size else 0.0
    if scale == 0.0:
        return
    if np.abs(a - a.T).max() > _SYM_RTOL * scale:
        raise ValueError(f"{name} is not symmetric within rtol={_SYM_RTOL}")


@dataclass(frozen=True, eq=False)
class SpdFactor:
    """Lower-triangular Cholesky factor L of a SPD matrix A = L L^T."""

    lower: np.ndarray

    @property
    def dim(self):
        return self.lower.shape[0]


def cholesky(a):
    """Factor a symmetric positive-definite matrix.

    Raises :class:`NotPositiveDefinite` when a pivot falls at or below
    1e-300, which signals rank deficiency.
    """
    a = check_matrix(a, "A")
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"A must be square, got {a.shape}")
    _require_symmetric(a, "A")
    try:
        lower = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    # LAPACK succeeded but a pivot may still be denormal-small.
    d = np.diagonal(lower)
    if (d * d <= _PIVOT_FLOOR).any():
        raise NotPositiveDefinite("pivot at or below 1e-300")
    return SpdFactor(lower)


def logdet_spd(factor):
    """log det(A) in nats, as 2 * sum(log(diag(L)))."""
    return 2.0 * float(np.log(np.diagonal(factor.lower)).sum())


def solve_spd(factor, b):
    """Solve A X = B given the Cholesky factor of A."""
    b = np.asarray(b, dtype=np.float64)
    rows = b.shape[0]
    if rows != factor.dim:
        raise DimensionMismatch(
            f"factor dim {factor.dim} does not match B rows {rows}"
        )
    return cho_solve((factor.lower, True), b, check_finite=False)


def sym_eig(a):
    """Eigendecomposition of a symmetric matrix.

    Returns ``(w, v)`` with eigenvalues ``w`` sorted descending and
    orthonormal eigenvectors in the columns of ``v``.
    """
    a = check_matrix(a, "A")
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"A must be square, got {a.shape}")
    _require_symmetric(a, "A")
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return w[::-1].copy(), v[:, ::-1].copy()


def make_rng(seed):
    """Seeded PCG64 generator; same seed, same stream, any platform."""
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


def derive_seed(root, tag):
    """Fan one root seed out to purpose-specific seeds.

    ``root XOR sha256(tag)[:8]``, so every consumer of randomness gets an
    independent, reproducible stream from a single configured seed.
    """
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    mix = int.from_bytes(digest[:8], "little")
    return (int(root) ^ mix) & 0xFFFFFFFFFFFFFFFF
