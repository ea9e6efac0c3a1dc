"""Dense complex tensor kernels: pairwise contraction and truncated SVD splits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

# Tensors are plain ndarrays; "DenseTensor" in docs means a complex ndarray.
DenseTensor = np.ndarray

# Singular values below this fraction of the largest are rounding noise and always dropped.
NOISE_FLOOR = 1e-14


@dataclass(frozen=True)
class SchmidtSpectrum:
    """Singular values across one cut, sorted nonincreasing.

    ``values`` are the retained (unnormalized) singular values. ``discarded_weight``
    is the dropped squared weight as a fraction of the total squared weight.
    """

    values: np.ndarray
    cut: int = -1
    discarded_weight: float = 0.0

    def probabilities(self) -> np.ndarray:
        p = np.asarray(self.values, dtype=float) ** 2
        total = p.sum()
        if total <= 0.0:
            raise ValueError("Schmidt spectrum has zero norm")
        return p / total

    def entropy(self) -> float:
        """Von Neumann entropy in nats."""
        p = self.probabilities()
        p = p[p > 0.0]
        # clip the -0.0 / rounding-negative value of a product cut
        return max(float(-np.sum(p * np.log(p))), 0.0) + 0.0


def contract_pair(a: DenseTensor, b: DenseTensor, leg_pairs: Sequence[tuple[int, int]]) -> DenseTensor:
    """Contract ``a`` with ``b`` over the given ``(leg_of_a, leg_of_b)`` pairs.

    The result carries the free legs of ``a`` (in order) followed by the free legs of ``b``.
    """
    legs_a = [int(i) for i, _ in leg_pairs]
    legs_b = [int(j) for _, j in leg_pairs]
    if len(set(legs_a)) != len(legs_a) or len(set(legs_b)) != len(legs_b):
        raise ValueError(f"repeated leg in contraction pairs {list(leg_pairs)}")
    for i, j in zip(legs_a, legs_b):
        if not (-a.ndim <= i < a.ndim and -b.ndim <= j < b.ndim):
            raise ValueError(f"leg pair ({i}, {j}) out of range for ranks {a.ndim}, {b.ndim}")
        if a.shape[i] != b.shape[j]:
            raise ValueError(
                f"dimension mismatch on pair ({i}, {j}): {a.shape[i]} != {b.shape[j]}"
            )
    return np.tensordot(a, b, axes=(legs_a, legs_b))


def _svd(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    try:
        return scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesdd", check_finite=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge on ill-conditioned input
        return scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesvd", check_finite=False)


def truncation_rank(s: np.ndarray, max_rank: int | None, tol: float) -> int:
    """Number of singular values kept: those above ``max(tol, NOISE_FLOOR) * s[0]``, at most ``max_rank``."""
    if s.size == 0 or s[0] == 0.0:
        return 1
    keep = int(np.count_nonzero(s > max(tol, NOISE_FLOOR) * s[0]))
    if max_rank is not None:
        keep = min(keep, int(max_rank))
    return max(keep, 1)


def truncated_svd(
    mat: np.ndarray, max_rank: int | None = None, tol: float = 0.0
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """SVD of a matrix truncated by rank and relative tolerance.

    Returns ``(u, s, vh, discarded)`` where ``discarded`` is the dropped squared weight
    relative to the total squared weight.
    """
    u, s, vh = _svd(mat)
    keep = truncation_rank(s, max_rank, tol)
    total = float(np.sum(s**2))
    dropped = float(np.sum(s[keep:] ** 2))
    discarded = dropped / total if total > 0.0 else 0.0
    return u[:, :keep], s[:keep], vh[:keep, :], discarded


def svd_split(
    t: DenseTensor,
    left_legs: Sequence[int],
    max_rank: int | None = None,
    tol: float = 0.0,
    absorb: str = "right",
) -> tuple[DenseTensor, SchmidtSpectrum, DenseTensor]:
    """Split a tensor into two factors across the bipartition ``left_legs | rest``.

    The left factor has legs ``(*left_legs, k)`` and the right factor ``(k, *right_legs)``
    with the remaining legs in their original order. ``absorb`` selects where the
    singular values go: ``"right"`` (left factor is an isometry), ``"left"`` or
    ``"none"`` (both factors isometric; multiply by ``spectrum.values`` to rebuild).
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    left = [int(i) % t.ndim for i in left_legs]
    if len(set(left)) != len(left):
        raise ValueError("repeated leg in left_legs")
    if not left or len(left) >= t.ndim:
        raise ValueError("left_legs must be a nonempty proper subset of the legs")
    right = [i for i in range(t.ndim) if i not in left]
    left_shape = [t.shape[i] for i in left]
    right_shape = [t.shape[i] for i in right]
    mat = np.transpose(t, left + right).reshape(int(np.prod(left_shape)), int(np.prod(right_shape)))
    u, s, vh, discarded = truncated_svd(mat, max_rank, tol)
    if absorb == "right":
        vh = s[:, None] * vh
    elif absorb == "left":
        u = u * s[None, :]
    elif absorb != "none":
        raise ValueError(f"unknown absorb mode {absorb!r}")
    k = s.size
    spectrum = SchmidtSpectrum(values=s.copy(), cut=len(left), discarded_weight=discarded)
    return u.reshape(*left_shape, k), spectrum, vh.reshape(k, *right_shape)


def entropy_from_values(values: np.ndarray) -> float:
    return SchmidtSpectrum(values=np.asarray(values)).entropy()
