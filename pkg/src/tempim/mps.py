"""Matrix-product states and operators over a line of legs.

Site tensors have index order ``(left_bond, physical, right_bond)``. MPO tensors have
order ``(left_bond, phys_in, phys_out, right_bond)``: ``phys_in`` is contracted with the
state, ``phys_out`` becomes the new physical leg.

States carry a real ``log_norm``; the represented vector is
``exp(log_norm) * contract(tensors)``. Canonicalization keeps the center tensor at unit
Frobenius norm and moves the scale into ``log_norm``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .tensors import SchmidtSpectrum, truncated_svd


@dataclass(frozen=True)
class TemporalMPS:
    """Open-boundary MPS. Immutable: every operation returns a new instance."""

    tensors: tuple[np.ndarray, ...]
    ortho_center: int | None = None
    log_norm: float = 0.0

    def __post_init__(self) -> None:
        ts = tuple(np.asarray(t, dtype=complex) for t in self.tensors)
        object.__setattr__(self, "tensors", ts)
        if not ts:
            raise ValueError("an MPS needs at least one site")
        for i, t in enumerate(ts):
            if t.ndim != 3:
                raise ValueError(f"site {i} tensor has rank {t.ndim}, expected 3")
        if ts[0].shape[0] != 1 or ts[-1].shape[2] != 1:
            raise ValueError("boundary bonds must have dimension 1")
        for i in range(len(ts) - 1):
            if ts[i].shape[2] != ts[i + 1].shape[0]:
                raise ValueError(f"bond mismatch between sites {i} and {i + 1}")
        if self.ortho_center is not None and not 0 <= self.ortho_center < len(ts):
            raise ValueError("ortho_center out of range")

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def phys_dims(self) -> list[int]:
        return [t.shape[1] for t in self.tensors]

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    def scaled(self, factor: complex) -> TemporalMPS:
        """Return ``factor * self``; the modulus goes into ``log_norm``."""
        factor = complex(factor)
        if factor == 0:
            raise ValueError("cannot scale by zero")
        mag = abs(factor)
        ts = list(self.tensors)
        ts[0] = ts[0] * (factor / mag)
        return TemporalMPS(tuple(ts), self.ortho_center, self.log_norm + float(np.log(mag)))


# Backwards-compatible name for spatial chains (TEBD uses the same container).
SpatialMPS = TemporalMPS


@dataclass(frozen=True)
class TransferMPO:
    """MPO with tensors ``(left_bond, phys_in, phys_out, right_bond)``."""

    tensors: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        ts = tuple(np.asarray(t, dtype=complex) for t in self.tensors)
        object.__setattr__(self, "tensors", ts)
        for i, t in enumerate(ts):
            if t.ndim != 4:
                raise ValueError(f"MPO site {i} has rank {t.ndim}, expected 4")
        if ts[0].shape[0] != 1 or ts[-1].shape[3] != 1:
            raise ValueError("MPO boundary bonds must have dimension 1")
        for i in range(len(ts) - 1):
            if ts[i].shape[3] != ts[i + 1].shape[0]:
                raise ValueError(f"MPO bond mismatch between sites {i} and {i + 1}")

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[3] for t in self.tensors[:-1]]


# ---------------------------------------------------------------- constructors


def product_mps(vectors: Sequence[np.ndarray], log_norm: float = 0.0) -> TemporalMPS:
    return TemporalMPS(tuple(np.asarray(v, dtype=complex).reshape(1, -1, 1) for v in vectors), None, log_norm)


def random_mps(n_sites: int, phys_dim: int, chi: int, rng: np.random.Generator) -> TemporalMPS:
    """Random complex MPS with bonds capped at ``chi`` (and by the exact Hilbert-space bound)."""
    ts = []
    left = 1
    for i in range(n_sites):
        right = min(chi, phys_dim ** (i + 1), phys_dim ** (n_sites - i - 1))
        t = rng.normal(size=(left, phys_dim, right)) + 1j * rng.normal(size=(left, phys_dim, right))
        ts.append(t)
        left = right
    return TemporalMPS(tuple(ts))


def random_mpo(n_sites: int, phys_dim: int, bond: int, rng: np.random.Generator) -> TransferMPO:
    ts = []
    for i in range(n_sites):
        left = 1 if i == 0 else bond
        right = 1 if i == n_sites - 1 else bond
        shape = (left, phys_dim, phys_dim, right)
        ts.append(rng.normal(size=shape) + 1j * rng.normal(size=shape))
    return TransferMPO(tuple(ts))


def identity_mpo(n_sites: int, phys_dim: int) -> TransferMPO:
    eye = np.eye(phys_dim, dtype=complex).reshape(1, phys_dim, phys_dim, 1)
    return TransferMPO(tuple(eye for _ in range(n_sites)))


def from_dense(vec: np.ndarray, n_sites: int, phys_dim: int) -> TemporalMPS:
    """Exact MPS of a dense vector (row-major leg order) by successive SVDs."""
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    if vec.size != phys_dim**n_sites:
        raise ValueError("vector size does not match phys_dim ** n_sites")
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise ValueError("cannot build an MPS of the zero vector")
    rest = (vec / norm).reshape(1, -1)
    ts = []
    for _ in range(n_sites - 1):
        left = rest.shape[0]
        mat = rest.reshape(left * phys_dim, -1)
        u, s, vh, _ = truncated_svd(mat, None, 1e-15)
        ts.append(u.reshape(left, phys_dim, -1))
        rest = s[:, None] * vh
    ts.append(rest.reshape(rest.shape[0], phys_dim, 1))
    return TemporalMPS(tuple(ts), n_sites - 1, float(np.log(norm)))


def to_dense(m: TemporalMPS) -> np.ndarray:
    """Full state vector including the ``log_norm`` scale. Small instances only."""
    out = m.tensors[0].reshape(-1, m.tensors[0].shape[2])
    for t in m.tensors[1:]:
        out = (out @ t.reshape(t.shape[0], -1)).reshape(-1, t.shape[2])
    return out.reshape(-1) * np.exp(m.log_norm)


def mpo_to_dense(o: TransferMPO) -> np.ndarray:
    """Dense matrix ``M[out, in]`` of an MPO."""
    acc = np.ones((1, 1, 1), dtype=complex)  # (in, out, bond)
    for w in o.tensors:
        acc = np.einsum("abl,lcdr->acbdr", acc, w)
        acc = acc.reshape(acc.shape[0] * acc.shape[1], acc.shape[2] * acc.shape[3], acc.shape[4])
    return acc[:, :, 0].T


def append_product(m: TemporalMPS, vectors: Sequence[np.ndarray]) -> TemporalMPS:
    """Append bond-dimension-1 sites carrying the given vectors."""
    extra = tuple(np.asarray(v, dtype=complex).reshape(1, -1, 1) for v in vectors)
    return TemporalMPS(m.tensors + extra, None, m.log_norm)


# ---------------------------------------------------------------- canonical forms


def _left_step(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    l, d, r = a.shape
    q, rr = np.linalg.qr(a.reshape(l * d, r))
    return q.reshape(l, d, q.shape[1]), np.tensordot(rr, b, axes=(1, 0))


def _right_step(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Make ``b`` a right isometry, pushing the remainder into ``a``."""
    l, d, r = b.shape
    q, rr = np.linalg.qr(b.reshape(l, d * r).T)
    b_new = q.T.reshape(q.shape[1], d, r)
    return np.tensordot(a, rr.T, axes=(2, 0)), b_new


def canonicalize(m: TemporalMPS, center: int) -> TemporalMPS:
    """Mixed-canonical form with orthogonality center ``center``.

    Sites left (right) of the center become left (right) isometries; the center tensor
    is normalized and its norm is moved into ``log_norm``.
    """
    n = m.n_sites
    if not 0 <= center < n:
        raise ValueError(f"center {center} out of range for {n} sites")
    ts = list(m.tensors)
    if m.ortho_center is None:
        lo, hi = 0, n - 1
    else:
        lo = hi = m.ortho_center
    for i in range(lo, center):
        ts[i], ts[i + 1] = _left_step(ts[i], ts[i + 1])
    for i in range(hi, center, -1):
        ts[i - 1], ts[i] = _right_step(ts[i - 1], ts[i])
    norm = float(np.linalg.norm(ts[center]))
    log_norm = m.log_norm
    if norm > 0.0:
        ts[center] = ts[center] / norm
        log_norm += float(np.log(norm))
    return TemporalMPS(tuple(ts), center, log_norm)


def is_canonical(m: TemporalMPS, atol: float = 1e-12) -> bool:
    if m.ortho_center is None:
        return False
    for i, t in enumerate(m.tensors):
        l, d, r = t.shape
        if i < m.ortho_center:
            mat = t.reshape(l * d, r)
            if not np.allclose(mat.conj().T @ mat, np.eye(r), atol=atol):
                return False
        elif i > m.ortho_center:
            mat = t.reshape(l, d * r)
            if not np.allclose(mat @ mat.conj().T, np.eye(l), atol=atol):
                return False
    return True


# ---------------------------------------------------------------- truncation


def compress(m: TemporalMPS, chi: int | None, tol: float = 0.0) -> tuple[TemporalMPS, float]:
    """Truncate every bond to at most ``chi`` by one canonical SVD sweep.

    Returns the compressed state (center at site 0) and the discarded weight
    ``1 - prod(1 - eps_b)``, i.e. the fraction of squared norm projected away. Because
    the sweep runs from a left-canonical state, the truncations are nested orthogonal
    projections and ``|<m|m'>|^2 / (<m|m><m'|m'>) = 1 - discarded`` holds exactly.
    """
    if chi is not None and chi < 1:
        raise ValueError("chi must be >= 1")
    n = m.n_sites
    m = canonicalize(m, n - 1)
    if n == 1:
        return m, 0.0
    ts = list(m.tensors)
    kept = 1.0
    for i in range(n - 1, 0, -1):
        l, d, r = ts[i].shape
        u, s, vh, eps = truncated_svd(ts[i].reshape(l, d * r), chi, tol)
        kept *= 1.0 - eps
        ts[i] = vh.reshape(-1, d, r)
        ts[i - 1] = np.tensordot(ts[i - 1], u * s[None, :], axes=(2, 0))
    norm = float(np.linalg.norm(ts[0]))
    log_norm = m.log_norm
    if norm > 0.0:
        ts[0] = ts[0] / norm
        log_norm += float(np.log(norm))
    return TemporalMPS(tuple(ts), 0, log_norm), 1.0 - kept


def apply_mpo(
    o: TransferMPO,
    m: TemporalMPS,
    chi: int | None = None,
    tol: float = 0.0,
    return_discarded: bool = False,
) -> TemporalMPS | tuple[TemporalMPS, float]:
    """Apply an MPO to an MPS and compress the result to bond dimension ``chi``.

    Zip-up contraction (right-canonical input, left-to-right SVD sweep with a relaxed
    cap of ``2 * chi``) followed by a canonical compression sweep. With ``chi=None`` or
    ``chi >= chi_in * chi_mpo`` nothing is truncated and the product is exact.
    """
    if o.n_sites != m.n_sites:
        raise ValueError(f"site count mismatch: MPO {o.n_sites}, MPS {m.n_sites}")
    for i, (w, a) in enumerate(zip(o.tensors, m.tensors)):
        if w.shape[1] != a.shape[1]:
            raise ValueError(f"physical dimension mismatch at site {i}: {w.shape[1]} vs {a.shape[1]}")
    n = m.n_sites
    m = canonicalize(m, 0)
    zip_chi = None if chi is None else 2 * chi
    zip_tol = 0.1 * tol
    carry = np.ones((1, 1, 1), dtype=complex)  # (new_bond, mpo_bond, old_bond)
    out = []
    kept = 1.0
    for i in range(n):
        a = m.tensors[i]
        w = o.tensors[i]
        x = np.tensordot(carry, a, axes=(2, 0))  # (n, d, p, m)
        x = np.tensordot(x, w, axes=([1, 2], [0, 1]))  # (n, m, q, e)
        x = x.transpose(0, 2, 3, 1)  # (n, q, e, m)
        nb, q, e, mb = x.shape
        if i == n - 1:
            out.append(x.reshape(nb, q, 1))
            break
        u, s, vh, eps = truncated_svd(x.reshape(nb * q, e * mb), zip_chi, zip_tol)
        kept *= 1.0 - eps
        out.append(u.reshape(nb, q, -1))
        carry = (s[:, None] * vh).reshape(-1, e, mb)
    res = TemporalMPS(tuple(out), None, m.log_norm)
    # the zip-up leaves isometries on the left; canonicalize only normalizes the last site
    res = canonicalize(TemporalMPS(res.tensors, n - 1, res.log_norm), n - 1)
    res, disc = compress(res, chi, tol)
    total = 1.0 - kept * (1.0 - disc)
    if return_discarded:
        return res, total
    return res


# ---------------------------------------------------------------- measurements


def overlap(a: TemporalMPS, b: TemporalMPS) -> complex:
    """``<a|b>`` including both scale factors (``a`` is conjugated)."""
    raw = _raw_overlap(a, b)
    return complex(raw * np.exp(a.log_norm + b.log_norm))


def _raw_overlap(a: TemporalMPS, b: TemporalMPS) -> complex:
    if a.n_sites != b.n_sites or a.phys_dims != b.phys_dims:
        raise ValueError("overlap needs equal site counts and physical dimensions")
    env = np.ones((1, 1), dtype=complex)
    for x, y in zip(a.tensors, b.tensors):
        env = np.tensordot(env, x.conj(), axes=(0, 0))  # (b_l, d, a_r)
        env = np.tensordot(env, y, axes=([0, 1], [0, 1]))  # (a_r, b_r)
    return complex(env[0, 0])


def norm_squared(m: TemporalMPS) -> float:
    return float(np.real(_raw_overlap(m, m))) * float(np.exp(2 * m.log_norm))


def fidelity(a: TemporalMPS, b: TemporalMPS) -> float:
    """``|<a|b>|^2 / (<a|a><b|b>)``, computed scale-free."""
    na = np.real(_raw_overlap(a, a))
    nb = np.real(_raw_overlap(b, b))
    if na <= 0 or nb <= 0:
        raise ValueError("fidelity undefined for a zero-norm state")
    return float(abs(_raw_overlap(a, b)) ** 2 / (na * nb))


def bond_spectrum(m: TemporalMPS, cut: int) -> SchmidtSpectrum:
    """Schmidt values across bond ``cut`` (between sites ``cut`` and ``cut + 1``)."""
    if not 0 <= cut < m.n_sites - 1:
        raise ValueError(f"cut {cut} out of range for {m.n_sites} sites")
    c = canonicalize(m, cut)
    t = c.tensors[cut]
    if np.linalg.norm(t) == 0:
        raise ValueError("zero-norm state has no Schmidt spectrum")
    l, d, r = t.shape
    s = np.linalg.svd(t.reshape(l * d, r), compute_uv=False)
    return SchmidtSpectrum(values=s, cut=cut)


def cut_entropy(m: TemporalMPS, cut: int) -> float:
    """Von Neumann entanglement entropy (nats) across bond ``cut``."""
    return bond_spectrum(m, cut).entropy()


def all_spectra(m: TemporalMPS) -> list[SchmidtSpectrum]:
    """Schmidt spectra at every bond from a single sweep."""
    n = m.n_sites
    c = canonicalize(m, n - 1)
    if np.linalg.norm(c.tensors[-1]) == 0:
        raise ValueError("zero-norm state has no Schmidt spectrum")
    ts = list(c.tensors)
    out: list[SchmidtSpectrum] = [SchmidtSpectrum(np.ones(1))] * (n - 1)
    for i in range(n - 1, 0, -1):
        l, d, r = ts[i].shape
        u, s, vh = np.linalg.svd(ts[i].reshape(l, d * r), full_matrices=False)
        out[i - 1] = SchmidtSpectrum(values=s, cut=i - 1)
        ts[i] = vh.reshape(-1, d, r)
        ts[i - 1] = np.tensordot(ts[i - 1], u * s[None, :], axes=(2, 0))
    return out


def entropy_profile(m: TemporalMPS) -> list[float]:
    return [sp.entropy() for sp in all_spectra(m)]


def with_log_norm(m: TemporalMPS, log_norm: float) -> TemporalMPS:
    return replace(m, log_norm=log_norm)
