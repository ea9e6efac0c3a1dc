"""Exact dense references for small instances.

Everything here is built directly from ``exp(ig sum X) exp(iJ sum ZZ) exp(ih sum Z)`` on
explicit bit strings; the brickwork gates of :mod:`tempim.circuit` are never used, so
these routines can serve as independent checks of the tensor-network path.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .circuit import PAULI_I, VEC_ID, CircuitParams, initial_leg_vector, kick
from .errors import SizeCapError
from .tensors import entropy_from_values

# 2**26 complex entries = 1 GiB
MAX_ENTRIES = 2**26
MAX_STATE_SITES = 12
MAX_OPERATOR_SITES = 10
MAX_DENSITY_SITES = 7


def _spins(n: int) -> np.ndarray:
    """``z[k, j]`` = +-1 value of spin ``j`` in basis state ``k`` (site 0 is the most significant bit)."""
    k = np.arange(2**n)
    bits = (k[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    return 1 - 2 * bits


def diagonal_phases(
    n: int,
    J: float,
    h: float,
    bonds: Sequence[tuple[int, int]] | None = None,
    field_sites: Sequence[int] | None = None,
) -> np.ndarray:
    """Diagonal of ``exp(iJ sum_bonds ZZ) exp(ih sum_sites Z)``; defaults to an open chain."""
    z = _spins(n)
    if bonds is None:
        bonds = [(j, j + 1) for j in range(n - 1)]
    if field_sites is None:
        field_sites = range(n)
    phase = np.zeros(2**n)
    for i, j in bonds:
        phase += J * z[:, i] * z[:, j]
    for j in field_sites:
        phase += h * z[:, j]
    return np.exp(1j * phase)


def kick_matrix(n: int, g: float, sites: Sequence[int] | None = None) -> np.ndarray:
    if sites is None:
        sites = range(n)
    sites = set(sites)
    k = kick(g)
    out = np.ones((1, 1), dtype=complex)
    for j in range(n):
        out = np.kron(out, k if j in sites else PAULI_I)
    return out


def floquet_operator(
    p: CircuitParams,
    n: int,
    kick_sites: Sequence[int] | None = None,
    field_sites: Sequence[int] | None = None,
    bonds: Sequence[tuple[int, int]] | None = None,
) -> np.ndarray:
    """Dense ``exp(ig sum X) exp(iJ sum ZZ) exp(ih sum Z)`` on ``n`` open-chain sites."""
    if n > MAX_STATE_SITES:
        raise SizeCapError(f"dense Floquet operator limited to {MAX_STATE_SITES} sites, got {n}")
    d = diagonal_phases(n, p.J, p.h, bonds, field_sites)
    return kick_matrix(n, p.g, kick_sites) * d[None, :]


def _apply_kicks(psi: np.ndarray, n: int, g: float) -> np.ndarray:
    k = kick(g)
    shape = psi.shape
    psi = psi.reshape((2,) * n + shape[1:])
    for j in range(n):
        psi = np.moveaxis(np.tensordot(k, psi, axes=(1, j)), 0, j)
    return psi.reshape(shape)


# ---------------------------------------------------------------- exact IMs


def environment_unitary(p: CircuitParams, L: int) -> np.ndarray:
    """One period on sites ``0..L`` as seen by the right-environment IM.

    Site 0 is the subsystem wire: it receives its field and the coupling to site 1, but
    not its kick. The far edge site ``L`` has no field (it lacks its odd bond).
    """
    n = L + 1
    return floquet_operator(
        p,
        n,
        kick_sites=range(1, n),
        field_sites=range(0, n - 1),
        bonds=[(j, j + 1) for j in range(n - 1)],
    )


def exact_im(p: CircuitParams, L: int, boundary: str = "obc") -> np.ndarray:
    """Dense IM vector of an ``L``-site open environment, legs ``a_1, b_1, ..., a_T, b_T``."""
    if boundary != "obc":
        raise ValueError(f"unsupported boundary {boundary!r}")
    if L < 0 or L % 1:
        raise ValueError("L must be a nonnegative integer")
    de = 2**L
    if de * de * 16**p.T > MAX_ENTRIES or L > 8:
        raise SizeCapError(f"exact IM with L={L}, T={p.T} exceeds the dense size cap")
    u = environment_unitary(p, L)
    ud = u.conj().T
    rho = p.rho0 if p.rho0 is not None else 0.5 * PAULI_I
    rho_env = np.ones((1, 1), dtype=complex)
    for _ in range(L):
        rho_env = np.kron(rho_env, rho)
    v = rho_env.reshape(de, de, 1)
    for _ in range(p.T):
        r = v.shape[2]
        new = np.empty((de, de, r, 4, 4), dtype=complex)
        for s in range(2):
            for sb in range(2):
                x = np.zeros((2, de, 2, de, r), dtype=complex)
                x[s, :, sb, :, :] = v
                x = x.reshape(2 * de, 2 * de, r)
                y = np.tensordot(u, x, axes=(1, 0))  # U x
                y = np.tensordot(y, ud, axes=(1, 0))  # (ket, r, bra) x U^dagger
                y = y.reshape(2, de, r, 2, de).transpose(1, 4, 2, 0, 3)
                new[:, :, :, 2 * s + sb, :] = y.reshape(de, de, r, 4)
        v = new.reshape(de, de, r * 16)
    return np.einsum("kkr->r", v)


def exact_entropy(v: np.ndarray, cut: int, leg_dim: int = 4) -> float:
    """Entanglement entropy (nats) of a dense vector across bond ``cut``.

    Bond ``cut`` separates legs ``0..cut`` from the rest, matching MPS bond numbering.
    """
    v = np.asarray(v).reshape(-1)
    n_legs = int(round(np.log(v.size) / np.log(leg_dim)))
    if not 0 <= cut < n_legs - 1:
        raise ValueError(f"cut {cut} out of range for {n_legs} legs")
    if np.linalg.norm(v) == 0:
        raise ValueError("zero vector has no entanglement entropy")
    s = np.linalg.svd(v.reshape(leg_dim ** (cut + 1), -1), compute_uv=False)
    return entropy_from_values(s)


# ---------------------------------------------------------------- exact dynamics


def _product(ops: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for o in ops:
        out = np.kron(out, o)
    return out


def _embed(op: np.ndarray, site: int, n: int) -> np.ndarray:
    return _product([op if j == site else PAULI_I for j in range(n)])


def _is_pure(rho: np.ndarray) -> bool:
    return abs(np.trace(rho @ rho) - 1) < 1e-12


def _evolve_state(psi: np.ndarray, p: CircuitParams, n: int, diag: np.ndarray) -> np.ndarray:
    psi = psi * diag
    return _apply_kicks(psi, n, p.g)


def exact_polarization(
    p: CircuitParams, n: int, op: np.ndarray, T: int | None = None, site: int | None = None
) -> list[tuple[int, complex]]:
    """``<op_site(t)>`` for ``t = 0..T`` on an ``n``-site open chain from ``rho0`` on every site."""
    T = p.T if T is None else T
    site = n // 2 if site is None else site
    rho = p.rho0 if p.rho0 is not None else 0.5 * PAULI_I
    diag = diagonal_phases(n, p.J, p.h)
    out = []
    if _is_pure(rho):
        if n > MAX_STATE_SITES:
            raise SizeCapError(f"state-vector oracle limited to {MAX_STATE_SITES} sites")
        w, vecs = np.linalg.eigh(rho)
        phi = vecs[:, np.argmax(w)]
        psi = _product([phi.reshape(2, 1)] * n).reshape(-1)
        for t in range(T + 1):
            if t:
                psi = _evolve_state(psi, p, n, diag)
            x = psi.reshape((2,) * n)
            ox = np.moveaxis(np.tensordot(op, x, axes=(1, site)), 0, site)
            out.append((t, complex(np.vdot(x, ox))))
        return out
    if n > MAX_DENSITY_SITES:
        raise SizeCapError(f"density-matrix oracle limited to {MAX_DENSITY_SITES} sites")
    u = floquet_operator(p, n)
    r = _product([rho] * n)
    big = _embed(op, site, n)
    for t in range(T + 1):
        if t:
            r = u @ r @ u.conj().T
        out.append((t, complex(np.trace(big @ r))))
    return out


def exact_autocorrelator(
    p: CircuitParams, n: int, op: np.ndarray, T: int | None = None, site: int | None = None
) -> list[tuple[int, complex]]:
    """Infinite-temperature ``2**-n Tr[op(t) op(0)]`` on an ``n``-site open chain."""
    if n > MAX_OPERATOR_SITES:
        raise SizeCapError(f"operator oracle limited to {MAX_OPERATOR_SITES} sites")
    T = p.T if T is None else T
    site = n // 2 if site is None else site
    u = floquet_operator(p, n)
    ud = u.conj().T
    a0 = _embed(op, site, n)
    a = a0.copy()
    out = []
    for t in range(T + 1):
        if t:
            a = ud @ a @ u
        out.append((t, complex(np.trace(a @ a0) / 2**n)))
    return out


def exact_insertion_value(
    p: CircuitParams,
    n: int,
    site: int,
    insertions: Sequence[tuple[int, np.ndarray, str]],
    rho_sites: Sequence[np.ndarray] | None = None,
    kick_sites: Sequence[int] | None = None,
    field_sites: Sequence[int] | None = None,
) -> complex:
    """Keldysh value ``Tr[... O_k ... rho ...]`` with operators inserted at half-steps.

    Half-step ``2t`` is the end of period ``t``; ``2t - 1`` sits between the diagonal
    part and the kicks of period ``t``. ``side`` is ``"forward"`` (``A rho``),
    ``"backward"`` (``rho A^dagger``) or ``"both"`` (``A rho A^dagger``). Density-matrix
    evolution, so ``n`` is small.
    """
    if n > MAX_DENSITY_SITES:
        raise SizeCapError(f"density-matrix oracle limited to {MAX_DENSITY_SITES} sites")
    if rho_sites is None:
        rho = p.rho0 if p.rho0 is not None else 0.5 * PAULI_I
        rho_sites = [rho] * n
    r = _product(rho_sites)
    d = np.diag(diagonal_phases(n, p.J, p.h, None, field_sites))
    k = kick_matrix(n, p.g, kick_sites)
    by_time: dict[int, list[tuple[np.ndarray, str]]] = {}
    for idx, op, side in insertions:
        by_time.setdefault(int(idx), []).append((_embed(op, site, n), side))

    def insert(r: np.ndarray, idx: int) -> np.ndarray:
        for a, side in by_time.get(idx, []):
            if side == "forward":
                r = a @ r
            elif side == "backward":
                r = r @ a.conj().T
            else:
                r = a @ r @ a.conj().T
        return r

    r = insert(r, 0)
    for tau in range(1, p.T + 1):
        r = d @ r @ d.conj().T
        r = insert(r, 2 * tau - 1)
        r = k @ r @ k.conj().T
        r = insert(r, 2 * tau)
    return complex(np.trace(r))


def single_site_expectation(rho: np.ndarray, op: np.ndarray) -> complex:
    return complex(np.trace(op @ rho))


def im_leg_norm_check(p: CircuitParams) -> float:
    """Trace of the single-site initial state as seen through a folded leg (always 1)."""
    return float(np.real(VEC_ID @ initial_leg_vector(p)))


# ---------------------------------------------------------------- free-fermion check


def parity_sector_phases(g: float, J: float, n: int) -> dict[int, np.ndarray]:
    """Sorted eigenphases of the ``h = 0`` periodic-chain Floquet operator per parity sector.

    The operator commutes with ``P = prod X``; after a Hadamard rotation on every site ``P``
    is diagonal and each sector is diagonalized separately. Keys are ``+1`` and ``-1``.
    """
    if n > MAX_STATE_SITES or n < 3:
        raise SizeCapError(f"parity-sector oracle needs 3 <= n <= {MAX_STATE_SITES}")
    bonds = [(j, (j + 1) % n) for j in range(n)]
    u = floquet_operator(CircuitParams(g, J, 0.0), n, bonds=bonds)
    had = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    x = u.reshape((2,) * (2 * n))
    for ax in range(2 * n):
        x = np.moveaxis(np.tensordot(had, x, axes=(1, ax)), 0, ax)
    x = x.reshape(2**n, 2**n)
    # in the rotated basis bit 0 means X = +1, so P = (-1)**popcount
    pop = np.array([bin(b).count("1") for b in range(2**n)])
    out = {}
    for sec, mask in ((1, pop % 2 == 0), (-1, pop % 2 == 1)):
        block = x[np.ix_(mask, mask)]
        out[sec] = np.sort(np.angle(np.linalg.eigvals(block)))
    return out


def free_fermion_phases(omegas: np.ndarray, parity: int) -> np.ndarray:
    """All ``sum_{k in S} omega_k`` over occupation sets ``S`` with ``(-1)**|S| == parity``."""
    omegas = np.asarray(omegas, dtype=float)
    tot = np.zeros(1)
    cnt = np.zeros(1, dtype=int)
    for w in omegas:
        tot = np.concatenate([tot, tot + w])
        cnt = np.concatenate([cnt, cnt + 1])
    keep = (-1) ** cnt == parity
    return tot[keep]


def _circle_gap(a: np.ndarray, b: np.ndarray) -> float:
    """Largest distance from a point of ``a`` to the nearest point of sorted ``b`` on the circle."""
    ext = np.concatenate([b[-1:] - 2 * np.pi, b, b[:1] + 2 * np.pi])
    pos = np.searchsorted(ext, a)
    return float(np.max(np.minimum(np.abs(ext[pos] - a), np.abs(a - ext[pos - 1]))))


def spectrum_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Hausdorff distance between two phase sets on the circle, minimized over a global offset."""
    a = np.sort(np.mod(np.asarray(a, dtype=float), 2 * np.pi))
    b = np.sort(np.mod(np.asarray(b, dtype=float), 2 * np.pi))
    if a.size != b.size:
        raise ValueError("phase sets differ in size")
    best = np.inf
    for shift in np.mod(a[0] - b, 2 * np.pi):
        c = np.sort(np.mod(b + shift, 2 * np.pi))
        best = min(best, max(_circle_gap(a, c), _circle_gap(c, a)))
        if best < 1e-12:
            break
    return best
