"""Keldysh-folded kicked Ising circuit.

One Floquet period ``U = exp(ig sum X) exp(iJ sum ZZ) exp(ih sum Z)`` is written as a
brickwork: the odd layer (bonds (0,1), (2,3), ...) applies ``exp(iJ ZZ)`` together with
the longitudinal fields of both sites, then the even layer (bonds (1,2), (3,4), ...)
applies ``exp(iJ ZZ)`` followed by the kicks of both sites. Everything diagonal commutes,
so the regrouping is exact; open edges receive the single-site factors their missing
bond would have carried.

Folded legs have dimension 4 and index ``a = 2*s + sbar`` (forward spin ``s``, backward
spin ``sbar``), i.e. a row-major vectorized 2x2 operator. A unitary ``u`` acts on a
folded leg as ``kron(u, u.conj())``.

Influence matrix (IM) legs: the environment to the right of the subsystem couples to it
through the odd-layer gate on bond (0, 1). In period ``tau`` the IM has two legs,
``a_tau`` (the subsystem's folded state entering that gate) and ``b_tau`` (leaving it),
stored in the order ``a_1, b_1, a_2, b_2, ...``. With no environment the gate is absent
and each ``b_tau`` is wired straight to ``a_tau``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .mps import TemporalMPS, TransferMPO
from .tensors import truncated_svd

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}

VEC_ID = np.array([1, 0, 0, 1], dtype=complex)
VEC_MIX = 0.5 * VEC_ID

UNITARY_ATOL = 1e-12


@dataclass(frozen=True)
class CircuitParams:
    """Kicked Ising couplings (radians) and run length.

    ``rho0`` is the single-site initial density matrix; ``None`` means infinite
    temperature.
    """

    g: float
    J: float
    h: float = 0.0
    T: int = 1
    rho0: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if int(self.T) != self.T or self.T < 1:
            raise ValueError(f"T must be a positive integer, got {self.T}")
        if self.rho0 is not None:
            rho = np.asarray(self.rho0, dtype=complex)
            validate_density_matrix(rho)
            object.__setattr__(self, "rho0", rho)

    @property
    def infinite_temperature(self) -> bool:
        return self.rho0 is None

    def with_T(self, T: int) -> CircuitParams:
        return CircuitParams(self.g, self.J, self.h, T, self.rho0)


def validate_density_matrix(rho: np.ndarray, atol: float = 1e-10) -> None:
    if rho.shape != (2, 2):
        raise ValueError(f"single-site density matrix must be 2x2, got {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=atol):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > atol:
        raise ValueError("density matrix does not have unit trace")
    if np.linalg.eigvalsh(rho).min() < -atol:
        raise ValueError("density matrix is not positive semidefinite")


def pure_state(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def x_polarized() -> np.ndarray:
    """``|+><+|``, the state fully polarized along X."""
    return pure_state(np.array([1.0, 1.0]))


# ---------------------------------------------------------------- gates


def kick(g: float) -> np.ndarray:
    return np.cos(g) * PAULI_I + 1j * np.sin(g) * PAULI_X


def field_rotation(h: float) -> np.ndarray:
    return np.diag([np.exp(1j * h), np.exp(-1j * h)])


def ising_coupling(J: float) -> np.ndarray:
    return np.diag(np.exp(1j * J * np.array([1.0, -1.0, -1.0, 1.0])))


@dataclass(frozen=True)
class PeriodGates:
    gate_even: np.ndarray
    gate_odd: np.ndarray
    kick: np.ndarray
    field: np.ndarray


def build_period_gates(p: CircuitParams) -> PeriodGates:
    k = kick(p.g)
    f = field_rotation(p.h)
    zz = ising_coupling(p.J)
    return PeriodGates(
        gate_even=np.kron(k, k) @ zz,
        gate_odd=zz @ np.kron(f, f),
        kick=k,
        field=f,
    )


@dataclass(frozen=True)
class ChainLayout:
    """Brickwork layout of an open chain of ``n`` sites.

    ``field_sites`` miss an odd bond and get ``exp(ihZ)`` before the odd layer;
    ``kick_sites`` miss an even bond and get ``exp(igX)`` after the even layer.
    """

    n: int
    odd_bonds: tuple[tuple[int, int], ...]
    even_bonds: tuple[tuple[int, int], ...]
    field_sites: tuple[int, ...]
    kick_sites: tuple[int, ...]


def chain_layout(n: int) -> ChainLayout:
    if n < 1:
        raise ValueError("chain needs at least one site")
    odd = tuple((i, i + 1) for i in range(0, n - 1, 2))
    even = tuple((i, i + 1) for i in range(1, n - 1, 2))
    in_odd = {s for b in odd for s in b}
    in_even = {s for b in even for s in b}
    return ChainLayout(
        n,
        odd,
        even,
        tuple(i for i in range(n) if i not in in_odd),
        tuple(i for i in range(n) if i not in in_even),
    )


def _apply_two_site(u: np.ndarray, psi: np.ndarray, i: int, n: int) -> np.ndarray:
    psi = psi.reshape((2,) * n)
    psi = np.tensordot(u.reshape(2, 2, 2, 2), psi, axes=([2, 3], [i, i + 1]))
    return np.moveaxis(psi, [0, 1], [i, i + 1]).reshape(-1)


def _apply_one_site(u: np.ndarray, psi: np.ndarray, i: int, n: int) -> np.ndarray:
    psi = psi.reshape((2,) * n)
    psi = np.tensordot(u, psi, axes=(1, i))
    return np.moveaxis(psi, 0, i).reshape(-1)


def layered_period_matrix(p: CircuitParams, n: int) -> np.ndarray:
    """Dense one-period operator of an ``n``-site open chain, assembled from the layers."""
    gates = build_period_gates(p)
    lay = chain_layout(n)
    out = np.empty((2**n, 2**n), dtype=complex)
    for col in range(2**n):
        psi = np.zeros(2**n, dtype=complex)
        psi[col] = 1.0
        for s in lay.field_sites:
            psi = _apply_one_site(gates.field, psi, s, n)
        for i, _ in lay.odd_bonds:
            psi = _apply_two_site(gates.gate_odd, psi, i, n)
        for i, _ in lay.even_bonds:
            psi = _apply_two_site(gates.gate_even, psi, i, n)
        for s in lay.kick_sites:
            psi = _apply_one_site(gates.kick, psi, s, n)
        out[:, col] = psi
    return out


# ---------------------------------------------------------------- folding


def fold_single(u: np.ndarray) -> np.ndarray:
    """4x4 superoperator ``rho -> u rho u^dagger`` on a folded leg."""
    return np.kron(u, u.conj())


def fold_gate(u: np.ndarray, strict: bool = True) -> np.ndarray:
    """Fold a two-site gate into a tensor ``F[out1, out2, in1, in2]`` of folded legs."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4):
        raise ValueError(f"two-site gate must be 4x4, got {u.shape}")
    if not np.allclose(u.conj().T @ u, np.eye(4), atol=UNITARY_ATOL):
        if strict:
            raise ValueError("gate is not unitary")
        import warnings

        warnings.warn("folding a non-unitary gate", stacklevel=2)
    u4 = u.reshape(2, 2, 2, 2)
    f = np.einsum("abcd,efgh->aebfcgdh", u4, u4.conj())
    return f.reshape(4, 4, 4, 4)


def initial_leg_vector(p: CircuitParams) -> np.ndarray:
    if p.rho0 is None:
        return VEC_MIX.copy()
    return np.asarray(p.rho0, dtype=complex).reshape(4)


# ---------------------------------------------------------------- boundary IMs


def build_obc_im(T: int) -> TemporalMPS:
    """IM of an empty environment: each ``b_tau`` wired to ``a_tau``."""
    if T < 1:
        raise ValueError("T must be >= 1")
    eye = np.eye(4, dtype=complex)
    a = eye.reshape(1, 4, 4)
    b = eye.reshape(4, 4, 1)
    return TemporalMPS(tuple(x for _ in range(T) for x in (a, b)))


def build_pd_im(T: int) -> TemporalMPS:
    """Perfect-dephaser IM: ``(1/2) |1> (x) |1>`` per period."""
    if T < 1:
        raise ValueError("T must be >= 1")
    v = VEC_ID.reshape(1, 4, 1)
    return TemporalMPS(tuple(v for _ in range(2 * T)), None, T * float(np.log(0.5)))


# ---------------------------------------------------------------- transfer matrix


def _period_tensor(p: CircuitParams) -> np.ndarray:
    """One period of the dual transfer matrix.

    Index order ``(x1, z2, a_old, a_new, b_old, b_new, x1', z2')`` where ``x1``/``z2``
    are the folded states of the two added sites entering the period.
    """
    gates = build_period_gates(p)
    g_odd = fold_gate(gates.gate_odd)  # (b, y1, a, x1): subsystem side first
    g_even = fold_gate(gates.gate_even)  # (x1', z2', y1, b_old)
    copy = np.eye(4, dtype=complex)  # a_old == z2
    return np.einsum("bYax,XZYB,Pz->xzPaBbXZ", g_odd, g_even, copy, optimize=True)


@lru_cache(maxsize=64)
def _transfer_cached(g: float, J: float, h: float, T: int, rho_key: tuple | None) -> TransferMPO:
    rho0 = None if rho_key is None else np.array(rho_key, dtype=complex).reshape(2, 2)
    p = CircuitParams(g, J, h, T, rho0)
    w = _period_tensor(p)
    mat = w.reshape(16 * 4 * 4, 4 * 4 * 16)
    u, s, vh, _ = truncated_svd(mat, None, 1e-14)
    k = s.size
    sq = np.sqrt(s)
    left = (u * sq[None, :]).reshape(16, 4, 4, k)
    right = (sq[:, None] * vh).reshape(k, 4, 4, 16)
    init = np.kron(initial_leg_vector(p), initial_leg_vector(p))
    final = np.kron(VEC_ID, VEC_ID)
    tensors = []
    for tau in range(T):
        lt = left
        rt = right
        if tau == 0:
            lt = np.tensordot(init, lt, axes=(0, 0))[None, ...]
        if tau == T - 1:
            rt = np.tensordot(rt, final, axes=(3, 0))[..., None]
        tensors += [lt, rt]
    return TransferMPO(tuple(tensors))


def build_transfer_mpo(p: CircuitParams) -> TransferMPO:
    """Dual transfer matrix adding two environment sites next to the subsystem.

    Acts on an IM whose legs sit on the wire of the third site (counting the subsystem
    as site 0) and returns the IM seen by the subsystem.
    """
    key = None if p.rho0 is None else tuple(np.asarray(p.rho0, dtype=complex).reshape(-1).tolist())
    return _transfer_cached(float(p.g), float(p.J), float(p.h), int(p.T), key)
