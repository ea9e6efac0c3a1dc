"""Time-evolving block decimation on a finite open chain.

The chain uses exactly the brickwork layers of :func:`tempim.circuit.build_period_gates`,
so TEBD and the influence-matrix route simulate the same circuit. Only the middle site
is measured; with ``L >= 2T + 4`` it stays outside the causal reach of both edges.

States have physical dimension 2. Heisenberg-picture operators are vectorized row-major
(dimension 4, ``a = 2*s + sbar``) and evolve with the folded adjoint gates in reverse
layer order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .circuit import (
    PAULIS,
    VEC_ID,
    CircuitParams,
    build_period_gates,
    chain_layout,
    fold_gate,
    fold_single,
)
from .errors import ConfigError
from .tensors import truncated_svd


@dataclass
class TEBDResult:
    """Measured series, cumulative discarded weight and squared norm after each period."""

    series: list[tuple[int, float]]
    discarded: list[float] = field(default_factory=list)
    norms: list[float] = field(default_factory=list)

    @property
    def total_discarded(self) -> float:
        return self.discarded[-1] if self.discarded else 0.0


class _Chain:
    """Open-boundary MPS ``(l, d, r)`` with a tracked orthogonality center."""

    def __init__(self, tensors: list[np.ndarray], chi: int | None, tol: float):
        self.t = tensors
        self.center = 0
        self.chi = chi
        self.tol = tol
        self.kept = 1.0

    @property
    def discarded(self) -> float:
        return 1.0 - self.kept

    def _shift_right(self) -> None:
        i = self.center
        a = self.t[i]
        l, d, r = a.shape
        q, rr = scipy.linalg.qr(a.reshape(l * d, r), mode="economic")
        self.t[i] = q.reshape(l, d, -1)
        self.t[i + 1] = np.tensordot(rr, self.t[i + 1], axes=(1, 0))
        self.center = i + 1

    def _shift_left(self) -> None:
        i = self.center
        a = self.t[i]
        l, d, r = a.shape
        q, rr = scipy.linalg.qr(a.reshape(l, d * r).T, mode="economic")
        self.t[i] = q.T.reshape(-1, d, r)
        self.t[i - 1] = np.tensordot(self.t[i - 1], rr.T, axes=(2, 0))
        self.center = i - 1

    def move_center(self, site: int) -> None:
        while self.center < site:
            self._shift_right()
        while self.center > site:
            self._shift_left()

    def apply_one(self, u: np.ndarray, site: int) -> None:
        self.t[site] = np.tensordot(u, self.t[site], axes=(1, 1)).transpose(1, 0, 2)

    def apply_two(self, g: np.ndarray, i: int, absorb_right: bool) -> None:
        """Apply ``g[o1, o2, i1, i2]`` on sites ``(i, i+1)``; the center must be on one of them."""
        a, b = self.t[i], self.t[i + 1]
        l, d, _ = a.shape
        r = b.shape[2]
        theta = np.tensordot(a, b, axes=(2, 0))  # (l, d, d, r)
        theta = np.tensordot(g, theta, axes=([2, 3], [1, 2]))  # (o1, o2, l, r)
        mat = theta.transpose(2, 0, 1, 3).reshape(l * d, d * r)
        u, s, vh, disc = truncated_svd(mat, self.chi, self.tol)
        self.kept *= 1.0 - disc
        k = s.size
        if absorb_right:
            self.t[i] = u.reshape(l, d, k)
            self.t[i + 1] = (s[:, None] * vh).reshape(k, d, r)
            self.center = i + 1
        else:
            self.t[i] = (u * s[None, :]).reshape(l, d, k)
            self.t[i + 1] = vh.reshape(k, d, r)
            self.center = i

    def apply_layer(self, g: np.ndarray, bonds: tuple[tuple[int, int], ...]) -> None:
        if not bonds:
            return
        firsts = [i for i, _ in bonds]
        if abs(self.center - firsts[0]) <= abs(self.center - firsts[-1] - 1):
            for i in firsts:
                self.move_center(i)
                self.apply_two(g, i, absorb_right=True)
        else:
            for i in reversed(firsts):
                self.move_center(i + 1)
                self.apply_two(g, i, absorb_right=False)

    def contract_with(self, vecs: list[np.ndarray]) -> complex:
        """``sum_a prod_j vecs[j][a_j] psi[a]`` for a product of covectors."""
        env = np.ones(1, dtype=complex)
        for a, v in zip(self.t, vecs):
            env = np.tensordot(env, np.tensordot(a, v, axes=(1, 0)), axes=(0, 0))
        return complex(env[0])

    def local_expectation(self, op: np.ndarray, site: int) -> complex:
        """``<psi|op_site|psi> / <psi|psi>`` (center moved to ``site``)."""
        self.move_center(site)
        a = self.t[site]
        num = np.vdot(a, np.tensordot(op, a, axes=(1, 1)).transpose(1, 0, 2))
        return complex(num / np.vdot(a, a))

    def norm_squared(self) -> float:
        a = self.t[self.center]
        return float(np.vdot(a, a).real)


def _check_size(L: int, T: int) -> None:
    if int(T) != T or T < 0:
        raise ConfigError(f"T must be a nonnegative integer, got {T}")
    if L < 2 * T + 4:
        raise ConfigError(f"L={L} is too small for T={T}; need L >= 2T + 4 = {2 * T + 4}")


def _op(axis: str | np.ndarray) -> np.ndarray:
    if isinstance(axis, str):
        try:
            return PAULIS[axis.upper()]
        except KeyError:
            raise ConfigError(f"unknown axis {axis!r}") from None
    op = np.asarray(axis, dtype=complex)
    if op.shape != (2, 2):
        raise ConfigError("operator must be 2x2")
    return op


def _pure_vector(rho: np.ndarray) -> np.ndarray:
    if abs(np.trace(rho @ rho) - 1) > 1e-10:
        raise ConfigError("TEBD state evolution needs a pure single-site initial state")
    w, v = np.linalg.eigh(rho)
    return v[:, np.argmax(w)]


def _state_period(chain: _Chain, p: CircuitParams, L: int) -> None:
    gates = build_period_gates(p)
    lay = chain_layout(L)
    for s in lay.field_sites:
        chain.apply_one(gates.field, s)
    chain.apply_layer(gates.gate_odd.reshape(2, 2, 2, 2), lay.odd_bonds)
    chain.apply_layer(gates.gate_even.reshape(2, 2, 2, 2), lay.even_bonds)
    for s in lay.kick_sites:
        chain.apply_one(gates.kick, s)


def _operator_period(chain: _Chain, p: CircuitParams, L: int) -> None:
    # O -> U^dagger O U: undo the layers from the last one backwards
    gates = build_period_gates(p)
    lay = chain_layout(L)
    for s in lay.kick_sites:
        chain.apply_one(fold_single(gates.kick.conj().T), s)
    chain.apply_layer(fold_gate(gates.gate_even.conj().T), lay.even_bonds)
    chain.apply_layer(fold_gate(gates.gate_odd.conj().T), lay.odd_bonds)
    for s in lay.field_sites:
        chain.apply_one(fold_single(gates.field.conj().T), s)


def tebd_quench_run(
    p: CircuitParams, L: int, chi: int | None, T: int, axis: str | np.ndarray = "X", tol: float = 0.0
) -> TEBDResult:
    """Schrodinger-picture evolution of the product state ``rho0`` on every site."""
    _check_size(L, T)
    if p.rho0 is None:
        raise ConfigError("tebd_quench needs a pure initial state (rho0 is None)")
    op = _op(axis)
    psi = _pure_vector(p.rho0)
    chain = _Chain([psi.reshape(1, 2, 1).astype(complex) for _ in range(L)], chi, tol)
    mid = L // 2
    series = [(0, float(np.real(chain.local_expectation(op, mid))))]
    disc = [0.0]
    norms = [chain.norm_squared()]
    for t in range(1, T + 1):
        _state_period(chain, p, L)
        series.append((t, float(np.real(chain.local_expectation(op, mid)))))
        disc.append(chain.discarded)
        norms.append(chain.norm_squared())
    return TEBDResult(series, disc, norms)


def tebd_quench(
    p: CircuitParams, L: int, chi: int | None, T: int, axis: str | np.ndarray = "X", tol: float = 0.0
) -> list[tuple[int, float]]:
    """Mid-chain ``<axis(t)>`` for ``t = 0..T``."""
    return tebd_quench_run(p, L, chi, T, axis, tol).series


def tebd_autocorr_run(
    p: CircuitParams, L: int, chi: int | None, T: int, op: str | np.ndarray = "X", tol: float = 0.0
) -> TEBDResult:
    """Heisenberg-picture evolution of the mid-chain operator at infinite temperature."""
    _check_size(L, T)
    a = _op(op)
    mid = L // 2
    tensors = [VEC_ID.reshape(1, 4, 1).copy() for _ in range(L)]
    tensors[mid] = a.reshape(1, 4, 1).copy()
    chain = _Chain(tensors, chi, tol)
    # one QR sweep makes the product chain canonical, so the center carries the norm
    chain.move_center(L - 1)
    # Tr[A B] = vec(A) . vec(B^T); one factor 1/2 per site
    probe = [0.5 * VEC_ID] * L
    probe[mid] = 0.5 * a.T.reshape(4)
    c0 = chain.contract_with(probe)
    if abs(c0) == 0:
        raise ConfigError("operator has vanishing infinite-temperature norm Tr[op op]")
    series = [(0, 1.0)]
    disc = [0.0]
    norms = [chain.norm_squared()]
    for t in range(1, T + 1):
        _operator_period(chain, p, L)
        series.append((t, float(np.real(chain.contract_with(probe) / c0))))
        disc.append(chain.discarded)
        norms.append(chain.norm_squared())
    return TEBDResult(series, disc, norms)


def tebd_autocorr(
    p: CircuitParams, L: int, chi: int | None, T: int, op: str | np.ndarray = "X", tol: float = 0.0
) -> list[tuple[int, float]]:
    """``C(t) = Tr[op(t) op] / Tr[op op]`` on the middle site for ``t = 0..T``."""
    return tebd_autocorr_run(p, L, chi, T, op, tol).series
