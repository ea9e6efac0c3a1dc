"""Local dynamics of one spin sandwiched between a left and a right IM.

The subsystem sits at site 0 of an infinite chain. Both environments couple to it
through odd-layer gates, which also carry the subsystem's own field, so the field is
counted twice; the sandwich removes one copy with ``exp(-ihZ)`` and then applies the
kick the subsystem would otherwise have received from an even-layer gate. The chain is
reflection symmetric about site 0 and the IM definition is mirror invariant, so the left
IM is the right IM itself (``mirror_im`` is the identity map, kept explicit).

Half-step ``2t`` is the end of period ``t``; half-step ``2t - 1`` lies after the
coupling/field part of period ``t`` and before its kick.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuit import (
    PAULIS,
    VEC_ID,
    CircuitParams,
    field_rotation,
    fold_single,
    kick,
)
from .mps import TemporalMPS

SIDES = ("forward", "backward", "both")


@dataclass(frozen=True)
class Insertion:
    time: int
    op: np.ndarray
    side: str = "forward"

    def __post_init__(self) -> None:
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}, got {self.side!r}")
        op = np.asarray(self.op, dtype=complex)
        if op.shape != (2, 2):
            raise ValueError("insertions act on a single spin (2x2)")
        object.__setattr__(self, "op", op)

    def superop(self) -> np.ndarray:
        eye = np.eye(2, dtype=complex)
        if self.side == "forward":
            return np.kron(self.op, eye)
        if self.side == "backward":
            return np.kron(eye, self.op.conj())
        return np.kron(self.op, self.op.conj())


def mirror_im(im: TemporalMPS) -> TemporalMPS:
    """Left-environment IM from the right one (identical for the reflection-symmetric chain)."""
    return im


def _absorb(env: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pass the subsystem state through one IM period.

    ``env[l, k, s]``: ``l`` the bond of the IM being applied, ``k`` the other IM's bond,
    ``s`` the folded subsystem state. Returns the same layout after legs ``a`` and ``b``.
    """
    x = np.tensordot(env, a, axes=([0, 2], [0, 1]))  # (k, m)
    x = np.tensordot(x, b, axes=(1, 0))  # (k, s', r)
    return x.transpose(2, 0, 1)


def evaluate_sandwich(
    im_left: TemporalMPS | None,
    im_right: TemporalMPS,
    p: CircuitParams,
    rho0_S: np.ndarray | None = None,
    insertions: Sequence[Insertion] = (),
) -> complex:
    """Keldysh contraction of the subsystem's folded worldline with both IMs."""
    if im_left is None:
        im_left = mirror_im(im_right)
    n = im_right.n_sites
    if im_left.n_sites != n or n % 2:
        raise ValueError("both IMs need the same even number of legs")
    T = n // 2
    if rho0_S is None:
        rho0_S = p.rho0 if p.rho0 is not None else 0.5 * np.eye(2)
    by_time: dict[int, list[np.ndarray]] = {}
    for ins in insertions:
        if not 0 <= ins.time <= 2 * T:
            raise ValueError(f"insertion time {ins.time} outside 0..{2 * T}")
        by_time.setdefault(ins.time, []).append(ins.superop())

    def insert(env: np.ndarray, idx: int) -> np.ndarray:
        for sop in by_time.get(idx, []):
            env = np.tensordot(env, sop, axes=(2, 1))
        return env

    field_fix = fold_single(field_rotation(-p.h))
    kick_sop = fold_single(kick(p.g))
    # env[right_bond, left_bond, s]
    env = np.asarray(rho0_S, dtype=complex).reshape(1, 1, 4)
    env = insert(env, 0)
    for tau in range(T):
        a_r, b_r = im_right.tensors[2 * tau], im_right.tensors[2 * tau + 1]
        a_l, b_l = im_left.tensors[2 * tau], im_left.tensors[2 * tau + 1]
        env = _absorb(env, a_r, b_r)
        env = _absorb(env.transpose(1, 0, 2), a_l, b_l).transpose(1, 0, 2)
        env = np.tensordot(env, field_fix, axes=(2, 1))
        env = insert(env, 2 * tau + 1)
        env = np.tensordot(env, kick_sop, axes=(2, 1))
        env = insert(env, 2 * tau + 2)
    val = complex(np.tensordot(env[0, 0], VEC_ID, axes=(0, 0)))
    return val * complex(np.exp(im_left.log_norm + im_right.log_norm))


def _axis_op(axis: str | np.ndarray) -> np.ndarray:
    if isinstance(axis, str):
        return PAULIS[axis.upper()]
    return np.asarray(axis, dtype=complex)


def polarization_series(
    ims: dict[int, TemporalMPS],
    p: CircuitParams,
    axis: str | np.ndarray = "X",
    use_final: bool = False,
) -> list[tuple[int, float]]:
    """``<axis(t)>`` on the subsystem for ``t = 0..T_max``.

    With ``use_final`` every time point is read from the largest IM with the operator
    inserted at half-step ``2t`` (later periods act as identity); otherwise the
    time-``t`` IM is used for time ``t``.
    """
    op = _axis_op(axis)
    T_max = max(ims)
    rho0 = p.rho0 if p.rho0 is not None else 0.5 * np.eye(2)
    out = []
    for t in range(T_max + 1):
        if use_final:
            val = evaluate_sandwich(None, ims[T_max], p, rho0, [Insertion(2 * t, op)])
        elif t == 0:
            val = complex(np.trace(op @ rho0))
        else:
            val = evaluate_sandwich(None, ims[t], p, rho0, [Insertion(2 * t, op)])
        out.append((t, val))
    return [(t, float(np.real(v))) for t, v in out]


def polarization_series_complex(
    ims: dict[int, TemporalMPS], p: CircuitParams, axis: str | np.ndarray = "X"
) -> list[tuple[int, complex]]:
    op = _axis_op(axis)
    rho0 = p.rho0 if p.rho0 is not None else 0.5 * np.eye(2)
    out = [(0, complex(np.trace(op @ rho0)))]
    for t in range(1, max(ims) + 1):
        out.append((t, evaluate_sandwich(None, ims[t], p, rho0, [Insertion(2 * t, op)])))
    return out


def autocorrelator_series_complex(
    ims: dict[int, TemporalMPS], p: CircuitParams, op: np.ndarray | str = "X", use_final: bool = False
) -> list[tuple[int, complex]]:
    op = _axis_op(op)
    if not np.allclose(op, op.conj().T):
        warnings.warn("autocorrelator operator is not Hermitian", stacklevel=2)
    if not p.infinite_temperature:
        raise ValueError("autocorrelators are defined at infinite temperature")
    rho = 0.5 * np.eye(2)
    T_max = max(ims)
    out = [(0, complex(np.trace(op @ op @ rho)))]
    for t in range(1, T_max + 1):
        im = ims[T_max] if use_final else ims[t]
        ins = [Insertion(0, op), Insertion(2 * t, op)]
        out.append((t, evaluate_sandwich(None, im, p, rho, ins)))
    return out


def autocorrelator_series(
    ims: dict[int, TemporalMPS], p: CircuitParams, op: np.ndarray | str = "X", use_final: bool = False
) -> list[tuple[int, float]]:
    """Infinite-temperature ``C(t) = Tr[op(t) op(0)] / 2`` on the subsystem."""
    return [(t, float(np.real(v))) for t, v in autocorrelator_series_complex(ims, p, op, use_final)]
