"""Influence-matrix construction: transfer-matrix iteration and light-cone growth."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .circuit import VEC_ID, CircuitParams, build_transfer_mpo, initial_leg_vector
from .mps import (
    TemporalMPS,
    all_spectra,
    append_product,
    apply_mpo,
    canonicalize,
    fidelity,
)

log = logging.getLogger(__name__)

CONVERGENCE_FIDELITY = 1.0 - 1e-12


@dataclass
class StepRecord:
    step: int
    mid_entropy: float
    profile: list[float]
    max_bond: int
    discarded_weight: float
    bond_dims: list[int] = field(default_factory=list)
    step_fidelity: float | None = None


@dataclass
class IMTrace:
    records: list[StepRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def mid_entropies(self) -> list[float]:
        return [r.mid_entropy for r in self.records]

    @property
    def max_bonds(self) -> list[int]:
        return [r.max_bond for r in self.records]

    @property
    def total_discarded(self) -> float:
        return self.records[-1].discarded_weight if self.records else 0.0


def mid_cut(im: TemporalMPS) -> int | None:
    """Bond at the time cut ``t = floor(T/2)``, i.e. after leg ``b_t``.

    For even ``T`` this is the bond after leg ``T`` of ``2T``. For odd ``T`` the
    half-integer time is rounded down, so the cut always falls between periods and never
    splits the two legs of one period. Returns ``None`` for ``T = 1`` (no such bond).
    """
    t = (im.n_sites // 2) // 2
    return 2 * t - 1 if t >= 1 else None


def te_profile(im: TemporalMPS) -> list[tuple[int, float]]:
    """Entanglement entropy (nats) at every bond of an IM."""
    return [(b, sp.entropy()) for b, sp in enumerate(all_spectra(im))]


def _record(step: int, im: TemporalMPS, discarded: float, step_fid: float | None = None) -> StepRecord:
    profile = [s for _, s in te_profile(im)] if im.n_sites > 1 else []
    cut = mid_cut(im)
    mid = profile[cut] if cut is not None else 0.0
    return StepRecord(
        step=step,
        mid_entropy=mid,
        profile=profile,
        max_bond=im.max_bond,
        discarded_weight=discarded,
        bond_dims=im.bond_dims,
        step_fidelity=step_fid,
    )


def iterate_im(
    boundary: TemporalMPS,
    p: CircuitParams,
    n_steps: int,
    chi: int | None = None,
    tol: float = 0.0,
    stop_when_converged: bool = True,
) -> tuple[TemporalMPS, IMTrace]:
    """Apply the dual transfer matrix ``n_steps`` times to a boundary IM.

    Step ``l`` produces the IM of a ``2l``-site environment. Iteration stops early once
    consecutive IMs have fidelity above ``1 - 1e-12`` (if ``stop_when_converged``).
    """
    if boundary.n_sites != 2 * p.T:
        raise ValueError(f"boundary has {boundary.n_sites} legs, expected {2 * p.T}")
    o = build_transfer_mpo(p)
    im = canonicalize(boundary, 0)
    trace = IMTrace([_record(0, im, 0.0)])
    kept = 1.0
    for step in range(1, n_steps + 1):
        new, disc = apply_mpo(o, im, chi, tol, return_discarded=True)
        kept *= 1.0 - disc
        f = fidelity(im, new)
        im = new
        trace.records.append(_record(step, im, 1.0 - kept, f))
        log.debug("step %d: S_mid=%.4f chi=%d disc=%.2e", step, trace.records[-1].mid_entropy, im.max_bond, 1 - kept)
        if stop_when_converged and f > CONVERGENCE_FIDELITY:
            break
    return im, trace


def lcga_step(prev: TemporalMPS | None, p: CircuitParams, chi: int | None, tol: float) -> tuple[TemporalMPS, float]:
    """Grow the infinite-system IM from ``T - 1`` to ``T = p.T`` periods.

    The previous IM is extended by one period whose input leg is traced (``|1>``) and
    whose output leg emits the single-site initial state; then ``T_T`` is applied.
    """
    legs = [VEC_ID, initial_leg_vector(p)]
    if prev is None:
        if p.T != 1:
            raise ValueError("the first LCGA step must have T = 1")
        grown = TemporalMPS(tuple(np.asarray(v, dtype=complex).reshape(1, 4, 1) for v in legs))
    else:
        if prev.n_sites != 2 * (p.T - 1):
            raise ValueError("previous IM does not have T - 1 periods")
        grown = append_product(prev, legs)
    return apply_mpo(build_transfer_mpo(p), grown, chi, tol, return_discarded=True)


def lcga_build(
    p: CircuitParams, T_max: int, chi: int | None = None, tol: float = 0.0
) -> tuple[dict[int, TemporalMPS], IMTrace]:
    """Light-cone growth: ``ims[T]`` is the infinite-chain IM for ``T = 1..T_max``."""
    if T_max < 1:
        raise ValueError("T_max must be >= 1")
    ims: dict[int, TemporalMPS] = {}
    trace = IMTrace()
    prev = None
    kept = 1.0
    for T in range(1, T_max + 1):
        im, disc = lcga_step(prev, p.with_T(T), chi, tol)
        kept *= 1.0 - disc
        ims[T] = im
        trace.records.append(_record(T, im, 1.0 - kept))
        log.debug("LCGA T=%d: S_mid=%.4f chi=%d", T, trace.records[-1].mid_entropy, im.max_bond)
        prev = im
    return ims, trace


def project_time(im: TemporalMPS, t_drop: int, p: CircuitParams | None = None) -> TemporalMPS:
    """Feed ``1/2`` the identity into the last ``t_drop`` periods and trace their output.

    Contracts the last ``2 * t_drop`` legs with ``<1|`` and one factor ``1/2`` per dropped
    period, returning an IM with ``t_drop`` fewer periods. ``p`` is accepted for
    signature symmetry with the other IM operations and is not needed.
    """
    n = im.n_sites
    if t_drop < 1:
        raise ValueError("t_drop must be >= 1")
    if 2 * t_drop >= n:
        raise ValueError(f"cannot drop {t_drop} periods from an IM with {n // 2}")
    ts = list(im.tensors)
    carry = np.ones(1, dtype=complex)
    for t in reversed(ts[n - 2 * t_drop :]):
        carry = np.tensordot(np.tensordot(t, carry, axes=(2, 0)), VEC_ID, axes=(1, 0))
    keep = ts[: n - 2 * t_drop]
    keep[-1] = np.tensordot(keep[-1], carry, axes=(2, 0))[:, :, None]
    out = TemporalMPS(tuple(keep), None, im.log_norm + t_drop * float(np.log(0.5)))
    return out


def im_fidelity(a: TemporalMPS, b: TemporalMPS) -> float:
    if a.n_sites != b.n_sites:
        raise ValueError("IMs have different leg counts")
    return fidelity(a, b)
