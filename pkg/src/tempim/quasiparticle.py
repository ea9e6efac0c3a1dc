"""Quasiparticle picture of temporal entanglement for the transverse-field kicked Ising chain.

At ``h = 0`` a Jordan-Wigner transformation maps one period onto free Majorana fermions.
With two Majoranas ``(a_j, b_j)`` per spin, the kick rotates ``(a_j, b_j)`` by ``2g`` and
the Ising layer rotates ``(b_j, a_{j+1})`` by ``2J``, so each momentum ``k`` carries a 2x2
Bloch Floquet matrix with eigenvalues ``exp(+-i omega(k))``.

Units: :attr:`Dispersion.velocity` is measured in Majorana sites per period, so the
dual-unitary light speed is 2. Geometric ratios ``xi = L / T`` count one cell (one spin,
i.e. two Majorana sites) per unit of ``L``; in these units velocities are halved, the
maximal cell velocity is 1 and the self-dual barrier curve is ``ln2 * min(xi, 1/2 - xi)``.

Pair contributions are integrated over momentum: for a mode with cell velocity ``v > 0``
the two delta constraints fix the creation time and one arrival time, which leaves a
window of admissible creation times. Substituting ``d omega = v dk`` removes the
inverse-square-root band-edge singularities from every integrand.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.optimize import brentq

LN2 = float(np.log(2.0))
V_MAX_SITES = 2.0
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def bloch_floquet_matrix(g: float, J: float, k: np.ndarray | float) -> np.ndarray:
    """Single-particle Floquet matrices on ``(a_k, b_k)``; shape ``k.shape + (2, 2)``."""
    k = np.asarray(k, dtype=float)
    c, s = np.cos(2 * g), np.sin(2 * g)
    cj, sj = np.cos(2 * J), np.sin(2 * J)
    kick = np.array([[c, -s], [s, c]], dtype=complex)
    ph = np.exp(-1j * k)
    ising = np.empty(k.shape + (2, 2), dtype=complex)
    ising[..., 0, 0] = cj
    ising[..., 0, 1] = sj * ph
    ising[..., 1, 0] = -sj * np.conj(ph)
    ising[..., 1, 1] = cj
    return ising @ kick


def _omega(g: float, J: float, k: np.ndarray) -> np.ndarray:
    # the Bloch matrix has unit determinant, so cos(omega) is half its trace; writing
    # sin(omega) as a hypot keeps full relative accuracy near the band edges
    k = np.asarray(k, dtype=float)
    cg, sg = np.cos(2 * g), np.sin(2 * g)
    cj, sj = np.cos(2 * J), np.sin(2 * J)
    cos_w = cg * cj + sg * sj * np.cos(k)
    sin_w = np.hypot(cg * sj - sg * cj * np.cos(k), sg * np.sin(k))
    return np.arctan2(sin_w, cos_w)


def _domega_dk(g: float, J: float, k: np.ndarray) -> np.ndarray:
    # differentiate cos(omega) = cos2g cos2J + sin2g sin2J cos(k)
    b = np.sin(2 * g) * np.sin(2 * J)
    k = np.asarray(k, dtype=float)
    sin_w = np.sin(_omega(g, J, k))
    num = b * np.sin(k)
    return np.divide(num, sin_w, out=np.zeros_like(num), where=sin_w > 1e-300)


@dataclass(frozen=True)
class Dispersion:
    """Quasienergy band ``omega(k)`` in ``[0, pi]`` sampled on a uniform momentum grid.

    The grid is offset by half a spacing, so it is symmetric under ``k -> -k`` and avoids
    ``k = 0, +-pi`` where the band may touch ``0`` or ``pi``. ``velocity`` is ``d omega /
    dk`` in Majorana sites per period; ``flat`` marks a dispersionless band.
    """

    g: float
    J: float
    k_samples: np.ndarray
    omega: np.ndarray
    velocity: np.ndarray
    omega_min: float
    omega_max: float
    flat: bool = False

    @property
    def n_k(self) -> int:
        return self.k_samples.size

    @property
    def v_max(self) -> float:
        return float(np.max(np.abs(self.velocity)))

    @property
    def v_max_cells(self) -> float:
        return self.v_max / 2.0

    def omega_at(self, k: np.ndarray | float) -> np.ndarray:
        return _omega(self.g, self.J, np.asarray(k, dtype=float))

    def velocity_at(self, k: np.ndarray | float) -> np.ndarray:
        """Group velocity in Majorana sites per period at arbitrary momenta."""
        if self.flat:
            return np.zeros_like(np.asarray(k, dtype=float))
        return 2.0 * _domega_dk(self.g, self.J, np.asarray(k, dtype=float))

    def cell_velocity_at(self, k: np.ndarray | float) -> np.ndarray:
        return 0.5 * self.velocity_at(k)


def kic_dispersion(g: float, J: float, n_k: int = 256) -> Dispersion:
    """Free-fermion dispersion of the kicked Ising chain at ``h = 0``."""
    if n_k < 64:
        raise ValueError(f"n_k must be >= 64, got {n_k}")
    k = -np.pi + (np.arange(n_k) + 0.5) * (2 * np.pi / n_k)
    flat = abs(np.sin(2 * g) * np.sin(2 * J)) < 1e-12
    if flat:
        warnings.warn(f"flat quasiparticle band at g={g}, J={J}: all velocities vanish", stacklevel=2)
    omega = _omega(g, J, k)
    vel = np.zeros_like(k) if flat else 2.0 * _domega_dk(g, J, k)
    # band edges sit at k = 0 and k = pi
    edges = _omega(g, J, np.array([0.0, np.pi]))
    lo = float(min(edges.min(), omega.min()))
    hi = float(max(edges.max(), omega.max()))
    return Dispersion(g, J, k, omega, vel, lo, hi, bool(flat))


@dataclass(frozen=True)
class PairWeight:
    """Entropy carried by one quasiparticle pair, ``0 <= w(omega) <= 2 ln 2``."""

    value: float = LN2
    func: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self) -> None:
        if self.func is None and not 0.0 <= self.value <= 2 * LN2 + 1e-15:
            raise ValueError(f"pair weight must lie in [0, 2 ln 2], got {self.value}")

    def __call__(self, omega: np.ndarray) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        if self.func is None:
            return np.full_like(omega, self.value)
        w = np.asarray(self.func(omega), dtype=float)
        if np.any(w < -1e-15) or np.any(w > 2 * LN2 + 1e-15):
            raise ValueError("pair weight function leaves [0, 2 ln 2]")
        return np.broadcast_to(w, omega.shape)


def _crossings(d: Dispersion, levels: Iterable[float]) -> list[float]:
    """Momenta in ``(0, pi)`` where the cell speed equals one of ``levels``."""
    ks = np.linspace(0.0, np.pi, 4 * d.n_k + 1)[1:-1]
    speed = np.abs(d.cell_velocity_at(ks))
    out = []
    for c in levels:
        if not np.isfinite(c) or c <= 0:
            continue
        f = speed - c
        # sign flips at the noise level of a flat band are not crossings
        real = np.maximum(np.abs(f[:-1]), np.abs(f[1:])) > 1e-8
        idx = np.nonzero((np.sign(f[:-1]) * np.sign(f[1:]) < 0) & real)[0]
        for i in idx:
            root = brentq(lambda x: abs(float(d.cell_velocity_at(x))) - c, ks[i], ks[i + 1], xtol=1e-14)
            out.append(root)
        out.extend(ks[np.nonzero(f == 0)[0]].tolist())
    return out


def _integrate_modes(d: Dispersion, w: PairWeight, f: Callable[[np.ndarray], np.ndarray], levels) -> float:
    """``int_0^pi dk/2pi w(omega) f(|v|)`` with breakpoints where ``|v|`` hits ``levels``."""
    grid = np.linspace(0.0, np.pi, d.n_k // 2 + 1)
    pts = np.unique(np.concatenate([grid, _crossings(d, levels)]))
    a, b = pts[:-1], pts[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    speed = np.abs(d.cell_velocity_at(nodes))
    vals = w(d.omega_at(nodes)) * f(speed)
    return float(np.sum(half[:, None] * _GL_WEIGHTS[None, :] * vals) / (2 * np.pi))


def s_curve(d: Dispersion, w: PairWeight, xi_grid: Iterable[float]) -> list[tuple[float, float]]:
    """Volume-law coefficient ``s(xi) = S_{L,T} / T`` of the mid-time cut, ``xi = L / T`` in cells."""
    out = []
    for xi in xi_grid:
        xi = float(xi)
        if xi < 0:
            raise ValueError(f"xi must be nonnegative, got {xi}")
        if xi == 0.0 or d.flat:
            out.append((xi, 0.0))
            continue
        val = _integrate_modes(d, w, lambda v: np.clip(np.minimum(2 * xi, v - 2 * xi), 0.0, None), [2 * xi, 4 * xi])
        out.append((xi, val))
    return out


def v_te(d: Dispersion, w: PairWeight) -> float:
    """Slope of the linear growth ``S = v_TE L`` in the ``T -> infinity`` limit (per cell)."""
    if d.flat:
        raise ValueError("v_TE diverges for a flat band")
    return 2.0 * _integrate_modes(d, w, lambda v: (v > 0).astype(float), [])


def predict_entropy(d: Dispersion, w: PairWeight, L: float, T: float, t: float) -> float:
    """Pair-counting entropy across the cut at time ``t`` for ``L`` environment cells and ``T`` periods."""
    if not 0 <= t <= T:
        raise ValueError(f"need 0 <= t <= T, got t={t}, T={T}")
    if L < 0:
        raise ValueError("L must be nonnegative")
    if L == 0 or t == 0 or t == T or d.flat:
        return 0.0

    def weight(v: np.ndarray) -> np.ndarray:
        delay = np.divide(L, v, out=np.full_like(v, np.inf), where=v > 0)
        window = np.minimum(t + delay, T - delay) - np.maximum(delay, t - delay)
        return np.where(v > 0, v * np.clip(window, 0.0, None), 0.0)

    delays = [t / 2, (T - t) / 2, T / 2, t, T - t]
    return _integrate_modes(d, w, weight, [L / x for x in delays if x > 0])


def self_dual_s(xi: np.ndarray | float) -> np.ndarray:
    """Closed-form barrier ``ln2 * min(xi, 1/2 - xi)`` (clipped at zero) at ``|g| = |J| = pi/4``."""
    xi = np.asarray(xi, dtype=float)
    return LN2 * np.clip(np.minimum(xi, 0.5 - xi), 0.0, None)
