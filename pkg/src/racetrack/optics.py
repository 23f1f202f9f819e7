"""Photon-pair statistics and switch-interferometer transfer.

Single-mode SPDC emits photon pairs with a thermal (geometric) number
distribution controlled by the squeezing parameter ``zeta``::

    P(n) = (1 - |zeta|^2) * |zeta|^(2n),      zeta = tanh(c * P_pump)

A click of a non-photon-number-resolving herald detector with efficiency
``eta`` and dark-count probability ``dark`` occurs with probability
``1 - (1 - eta)^n * (1 - dark)`` given ``n`` pairs.

The 2x2 switch is a Mach-Zehnder interferometer: two symmetric directional
couplers around a thermo-optic phase ``theta`` on one arm. Its transfer
matrix is ``C @ diag(e^{i theta}, 1) @ C`` with ``C = [[1,1],[1,-1]]/sqrt(2)``,
giving bar amplitude ``(e^{i theta}+1)/2`` and cross amplitude
``(e^{i theta}-1)/2``; ``theta=0`` is the bar state, ``theta=pi`` the cross
state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ParameterError

__all__ = [
    "SpdcParams",
    "PairDistribution",
    "HeraldModel",
    "MziTransfer",
    "zeta_from_pump",
    "pair_distribution",
    "herald_click_probability",
    "heralded_single_purity",
    "mzi_transfer",
    "equal_up_to_global_phase",
]

_NORM_TOL = 1e-12


def zeta_from_pump(coupling_c: float, pump_power: float) -> float:
    """Squeezing parameter ``tanh(c * P)`` for pump power ``P``.

    Both arguments must be nonnegative; the result lies in ``[0, 1)``.
    """
    if coupling_c < 0.0:
        raise ParameterError(f"coupling must be nonnegative, got {coupling_c}")
    if pump_power < 0.0:
        raise ParameterError(f"pump power must be nonnegative, got {pump_power}")
    return math.tanh(coupling_c * pump_power)


@dataclass(frozen=True)
class SpdcParams:
    """Source parameters for the geometric pair-number distribution.

    ``zeta`` may be given directly, or derived from ``coupling_c`` and
    ``pump_power`` via :func:`zeta_from_pump` (see :meth:`from_pump`).
    When all three are supplied they must agree to 1e-12.
    """

    zeta: float
    n_max: int = 10
    coupling_c: float | None = None
    pump_power: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= abs(self.zeta) < 1.0:
            raise ParameterError(f"|zeta| must be < 1, got {self.zeta}")
        if self.n_max < 1:
            raise ParameterError(f"n_max must be >= 1, got {self.n_max}")
        if (self.coupling_c is None) != (self.pump_power is None):
            raise ConfigurationError(
                "coupling_c and pump_power must be given together"
            )
        if self.coupling_c is not None and self.pump_power is not None:
            derived = zeta_from_pump(self.coupling_c, self.pump_power)
            if abs(derived - self.zeta) > 1e-12:
                raise ConfigurationError(
                    f"zeta={self.zeta} inconsistent with tanh(c*P)={derived}"
                )

    @classmethod
    def from_pump(
        cls, coupling_c: float, pump_power: float, n_max: int = 10
    ) -> "SpdcParams":
        return cls(
            zeta=zeta_from_pump(coupling_c, pump_power),
            n_max=n_max,
            coupling_c=coupling_c,
            pump_power=pump_power,
        )


@dataclass(frozen=True)
class PairDistribution:
    """Pair-number probabilities ``probs[n] = P(n)`` for ``n = 0..n_max``.

    ``truncation_mass`` is the probability of more than ``n_max`` pairs, so
    ``sum(probs) + truncation_mass == 1`` (enforced to 1e-12).
    """

    probs: np.ndarray
    truncation_mass: float
    zeta: float | None = None

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", probs)
        if probs.ndim != 1 or probs.size < 1:
            raise ParameterError("probs must be a 1-D vector with >= 1 entry")
        if np.any(probs < -_NORM_TOL) or np.any(probs > 1.0 + _NORM_TOL):
            raise ParameterError("pair probabilities must lie in [0, 1]")
        if not -_NORM_TOL <= self.truncation_mass <= 1.0 + _NORM_TOL:
            raise ParameterError("truncation mass must lie in [0, 1]")
        total = float(probs.sum()) + self.truncation_mass
        if abs(total - 1.0) > _NORM_TOL:
            raise ParameterError(
                f"probs + truncation_mass must sum to 1, got {total!r}"
            )

    @property
    def n_max(self) -> int:
        return self.probs.size - 1


def pair_distribution(params: SpdcParams) -> PairDistribution:
    """Geometric pair-number distribution ``P(n) = (1-z^2) z^(2n)``.

    The returned vector covers ``n = 0..n_max``; everything beyond is
    reported as ``truncation_mass = z^(2(n_max+1))``, which keeps the total
    mass exactly 1.
    """
    z2 = params.zeta * params.zeta
    n = np.arange(params.n_max + 1)
    probs = (1.0 - z2) * z2**n
    mass = float(z2 ** (params.n_max + 1))
    return PairDistribution(probs=probs, truncation_mass=mass, zeta=params.zeta)


@dataclass(frozen=True)
class HeraldModel:
    """Non-photon-number-resolving herald detector."""

    efficiency_eta: float = 0.9
    dark_count_prob: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.efficiency_eta <= 1.0:
            raise ParameterError(
                f"detector efficiency must lie in [0, 1], got {self.efficiency_eta}"
            )
        if not 0.0 <= self.dark_count_prob < 1.0:
            raise ParameterError(
                f"dark-count probability must lie in [0, 1), got {self.dark_count_prob}"
            )


def herald_click_probability(dist: PairDistribution, herald: HeraldModel) -> float:
    """Probability that the herald detector clicks in one pump cycle.

    Sums ``P(n) * [1 - (1-eta)^n * (1-dark)]`` over the stored distribution.
    The truncated tail is treated as ``n_max + 1`` pairs — the smallest pair
    count the tail can hold, hence a lower bound on its click probability
    (and exact for ``eta = 1``, where any ``n >= 1`` clicks with certainty).
    """
    eta = herald.efficiency_eta
    dark = herald.dark_count_prob
    n = np.arange(dist.probs.size)
    click_given_n = 1.0 - (1.0 - eta) ** n * (1.0 - dark)
    tail = 1.0 - (1.0 - eta) ** (dist.probs.size) * (1.0 - dark)
    return float(np.dot(dist.probs, click_given_n) + dist.truncation_mass * tail)


def heralded_single_purity(dist: PairDistribution, herald: HeraldModel) -> float:
    """Fraction of herald clicks caused by exactly one pair.

    ``P(1) * eta / P(click)``. Raises :class:`ParameterError` when the click
    probability is zero (eta and dark counts both zero, or a vacuum-only
    distribution).
    """
    click = herald_click_probability(dist, herald)
    if click <= 0.0:
        raise ParameterError("herald click probability is zero; purity undefined")
    if dist.probs.size < 2:
        return 0.0
    return float(dist.probs[1]) * herald.efficiency_eta / click


_COUPLER = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)


@dataclass(frozen=True)
class MziTransfer:
    """Transfer matrix of the switch interferometer at phase ``theta``.

    ``matrix[j, i]`` is the amplitude from input port ``i`` to output port
    ``j``. Port 0 is the bar path. Unitarity is enforced to 1e-12 on
    construction.
    """

    theta: float
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if m.shape != (2, 2):
            raise ParameterError(f"transfer matrix must be 2x2, got {m.shape}")
        dev = np.abs(m @ m.conj().T - np.eye(2)).max()
        if dev > 1e-12:
            raise ConfigurationError(f"transfer matrix not unitary (|MM†-I| = {dev})")

    @property
    def bar_amplitude(self) -> complex:
        return complex(self.matrix[0, 0])

    @property
    def cross_amplitude(self) -> complex:
        return complex(self.matrix[1, 0])

    @property
    def bar_probability(self) -> float:
        return abs(self.bar_amplitude) ** 2

    @property
    def cross_probability(self) -> float:
        return abs(self.cross_amplitude) ** 2


def mzi_transfer(theta: float) -> MziTransfer:
    """Interferometer transfer at phase ``theta``: coupler, phase, coupler."""
    phase = np.array([[np.exp(1j * theta), 0.0], [0.0, 1.0]])
    return MziTransfer(theta=theta, matrix=_COUPLER @ phase @ _COUPLER)


def equal_up_to_global_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-12) -> bool:
    """Whether ``a == exp(i phi) * b`` for some real ``phi``.

    The optimal phase maximizes ``Re(e^{-i phi} tr(b† a))``, attained at
    ``phi = arg tr(b† a)``.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    inner = np.trace(b.conj().T @ a)
    if abs(inner) == 0.0:
        return bool(np.abs(a - b).max() <= tol)
    phi = inner / abs(inner)
    return bool(np.abs(a - phi * b).max() <= tol)
