"""Propagation loss and cycle-time bookkeeping.

Loss is specified in dB/ns and converted to a survival probability over a
duration ``t``::

    survival = 10^(-loss_dB * t / 10) = exp(-(ln 10 / 10) * loss_dB * t)

One pump cycle lasts ``T = T_detector + T_classical + T_switch_on``: the
herald detection delay, the classical decision logic, and the switch rise
time. A stored photon circulates a delay loop whose length is chosen so one
traversal takes exactly one cycle; the delay element contributes
``T - eps`` of that (``eps`` being the bare traversal time) and is where
the photon accumulates loss. Preparing a photon for delivery takes
``N * t_pump`` cycles plus the switch fall (reset) time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ConfigurationError, ParameterError

__all__ = [
    "LossParams",
    "TimingParams",
    "survival_probability",
    "loop_survival",
    "cycle_time",
    "inner_loop_delay",
    "repetition_time",
]

#: ln(10)/10 — one dB of loss in natural (exponential) units.
DB_TO_NAT = math.log(10.0) / 10.0


@dataclass(frozen=True)
class LossParams:
    """Loss channels of the storage loop.

    waveguide_loss_db_ns
        Propagation loss of the delay waveguide, dB per ns of traversal.
    switch_pass_loss_db
        Insertion loss per switch traversal, dB (0 by default: the cited
        device losses are dominated by the waveguide).
    output_coupling
        Transmission of the final out-coupling path, in (0, 1].
    """

    waveguide_loss_db_ns: float = 0.024
    switch_pass_loss_db: float = 0.0
    output_coupling: float = 1.0

    def __post_init__(self) -> None:
        if self.waveguide_loss_db_ns < 0.0:
            raise ParameterError(
                f"waveguide loss must be nonnegative, got {self.waveguide_loss_db_ns}"
            )
        if self.switch_pass_loss_db < 0.0:
            raise ParameterError(
                f"switch pass loss must be nonnegative, got {self.switch_pass_loss_db}"
            )
        if not 0.0 < self.output_coupling <= 1.0:
            raise ParameterError(
                f"output coupling must lie in (0, 1], got {self.output_coupling}"
            )


@dataclass(frozen=True)
class TimingParams:
    """Delays that make up one pump cycle, all in ns."""

    detector_delay: float = 9.5
    classical_delay: float = 0.5
    switch_on: float = 50.0
    switch_off: float = 950.0
    loop_traversal: float = 0.0
    pump_period: float | None = None  # defaults to the cycle time

    def __post_init__(self) -> None:
        for name in (
            "detector_delay",
            "classical_delay",
            "switch_on",
            "switch_off",
            "loop_traversal",
        ):
            value = getattr(self, name)
            if value < 0.0:
                raise ParameterError(f"{name} must be nonnegative, got {value}")
        if self.pump_period is not None and self.pump_period <= 0.0:
            raise ParameterError(
                f"pump period must be positive, got {self.pump_period}"
            )

    @property
    def effective_pump_period(self) -> float:
        return self.pump_period if self.pump_period is not None else cycle_time(self)

    @classmethod
    def for_loop_delay(
        cls, delay_ns: float, base: "TimingParams | None" = None
    ) -> "TimingParams":
        """Timing whose delay element is exactly ``delay_ns``.

        If the requested delay exceeds the base cycle time, the classical
        stage is padded so the loop still completes within one cycle.
        """
        if delay_ns < 0.0:
            raise ParameterError(f"loop delay must be nonnegative, got {delay_ns}")
        base = base if base is not None else cls()
        t_cycle = base.detector_delay + base.classical_delay + base.switch_on
        if delay_ns <= t_cycle:
            return replace(base, loop_traversal=t_cycle - delay_ns)
        return replace(
            base,
            classical_delay=base.classical_delay + (delay_ns - t_cycle),
            loop_traversal=0.0,
        )


def survival_probability(duration_ns: float, loss_db_ns: float) -> float:
    """Probability that a photon survives ``duration_ns`` of propagation."""
    if duration_ns < 0.0:
        raise ParameterError(f"duration must be nonnegative, got {duration_ns}")
    if loss_db_ns < 0.0:
        raise ParameterError(f"loss must be nonnegative, got {loss_db_ns}")
    return 10.0 ** (-loss_db_ns * duration_ns / 10.0)


def loop_survival(
    loop_delay_ns: float,
    traversals: int,
    loss: LossParams,
    switches_passed: int = 1,
) -> float:
    """Survival over ``traversals`` loop round trips.

    Each traversal spends ``loop_delay_ns`` in the delay waveguide and
    passes ``switches_passed`` switches (insertion loss per pass from
    ``loss.switch_pass_loss_db``).
    """
    if traversals < 0:
        raise ParameterError(f"traversals must be nonnegative, got {traversals}")
    if switches_passed < 0:
        raise ParameterError(f"switches_passed must be nonnegative, got {switches_passed}")
    waveguide = survival_probability(loop_delay_ns * traversals, loss.waveguide_loss_db_ns)
    switch = 10.0 ** (-loss.switch_pass_loss_db * traversals * switches_passed / 10.0)
    return waveguide * switch


def cycle_time(t: TimingParams) -> float:
    """One pump cycle: detection + classical decision + switch rise.

    Raises :class:`ConfigurationError` when the bare loop traversal is
    longer than the cycle (no room for a delay element).
    """
    total = t.detector_delay + t.classical_delay + t.switch_on
    if total - t.loop_traversal < 0.0:
        raise ConfigurationError(
            f"loop traversal {t.loop_traversal} ns exceeds cycle time {total} ns"
        )
    return total


def inner_loop_delay(t: TimingParams) -> float:
    """Length of the delay element: cycle time minus bare loop traversal."""
    return cycle_time(t) - t.loop_traversal


def repetition_time(cycles_n: int, pump_period_ns: float, reset_ns: float) -> float:
    """Time to complete one delivery attempt: ``N * t_pump + T_reset``."""
    if cycles_n < 0:
        raise ParameterError(f"cycle count must be nonnegative, got {cycles_n}")
    if pump_period_ns < 0.0 or reset_ns < 0.0:
        raise ParameterError("pump period and reset time must be nonnegative")
    return cycles_n * pump_period_ns + reset_ns
