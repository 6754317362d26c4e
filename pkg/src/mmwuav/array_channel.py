"""Uniform-linear-array steering, sparse multipath channels, link budgets, mobility.

Angles throughout are *normalized spatial angles*: the cosine of the
physical angle, living on [-1, 1). A half-wavelength ULA with N elements
then has N mutually orthogonal beams on the uniform grid with spacing 2/N,
which is what the codebook module builds on.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "SPEED_OF_LIGHT",
    "THERMAL_NOISE_DBM_HZ",
    "ArrayGeometry",
    "Mpc",
    "ChannelRealization",
    "MobilityParams",
    "LinkBudget",
    "steering_vector",
    "synth_channel",
    "sample_mpcs",
    "coherence_time_s",
    "doppler_spread_hz",
    "fspl_db",
    "friis_rx_snr_db",
]

SPEED_OF_LIGHT = 3.0e8  # m/s
THERMAL_NOISE_DBM_HZ = -174.0  # kTB density at 290 K


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array: element count and element spacing in wavelengths."""

    n_elements: int
    spacing_wavelengths: float = 0.5

    def __post_init__(self) -> None:
        if self.n_elements < 1:
            raise ValueError("n_elements must be >= 1")
        if self.spacing_wavelengths <= 0:
            raise ValueError("spacing_wavelengths must be > 0")


@dataclass(frozen=True)
class Mpc:
    """One multipath component: complex gain plus BS-side AoA and MS-side AoD."""

    gain: complex
    aoa_bs: float
    aod_ms: float

    def __post_init__(self) -> None:
        for name in ("aoa_bs", "aod_ms"):
            val = getattr(self, name)
            if not -1.0 <= val < 1.0:
                raise ValueError(f"{name} must lie in [-1, 1), got {val}")


@dataclass(frozen=True)
class ChannelRealization:
    """Multipath components and the synthesized N_BS x N_MS channel matrix."""

    mpcs: tuple[Mpc, ...]
    h_matrix: np.ndarray

    @property
    def n_bs(self) -> int:
        return self.h_matrix.shape[0]

    @property
    def n_ms(self) -> int:
        return self.h_matrix.shape[1]


@dataclass(frozen=True)
class MobilityParams:
    """UAV speed, carrier wavelength and angle between motion and the link."""

    speed_mps: float
    wavelength_m: float
    angle_rad: float

    def __post_init__(self) -> None:
        if self.speed_mps < 0:
            raise ValueError("speed_mps must be >= 0")
        if self.wavelength_m <= 0:
            raise ValueError("wavelength_m must be > 0")


@dataclass(frozen=True)
class LinkBudget:
    """Free-space link budget inputs for a single directional link."""

    carrier_hz: float
    distance_m: float
    bandwidth_hz: float
    tx_array_gain_db: float = 0.0
    rx_array_gain_db: float = 0.0
    tx_power_dbm: float = 30.0
    noise_figure_db: float = 5.0

    def __post_init__(self) -> None:
        if self.carrier_hz <= 0:
            raise ValueError("carrier_hz must be > 0")
        if self.distance_m <= 0:
            raise ValueError("distance_m must be > 0")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be > 0")


def steering_vector(geom: ArrayGeometry, omega: float) -> np.ndarray:
    """Unit-norm array response a(N, omega).

    Element n is (1/sqrt(N)) * exp(1j * 2*pi * spacing * n * omega).
    """
    if not -1.0 <= omega < 1.0:
        raise ValueError(f"omega must lie in [-1, 1), got {omega}")
    n = np.arange(geom.n_elements)
    phase = 2.0 * np.pi * geom.spacing_wavelengths * n * omega
    return np.exp(1j * phase) / math.sqrt(geom.n_elements)


def synth_channel(
    bs: ArrayGeometry, ms: ArrayGeometry, mpcs: Sequence[Mpc]
) -> ChannelRealization:
    """Narrowband channel H = sqrt(N_MS*N_BS) * sum_l gain_l a(N_BS, aoa_l) a(N_MS, aod_l)^H."""
    if len(mpcs) == 0:
        raise ValueError("mpcs must be non-empty")
    h = np.zeros((bs.n_elements, ms.n_elements), dtype=complex)
    for mpc in mpcs:
        a_bs = steering_vector(bs, mpc.aoa_bs)
        a_ms = steering_vector(ms, mpc.aod_ms)
        h += mpc.gain * np.outer(a_bs, a_ms.conj())
    h *= math.sqrt(bs.n_elements * ms.n_elements)
    return ChannelRealization(mpcs=tuple(mpcs), h_matrix=h)


def sample_mpcs(
    rng_seed,
    l_paths: int,
    nlos_power_offset_db: float,
    shared_bs_aoa: bool = False,
) -> list[Mpc]:
    """Draw a random sparse channel: one LOS path plus l_paths-1 NLOS paths.

    The LOS gain has unit magnitude and a uniform phase; each NLOS gain is
    circularly-symmetric complex Gaussian with mean power
    10**(-nlos_power_offset_db/10). All angles are uniform on [-1, 1).
    ``shared_bs_aoa`` collapses every BS-side AoA onto the LOS value, for
    the tightly-clustered-UAV-side reading of the channel model.
    Deterministic for a given seed.
    """
    if l_paths < 1:
        raise ValueError("l_paths must be >= 1")
    rng = np.random.default_rng(rng_seed)
    aoa = rng.uniform(-1.0, 1.0, size=l_paths)
    aod = rng.uniform(-1.0, 1.0, size=l_paths)
    if shared_bs_aoa:
        aoa[1:] = aoa[0]
    los_phase = rng.uniform(0.0, 2.0 * np.pi)
    mpcs = [Mpc(gain=complex(np.exp(1j * los_phase)), aoa_bs=aoa[0], aod_ms=aod[0])]
    if l_paths > 1:
        amp = 10.0 ** (-nlos_power_offset_db / 20.0)
        re_im = rng.standard_normal(size=(l_paths - 1, 2)) / math.sqrt(2.0)
        for ell in range(l_paths - 1):
            gain = amp * complex(re_im[ell, 0], re_im[ell, 1])
            mpcs.append(Mpc(gain=gain, aoa_bs=aoa[ell + 1], aod_ms=aod[ell + 1]))
    return mpcs


def _radial_speed(m: MobilityParams) -> float:
    # cos(pi/2) lands at ~6e-17 in floats; snap that to a true perpendicular.
    cos = math.cos(m.angle_rad)
    if abs(cos) < 4.0 * sys.float_info.epsilon:
        cos = 0.0
    return m.speed_mps * abs(cos)


def coherence_time_s(m: MobilityParams) -> float:
    """Channel coherence time wavelength/(v*|cos(angle)|); +inf for radial-free motion."""
    radial = _radial_speed(m)
    if radial == 0.0:
        return math.inf
    return m.wavelength_m / radial


def doppler_spread_hz(m: MobilityParams) -> float:
    """Doppler spread v*|cos(angle)|/wavelength."""
    return _radial_speed(m) / m.wavelength_m


def fspl_db(distance_m: float, carrier_hz: float) -> float:
    """Free-space path loss 20*log10(4*pi*d*f/c)."""
    if distance_m <= 0 or carrier_hz <= 0:
        raise ValueError("distance and carrier frequency must be positive")
    return 20.0 * math.log10(4.0 * math.pi * distance_m * carrier_hz / SPEED_OF_LIGHT)


def friis_rx_snr_db(lb: LinkBudget) -> float:
    """Received SNR in dB after Friis path loss and the thermal noise floor."""
    noise_dbm = (
        THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(lb.bandwidth_hz) + lb.noise_figure_db
    )
    return (
        lb.tx_power_dbm
        + lb.tx_array_gain_db
        + lb.rx_array_gain_db
        - fspl_db(lb.distance_m, lb.carrier_hz)
        - noise_dbm
    )
