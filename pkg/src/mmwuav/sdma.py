"""AoD-grid user grouping, MMSE-SIC uplink rates, and capacity comparison.

Users resolved to distinct bottom-layer beam indices share the channel
simultaneously; the BS sees the effective U x U channel
H_E[i,j] = w_i^H H_j f_j and applies MMSE detection with successive
interference cancellation, whose sum rate equals the MIMO mutual
information log2 det(I + rho H_E H_E^H).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .array_channel import ChannelRealization
from .codebook import Codeword

__all__ = [
    "UserLink",
    "SdmaSetup",
    "CapacityParams",
    "SicRates",
    "group_users",
    "effective_channel",
    "mmse_sic_sum_rate",
    "bound_rate",
    "capacity_mm",
    "capacity_lf",
]


@dataclass(frozen=True)
class UserLink:
    """One user's channel plus the beam pair found for it and its AoD group."""

    user_id: int
    channel: ChannelRealization
    tx_codeword: Codeword
    rx_codeword: Codeword
    group_index: int


@dataclass(frozen=True)
class SdmaSetup:
    """Users admitted to one simultaneous transmission, with H_E and per-user SNR."""

    users: tuple[UserLink, ...]
    h_eff: np.ndarray
    snr_per_user: float

    def __post_init__(self) -> None:
        groups = [u.group_index for u in self.users]
        if len(set(groups)) != len(groups):
            raise ValueError("users in one SDMA setup must have distinct groups")


def group_users(links: Sequence[UserLink]) -> list[list[UserLink]]:
    """Greedy first-fit schedule: no two users in a slot share a group index."""
    slots: list[list[UserLink]] = []
    for link in links:
        for slot in slots:
            if all(link.group_index != other.group_index for other in slot):
                slot.append(link)
                break
        else:
            slots.append([link])
    return slots


def effective_channel(links: Sequence[UserLink]) -> np.ndarray:
    """H_E[i,j] = w_i^H H_j f_j over the given users."""
    u = len(links)
    h_eff = np.zeros((u, u), dtype=complex)
    for j, src in enumerate(links):
        hf = src.channel.h_matrix @ src.tx_codeword.weights
        for i, dst in enumerate(links):
            if dst.rx_codeword.n_antennas != src.channel.n_bs:
                raise ValueError("rx codeword length does not match channel")
            h_eff[i, j] = dst.rx_codeword.weights.conj() @ hf
    return h_eff


@dataclass(frozen=True)
class SicRates:
    per_user_rate_bps_hz: np.ndarray
    sum_rate_bps_hz: float


def mmse_sic_sum_rate(
    h_eff: np.ndarray, snr_per_user: float, order: Sequence[int] | None = None
) -> SicRates:
    """Per-user and sum rates of MMSE detection with successive cancellation.

    The user decoded at each stage gets its MMSE rate treating the not yet
    decoded users as noise; decoded users are cancelled. Default decoding
    order is descending diagonal magnitude. The sum rate telescopes to
    log2 det(I + rho H_E H_E^H) for any order.
    """
    h_eff = np.asarray(h_eff, dtype=complex)
    if h_eff.ndim != 2 or h_eff.shape[0] != h_eff.shape[1]:
        raise ValueError("h_eff must be square")
    if snr_per_user < 0:
        raise ValueError("snr_per_user must be >= 0")
    u = h_eff.shape[0]
    if order is None:
        order = list(np.argsort(-np.abs(np.diag(h_eff)), kind="stable"))
    else:
        order = list(order)
        if sorted(order) != list(range(u)):
            raise ValueError("order must be a permutation of range(U)")
    rates = np.zeros(u)
    cov = np.eye(u, dtype=complex)
    for user in order:
        cov += snr_per_user * np.outer(h_eff[:, user], h_eff[:, user].conj())
    for user in order:
        col = h_eff[:, user]
        cov_wo = cov - snr_per_user * np.outer(col, col.conj())
        sinr = snr_per_user * float(np.real(col.conj() @ np.linalg.solve(cov_wo, col)))
        rates[user] = math.log2(1.0 + sinr)
        cov = cov_wo
    return SicRates(per_user_rate_bps_hz=rates, sum_rate_bps_hz=float(rates.sum()))


def bound_rate(h_eff: np.ndarray, snr_per_user: float) -> float:
    """Sum rate with inter-user interference forced to zero."""
    diag = np.abs(np.diag(np.asarray(h_eff))) ** 2
    return float(np.sum(np.log2(1.0 + snr_per_user * diag)))


@dataclass(frozen=True)
class CapacityParams:
    """Bandwidth, received SNR, and simultaneous user count for one cellular."""

    bandwidth_hz: float
    snr_linear: float
    n_users: int

    def __post_init__(self) -> None:
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be > 0")
        if self.snr_linear < 0:
            raise ValueError("snr_linear must be >= 0")
        if self.n_users < 1:
            raise ValueError("n_users must be >= 1")


def capacity_mm(p: CapacityParams) -> float:
    """Multi-user capacity U B log2(1 + rho/U) of the mmWave cellular, bit/s."""
    return p.n_users * p.bandwidth_hz * math.log2(1.0 + p.snr_linear / p.n_users)


def capacity_lf(
    p: CapacityParams,
    method: str = "quadrature",
    samples: int = 100_000,
    rng_seed: int = 0,
    quad_nodes: int = 100,
) -> float:
    """Ergodic capacity E{4 B log2(1 + rho |h|^2 / 4)} of the LF cellular, bit/s.

    |h|^2 is unit-mean exponential (Rayleigh fading). The expectation is a
    Gauss-Laguerre quadrature by default; ``method="mc"`` draws ``samples``
    fades instead (at least 1e5).
    """
    if p.n_users != 4:
        raise ValueError("the low-frequency cellular serves exactly 4 SDMA users")
    if p.snr_linear == 0:
        return 0.0
    scale = p.snr_linear / 4.0
    if method == "quadrature":
        if not 1 <= quad_nodes <= 180:
            raise ValueError("quad_nodes must lie in 1..180 (Laguerre recurrence limit)")
        nodes, weights = np.polynomial.laguerre.laggauss(quad_nodes)
        mean = float(np.sum(weights * np.log2(1.0 + scale * nodes)))
    elif method == "mc":
        if samples < 100_000:
            raise ValueError("Monte-Carlo estimate needs at least 1e5 samples")
        rng = np.random.default_rng(rng_seed)
        fades = rng.exponential(size=samples)
        mean = float(np.mean(np.log2(1.0 + scale * fades)))
    else:
        raise ValueError(f"unknown method {method!r}")
    return 4.0 * p.bandwidth_hz * mean
