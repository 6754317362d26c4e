"""Blockage states, directional user discovery, and iterative UAV repositioning.

A user is in outage beyond the outage range, otherwise in LOS with an
elevation-dependent probability, otherwise reached through first- or
second-order reflections. Discovery sweeps directional broadcast sectors;
repositioning moves the UAV to the centroid of the discovered users when
the capacity gain beats the signaling cost, iterating as new users enter
range.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from enum import Enum

import numpy as np

from .array_channel import LinkBudget, friis_rx_snr_db
from .sdma import CapacityParams, capacity_mm

__all__ = [
    "EnvironmentProfile",
    "RadioParams",
    "DeploymentScene",
    "LinkState",
    "LinkStateKind",
    "urban_profile",
    "rural_profile",
    "los_probability",
    "link_state",
    "nlos_penalty_db",
    "discover",
    "utility",
    "reposition_step",
    "iterate_positioning",
    "scene_from_json",
    "scene_to_json",
    "TrajectoryPoint",
]


@dataclass(frozen=True)
class EnvironmentProfile:
    """LOS-probability shape, reflection loss, and outage range of a deployment area.

    The LOS probability follows the elevation-angle sigmoid
    1/(1 + a exp(-b (elevation_deg - a))); the (a, b) presets below are
    common urban/rural fit values, not measurements from any one site.
    """

    los_sigmoid_a: float
    los_sigmoid_b: float
    outage_range_m: float
    reflection_amp_coeff: float = 0.896
    nlos_excess_db_per_bounce: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.reflection_amp_coeff <= 1.0:
            raise ValueError("reflection_amp_coeff must lie in [0, 1]")
        if self.outage_range_m <= 0:
            raise ValueError("outage_range_m must be > 0")


def urban_profile(outage_range_m: float = 2000.0) -> EnvironmentProfile:
    return EnvironmentProfile(9.61, 0.16, outage_range_m)


def rural_profile(outage_range_m: float = 2000.0) -> EnvironmentProfile:
    return EnvironmentProfile(4.88, 0.43, outage_range_m)


@dataclass(frozen=True)
class RadioParams:
    """Link-budget template used to score user capacities during positioning."""

    carrier_hz: float = 30e9
    bandwidth_hz: float = 100e6
    tx_array_gain_db: float = 24.0
    rx_array_gain_db: float = 12.0
    tx_power_dbm: float = 30.0
    noise_figure_db: float = 5.0


@dataclass(frozen=True)
class DeploymentScene:
    """UAV position, ground users, environment, and discovery/signaling knobs."""

    uav_pos: tuple[float, float, float]
    users: tuple[tuple[int, tuple[float, float, float]], ...]
    env: EnvironmentProfile
    discovery_range_m: float
    signaling_cost: float = 0.0
    sweep_sectors: int = 16
    radio: RadioParams = field(default_factory=RadioParams)

    def __post_init__(self) -> None:
        if self.uav_pos[2] <= 0:
            raise ValueError("UAV altitude must be > 0")
        if self.discovery_range_m <= 0:
            raise ValueError("discovery_range_m must be > 0")
        if self.sweep_sectors < 1:
            raise ValueError("sweep_sectors must be >= 1")

    def user_pos(self, user_id: int) -> np.ndarray:
        for uid, pos in self.users:
            if uid == user_id:
                return np.asarray(pos, dtype=float)
        raise KeyError(f"no user {user_id} in scene")


class LinkStateKind(str, Enum):
    LOS = "LOS"
    NLOS = "NLOS"
    OUTAGE = "OUTAGE"


@dataclass(frozen=True)
class LinkState:
    kind: LinkStateKind
    nlos_order: int | None = None

    def __post_init__(self) -> None:
        if (self.kind is LinkStateKind.NLOS) != (self.nlos_order is not None):
            raise ValueError("nlos_order must be present exactly for NLOS states")


def los_probability(elevation_rad: float, env: EnvironmentProfile) -> float:
    """Elevation-angle sigmoid LOS probability, strictly increasing."""
    if not 0.0 < elevation_rad <= math.pi / 2:
        raise ValueError("elevation must lie in (0, pi/2]")
    deg = math.degrees(elevation_rad)
    return 1.0 / (1.0 + env.los_sigmoid_a * math.exp(
        -env.los_sigmoid_b * (deg - env.los_sigmoid_a)
    ))


def _distance(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


def link_state(scene: DeploymentScene, user_id: int, rng: np.random.Generator) -> LinkState:
    """Draw the user's blockage state at the current UAV position."""
    pos = scene.user_pos(user_id)
    uav = np.asarray(scene.uav_pos, dtype=float)
    dist = _distance(uav, pos)
    if dist > scene.env.outage_range_m:
        return LinkState(LinkStateKind.OUTAGE)
    elevation = math.asin(min(1.0, (uav[2] - pos[2]) / dist)) if dist > 0 else math.pi / 2
    elevation = max(elevation, 1e-9)
    if rng.uniform() < los_probability(elevation, scene.env):
        return LinkState(LinkStateKind.LOS)
    return LinkState(LinkStateKind.NLOS, nlos_order=int(rng.integers(1, 3)))


def nlos_penalty_db(order: int, env: EnvironmentProfile) -> float:
    """Reflection loss of an order-n bounce path, plus configured excess loss."""
    if order < 1:
        raise ValueError("reflection order must be >= 1")
    reflection = -20.0 * order * math.log10(env.reflection_amp_coeff)
    return reflection + order * env.nlos_excess_db_per_bounce


def discover(scene: DeploymentScene) -> tuple[list[int], int]:
    """Directional broadcast sweep: ids of reachable users and slots spent.

    A user is found when within discovery range and not in outage; the sweep
    always costs one slot per sector.
    """
    uav = np.asarray(scene.uav_pos, dtype=float)
    found = [
        uid
        for uid, pos in scene.users
        if _distance(uav, pos) <= min(scene.discovery_range_m, scene.env.outage_range_m)
    ]
    return sorted(found), scene.sweep_sectors


def utility(scene: DeploymentScene, position, found_ids) -> float:
    """Sum of per-user link capacities from the given UAV position."""
    pos = np.asarray(position, dtype=float)
    total = 0.0
    for uid in found_ids:
        dist = max(_distance(pos, scene.user_pos(uid)), 1.0)
        budget = LinkBudget(
            carrier_hz=scene.radio.carrier_hz,
            distance_m=dist,
            bandwidth_hz=scene.radio.bandwidth_hz,
            tx_array_gain_db=scene.radio.tx_array_gain_db,
            rx_array_gain_db=scene.radio.rx_array_gain_db,
            tx_power_dbm=scene.radio.tx_power_dbm,
            noise_figure_db=scene.radio.noise_figure_db,
        )
        snr = 10.0 ** (friis_rx_snr_db(budget) / 10.0)
        total += capacity_mm(
            CapacityParams(bandwidth_hz=scene.radio.bandwidth_hz, snr_linear=snr, n_users=1)
        )
    return total


@dataclass(frozen=True)
class RepositionResult:
    position: tuple[float, float, float]
    utility_delta: float
    moved: bool


def reposition_step(scene: DeploymentScene, found_ids) -> RepositionResult:
    """Propose the centroid of the found users and move if it pays for itself.

    The candidate keeps the current altitude above the ground centroid; the
    move is accepted only when the capacity gain strictly exceeds the
    signaling cost.
    """
    found = list(found_ids)
    if not found:
        raise ValueError("reposition_step needs at least one found user")
    ground = np.mean([scene.user_pos(uid)[:2] for uid in found], axis=0)
    candidate = (float(ground[0]), float(ground[1]), float(scene.uav_pos[2]))
    delta = utility(scene, candidate, found) - utility(scene, scene.uav_pos, found)
    if delta > scene.signaling_cost:
        return RepositionResult(position=candidate, utility_delta=delta, moved=True)
    return RepositionResult(position=tuple(scene.uav_pos), utility_delta=delta, moved=False)


@dataclass(frozen=True)
class TrajectoryPoint:
    position: tuple[float, float, float]
    found_ids: tuple[int, ...]
    utility: float
    moved: bool
    slots_used: int


def iterate_positioning(scene: DeploymentScene, max_iters: int) -> list[TrajectoryPoint]:
    """Alternate discovery and repositioning until no move is accepted.

    Each accepted move strictly increases the utility over the currently
    found users by more than the signaling cost, so the loop terminates.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    current = scene
    trajectory = []
    for _ in range(max_iters):
        found, slots = discover(current)
        value = utility(current, current.uav_pos, found)
        if not found:
            trajectory.append(
                TrajectoryPoint(tuple(current.uav_pos), tuple(found), value, False, slots)
            )
            break
        step = reposition_step(current, found)
        trajectory.append(
            TrajectoryPoint(tuple(current.uav_pos), tuple(found), value, step.moved, slots)
        )
        if not step.moved:
            break
        current = DeploymentScene(
            uav_pos=step.position,
            users=current.users,
            env=current.env,
            discovery_range_m=current.discovery_range_m,
            signaling_cost=current.signaling_cost,
            sweep_sectors=current.sweep_sectors,
            radio=current.radio,
        )
    return trajectory


def scene_from_json(text: str) -> DeploymentScene:
    """Parse {uav, users, env, discovery_range_m, signaling_cost, sweep_sectors[, radio]}."""
    payload = json.loads(text)
    env_cfg = payload["env"]
    env = EnvironmentProfile(
        los_sigmoid_a=float(env_cfg["los_sigmoid_a"]),
        los_sigmoid_b=float(env_cfg["los_sigmoid_b"]),
        outage_range_m=float(env_cfg["outage_range_m"]),
        reflection_amp_coeff=float(env_cfg.get("reflection_amp_coeff", 0.896)),
        nlos_excess_db_per_bounce=float(env_cfg.get("nlos_excess_db_per_bounce", 0.0)),
    )
    radio = RadioParams(**payload.get("radio", {}))
    cost = payload.get("signaling_cost", 0.0)
    return DeploymentScene(
        uav_pos=tuple(float(x) for x in payload["uav"]),
        users=tuple(
            (int(u["id"]), tuple(float(x) for x in u["pos"])) for u in payload["users"]
        ),
        env=env,
        discovery_range_m=float(payload["discovery_range_m"]),
        signaling_cost=math.inf if cost == "inf" else float(cost),
        sweep_sectors=int(payload.get("sweep_sectors", 16)),
        radio=radio,
    )


def scene_to_json(scene: DeploymentScene) -> str:
    payload = {
        "uav": list(scene.uav_pos),
        "users": [{"id": uid, "pos": list(pos)} for uid, pos in scene.users],
        "env": {
            "los_sigmoid_a": scene.env.los_sigmoid_a,
            "los_sigmoid_b": scene.env.los_sigmoid_b,
            "outage_range_m": scene.env.outage_range_m,
            "reflection_amp_coeff": scene.env.reflection_amp_coeff,
            "nlos_excess_db_per_bounce": scene.env.nlos_excess_db_per_bounce,
        },
        "discovery_range_m": scene.discovery_range_m,
        "signaling_cost": "inf" if math.isinf(scene.signaling_cost) else scene.signaling_cost,
        "sweep_sectors": scene.sweep_sectors,
        "radio": asdict(scene.radio),
    }
    return json.dumps(payload, indent=2, sort_keys=True)
