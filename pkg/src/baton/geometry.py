"""Link geometry and the Fresnel-zone forward model.

A link is a transmitter/receiver pair.  For a reflector at ``l_h`` moving with
velocity ``v``, the path length change rate (PLCR) of the reflected path is
``r = a . v`` with ``a = u_t + u_r``, the sum of the unit vectors pointing from
each endpoint to the reflector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from baton.errors import DegenerateGeometry, InvalidConfig

EPS_POS = 1e-6
V_MAX = 2.0


@dataclass(frozen=True)
class LinkGeometry:
    tx_position: tuple[float, float]
    rx_position: tuple[float, float]
    link_id: int = 0

    def __post_init__(self):
        tx = tuple(float(c) for c in self.tx_position)
        rx = tuple(float(c) for c in self.rx_position)
        if len(tx) != 2 or len(rx) != 2:
            raise InvalidConfig("link endpoints must be 2-D points")
        if math.hypot(tx[0] - rx[0], tx[1] - rx[1]) <= EPS_POS:
            raise DegenerateGeometry(f"link {self.link_id}: transmitter and receiver coincide")
        object.__setattr__(self, "tx_position", tx)
        object.__setattr__(self, "rx_position", rx)


@dataclass(frozen=True)
class KinematicState:
    position: tuple[float, float]
    velocity: tuple[float, float]

    @property
    def speed(self) -> float:
        return math.hypot(*self.velocity)


class NormalDecomposition(NamedTuple):
    normal_speed: float
    alpha: float
    beta: float
    normal_direction: tuple[float, float]


def link_arrays(links: Sequence[LinkGeometry]) -> tuple[np.ndarray, np.ndarray]:
    """Stack endpoints into C-contiguous ``(N, 2)`` arrays for the kernels."""
    tx = np.ascontiguousarray([lk.tx_position for lk in links], dtype=np.float64).reshape(-1, 2)
    rx = np.ascontiguousarray([lk.rx_position for lk in links], dtype=np.float64).reshape(-1, 2)
    return tx, rx


def check_unique_ids(links: Sequence[LinkGeometry]) -> None:
    ids = [lk.link_id for lk in links]
    if len(set(ids)) != len(ids):
        raise InvalidConfig(f"duplicate link ids: {ids}")


def _unit_vectors(link: LinkGeometry, position, eps_pos: float):
    x, y = float(position[0]), float(position[1])
    tdx, tdy = x - link.tx_position[0], y - link.tx_position[1]
    rdx, rdy = x - link.rx_position[0], y - link.rx_position[1]
    dt = math.hypot(tdx, tdy)
    dr = math.hypot(rdx, rdy)
    if dt <= eps_pos or dr <= eps_pos:
        raise DegenerateGeometry(
            f"position ({x:g}, {y:g}) lies on an endpoint of link {link.link_id}")
    return (tdx / dt, tdy / dt), (rdx / dr, rdy / dr)


def fresnel_coefficients(link: LinkGeometry, position, eps_pos: float = EPS_POS) -> tuple[float, float]:
    """Coefficients ``(a_x, a_y)`` mapping velocity to PLCR at ``position``.

    ``(a_x, a_y)`` is also the gradient of the total reflected path length with
    respect to the reflector position, so its norm is at most 2.
    """
    ut, ur = _unit_vectors(link, position, eps_pos)
    return ut[0] + ur[0], ut[1] + ur[1]


def forward_plcr(link: LinkGeometry, state: KinematicState, eps_pos: float = EPS_POS) -> float:
    ax, ay = fresnel_coefficients(link, state.position, eps_pos)
    return ax * state.velocity[0] + ay * state.velocity[1]


def decompose_normal_velocity(link: LinkGeometry, state: KinematicState,
                              eps_pos: float = EPS_POS) -> NormalDecomposition:
    """Split velocity into its component normal to the local Fresnel ellipse.

    Returns the normal speed and the angles between the normal velocity and
    the two reflection rays, so that ``normal_speed * (cos(alpha) + cos(beta))``
    reproduces :func:`forward_plcr`.  When the normal component vanishes the
    angles are measured from the outward ellipse normal instead.
    """
    ut, ur = _unit_vectors(link, state.position, eps_pos)
    ax, ay = ut[0] + ur[0], ut[1] + ur[1]
    norm_a = math.hypot(ax, ay)
    if norm_a <= eps_pos:
        # On the line of sight between the endpoints: ellipse degenerates to the baseline.
        raise DegenerateGeometry(f"position lies on the baseline of link {link.link_id}")
    nx, ny = ax / norm_a, ay / norm_a
    vx, vy = state.velocity
    proj = vx * nx + vy * ny
    normal_speed = abs(proj)
    # direction of v_n; falls back to the outward normal for tangential motion
    sgn = -1.0 if proj < 0 else 1.0
    dx, dy = sgn * nx, sgn * ny
    alpha = math.acos(max(-1.0, min(1.0, dx * ut[0] + dy * ut[1])))
    beta = math.acos(max(-1.0, min(1.0, dx * ur[0] + dy * ur[1])))
    return NormalDecomposition(normal_speed, alpha, beta, (nx, ny))


def plcr_from_decomposition(d: NormalDecomposition) -> float:
    return d.normal_speed * (math.cos(d.alpha) + math.cos(d.beta))
