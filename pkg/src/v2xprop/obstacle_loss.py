"""Obstacle loss models: binary blocking and lossy-dielectric attenuation.

The dielectric model multiplies, per traversed obstacle, a bulk absorption
term ``exp(-atan(tan_delta) * 2*pi*f * chord / v)`` with ``v = c / sqrt(eps_r)``
and a normal-incidence Fresnel power transmission for the entry and exit
faces. Factors are combined in ascending obstacle id so the product does not
depend on the order intersections were found in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from numba import njit

from .geometry import Intersection

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class Material:
    name: str
    relative_permittivity: float
    loss_tangent: float

    def __post_init__(self) -> None:
        if not self.relative_permittivity > 1.0:
            raise ValueError(
                f"material {self.name!r}: relative permittivity must be > 1, "
                f"got {self.relative_permittivity}"
            )
        if not self.loss_tangent >= 0.0:
            raise ValueError(
                f"material {self.name!r}: loss tangent must be >= 0, got {self.loss_tangent}"
            )


@dataclass(frozen=True)
class LossFactor:
    power_factor: float
    blocked: bool = False

    @property
    def loss_db(self) -> float:
        if self.power_factor == 0.0:
            return math.inf
        return -10.0 * math.log10(self.power_factor)


@njit(nogil=True, cache=True)
def traversal_factor(eps_r, tan_delta, frequency, chord):
    v = SPEED_OF_LIGHT / math.sqrt(eps_r)
    return math.exp(-math.atan(tan_delta) * 2.0 * math.pi * frequency * chord / v)


@njit(nogil=True, cache=True)
def fresnel_pair_factor(eps_r):
    n = math.sqrt(eps_r)
    r = (1.0 - n) / (1.0 + n)
    t = 1.0 - r * r
    return t * t


def ideal_loss(intersections: Sequence[object]) -> LossFactor:
    """Any intersection blocks the link completely."""
    if len(intersections) > 0:
        return LossFactor(0.0, True)
    return LossFactor(1.0, False)


def dielectric_traversal_factor(mat: Material, f: float, chord: float) -> float:
    """Linear power ratio left after crossing ``chord`` meters of ``mat`` at ``f`` Hz."""
    if f <= 0:
        raise ValueError(f"frequency must be > 0, got {f}")
    if chord < 0:
        raise ValueError(f"chord must be >= 0, got {chord}")
    return traversal_factor(mat.relative_permittivity, mat.loss_tangent, f, chord)


def reflection_factor(mat: Material) -> float:
    """Entry plus exit face power transmission at normal incidence."""
    return fresnel_pair_factor(mat.relative_permittivity)


def dielectric_loss(
    intersections: Iterable[tuple[Intersection, Material]], f: float
) -> LossFactor:
    factor = 1.0
    for hit, mat in sorted(intersections, key=lambda pair: pair[0].obstacle_id):
        factor *= dielectric_traversal_factor(mat, f, hit.chord_length) * reflection_factor(mat)
    return LossFactor(factor, False)
