"""Predator-prey model on a 2-D lattice, expressed as behaviour rules.

State indexing: id = ((y * width) + x) * 2 + species with species 0 = prey
and 1 = predator.  The default geometry is a torus so every cell carries
an identical rule set; ``walled`` simply omits off-grid moves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .hamiltonian import ActionRule, BehaviorSpec, InteractionRule

PREY = 0
PREDATOR = 1


@dataclass(frozen=True)
class GridRates:
    """Per-behaviour rates; movement and reproduction are totals by default."""

    prey_death: float = 0.1
    prey_reproduction: float = 0.15
    prey_movement: float = 1.0
    predator_death: float = 0.1
    predation: float = 0.5
    predator_movement: float = 1.0


def grid_index(x: int, y: int, species: int, width: int) -> int:
    return ((y * width) + x) * 2 + species


def grid_coords(index: int, width: int) -> Tuple[int, int, int]:
    cell, species = divmod(index, 2)
    y, x = divmod(cell, width)
    return x, y, species


def neighbors(x: int, y: int, width: int, height: int,
              boundary: str = "torus") -> List[Tuple[int, int]]:
    """The up/down/left/right neighbours of a cell."""
    steps = [(0, -1), (0, 1), (-1, 0), (1, 0)]
    out = []
    for dx, dy in steps:
        nx, ny = x + dx, y + dy
        if boundary == "torus":
            out.append((nx % width, ny % height))
        elif 0 <= nx < width and 0 <= ny < height:
            out.append((nx, ny))
    return out


#: cell maps (dx, dy) -> (a dx + b dy, c dx + d dy) as flat (a, b, c, d)
_IDENTITY = (1, 0, 0, 1)
_RECT_TRANSFORMS = [(1, 0, 0, 1), (-1, 0, 0, 1), (1, 0, 0, -1),
                    (-1, 0, 0, -1)]
_SQUARE_TRANSFORMS = _RECT_TRANSFORMS + [(0, 1, 1, 0), (0, -1, 1, 0),
                                         (0, 1, -1, 0), (0, -1, -1, 0)]


class TorusSymmetry:
    """Lattice symmetry group for reusing assimilation series.

    On a torus every cell carries an identical rule set, so the evolution
    operator commutes with lattice shifts and with the grid's rotations
    and reflections: a series whose seed has the same shape relative to
    its target, in any orientation, can share one operator recurrence,
    re-evaluated per target against the mapped rate field.  Only valid
    for torus-boundary models.
    """

    def __init__(self, width: int, height: int, num_species: int = 2):
        self.width = width
        self.height = height
        self.num_species = num_species
        self.num_states = width * height * num_species
        self.transforms = (_SQUARE_TRANSFORMS if width == height
                           else _RECT_TRANSFORMS)
        self._gathers: Dict[tuple, np.ndarray] = {}

    def anchor(self, index: int) -> Tuple[int, int]:
        """The cell of ``index``, used as the origin of its frame."""
        cell, _sp = divmod(index, self.num_species)
        y, x = divmod(cell, self.width)
        return x, y

    def to_canonical(self, index: int, anchor: Tuple[int, int],
                     transform: tuple = _IDENTITY) -> int:
        """Map an index into the transformed frame with origin ``anchor``."""
        cell, sp = divmod(index, self.num_species)
        y, x = divmod(cell, self.width)
        dx = x - anchor[0]
        dy = y - anchor[1]
        a, b, c, d = transform
        cx = (a * dx + b * dy) % self.width
        cy = (c * dx + d * dy) % self.height
        return ((cy * self.width) + cx) * self.num_species + sp

    def canonical_shape(self, items: Sequence[Tuple[int, float, float]],
                        anchor: Tuple[int, int]) -> Tuple[tuple, tuple]:
        """Least shape of ``(index, *tags)`` items over all orientations.

        Returns the shape tuple and the transform that produced it, so
        equivalent constellations around different anchors share a key.
        """
        best = None
        for tf in self.transforms:
            shape = tuple(sorted(
                (self.to_canonical(i, anchor, tf),) + tuple(rest)
                for i, *rest in items))
            if best is None or shape < best[0]:
                best = (shape, tf)
        return best

    def gather(self, anchor: Tuple[int, int],
               transform: tuple = _IDENTITY) -> np.ndarray:
        """Index array g with g[canonical] = actual for this frame."""
        key = (anchor, transform)
        g = self._gathers.get(key)
        if g is None:
            # the transforms are orthogonal, so the inverse cell map is
            # the transpose
            a, b, c, d = transform
            cgx, cgy = np.meshgrid(np.arange(self.width),
                                   np.arange(self.height))
            x = (anchor[0] + a * cgx + c * cgy) % self.width
            y = (anchor[1] + b * cgx + d * cgy) % self.height
            cells = (y * self.width + x).ravel()
            g = (cells[:, None] * self.num_species
                 + np.arange(self.num_species)[None, :]).ravel()
            self._gathers[key] = g
        return g


def predator_prey_spec(width: int, height: int,
                       rates: GridRates = GridRates(),
                       boundary: str = "torus",
                       per_neighbor_rates: bool = False) -> BehaviorSpec:
    """Build the lattice predator-prey behaviour set.

    Movement and reproduction rates are interpreted as total propensities
    split uniformly over the available neighbours; set
    ``per_neighbor_rates`` to apply the table value to each neighbour
    instead.  Predation is always per adjacent predator-prey pair: the
    prey is consumed and a new predator appears on the prey's square.
    """
    if boundary not in ("torus", "walled"):
        raise ValueError(f"unknown boundary mode {boundary!r}")
    actions: List[ActionRule] = []
    interactions: List[InteractionRule] = []
    for y in range(height):
        for x in range(width):
            prey_here = grid_index(x, y, PREY, width)
            pred_here = grid_index(x, y, PREDATOR, width)
            nbrs = neighbors(x, y, width, height, boundary)
            share = 1.0 if per_neighbor_rates or not nbrs else 1.0 / len(nbrs)

            actions.append(ActionRule(prey_here, rates.prey_death, ()))
            actions.append(ActionRule(pred_here, rates.predator_death, ()))
            for nx, ny in nbrs:
                prey_there = grid_index(nx, ny, PREY, width)
                pred_there = grid_index(nx, ny, PREDATOR, width)
                actions.append(ActionRule(prey_here,
                                          rates.prey_reproduction * share,
                                          (prey_here, prey_there)))
                actions.append(ActionRule(prey_here,
                                          rates.prey_movement * share,
                                          (prey_there,)))
                actions.append(ActionRule(pred_here,
                                          rates.predator_movement * share,
                                          (pred_there,)))
                interactions.append(InteractionRule(pred_here, prey_there,
                                                    rates.predation,
                                                    (pred_here, pred_there)))
    return BehaviorSpec(num_states=width * height * 2,
                        actions=actions, interactions=interactions)
