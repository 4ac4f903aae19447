"""Single-bay yard model: stacks, crane position and the two objectives.

Stacks are addressed with 1-based indices; stack ``i`` sits at trolley
coordinate ``i`` and the truck waits at coordinate 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from .errors import EmptyOrigin, EmptyYard, SameStack, StackFull, TargetBlocked

RELOCATE = "relocate"
RETRIEVE = "retrieve"


@dataclass(frozen=True)
class TimeModel:
    """Crane timing constants (seconds)."""

    pickup: float = 30.0
    trolley: float = 1.2
    # crane returns to the truck (coordinate 0) after every retrieval
    reset_after_retrieve: bool = True


DEFAULT_TIME = TimeModel()


def move_time(crane: int, origin: int, destination: int, model: TimeModel = DEFAULT_TIME) -> float:
    """Seconds to fetch the container at ``origin`` and drop it at ``destination``."""
    return (model.trolley * abs(crane - origin) + model.trolley * abs(origin - destination)) + model.pickup


@dataclass(frozen=True)
class Move:
    kind: str
    origin: int
    destination: int
    container: int
    seconds: float


@dataclass
class SolutionStats:
    relocations: int = 0
    crane_seconds: float = 0.0
    moves: List[Move] = field(default_factory=list)

    def add(self, move: Move) -> None:
        self.moves.append(move)
        if move.kind == RELOCATE:
            self.relocations += 1
        self.crane_seconds += move.seconds

    @property
    def retrievals(self) -> int:
        return sum(1 for m in self.moves if m.kind == RETRIEVE)

    def objective(self, name: str) -> float:
        if name == "relocations":
            return float(self.relocations)
        if name in ("craneSeconds", "crane_seconds", "time"):
            return self.crane_seconds
        raise ValueError(f"unknown objective {name!r}")

    def to_csv(self) -> str:
        """Move log as ``step,kind,origin,destination,container,seconds``."""
        lines = ["step,kind,origin,destination,container,seconds"]
        for i, m in enumerate(self.moves, 1):
            lines.append(f"{i},{m.kind},{m.origin},{m.destination},{m.container},{m.seconds!r}")
        return "\n".join(lines) + "\n"


class Yard:
    """Mutable bay state.

    Parameters
    ----------
    stacks : sequence of sequences of int
        Container IDs per stack, bottom to top.
    max_height : int
        Tier count ``T``.
    crane : int
        Initial trolley coordinate.
    n_containers : int, optional
        Container count recorded for the instance (defaults to the number
        present). Used for the empty-stack ``MIN`` sentinel.
    """

    def __init__(
        self,
        stacks: Sequence[Sequence[int]],
        max_height: int,
        crane: int = 0,
        time_model: TimeModel = DEFAULT_TIME,
        n_containers: Optional[int] = None,
    ):
        self.stacks = [list(s) for s in stacks]
        self.max_height = int(max_height)
        self.crane = int(crane)
        self.time_model = time_model
        ids = [c for s in self.stacks for c in s]
        if len(set(ids)) != len(ids):
            raise ValueError("container IDs must be distinct")
        if any(c <= 0 for c in ids):
            raise ValueError("container IDs must be positive")
        if any(len(s) > self.max_height for s in self.stacks):
            raise ValueError("stack exceeds max height")
        if not 0 <= self.crane <= len(self.stacks):
            raise ValueError("crane position out of range")
        self.n_containers = len(ids) if n_containers is None else int(n_containers)
        # MIN of an empty stack: larger than every container
        self.sentinel = max([self.n_containers] + ids) + 1
        self._order = sorted(ids)
        self._next = 0

    # -- inspection -------------------------------------------------------
    @property
    def n_stacks(self) -> int:
        return len(self.stacks)

    def __len__(self) -> int:
        return len(self._order) - self._next

    @property
    def empty(self) -> bool:
        return self._next >= len(self._order)

    def height(self, i: int) -> int:
        return len(self.stacks[i - 1])

    def stack(self, i: int) -> List[int]:
        return self.stacks[i - 1]

    def top(self, i: int) -> Optional[int]:
        s = self.stacks[i - 1]
        return s[-1] if s else None

    def is_full(self, i: int) -> bool:
        return len(self.stacks[i - 1]) >= self.max_height

    def min_id(self, i: int) -> int:
        s = self.stacks[i - 1]
        return min(s) if s else self.sentinel

    def remaining(self, k: int = 0) -> Optional[int]:
        """The k-th smallest remaining ID (0 = target), or None."""
        j = self._next + k
        return self._order[j] if j < len(self._order) else None

    def locate(self, container: int) -> int:
        for i, s in enumerate(self.stacks, 1):
            if container in s:
                return i
        raise KeyError(container)

    def target(self):
        """``(container, stack)`` of the next container to retrieve."""
        if self.empty:
            raise EmptyYard("yard is empty")
        c = self._order[self._next]
        return c, self.locate(c)

    def copy(self) -> "Yard":
        y = Yard.__new__(Yard)
        y.stacks = [list(s) for s in self.stacks]
        y.max_height = self.max_height
        y.crane = self.crane
        y.time_model = self.time_model
        y.n_containers = self.n_containers
        y.sentinel = self.sentinel
        y._order = self._order[self._next:]
        y._next = 0
        return y

    def __eq__(self, other):
        if not isinstance(other, Yard):
            return NotImplemented
        return (self.stacks, self.max_height, self.crane) == (other.stacks, other.max_height, other.crane)

    def __repr__(self):
        return f"Yard({self.stacks!r}, max_height={self.max_height}, crane={self.crane})"

    # -- moves --------------------------------------------------------------
    def move_time(self, origin: int, destination: int) -> float:
        return move_time(self.crane, origin, destination, self.time_model)

    def relocate(self, origin: int, destination: int) -> Move:
        if origin == destination:
            raise SameStack(f"origin and destination are both {origin}")
        src = self.stacks[origin - 1]
        dst = self.stacks[destination - 1]
        if not src:
            raise EmptyOrigin(f"stack {origin} is empty")
        if len(dst) >= self.max_height:
            raise StackFull(f"stack {destination} is full")
        seconds = self.move_time(origin, destination)
        c = src.pop()
        dst.append(c)
        self.crane = destination
        return Move(RELOCATE, origin, destination, c, seconds)

    def retrieve(self) -> Move:
        c, s = self.target()
        if self.stacks[s - 1][-1] != c:
            raise TargetBlocked(f"container {c} is not on top of stack {s}")
        seconds = self.move_time(s, 0)
        self.stacks[s - 1].pop()
        self._next += 1
        self.crane = 0 if self.time_model.reset_after_retrieve else s
        return Move(RETRIEVE, s, 0, c, seconds)


def target_container(yard: Yard):
    return yard.target()


def count_blocking(stacks: Sequence[Sequence[int]]) -> int:
    """Containers sitting above some smaller ID (each must move at least once)."""
    n = 0
    for s in stacks:
        low = None
        for c in s:
            if low is not None and c > low:
                n += 1
            else:
                low = c
    return n
