"""Replay buffer containers.

The buffer is deliberately minimal: an immutable, ordered collection of
experiences with stable ids.  All estimators treat buffer order as part of
their deterministic contract, so nothing here ever reorders items.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Iterator


@dataclass(frozen=True)
class Experience:
    """One stored item: an opaque payload plus its position id."""

    payload: Any
    id: int


class ReplayBuffer:
    def __init__(self, experiences: Iterable[Experience]):
        items = tuple(experiences)
        if not items:
            raise ValueError("replay buffer needs at least one experience")
        ids = [e.id for e in items]
        if len(set(ids)) != len(ids):
            raise ValueError("experience ids must be unique")
        self._items = items

    @classmethod
    def from_payloads(cls, payloads: Iterable[Any]) -> "ReplayBuffer":
        return cls(Experience(payload=z, id=i) for i, z in enumerate(payloads))

    @property
    def n(self) -> int:
        return len(self._items)

    @property
    def items(self) -> tuple[Experience, ...]:
        return self._items

    def payloads(self) -> list[Any]:
        return [e.payload for e in self._items]

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[Experience]:
        return iter(self._items)

    def __getitem__(self, i: int) -> Experience:
        return self._items[i]


def as_buffer(data) -> ReplayBuffer:
    """Coerce a ReplayBuffer or a plain sequence of payloads to a buffer."""
    if isinstance(data, ReplayBuffer):
        return data
    return ReplayBuffer.from_payloads(data)
