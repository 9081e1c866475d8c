"""Finite partial automorphisms and stagewise-extended generators."""

from __future__ import annotations

import enum
from bisect import insort
from collections import Counter
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import ConflictingPair, NotIsomorphism, PreconditionViolation, StageRegression
from .structures import AmbientStructure, MapView, StructureKind
from .words import GeneratorLabel


class ImagePolicy(enum.Enum):
    FRESH = "fresh"
    REUSE = "reuse"


class Direction(enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


class PartialAutomorphism(Mapping):
    """Finite injective relation-preserving map on one structure.

    Every insertion is checked against the structure, so an instance is a
    partial isomorphism at all times. Both directions are indexed.
    """

    def __init__(self, structure: AmbientStructure, pairs: Iterable[tuple[int, int]] | Mapping[int, int] = ()):
        self.structure = structure
        self._fwd: dict[int, int] = {}
        self._bwd: dict[int, int] = {}
        self._cls_fwd: dict[int, int] = {}
        self._cls_bwd: dict[int, int] = {}
        self._cls_count: Counter[int] = Counter()
        self._sdom: list[int] = []
        self._sran: list[int] = []
        if isinstance(pairs, Mapping):
            pairs = pairs.items()
        self.update(pairs)

    # Mapping protocol
    def __getitem__(self, a: int) -> int:
        return self._fwd[a]

    def __iter__(self) -> Iterator[int]:
        return iter(self._fwd)

    def __len__(self) -> int:
        return len(self._fwd)

    def __contains__(self, a: object) -> bool:
        return a in self._fwd

    def __repr__(self) -> str:
        return f"PartialAutomorphism({dict(self.pairs())})"

    def image(self, a: int) -> int | None:
        return self._fwd.get(a)

    def preimage(self, b: int) -> int | None:
        return self._bwd.get(b)

    def domain(self) -> frozenset[int]:
        return frozenset(self._fwd)

    def ran(self) -> frozenset[int]:
        return frozenset(self._bwd)

    def in_range(self, b: int) -> bool:
        return b in self._bwd

    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self._fwd.items())

    def view(self, inverse: bool = False) -> MapView:
        if inverse:
            return MapView(self._bwd, self._sran, self._cls_bwd)
        return MapView(self._fwd, self._sdom, self._cls_fwd)

    def issubset(self, other: Mapping[int, int]) -> bool:
        return all(other.get(a) == b for a, b in self._fwd.items())

    __le__ = issubset

    def copy(self) -> PartialAutomorphism:
        return PartialAutomorphism(self.structure, self.pairs())

    def inverse(self) -> PartialAutomorphism:
        return PartialAutomorphism(self.structure, [(b, a) for a, b in self.pairs()])

    def restrict(self, pts: Iterable[int]) -> PartialAutomorphism:
        pts = set(pts)
        return PartialAutomorphism(self.structure, [(a, b) for a, b in self.pairs() if a in pts])

    # mutation
    def can_add(self, a: int, b: int) -> bool:
        if a in self._fwd or b in self._bwd:
            return self._fwd.get(a) == b
        return self.structure.compatible(self.view(), self.view(inverse=True), a, b)

    def add(self, a: int, b: int) -> bool:
        """Insert ``a -> b``; returns False when the pair was already present."""
        s = self.structure
        s._check(a, b)
        if a in self._fwd:
            if self._fwd[a] == b:
                return False
            raise ConflictingPair(f"{a} already maps to {self._fwd[a]}, not {b}")
        if b in self._bwd:
            raise ConflictingPair(f"{b} is already the image of {self._bwd[b]}")
        if not s.compatible(self.view(), self.view(inverse=True), a, b):
            raise NotIsomorphism(f"adding {a} -> {b} breaks the relations")
        self._fwd[a] = b
        self._bwd[b] = a
        if s.kind is StructureKind.EQ_CLASSES:
            ca, cb = s._cls[a], s._cls[b]
            self._cls_fwd[ca] = cb
            self._cls_bwd[cb] = ca
            self._cls_count[ca] += 1
        elif s.kind is StructureKind.DLO:
            insort(self._sdom, a, key=s._key.__getitem__)
            insort(self._sran, b, key=s._key.__getitem__)
        return True

    def _remove(self, a: int) -> None:
        s = self.structure
        b = self._fwd.pop(a)
        del self._bwd[b]
        if s.kind is StructureKind.EQ_CLASSES:
            ca = s._cls[a]
            self._cls_count[ca] -= 1
            if not self._cls_count[ca]:
                del self._cls_count[ca]
                del self._cls_bwd[self._cls_fwd.pop(ca)]
        elif s.kind is StructureKind.DLO:
            self._sdom.remove(a)
            self._sran.remove(b)

    def update(self, pairs: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
        """Add all pairs or none; returns the pairs that were new."""
        added: list[tuple[int, int]] = []
        try:
            for a, b in pairs:
                if self.add(a, b):
                    added.append((a, b))
        except Exception:
            for a, _ in reversed(added):
                self._remove(a)
            raise
        return added


def union_maps(structure: AmbientStructure, maps: Iterable[Mapping[int, int]]) -> dict[int, int]:
    """Plain union of maps; ConflictingPair if two of them disagree on a point."""
    out: dict[int, int] = {}
    for m in maps:
        for a, b in m.items():
            if out.setdefault(a, b) != b:
                raise ConflictingPair(f"maps disagree at {a}: {out[a]} vs {b}")
    return out


@dataclass
class LazyAutomorphism:
    """A generator built up over stages; pairs are only ever added."""

    label: GeneratorLabel
    structure: AmbientStructure
    policy: ImagePolicy = ImagePolicy.FRESH
    committed: PartialAutomorphism = field(init=False)
    stages: list[tuple[int, list[tuple[int, int]]]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.committed = PartialAutomorphism(self.structure)

    @property
    def last_stage(self) -> int | None:
        return self.stages[-1][0] if self.stages else None

    @property
    def born(self) -> int | None:
        return self.stages[0][0] if self.stages else None

    def commit_pairs(self, new_pairs: Iterable[tuple[int, int]] | Mapping[int, int], stage: int) -> LazyAutomorphism:
        """Extend the committed graph; commits within one stage share its log entry."""
        if self.last_stage is not None and stage < self.last_stage:
            raise StageRegression(f"stage {stage} precedes logged stage {self.last_stage}")
        if isinstance(new_pairs, Mapping):
            new_pairs = new_pairs.items()
        added = self.committed.update(new_pairs)
        if added:
            if self.last_stage == stage:
                self.stages[-1][1].extend(added)
            else:
                self.stages.append((stage, added))
        return self

    def committed_at(self, stage: int) -> PartialAutomorphism:
        pairs = [ab for s, chunk in self.stages if s <= stage for ab in chunk]
        return PartialAutomorphism(self.structure, pairs)

    def _pick_image(self, p: int, inverse: bool, policy: ImagePolicy) -> int:
        g = self.committed
        s = self.structure
        if policy is ImagePolicy.REUSE:
            fwd, bwd = g.view(inverse), g.view(not inverse)
            for q in s.points:
                if q in bwd.fwd:
                    continue
                if s.compatible(fwd, bwd, p, q):
                    return q
        return s.realize_image(g.view(inverse), [p])[0]

    def extend_to_point(
        self, p: int, direction: Direction, stage: int, policy: ImagePolicy | None = None
    ) -> LazyAutomorphism:
        policy = policy or self.policy
        g = self.committed
        if direction is Direction.FORWARD:
            if p in g:
                raise PreconditionViolation(f"{p} is already in the domain of {self.label}")
            q = self._pick_image(p, False, policy)
            return self.commit_pairs([(p, q)], stage)
        if g.in_range(p):
            raise PreconditionViolation(f"{p} is already in the range of {self.label}")
        q = self._pick_image(p, True, policy)
        return self.commit_pairs([(q, p)], stage)

    def close_over(self, pts: Iterable[int], stage: int, policy: ImagePolicy | None = None) -> LazyAutomorphism:
        for p in sorted(pts):
            if p not in self.committed:
                self.extend_to_point(p, Direction.FORWARD, stage, policy)
            if not self.committed.in_range(p):
                self.extend_to_point(p, Direction.BACKWARD, stage, policy)
        return self

    def restrict(self, pts: Iterable[int]) -> PartialAutomorphism:
        return self.committed.restrict(pts)

    def image(self, p: int) -> int | None:
        return self.committed.image(p)

    def preimage(self, p: int) -> int | None:
        return self.committed.preimage(p)
