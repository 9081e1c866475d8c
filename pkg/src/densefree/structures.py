"""Lazily grown countable homogeneous structures.

Four kinds are supported: a pure set, the random graph, the dense linear
order and an equivalence relation with infinitely many infinite classes.
Points are allocated on demand by realizing one-point quantifier-free types,
which is all the saturation the constructions ever need.
"""

from __future__ import annotations

import enum
import random
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, NamedTuple, Sequence

from .errors import (
    InvalidConstraint,
    MapNotDefinedOnBase,
    PreconditionViolation,
    UnknownBasePoint,
    UnknownPoint,
)

# spacing of order keys; keys are relabelled when a gap runs out
_GAP = 1 << 20


class StructureKind(enum.Enum):
    PURE_SET = "set"
    RANDOM_GRAPH = "graph"
    DLO = "dlo"
    EQ_CLASSES = "eqrel"

    @classmethod
    def parse(cls, text: str) -> StructureKind:
        for kind in cls:
            if text in (kind.value, kind.name):
                return kind
        raise ValueError(f"unknown structure kind {text!r}")


@dataclass(frozen=True)
class Cut:
    """Position of a new point in a linear order: strictly between two base points.

    ``below`` is the largest base point under the new point, ``above`` the
    smallest one over it; ``None`` stands for minus/plus infinity.
    """

    below: int | None = None
    above: int | None = None


@dataclass(frozen=True)
class QfType:
    """Quantifier-free one-point type over an ordered base.

    The constraint depends on the structure kind:

    - pure set: ``None``
    - random graph: frozenset of the base points the new point is adjacent to
    - dense order: a :class:`Cut`
    - equivalence classes: a class tag, or ``None`` for a class not met by the base
    """

    base: tuple[int, ...]
    constraint: Any = None

    @classmethod
    def adjacency(cls, base: Sequence[int], vector: Sequence[int]) -> QfType:
        if len(vector) != len(base):
            raise InvalidConstraint("adjacency vector length must equal base length")
        return cls(tuple(base), frozenset(b for b, bit in zip(base, vector) if bit))

    def adjacency_vector(self) -> tuple[int, ...]:
        return tuple(int(b in self.constraint) for b in self.base)


@dataclass(frozen=True)
class SpreadSequence:
    base: frozenset[int]
    members: tuple[int, ...]
    one_type: QfType


class MapView(NamedTuple):
    """One direction of a partial automorphism, with the indexes the structures need."""

    fwd: Mapping[int, int]
    sorted_dom: Sequence[int]
    cls_map: Mapping[int, int]


def _lookup(m: Any, p: int) -> int | None:
    if hasattr(m, "image"):
        return m.image(p)
    return m.get(p)


@dataclass
class AmbientStructure:
    kind: StructureKind
    seed: int = 0
    next_id: int = 0
    rng: random.Random = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.rng = random.Random(self.seed)
        self._adj: list[set[int]] = []
        self._key: list[int] = []
        self._okeys: list[int] = []
        self._oids: list[int] = []
        self._cls: list[int] = []
        self.num_classes = 0

    # -- basic queries -----------------------------------------------------

    @property
    def points(self) -> range:
        return range(self.next_id)

    def __len__(self) -> int:
        return self.next_id

    def _check(self, *pts: int) -> None:
        for p in pts:
            if not (isinstance(p, int) and 0 <= p < self.next_id):
                raise UnknownPoint(p)

    def adjacent(self, x: int, y: int) -> bool:
        self._check(x, y)
        return self.kind is StructureKind.RANDOM_GRAPH and y in self._adj[x]

    def neighbors(self, x: int) -> frozenset[int]:
        self._check(x)
        if self.kind is not StructureKind.RANDOM_GRAPH:
            return frozenset()
        return frozenset(self._adj[x])

    def less(self, x: int, y: int) -> bool:
        self._check(x, y)
        if self.kind is not StructureKind.DLO:
            raise TypeError("order is only defined on a dense linear order")
        return self._key[x] < self._key[y]

    def order_key(self, x: int) -> int:
        return self._key[x]

    def rank(self, x: int) -> int:
        """Position of ``x`` in the order (dense orders only)."""
        return bisect_left(self._okeys, self._key[x])

    def class_of(self, x: int) -> int:
        self._check(x)
        if self.kind is not StructureKind.EQ_CLASSES:
            raise TypeError("classes are only defined on an equivalence structure")
        return self._cls[x]

    def edges(self) -> list[tuple[int, int]]:
        if self.kind is not StructureKind.RANDOM_GRAPH:
            return []
        return [(x, y) for x in self.points for y in sorted(self._adj[x]) if x < y]

    def ordered_points(self) -> list[int]:
        return list(self._oids)

    # -- allocation ----------------------------------------------------------

    def _relabel(self) -> None:
        for i, pid in enumerate(self._oids):
            self._key[pid] = (i + 1) * _GAP
        self._okeys = [(i + 1) * _GAP for i in range(len(self._oids))]

    def _order_slots(self, where: tuple, count: int) -> tuple[int, list[int]]:
        """Return insertion index and ``count`` increasing keys for the requested gap."""
        while True:
            if where[0] == "after":
                pos = bisect_left(self._okeys, self._key[where[1]]) + 1
            elif where[0] == "bottom":
                pos = 0
            else:
                pos = len(self._okeys)
            lo = self._okeys[pos - 1] if pos > 0 else None
            hi = self._okeys[pos] if pos < len(self._okeys) else None
            if lo is None and hi is None:
                return pos, [_GAP * (j + 1) for j in range(count)]
            if hi is None:
                return pos, [lo + _GAP * (j + 1) for j in range(count)]
            if lo is None:
                return pos, [hi - _GAP * (count - j) for j in range(count)]
            step = (hi - lo) // (count + 1)
            if step > 0:
                return pos, [lo + step * (j + 1) for j in range(count)]
            self._relabel()

    def _allocate(
        self,
        count: int,
        *,
        edges: Sequence[Iterable[int]] | None = None,
        where: tuple = ("top",),
        classes: Sequence[int | None] | None = None,
    ) -> list[int]:
        """Create ``count`` points; relation data is given per new point."""
        ids = list(range(self.next_id, self.next_id + count))
        self.next_id += count
        if self.kind is StructureKind.RANDOM_GRAPH:
            for i, pid in enumerate(ids):
                nbrs = set(edges[i]) if edges else set()
                self._adj.append(nbrs)
                for x in nbrs:
                    self._adj[x].add(pid)
        elif self.kind is StructureKind.DLO:
            pos, keys = self._order_slots(where, count)
            self._key.extend(keys)
            self._okeys[pos:pos] = keys
            self._oids[pos:pos] = ids
        elif self.kind is StructureKind.EQ_CLASSES:
            for i in range(count):
                tag = classes[i] if classes else None
                if tag is None:
                    tag = self.num_classes
                    self.num_classes += 1
                self._cls.append(tag)
        return ids

    def new_class(self) -> int:
        """Reserve a class tag with no members yet."""
        tag = self.num_classes
        self.num_classes += 1
        return tag

    # -- types ------------------------------------------------------------------

    def _validate(self, t: QfType) -> None:
        base = t.base
        for b in base:
            if not (isinstance(b, int) and 0 <= b < self.next_id):
                raise UnknownBasePoint(b)
        if len(set(base)) != len(base):
            raise InvalidConstraint("base points must be distinct")
        c = t.constraint
        kind = self.kind
        if kind is StructureKind.PURE_SET:
            if c is not None:
                raise InvalidConstraint("pure set types carry no constraint")
        elif kind is StructureKind.RANDOM_GRAPH:
            if not isinstance(c, frozenset) or not c <= set(base):
                raise InvalidConstraint("graph constraint must be a subset of the base")
        elif kind is StructureKind.DLO:
            if not isinstance(c, Cut):
                raise InvalidConstraint("order constraint must be a Cut")
            bs = set(base)
            for end in (c.below, c.above):
                if end is not None and end not in bs:
                    raise InvalidConstraint(f"cut endpoint {end} is not in the base")
            lo = self._key[c.below] if c.below is not None else None
            hi = self._key[c.above] if c.above is not None else None
            if lo is not None and hi is not None and lo >= hi:
                raise InvalidConstraint("cut endpoints out of order")
            for b in base:
                k = self._key[b]
                if (lo is None or k > lo) and (hi is None or k < hi):
                    raise InvalidConstraint(f"base point {b} lies inside the cut")
        else:
            if c is not None and not (isinstance(c, int) and 0 <= c < self.num_classes):
                raise InvalidConstraint(f"unknown class tag {c!r}")

    def _realize(self, t: QfType, n: int) -> list[int]:
        kind = self.kind
        if kind is StructureKind.RANDOM_GRAPH:
            return self._allocate(n, edges=[t.constraint] * n)
        if kind is StructureKind.DLO:
            cut = t.constraint
            if cut.below is not None:
                where: tuple = ("after", cut.below)
            elif cut.above is not None:
                where = ("bottom",)
            else:
                where = ("top",)
            return self._allocate(n, where=where)
        if kind is StructureKind.EQ_CLASSES:
            return self._allocate(n, classes=[t.constraint] * n)
        return self._allocate(n)

    def create_point(self, t: QfType) -> int:
        self._validate(t)
        return self._realize(t, 1)[0]

    def qf_type_of(self, p: int, base: Sequence[int]) -> QfType:
        self._check(p, *base)
        if p in base:
            raise PreconditionViolation(f"point {p} belongs to the base")
        base = tuple(base)
        kind = self.kind
        if kind is StructureKind.RANDOM_GRAPH:
            return QfType(base, frozenset(b for b in base if b in self._adj[p]))
        if kind is StructureKind.DLO:
            k = self._key[p]
            below = [b for b in base if self._key[b] < k]
            above = [b for b in base if self._key[b] > k]
            return QfType(
                base,
                Cut(
                    max(below, key=self._key.__getitem__) if below else None,
                    min(above, key=self._key.__getitem__) if above else None,
                ),
            )
        if kind is StructureKind.EQ_CLASSES:
            c = self._cls[p]
            return QfType(base, c if any(self._cls[b] == c for b in base) else None)
        return QfType(base, None)

    def plain_type(self, base: Iterable[int]) -> QfType:
        """The canonical type over ``base``: no edges, above everything, a new class."""
        base = tuple(sorted(base))
        kind = self.kind
        if kind is StructureKind.RANDOM_GRAPH:
            return QfType(base, frozenset())
        if kind is StructureKind.DLO:
            top = max(base, key=self._key.__getitem__) if base else None
            return QfType(base, Cut(top, None))
        return QfType(base, None)

    def plain_members(self, support: Iterable[int], n: int) -> list[int]:
        """Create ``n`` points realizing ``plain_type(support)`` as a spread.

        Same result as going through ``create_spread``, without materializing
        a type over a possibly huge support.
        """
        if self.kind is StructureKind.DLO:
            if isinstance(support, range) and support == self.points:
                return self._allocate(n, where=("top",))
            pts = list(support)
            if pts:
                return self._allocate(n, where=("after", max(pts, key=self._key.__getitem__)))
        return self._allocate(n)

    def map_type(self, t: QfType, base_map: Any) -> QfType:
        """Push a type forward along a map defined on its base."""
        image: dict[int, int] = {}
        for b in t.base:
            q = _lookup(base_map, b)
            if q is None:
                raise MapNotDefinedOnBase(b)
            image[b] = q
        new_base = tuple(image[b] for b in t.base)
        c = t.constraint
        kind = self.kind
        if kind is StructureKind.RANDOM_GRAPH:
            return QfType(new_base, frozenset(image[b] for b in c))
        if kind is StructureKind.DLO:
            return QfType(
                new_base,
                Cut(
                    image[c.below] if c.below is not None else None,
                    image[c.above] if c.above is not None else None,
                ),
            )
        if kind is StructureKind.EQ_CLASSES and c is not None:
            for b in t.base:
                if self._cls[b] == c:
                    return QfType(new_base, self._cls[image[b]])
            return QfType(new_base, None)
        return QfType(new_base, c)

    # -- spreads ------------------------------------------------------------------

    def create_spread(self, base: Iterable[int], t: QfType, n: int) -> SpreadSequence:
        if n < 1:
            raise PreconditionViolation("a spread needs at least one member")
        base = frozenset(base)
        if base != set(t.base):
            raise PreconditionViolation("type base must equal the spread base")
        self._validate(t)
        if self.kind is StructureKind.EQ_CLASSES and t.constraint is None:
            members = self._allocate(n, classes=[None] * n)
        else:
            members = self._realize(t, n)
        return SpreadSequence(base, tuple(members), t)

    def realize_image_spread(
        self, src: SpreadSequence, base_map: Any, avoid: Iterable[int] = ()
    ) -> SpreadSequence:
        for b in src.base:
            if _lookup(base_map, b) is None:
                raise MapNotDefinedOnBase(b)
        image_type = self.map_type(src.one_type, base_map)
        spread = self.create_spread(image_type.base, image_type, len(src.members))
        # freshness makes this automatic; keep the contract explicit
        clash = set(spread.members) & (set(avoid) | set(src.members))
        if clash:
            raise AssertionError(f"image spread meets avoided points {sorted(clash)}")
        return spread

    def check_spread(self, sp: SpreadSequence) -> None:
        """Raise AssertionError unless ``sp`` satisfies every spread invariant."""
        members = sp.members
        assert len(set(members)) == len(members), "members repeat"
        assert not set(members) & sp.base, "members meet the base"
        for x in members:
            got = self.qf_type_of(x, sp.one_type.base)
            assert got == sp.one_type, f"member {x} realizes {got}, not {sp.one_type}"
        kind = self.kind
        if kind is StructureKind.RANDOM_GRAPH:
            assert not any(self._adj[x] & set(members) for x in members), "edges among members"
        elif kind is StructureKind.DLO:
            keys = [self._key[x] for x in members]
            assert keys == sorted(keys), "members not increasing"
        elif kind is StructureKind.EQ_CLASSES:
            tags = [self._cls[x] for x in members]
            if sp.one_type.constraint is None:
                assert len(set(tags)) == len(tags), "members share a class"

    # -- maps ------------------------------------------------------------------------

    def is_partial_isomorphism(self, m: Mapping[int, int]) -> bool:
        items = list(m.items())
        for a, b in items:
            self._check(a, b)
        if len({b for _, b in items}) != len(items):
            return False
        kind = self.kind
        if kind is StructureKind.RANDOM_GRAPH:
            fwd = dict(items)
            ran = set(fwd.values())
            inner_dom = 0
            for a, b in items:
                for x in self._adj[a]:
                    if x in fwd:
                        inner_dom += 1
                        if fwd[x] not in self._adj[b]:
                            return False
            inner_ran = sum(1 for _, b in items for y in self._adj[b] if y in ran)
            return inner_dom == inner_ran
        if kind is StructureKind.DLO:
            items.sort(key=lambda ab: self._key[ab[0]])
            keys = [self._key[b] for _, b in items]
            return all(x < y for x, y in zip(keys, keys[1:]))
        if kind is StructureKind.EQ_CLASSES:
            fwd_cls: dict[int, int] = {}
            bwd_cls: dict[int, int] = {}
            for a, b in items:
                ca, cb = self._cls[a], self._cls[b]
                if fwd_cls.setdefault(ca, cb) != cb or bwd_cls.setdefault(cb, ca) != ca:
                    return False
        return True

    def _bounds(self, sorted_dom: Sequence[int], p: int) -> tuple[int | None, int | None]:
        i = bisect_left(sorted_dom, self._key[p], key=self._key.__getitem__)
        pred = sorted_dom[i - 1] if i > 0 else None
        succ = sorted_dom[i] if i < len(sorted_dom) else None
        if succ == p:
            succ = sorted_dom[i + 1] if i + 1 < len(sorted_dom) else None
        return pred, succ

    def compatible(self, fwd: MapView, bwd: MapView, a: int, b: int) -> bool:
        """Whether adding ``a -> b`` to the map keeps relations in both directions.

        Injectivity is the caller's business; only kind relations are checked,
        using neighbourhoods and sorted indexes instead of the whole map.
        """
        kind = self.kind
        if kind is StructureKind.RANDOM_GRAPH:
            adj_a, adj_b = self._adj[a], self._adj[b]
            f, g = fwd.fwd, bwd.fwd
            for x in adj_a:
                y = f.get(x)
                if y is not None and y not in adj_b:
                    return False
            for y in adj_b:
                x = g.get(y)
                if x is not None and x not in adj_a:
                    return False
            return True
        if kind is StructureKind.DLO:
            pred, succ = self._bounds(fwd.sorted_dom, a)
            kb = self._key[b]
            if pred is not None and self._key[fwd.fwd[pred]] >= kb:
                return False
            if succ is not None and self._key[fwd.fwd[succ]] <= kb:
                return False
            return True
        if kind is StructureKind.EQ_CLASSES:
            ca, cb = self._cls[a], self._cls[b]
            return fwd.cls_map.get(ca, cb) == cb and bwd.cls_map.get(cb, ca) == ca
        return True

    def realize_image(self, view: MapView, pts: Sequence[int]) -> tuple[int, ...]:
        """Fresh points ``q`` such that ``view`` plus ``pts[i] -> q[i]`` stays a partial isomorphism.

        Only the neighbourhood of each point is consulted, so the cost does not
        grow with the size of the map.
        """
        self._check(*pts)
        for p in pts:
            if p in view.fwd:
                raise PreconditionViolation(f"point {p} is already in the domain")
        kind = self.kind
        n = len(pts)
        if kind is StructureKind.RANDOM_GRAPH:
            out: list[int] = []
            for i, p in enumerate(pts):
                nbrs = {view.fwd[x] for x in self._adj[p] if x in view.fwd}
                nbrs.update(out[j] for j in range(i) if pts[j] in self._adj[p])
                out.extend(self._allocate(1, edges=[nbrs]))
            return tuple(out)
        if kind is StructureKind.DLO:
            groups: dict[int | None, list[int]] = {}
            for p in pts:
                pred, _ = self._bounds(view.sorted_dom, p)
                groups.setdefault(pred, []).append(p)
            image: dict[int, int] = {}
            for pred, members in groups.items():
                members.sort(key=self._key.__getitem__)
                if pred is not None:
                    where: tuple = ("after", view.fwd[pred])
                elif view.sorted_dom:
                    where = ("bottom",)
                else:
                    where = ("top",)
                for p, q in zip(members, self._allocate(len(members), where=where)):
                    image[p] = q
            return tuple(image[p] for p in pts)
        if kind is StructureKind.EQ_CLASSES:
            fresh: dict[int, int] = {}
            tags = []
            for p in pts:
                c = self._cls[p]
                if c in view.cls_map:
                    tags.append(view.cls_map[c])
                else:
                    if c not in fresh:
                        fresh[c] = self.new_class()
                    tags.append(fresh[c])
            return tuple(self._allocate(n, classes=tags))
        return tuple(self._allocate(n))

    # -- serialization ------------------------------------------------------------

    def relation_rows(self) -> list[list]:
        """Per-point relation data, sorted by id, in certificate form."""
        kind = self.kind
        if kind is StructureKind.RANDOM_GRAPH:
            return [[p, sorted(x for x in self._adj[p] if x < p)] for p in self.points]
        if kind is StructureKind.DLO:
            ranks = {pid: i for i, pid in enumerate(self._oids)}
            return [[p, ranks[p]] for p in self.points]
        if kind is StructureKind.EQ_CLASSES:
            return [[p, self._cls[p]] for p in self.points]
        return [[p] for p in self.points]

    @classmethod
    def from_relation_rows(cls, kind: StructureKind, seed: int, rows: Sequence[Sequence]) -> AmbientStructure:
        s = cls(kind, seed)
        n = len(rows)
        for i, row in enumerate(rows):
            if row[0] != i:
                raise ValueError("point rows must list ids 0..n-1 in order")
        s.next_id = n
        if kind is StructureKind.RANDOM_GRAPH:
            s._adj = [set() for _ in range(n)]
            for p, lower in rows:
                for x in lower:
                    s._adj[p].add(x)
                    s._adj[x].add(p)
        elif kind is StructureKind.DLO:
            order = sorted(range(n), key=lambda p: rows[p][1])
            s._oids = order
            s._key = [0] * n
            s._relabel()
        elif kind is StructureKind.EQ_CLASSES:
            s._cls = [row[1] for row in rows]
            s.num_classes = max(s._cls, default=-1) + 1
        return s


def new_structure(kind: StructureKind, seed: int = 0) -> AmbientStructure:
    return AmbientStructure(kind, seed)
