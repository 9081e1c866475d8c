"""Array-based constructions on an equivalence relation with infinitely many classes.

Classes play the role of types: a registry of fresh cells ``(i, column,
row)`` puts every cell of type ``i`` into class ``classes[i]``. Free
behaviour comes from permuting rows through the left regular
representation of a finite-rank free group acting on the naturals.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

from .automorphisms import LazyAutomorphism, PartialAutomorphism
from .errors import (
    ClassNotRepresented,
    MissingLabel,
    NoCommonColumn,
    NotClassCoherent,
    PreconditionViolation,
    RowOutOfRange,
)
from .structures import AmbientStructure, StructureKind
from .words import GeneratorLabel, Letter, ReducedWord, count_words, reduce

# -- registry -------------------------------------------------------------------


class ArrayIndex(NamedTuple):
    type_idx: int
    column: int
    row: int


@dataclass
class ArrayRegistry:
    structure: AmbientStructure
    dims: tuple[int, int, int]
    classes: tuple[int, ...]
    cells: dict[ArrayIndex, int] = field(default_factory=dict)
    base: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        self._where = {p: ix for ix, p in self.cells.items()}
        self._type_of_class = {c: i for i, c in enumerate(self.classes)}

    @property
    def types(self) -> int:
        return self.dims[0]

    @property
    def columns(self) -> int:
        return self.dims[1]

    @property
    def rows(self) -> int:
        return self.dims[2]

    def point(self, ix: ArrayIndex | tuple[int, int, int]) -> int:
        return self.cells[ArrayIndex(*ix)]

    def index_of(self, p: int) -> ArrayIndex | None:
        return self._where.get(p)

    def type_of_class(self, c: int) -> int | None:
        return self._type_of_class.get(c)

    def grow(self, rows: int) -> list[int]:
        """Add rows up to ``rows``; new cells are fresh points. Returns them."""
        t, c, r = self.dims
        if rows <= r:
            return []
        s = self.structure
        added = []
        for i in range(t):
            for z in range(c):
                pts = s._allocate(rows - r, classes=[self.classes[i]] * (rows - r))
                for x, p in zip(range(r, rows), pts):
                    ix = ArrayIndex(i, z, x)
                    self.cells[ix] = p
                    self._where[p] = ix
                added.extend(pts)
        self.dims = (t, c, rows)
        return added

    def check(self) -> None:
        s = self.structure
        assert len(set(self.cells.values())) == len(self.cells), "cells share a point"
        assert not set(self.cells.values()) & self.base, "a cell lies in the base"
        for ix, p in self.cells.items():
            assert s.class_of(p) == self.classes[ix.type_idx], f"cell {ix} is in the wrong class"


def build_registry(
    s: AmbientStructure, dims: tuple[int, int, int], base: Iterable[int] = ()
) -> ArrayRegistry:
    """Allocate a ``types x columns x rows`` array of fresh cells.

    Type ``i`` uses the ``i``-th smallest class that already meets the base,
    topped up with new classes when the base meets fewer than ``types``.
    """
    if s.kind is not StructureKind.EQ_CLASSES:
        raise PreconditionViolation("arrays live on an equivalence structure")
    t, c, r = dims
    if min(dims) < 1:
        raise PreconditionViolation("registry dims must be positive")
    base = frozenset(base)
    s._check(*base)
    seen = sorted({s.class_of(b) for b in base})[:t]
    classes = tuple(seen + [s.new_class() for _ in range(t - len(seen))])
    cells: dict[ArrayIndex, int] = {}
    for i in range(t):
        for z in range(c):
            for x, p in enumerate(s._allocate(r, classes=[classes[i]] * r)):
                cells[ArrayIndex(i, z, x)] = p
    return ArrayRegistry(s, (t, c, r), classes, cells, base)


# -- the free group acting on the naturals ----------------------------------------


def abstract_label(j: int) -> GeneratorLabel:
    return GeneratorLabel(0, j)


class WordIndex:
    """Length-lexicographic numbering of the reduced words of rank ``k``.

    Letter ``j`` is label ``abstract_label(j)``; ``+`` precedes ``-`` and the
    empty word gets 0, so the order continues ``enumerate_words`` after it.
    """

    def __init__(self, k: int):
        if k < 1:
            raise PreconditionViolation("rank must be at least 1")
        self.k = k
        self.base = 2 * k - 1
        self._offsets = [0, 1]

    def offset(self, length: int) -> int:
        while len(self._offsets) <= length:
            m = len(self._offsets) - 1
            self._offsets.append(self._offsets[-1] + count_words(self.k, m))
        return self._offsets[length]

    @staticmethod
    def pos(x: Letter) -> int:
        return 2 * x.label.index + (x.sign < 0)

    def letter(self, pos: int) -> Letter:
        return Letter(abstract_label(pos // 2), -1 if pos % 2 else 1)

    def index(self, w: ReducedWord) -> int:
        n = len(w)
        if n == 0:
            return 0
        rank = 0
        prev = None
        for x in w:
            if x.label.index >= self.k or x.label.level != 0:
                raise ValueError(f"letter {x} is outside rank {self.k}")
            p = self.pos(x)
            if prev is None:
                rank = p
            else:
                rank = rank * self.base + (p - (p > (prev ^ 1)))
            prev = p
        return self.offset(n) + rank

    def word(self, n: int) -> ReducedWord:
        if n < 0:
            raise ValueError("indices are natural numbers")
        length = 0
        while self.offset(length + 1) <= n:
            length += 1
        if length == 0:
            return ReducedWord()
        rank = n - self.offset(length)
        digits = []
        for _ in range(length - 1):
            rank, d = divmod(rank, self.base)
            digits.append(d)
        digits.append(rank)
        digits.reverse()
        out: list[int] = []
        for d in digits:
            if not out:
                out.append(d)
            else:
                skip = out[-1] ^ 1
                out.append(d + (d >= skip))
        return ReducedWord(tuple(self.letter(p) for p in out))


def word_index(k: int) -> WordIndex:
    return WordIndex(k)


@dataclass(frozen=True)
class IndexPermutation:
    """``h_w``: the permutation ``index(v) -> index(reduce(w v))`` of the naturals."""

    rank: int
    word: ReducedWord = ReducedWord()

    def __post_init__(self) -> None:
        for x in self.word:
            if x.label.level != 0 or x.label.index >= self.rank:
                raise ValueError(f"letter {x} is outside rank {self.rank}")

    @classmethod
    def generator(cls, rank: int, j: int, sign: int = 1) -> IndexPermutation:
        return cls(rank, ReducedWord((Letter(abstract_label(j), sign),)))

    def inverse(self) -> IndexPermutation:
        return IndexPermutation(self.rank, self.word.inverse())

    def then(self, other: IndexPermutation) -> IndexPermutation:
        """``other`` after ``self``."""
        return IndexPermutation(self.rank, reduce(other.word.letters + self.word.letters))

    def __call__(self, n: int) -> int:
        return apply_index_perm(self, n)


_INDEXES: dict[int, WordIndex] = {}


def _index(k: int) -> WordIndex:
    ix = _INDEXES.get(k)
    if ix is None:
        ix = _INDEXES[k] = WordIndex(k)
    return ix


def apply_index_perm(h: IndexPermutation, n: int) -> int:
    ix = _index(h.rank)
    if not h.word:
        return n
    return ix.index(reduce(h.word.letters + ix.word(n).letters))


# -- type action and star extensions -------------------------------------------------


def type_action(s: AmbientStructure, g: Mapping[int, int], classes: Sequence[int]) -> dict[int, int]:
    """The permutation of ``classes`` induced by ``g``."""
    perm: dict[int, int] = {}
    back: dict[int, int] = {}
    for a, b in g.items():
        ca, cb = s.class_of(a), s.class_of(b)
        if perm.setdefault(ca, cb) != cb or back.setdefault(cb, ca) != ca:
            raise NotClassCoherent(f"class {ca} or {cb} is split by the map")
    out: dict[int, int] = {}
    wanted = set(classes)
    for c in classes:
        if c not in perm:
            raise ClassNotRepresented(f"no member of class {c} is mapped")
        if perm[c] not in wanted:
            raise NotClassCoherent(f"class {c} leaves the listed classes")
        out[c] = perm[c]
    return out


def _check_type_perm(reg: ArrayRegistry, fg: Mapping[int, int]) -> None:
    if sorted(fg) != list(range(reg.types)) or sorted(fg.values()) != list(range(reg.types)):
        raise PreconditionViolation("fg must permute the registry's type indices")


def star_extension(
    reg: ArrayRegistry,
    g: Mapping[int, int],
    fg: Mapping[int, int],
    h: IndexPermutation,
    *,
    strict: bool = False,
) -> PartialAutomorphism:
    """``g`` together with the cell map ``(i, z, x) -> (fg(i), z, h(x))``.

    Rows sent beyond the registry are dropped, or rejected when ``strict``.
    """
    _check_type_perm(reg, fg)
    s = reg.structure
    for a, b in g.items():
        if a not in reg.base or b not in reg.base:
            raise PreconditionViolation("g must be a map on the registry base")
    pairs = dict(g)
    for ix, p in reg.cells.items():
        row = h(ix.row)
        if row >= reg.rows:
            if strict:
                raise RowOutOfRange(f"row {ix.row} goes to {row}")
            continue
        pairs[p] = reg.point((fg[ix.type_idx], ix.column, row))
    if not s.is_partial_isomorphism(pairs):
        raise NotClassCoherent("g does not move classes the way fg does")
    return PartialAutomorphism(s, pairs)


class IdentityOnArray:
    """Marker: the word fixes every registered cell."""

    def __repr__(self) -> str:
        return "IdentityOnArray"

    def __bool__(self) -> bool:
        return False


IDENTITY_ON_ARRAY = IdentityOnArray()


@dataclass(frozen=True)
class CellWitness:
    word: ReducedWord
    start: ArrayIndex
    end: ArrayIndex

    @property
    def moved(self) -> bool:
        return self.start != self.end


Star = tuple[Mapping[int, int], IndexPermutation]


def star_evaluate(stars: Mapping[GeneratorLabel, Star], w: ReducedWord, cell: ArrayIndex) -> ArrayIndex:
    """Follow a cell through ``w`` symbolically; rows may leave the registry."""
    for x in w:
        if x.label not in stars:
            raise MissingLabel(x.label)
    i, z, r = cell
    for x in w:
        fg, h = stars[x.label]
        if x.sign > 0:
            i, r = fg[i], h(r)
        else:
            i = next(a for a, b in fg.items() if b == i)
            r = h.inverse()(r)
    return ArrayIndex(i, z, r)


def star_freeness_witness(
    reg: ArrayRegistry, stars: Mapping[GeneratorLabel, Star], w: ReducedWord
) -> CellWitness | IdentityOnArray:
    for x in w:
        if x.label not in stars:
            raise MissingLabel(x.label)
    for ix in sorted(reg.cells):
        end = star_evaluate(stars, w, ix)
        if end != ix:
            return CellWitness(w, ix, end)
    return IDENTITY_ON_ARRAY


# -- dense extension ------------------------------------------------------------------


@dataclass
class DenseExtensionState:
    label: GeneratorLabel
    requirement: PartialAutomorphism
    touched: frozenset[ArrayIndex]
    closure: frozenset[int]
    closure_map: PartialAutomorphism
    untouched: frozenset[int]
    f: IndexPermutation
    type_perm: dict[int, int]
    h_part: dict[int, int]
    result: LazyAutomorphism

    def step(self, cell: ArrayIndex, sign: int) -> ArrayIndex:
        """Symbolic move of a cell in an untouched column."""
        i, z, r = cell
        if sign > 0:
            return ArrayIndex(self.type_perm[i], z, self.f(r))
        inv = {b: a for a, b in self.type_perm.items()}
        return ArrayIndex(inv[i], z, self.f.inverse()(r))


def dense_extend(
    reg: ArrayRegistry,
    s: AmbientStructure,
    g: Mapping[int, int],
    f: IndexPermutation,
    stage: int,
    label: GeneratorLabel | None = None,
) -> DenseExtensionState:
    """Extend a requirement ``g`` (with dom = ran) by ``f`` on the untouched columns."""
    if s is not reg.structure:
        raise PreconditionViolation("registry belongs to another structure")
    pairs = dict(g.items())
    if set(pairs) != set(pairs.values()):
        raise PreconditionViolation("requirement needs dom = ran")
    if not s.is_partial_isomorphism(pairs):
        raise NotClassCoherent("requirement is not a partial isomorphism")
    req = PartialAutomorphism(s, pairs)
    touched = frozenset(ix for p in pairs for ix in [reg.index_of(p)] if ix is not None)
    # dom = ran already makes g a permutation of its domain
    closure = frozenset(pairs)
    untouched = frozenset(range(reg.columns)) - {ix.column for ix in touched}

    cls_map = type_action(s, pairs, sorted({s.class_of(p) for p in pairs}))
    type_perm: dict[int, int] = {}
    for i, c in enumerate(reg.classes):
        tgt = reg.type_of_class(cls_map.get(c, c))
        if tgt is None:
            raise ClassNotRepresented(f"class {c} is sent outside the registry")
        type_perm[i] = tgt

    h_part: dict[int, int] = {}
    for ix, p in reg.cells.items():
        if ix.column not in untouched:
            continue
        row = f(ix.row)
        if row < reg.rows:
            h_part[p] = reg.point((type_perm[ix.type_idx], ix.column, row))

    lab = label or GeneratorLabel(stage, 0)
    result = LazyAutomorphism(lab, s)
    result.commit_pairs(sorted(pairs.items()) + sorted(h_part.items()), stage)
    return DenseExtensionState(
        lab, req, touched, closure, PartialAutomorphism(s, pairs), untouched, f, type_perm, h_part, result
    )


def _common_column(states: Sequence[DenseExtensionState]) -> int:
    common = frozenset.intersection(*(st.untouched for st in states))
    if not common:
        raise NoCommonColumn("no column is untouched by all states; enlarge the registry")
    return min(common)


def free_column_witness(states: Sequence[DenseExtensionState], w: ReducedWord) -> CellWitness:
    """Symbolic run of ``w`` from row 0 of the least column every state leaves alone."""
    by_label = {st.label: st for st in states}
    for x in w:
        if x.label not in by_label:
            raise MissingLabel(x.label)
    used = [by_label[lab] for lab in dict.fromkeys(x.label for x in w)]
    z = _common_column(used or list(states))
    start = ArrayIndex(0, z, 0)
    cell = start
    for x in w:
        cell = by_label[x.label].step(cell, x.sign)
    return CellWitness(w, start, cell)


def random_requirement(
    reg: ArrayRegistry, rng: random.Random, max_size: int = 8, max_columns: int = 5
) -> dict[int, int]:
    """A random class-coherent requirement with dom = ran, on a few columns.

    Types are permuted along random cycles and each class in a cycle
    contributes the same number of cells.
    """
    while True:
        out = _random_requirement_once(reg, rng, max_size, max_columns)
        if out:
            return out


def _random_requirement_once(reg: ArrayRegistry, rng: random.Random, max_size: int, max_columns: int) -> dict[int, int]:
    cols = rng.sample(range(reg.columns), min(max_columns, reg.columns))
    types = rng.sample(range(reg.types), rng.randint(1, reg.types))
    order = types[:]
    rng.shuffle(order)
    cycles: list[list[int]] = []
    while order:
        n = rng.randint(1, len(order))
        cycles.append(order[:n])
        order = order[n:]
    budget = rng.randint(1, max_size)
    used: set[ArrayIndex] = set()
    out: dict[int, int] = {}
    for cyc in cycles:
        if budget < len(cyc):
            continue
        per = rng.randint(1, budget // len(cyc))
        budget -= per * len(cyc)
        groups = []
        for t in cyc:
            grp = []
            while len(grp) < per:
                ix = ArrayIndex(t, rng.choice(cols), rng.randrange(reg.rows))
                if ix not in used:
                    used.add(ix)
                    grp.append(reg.point(ix))
            groups.append(grp)
        for k, grp in enumerate(groups):
            tgt = groups[(k + 1) % len(groups)][:]
            rng.shuffle(tgt)
            out.update(zip(grp, tgt))
    return out


# -- batched column witnesses ------------------------------------------------------------


@dataclass
class SweepReport:
    subsets: int = 0
    words: int = 0
    witnessed: int = 0
    no_column: list[tuple[int, ...]] = field(default_factory=list)
    identities: list[tuple[tuple[int, ...], ReducedWord]] = field(default_factory=list)
    # (subset, slot word) -> (end type, end row), for subsets asked for
    ends: dict[tuple[tuple[int, ...], ReducedWord], tuple[int, int]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.no_column and not self.identities and self.witnessed == self.words


def _slot_words(size: int, max_len: int) -> Iterator[ReducedWord]:
    from .words import iter_words

    return iter_words([abstract_label(j) for j in range(size)], max_len)


def column_witness_sweep(
    states: Sequence[DenseExtensionState],
    size: int = 3,
    max_len: int = 3,
    record: Iterable[tuple[int, ...]] = (),
) -> SweepReport:
    """Check ``free_column_witness`` on every ``size``-subset and every short word.

    Vectorized over subsets. Needs every ``f`` to be a single generator
    letter, distinct across states, and at most 62 columns; otherwise it
    falls back to the per-word routine.
    """
    import numpy as np

    n = len(states)
    rep = SweepReport()
    if n < size:
        return rep
    fs = [st.f for st in states]
    fast = (
        all(len(f.word) == 1 for f in fs)
        and len({(f.rank, WordIndex.pos(f.word.letters[0])) for f in fs}) == n
        and len({f.rank for f in fs}) == 1
    )
    cols = max(max(st.untouched, default=0) for st in states) + 1
    if not fast or cols > 62:
        return _sweep_slow(states, size, max_len, record)

    k = fs[0].rank
    B = 2 * k - 1
    ix = _index(k)
    combos = np.array(list(itertools.combinations(range(n), size)), dtype=np.int64)
    rep.subsets = len(combos)
    masks = np.array([sum(1 << z for z in st.untouched) for st in states], dtype=np.int64)
    common = np.bitwise_and.reduce(masks[combos], axis=1)
    bad = common == 0
    for row in np.nonzero(bad)[0]:
        rep.no_column.append(tuple(int(v) for v in combos[row]))
    pos = np.array([WordIndex.pos(f.word.letters[0]) for f in fs], dtype=np.int64)
    T = len(states[0].type_perm)
    perm = np.array([[st.type_perm[i] for i in range(T)] for st in states], dtype=np.int64)
    inv = np.argsort(perm, axis=1)
    slot_pos = pos[combos]
    slot_perm = [perm[combos[:, j]] for j in range(size)]
    slot_inv = [inv[combos[:, j]] for j in range(size)]
    rows_idx = np.arange(len(combos))
    ok_rows = ~bad
    where = {tuple(int(v) for v in c): r for r, c in enumerate(combos)}
    watch = [(tuple(c), where[tuple(c)]) for c in record]
    for w in _slot_words(size, max_len):
        rep.words += int(ok_rows.sum())
        # h-word is the reverse of w with each slot replaced by its letter
        seq = [(x.label.index, x.sign) for x in reversed(w.letters)]
        rank = np.zeros(len(combos), dtype=np.int64)
        prev = None
        for slot, sign in seq:
            p = slot_pos[:, slot] ^ (1 if sign < 0 else 0)
            if prev is None:
                rank = p.copy()
            else:
                rank = rank * B + (p - (p > (prev ^ 1)))
            prev = p
        row = ix.offset(len(w)) + rank
        t = np.zeros(len(combos), dtype=np.int64)
        for x in w:
            table = slot_perm[x.label.index] if x.sign > 0 else slot_inv[x.label.index]
            t = table[rows_idx, t]
        moved = (row != 0) | (t != 0)
        good = moved & ok_rows
        rep.witnessed += int(good.sum())
        for c, r in watch:
            rep.ends[(c, w)] = (int(t[r]), int(row[r]))
        for r in np.nonzero(ok_rows & ~moved)[0]:
            rep.identities.append((tuple(int(v) for v in combos[r]), w))
    return rep


def _sweep_slow(
    states: Sequence[DenseExtensionState], size: int, max_len: int, record: Iterable[tuple[int, ...]] = ()
) -> SweepReport:
    rep = SweepReport()
    watch = {tuple(c) for c in record}
    words = list(_slot_words(size, max_len))
    for combo in itertools.combinations(range(len(states)), size):
        rep.subsets += 1
        chosen = [states[j] for j in combo]
        try:
            _common_column(chosen)
        except NoCommonColumn:
            rep.no_column.append(combo)
            continue
        rename = {abstract_label(j): chosen[j].label for j in range(size)}
        for w in words:
            real = ReducedWord(tuple(Letter(rename[x.label], x.sign) for x in w))
            rep.words += 1
            wt = free_column_witness(chosen, real)
            if combo in watch:
                rep.ends[(combo, w)] = (wt.end.type_idx, wt.end.row)
            if wt.moved:
                rep.witnessed += 1
            else:
                rep.identities.append((combo, w))
    return rep
