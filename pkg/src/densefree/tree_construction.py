"""Stagewise construction of a dense free family over a tree of labels.

Each stage does four things in a fixed order. It first hands every new
finite partial automorphism of the current fragment to a generator of its
own. It then kills the next batch of queued words, closes all generators
over the fragment, and finally grows the next level of the tree.

Free labels form ``branching`` index lines: label ``(level, i)`` starts as
a copy of ``(level - 1, i)`` and both then grow independently. The chain
condition is therefore checked against the parent's graph as it stood when
the child was born.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .automorphisms import ImagePolicy, LazyAutomorphism, PartialAutomorphism
from .errors import NotAChain, PreconditionViolation
from .free_extension import Witness, kill_word, witness_persists
from .structures import AmbientStructure, Cut, QfType, StructureKind
from .words import GeneratorLabel, ReducedWord, Role, iter_words


def density_requirements(s: AmbientStructure, fragment: Sequence[int] | set[int], max_size: int) -> list[PartialAutomorphism]:
    """All partial isomorphisms of the fragment with at most ``max_size`` pairs.

    Ordered by size, then domain tuple, then image tuple. The empty map is
    listed only when nothing else qualifies, so an empty fragment still
    yields one requirement.
    """
    pts = sorted(fragment)
    out: list[PartialAutomorphism] = []
    for size in range(1, min(max_size, len(pts)) + 1):
        for dom in itertools.combinations(pts, size):
            for img in itertools.permutations(pts, size):
                m = dict(zip(dom, img))
                if s.is_partial_isomorphism(m):
                    out.append(PartialAutomorphism(s, m))
    if not out:
        out.append(PartialAutomorphism(s))
    return out


@dataclass
class _Segment:
    """Words over ``labels`` that mention one of ``required``."""

    labels: tuple[GeneratorLabel, ...]
    required: tuple[GeneratorLabel, ...]
    words: Iterator[ReducedWord]
    consumed: int = 0


def _req_key(m: PartialAutomorphism) -> tuple[tuple[int, int], ...]:
    return tuple(m.pairs())


@dataclass
class TreeState:
    structure: AmbientStructure
    branching: int = 2
    max_word_len: int = 4
    absorb: int | None = 2
    policy: ImagePolicy = ImagePolicy.FRESH
    fragment: set[int] = field(default_factory=set)
    gens: dict[GeneratorLabel, LazyAutomorphism] = field(default_factory=dict)
    witnesses: list[Witness] = field(default_factory=list)
    density_log: list[tuple[PartialAutomorphism, GeneratorLabel]] = field(default_factory=list)
    fragments: list[tuple[int, ...]] = field(default_factory=list)
    births: dict[GeneratorLabel, int] = field(default_factory=dict)
    stage: int = 1
    # budgets of the most recent stage, kept for the certificate header
    words_per_stage: int | None = None
    density_size: int | None = None
    # labels usable in words, in the order they became usable
    active: list[GeneratorLabel] = field(default_factory=list)
    _segments: deque = field(default_factory=deque, repr=False)
    _logged: set = field(default_factory=set, repr=False)

    def word_queue(self) -> Iterator[ReducedWord]:
        """Remaining queued words, lazily; iterating does not consume them."""
        for seg in self._segments:
            fresh = iter_words(seg.labels, self.max_word_len, required=seg.required)
            yield from itertools.islice(fresh, seg.consumed, None)

    def labels(self, role: Role | None = None) -> list[GeneratorLabel]:
        return [lab for lab in self.gens if role is None or lab.role is role]

    def _new_label(self, level: int, role: Role) -> GeneratorLabel:
        index = sum(1 for lab in self.gens if lab.level == level and lab.role is role)
        lab = GeneratorLabel(level, index, role)
        self.gens[lab] = LazyAutomorphism(lab, self.structure, self.policy)
        self.births[lab] = self.stage
        return lab

    def _enqueue(self, new: list[GeneratorLabel]) -> None:
        if not new:
            return
        self.active.extend(new)
        labels = tuple(self.active)
        self._segments.append(_Segment(labels, tuple(new), iter_words(labels, self.max_word_len, required=new)))

    def _pop_words(self, n: int) -> list[ReducedWord]:
        out: list[ReducedWord] = []
        while len(out) < n and self._segments:
            seg = self._segments[0]
            got = list(itertools.islice(seg.words, n - len(out)))
            seg.consumed += len(got)
            out.extend(got)
            if len(out) < n:
                self._segments.popleft()
        return out

    def _random_anchor(self) -> QfType:
        s = self.structure
        rng = s.rng
        base = tuple(sorted(self.fragment))
        kind = s.kind
        if kind is StructureKind.RANDOM_GRAPH:
            return QfType(base, frozenset(b for b in base if rng.random() < 0.5))
        if kind is StructureKind.DLO:
            order = sorted(base, key=s.order_key)
            gap = rng.randrange(len(order) + 1)
            below = order[gap - 1] if gap > 0 else None
            above = order[gap] if gap < len(order) else None
            return QfType(base, Cut(below, above))
        if kind is StructureKind.EQ_CLASSES:
            if base and rng.random() < 0.5:
                return QfType(base, s.class_of(rng.choice(base)))
            return QfType(base, None)
        return QfType(base, None)

    def run_stage(self, words_per_stage: int, density_size: int) -> TreeState:
        s = self.structure
        stage = self.stage
        self.words_per_stage, self.density_size = words_per_stage, density_size
        self.fragments.append(tuple(sorted(self.fragment)))

        # density: one generator per requirement not seen before
        fresh_density: list[GeneratorLabel] = []
        for req in density_requirements(s, self.fragment, density_size):
            key = _req_key(req)
            if key in self._logged:
                continue
            lab = self._new_label(stage, Role.DENSITY)
            self.gens[lab].commit_pairs(req.pairs(), stage)
            self.density_log.append((req, lab))
            self._logged.add(key)
            fresh_density.append(lab)

        # freeness
        created: list[int] = []
        for w in self._pop_words(words_per_stage):
            wt = kill_word(s, w, self.gens, s.points, stage, anchor=self._random_anchor())
            self.witnesses.append(wt)
            created.extend((wt.start, wt.end))

        # absorb some witness points into the fragment
        take = created if self.absorb is None else created[: self.absorb]
        self.fragment.update(take)

        for g in self.gens.values():
            g.close_over(self.fragment, stage)

        # growth: children copy their (already closed) parents
        fresh_free: list[GeneratorLabel] = []
        for i in range(self.branching):
            lab = self._new_label(stage, Role.FREE)
            parent = self.gens.get(GeneratorLabel(stage - 1, i, Role.FREE))
            if parent is not None:
                self.gens[lab].commit_pairs(parent.committed.pairs(), stage)
            self.gens[lab].close_over(self.fragment, stage)
            fresh_free.append(lab)

        # new Free labels first, so the density words never crowd them out;
        # density labels thus join word duty one stage after their birth
        self._enqueue(fresh_free)
        self._enqueue(fresh_density)
        self.stage += 1
        return self

    # -- queries ----------------------------------------------------------------

    def check_invariants(self) -> None:
        s = self.structure
        for g in self.gens.values():
            assert s.is_partial_isomorphism(g.committed), f"{g.label} is not a partial isomorphism"
            assert all(p in g.committed and g.committed.in_range(p) for p in self.fragment), (
                f"{g.label} does not cover the fragment"
            )
        for req, lab in self.density_log:
            assert req.issubset(self.gens[lab].committed), f"{lab} lost its requirement"
        for wt in self.witnesses:
            assert witness_persists(wt, self.gens), f"witness for {wt.word} lost"
        prev: tuple[int, ...] = ()
        for frag in self.fragments:
            assert set(prev) <= set(frag), "fragments shrank"
            prev = frag

    def branch_union(self, branch: Sequence[GeneratorLabel]) -> PartialAutomorphism:
        return branch_union(self, branch)


def branch_union(st: TreeState, branch: Sequence[GeneratorLabel]) -> PartialAutomorphism:
    """Union of the committed graphs along a chain of Free labels.

    Each label must sit one level above its predecessor and extend it as it
    stood when the label was born.
    """
    if not branch:
        raise PreconditionViolation("a branch needs at least one label")
    for lab in branch:
        if lab not in st.gens:
            raise PreconditionViolation(f"unknown label {lab}")
        if lab.role is Role.DENSITY and len(branch) > 1:
            raise NotAChain(f"density label {lab} cannot sit on a branch")
    out = PartialAutomorphism(st.structure)
    for prev, lab in zip(branch, branch[1:]):
        if lab.level != prev.level + 1:
            raise NotAChain(f"{lab} is not one level above {prev}")
        snapshot = st.gens[prev].committed_at(st.births[lab])
        if not snapshot.issubset(st.gens[lab].committed):
            raise NotAChain(f"{lab} does not extend {prev}")
        out.update(snapshot.pairs())
    out.update(st.gens[branch[-1]].committed.pairs())
    return out


def new_tree_state(
    structure: AmbientStructure,
    branching: int = 2,
    max_word_len: int = 4,
    absorb: int | None = 2,
    policy: ImagePolicy = ImagePolicy.FRESH,
) -> TreeState:
    if branching < 1:
        raise PreconditionViolation("branching must be at least 1")
    if max_word_len < 1:
        raise PreconditionViolation("max word length must be at least 1")
    return TreeState(structure, branching, max_word_len, absorb, policy)


def run_tree(
    structure: AmbientStructure,
    stages: int,
    branching: int = 2,
    words_per_stage: int = 2500,
    density_size: int = 2,
    max_word_len: int = 4,
    absorb: int | None = 2,
) -> TreeState:
    st = new_tree_state(structure, branching, max_word_len, absorb)
    for _ in range(stages):
        st.run_stage(words_per_stage, density_size)
    return st
