from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from densefree.automorphisms import (
    Direction,
    ImagePolicy,
    LazyAutomorphism,
    PartialAutomorphism,
    union_maps,
)
from densefree.errors import ConflictingPair, NotIsomorphism, PreconditionViolation, StageRegression
from densefree.structures import Cut, QfType, StructureKind, new_structure
from densefree.words import GeneratorLabel

LAB = GeneratorLabel(1, 0)


def _points(kind, n, seed=0):
    s = new_structure(kind, seed)
    for _ in range(n):
        s.create_point(s.plain_type(s.points))
    return s


def test_commit_examples():
    s = _points(StructureKind.PURE_SET, 2)
    g = LazyAutomorphism(LAB, s)
    g.commit_pairs({}, 1)
    assert len(g.committed) == 0 and g.stages == []
    g.commit_pairs({0: 1}, 1)
    assert g.committed.pairs() == [(0, 1)]

    gr = new_structure(StructureKind.RANDOM_GRAPH)
    gr.create_point(QfType((), frozenset()))
    gr.create_point(QfType((0,), frozenset({0})))
    gr.create_point(QfType((), frozenset()))
    gr.create_point(QfType((), frozenset()))
    h = LazyAutomorphism(LAB, gr)
    h.commit_pairs({0: 2}, 1)
    with pytest.raises(NotIsomorphism):
        h.commit_pairs({1: 3}, 2)
    assert h.committed.pairs() == [(0, 2)]


def test_commit_conflicts_and_stage_order():
    s = _points(StructureKind.PURE_SET, 4)
    g = LazyAutomorphism(LAB, s)
    g.commit_pairs({0: 1}, 2)
    with pytest.raises(ConflictingPair):
        g.commit_pairs({0: 2}, 3)
    with pytest.raises(ConflictingPair):
        g.commit_pairs({3: 1}, 3)
    with pytest.raises(StageRegression):
        g.commit_pairs({2: 3}, 1)
    g.commit_pairs({2: 3}, 2)  # same stage merges into one entry
    assert g.stages == [(2, [(0, 1), (2, 3)])]


def test_update_is_atomic():
    s = _points(StructureKind.DLO, 4)
    m = PartialAutomorphism(s, {0: 0})
    with pytest.raises(NotIsomorphism):
        m.update([(1, 1), (2, 3), (3, 2)])
    assert m.pairs() == [(0, 0)]
    assert m._sdom == [0] and m._sran == [0]


def test_extend_to_point_examples():
    s = _points(StructureKind.PURE_SET, 6)
    g = LazyAutomorphism(LAB, s)
    g.extend_to_point(5, Direction.FORWARD, 1)
    q = g.image(5)
    assert q == 6  # fresh

    d = _points(StructureKind.DLO, 2)
    g = LazyAutomorphism(LAB, d)
    g.commit_pairs({0: 0}, 1)
    g.extend_to_point(1, Direction.FORWARD, 1)
    assert d.less(0, g.image(1))

    with pytest.raises(PreconditionViolation):
        g.extend_to_point(0, Direction.BACKWARD, 2)
    with pytest.raises(PreconditionViolation):
        g.extend_to_point(0, Direction.FORWARD, 2)


def test_close_over_examples():
    s = _points(StructureKind.PURE_SET, 1)
    g = LazyAutomorphism(LAB, s, ImagePolicy.REUSE)
    g.close_over({0}, 1)
    assert g.committed.pairs() == [(0, 0)]

    s = _points(StructureKind.PURE_SET, 1)
    g = LazyAutomorphism(LAB, s)
    g.close_over({0}, 1)
    assert 0 in g.committed and g.committed.in_range(0)
    before = g.committed.pairs()
    g.close_over({0}, 2)
    assert g.committed.pairs() == before


def test_restrict_examples():
    s = _points(StructureKind.PURE_SET, 4)
    g = LazyAutomorphism(LAB, s)
    g.commit_pairs({0: 1, 2: 3}, 1)
    assert g.restrict(set()).pairs() == []
    assert g.restrict(g.committed.domain()).pairs() == g.committed.pairs()
    assert g.restrict({0}).pairs() == [(0, 1)]


def test_union_maps():
    s = _points(StructureKind.PURE_SET, 4)
    assert union_maps(s, [{0: 1}, {2: 3}, {0: 1}]) == {0: 1, 2: 3}
    with pytest.raises(ConflictingPair):
        union_maps(s, [{0: 1}, {0: 2}])


def test_committed_at_and_monotonicity():
    s = _points(StructureKind.PURE_SET, 6)
    g = LazyAutomorphism(LAB, s)
    g.commit_pairs({0: 1}, 1)
    g.commit_pairs({2: 3}, 3)
    assert g.committed_at(0).pairs() == []
    assert g.committed_at(2).pairs() == [(0, 1)]
    assert g.committed_at(3).issubset(g.committed)


@settings(max_examples=40, deadline=None)
@given(
    kind=st.sampled_from(list(StructureKind)),
    seed=st.integers(0, 2**32),
    policy=st.sampled_from(list(ImagePolicy)),
    n=st.integers(1, 10),
)
def test_totality_and_isomorphism_under_closure(kind, seed, policy, n):
    s = new_structure(kind, seed)
    for _ in range(n):
        s.create_point(s.plain_type(s.points) if kind is not StructureKind.DLO else QfType((), Cut()))
    g = LazyAutomorphism(LAB, s, policy)
    snapshots = []
    for stage in range(1, n + 1):
        g.close_over(range(stage), stage)
        assert s.is_partial_isomorphism(g.committed)
        snapshots.append(g.committed.copy())
    for i in range(n):
        assert all(p in g.committed and g.committed.in_range(p) for p in range(i + 1))
    for x, y in zip(snapshots, snapshots[1:]):
        assert x.issubset(y)


@settings(max_examples=40, deadline=None)
@given(kind=st.sampled_from(list(StructureKind)), seed=st.integers(0, 2**32))
def test_can_add_agrees_with_global_check(kind, seed):
    import random

    rng = random.Random(seed)
    s = new_structure(kind, seed)
    for _ in range(10):
        base = tuple(rng.sample(range(len(s)), min(len(s), 3)))
        if kind is StructureKind.DLO:
            s.create_point(s.plain_type(base))
        elif kind is StructureKind.RANDOM_GRAPH:
            s.create_point(QfType.adjacency(base, [rng.randint(0, 1) for _ in base]))
        elif kind is StructureKind.EQ_CLASSES:
            s.create_point(QfType(base, s.class_of(base[0]) if base and rng.random() < 0.5 else None))
        else:
            s.create_point(QfType(base))
    m = PartialAutomorphism(s)
    for _ in range(30):
        a, b = rng.randrange(10), rng.randrange(10)
        trial = dict(m.items())
        if a in trial or b in trial.values():
            continue
        trial[a] = b
        assert m.can_add(a, b) == s.is_partial_isomorphism(trial)
        if m.can_add(a, b):
            m.add(a, b)
