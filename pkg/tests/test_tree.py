from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from densefree.errors import NotAChain, PreconditionViolation
from densefree.structures import QfType, StructureKind, new_structure
from densefree.tree_construction import TreeState, branch_union, density_requirements, new_tree_state, run_tree
from densefree.words import GeneratorLabel, Role, enumerate_words
from oracles import naive_partial_isos


def _set_with(n):
    s = new_structure(StructureKind.PURE_SET)
    for _ in range(n):
        s.create_point(QfType(()))
    return s


def test_density_requirements_pure_set():
    s = _set_with(2)
    one = density_requirements(s, {0, 1}, 1)
    assert [m.pairs() for m in one] == [[(0, 0)], [(0, 1)], [(1, 0)], [(1, 1)]]
    two = density_requirements(s, {0, 1}, 2)
    assert len(two) == 6
    assert [m.pairs() for m in two[4:]] == [[(0, 0), (1, 1)], [(0, 1), (1, 0)]]


def test_density_requirements_graph_matches_oracle():
    g = new_structure(StructureKind.RANDOM_GRAPH)
    g.create_point(QfType((), frozenset()))
    g.create_point(QfType((0,), frozenset({0})))
    g.create_point(QfType((0, 1), frozenset()))
    got = {tuple(m.pairs()) for m in density_requirements(g, {0, 1, 2}, 3)}
    assert got == naive_partial_isos(g, [0, 1, 2], 3)
    # 3 + 3*3 + ... : the single edge pins everything down
    assert len(got) == 9 + 10 + 2


def test_density_requirements_empty_fragment():
    s = _set_with(0)
    reqs = density_requirements(s, set(), 2)
    assert len(reqs) == 1 and len(reqs[0]) == 0


@pytest.mark.parametrize("kind", list(StructureKind))
def test_density_requirements_oracle_all_kinds(kind):
    s = new_structure(kind, 4)
    for _ in range(4):
        base = tuple(range(len(s)))
        if kind is StructureKind.RANDOM_GRAPH:
            s.create_point(QfType.adjacency(base, [s.rng.randint(0, 1) for _ in base]))
        elif kind is StructureKind.EQ_CLASSES:
            s.create_point(QfType(base, s.class_of(0) if base and s.rng.random() < 0.5 else None))
        else:
            s.create_point(s.plain_type(base))
    got = [tuple(m.pairs()) for m in density_requirements(s, range(4), 2)]
    assert len(got) == len(set(got))
    assert set(got) == naive_partial_isos(s, range(4), 2)


def test_stage_one_on_empty_state():
    st_ = new_tree_state(new_structure(StructureKind.PURE_SET), branching=2)
    st_.run_stage(100, 2)
    free = st_.labels(Role.FREE)
    dens = st_.labels(Role.DENSITY)
    assert free == [GeneratorLabel(1, 0), GeneratorLabel(1, 1)]
    assert all(len(st_.gens[lab].committed) == 0 for lab in free)
    assert [len(req) for req, _ in st_.density_log] == [0]
    assert dens == [GeneratorLabel(1, 0, Role.DENSITY)]
    assert st_.stage == 2


def test_two_stages_kill_short_free_words():
    st_ = run_tree(new_structure(StructureKind.PURE_SET), 2, words_per_stage=10_000, max_word_len=2)
    killed = {wt.word for wt in st_.witnesses}
    level1 = [GeneratorLabel(1, 0), GeneratorLabel(1, 1)]
    for w in enumerate_words(level1, 2):
        assert w in killed
    st_.check_invariants()


def test_density_requirement_on_given_fragment():
    s = _set_with(2)
    st_ = TreeState(s, fragment={0, 1})
    st_.run_stage(50, 1)
    hits = [lab for req, lab in st_.density_log if req.pairs() == [(0, 1)]]
    assert len(hits) == 1
    assert st_.gens[hits[0]].image(0) == 1
    st_.check_invariants()


@pytest.mark.parametrize("kind", list(StructureKind))
def test_invariants_after_a_few_stages(kind):
    st_ = run_tree(new_structure(kind, 2), 4, words_per_stage=300)
    st_.check_invariants()
    # every free child extends its parent as it was at the child's birth
    for lab in st_.labels(Role.FREE):
        parent = GeneratorLabel(lab.level - 1, lab.index)
        if parent in st_.gens:
            snap = st_.gens[parent].committed_at(st_.births[lab])
            assert snap.issubset(st_.gens[lab].committed)


def test_queue_has_no_duplicates_and_is_lazy():
    st_ = run_tree(new_structure(StructureKind.PURE_SET), 3, words_per_stage=50)
    popped = [wt.word for wt in st_.witnesses]
    assert len(popped) == len(set(popped))
    upcoming = []
    for w in st_.word_queue():
        upcoming.append(w)
        if len(upcoming) == 200:
            break
    assert not set(upcoming) & set(popped)
    # peeking does not consume
    assert next(iter(st_.word_queue())) == upcoming[0]


def test_branch_union():
    st_ = run_tree(new_structure(StructureKind.RANDOM_GRAPH, 1), 3, words_per_stage=200)
    f1, f2 = GeneratorLabel(1, 0), GeneratorLabel(2, 0)
    assert branch_union(st_, [f1]).pairs() == st_.gens[f1].committed.pairs()
    assert branch_union(st_, [f1, f2]).pairs() == st_.gens[f2].committed.pairs()
    with pytest.raises(NotAChain):
        branch_union(st_, [f2, GeneratorLabel(3, 0, Role.DENSITY)])
    with pytest.raises(NotAChain):
        branch_union(st_, [GeneratorLabel(1, 0), GeneratorLabel(3, 0)])
    # index lines grow apart, so crossing them breaks the chain
    with pytest.raises(NotAChain):
        branch_union(st_, [GeneratorLabel(1, 1), GeneratorLabel(2, 0)])
    with pytest.raises(PreconditionViolation):
        branch_union(st_, [])


def test_absorb_all_restores_literal_rule():
    st_ = run_tree(new_structure(StructureKind.PURE_SET), 3, words_per_stage=5, density_size=1, absorb=None)
    created = {p for wt in st_.witnesses[:5] for p in (wt.start, wt.end)}
    assert created <= set(st_.fragments[2])


@settings(max_examples=15, deadline=None)
@given(kind=st.sampled_from(list(StructureKind)), seed=st.integers(0, 2**32), words=st.integers(1, 60))
def test_tree_runs_keep_invariants(kind, seed, words):
    st_ = run_tree(new_structure(kind, seed), 3, branching=2, words_per_stage=words, density_size=1)
    st_.check_invariants()
