"""Acceptance criteria, one test each, at their stated sizes and time limits.

Run with ``pytest tests/test_acceptance.py -v -s`` to see a PASS/FAIL line per
criterion; the same lines are repeated in the terminal summary.
"""

from __future__ import annotations

import functools
import itertools
import json
import random
import time

import pytest

from densefree.automorphisms import Direction, LazyAutomorphism, union_maps
from densefree.certificate import export_certificate, from_document, load, loads
from densefree.cli import main
from densefree.free_extension import kill_word, witness_persists
from densefree.stable_construction import (
    ArrayIndex,
    IdentityOnArray,
    IndexPermutation,
    apply_index_perm,
    build_registry,
    column_witness_sweep,
    dense_extend,
    random_requirement,
    star_extension,
    star_freeness_witness,
    type_action,
    word_index,
)
from densefree.structures import StructureKind, new_structure
from densefree.verify import verify
from densefree.words import GeneratorLabel, enumerate_words, evaluate, reduce
from mutations import KINDS, mutate
from oracles import naive_count

LABELS = [GeneratorLabel(1, j) for j in range(3)]


@functools.cache
def _killed():
    """Criterion 1 state per kind: structure, generators, witnesses, seconds taken."""
    out = {}
    words = enumerate_words(LABELS, 5)
    for kind in StructureKind:
        t0 = time.perf_counter()
        s = new_structure(kind, 17)
        gens = {lab: LazyAutomorphism(lab, s) for lab in LABELS}
        wts = [kill_word(s, w, gens, s.points, 1) for w in words]
        out[kind] = (s, gens, wts, time.perf_counter() - t0)
    return out


@pytest.mark.criterion(1, "kill_word soundness, all reduced words of length <= 5 over 3 labels")
def test_criterion_1_kill_word_soundness():
    killed = _killed()
    expected = sum(6 * 5 ** (n - 1) for n in range(1, 6))
    assert expected == sum(naive_count(3, n) for n in range(1, 6)) == 4686
    total = 0.0
    for kind, (s, gens, wts, secs) in killed.items():
        assert len(wts) == expected
        assert all(wt.start != wt.end for wt in wts)
        assert all(s.is_partial_isomorphism(g.committed) for g in gens.values()), kind
        total += secs
    assert total < 30


@pytest.mark.criterion(2, "witnesses persist under 500 further monotone extensions per kind")
def test_criterion_2_witness_persistence():
    killed = _killed()
    for kind, (s, gens, wts, _) in killed.items():
        rng = random.Random(kind.value)
        before = {lab: g.committed.copy() for lab, g in gens.items()}
        done = 0
        while done < 500:
            g = gens[rng.choice(LABELS)]
            p = rng.randrange(len(s))
            if p not in g.committed:
                g.extend_to_point(p, Direction.FORWARD, 2 + done)
            elif not g.committed.in_range(p):
                g.extend_to_point(p, Direction.BACKWARD, 2 + done)
            else:
                continue
            done += 1
        for lab, g in gens.items():
            assert before[lab].issubset(g.committed)
            assert s.is_partial_isomorphism(g.committed)
        assert all(witness_persists(wt, gens) for wt in wts), kind


@pytest.mark.criterion(3, "tree construction on the random graph, 5 stages, branching 2, verified")
def test_criterion_3_tree_construction(tmp_path, capsys):
    path = str(tmp_path / "tree.json")
    t0 = time.perf_counter()
    assert main(["gen", "tree", "--kind", "graph", "--stages", "5", "--branching", "2", "--out", path]) == 0
    assert main(["verify", path]) == 0
    elapsed = time.perf_counter() - t0
    assert "FAIL" not in capsys.readouterr().out

    cert = load(path)
    rep = verify(cert)
    assert rep.ok
    low = [GeneratorLabel.parse(g["label"]) for g in cert.generators]
    low = [lab for lab in low if lab.level <= 2]
    assert {lab.token for lab in low} >= {"1.0.free", "1.1.free", "1.0.density", "2.0.free", "2.1.free"}
    claimed = {tuple(map(tuple, k["word"])) for k in cert.killed_words}
    words = enumerate_words(sorted(low, key=GeneratorLabel.sort_key), 4)
    assert len(words) == sum(naive_count(len(low), n) for n in range(1, 5))
    missing = [w for w in words if tuple((t, s) for t, s in w.tokens()) not in claimed]
    assert not missing, f"{len(missing)} words never killed, e.g. {missing[0]}"
    # every size <= 2 requirement on every stage fragment is covered
    assert rep.density.failures == [] and rep.density.requirements_checked == len(cert.density_log)
    assert len(cert.fragments) == 5
    assert elapsed < 60


@pytest.mark.criterion(4, "regular representation is faithful at rank 3")
def test_criterion_4_regular_representation():
    t0 = time.perf_counter()
    words = enumerate_words([GeneratorLabel(0, j) for j in range(3)], 6)
    assert len(words) == sum(6 * 5 ** (n - 1) for n in range(1, 7)) == 23436
    assert all(IndexPermutation(3, w)(0) != 0 for w in words)

    ix = word_index(3)
    rng = random.Random(4)
    for _ in range(10_000):
        u, v, n = (rng.randrange(25_000) for _ in range(3))
        wu, wv = ix.word(u), ix.word(v)
        lhs = apply_index_perm(IndexPermutation(3, reduce(wu.letters + wv.letters)), n)
        assert lhs == apply_index_perm(IndexPermutation(3, wu), apply_index_perm(IndexPermutation(3, wv), n))
    assert time.perf_counter() - t0 < 10


def _direct_end(stars, w, cell):
    i, z, x = cell
    for letter in w:
        fg, h = stars[letter.label]
        if letter.sign > 0:
            i, x = fg[i], apply_index_perm(h, x)
        else:
            i, x = {b: a for a, b in fg.items()}[i], apply_index_perm(h.inverse(), x)
    return ArrayIndex(i, z, x)


@pytest.mark.criterion(5, "star witnesses agree with direct index evaluation on a 2x4x32 registry")
def test_criterion_5_star_oracle():
    s = new_structure(StructureKind.EQ_CLASSES, 5)
    base = []
    for _ in range(2):
        c = s.new_class()
        base += s._allocate(2, classes=[c, c])
    reg = build_registry(s, (2, 4, 32), base)
    A, B = GeneratorLabel(1, 0), GeneratorLabel(1, 1)
    swap = {base[0]: base[2], base[1]: base[3], base[2]: base[0], base[3]: base[1]}
    keep = {p: p for p in base}
    stars, maps = {}, {}
    for lab, g, j in ((A, swap, 0), (B, keep, 1)):
        cls = type_action(s, g, list(reg.classes))
        fg = {i: reg.type_of_class(cls[reg.classes[i]]) for i in range(2)}
        h = IndexPermutation.generator(2, j)
        stars[lab] = (fg, h)
        maps[lab] = star_extension(reg, g, fg, h)
    disagreements = 0
    cells = sorted(reg.cells)
    for w in enumerate_words([A, B], 4):
        ends = {ix: _direct_end(stars, w, ix) for ix in cells}
        moved = [ix for ix in cells if ends[ix] != ix]
        got = star_freeness_witness(reg, stars, w)
        if moved:
            disagreements += not (got.start == moved[0] and got.end == ends[moved[0]])
        else:
            disagreements += not isinstance(got, IdentityOnArray)
        for ix in cells:
            q = evaluate(w, maps, reg.point(ix))
            if q is not None:
                disagreements += reg.index_of(q) != ends[ix]
    assert disagreements == 0


def _piece(s, base, rng):
    """A class-coherent map: identity on the base plus fresh classes sent to fresh classes."""
    m = {p: p for p in base}
    for _ in range(rng.randint(1, 3)):
        k = rng.randint(1, 3)
        src = s._allocate(k, classes=[s.new_class()] * k)
        dst = s._allocate(k, classes=[s.new_class()] * k)
        rng.shuffle(dst)
        m.update(zip(src, dst))
    return m


@pytest.mark.criterion(6, "unions of independent class-coherent maps; corrupted unions fail")
def test_criterion_6_independent_unions():
    rng = random.Random(6)
    s = new_structure(StructureKind.EQ_CLASSES, 6)
    c0, c1 = s.new_class(), s.new_class()
    base = s._allocate(2, classes=[c0, c0]) + s._allocate(1, classes=[c1])
    for _ in range(1000):
        pieces = [_piece(s, base, rng) for _ in range(rng.randint(2, 4))]
        assert all(s.is_partial_isomorphism(p) for p in pieces)
        assert s.is_partial_isomorphism(union_maps(s, pieces))
    for _ in range(100):
        a, b = _piece(s, base, rng), _piece(s, base, rng)
        # send one of b's fresh classes into a class already hit by a
        target = s.class_of(next(q for p, q in a.items() if p not in base))
        src = next(p for p in b if p not in base)
        b = {p: q for p, q in b.items() if s.class_of(p) != s.class_of(src)}
        b[src] = s._allocate(1, classes=[target])[0]
        assert s.is_partial_isomorphism(b)
        assert not s.is_partial_isomorphism(union_maps(s, [a, b]))


@pytest.mark.criterion(7, "dense extension of 100 requirements on 4x16x64, column witnesses for 3-subsets")
def test_criterion_7_dense_extension():
    t0 = time.perf_counter()
    s = new_structure(StructureKind.EQ_CLASSES, 7)
    reg = build_registry(s, (4, 16, 64))
    rng = random.Random(7)
    states = []
    for j in range(100):
        g = random_requirement(reg, rng, max_size=8)
        assert 1 <= len(g) <= 8
        st_ = dense_extend(reg, s, g, IndexPermutation.generator(100, j), 1, GeneratorLabel(1, j))
        assert all(st_.result.image(p) == q for p, q in g.items())
        assert s.is_partial_isomorphism(st_.result.committed)
        states.append(st_)
    rep = column_witness_sweep(states, size=3, max_len=3)
    assert rep.subsets == 161_700
    assert rep.no_column == [] and rep.identities == []
    assert rep.witnessed == rep.words == 161_700 * sum(naive_count(3, n) for n in range(1, 4))
    assert rep.ok
    assert time.perf_counter() - t0 < 60


@pytest.mark.criterion(8, "certificate round trip is byte-identical; 20 mutations each fail verify")
def test_criterion_8_certificate_integrity(tmp_path, capsys):
    from densefree.tree_construction import run_tree

    cert = export_certificate(run_tree(new_structure(StructureKind.DLO, 8), 4, words_per_stage=300))
    text = cert.dumps()
    assert loads(text).dumps() == text
    doc = json.loads(text)
    assert from_document(doc).dumps() == text

    rng = random.Random(8)
    kinds = list(itertools.islice(itertools.cycle(KINDS), 20))
    rng.shuffle(kinds)
    for n, what in enumerate(kinds):
        bad, needle = mutate(doc, what, rng)
        path = tmp_path / f"m{n}.json"
        path.write_text(json.dumps(bad))
        capsys.readouterr()
        assert main(["verify", str(path)]) == 1, what
        fails = [line for line in capsys.readouterr().out.splitlines() if line.startswith("FAIL ")]
        assert any(needle in line for line in fails), (what, needle, fails[:3])
