"""End-to-end runs of the array constructions, ready for export."""

from __future__ import annotations

from dataclasses import dataclass, field

from .automorphisms import LazyAutomorphism, PartialAutomorphism
from .free_extension import Witness
from .stable_construction import (
    ArrayIndex,
    ArrayRegistry,
    DenseExtensionState,
    IndexPermutation,
    build_registry,
    dense_extend,
    random_requirement,
    star_evaluate,
    star_extension,
    type_action,
)
from .structures import AmbientStructure, StructureKind, new_structure
from .words import GeneratorLabel, ReducedWord, evaluate, iter_words


@dataclass
class ArrayRun:
    module: str
    structure: AmbientStructure
    registry: ArrayRegistry
    parameters: dict
    gens: dict[GeneratorLabel, LazyAutomorphism] = field(default_factory=dict)
    witnesses: list[Witness] = field(default_factory=list)
    density_log: list[tuple[PartialAutomorphism, GeneratorLabel]] = field(default_factory=list)
    unclaimed: list[ReducedWord] = field(default_factory=list)
    states: list[DenseExtensionState] = field(default_factory=list)


def _claim(run: ArrayRun, w: ReducedWord, candidates, stage: int) -> None:
    for p in candidates:
        q = evaluate(w, run.gens, p)
        if q is not None and q != p:
            run.witnesses.append(Witness(w, p, q, stage))
            return
    run.unclaimed.append(w)


def stable_run(seed: int, dims: tuple[int, int, int] = (2, 4, 32), rank: int = 2, max_word_len: int = 4) -> ArrayRun:
    """Star generators on a small base, one per rank letter.

    Each star moves the base along a random permutation of the types and
    moves rows by one free generator.
    """
    s = new_structure(StructureKind.EQ_CLASSES, seed)
    t = dims[0]
    base = []
    for _ in range(t):
        c = s.new_class()
        base.extend(s._allocate(2, classes=[c, c]))
    reg = build_registry(s, dims, base)
    run = ArrayRun("stable", s, reg, {"dims": list(dims), "rank": rank, "max_word_len": max_word_len})
    rng = s.rng
    by_type = {i: [b for b in base if s.class_of(b) == reg.classes[i]] for i in range(t)}
    stars = {}
    for a in range(rank):
        perm = list(range(t))
        rng.shuffle(perm)
        g: dict[int, int] = {}
        for i in range(t):
            tgt = by_type[perm[i]][:]
            rng.shuffle(tgt)
            g.update(zip(by_type[i], tgt))
        cls = type_action(s, g, list(reg.classes))
        fg = {i: reg.type_of_class(cls[reg.classes[i]]) for i in range(t)}
        h = IndexPermutation.generator(rank, a)
        lab = GeneratorLabel(1, a)
        gen = LazyAutomorphism(lab, s)
        gen.commit_pairs(star_extension(reg, g, fg, h).pairs(), 1)
        run.gens[lab] = gen
        stars[lab] = (fg, h)
    cells = sorted(reg.cells)
    for w in iter_words(list(run.gens), max_word_len):
        before = len(run.witnesses)
        _claim(run, w, [reg.point(ix) for ix in cells], 1)
        if len(run.witnesses) > before:
            wt = run.witnesses[-1]
            sym = star_evaluate(stars, w, reg.index_of(wt.start))
            assert reg.index_of(wt.end) == sym, "star map disagrees with its symbolic form"
    return run


def dense_run(seed: int, dims: tuple[int, int, int] = (4, 16, 64), rank: int = 3, max_word_len: int = 3) -> ArrayRun:
    """``rank`` random requirements, each extended by its own free letter."""
    s = new_structure(StructureKind.EQ_CLASSES, seed)
    reg = build_registry(s, dims)
    run = ArrayRun("dense", s, reg, {"dims": list(dims), "rank": rank, "max_word_len": max_word_len})
    for a in range(rank):
        g = random_requirement(reg, s.rng)
        lab = GeneratorLabel(1, a)
        st = dense_extend(reg, s, g, IndexPermutation.generator(rank, a), 1, lab)
        run.states.append(st)
        run.gens[lab] = st.result
        run.density_log.append((st.requirement, lab))
    by_label = {st.label: st for st in run.states}
    for w in iter_words(list(run.gens), max_word_len):
        used = {x.label for x in w}
        common = frozenset.intersection(*(by_label[lab].untouched for lab in used))
        cands = (
            reg.point(ArrayIndex(i, z, r)) for z in sorted(common) for r in range(reg.rows) for i in range(reg.types)
        )
        _claim(run, w, cands, 1)
    return run
