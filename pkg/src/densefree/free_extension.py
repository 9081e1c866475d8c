"""Extending generators so that a given reduced word visibly moves a point.

``kill_word`` walks the word letter by letter. Each step maps the current
spread onto a brand new one realizing the image type over everything the
generator already knows, and a label that occurs again keeps every pair it
picked up at its earlier occurrences. The first and last spreads are fresh
relative to each other, so the composite cannot be the identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .automorphisms import LazyAutomorphism
from .errors import InconsistentReuse, MissingLabel, PreconditionViolation
from .structures import AmbientStructure, QfType
from .words import GeneratorLabel, ReducedWord, evaluate


@dataclass(frozen=True)
class Witness:
    word: ReducedWord
    start: int
    end: int
    stage: int

    def to_json(self) -> dict:
        return {"word": self.word.tokens(), "start": self.start, "end": self.end, "stage": self.stage}


def kill_word(
    s: AmbientStructure,
    w: ReducedWord,
    gens: Mapping[GeneratorLabel, LazyAutomorphism],
    support: Iterable[int],
    stage: int,
    *,
    anchor: QfType | None = None,
    spread_len: int = 1,
) -> Witness:
    """Extend the generators named in ``w`` so that ``w`` moves a fresh point.

    ``gens`` is updated in place; labels absent from ``w`` are left alone.
    ``anchor`` fixes the type of the first spread over a subset of
    ``support``; by default the plain type over all of ``support`` is used.
    """
    if not w:
        raise PreconditionViolation("cannot kill the empty word")
    if not 1 <= spread_len <= 8:
        raise PreconditionViolation("spread length must lie in 1..8")
    for x in w:
        if x.label not in gens:
            raise MissingLabel(x.label)

    if anchor is None:
        spreads = [tuple(s.plain_members(support, spread_len))]
    else:
        spreads = [s.create_spread(anchor.base, anchor, spread_len).members]

    for i, letter in enumerate(w):
        g = gens[letter.label]
        src = spreads[i]
        committed = g.committed
        if letter.sign > 0:
            if any(a in committed for a in src):
                raise InconsistentReuse(f"{letter} is already defined on spread {i}")
            img = s.realize_image(committed.view(), src)
            g.commit_pairs(zip(src, img), stage)
        else:
            if any(committed.in_range(a) for a in src):
                raise InconsistentReuse(f"{letter} is already defined on spread {i}")
            img = s.realize_image(committed.view(inverse=True), src)
            g.commit_pairs(zip(img, src), stage)
        spreads.append(img)

    seen: set[int] = set()
    for sp in spreads:
        assert not seen & set(sp), "spreads overlap"
        seen.update(sp)
    wt = Witness(w, spreads[0][0], spreads[-1][0], stage)
    assert wt.start != wt.end
    assert evaluate(w, gens, wt.start) == wt.end
    return wt


def witness_persists(wt: Witness, gens: Mapping[GeneratorLabel, LazyAutomorphism]) -> bool:
    return evaluate(wt.word, gens, wt.start) == wt.end
