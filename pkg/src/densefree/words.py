"""Reduced words over generator labels: reduction, enumeration, evaluation.

Letters are applied first-letter-first, so ``[a, b]`` means "apply a, then b".
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Iterable, Iterator, Mapping, Sequence

from .errors import MissingLabel


class Role(enum.Enum):
    FREE = "free"
    DENSITY = "density"


_ROLE_ORDER = {Role.FREE: 0, Role.DENSITY: 1}


@dataclass(frozen=True)
class GeneratorLabel:
    level: int
    index: int
    role: Role = Role.FREE

    @property
    def token(self) -> str:
        return f"{self.level}.{self.index}.{self.role.value}"

    @classmethod
    def parse(cls, token: str) -> GeneratorLabel:
        level, index, role = token.split(".")
        if not (level.isdigit() and index.isdigit()):
            raise ValueError(f"bad label token {token!r}")
        return cls(int(level), int(index), Role(role))

    def sort_key(self) -> tuple[int, int, int]:
        return (self.level, _ROLE_ORDER[self.role], self.index)

    def __str__(self) -> str:
        return self.token


@dataclass(frozen=True)
class Letter:
    label: GeneratorLabel
    sign: int = 1

    def __post_init__(self) -> None:
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def inverse(self) -> Letter:
        return Letter(self.label, -self.sign)

    def __str__(self) -> str:
        return f"{self.label}{'+' if self.sign > 0 else '-'}"


@dataclass(frozen=True)
class ReducedWord:
    letters: tuple[Letter, ...] = ()

    def __post_init__(self) -> None:
        for x, y in zip(self.letters, self.letters[1:]):
            if x.label == y.label and x.sign != y.sign:
                raise ValueError(f"word is not reduced at {x}{y}")

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[Letter]:
        return iter(self.letters)

    def __bool__(self) -> bool:
        return bool(self.letters)

    def inverse(self) -> ReducedWord:
        return ReducedWord(tuple(x.inverse() for x in reversed(self.letters)))

    def labels(self) -> frozenset[GeneratorLabel]:
        return frozenset(x.label for x in self.letters)

    def tokens(self) -> list[list]:
        return [[x.label.token, x.sign] for x in self.letters]

    @classmethod
    def from_tokens(cls, tokens: Iterable[Sequence]) -> ReducedWord:
        return cls(tuple(Letter(GeneratorLabel.parse(t), int(s)) for t, s in tokens))

    def __str__(self) -> str:
        return " ".join(map(str, self.letters)) or "ε"


EMPTY = ReducedWord()


def reduce(letters: Iterable[Letter]) -> ReducedWord:
    stack: list[Letter] = []
    for x in letters:
        if stack and stack[-1].label == x.label and stack[-1].sign == -x.sign:
            stack.pop()
        else:
            stack.append(x)
    return ReducedWord(tuple(stack))


def alphabet(labels: Sequence[GeneratorLabel]) -> list[Letter]:
    """Letters in enumeration order: label position first, then + before -."""
    return [Letter(lab, s) for lab in labels for s in (1, -1)]


def iter_words(
    labels: Sequence[GeneratorLabel],
    max_len: int,
    required: Iterable[GeneratorLabel] | None = None,
) -> Iterator[ReducedWord]:
    """Nonempty reduced words of length <= max_len in length-lexicographic order.

    With ``required``, only words mentioning at least one of those labels are
    produced; pruning happens during generation, not after it.
    """
    if len(set(labels)) != len(labels):
        raise ValueError("labels must be pairwise distinct")
    letters = alphabet(labels)
    need = frozenset(required) if required is not None else None

    def extend(prefix: tuple[Letter, ...], remaining: int, hit: bool) -> Iterator[tuple[Letter, ...]]:
        if remaining == 0:
            yield prefix
            return
        last = prefix[-1] if prefix else None
        for x in letters:
            if last is not None and x.label == last.label and x.sign != last.sign:
                continue
            now = hit or x.label in need  # type: ignore[operator]
            if remaining == 1 and not now:
                continue
            yield from extend(prefix + (x,), remaining - 1, now)

    # depth-first per length keeps memory flat for large alphabets
    for length in range(1, max_len + 1):
        for w in extend((), length, need is None):
            yield ReducedWord(w)


def enumerate_words(labels: Sequence[GeneratorLabel], max_len: int) -> list[ReducedWord]:
    if not labels:
        raise ValueError("need at least one label")
    return list(iter_words(labels, max_len))


def count_words(k: int, length: int) -> int:
    """Number of reduced words of exactly ``length`` over ``k`` generators."""
    if length == 0:
        return 1
    return 2 * k * (2 * k - 1) ** (length - 1)


def _step(g: Any, p: int, sign: int) -> int | None:
    if isinstance(g, Mapping) and not hasattr(g, "image"):
        if sign > 0:
            return g.get(p)
        for a, b in g.items():
            if b == p:
                return a
        return None
    return g.image(p) if sign > 0 else g.preimage(p)


def evaluate(w: ReducedWord, assign: Mapping[GeneratorLabel, Any], p: int) -> int | None:
    """Apply ``w`` to ``p``; ``None`` as soon as some letter is undefined.

    Assignments may be partial automorphisms, lazy automorphisms (their
    committed graph is used) or plain dicts.
    """
    for x in w.letters:
        if x.label not in assign:
            raise MissingLabel(x.label)
    for x in w.letters:
        g = assign[x.label]
        g = getattr(g, "committed", g)
        p = _step(g, p, x.sign)
        if p is None:
            return None
    return p
