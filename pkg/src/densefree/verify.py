"""Independent re-checking of certificates.

Nothing here touches the construction code: relations are rebuilt from the
point rows and every claim is re-derived from the recorded graphs.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Sequence

from .certificate import Certificate
from .errors import MalformedCertificate


@dataclass
class FreenessReport:
    words_checked: int = 0
    witnessed: int = 0
    failures: list[str] = field(default_factory=list)
    out_of_budget: int = 0


@dataclass
class DensityReport:
    requirements_checked: int = 0
    satisfied: int = 0
    failures: list[str] = field(default_factory=list)


@dataclass
class IsomorphismReport:
    generators_checked: int = 0
    failures: list[str] = field(default_factory=list)


@dataclass
class VerifyReport:
    freeness: FreenessReport
    density: DensityReport
    isomorphism: IsomorphismReport
    registry_failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (
            self.freeness.failures or self.density.failures or self.isomorphism.failures or self.registry_failures
        )

    def failures(self) -> list[str]:
        return self.isomorphism.failures + self.freeness.failures + self.density.failures + self.registry_failures

    def lines(self) -> list[str]:
        f, d, i = self.freeness, self.density, self.isomorphism
        return [
            f"isomorphism: {i.generators_checked} generators checked, {len(i.failures)} failures",
            f"freeness: {f.words_checked} words checked, {f.witnessed} witnessed, "
            f"{len(f.failures)} failures, {f.out_of_budget} out of budget",
            f"density: {d.requirements_checked} requirements checked, {d.satisfied} satisfied, "
            f"{len(d.failures)} failures",
            f"registry: {len(self.registry_failures)} failures",
        ]


class Relations:
    """Relation data rebuilt from certificate point rows."""

    def __init__(self, kind: str, rows: Sequence[Sequence]):
        self.kind = kind
        self.n = len(rows)
        self.adj: list[set[int]] = []
        self.rank: list[int] = []
        self.cls: list[int] = []
        if kind == "graph":
            self.adj = [set() for _ in rows]
            for p, lower in rows:
                for x in lower:
                    self.adj[p].add(x)
                    self.adj[x].add(p)
        elif kind == "dlo":
            self.rank = [r[1] for r in rows]
            if sorted(self.rank) != list(range(self.n)):
                raise MalformedCertificate("order ranks must be a permutation of 0..n-1")
        elif kind == "eqrel":
            self.cls = [r[1] for r in rows]

    def preserves(self, m: dict[int, int]) -> str | None:
        """None if ``m`` is a partial isomorphism, else the reason."""
        for a, b in m.items():
            if not (0 <= a < self.n and 0 <= b < self.n):
                return f"pair {a}->{b} mentions an unknown point"
        if len(set(m.values())) != len(m):
            return "not injective"
        if self.kind == "graph":
            ran = set(m.values())
            inner = 0
            for a, b in m.items():
                for x in self.adj[a]:
                    if x in m:
                        inner += 1
                        if m[x] not in self.adj[b]:
                            return f"edge {a}-{x} is not preserved"
            back = sum(1 for b in m.values() for y in self.adj[b] if y in ran)
            if back != inner:
                return "a non-edge is sent to an edge"
        elif self.kind == "dlo":
            srt = sorted(m, key=self.rank.__getitem__)
            for x, y in zip(srt, srt[1:]):
                if self.rank[m[x]] >= self.rank[m[y]]:
                    return f"order between {x} and {y} is not preserved"
        elif self.kind == "eqrel":
            fwd: dict[int, int] = {}
            bwd: dict[int, int] = {}
            for a, b in m.items():
                ca, cb = self.cls[a], self.cls[b]
                if fwd.setdefault(ca, cb) != cb or bwd.setdefault(cb, ca) != ca:
                    return f"classes are not preserved at {a}->{b}"
        return None


def _word_str(word: list) -> str:
    return " ".join(f"{t}{'+' if s > 0 else '-'}" for t, s in word) or "ε"


def _pairs_str(pairs: list) -> str:
    return "{" + ", ".join(f"{a}->{b}" for a, b in pairs) + "}"


def _run(word: list, fwd: dict[str, dict[int, int]], bwd: dict[str, dict[int, int]], p: int) -> int | None:
    for tok, sign in word:
        table = fwd.get(tok) if sign > 0 else bwd.get(tok)
        if table is None:
            return None
        p = table.get(p)
        if p is None:
            return None
    return p


def _reduced(word: list) -> bool:
    return all(not (x[0] == y[0] and x[1] != y[1]) for x, y in zip(word, word[1:]))


def _count_upto(k: int, max_len: int) -> int:
    return sum(2 * k * (2 * k - 1) ** (n - 1) for n in range(1, max_len + 1)) if k else 0


def _graphs(cert: Certificate) -> tuple[dict, dict, list[str]]:
    fwd: dict[str, dict[int, int]] = {}
    bwd: dict[str, dict[int, int]] = {}
    problems = []
    for g in cert.generators:
        lab = g["label"]
        if lab in fwd:
            problems.append(f"generator {lab}: listed twice")
            continue
        f: dict[int, int] = {}
        for a, b in g["pairs"]:
            if a in f:
                problems.append(f"generator {lab}: source {a} mapped twice")
            f[a] = b
        fwd[lab] = f
        bwd[lab] = {b: a for a, b in f.items()}
    return fwd, bwd, problems


def verify_isomorphism(cert: Certificate, rel: Relations | None = None) -> IsomorphismReport:
    rel = rel or Relations(cert.kind, cert.points)
    rep = IsomorphismReport()
    _, _, problems = _graphs(cert)
    rep.failures.extend(problems)
    for g in cert.generators:
        rep.generators_checked += 1
        why = rel.preserves(dict(map(tuple, g["pairs"])))
        if why is None and len({b for _, b in g["pairs"]}) != len(g["pairs"]):
            why = "not injective"
        if why is not None:
            rep.failures.append(f"generator {g['label']}: {why}")
    return rep


def verify_freeness(cert: Certificate, max_len: int | None = None) -> FreenessReport:
    """Re-run every claimed witness; count the unclaimed words up to ``max_len``."""
    fwd, bwd, _ = _graphs(cert)
    rep = FreenessReport()
    claimed = set()
    n = len(cert.points)
    for k in cert.killed_words:
        word = k["word"]
        name = _word_str(word)
        rep.words_checked += 1
        claimed.add(tuple(map(tuple, word)))
        if not word or not _reduced(word):
            rep.failures.append(f"word {name}: not a nonempty reduced word")
            continue
        missing = [t for t, _ in word if t not in fwd]
        if missing:
            rep.failures.append(f"word {name}: unknown label {missing[0]}")
            continue
        if not (0 <= k["start"] < n and 0 <= k["end"] < n):
            rep.failures.append(f"word {name}: witness mentions an unknown point")
            continue
        got = _run(word, fwd, bwd, k["start"])
        if got is None:
            rep.failures.append(f"word {name}: undefined at {k['start']}")
        elif got != k["end"]:
            rep.failures.append(f"word {name}: {k['start']} goes to {got}, not {k['end']}")
        elif got == k["start"]:
            rep.failures.append(f"word {name}: witness does not move {got}")
        else:
            rep.witnessed += 1
    if max_len is None:
        max_len = int(cert.parameters.get("max_word_len", 0) or 0)
    in_range = sum(1 for w in claimed if 1 <= len(w) <= max_len)
    rep.out_of_budget = _count_upto(len(cert.generators), max_len) - in_range
    return rep


def _requirements(rel: Relations, fragment: list[int], size: int):
    pts = sorted(fragment)
    found = False
    for k in range(1, min(size, len(pts)) + 1):
        for dom in itertools.combinations(pts, k):
            for img in itertools.permutations(pts, k):
                m = dict(zip(dom, img))
                if rel.preserves(m) is None:
                    found = True
                    yield tuple(sorted(m.items()))
    if not found:
        yield ()


def verify_density(cert: Certificate, rel: Relations | None = None) -> DensityReport:
    """Logged requirements must sit inside their generators; fragments must be covered."""
    rel = rel or Relations(cert.kind, cert.points)
    fwd, _, _ = _graphs(cert)
    rep = DensityReport()
    covered: dict[tuple, list[str]] = defaultdict(list)
    for d in cert.density_log:
        req = d["requirement"]
        lab = d["label"]
        rep.requirements_checked += 1
        g = fwd.get(lab)
        if g is None:
            rep.failures.append(f"requirement {_pairs_str(req)}: unknown label {lab}")
        elif any(g.get(a) != b for a, b in req):
            rep.failures.append(f"requirement {_pairs_str(req)}: not extended by {lab}")
        else:
            rep.satisfied += 1
            covered[tuple(map(tuple, sorted(req)))].append(lab)
    size = cert.parameters.get("density_size")
    if cert.module == "tree" and isinstance(size, int):
        for stage, frag in enumerate(cert.fragments, start=1):
            for req in _requirements(rel, frag, size):
                if req not in covered:
                    rep.failures.append(f"requirement {_pairs_str(req)} on stage {stage} fragment: no generator")
    return rep


def verify_registry(cert: Certificate, rel: Relations | None = None) -> list[str]:
    reg = cert.registry
    if reg is None:
        return []
    rel = rel or Relations(cert.kind, cert.points)
    out = []
    t, c, r = reg["dims"]
    seen: dict[int, tuple] = {}
    idx = set()
    base = set(reg["base"])
    for i, z, x, p in reg["cells"]:
        if not (0 <= i < t and 0 <= z < c and 0 <= x < r):
            out.append(f"cell ({i},{z},{x}) lies outside dims")
        if (i, z, x) in idx:
            out.append(f"cell ({i},{z},{x}) listed twice")
        idx.add((i, z, x))
        if p in seen:
            out.append(f"point {p} is both cell {seen[p]} and ({i},{z},{x})")
        seen[p] = (i, z, x)
        if not 0 <= p < rel.n:
            out.append(f"cell ({i},{z},{x}) is an unknown point")
        elif rel.cls and rel.cls[p] != reg["classes"][i]:
            out.append(f"cell ({i},{z},{x}) is not in class {reg['classes'][i]}")
        if p in base:
            out.append(f"cell ({i},{z},{x}) lies in the base")
    if len(idx) != t * c * r:
        out.append(f"registry lists {len(idx)} cells, dims say {t * c * r}")
    return out


def verify(cert: Certificate, max_len: int | None = None) -> VerifyReport:
    rel = Relations(cert.kind, cert.points)
    return VerifyReport(
        verify_freeness(cert, max_len),
        verify_density(cert, rel),
        verify_isomorphism(cert, rel),
        verify_registry(cert, rel),
    )


def verify_document(doc: Any, max_len: int | None = None) -> VerifyReport:
    from .certificate import from_document

    return verify(from_document(doc), max_len)
