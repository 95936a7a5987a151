"""Group presentations, length-3 normalization, finite groups and homomorphisms."""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from forge.errors import InputError, NotAGroup, NotAHomomorphism, UnencodablePresentation
from forge.exactla import Permutation

Letter = tuple[str, int]
Word = tuple[Letter, ...]

RESERVED = frozenset({"e", "b"})
MAX_GROUP_ORDER = 512
_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def _word(raw: Iterable) -> Word:
    out = []
    for item in raw:
        try:
            name, sign = item
        except (TypeError, ValueError):
            raise InputError(f"bad letter {item!r}") from None
        if int(sign) not in (1, -1):
            raise InputError(f"letter exponent must be +1 or -1, got {sign}")
        out.append((str(name), int(sign)))
    return tuple(out)


def free_reduce(w: Sequence[Letter]) -> Word:
    out: list[Letter] = []
    for name, s in w:
        if out and out[-1][0] == name and out[-1][1] == -s:
            out.pop()
        else:
            out.append((name, s))
    return tuple(out)


def cyclic_reduce(w: Sequence[Letter]) -> Word:
    w = list(free_reduce(w))
    while len(w) >= 2 and w[0][0] == w[-1][0] and w[0][1] == -w[-1][1]:
        w = w[1:-1]
    return tuple(w)


def invert(w: Sequence[Letter]) -> Word:
    return tuple((n, -s) for n, s in reversed(w))


def word_str(w: Sequence[Letter]) -> str:
    if not w:
        return "1"
    return " ".join(n if s == 1 else f"{n}^-1" for n, s in w)


@dataclass(frozen=True)
class Presentation:
    generators: tuple[str, ...]
    relators: tuple[Word, ...]
    word: Word

    def __post_init__(self) -> None:
        gens = tuple(str(g) for g in self.generators)
        if len(set(gens)) != len(gens):
            raise InputError("duplicate generator names")
        for g in gens:
            if not _NAME.match(g):
                raise InputError(f"generator name {g!r} is not an identifier")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "relators", tuple(_word(r) for r in self.relators))
        object.__setattr__(self, "word", _word(self.word))
        known = set(gens)
        for w in self.relators + (self.word,):
            for n, _ in w:
                if n not in known:
                    raise InputError(f"letter {n!r} is not a declared generator")

    def to_json(self) -> dict:
        return {
            "generators": list(self.generators),
            "relators": [[[n, s] for n, s in r] for r in self.relators],
            "word": [[n, s] for n, s in self.word],
        }

    @classmethod
    def from_json(cls, obj: dict) -> Presentation:
        try:
            return cls(tuple(obj["generators"]), tuple(obj.get("relators", [])), tuple(obj.get("word", [])))
        except (KeyError, TypeError) as exc:
            raise InputError(f"bad presentation json: {exc}") from exc


@dataclass(frozen=True)
class NormalizedPresentation:
    generators: tuple[str, ...]
    relators: tuple[Word, ...]
    word: str
    source: Presentation
    definitions: dict = field(compare=False)
    transcript: tuple[str, ...] = field(default=(), compare=False)

    def to_json(self) -> dict:
        return {
            "generators": list(self.generators),
            "relators": [[[n, s] for n, s in r] for r in self.relators],
            "word": self.word,
            "source": self.source.to_json(),
            "definitions": {k: [[n, s] for n, s in v] for k, v in sorted(self.definitions.items())},
            "transcript": list(self.transcript),
        }

    @classmethod
    def from_json(cls, obj: dict) -> NormalizedPresentation:
        try:
            src = Presentation.from_json(obj["source"])
            np_ = cls(
                tuple(obj["generators"]),
                tuple(_word(r) for r in obj["relators"]),
                str(obj["word"]),
                src,
                {k: _word(v) for k, v in obj["definitions"].items()},
                tuple(obj.get("transcript", ())),
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"bad normalized presentation json: {exc}") from exc
        validate_normalized(np_)
        return np_


def validate_normalized(p: NormalizedPresentation) -> None:
    gens = set(p.generators)
    if p.word not in gens:
        raise UnencodablePresentation(f"word generator {p.word!r} is not a generator")
    for r in p.relators:
        if len(r) != 3:
            raise UnencodablePresentation(f"relator {word_str(r)} does not have length 3")
        if any(n not in gens for n, _ in r):
            raise UnencodablePresentation(f"relator {word_str(r)} uses unknown letters")
        names = [n for n, _ in r]
        signs = {n: {s for m, s in r if m == n} for n in names}
        if any(len(v) > 1 for v in signs.values()):
            raise UnencodablePresentation(f"relator {word_str(r)} contains a letter and its inverse")
    for a, b in itertools.combinations(p.relators, 2):
        if sum(x == y for x, y in zip(a, b)) >= 2:
            raise UnencodablePresentation(f"relators {word_str(a)} and {word_str(b)} share two positions")
    if len(set(p.relators)) != len(p.relators):
        raise UnencodablePresentation("duplicate relators")


class _Normalizer:
    MAX_ROUNDS = 10_000

    def __init__(self, p: Presentation):
        for g in p.generators:
            if g in RESERVED:
                raise UnencodablePresentation(f"generator name {g!r} is reserved for the matroid encoding")
        self.source = p
        self.gens: list[str] = list(p.generators)
        self.rels: list[Word] = [tuple(r) for r in p.relators]
        self.defs: dict[str, Word] = {g: ((g, 1),) for g in p.generators}
        self.fresh_names: set[str] = set()
        self.counter = 0
        self.log: list[str] = []

    def fresh(self, definition: Word) -> str:
        while True:
            self.counter += 1
            name = f"_t{self.counter}"
            if name not in self.gens:
                break
        self.gens.append(name)
        self.fresh_names.add(name)
        self.defs[name] = free_reduce(definition)
        return name

    def expand(self, w: Sequence[Letter]) -> Word:
        out: list[Letter] = []
        for n, s in w:
            d = self.defs[n]
            out.extend(d if s == 1 else invert(d))
        return free_reduce(out)

    def substitute(self, name: str, repl: Word) -> None:
        def sub(w: Word) -> Word:
            out: list[Letter] = []
            for n, s in w:
                if n == name:
                    out.extend(repl if s == 1 else invert(repl))
                else:
                    out.append((n, s))
            return tuple(out)

        self.rels = [sub(r) for r in self.rels]
        self.gens.remove(name)
        del self.defs[name]

    def run(self) -> NormalizedPresentation:
        word = free_reduce(self.source.word)
        if not word:
            raise UnencodablePresentation("the word is trivial in the free group")
        if len(word) == 1:
            self.w = word[0][0]
            if word[0][1] == -1:
                self.log.append(f"word {word_str(word)} replaced by {self.w} (same triviality)")
        else:
            wt = self.fresh(invert(self.expand(word)))
            self.rels.append(word + ((wt, 1),))
            self.w = wt
            self.log.append(f"fresh {wt} := ({word_str(word)})^-1; word replaced by {wt}")

        for _ in range(self.MAX_ROUNDS):
            if not self.step():
                break
        else:
            raise UnencodablePresentation("normalization did not terminate within the round cap")

        defs = {g: self.defs[g] for g in self.gens}
        out = NormalizedPresentation(
            tuple(self.gens), tuple(self.rels), self.w, self.source, defs, tuple(self.log)
        )
        validate_normalized(out)
        return out

    def step(self) -> bool:
        """Apply one rewrite; return False once nothing applies."""
        reduced = []
        for r in self.rels:
            rr = cyclic_reduce(r)
            if rr:
                reduced.append(rr)
        seen = set()
        uniq = []
        for r in reduced:
            if r not in seen:
                seen.add(r)
                uniq.append(r)
        self.rels = uniq

        for i, r in enumerate(self.rels):
            if len(r) == 1:
                (u, _), = r
                if u == self.w:
                    raise UnencodablePresentation(f"relator {word_str(r)} makes the word trivial")
                del self.rels[i]
                self.substitute(u, ())
                self.log.append(f"eliminate {u} := 1 (relator {word_str(r)})")
                return True

        for i, r in enumerate(self.rels):
            if len(r) != 2:
                continue
            (u, a), (v, b) = r
            if u != v:
                del self.rels[i]
                if v == self.w:
                    u, a, v, b = v, b, u, a
                # u^a v^b = 1  =>  v = u^(-a*b)
                self.substitute(v, ((u, -a * b),))
                self.log.append(f"eliminate {v} := {word_str(((u, -a * b),))} (relator {word_str(r)})")
                return True
            del self.rels[i]
            t = self.fresh(invert(self.expand(((u, 1), (u, 1)))))
            s = self.fresh(invert(self.expand(((t, 1), (t, 1)))))
            self.rels.extend([((u, 1), (u, 1), (t, 1)), ((t, 1), (t, 1), (s, 1)), ((s, 1), (u, -1), (u, -1))])
            self.log.append(f"square gadget for {word_str(r)} with fresh {t}, {s}")
            return True

        memo: dict[tuple[Letter, Letter], str] = {}
        for r in self.rels:
            if len(r) == 3 and r[2][1] == 1 and r[2][0] in self.fresh_names and r[2][0] != self.w:
                memo.setdefault((r[0], r[1]), r[2][0])
        for i, r in enumerate(self.rels):
            if len(r) <= 3:
                continue
            key = (r[0], r[1])
            u = memo.get(key)
            if u is None:
                u = self.fresh(invert(self.expand(r[:2])))
                self.rels.append(r[:2] + ((u, 1),))
                self.log.append(f"fresh {u} := ({word_str(r[:2])})^-1")
            self.rels[i] = ((u, -1),) + r[2:]
            self.log.append(f"chain {word_str(r)} -> {word_str(self.rels[i])}")
            return True

        for a, b in itertools.combinations(self.rels, 2):
            same = [k for k in range(3) if a[k] == b[k]]
            if len(same) == 2:
                k = ({0, 1, 2} - set(same)).pop()
                # ... a[k] ... = ... b[k] ... with matching context  =>  a[k] = b[k]
                if k == 0:
                    derived = (a[0], (b[0][0], -b[0][1]))
                elif k == 2:
                    derived = (a[2], (b[2][0], -b[2][1]))
                else:
                    derived = (a[1], (b[1][0], -b[1][1]))
                self.rels.append(derived)
                self.log.append(f"relators {word_str(a)} and {word_str(b)} force {word_str(derived)}")
                return True
        return False


def normalize(p: Presentation) -> NormalizedPresentation:
    """Tietze-rewrite to relators of length exactly three and a generator word."""
    return _Normalizer(p).run()


# ---------------------------------------------------------------------------
# finite groups
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    n: int
    mul: np.ndarray
    identity: int = 0
    names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        t = np.ascontiguousarray(self.mul, dtype=np.int64)
        if t.shape != (self.n, self.n):
            raise NotAGroup(f"multiplication table shape {t.shape} for order {self.n}")
        t.setflags(write=False)
        object.__setattr__(self, "mul", t)

    def op(self, a: int, b: int) -> int:
        return int(self.mul[a, b])

    @property
    def inverses(self) -> np.ndarray:
        rows, cols = np.nonzero(self.mul == self.identity)
        inv = np.empty(self.n, dtype=np.int64)
        inv[rows] = cols
        return inv

    def to_json(self) -> dict:
        return {"n": self.n, "mul": self.mul.tolist(), "identity": self.identity}

    @classmethod
    def from_json(cls, obj: dict) -> FiniteGroup:
        try:
            g = cls(int(obj["n"]), np.array(obj["mul"], dtype=np.int64), int(obj.get("identity", 0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad group json: {exc}") from exc
        validate_group(g)
        return g


def validate_group(g: FiniteGroup) -> None:
    n = g.n
    if not 1 <= n <= MAX_GROUP_ORDER:
        raise NotAGroup(f"order {n} outside 1..{MAX_GROUP_ORDER}")
    t = g.mul
    if (t < 0).any() or (t >= n).any():
        raise NotAGroup("table entries out of range")
    e = g.identity
    if not 0 <= e < n:
        raise NotAGroup("identity index out of range")
    ar = np.arange(n)
    if not (np.array_equal(t[e], ar) and np.array_equal(t[:, e], ar)):
        raise NotAGroup(f"element {e} is not a two-sided identity")
    for a in range(n):
        if len(set(t[a].tolist())) != n or len(set(t[:, a].tolist())) != n:
            raise NotAGroup(f"row or column {a} is not a permutation (no inverses)")
    for a in range(n):
        # (a b) c == a (b c) for all b, c
        if not np.array_equal(t[t[a]], t[a][t]):
            bad = np.argwhere(t[t[a]] != t[a][t])[0]
            raise NotAGroup(f"associativity fails for ({a}, {int(bad[0])}, {int(bad[1])})")


def _from_elements(elems: list, op, identity) -> FiniteGroup:
    index = {x: i for i, x in enumerate(elems)}
    n = len(elems)
    mul = np.zeros((n, n), dtype=np.int64)
    for i, a in enumerate(elems):
        for j, b in enumerate(elems):
            mul[i, j] = index[op(a, b)]
    return FiniteGroup(n, mul, index[identity], tuple(str(x) for x in elems))


def cyclic(n: int) -> FiniteGroup:
    return _from_elements(list(range(n)), lambda a, b: (a + b) % n, 0)


def symmetric(n: int) -> FiniteGroup:
    if n > 5:
        raise InputError("symmetric groups are built for n <= 5 only")
    elems = list(itertools.permutations(range(n)))
    return _from_elements(elems, lambda a, b: tuple(a[b[i]] for i in range(n)), tuple(range(n)))


def dihedral(m: int) -> FiniteGroup:
    """Symmetries of the m-gon, order 2m; elements (i, j) = r^i s^j."""
    elems = [(i, j) for j in range(2) for i in range(m)]

    def op(x, y):
        (i, a), (k, b) = x, y
        return ((i + (k if a == 0 else -k)) % m, (a + b) % 2)

    return _from_elements(elems, op, (0, 0))


def quaternion() -> FiniteGroup:
    units = [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]
    elems = [tuple(s * c for c in u) for s in (1, -1) for u in units]

    def op(x, y):
        a1, b1, c1, d1 = x
        a2, b2, c2, d2 = y
        return (
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        )

    return _from_elements(elems, op, (1, 0, 0, 0))


def direct_product(g: FiniteGroup, h: FiniteGroup) -> FiniteGroup:
    elems = [(a, b) for a in range(g.n) for b in range(h.n)]
    return _from_elements(elems, lambda x, y: (g.op(x[0], y[0]), h.op(x[1], y[1])), (g.identity, h.identity))


def small_groups() -> list[tuple[str, FiniteGroup]]:
    """All groups of order at most 8 up to isomorphism."""
    z2 = cyclic(2)
    return [
        ("Z1", cyclic(1)),
        ("Z2", z2),
        ("Z3", cyclic(3)),
        ("Z4", cyclic(4)),
        ("Z2xZ2", direct_product(z2, z2)),
        ("Z5", cyclic(5)),
        ("Z6", cyclic(6)),
        ("S3", symmetric(3)),
        ("Z7", cyclic(7)),
        ("Z8", cyclic(8)),
        ("Z4xZ2", direct_product(cyclic(4), z2)),
        ("Z2^3", direct_product(direct_product(z2, z2), z2)),
        ("D4", dihedral(4)),
        ("Q8", quaternion()),
    ]


def evaluate(w: Sequence[Letter], images: dict, g: FiniteGroup) -> int:
    inv = g.inverses
    x = g.identity
    for n, s in w:
        y = images[n]
        x = g.op(x, y if s == 1 else int(inv[y]))
    return x


@dataclass(frozen=True, eq=False)
class Homomorphism:
    source: NormalizedPresentation
    target: FiniteGroup
    images: dict

    def image(self, gen: str) -> int:
        return int(self.images[gen])


def lift_images(p: NormalizedPresentation, g: FiniteGroup, images: dict) -> dict:
    """Generator images for ``p`` from images of either ``p``'s or the source's generators."""
    images = {str(k): int(v) for k, v in images.items()}
    for v in images.values():
        if not 0 <= v < g.n:
            raise NotAHomomorphism(f"image {v} is not an element of the target")
    if all(x in images for x in p.generators):
        return {x: images[x] for x in p.generators}
    src = p.source.generators
    missing = [x for x in src if x not in images]
    if missing:
        raise NotAHomomorphism(f"no image given for {missing}")
    return {x: evaluate(p.definitions[x], images, g) for x in p.generators}


def validate_hom(h: Homomorphism) -> None:
    for x in h.source.generators:
        if x not in h.images:
            raise NotAHomomorphism(f"no image for generator {x}")
    for r in h.source.relators:
        if evaluate(r, h.images, h.target) != h.target.identity:
            raise NotAHomomorphism(f"relator {word_str(r)} does not map to the identity")


def validate_source_hom(p: Presentation, g: FiniteGroup, images: dict) -> None:
    for r in p.relators:
        if evaluate(r, images, g) != g.identity:
            raise NotAHomomorphism(f"relator {word_str(r)} does not map to the identity")


def enumerate_homomorphisms(generators: Sequence[str], relators: Sequence[Word], g: FiniteGroup) -> list[dict]:
    """Every assignment of generator images killing all relators (backtracking)."""
    gens = list(generators)
    pos = {x: i for i, x in enumerate(gens)}
    # check each relator as soon as its last letter is assigned
    ready: list[list[Word]] = [[] for _ in gens]
    for r in relators:
        if r:
            ready[max(pos[n] for n, _ in r)].append(r)
    out: list[dict] = []
    images: dict = {}

    def rec(i: int) -> None:
        if i == len(gens):
            out.append(dict(images))
            return
        for v in range(g.n):
            images[gens[i]] = v
            if all(evaluate(r, images, g) == g.identity for r in ready[i]):
                rec(i + 1)
        images.pop(gens[i], None)

    rec(0)
    return out


def regular_representation(g: FiniteGroup) -> list[Permutation]:
    """rho(a) sends h to a*h."""
    return [Permutation(tuple(int(x) for x in g.mul[a])) for a in range(g.n)]
