"""Computable group models: free products of finitely generated abelian groups.

A single representation covers every supported group class:

* free group of rank k        = free product of k copies of Z,
* free abelian group of rank k = a single Z^k factor,
* proper free products         = several Z^{k_i} factors (the relatively
  hyperbolic case, with the factors as peripheral subgroups).

Elements are stored in syllable normal form: a tuple of ``(factor, vec)``
pairs with nonzero exponent vectors and distinct consecutive factors.  The
word metric is exact: each abelian factor carries its l1 norm and the length
of an element is the sum of its syllable norms.  Balls of these models are
geodesically convex, which the test suite verifies exhaustively against BFS
at small radius; all fast distance computations rely on that fact.

Everything here is immutable after construction and safe to share across
concurrent readers.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import AlphabetError, EmptyInputError, ModelMismatchError

Syllable = tuple[int, tuple[int, ...]]
Key = tuple[Syllable, ...]


class Element:
    """A group element in syllable normal form.

    ``key`` is the canonical payload; two elements are equal iff they belong
    to the same model and have equal keys.  Hash and length are cached since
    elements are used as dictionary keys in hot loops.
    """

    __slots__ = ("model", "key", "_len", "_hash")

    def __init__(self, model: "GroupModel", key: Key):
        self.model = model
        self.key = key
        self._len = -1
        self._hash = -1

    @property
    def length(self) -> int:
        if self._len < 0:
            self._len = sum(sum(abs(e) for e in vec) for _, vec in self.key)
        return self._len

    @property
    def syllables(self) -> Key:
        return self.key

    @property
    def word(self) -> tuple[int, ...]:
        """The element expanded into signed generator letters (a geodesic spelling)."""
        return self.model.letters_of(self)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Element)
            and self.model is other.model
            and self.key == other.key
        )

    def __hash__(self) -> int:
        if self._hash == -1:
            h = hash(self.key)
            self._hash = h if h != -1 else -2
        return self._hash

    def __lt__(self, other: "Element") -> bool:
        # deterministic order: shorter first, then lexicographic on keys
        return (self.length, self.key) < (other.length, other.key)

    def __bool__(self) -> bool:
        return bool(self.key)

    def __mul__(self, other: "Element") -> "Element":
        return self.model.multiply(self, other)

    def __invert__(self) -> "Element":
        return self.model.inverse(self)

    def __pow__(self, n: int) -> "Element":
        return self.model.power(self, n)

    def __repr__(self) -> str:
        return f"<{self.model.format_element(self)}>"

    def __str__(self) -> str:
        return self.model.format_element(self)


def _merge_push(out: list[Syllable], syl: Syllable) -> None:
    """Append a syllable to a normal-form prefix, merging/cancelling at the seam.

    A full cancellation exposes a syllable of a different factor, so a single
    merge step suffices per pushed syllable.
    """
    factor, vec = syl
    if not any(vec):
        return
    if out and out[-1][0] == factor:
        merged = tuple(a + b for a, b in zip(out[-1][1], vec))
        out.pop()
        if any(merged):
            out.append((factor, merged))
        return
    out.append((factor, vec))


class GroupModel:
    """A free product of finitely generated free abelian groups.

    ``factor_ranks[i]`` is the rank of the i-th factor; ``peripheral_factors``
    lists the factor indices forming the peripheral collection (empty for free
    groups, which are treated as absolutely hyperbolic).
    """

    def __init__(
        self,
        factor_ranks: Sequence[int],
        peripheral_factors: Sequence[int] = (),
        generator_names: Sequence[str] | None = None,
    ):
        if not factor_ranks or any(r < 1 for r in factor_ranks):
            raise ValueError("factor ranks must be positive")
        self.factor_ranks = tuple(int(r) for r in factor_ranks)
        self.peripheral_factors = tuple(sorted(set(int(f) for f in peripheral_factors)))
        if any(f < 0 or f >= len(self.factor_ranks) for f in self.peripheral_factors):
            raise ValueError("peripheral factor index out of range")

        # global generator ids are 1-based; letter -g is the inverse of g
        self._factor_offset: list[int] = []
        off = 0
        for r in self.factor_ranks:
            self._factor_offset.append(off)
            off += r
        self.n_generators = off
        self._gen_factor = tuple(
            f for f, r in enumerate(self.factor_ranks) for _ in range(r)
        )
        self._gen_coord = tuple(
            c for r in self.factor_ranks for c in range(r)
        )

        if generator_names is None:
            generator_names = self._default_names()
        if len(generator_names) != self.n_generators:
            raise ValueError("wrong number of generator names")
        self.generator_names = tuple(generator_names)
        self._name_to_gen = {n: i + 1 for i, n in enumerate(self.generator_names)}
        if len(self._name_to_gen) != self.n_generators:
            raise ValueError("generator names must be distinct")

        self.identity = Element(self, ())

    # -- constructors ------------------------------------------------------

    @classmethod
    def free(cls, rank: int, names: Sequence[str] | None = None) -> "GroupModel":
        """Free group of the given rank (no peripheral structure)."""
        return cls([1] * rank, (), names)

    @classmethod
    def free_abelian(cls, rank: int, names: Sequence[str] | None = None) -> "GroupModel":
        """Free abelian group Z^rank as a single factor."""
        return cls([rank], (), names)

    @classmethod
    def free_product(
        cls,
        factor_ranks: Sequence[int],
        peripheral_factors: Sequence[int] | None = None,
        names: Sequence[str] | None = None,
    ) -> "GroupModel":
        """Free product of abelian factors; by default every factor is peripheral."""
        if peripheral_factors is None:
            peripheral_factors = range(len(factor_ranks))
        return cls(factor_ranks, peripheral_factors, names)

    def _default_names(self) -> list[str]:
        if all(r == 1 for r in self.factor_ranks):
            if self.n_generators > 26:
                raise ValueError("provide generator names for rank > 26")
            return [chr(ord("a") + i) for i in range(self.n_generators)]
        names = []
        for f, r in enumerate(self.factor_ranks):
            letter = chr(ord("a") + f)
            names.extend(f"{letter}{j + 1}" for j in range(r))
        return names

    # -- descriptors -------------------------------------------------------

    @property
    def kind(self) -> str:
        if len(self.factor_ranks) == 1:
            return "free-abelian"
        if all(r == 1 for r in self.factor_ranks) and not self.peripheral_factors:
            return "free"
        return "free-product"

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "factor_ranks": list(self.factor_ranks),
            "peripheral_factors": list(self.peripheral_factors),
            "generators": list(self.generator_names),
        }

    def model_hash(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def __repr__(self) -> str:
        return f"GroupModel({self.kind}, ranks={self.factor_ranks})"

    # -- generator bookkeeping ---------------------------------------------

    @property
    def letters(self) -> tuple[int, ...]:
        """All signed generator letters, positive before negative, by gen id."""
        pos = tuple(range(1, self.n_generators + 1))
        return pos + tuple(-g for g in pos)

    def factor_of_letter(self, letter: int) -> int:
        return self._gen_factor[abs(letter) - 1]

    def letter_syllable(self, letter: int, count: int = 1) -> Syllable:
        g = abs(letter) - 1
        f = self._gen_factor[g]
        vec = [0] * self.factor_ranks[f]
        vec[self._gen_coord[g]] = count if letter > 0 else -count
        return (f, tuple(vec))

    def letter_name(self, letter: int) -> str:
        name = self.generator_names[abs(letter) - 1]
        return name if letter > 0 else f"{name}^-1"

    def gen(self, name_or_id: str | int) -> Element:
        letter = self._parse_token(name_or_id)
        return Element(self, (self.letter_syllable(letter),))

    @property
    def generators(self) -> list[Element]:
        return [Element(self, (self.letter_syllable(g),)) for g in range(1, self.n_generators + 1)]

    def _parse_token(self, token) -> int:
        """A token is a signed letter id or a name with optional ^exponent of +-1."""
        if isinstance(token, int):
            if token == 0 or abs(token) > self.n_generators:
                raise AlphabetError(f"letter {token} outside alphabet of {self!r}")
            return token
        name = str(token)
        exp = 1
        if "^" in name:
            name, _, e = name.partition("^")
            exp = int(e)
            if exp not in (1, -1):
                raise AlphabetError(f"token {token!r}: only ^1/^-1 allowed per token")
        g = self._name_to_gen.get(name)
        if g is None:
            raise AlphabetError(f"unknown generator {token!r} for {self!r}")
        return g * exp

    # -- normal forms and arithmetic ----------------------------------------

    def element(self, key: Key) -> Element:
        return self.identity if not key else Element(self, key)

    def from_syllables(self, syllables: Iterable[Syllable]) -> Element:
        out: list[Syllable] = []
        for factor, vec in syllables:
            if factor < 0 or factor >= len(self.factor_ranks):
                raise AlphabetError(f"factor {factor} out of range")
            if len(vec) != self.factor_ranks[factor]:
                raise AlphabetError(f"syllable vector {vec} has wrong rank for factor {factor}")
            _merge_push(out, (factor, tuple(int(v) for v in vec)))
        return self.element(tuple(out))

    def normalize(self, word: Iterable) -> Element:
        """Normal form of a word given as generator tokens (names or signed ids).

        Idempotent: feeding back ``element.word`` returns the same element.
        """
        out: list[Syllable] = []
        for token in word:
            _merge_push(out, self.letter_syllable(self._parse_token(token)))
        return self.element(tuple(out))

    def parse(self, text: str) -> Element:
        """Parse a whitespace-separated word, tokens like ``a1``, ``b2^-1``, ``a^3``."""
        tokens: list[int] = []
        for raw in text.split():
            name, _, e = raw.partition("^")
            exp = int(e) if e else 1
            g = self._name_to_gen.get(name)
            if g is None:
                raise AlphabetError(f"unknown generator {name!r} for {self!r}")
            tokens.extend([g if exp > 0 else -g] * abs(exp))
        return self.normalize(tokens)

    def _check(self, x: Element) -> None:
        if x.model is not self:
            raise ModelMismatchError("operands belong to different group models")

    def multiply(self, x: Element, y: Element) -> Element:
        self._check(x)
        self._check(y)
        if not x.key:
            return y
        if not y.key:
            return x
        out = list(x.key)
        for syl in y.key:
            _merge_push(out, syl)
        return self.element(tuple(out))

    def inverse(self, x: Element) -> Element:
        self._check(x)
        return self.element(
            tuple((f, tuple(-e for e in vec)) for f, vec in reversed(x.key))
        )

    def power(self, x: Element, n: int) -> Element:
        """x**n via cyclic reduction; O(1) syllable work for conjugated-syllable cores."""
        self._check(x)
        if n == 0 or not x.key:
            return self.identity
        if n < 0:
            return self.power(self.inverse(x), -n)
        head, core = self.cyclic_reduce(x)
        if len(core.key) == 1:
            f, vec = core.key[0]
            mid = self.element(((f, tuple(n * e for e in vec)),))
        else:
            # cyclically reduced: concatenation of copies never cancels
            mid = self.element(core.key * n)
        return self.multiply(self.multiply(head, mid), self.inverse(head))

    def conjugate(self, g: Element, x: Element) -> Element:
        """g * x * g^-1."""
        return self.multiply(self.multiply(g, x), self.inverse(g))

    def word_length(self, x: Element) -> int:
        self._check(x)
        return x.length

    def cyclic_reduce(self, x: Element) -> tuple[Element, Element]:
        """Return (u, core) with x = u * core * u^-1 and core cyclically reduced.

        The core is cyclically reduced when its first and last syllables lie in
        distinct factors (or it has at most one syllable).
        """
        self._check(x)
        key = list(x.key)
        head: list[Syllable] = []
        while len(key) >= 2 and key[0][0] == key[-1][0]:
            f, first = key[0][0], key[0][1]
            last = key[-1][1]
            merged = tuple(a + b for a, b in zip(last, first))
            head.append((f, first))
            key = key[1:-1]
            if any(merged):
                if key:
                    key.append((f, merged))
                else:
                    key = [(f, merged)]
                    break
        return self.element(tuple(head)), self.element(tuple(key))

    # -- metric -------------------------------------------------------------

    def translate(self, x: Element, letter: int, count: int) -> Element:
        """x multiplied by a generator power, in O(1) syllable work."""
        if count == 0:
            return x
        out = list(x.key)
        _merge_push(out, self.letter_syllable(letter, count))
        return self.element(tuple(out))

    def dist(self, x: Element, y: Element) -> int:
        """Word metric d(x, y) = |x^-1 y|, computed without building x^-1 y."""
        self._check(x)
        self._check(y)
        a, b = x.key, y.key
        i = 0
        m = min(len(a), len(b))
        while i < m and a[i] == b[i]:
            i += 1
        rest_a = sum(sum(abs(e) for e in vec) for _, vec in a[i + 1:])
        rest_b = sum(sum(abs(e) for e in vec) for _, vec in b[i + 1:])
        if i < len(a) and i < len(b) and a[i][0] == b[i][0]:
            seam = sum(abs(p - q) for p, q in zip(a[i][1], b[i][1]))
            return rest_a + seam + rest_b
        seam_a = sum(abs(e) for e in a[i][1]) if i < len(a) else 0
        seam_b = sum(abs(e) for e in b[i][1]) if i < len(b) else 0
        return rest_a + seam_a + rest_b + seam_b

    def letters_of(self, x: Element) -> tuple[int, ...]:
        """Signed letters spelling x, lowest generator first inside each syllable."""
        return tuple(letter for letter, count in self.geodesic_runs(x) for _ in range(count))

    def geodesic_runs(self, x: Element) -> tuple[tuple[int, int], ...]:
        """Run-length spelling of x: ``(letter, count)`` pairs forming a geodesic.

        Within each syllable, coordinates are spent in generator order (the
        documented lowest-generator-first tie-break).
        """
        self._check(x)
        runs: list[tuple[int, int]] = []
        for f, vec in x.key:
            base = self._factor_offset[f]
            for c, e in enumerate(vec):
                if e:
                    letter = base + c + 1
                    runs.append((letter if e > 0 else -letter, abs(e)))
        return tuple(runs)

    def geodesic_runs_between(self, u: Element, v: Element) -> tuple[tuple[int, int], ...]:
        """Runs of a geodesic from u to v whose length profile never exceeds
        max(|u|, |v|).

        Each syllable of u^-1 v that shares a factor with the current
        position's trailing syllable spends its norm-decreasing coordinate
        moves first (cancellation-first), the rest in generator order; the
        profile then falls, passes one mixed seam, and rises, so the path
        stays inside any ball containing both endpoints.
        """
        z = self.multiply(self.inverse(u), v)
        runs: list[tuple[int, int]] = []
        cur = u
        for f, w in z.key:
            base = self._factor_offset[f]
            c_vec = cur.key[-1][1] if cur.key and cur.key[-1][0] == f else (0,) * len(w)
            decreasing: list[tuple[int, int]] = []
            increasing: list[tuple[int, int]] = []
            for i, (ci, wi) in enumerate(zip(c_vec, w)):
                if not wi:
                    continue
                letter = base + i + 1
                signed = letter if wi > 0 else -letter
                if ci * wi < 0:
                    toward_zero = min(abs(ci), abs(wi))
                    decreasing.append((signed, toward_zero))
                    if abs(wi) > toward_zero:
                        increasing.append((signed, abs(wi) - toward_zero))
                else:
                    increasing.append((signed, abs(wi)))
            runs.extend(decreasing)
            runs.extend(increasing)
            cur = self.multiply(cur, self.element(((f, w),)))
        return tuple(runs)

    def format_element(self, x: Element) -> str:
        if not x.key:
            return "1"
        parts = []
        for f, vec in x.key:
            base = self._factor_offset[f]
            for c, e in enumerate(vec):
                if e:
                    name = self.generator_names[base + c]
                    parts.append(name if e == 1 else f"{name}^{e}")
        return " ".join(parts)

    # -- cosets of factor subgroups ------------------------------------------

    def coset(self, g: Element, factor: int) -> "Coset":
        return Coset.of(self, g, factor)

    def is_peripheral(self, factor: int) -> bool:
        return factor in self.peripheral_factors


class Coset:
    """A left coset g*P of a factor subgroup P = Z^{rank} of a free product.

    The representative is canonical (its normal form does not end with a
    syllable of the coset's factor), so equality of cosets is equality of
    representatives.  Nearest-point projection onto a factor coset is a
    single gate vertex in these models, which makes ``gate`` exact.
    """

    __slots__ = ("model", "rep", "factor")

    def __init__(self, model: GroupModel, rep: Element, factor: int):
        self.model = model
        self.rep = rep
        self.factor = factor

    @classmethod
    def of(cls, model: GroupModel, g: Element, factor: int) -> "Coset":
        if factor < 0 or factor >= len(model.factor_ranks):
            raise AlphabetError(f"factor {factor} out of range")
        key = g.key
        if key and key[-1][0] == factor:
            key = key[:-1]
        return cls(model, model.element(key), factor)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Coset)
            and self.model is other.model
            and self.factor == other.factor
            and self.rep == other.rep
        )

    def __hash__(self) -> int:
        return hash((self.factor, self.rep))

    def __repr__(self) -> str:
        head = self.model.format_element(self.rep)
        return f"Coset({head} * P{self.factor})"

    def sort_key(self):
        return (self.factor, self.rep.length, self.rep.key)

    def translated(self, g: Element) -> "Coset":
        return Coset.of(self.model, self.model.multiply(g, self.rep), self.factor)

    def contains(self, x: Element) -> bool:
        u = self.model.multiply(self.model.inverse(self.rep), x)
        return not u.key or (len(u.key) == 1 and u.key[0][0] == self.factor)

    def distance_to(self, x: Element) -> int:
        u = self.model.multiply(self.model.inverse(self.rep), x)
        if not u.key:
            return 0
        first_f, first_vec = u.key[0]
        if first_f == self.factor:
            return u.length - sum(abs(e) for e in first_vec)
        return u.length

    def gate(self, x: Element) -> Element:
        """The unique nearest point of the coset to x."""
        u = self.model.multiply(self.model.inverse(self.rep), x)
        if u.key and u.key[0][0] == self.factor:
            return self.model.multiply(self.rep, self.model.element((u.key[0],)))
        return self.rep

    def near_points(self, x: Element, delta: int) -> tuple[Element, ...]:
        """All coset points within delta of realizing d(x, coset)."""
        g = self.gate(x)
        if delta <= 0:
            return (g,)
        rank = self.model.factor_ranks[self.factor]
        base = self.model._factor_offset[self.factor]
        pts = []
        for vec in l1_ball_vectors(rank, delta):
            syl = (self.factor, vec)
            pts.append(self.model.multiply(g, self.model.from_syllables([syl])))
        return tuple(sorted(set(pts)))

    def enumerate_within(self, radius: int) -> list[Element]:
        """All coset elements of word length <= radius, in deterministic order."""
        budget = radius - self.rep.length
        if budget < 0:
            return []
        rank = self.model.factor_ranks[self.factor]
        out = [
            self.model.multiply(self.rep, self.model.from_syllables([(self.factor, vec)]))
            for vec in l1_ball_vectors(rank, budget)
        ]
        return sorted(out)


def l1_ball_vectors(rank: int, radius: int) -> list[tuple[int, ...]]:
    """Integer vectors of l1 norm <= radius, deterministic order (includes 0)."""
    if radius < 0:
        return []
    vecs: list[tuple[int, ...]] = []

    def rec(prefix: tuple[int, ...], left: int, coords: int):
        if coords == 0:
            vecs.append(prefix)
            return
        for v in range(-left, left + 1):
            rec(prefix + (v,), left - abs(v), coords - 1)

    rec((), radius, rank)
    return sorted(vecs)


@dataclass(frozen=True)
class SubgroupSpec:
    """A finitely generated subgroup given by generators and an enumeration depth.

    Enumeration is depth-bounded and therefore an under-approximation of the
    subgroup's intersection with a ball; ``enumerate_in_ball`` reports whether
    one extra depth level still contributes in-ball elements so that callers
    can propagate a completeness warning.
    """

    generators: tuple[Element, ...]
    enumeration_depth: int

    def __post_init__(self):
        if not self.generators:
            raise EmptyInputError("subgroup needs at least one generator")

    @property
    def model(self) -> GroupModel:
        return self.generators[0].model

    def _layers(self, depth: int) -> list[set[Element]]:
        """BFS layers of the subgroup Cayley graph, layer i = new elements at depth i."""
        model = self.model
        gens = list(self.generators) + [model.inverse(g) for g in self.generators]
        seen = {model.identity}
        layers = [{model.identity}]
        frontier = [model.identity]
        for _ in range(depth):
            new = []
            for x in frontier:
                for g in gens:
                    y = model.multiply(x, g)
                    if y not in seen:
                        seen.add(y)
                        new.append(y)
            layers.append(set(new))
            frontier = new
            if not frontier:
                break
        return layers

    def enumerate_all(self, depth: int | None = None) -> set[Element]:
        """All elements of subgroup-word length <= depth (no ball restriction)."""
        depth = self.enumeration_depth if depth is None else depth
        out: set[Element] = set()
        for layer in self._layers(depth):
            out |= layer
        return out

    def enumerate_in_ball(self, radius: int) -> tuple[list[Element], bool]:
        """(sorted in-ball elements, stabilized flag).

        ``stabilized`` is False when depth+1 still adds elements of word
        length <= radius, i.e. the enumeration is known incomplete.
        """
        layers = self._layers(self.enumeration_depth + 1)
        inside: list[Element] = []
        for layer in layers[: self.enumeration_depth + 1]:
            inside.extend(x for x in layer if x.length <= radius)
        extra = layers[self.enumeration_depth + 1] if len(layers) > self.enumeration_depth + 1 else set()
        grew = any(x.length <= radius for x in extra)
        return sorted(inside), not grew


def lattice_rank(vectors: Iterable[Sequence[int]]) -> int:
    """Rank of the sublattice of Z^k spanned by the given integer vectors."""
    rows = [list(v) for v in vectors if any(v)]
    if not rows:
        return 0
    cols = len(rows[0])
    rank = 0
    for c in range(cols):
        pivot = None
        for r in range(rank, len(rows)):
            if rows[r][c]:
                pivot = r
                break
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for r in range(len(rows)):
            if r != rank and rows[r][c]:
                # integer elimination: scale both rows to clear the column
                a, b = rows[rank][c], rows[r][c]
                rows[r] = [b_i * a - a_i * b for a_i, b_i in zip(rows[rank], rows[r])]
        rank += 1
        if rank == len(rows):
            break
    return rank


def ball_count_free(rank: int, radius: int) -> int:
    """Closed-form ball size of a free group: 1 + 2k((2k-1)^r - 1)/(2k - 2)."""
    if radius == 0:
        return 1
    k = rank
    if k == 1:
        return 2 * radius + 1
    q = 2 * k - 1
    return 1 + 2 * k * (q**radius - 1) // (q - 1)


def ball_count_abelian(rank: int, radius: int) -> int:
    """Number of integer points with l1 norm <= radius in Z^rank."""
    total = 0
    for j in range(min(rank, radius) + 1):
        total += (
            _binom(rank, j) * 2**j * _binom(radius, j)
        )
    return total


def _binom(n: int, k: int) -> int:
    if k < 0 or k > n:
        return 0
    out = 1
    for i in range(k):
        out = out * (n - i) // (i + 1)
    return out
