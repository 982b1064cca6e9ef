"""Combination experiments: amalgams over a common subgroup and HNN extensions.

Words in the combined group are evaluated two ways and the results compared:

* formally, in an abstract model of the expected combined group (a free
  product for the amalgam fixtures, whose intersection subgroup is trivial;
  Britton canonical forms for the HNN fixture), and
* concretely, by evaluating the word in the ambient group via a homomorphism
  and comparing normal forms.

Injectivity of the combination map is exactly the statement that the two
evaluations separate the same pairs; each experiment reports the collision
table (expected empty).  Alongside injectivity, every enumerated word gets a
normal path (amalgam) or truncation path (HNN), and those paths are checked
against the admissibility conditions and the derived quasigeodesic constant.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .admissible import (
    AdmissibleDecomposition,
    AdmissibleReport,
    ConstantsBundle,
    Segment,
    verify_admissible,
)
from .coarse import ContractingSystem, CosetFamily
from .errors import (
    FixtureError,
    ModelMismatchError,
    PinchError,
    PreconditionError,
    StructuralError,
)
from .graph import MetricGraph, PathSeq, VertexSubset, is_quasigeodesic
from .models import Coset, Element, GroupModel, SubgroupSpec


# -- homomorphisms -------------------------------------------------------------


class GroupHom:
    """A homomorphism between free products of abelian groups, given on generators.

    Well-definedness requires images of same-factor generators to commute;
    this is checked at construction.
    """

    def __init__(self, source: GroupModel, target: GroupModel, images: dict[int, Element]):
        self.source = source
        self.target = target
        self.images = dict(images)
        for g in range(1, source.n_generators + 1):
            if g not in self.images:
                raise PreconditionError(f"no image for generator {g}")
            if self.images[g].model is not target:
                raise ModelMismatchError("hom image not in target model")
        for g in range(1, source.n_generators + 1):
            for h in range(g + 1, source.n_generators + 1):
                if source.factor_of_letter(g) != source.factor_of_letter(h):
                    continue
                gh = target.multiply(self.images[g], self.images[h])
                hg = target.multiply(self.images[h], self.images[g])
                if gh != hg:
                    raise PreconditionError(
                        "images of commuting generators do not commute"
                    )

    def __call__(self, x: Element) -> Element:
        if x.model is not self.source:
            raise ModelMismatchError("hom applied to element of a different model")
        out = self.target.identity
        for f, vec in x.key:
            base = self.source._factor_offset[f]
            for c, e in enumerate(vec):
                if e:
                    out = self.target.multiply(
                        out, self.target.power(self.images[base + c + 1], e)
                    )
        return out


# -- minimal double coset representatives ----------------------------------------


@dataclass
class MinRepResult:
    rep: Element
    certified: bool
    checked: int


def min_double_coset_rep(h: Element, C: SubgroupSpec | list[Element],
                         stabilized: bool = True) -> MinRepResult:
    """Shortest element of C h C over the enumerated C, lexicographic tie-break.

    Minimality is certified within the enumeration bound only; an
    unstabilized C enumeration flags the result instead of failing.
    """
    model = h.model
    if isinstance(C, SubgroupSpec):
        cs = sorted(C.enumerate_all())
        certified = True
    else:
        cs = sorted(set(C))
        certified = stabilized
    if not cs:
        cs = [model.identity]
    best = h
    checked = 0
    for c1 in cs:
        left = model.multiply(c1, h)
        for c2 in cs:
            cand = model.multiply(left, c2)
            checked += 1
            if (cand.length, cand.key) < (best.length, best.key):
                best = cand
    return MinRepResult(best, certified, checked)


# -- hyperbolic / parabolic classification ---------------------------------------


@dataclass
class HyperbolicityReport:
    kind: str                   # "trivial" | "parabolic" | "hyperbolic"
    core: Element
    conjugator: Element
    peripheral_factor: int | None = None

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "core": str(self.core),
            "conjugator": str(self.conjugator),
            "peripheral_factor": self.peripheral_factor,
        }


def classify_hyperbolic(g: Element) -> HyperbolicityReport:
    """Free-product conjugacy criterion: cyclically reduce the syllable form;
    the element is parabolic iff the core is a single syllable of a
    peripheral factor (witnessed by the conjugator).  Models without
    peripheral factors have no parabolics."""
    model = g.model
    head, core = model.cyclic_reduce(g)
    if not core.key:
        return HyperbolicityReport("trivial", core, head)
    if len(core.key) == 1 and model.is_peripheral(core.key[0][0]):
        return HyperbolicityReport("parabolic", core, head, core.key[0][0])
    return HyperbolicityReport("hyperbolic", core, head)


# -- relative geodesics and lifts -------------------------------------------------


@dataclass
class RelComponent:
    factor: int
    coset: Coset
    start: Element
    syllable: Element


@dataclass
class RelGeodesicReport:
    vertices: list[Element]
    components: list[RelComponent]
    isolated: list[bool]

    def describe(self) -> dict:
        return {
            "vertices": [str(v) for v in self.vertices],
            "components": [
                {"factor": c.factor, "coset_rep": str(c.coset.rep)}
                for c in self.components
            ],
            "isolated": self.isolated,
        }


def relative_geodesic_and_components(g: Element) -> RelGeodesicReport:
    """The relative path of g (one relative edge per syllable), its
    peripheral components, and their isolation flags.

    Two components are connected iff they share a coset; for syllable
    normal forms all components of the same path are isolated, which is
    exactly what the report lets callers verify.
    """
    model = g.model
    vertices = [model.identity]
    components: list[RelComponent] = []
    cur = model.identity
    for f, vec in g.key:
        syl = model.element(((f, vec),))
        components.append(
            RelComponent(f, Coset.of(model, cur, f), cur, syl)
        )
        cur = model.multiply(cur, syl)
        vertices.append(cur)
    cosets = [c.coset for c in components]
    isolated = []
    for i, c in enumerate(cosets):
        isolated.append(all(c != d for j, d in enumerate(cosets) if j != i))
    return RelGeodesicReport(vertices, components, isolated)


def lift_path(graph: MetricGraph, g: Element, base: Element | None = None) -> PathSeq:
    """Lift of the relative path of g: each peripheral component replaced by
    an l1-geodesic in its factor.  For these models the lift of a relative
    geodesic is a genuine geodesic, which callers assert via its length."""
    base = graph.model.identity if base is None else base
    return PathSeq(graph, base, graph.model.geodesic_runs(g))


# -- amalgam fixtures --------------------------------------------------------------


@dataclass
class ScaledLattice:
    """The subgroup N * Z^rank inside one abelian factor."""

    model: GroupModel
    factor: int
    scale: int

    @property
    def rank(self) -> int:
        return self.model.factor_ranks[self.factor]

    def generators(self) -> list[Element]:
        base = self.model._factor_offset[self.factor]
        return [
            self.model.power(self.model.gen(base + c + 1), self.scale)
            for c in range(self.rank)
        ]

    def contains(self, x: Element) -> bool:
        if not x.key:
            return True
        if len(x.key) != 1 or x.key[0][0] != self.factor:
            return False
        return all(e % self.scale == 0 for e in x.key[0][1])

    def min_nontrivial_length(self) -> int:
        return self.scale

    def subgroup_spec(self, depth: int = 2) -> SubgroupSpec:
        return SubgroupSpec(tuple(self.generators()), depth)


@dataclass
class AmalgamFixture:
    """Two scaled lattices in distinct factors of a free product, glued over
    their (trivial) intersection, with the abstract free product as oracle."""

    model: GroupModel
    H_part: ScaledLattice
    K_part: ScaledLattice
    abstract: GroupModel = field(init=False)
    hom: GroupHom = field(init=False)

    def __post_init__(self):
        if self.H_part.factor == self.K_part.factor:
            raise FixtureError("amalgam fixture needs parts in distinct factors")
        ranks = [self.H_part.rank, self.K_part.rank]
        self.abstract = GroupModel.free_product(ranks, peripheral_factors=())
        images: dict[int, Element] = {}
        gens = self.H_part.generators() + self.K_part.generators()
        for i, img in enumerate(gens):
            images[i + 1] = img
        self.hom = GroupHom(self.abstract, self.model, images)

    def intersection_enumeration(self) -> set[Element]:
        h = set(self.H_part.subgroup_spec().enumerate_all())
        k = set(self.K_part.subgroup_spec().enumerate_all())
        return h & k

    def describe(self) -> dict:
        return {
            "H": {"factor": self.H_part.factor, "scale": self.H_part.scale},
            "K": {"factor": self.K_part.factor, "scale": self.K_part.scale},
        }


def enumerate_alternating_words(
    abstract: GroupModel, syllable_bound: int, coeffs: Iterable[int]
) -> Iterator[Element]:
    """All reduced words of the abstract free product with up to the given
    number of syllables, coefficients drawn from ``coeffs`` (plus zero for
    higher-rank factors), in deterministic order."""
    coeffs = sorted(set(int(c) for c in coeffs) - {0})
    per_factor: list[list[tuple[int, ...]]] = []
    for f, rank in enumerate(abstract.factor_ranks):
        vecs = [
            v
            for v in itertools.product(sorted(set(coeffs) | {0}), repeat=rank)
            if any(v)
        ]
        per_factor.append(sorted(vecs))

    def rec(prefix: list, factor: int, remaining: int) -> Iterator[Element]:
        for vec in per_factor[factor]:
            word = prefix + [(factor, vec)]
            yield abstract.element(tuple(word))
            if remaining > 1:
                for nxt in range(len(abstract.factor_ranks)):
                    if nxt != factor:
                        yield from rec(word, nxt, remaining - 1)

    for start in range(len(abstract.factor_ranks)):
        yield from rec([], start, syllable_bound)


def build_normal_path_amalgam(
    fixture: AmalgamFixture,
    graph: MetricGraph,
    word: Element,
    lam: int = 1,
    c: int = 0,
) -> AdmissibleDecomposition:
    """The normal path of an amalgam word: geodesic pieces labeled by the
    syllables, with the K-factor pieces targeted at their left cosets.

    Words starting or ending with an H-syllable get zero-length first/last
    contracting pieces (the identity lies in the base coset).
    """
    model = fixture.model
    k_factor = fixture.K_part.factor
    cur = model.identity
    segments: list[Segment] = []

    def k_target(at: Element) -> VertexSubset:
        return VertexSubset.from_coset(Coset.of(model, at, k_factor), "K-coset")

    g_syllables = [model.element(((f, vec),)) for f, vec in fixture.hom(word).key]
    first_is_k = bool(g_syllables) and g_syllables[0].key[0][0] == k_factor
    if not first_is_k:
        segments.append(Segment(PathSeq(graph, cur, ()), k_target(cur)))
    for syl in g_syllables:
        piece = PathSeq(graph, cur, model.geodesic_runs(syl))
        nxt = model.multiply(cur, syl)
        if syl.key[0][0] == k_factor:
            segments.append(Segment(piece, k_target(cur)))
        else:
            segments.append(Segment(piece))
        cur = nxt
    if segments and not segments[-1].is_contracting:
        segments.append(Segment(PathSeq(graph, cur, ()), k_target(cur)))
    return AdmissibleDecomposition(segments, lam, c)


@dataclass
class AmalgamReport:
    words: int
    collisions: list[dict]
    trivial_evaluations: list[str]
    qg_failures: list[dict]
    admissible_failures: list[dict]
    parabolic_misclassifications: list[dict]
    fitted_excess: list[dict]
    preconditions: dict

    @property
    def ok(self) -> bool:
        return not (
            self.collisions
            or self.trivial_evaluations
            or self.qg_failures
            or self.admissible_failures
            or self.parabolic_misclassifications
            or self.fitted_excess
        )

    def describe(self) -> dict:
        return {
            "ok": self.ok,
            "words": self.words,
            "collisions": self.collisions,
            "trivial_evaluations": self.trivial_evaluations,
            "qg_failures": self.qg_failures,
            "admissible_failures": self.admissible_failures,
            "parabolic_misclassifications": self.parabolic_misclassifications,
            "fitted_excess": self.fitted_excess,
            "preconditions": self.preconditions,
        }


def check_amalgam_injectivity(
    fixture: AmalgamFixture,
    graph: MetricGraph,
    system: ContractingSystem,
    bundle: ConstantsBundle,
    syllable_bound: int,
    coeffs: Iterable[int] = (-2, -1, 1, 2),
    check_paths: bool = True,
) -> AmalgamReport:
    """Enumerate reduced words of the abstract amalgam, evaluate them in the
    ambient group, and verify zero collisions plus the path-level claims.

    Preconditions checked first: the two parts intersect trivially and all
    their nontrivial elements are longer than the bundle's D (the fixture
    scale must be at least D + 1).
    """
    model = fixture.model
    inter = fixture.intersection_enumeration()
    offenders = sorted(x for x in inter if x.key)
    min_len = min(fixture.H_part.min_nontrivial_length(), fixture.K_part.min_nontrivial_length())
    pre = {
        "intersection_trivial": not offenders,
        "min_generator_length": min_len,
        "required_exceeds": bundle.D,
    }
    if offenders:
        raise PreconditionError(
            f"parts intersect nontrivially: {[str(x) for x in offenders[:4]]}"
        )
    if min_len <= bundle.D:
        raise PreconditionError(
            f"short elements of length {min_len} <= D = {bundle.D}; "
            f"scale the fixture to at least D + 1"
        )

    seen: dict = {}
    collisions: list[dict] = []
    trivial: list[str] = []
    qg_failures: list[dict] = []
    adm_failures: list[dict] = []
    parab_bad: list[dict] = []
    fitted_excess: list[dict] = []
    count = 0
    admissible_level = min_len - 1
    for word in enumerate_alternating_words(fixture.abstract, syllable_bound, coeffs):
        count += 1
        g = fixture.hom(word)
        if not g.key:
            trivial.append(str(word))
            continue
        prev = seen.get(g.key)
        if prev is not None:
            collisions.append({"word": str(word), "collides_with": prev})
            continue
        seen[g.key] = str(word)
        if not check_paths:
            continue
        decomp = build_normal_path_amalgam(fixture, graph, word, lam=bundle.lam, c=bundle.c)
        path = decomp.concatenated()
        qg = is_quasigeodesic(path, bundle.Lambda, 0)
        if not qg.ok:
            qg_failures.append({"word": str(word), "witness": qg.witness})
        report = verify_admissible(decomp, admissible_level, system)
        if not report.ok:
            adm_failures.append(
                {"word": str(word), "violation": report.first_violation().condition}
            )
        cls = classify_hyperbolic(g)
        _, core = model.cyclic_reduce(g)
        if len(core.key) >= 2 and cls.kind != "hyperbolic":
            parab_bad.append({"word": str(word), "kind": cls.kind})
    return AmalgamReport(
        words=count,
        collisions=collisions,
        trivial_evaluations=trivial,
        qg_failures=qg_failures,
        admissible_failures=adm_failures,
        parabolic_misclassifications=parab_bad,
        fitted_excess=fitted_excess,
        preconditions=pre,
    )


# -- HNN fixture --------------------------------------------------------------------


class HnnFixture:
    """The stable-letter fixture over Z^2 * Z^2.

    H is generated by a1, b1 and z = b2 a1 b2^-1; P is the first factor;
    f = b2 conjugates Q = <a1> = P ∩ H onto Q' = <z> <= H; c = a2^N commutes
    with Q, so t = f c satisfies Q^t = Q'.  H is abstractly the free product
    of three infinite cyclic groups, realized here as a three-factor model
    with generators x, y, z mapping to a1, b1, b2 a1 b2^-1.

    Membership of a normal form in H is decided by a scan over syllables
    that tracks the b2-conjugation level (0 outside z-blocks, 1 inside) and
    reconstructs the abstract word; the scan doubles as the inverse of the
    evaluation homomorphism.
    """

    def __init__(self, N: int, model: GroupModel | None = None):
        self.model = model if model is not None else GroupModel.free_product([2, 2])
        if self.model.factor_ranks != (2, 2):
            raise FixtureError("HNN fixture needs the rank-(2,2) free product")
        if N < 2:
            raise FixtureError("scale N must be at least 2")
        self.N = N
        m = self.model
        self.P_factor = 0
        self.a1 = m.gen("a1")
        self.a2 = m.gen("a2")
        self.b1 = m.gen("b1")
        self.b2 = m.gen("b2")
        self.z = m.conjugate(self.b2, self.a1)
        self.f = self.b2
        self.c = m.power(self.a2, N)
        self.t = m.multiply(self.f, self.c)
        self.abstract_H = GroupModel.free_product([1, 1, 1], peripheral_factors=(),
                                                  names=("x", "y", "z"))
        self.hom = GroupHom(
            self.abstract_H, m, {1: self.a1, 2: self.b1, 3: self.z}
        )

    # abstract H helpers ----------------------------------------------------

    def x_power(self, k: int) -> Element:
        return self.abstract_H.power(self.abstract_H.gen("x"), k)

    def z_power(self, k: int) -> Element:
        return self.abstract_H.power(self.abstract_H.gen("z"), k)

    def in_Q_abstract(self, h: Element) -> bool:
        return not h.key or (len(h.key) == 1 and h.key[0][0] == 0)

    def in_Qp_abstract(self, h: Element) -> bool:
        return not h.key or (len(h.key) == 1 and h.key[0][0] == 2)

    def q_exponent(self, h: Element) -> int:
        return 0 if not h.key else h.key[0][1][0]

    # membership ------------------------------------------------------------

    def to_abstract(self, g: Element) -> Element | None:
        """Inverse of the evaluation hom on its image; None when g is not in H."""
        tokens: list[tuple[int, tuple[int, ...]]] = []
        level = 0
        for f, vec in g.key:
            if f == self.P_factor:
                p, q = vec
                if q != 0:
                    return None
                tokens.append((2 if level else 0, (p,)))
            else:
                r, s = vec
                if level == 0:
                    if s == 0:
                        tokens.append((1, (r,)))
                    elif s == 1:
                        if r:
                            tokens.append((1, (r,)))
                        level = 1
                    else:
                        return None
                else:
                    if s == 0:
                        tokens.append((1, (r,)))
                    elif s == -1:
                        level = 0
                        if r:
                            tokens.append((1, (r,)))
                    else:
                        return None
        if level != 0:
            return None
        return self.abstract_H.from_syllables(tokens)

    def contains(self, g: Element) -> bool:
        return self.to_abstract(g) is not None

    def H_spec(self, depth: int = 4) -> SubgroupSpec:
        return SubgroupSpec((self.a1, self.b1, self.z), depth)

    # hypotheses -------------------------------------------------------------

    def validate(self, D_input: int) -> dict:
        """Check the fixture hypotheses; raises FixtureError naming any failure."""
        m = self.model
        if m.multiply(m.multiply(self.c, self.a1), m.inverse(self.c)) != self.a1:
            raise FixtureError("c does not centralize Q")
        if self.to_abstract(self.z) != self.abstract_H.gen("z"):
            raise FixtureError("Q^f is not the designated subgroup of H")
        # Q and Q' must be non-conjugate in H: they are distinct factors of
        # the abstract free product, whose factor conjugacy classes are rigid
        hx, cx = self.abstract_H.cyclic_reduce(self.abstract_H.gen("x"))
        hz, cz = self.abstract_H.cyclic_reduce(self.abstract_H.gen("z"))
        if cx.key[0][0] == cz.key[0][0]:
            raise FixtureError("Q and Q' are conjugate in H")
        min_cQ = self.c.length  # |a2^N a1^k| = N + |k|, minimized at k = 0
        if min_cQ <= D_input:
            raise FixtureError(
                f"elements of cQ have length >= {min_cQ} <= D = {D_input}"
            )
        for k in (-2, -1, 1, 2):
            g = m.multiply(self.c, m.power(self.a1, k))
            if g.length <= D_input:
                raise FixtureError("sampled element of cQ too short")
        return {
            "N": self.N,
            "min_cQ_length": min_cQ,
            "D_input": D_input,
            "t": str(self.t),
        }

    def describe(self) -> dict:
        return {
            "N": self.N,
            "f": str(self.f),
            "c": str(self.c),
            "t": str(self.t),
            "H_generators": [str(self.a1), str(self.b1), str(self.z)],
        }


@dataclass(frozen=True)
class HnnWord:
    """h_1 t^{e_1} h_2 ... t^{e_n} h_{n+1} with h_i in the abstract H.

    ``head`` is h_1; ``letters`` pairs each stable-letter sign with the
    following h.  Words are valid only when Britton-reduced: no pinch
    t h t^-1 with h in Q, no pinch t^-1 h t with h in Q'.
    """

    head: Element
    letters: tuple[tuple[int, Element], ...]

    @property
    def t_count(self) -> int:
        return len(self.letters)

    def validate_britton(self, fixture: HnnFixture) -> None:
        for i in range(len(self.letters) - 1):
            eps, h = self.letters[i]
            eps2, _ = self.letters[i + 1]
            if eps == 1 and eps2 == -1 and fixture.in_Q_abstract(h):
                raise PinchError(f"pinch t h t^-1 with h in Q at letter {i}", index=i)
            if eps == -1 and eps2 == 1 and fixture.in_Qp_abstract(h):
                raise PinchError(f"pinch t^-1 h t with h in Q' at letter {i}", index=i)

    def is_britton_reduced(self, fixture: HnnFixture) -> bool:
        try:
            self.validate_britton(fixture)
            return True
        except PinchError:
            return False

    def canonical(self, fixture: HnnFixture) -> "HnnWord":
        """Canonical form: associated-subgroup powers pushed left through the
        stable letters (t x^k = z^k t and t^-1 z^k = x^k t^-1), leaving no h
        with a leading associated power after its stable letter.

        On Britton-reduced words this is the normal form with respect to the
        no-leading-power coset transversals, so equal group elements have
        equal canonical forms.
        """
        H = fixture.abstract_H
        head = self.head
        letters = [list(l) for l in self.letters]
        for i, (eps, h) in enumerate(letters):
            key = h.key
            if key and ((eps == 1 and key[0][0] == 0) or (eps == -1 and key[0][0] == 2)):
                k = key[0][1][0]
                rem = H.element(key[1:])
                moved = fixture.z_power(k) if eps == 1 else fixture.x_power(k)
                if i == 0:
                    head = H.multiply(head, moved)
                else:
                    letters[i - 1][1] = H.multiply(letters[i - 1][1], moved)
                letters[i][1] = rem
        return HnnWord(head, tuple((e, h) for e, h in letters))

    def key(self, fixture: HnnFixture):
        can = self.canonical(fixture)
        return (can.head.key, tuple((e, h.key) for e, h in can.letters))

    def evaluate(self, fixture: HnnFixture) -> Element:
        m = fixture.model
        out = fixture.hom(self.head)
        for eps, h in self.letters:
            tt = fixture.t if eps == 1 else m.inverse(fixture.t)
            out = m.multiply(out, m.multiply(tt, fixture.hom(h)))
        return out

    def describe(self, fixture: HnnFixture) -> str:
        parts = [str(self.head)] if self.head.key else []
        for eps, h in self.letters:
            parts.append("t" if eps == 1 else "t^-1")
            if h.key:
                parts.append(str(h))
        return " ".join(parts) if parts else "1"


# -- HNN truncation paths -------------------------------------------------------


@dataclass
class _RelStep:
    """One block of the relative normal path: a peripheral jump or a short
    Cayley segment (the f-pieces)."""

    start: Element
    end: Element
    runs: tuple[tuple[int, int], ...]


@dataclass
class TruncationInfo:
    decomposition: AdmissibleDecomposition
    targets: list[Coset]
    consecutive_targets_distinct: bool
    piece_lengths: list[int]


def build_truncation_hnn(
    fixture: HnnFixture,
    graph: MetricGraph,
    word: HnnWord,
    lam: int = 1,
) -> TruncationInfo:
    """Build the truncation of the relative normal path of an HNN word.

    The normal path alternates relative geodesics labeled h_i with
    f-segments and c-edges; around the i-th stable letter the path crosses a
    peripheral coset g_iP.  Truncation picks the first entry point z_i (on
    q_i when it meets g_iP, else the start of the c-edge) and the last exit
    point w_i (on q_{i+1} when it meets g_iP, else the end of the c-edge),
    replaces the subpath between z_i and w_i by a geodesic targeted at g_iP,
    and lifts the relative segments in between.  The result is an
    admissible decomposition at additive constant (lam + 2) * |f|.
    """
    if word.t_count == 0:
        raise PreconditionError("truncation paths are defined for words using t")
    word.validate_britton(fixture)
    m = fixture.model
    c_param = (lam + 2) * fixture.f.length
    n = word.t_count

    # flat list of relative steps; boundary j is the vertex before flat[j]
    flat: list[_RelStep] = []
    q_ranges: list[tuple[int, int]] = []       # boundary index ranges per q-block
    p_bounds: list[tuple[int, int]] = []       # (start, end) boundary of each c-edge
    cosets: list[Coset] = []
    cur = m.identity

    def emit_h(h_img: Element) -> None:
        nonlocal cur
        start = len(flat)
        for f, vec in h_img.key:
            syl = m.element(((f, vec),))
            nxt = m.multiply(cur, syl)
            flat.append(_RelStep(cur, nxt, m.geodesic_runs(syl)))
            cur = nxt
        q_ranges.append((start, len(flat)))

    def emit_step(label: Element) -> None:
        nonlocal cur
        nxt = m.multiply(cur, label)
        flat.append(_RelStep(cur, nxt, m.geodesic_runs(label)))
        cur = nxt

    emit_h(fixture.hom(word.head))
    for eps, h in word.letters:
        if eps == 1:
            emit_step(fixture.f)
            p_start = len(flat)
            cosets.append(Coset.of(m, cur, fixture.P_factor))
            emit_step(fixture.c)
            p_bounds.append((p_start, len(flat)))
        else:
            p_start = len(flat)
            cosets.append(Coset.of(m, cur, fixture.P_factor))
            emit_step(m.inverse(fixture.c))
            p_bounds.append((p_start, len(flat)))
            emit_step(m.inverse(fixture.f))
        emit_h(fixture.hom(h))
    gamma_plus = cur

    boundary = [flat[0].start if flat else m.identity]
    for s in flat:
        boundary.append(s.end)

    def first_entry(q_index: int, coset: Coset) -> int | None:
        lo, hi = q_ranges[q_index]
        for b in range(lo, hi + 1):
            if coset.contains(boundary[b]):
                return b
        return None

    def last_exit(q_index: int, coset: Coset) -> int | None:
        lo, hi = q_ranges[q_index]
        hit = None
        for b in range(lo, hi + 1):
            if coset.contains(boundary[b]):
                hit = b
        return hit

    z_b: list[int] = []
    w_b: list[int] = []
    for i in range(n):
        b = first_entry(i, cosets[i])
        z_b.append(b if b is not None else p_bounds[i][0])
        b = last_exit(i + 1, cosets[i])
        w_b.append(b if b is not None else p_bounds[i][1])

    cuts = [0]
    for zb, wb in zip(z_b, w_b):
        cuts.extend([zb, wb])
    cuts.append(len(flat))
    if any(a > b for a, b in zip(cuts, cuts[1:])):
        raise StructuralError("truncation cut points are out of order")

    def lift_segment(b_from: int, b_to: int) -> PathSeq:
        # lift = maximal peripheral components replaced by geodesics; a
        # connector spans at most one same-factor seam (an h-tail against an
        # f-piece), so its lift spells the reduced label of the segment
        return PathSeq(
            graph,
            boundary[b_from],
            m.geodesic_runs_between(boundary[b_from], boundary[b_to]),
        )

    segments: list[Segment] = []
    prev = 0
    for i in range(n):
        segments.append(Segment(lift_segment(prev, z_b[i])))
        piece = graph.a_geodesic(boundary[z_b[i]], boundary[w_b[i]])
        segments.append(Segment(piece, VertexSubset.from_coset(cosets[i], "P-coset")))
        prev = w_b[i]
    segments.append(Segment(lift_segment(prev, len(flat))))

    decomp = AdmissibleDecomposition(segments, lam, c_param)
    if decomp.p_minus != m.identity or decomp.p_plus != gamma_plus:
        raise StructuralError("truncation endpoints do not match the word evaluation")
    distinct = all(a != b for a, b in zip(cosets, cosets[1:]))
    piece_lengths = [s.path.length for s in segments if s.is_contracting]
    return TruncationInfo(decomp, cosets, distinct, piece_lengths)


# -- HNN word enumeration and injectivity -----------------------------------------


def h_pool(fixture: HnnFixture, syllables: int, exponents=(-1, 1)) -> list[Element]:
    """Abstract H elements with exactly the given syllable count, exponents
    drawn from the given set; deterministic order."""
    H = fixture.abstract_H
    if syllables == 0:
        return [H.identity]
    exps = sorted(set(exponents) - {0})
    out: list[Element] = []

    def rec(prefix: tuple, last_factor: int, left: int):
        if left == 0:
            out.append(H.element(prefix))
            return
        for f in range(3):
            if f == last_factor:
                continue
            for e in exps:
                rec(prefix + ((f, (e,)),), f, left - 1)

    rec((), -1, syllables)
    return out


def enumerate_hnn_words(
    fixture: HnnFixture,
    t_letter_bound: int,
    h_syllable_budget: int,
    exponents=(-1, 1),
    include_h_only: bool = True,
) -> Iterator[HnnWord]:
    """All Britton-reduced words with at most the given number of stable
    letters and total h-syllable count within the budget.

    Deterministic order.  The budget is shared across all h-slots, which
    keeps the enumeration exhaustive-within-bounds yet finite.
    """
    pools = {s: h_pool(fixture, s, exponents) for s in range(h_syllable_budget + 1)}
    if include_h_only:
        for s in range(h_syllable_budget + 1):
            for h in pools[s]:
                if h.key or s == 0:
                    w = HnnWord(h, ())
                    yield w

    def compositions(total: int, slots: int) -> Iterator[tuple[int, ...]]:
        if slots == 1:
            for v in range(total + 1):
                yield (v,)
            return
        for v in range(total + 1):
            for rest in compositions(total - v, slots - 1):
                yield (v,) + rest

    for k in range(1, t_letter_bound + 1):
        for counts in compositions(h_syllable_budget, k + 1):
            slot_pools = [pools[c] for c in counts]
            for signs in itertools.product((1, -1), repeat=k):
                for combo in itertools.product(*slot_pools):
                    word = HnnWord(
                        combo[0],
                        tuple((signs[i], combo[i + 1]) for i in range(k)),
                    )
                    if word.is_britton_reduced(fixture):
                        yield word


@dataclass
class HnnReport:
    words: int
    oracle_classes: int
    collisions: list[dict]
    inconsistencies: list[dict]
    qg_failures: list[dict]
    admissible_failures: list[dict]
    target_failures: list[dict]
    parabolic_failures: list[dict]
    fixture_info: dict
    D_prime: int
    D_theorem: int

    @property
    def ok(self) -> bool:
        return not (
            self.collisions
            or self.inconsistencies
            or self.qg_failures
            or self.admissible_failures
            or self.target_failures
            or self.parabolic_failures
        )

    def describe(self) -> dict:
        return {
            "ok": self.ok,
            "words": self.words,
            "oracle_classes": self.oracle_classes,
            "collisions": self.collisions,
            "inconsistencies": self.inconsistencies,
            "qg_failures": self.qg_failures,
            "admissible_failures": self.admissible_failures,
            "target_failures": self.target_failures,
            "parabolic_failures": self.parabolic_failures,
            "fixture": self.fixture_info,
            "D_prime": self.D_prime,
            "D_theorem": self.D_theorem,
        }


def check_hnn_injectivity(
    fixture: HnnFixture,
    graph: MetricGraph,
    system: ContractingSystem,
    bundle: ConstantsBundle,
    D_input: int,
    kappa1: int,
    kappa2: int,
    t_letter_bound: int = 3,
    h_syllable_budget: int = 3,
    exponents=(-1, 1),
    check_paths: bool = True,
) -> HnnReport:
    """Enumerate Britton-reduced words, compare the Britton oracle against
    evaluation in the ambient group, and verify the truncation-path claims.

    Two words are the same element iff their canonical forms agree; the
    report lists collisions (oracle-distinct, evaluation-equal) and
    inconsistencies (oracle-equal, evaluation-distinct), both expected
    empty.  Every word using the stable letter gets a truncation path
    verified admissible at (D_input - kappa1 - kappa2, lam, (lam+2)|f|) and
    quasigeodesic at (Lambda, 0); consecutive targets must be distinct
    cosets.  Sampled parabolic evaluations must have their core in H.
    """
    fixture_info = fixture.validate(D_input)
    D_prime = D_input - kappa1 - kappa2
    D_theorem = bundle.D + 1 - kappa1 - kappa2
    by_oracle: dict = {}
    by_eval: dict = {}
    collisions: list[dict] = []
    inconsistencies: list[dict] = []
    qg_failures: list[dict] = []
    adm_failures: list[dict] = []
    target_failures: list[dict] = []
    parab_failures: list[dict] = []
    count = 0
    for word in enumerate_hnn_words(fixture, t_letter_bound, h_syllable_budget, exponents):
        count += 1
        okey = word.key(fixture)
        g = word.evaluate(fixture)
        prev_eval = by_oracle.get(okey)
        if prev_eval is not None and prev_eval != g.key:
            inconsistencies.append({"word": word.describe(fixture)})
        by_oracle.setdefault(okey, g.key)
        prev_oracle = by_eval.get(g.key)
        if prev_oracle is not None and prev_oracle != okey:
            collisions.append({"word": word.describe(fixture), "evaluates_like": str(g)})
        by_eval.setdefault(g.key, okey)

        cls = classify_hyperbolic(g)
        if cls.kind == "parabolic" and not fixture.contains(cls.core):
            parab_failures.append(
                {"word": word.describe(fixture), "core": str(cls.core)}
            )

        if not check_paths or word.t_count == 0:
            continue
        info = build_truncation_hnn(fixture, graph, word, lam=bundle.lam)
        if not info.consecutive_targets_distinct:
            target_failures.append({"word": word.describe(fixture)})
        path = info.decomposition.concatenated()
        qg = is_quasigeodesic(path, bundle.Lambda, 0)
        if not qg.ok:
            qg_failures.append({"word": word.describe(fixture), "witness": qg.witness})
        report = verify_admissible(info.decomposition, D_prime, system)
        if not report.ok:
            adm_failures.append(
                {
                    "word": word.describe(fixture),
                    "violation": report.first_violation().condition,
                    "witness": report.first_violation().witness,
                }
            )
    return HnnReport(
        words=count,
        oracle_classes=len(by_oracle),
        collisions=collisions,
        inconsistencies=inconsistencies,
        qg_failures=qg_failures,
        admissible_failures=adm_failures,
        target_failures=target_failures,
        parabolic_failures=parab_failures,
        fixture_info=fixture_info,
        D_prime=D_prime,
        D_theorem=D_theorem,
    )
