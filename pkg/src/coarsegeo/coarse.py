"""Coarse-geometry predicates and estimators over metric graphs.

Implements the contraction / quasiconvexity / orthogonality checkers, the
bounded intersection vs bounded projection conversions, deep and transition
point classification, relative quasiconvexity measurement, and the kappa and
parabolic-intersection estimators.  Estimators measure constants inside a
finite window and carry trust flags; they never extrapolate silently.

Pure functions over immutable graphs; sampling loops are embarrassingly
parallel in principle and deterministic in practice (max-reductions only).
"""

from __future__ import annotations

import random
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyInputError,
    InsufficientDataError,
    ModelMismatchError,
    PreconditionError,
)
from .graph import (
    BallGraph,
    MetricGraph,
    PathSeq,
    VertexSubset,
    diam,
    diam_with_trust,
    near_positions,
    neighborhood,
    path_min_distance,
    proj,
)
from .models import Coset, Element, GroupModel, SubgroupSpec, lattice_rank
from .rates import ClosedFormRate, RateFunction, TableRate, snap_bucket

TaggedPath = tuple[PathSeq, float, float]


# -- contracting systems ------------------------------------------------------


@dataclass(frozen=True)
class CosetFamily:
    """The family of left cosets of the given factor subgroups."""

    model: GroupModel
    factors: tuple[int, ...]

    def coset(self, g: Element, factor: int) -> Coset:
        if factor not in self.factors:
            raise PreconditionError(f"factor {factor} not in family {self.factors}")
        return Coset.of(self.model, g, factor)

    def is_member(self, X: VertexSubset) -> bool:
        return X.coset is not None and X.coset.factor in self.factors

    def cosets_near(self, v: Element, U: int) -> list[Coset]:
        """All family cosets within U of the vertex v (exact: a coset is
        within U of v iff it contains a point of the U-ball around v)."""
        model = self.model
        seen: set[Coset] = set()
        ball = {v}
        frontier = [v]
        for _ in range(U):
            new = []
            for x in frontier:
                for letter in model.letters:
                    y = model.translate(x, letter, 1)
                    if y not in ball:
                        ball.add(y)
                        new.append(y)
            frontier = new
        for w in ball:
            for f in self.factors:
                seen.add(Coset.of(model, w, f))
        return sorted(seen, key=lambda c: c.sort_key())


@dataclass
class ContractingSystem:
    """A family of subsets together with its measured rate functions.

    ``family`` names the coset family the system quantifies over (None for
    ad-hoc subset lists); ``sampled_subsets`` are the members actually used
    during measurement; ``path_class`` documents the sampled class of
    quasigeodesics; ``measurements`` carries provenance for reports.
    """

    model: GroupModel
    family: CosetFamily | None
    sampled_subsets: list[VertexSubset]
    mu: RateFunction
    epsilon: RateFunction
    tau: RateFunction
    nu: RateFunction
    sigma: RateFunction
    path_class: str = "all geodesics between sampled vertex pairs"
    measurements: dict = field(default_factory=dict)

    def nu_certificate(self, X: VertexSubset, Y: VertexSubset) -> bool:
        """True when X, Y are distinct members of the family whose pairwise
        bounded intersection is covered by the system's measured nu."""
        if self.family is None:
            return False
        return self.family.is_member(X) and self.family.is_member(Y) and X.key() != Y.key()

    def describe(self) -> dict:
        return {
            "family_factors": list(self.family.factors) if self.family else None,
            "sampled_subsets": [s.describe() for s in self.sampled_subsets],
            "path_class": self.path_class,
            "rates": {
                "mu": self.mu.describe(),
                "epsilon": self.epsilon.describe(),
                "tau": self.tau.describe(),
                "nu": self.nu.describe(),
                "sigma": self.sigma.describe(),
            },
            "measurements": self.measurements,
        }


# -- contraction --------------------------------------------------------------


@dataclass
class ContractionResult:
    ok: bool
    epsilon_table: TableRate
    witnesses: dict
    samples_used: int
    samples_near: int

    def __bool__(self):
        return self.ok


def check_contracting(
    graph: MetricGraph,
    X: VertexSubset,
    samples: list[TaggedPath],
    mu: RateFunction,
    epsilon_bound: RateFunction | None = None,
) -> ContractionResult:
    """Record projection diameters of sampled quasigeodesics far from X.

    For every tagged sample at distance >= mu(lam, c) from X, the diameter
    of its projection is recorded per (lam, c) bucket; the returned epsilon
    table is the per-bucket max + 1 (the contraction inequality is strict).
    ``ok`` reports whether a user-supplied epsilon bound held everywhere.
    """
    if not samples:
        raise InsufficientDataError("check_contracting needs at least one sample path")
    per_bucket: dict[tuple[int, int], int] = {}
    witnesses: dict = {}
    used = 0
    near = 0
    ok = True
    for path, lam, c in samples:
        bucket = snap_bucket(lam, c)
        if path_min_distance(path, X) < mu(lam, c):
            near += 1
            per_bucket.setdefault(bucket, 0)
            continue
        used += 1
        gates = proj(graph, path, X, 0)
        dm = diam(gates) if gates else 0
        if dm >= per_bucket.get(bucket, -1):
            per_bucket[bucket] = max(per_bucket.get(bucket, 0), dm)
            witnesses[bucket] = {
                "diam": dm,
                "path_start": str(path.p_minus),
                "path_end": str(path.p_plus),
            }
        if epsilon_bound is not None and dm >= epsilon_bound(lam, c):
            ok = False
            witnesses[bucket]["violates_bound"] = True
    table = TableRate("epsilon", 2, {b: v + 1 for b, v in per_bucket.items()})
    return ContractionResult(ok, table, witnesses, used, near)


@dataclass
class TreeContractionResult:
    ok: bool
    max_diam: int
    pairs_covered: int
    branches: int
    direct_pairs_checked: int
    expected_bound: int

    def __bool__(self):
        return self.ok


def tree_axis_contraction_exhaustive(
    ball: BallGraph,
    axis: Coset,
    bound: int = 1,
    sample_pairs: int = 20000,
    seed: int = 0,
) -> TreeContractionResult:
    """Exhaustive contraction check for an axis in a free-group ball.

    Covers every geodesic at distance >= 1 from the axis.  In a tree such a
    geodesic has both endpoints in the same branch hanging off the axis
    (crossing branches forces a visit to the axis), and branches are convex,
    so the projection of the geodesic is the union of the per-vertex
    projections of branch vertices.  The checker computes every vertex's
    projection by brute-force nearest-point scan; when all projections in a
    branch agree on a single gate (the expected situation), every geodesic
    in that branch projects to that gate and all its pairs are covered at
    once.  Any disagreeing branch falls back to walking its geodesics
    pair by pair.  A random sample of pairs is additionally walked directly
    as a cross-check of the aggregation.
    """
    model = ball.model
    if any(r != 1 for r in model.factor_ranks):
        raise ModelMismatchError("exhaustive tree contraction needs a free group model")
    axis_pts = axis.enumerate_within(ball.radius)
    if not axis_pts:
        raise EmptyInputError("axis does not meet the ball")

    def brute_proj(v: Element) -> tuple[int, list[Element]]:
        dists = [(model.dist(v, x), x) for x in axis_pts]
        best = min(d for d, _ in dists)
        return best, sorted(x for d, x in dists if d == best)

    branches: dict[tuple, list[Element]] = {}
    proj_of: dict[Element, list[Element]] = {}
    for v in ball.elements:
        d, gates = brute_proj(v)
        proj_of[v] = gates
        if d == 0:
            continue
        # branch id: the gate plus the first letter leaving the axis
        u = model.multiply(model.inverse(axis.rep), v)
        key = u.key
        if key[0][0] == axis.factor:
            stem = key[:1]
            off = key[1]
        else:
            stem = ()
            off = key[0]
        first_letter = (off[0], 1 if next(e for e in off[1] if e) > 0 else -1)
        branches.setdefault((stem, first_letter), []).append(v)

    max_diam = 0
    pairs_covered = 0
    fallback_pairs = 0
    for members in branches.values():
        gate_sets = {tuple(proj_of[v]) for v in members}
        if len(gate_sets) == 1 and len(next(iter(gate_sets))) == 1:
            pairs_covered += len(members) * (len(members) - 1) // 2 + len(members)
            continue
        # fallback: walk every geodesic in this branch
        for i in range(len(members)):
            for j in range(i, len(members)):
                path = ball.a_geodesic(members[i], members[j])
                union: set[Element] = set()
                for v in path.vertices():
                    union.update(proj_of[v])
                max_diam = max(max_diam, diam(union))
                fallback_pairs += 1
        pairs_covered += len(members) * (len(members) + 1) // 2

    rng = random.Random(seed)
    all_branch = [m for members in branches.values() for m in members]
    checked = 0
    for _ in range(sample_pairs):
        if not all_branch:
            break
        u = rng.choice(all_branch)
        v = rng.choice(all_branch)
        path = ball.a_geodesic(u, v)
        if min(axis.distance_to(w) for w in path.vertices()) < 1:
            continue
        union: set[Element] = set()
        for w in path.vertices():
            union.update(proj_of[w])
        max_diam = max(max_diam, diam(union))
        checked += 1

    return TreeContractionResult(
        ok=max_diam <= bound,
        max_diam=max_diam,
        pairs_covered=pairs_covered,
        branches=len(branches),
        direct_pairs_checked=checked + fallback_pairs,
        expected_bound=bound,
    )


# -- quasiconvexity -----------------------------------------------------------


def sigma_of(mu: RateFunction, epsilon: RateFunction) -> ClosedFormRate:
    """The quasiconvexity rate sigma(U) = 3 max(U, mu(1,0)) + epsilon(1,0)."""
    m10 = mu(1, 0)
    e10 = epsilon(1, 0)
    return ClosedFormRate(
        "sigma", 1,
        lambda U: 3 * max(U, m10) + e10,
        formula=f"3*max(U, {m10}) + {e10}",
    )


@dataclass
class QuasiconvexResult:
    ok: bool
    sigma_value: int
    escape_witness: dict | None
    pairs_checked: int
    candidate_escapes: int
    vacuous_in_window: bool

    def __bool__(self):
        return self.ok


def interval_max_distance(u: Element, v: Element, X: VertexSubset) -> tuple[int, Element]:
    """Max of d(., X) over the union of all geodesics from u to v.

    Points on some geodesic are exactly u * (full syllables of u^-1 v, then a
    partial box of the current syllable); d(., X) is coordinate-convex on
    each syllable box, so the maximum over a box sits at a corner.  Returns
    the maximum and a vertex attaining it.
    """
    model = u.model
    z = model.multiply(model.inverse(u), v)
    best = X.distance_to(u)
    arg = u
    prefix = u
    for f, vec in z.key:
        corners = [()]
        for w in vec:
            corners = [c + (pick,) for c in corners for pick in ({0, w} if w else {0})]
        for corner in corners:
            if not any(corner):
                continue
            pt = model.multiply(prefix, model.element(((f, tuple(corner)),)))
            d = X.distance_to(pt)
            if d > best:
                best = d
                arg = pt
        prefix = model.multiply(prefix, model.element(((f, vec),)))
    return best, arg


def check_quasiconvex(
    graph: BallGraph,
    X: VertexSubset,
    U: int,
    sigma: RateFunction,
) -> QuasiconvexResult:
    """Verify that every geodesic with endpoints in N_U(X) stays in N_sigma(U)(X).

    Quantifies over all geodesics: the farthest point from X over the full
    geodesic interval of a pair is computed in closed form per pair.  Any
    escaping pair must satisfy d(u, v) >= 2 (sigma(U) + 1 - U), which prunes
    the enumeration of N_U(X) pairs; vacuity (no vertex of the window lies
    beyond sigma(U) at all) is detected first and flagged.
    """
    sU = sigma(U)
    S = neighborhood(graph, X, U)
    if all(X.distance_to(z) <= sU for z in graph.elements):
        return QuasiconvexResult(True, sU, None, 0, 0, True)
    model = graph.model
    T = 2 * (sU + 1 - U)
    by_len: dict[int, list[Element]] = {}
    for s in S:
        by_len.setdefault(s.length, []).append(s)
    lengths = sorted(by_len)
    checked = 0
    candidates = 0
    for i, lu in enumerate(lengths):
        for lv in lengths[i:]:
            if lu + lv < T:
                continue
            for u in by_len[lu]:
                for v in by_len[lv]:
                    if lv == lu and not u < v:
                        continue
                    checked += 1
                    if model.dist(u, v) < T:
                        continue
                    candidates += 1
                    worst, arg = interval_max_distance(u, v, X)
                    if worst > sU:
                        witness = {
                            "u": str(u), "v": str(v), "z": str(arg),
                            "d_uv": model.dist(u, v), "d_zX": worst, "sigma": sU,
                        }
                        return QuasiconvexResult(False, sU, witness, checked, candidates, False)
    return QuasiconvexResult(True, sU, None, checked, candidates, False)


# -- orthogonality ------------------------------------------------------------


@dataclass
class OrthogonalityResult:
    ok: bool
    measured_diam: int
    tau_value: int
    mu_value: int
    near_count: int

    def __bool__(self):
        return self.ok


def check_orthogonal(
    path: PathSeq,
    lam,
    c,
    X: VertexSubset,
    mu: RateFunction,
    tau: RateFunction,
) -> OrthogonalityResult:
    """diam(path ∩ N_mu(lam,c)(X)) <= tau(lam,c); empty intersection passes."""
    m = mu(lam, c)
    t = tau(lam, c)
    near = near_positions(path, X, m)
    if not near:
        return OrthogonalityResult(True, 0, t, m, 0)
    dm = diam([v for _, v in near])
    return OrthogonalityResult(dm <= t, dm, t, m, len(near))


def a_bound(mu: RateFunction, tau: RateFunction, epsilon: RateFunction, lam, c):
    """The projection bound for orthogonal paths: mu + tau + epsilon at (lam, c)."""
    return mu(lam, c) + tau(lam, c) + epsilon(lam, c)


# -- bounded intersection / bounded projection --------------------------------


@dataclass
class InteractionResult:
    intersection_diams: dict
    intersection_trusted: dict
    proj_diam_xy: int
    proj_diam_yx: int
    B_measured: int
    nu_predicted_from_B: dict
    B_predicted_from_nu: int | None

    def describe(self) -> dict:
        return {
            "intersection_diams": {str(k): v for k, v in sorted(self.intersection_diams.items())},
            "intersection_trusted": {str(k): v for k, v in sorted(self.intersection_trusted.items())},
            "proj_diam_xy": self.proj_diam_xy,
            "proj_diam_yx": self.proj_diam_yx,
            "B_measured": self.B_measured,
            "nu_predicted_from_B": {str(k): v for k, v in sorted(self.nu_predicted_from_B.items())},
            "B_predicted_from_nu": self.B_predicted_from_nu,
        }


def bounded_interaction(
    graph: BallGraph,
    X: VertexSubset,
    Y: VertexSubset,
    U_list: list[int],
    mu: RateFunction,
    epsilon: RateFunction,
) -> InteractionResult:
    """Measure N_U(X) ∩ N_U(Y) diameters and mutual projection diameters,
    plus both conversion formulas between the two boundedness constants.

    The measured projection constant is strict (max observed + 1); the
    predicted nu from measured B is B + 4 mu(1,0) + 2 eps(1,0) + 2U and the
    predicted B from measured nu is 2 eps(1,0) + nu(mu(1,0)).
    """
    if X.key() == Y.key():
        raise PreconditionError("bounded_interaction needs two distinct subsets")
    m10 = mu(1, 0)
    e10 = epsilon(1, 0)
    inter_diams: dict[int, int] = {}
    inter_trust: dict[int, bool] = {}
    for U in sorted(U_list):
        nx = neighborhood(graph, X, U)
        pts = [p for p in nx if Y.distance_to(p) <= U]
        if not pts:
            inter_diams[U] = 0
            inter_trust[U] = True
            continue
        value, trusted = diam_with_trust(graph, pts, U)
        inter_diams[U] = value
        inter_trust[U] = trusted
    px = proj(graph, Y.enumerate_in(graph), X, 0)
    py = proj(graph, X.enumerate_in(graph), Y, 0)
    dxy = diam(px) if px else 0
    dyx = diam(py) if py else 0
    B = max(dxy, dyx) + 1
    nu_pred = {U: B + 4 * m10 + 2 * e10 + 2 * U for U in sorted(U_list)}
    B_pred = None
    if m10 in inter_diams:
        B_pred = 2 * e10 + (inter_diams[m10] + 1)
    return InteractionResult(inter_diams, inter_trust, dxy, dyx, B, nu_pred, B_pred)


# -- deep and transition points ------------------------------------------------


@dataclass
class PointClassification:
    position: int
    vertex: Element
    deep_in: list[Coset]
    is_transition: bool


@dataclass
class TransitionReport:
    points: list[PointClassification]
    unique_deep: bool
    candidates: int

    def transitions(self) -> list[PointClassification]:
        return [p for p in self.points if p.is_transition]


def deep_and_transition_points(
    path: PathSeq,
    U: int,
    L: int,
    family: CosetFamily | None,
    nu: RateFunction | None = None,
) -> TransitionReport:
    """Classify each path vertex as (U, L)-deep in some peripheral coset or
    as a transition point.

    A vertex v is deep in X iff both diam([v, p-]_p ∩ N_U(X)) and
    diam([v, p+]_p ∩ N_U(X)) exceed L.  With no peripheral family (free
    groups) every vertex is a transition point.  When L > nu(U) the deep
    coset is checked to be unique.
    """
    if L <= 0:
        raise PreconditionError("deep/transition classification needs L > 0")
    n = path.length
    if family is None or not family.factors:
        pts = [
            PointClassification(t, path.vertex(t), [], True) for t in range(n + 1)
        ]
        return TransitionReport(pts, True, 0)

    candidates: set[Coset] = set()
    t = 0
    while t <= n:
        v = path.vertex(t)
        candidates.update(family.cosets_near(v, U))
        t += 1
    deep_sets: dict[int, list[Coset]] = {t: [] for t in range(n + 1)}
    for X in sorted(candidates, key=lambda c: c.sort_key()):
        sub = VertexSubset.from_coset(X)
        near = near_positions(path, sub, U)
        if len(near) < 2:
            continue
        pos = [p for p, _ in near]
        verts = [v for _, v in near]
        model = path.graph.model
        k = len(verts)
        prefix = [0] * (k + 1)
        for i in range(1, k + 1):
            prefix[i] = prefix[i - 1]
            for j in range(i - 1):
                prefix[i] = max(prefix[i], model.dist(verts[i - 1], verts[j]))
        suffix = [0] * (k + 1)
        for i in range(k - 1, -1, -1):
            suffix[i] = suffix[i + 1]
            for j in range(i + 1, k):
                suffix[i] = max(suffix[i], model.dist(verts[i], verts[j]))
        for t in range(n + 1):
            cnt_before = bisect_right(pos, t)
            cnt_after = k - bisect_left(pos, t)
            if cnt_before and cnt_after:
                if prefix[cnt_before] > L and suffix[k - cnt_after] > L:
                    deep_sets[t].append(X)
    unique = True
    if nu is not None:
        try:
            nu_u = nu(U)
        except Exception:
            nu_u = None
        if nu_u is not None and L > nu_u:
            unique = all(len(v) <= 1 for v in deep_sets.values())
    points = [
        PointClassification(t, path.vertex(t), deep_sets[t], not deep_sets[t])
        for t in range(n + 1)
    ]
    return TransitionReport(points, unique, len(candidates))


# -- relative quasiconvexity ----------------------------------------------------


@dataclass
class RelQuasiconvexResult:
    ok: bool
    max_observed: int
    transition_points: int
    samples: int
    witness: dict | None

    def __bool__(self):
        return self.ok


def check_rel_quasiconvex(
    H: VertexSubset,
    samples: list[TaggedPath],
    U: int,
    L: int,
    M: int,
    family: CosetFamily | None,
    nu: RateFunction | None = None,
) -> RelQuasiconvexResult:
    """Every (U, L)-transition point of every sample must lie in N_M(H).

    Samples are quasigeodesics with endpoints in H; returns the max over
    transition points of d(., H) next to the verdict.
    """
    if not samples:
        raise InsufficientDataError("check_rel_quasiconvex needs sample paths")
    worst = 0
    count = 0
    witness = None
    ok = True
    for path, lam, c in samples:
        if not (H.contains(path.p_minus) and H.contains(path.p_plus)):
            raise PreconditionError("sample endpoints must lie in H")
        report = deep_and_transition_points(path, U, L, family, nu)
        for pt in report.transitions():
            count += 1
            d = H.distance_to(pt.vertex)
            if d > worst:
                worst = d
                witness = {"vertex": str(pt.vertex), "distance": d}
            if d > M:
                ok = False
    return RelQuasiconvexResult(ok, worst, count, len(samples), witness)


# -- kappa estimator -------------------------------------------------------------


@dataclass
class KappaResult:
    kappa: int | None
    unbounded_within_ball: bool
    intersection_size: int
    witness: dict | None


def kappa_estimate(
    graph: MetricGraph,
    H: VertexSubset,
    gK: VertexSubset,
    U: int,
    C: VertexSubset | None,
) -> KappaResult:
    """Smallest kappa with N_U(H) ∩ N_U(gK) ⊆ N_kappa(C) inside the graph.

    C is the enumerated intersection subgroup; when C is empty while the
    neighborhood intersection is not, the inclusion has no finite radius in
    the window and the result is flagged unbounded-within-ball.
    """
    nh = neighborhood(graph, H, U)
    pts = [p for p in nh if gK.distance_to(p) <= U]
    if not pts:
        return KappaResult(0, False, 0, None)
    if C is None:
        return KappaResult(None, True, len(pts), {"point": str(pts[0])})
    worst = 0
    arg = None
    for p in pts:
        d = C.distance_to(p)
        if d > worst:
            worst = d
            arg = p
    return KappaResult(
        worst, False, len(pts), {"point": str(arg)} if arg is not None else None
    )


# -- parabolic intersections -----------------------------------------------------


@dataclass
class ParabolicClassEntry:
    factor: int
    conjugator: Element
    kind: str           # finite | finite-index | infinite-infinite-index
    rank: int
    intersection_size: int


@dataclass
class ParabolicClassification:
    entries: list[ParabolicClassEntry]
    fully_quasiconvex: bool
    L_estimate: int
    stabilized: bool

    def describe(self) -> dict:
        return {
            "entries": [
                {
                    "factor": e.factor,
                    "conjugator": str(e.conjugator),
                    "kind": e.kind,
                    "rank": e.rank,
                    "intersection_size": e.intersection_size,
                }
                for e in self.entries
            ],
            "fully_quasiconvex": self.fully_quasiconvex,
            "L_estimate": self.L_estimate,
            "stabilized": self.stabilized,
        }


def classify_parabolic_intersections(
    graph: MetricGraph,
    H_spec: SubgroupSpec,
    conjugator_radius: int = 2,
    U_for_L: int = 1,
) -> ParabolicClassification:
    """Classify H ∩ P^g by sublattice rank for each peripheral P and short g.

    Abelian peripherals only: the intersection is a sublattice of Z^rank, so
    rank 0 means trivial (hence finite: the factors are torsion free), full
    rank means finite index, anything between is infinite of infinite index.
    The fully-quasiconvex verdict is the absence of the last kind; the L
    estimate is the largest diam(N_U(gP) ∩ H) over classes with finite
    intersection.  An unstabilized enumeration makes the verdict
    inconclusive (flagged, not guessed).
    """
    model = H_spec.model
    if model is not graph.model:
        raise ModelMismatchError("subgroup spec and graph use different models")
    peripherals = model.peripheral_factors
    if not peripherals:
        return ParabolicClassification([], True, 0, True)
    H_enum, stabilized = H_spec.enumerate_in_ball(graph.radius)
    H_set = VertexSubset.from_elements(H_enum, provenance="subgroup")
    conj_ball = [e for e in BallGraph.build(model, conjugator_radius).elements]
    entries: list[ParabolicClassEntry] = []
    seen_cosets: set[Coset] = set()
    L_estimate = 0
    fully = True
    for f in peripherals:
        rank_f = model.factor_ranks[f]
        for g in sorted(conj_ball):
            coset = Coset.of(model, g, f)
            if coset in seen_cosets:
                continue
            seen_cosets.add(coset)
            vecs = []
            members = 0
            for h in H_enum:
                u = model.conjugate(model.inverse(g), h)
                if not u.key:
                    continue
                if len(u.key) == 1 and u.key[0][0] == f:
                    vecs.append(u.key[0][1])
                    members += 1
            rank = lattice_rank(vecs)
            if rank == 0:
                kind = "finite"
            elif rank == rank_f:
                kind = "finite-index"
            else:
                kind = "infinite-infinite-index"
                fully = False
            entries.append(ParabolicClassEntry(f, g, kind, rank, members))
            if kind == "finite":
                near = [
                    p
                    for p in neighborhood(graph, VertexSubset.from_coset(coset), U_for_L)
                    if H_set.contains(p)
                ]
                if near:
                    L_estimate = max(L_estimate, diam(near))
    return ParabolicClassification(entries, fully, L_estimate, stabilized)
