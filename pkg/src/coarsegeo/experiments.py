"""Experiment pipelines: rate measurement, system construction, and the
per-kind experiment runners behind the CLI.

Systems are measured bottom-up: mu is the unit choice, epsilon comes from
projection diameters of sampled geodesics, sigma from the quasiconvexity
formula, nu from neighborhood intersections of sampled coset pairs at small
U extended beyond the measured range by the projection-to-intersection
conversion, tau from the orthogonality calibration appropriate to the
system (connector measurements for amalgam-style systems, the lift bound
4B(U+1)^2 + 2(U+1) for peripheral systems).  Every measured constant lands
in the system's ``measurements`` for the report.

All sampling is driven by an explicit seed; reruns with the same config and
seed produce identical reports.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass

from .admissible import (
    AdmissibleDecomposition,
    ConstantsBundle,
    Segment,
    check_fellow_traveller,
    compute_constants,
    fit_quasigeodesic_constants,
    verify_admissible,
)
from .coarse import (
    ContractingSystem,
    CosetFamily,
    bounded_interaction,
    check_contracting,
    check_orthogonal,
    check_quasiconvex,
    check_rel_quasiconvex,
    classify_parabolic_intersections,
    kappa_estimate,
    sigma_of,
    tree_axis_contraction_exhaustive,
)
from .combination import (
    AmalgamFixture,
    HnnFixture,
    ScaledLattice,
    check_amalgam_injectivity,
    check_hnn_injectivity,
    lift_path,
    min_double_coset_rep,
)
from .errors import ConfigError, InsufficientDataError
from .graph import (
    BallGraph,
    LazyBall,
    MetricGraph,
    PathSeq,
    VertexSubset,
    diam,
    is_quasigeodesic,
    near_positions,
    neighborhood,
    proj,
)
from .models import Coset, Element, GroupModel, SubgroupSpec
from .rates import ClosedFormRate, RateFunction, TableRate, constant_rate

# -- sampling -------------------------------------------------------------------


def sample_vertex_pairs(ball: BallGraph, budget: int, rng: random.Random) -> list[tuple[Element, Element]]:
    """Distinct vertex pairs: all pairs when they fit the budget, otherwise a
    seeded sample without replacement semantics (duplicates filtered)."""
    n = ball.vertex_count
    if n * (n - 1) // 2 <= budget:
        out = []
        for i in range(n):
            for j in range(i + 1, n):
                out.append((ball.elements[i], ball.elements[j]))
        return out
    seen = set()
    out = []
    while len(out) < budget:
        i = rng.randrange(n)
        j = rng.randrange(n)
        if i == j or (i, j) in seen:
            continue
        seen.add((i, j))
        out.append((ball.elements[i], ball.elements[j]))
    return out


def geodesic_samples(ball: BallGraph, pairs) -> list[tuple[PathSeq, int, int]]:
    return [(ball.a_geodesic(u, v), 1, 0) for u, v in pairs]


def sample_family_subsets(
    ball: BallGraph,
    family: CosetFamily,
    count: int,
    rng: random.Random,
    max_rep_len: int = 3,
) -> list[VertexSubset]:
    """Distinct coset subsets of the family with short representatives,
    always including the base coset of each factor."""
    subsets: list[VertexSubset] = []
    seen: set = set()
    model = ball.model
    for f in family.factors:
        c = Coset.of(model, model.identity, f)
        seen.add(c)
        subsets.append(VertexSubset.from_coset(c, "coset"))
    candidates = [e for e in ball.elements if e.length <= max_rep_len]
    guard = 0
    while len(subsets) < count and guard < 50 * count:
        guard += 1
        g = candidates[rng.randrange(len(candidates))]
        f = family.factors[rng.randrange(len(family.factors))]
        c = Coset.of(model, g, f)
        if c in seen:
            continue
        seen.add(c)
        subsets.append(VertexSubset.from_coset(c, "coset"))
    return subsets


# -- rate measurement --------------------------------------------------------------


def measure_epsilon(
    ball: BallGraph,
    subsets: list[VertexSubset],
    samples: list[tuple[PathSeq, int, int]],
    mu: RateFunction,
    extra_buckets: tuple[tuple[int, int], ...] = (),
) -> tuple[TableRate, dict]:
    """Per-bucket max projection diameter + 1 over all (sample, subset) pairs
    with the sample far from the subset; extra buckets inherit the measured
    base value so later lookups cannot fall off the table."""
    per_bucket: dict[tuple[int, int], int] = {(1, 0): 0}
    counted = 0
    for X in subsets:
        result = check_contracting(ball, X, samples, mu)
        counted += result.samples_used
        for bucket, value in result.epsilon_table.table.items():
            per_bucket[bucket] = max(per_bucket.get(bucket, 0), value - 1)
    base = max(per_bucket.values())
    for b in extra_buckets:
        per_bucket.setdefault(b, base)
    table = TableRate("epsilon", 2, {b: v + 1 for b, v in per_bucket.items()})
    return table, {"samples_far": counted, "max_projection_diam": base}


def measure_nu(
    ball: BallGraph,
    subset_pairs: list[tuple[VertexSubset, VertexSubset]],
    mu: RateFunction,
    epsilon: RateFunction,
    U_measured: int,
    U_needed: int,
) -> tuple[TableRate, dict]:
    """Bounded-intersection rate: measured directly for U <= U_measured, then
    extended to U_needed by the conversion nu(U) = B + 4 mu + 2 eps + 2U from
    the measured projection constant (an upper bound whenever the measured
    constants are).  Trust flags accompany the direct measurements."""
    if not subset_pairs:
        raise InsufficientDataError("measure_nu needs at least one subset pair")
    m10, e10 = mu(1, 0), epsilon(1, 0)
    table: dict[int, int] = {}
    records = []
    B_worst = 0
    for X, Y in subset_pairs:
        r = bounded_interaction(ball, X, Y, list(range(U_measured + 1)), mu, epsilon)
        B_worst = max(B_worst, r.B_measured)
        records.append(r.describe())
        for U, d in r.intersection_diams.items():
            table[U] = max(table.get(U, 0), d + 1)
    for U in range(U_measured + 1, U_needed + 1):
        table[U] = B_worst + 4 * m10 + 2 * e10 + 2 * U
    return TableRate("nu", 1, table), {
        "pairs": len(subset_pairs),
        "B_worst": B_worst,
        "direct_up_to": U_measured,
        "records": records,
    }


def measure_projection_constant(
    ball: BallGraph,
    subset_pairs: list[tuple[VertexSubset, VertexSubset]],
    rng: random.Random,
    edge_samples: int = 200,
) -> tuple[int, dict]:
    """The system's bounded-projection constant: max over sampled distinct
    pairs of mutual projection diameters, and over sampled edges of their
    projection diameters, plus one (the bound is strict)."""
    worst = 0
    for X, Y in subset_pairs:
        px = proj(ball, Y.enumerate_in(ball), X, 0)
        py = proj(ball, X.enumerate_in(ball), Y, 0)
        worst = max(worst, diam(px) if px else 0, diam(py) if py else 0)
    model = ball.model
    edge_worst = 0
    targets = [X for X, _ in subset_pairs[:4]]
    for _ in range(edge_samples):
        u = ball.elements[rng.randrange(ball.vertex_count)]
        letter = model.letters[rng.randrange(len(model.letters))]
        v = model.translate(u, letter, 1)
        if v.length > ball.radius:
            continue
        for X in targets:
            gates = sorted(set(X.gates(u, 0)) | set(X.gates(v, 0)))
            edge_worst = max(edge_worst, diam(gates))
    B = max(worst, edge_worst) + 1
    return B, {"pair_worst": worst, "edge_worst": edge_worst}


def measure_connector_tau(
    graph: MetricGraph,
    connectors: list[tuple[PathSeq, VertexSubset]],
    mu: RateFunction,
    lam: int = 1,
    c: int = 0,
) -> int:
    """Max diameter of connector ∩ N_mu(target) over a calibration family of
    connecting paths; the orthogonality allowance for that family."""
    worst = 0
    m = mu(lam, c)
    for path, X in connectors:
        pts = [v for _, v in near_positions(path, X, m)]
        if pts:
            worst = max(worst, diam(pts))
    return worst


# -- system builders -----------------------------------------------------------------


def build_coset_system(
    ball: BallGraph,
    factors: tuple[int, ...],
    rng: random.Random,
    pair_budget: int = 3000,
    subset_count: int = 8,
    tau_mode: str = "connector",
    extra_buckets: tuple[tuple[int, int], ...] = (),
    connector_family: list[tuple[PathSeq, VertexSubset]] | None = None,
) -> ContractingSystem:
    """Measure a contracting system over the coset family of the given factors.

    ``tau_mode`` picks the orthogonality calibration: "connector" measures a
    family of connecting paths (supplied or generated from single-letter
    exits), "lift-bound" derives tau from the measured projection constant
    via 4B(U+1)^2 + 2(U+1) with U = mu, the bound satisfied by lifts of
    relative geodesics.
    """
    model = ball.model
    family = CosetFamily(model, factors)
    mu = constant_rate("mu", 2, 1)
    subsets = sample_family_subsets(ball, family, subset_count, rng)
    pairs = sample_vertex_pairs(ball, pair_budget, rng)
    samples = geodesic_samples(ball, pairs)
    epsilon, eps_info = measure_epsilon(ball, subsets, samples, mu, extra_buckets)
    sigma = sigma_of(mu, epsilon)
    subset_pairs = [
        (subsets[i], subsets[j])
        for i in range(len(subsets))
        for j in range(i + 1, len(subsets))
    ]
    U_needed = mu(1, 0) + sigma(0)
    nu, nu_info = measure_nu(ball, subset_pairs, mu, epsilon, U_measured=2, U_needed=U_needed)
    B, B_info = measure_projection_constant(ball, subset_pairs, rng)
    if tau_mode == "lift-bound":
        tau = ClosedFormRate(
            "tau", 2,
            lambda lam, c: 4 * B * (mu(lam, c) + 1) ** 2 + 2 * (mu(lam, c) + 1),
            formula=f"4*{B}*(mu+1)^2 + 2*(mu+1)",
        )
        tau_info = {"mode": "lift-bound", "B": B}
    else:
        if connector_family is None:
            connector_family = default_connectors(ball, subsets, rng)
        worst = measure_connector_tau(ball, connector_family, mu)
        tau = constant_rate("tau", 2, max(worst, 1))
        tau_info = {"mode": "connector", "measured": worst, "family": len(connector_family)}
    return ContractingSystem(
        model=model,
        family=family,
        sampled_subsets=subsets,
        mu=mu,
        epsilon=epsilon,
        tau=tau,
        nu=nu,
        sigma=sigma,
        path_class="all geodesics between sampled vertex pairs plus constructed connectors",
        measurements={
            "epsilon": eps_info,
            "nu": nu_info,
            "projection_constant": {"B": B, **B_info},
            "tau": tau_info,
        },
    )


def default_connectors(
    ball: BallGraph,
    subsets: list[VertexSubset],
    rng: random.Random,
    count: int = 60,
) -> list[tuple[PathSeq, VertexSubset]]:
    """Short connecting paths that exit a coset through a non-coset letter;
    the shape every experiment uses for its q-pieces."""
    model = ball.model
    out: list[tuple[PathSeq, VertexSubset]] = []
    for X in subsets:
        base = X.coset
        if base is None:
            continue
        off_letters = [
            l for l in model.letters if model.factor_of_letter(l) != base.factor
        ]
        anchors = base.enumerate_within(max(1, ball.radius - 3))
        if not anchors:
            continue
        for _ in range(max(1, count // max(1, len(subsets)))):
            a = anchors[rng.randrange(len(anchors))]
            l1 = off_letters[rng.randrange(len(off_letters))]
            runs = [(l1, 1)]
            if rng.random() < 0.5:
                l2 = model.letters[rng.randrange(len(model.letters))]
                if model.translate(model.translate(a, l1, 1), l2, 1).length <= ball.radius:
                    runs.append((l2, 1))
            try:
                path = PathSeq(ball, a, runs)
            except Exception:
                continue
            out.append((path, X))
    return out


def measure_double_coset_tau(
    graph: MetricGraph,
    K_factor: int,
    reps: list[Element],
    U: int = 1,
) -> tuple[int, dict]:
    """Orthogonality of geodesics labeled by minimal double-coset
    representatives: max over reps h of diam([1,h] ∩ N_U(K)) and
    diam([1,h] ∩ N_U(hK)); recorded, finiteness asserted by the caller."""
    model = graph.model
    worst = 0
    for h in reps:
        path = PathSeq(graph, model.identity, model.geodesic_runs(h))
        for coset in (Coset.of(model, model.identity, K_factor), Coset.of(model, h, K_factor)):
            pts = [v for _, v in near_positions(path, VertexSubset.from_coset(coset), U)]
            if pts:
                worst = max(worst, diam(pts))
    return worst, {"reps": len(reps), "U": U}


# -- Monte Carlo admissible decompositions ----------------------------------------


# -- lift orthogonality ------------------------------------------------------------


def random_relative_geodesic_word(
    model: GroupModel, rng: random.Random, syllables: int, max_coeff: int = 2
) -> Element:
    """A random alternating syllable word (a relative geodesic label)."""
    key = []
    factors = list(range(len(model.factor_ranks)))
    last = -1
    for _ in range(syllables):
        f = rng.choice([x for x in factors if x != last])
        last = f
        rank = model.factor_ranks[f]
        while True:
            vec = tuple(rng.randint(-max_coeff, max_coeff) for _ in range(rank))
            if any(vec):
                break
        key.append((f, vec))
    return model.element(tuple(key))


def run_lift_orthogonality(
    model: GroupModel,
    n_samples: int,
    U_list: list[int],
    B_measured: int,
    rng: random.Random,
    syllable_range: tuple[int, int] = (3, 6),
) -> dict:
    """Orthogonality of lifts of relative geodesics ending on a peripheral coset.

    For each random relative geodesic w, the target coset is w * P' with P'
    a factor other than the last syllable's, so the relative path meets the
    coset only at its endpoint.  The lift's intersection with N_U of the
    coset must have diameter at most 4B(U+1)^2 + 2(U+1) for the measured
    projection constant B."""
    worst: dict[int, int] = {U: 0 for U in U_list}
    violations: list[dict] = []
    radius = syllable_range[1] * max(model.factor_ranks) * 4 + 8
    graph = LazyBall(model, radius)
    for _ in range(n_samples):
        syl = rng.randint(*syllable_range)
        w = random_relative_geodesic_word(model, rng, syl)
        last_factor = w.key[-1][0]
        others = [f for f in range(len(model.factor_ranks)) if f != last_factor]
        target_factor = rng.choice(others)
        coset = Coset.of(model, w, target_factor)
        lift = lift_path(graph, w)
        sub = VertexSubset.from_coset(coset, "target")
        for U in U_list:
            bound = 4 * B_measured * (U + 1) ** 2 + 2 * (U + 1)
            pts = [v for _, v in near_positions(lift, sub, U)]
            d = diam(pts) if pts else 0
            worst[U] = max(worst[U], d)
            if d > bound:
                violations.append(
                    {"word": str(w), "U": U, "diam": d, "bound": bound}
                )
    return {
        "samples": n_samples,
        "B": B_measured,
        "worst_diam": {str(U): worst[U] for U in U_list},
        "bounds": {str(U): 4 * B_measured * (U + 1) ** 2 + 2 * (U + 1) for U in U_list},
        "violations": violations,
    }


@dataclass
class McStats:
    generated: int
    accepted: int
    qg_failures: int
    ft_failures: int
    max_marker_gap: int
    fitted_lambda_max: int


def random_admissible_decomposition(
    graph: MetricGraph,
    system: ContractingSystem,
    rng: random.Random,
    axis_factor: int,
) -> AdmissibleDecomposition:
    """A random decomposition over axis cosets: runs along a coset joined by
    reduced connector words that leave and enter through non-axis letters.

    Shapes: p, p q, q p, p q p (interior pieces are exempt from the length
    condition only when first or last, so desk-scale shapes avoid interior
    contracting pieces entirely)."""
    model = graph.model
    off_letters = [l for l in model.letters if model.factor_of_letter(l) != axis_factor]
    axis_letters = [l for l in model.letters if model.factor_of_letter(l) == axis_factor]

    def random_connector_runs(max_len: int) -> list[tuple[int, int]]:
        length = rng.randint(1, max_len)
        letters: list[int] = [off_letters[rng.randrange(len(off_letters))]]
        while len(letters) < length:
            nxt = model.letters[rng.randrange(len(model.letters))]
            if model.translate(model.translate(model.identity, letters[-1], 1), nxt, 1).length != 2:
                continue
            letters.append(nxt)
        if model.factor_of_letter(letters[-1]) == axis_factor:
            tail = off_letters[rng.randrange(len(off_letters))]
            letters.append(tail)
        return [(l, 1) for l in letters]

    shape = rng.choice(["pqp", "pqp", "pqp", "pq", "qp", "p"])
    base_g = model.identity
    if rng.random() < 0.5:
        base_g = model.translate(model.identity, off_letters[rng.randrange(len(off_letters))], 1)
    segments: list[Segment] = []
    cur = base_g

    def axis_target(at: Element) -> VertexSubset:
        return VertexSubset.from_coset(Coset.of(model, at, axis_factor), "axis-coset")

    def p_piece(at: Element) -> tuple[Segment, Element]:
        extent = rng.randint(0, 3)
        letter = axis_letters[rng.randrange(len(axis_letters))]
        path = PathSeq(graph, at, [(letter, extent)] if extent else [])
        return Segment(path, axis_target(at)), path.p_plus

    def q_piece(at: Element) -> tuple[Segment, Element]:
        runs = random_connector_runs(3)
        path = PathSeq(graph, at, runs)
        return Segment(path), path.p_plus

    if shape == "p":
        seg, cur = p_piece(cur)
        segments.append(seg)
    elif shape == "pq":
        seg, cur = p_piece(cur)
        segments.append(seg)
        seg, cur = q_piece(cur)
        segments.append(seg)
    elif shape == "qp":
        seg, cur = q_piece(cur)
        segments.append(seg)
        seg, cur = p_piece(cur)
        segments.append(seg)
    else:
        seg, cur = p_piece(cur)
        segments.append(seg)
        seg, cur = q_piece(cur)
        segments.append(seg)
        seg, cur = p_piece(cur)
        segments.append(seg)
    return AdmissibleDecomposition(segments, 1, 0)


def run_admissible_monte_carlo(
    graph: MetricGraph,
    system: ContractingSystem,
    bundle: ConstantsBundle,
    count: int,
    rng: random.Random,
    axis_factor: int = 0,
) -> tuple[McStats, list[dict]]:
    """Generate decompositions until ``count`` of them pass verify_admissible
    at the bundle's D, then check each against the quasigeodesic and
    fellow-traveller conclusions at the bundle's Lambda and R."""
    generated = accepted = qg_fail = ft_fail = 0
    witnesses: list[dict] = []
    max_gap = 0
    fitted_max = 0
    while accepted < count:
        generated += 1
        if generated > 100 * count:
            raise InsufficientDataError("Monte Carlo generator acceptance rate too low")
        decomp = random_admissible_decomposition(graph, system, rng, axis_factor)
        # the marker separation d(z_i, w_i) >= 1 needs one unit of geodesic
        # per contracting piece; shorter decompositions cannot host the
        # markers at any R and are excluded from the sampled class
        if decomp.concatenated().length < len(decomp.targets):
            continue
        report = verify_admissible(decomp, bundle.D, system)
        if not report.ok:
            continue
        accepted += 1
        path = decomp.concatenated()
        qg = is_quasigeodesic(path, bundle.Lambda, 0)
        if not qg.ok:
            qg_fail += 1
            witnesses.append({"kind": "quasigeodesic", "witness": qg.witness})
            continue
        alpha = graph.a_geodesic(decomp.p_minus, decomp.p_plus)
        ft = check_fellow_traveller(decomp, alpha, bundle.R)
        if not ft.ok:
            ft_fail += 1
            witnesses.append({"kind": "fellow-traveller", "failed_piece": ft.failed_piece,
                              "decomposition": decomp.describe()})
            continue
        verts = alpha.vertex_list()
        for (z, w), (_, seg) in zip(ft.markers, decomp.contracting_segments):
            max_gap = max(
                max_gap,
                graph.distance(verts[z], seg.path.p_minus),
                graph.distance(verts[w], seg.path.p_plus),
            )
        if accepted % 100 == 1:
            fit = fit_quasigeodesic_constants(path, lam=1)
            lam_needed = 1 if fit.c_min == 0 else bundle.Lambda
            fitted_max = max(fitted_max, lam_needed)
    return (
        McStats(generated, accepted, qg_fail, ft_fail, max_gap, fitted_max),
        witnesses,
    )
