"""Experiment dispatch: one runner per experiment kind.

Every runner consumes a validated config and returns an
:class:`ExperimentReport` whose canonical bytes depend only on the config
and seed.  Conditions carry the formula they instantiate, so reports are
self-describing.
"""

from __future__ import annotations

import random
import time

from .admissible import compute_constants
from .cache import build_ball_cached
from .coarse import (
    CosetFamily,
    check_contracting,
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
)
from .config import build_model, validate_config
from .errors import ConfigError
from .experiments import (
    build_coset_system,
    geodesic_samples,
    run_admissible_monte_carlo,
    run_lift_orthogonality,
    sample_family_subsets,
    sample_vertex_pairs,
)
from .graph import LazyBall, VertexSubset
from .models import Coset, SubgroupSpec
from .rates import ClosedFormRate, TableRate, constant_rate
from .reporting import Condition, ExperimentReport

SIGMA_FORMULA = "sigma(U) = 3*max(U, mu_10) + eps_10"
NU_FROM_B = "nu(U) <= B + 4*mu_10 + 2*eps_10 + 2*U"
B_FROM_NU = "B <= 2*eps_10 + nu(mu_10)"
LIFT_BOUND = "diam(lift ∩ N_U(coset)) <= 4*B*(U+1)^2 + 2*(U+1)"
LAMBDA_FORMULA = "Lambda = lam*(6*R + 1) + 3*c"


def run_experiment(raw_config: dict) -> ExperimentReport:
    cfg = validate_config(raw_config)
    runner = {
        "contract": run_contract,
        "quasiconvex": run_quasiconvex,
        "constants": run_constants,
        "admissible-mc": run_admissible_mc,
        "amalgam": run_amalgam,
        "hnn": run_hnn,
        "transition": run_transition,
    }[cfg["kind"]]
    start = time.monotonic()
    report = runner(cfg)
    report.wall_time = time.monotonic() - start
    return report


def _echo_config(cfg: dict) -> dict:
    return {
        "kind": cfg["kind"],
        "seed": cfg["seed"],
        "model": cfg["model"],
        "radius": cfg.get("radius"),
        "params": cfg["params"],
    }


# -- contract ---------------------------------------------------------------------


def run_contract(cfg: dict) -> ExperimentReport:
    model = build_model(cfg["model"])
    params = cfg["params"]
    radius = cfg.get("radius", 7)
    report = ExperimentReport("contract", _echo_config(cfg))
    ball = build_ball_cached(model, radius)
    factor = params.get("subset_factor", 0)
    rep_word = params.get("subset_rep", "")
    rep = model.parse(rep_word) if rep_word else model.identity
    coset = Coset.of(model, rep, factor)
    mode = params.get("mode", "exhaustive-tree" if model.kind == "free" else "sampled")
    bound = params.get("bound", 1)
    if mode == "exhaustive-tree":
        res = tree_axis_contraction_exhaustive(
            ball, coset, bound=bound,
            sample_pairs=params.get("sample_pairs", 20000),
            seed=cfg["seed"],
        )
        report.add(Condition(
            "contraction-projection-bound",
            f"diam proj(geodesic far from axis) <= {bound}",
            res.ok,
            None if res.ok else {"max_diam": res.max_diam},
        ))
        report.tables["contraction"] = {
            "max_projection_diam": res.max_diam,
            "pairs_covered": res.pairs_covered,
            "branches": res.branches,
            "direct_pairs_checked": res.direct_pairs_checked,
        }
    else:
        rng = random.Random(cfg["seed"])
        pairs = sample_vertex_pairs(ball, params.get("pair_budget", 3000), rng)
        samples = geodesic_samples(ball, pairs)
        mu = constant_rate("mu", 2, 1)
        eps_bound = constant_rate("epsilon_bound", 2, bound + 1)
        res = check_contracting(ball, VertexSubset.from_coset(coset), samples, mu, eps_bound)
        report.add(Condition(
            "contraction-projection-bound",
            f"diam proj(sample far from subset) < {bound + 1}",
            res.ok,
            res.witnesses if not res.ok else None,
        ))
        report.tables["epsilon"] = res.epsilon_table.describe()["entries"]
        report.tables["contraction"] = {
            "samples_far": res.samples_used,
            "samples_near": res.samples_near,
        }
    return report


# -- quasiconvex ------------------------------------------------------------------


def run_quasiconvex(cfg: dict) -> ExperimentReport:
    model = build_model(cfg["model"])
    params = cfg["params"]
    radius = cfg.get("radius", 6)
    seed = cfg["seed"]
    report = ExperimentReport("quasiconvex", _echo_config(cfg))
    ball = build_ball_cached(model, radius)
    rng = random.Random(seed)
    factors = tuple(range(len(model.factor_ranks))) if model.kind != "free" else (0,)
    family = CosetFamily(model, factors)
    subsets = [VertexSubset.from_coset(Coset.of(model, model.identity, f), "base") for f in factors]
    n_random = params.get("random_cosets", 5 if model.kind != "free" else 0)
    if n_random:
        extra = sample_family_subsets(
            ball, family, len(subsets) + n_random, rng,
            max_rep_len=params.get("max_rep_len", 3),
        )
        seen = {s.key() for s in subsets}
        for s in extra:
            if s.key() not in seen:
                subsets.append(s)
                seen.add(s.key())
    system = build_coset_system(ball, factors, random.Random(seed + 1),
                                pair_budget=params.get("pair_budget", 2000))
    sigma = system.sigma
    U_list = params.get("U_list", [0, 1, 2])
    for X in subsets:
        label = f"{X.coset.rep}|P{X.coset.factor}"
        for U in U_list:
            res = check_quasiconvex(ball, X, U, sigma)
            witness = res.escape_witness
            if res.ok and res.vacuous_in_window:
                witness = {"vacuous_in_window": True}
            report.add(Condition(
                f"sigma-bound[{label},U={U}]",
                SIGMA_FORMULA,
                res.ok,
                witness,
            ))
    report.tables["sigma"] = {str(U): sigma(U) for U in U_list}
    report.tables["rates"] = {
        "mu_10": system.mu(1, 0),
        "eps_10": system.epsilon(1, 0),
    }
    return report


# -- constants --------------------------------------------------------------------


def _rates_from_config(rates_cfg: dict):
    mu = constant_rate("mu", 2, rates_cfg.get("mu", 1))
    epsilon = constant_rate("epsilon", 2, rates_cfg.get("epsilon", 1))
    tau = constant_rate("tau", 2, rates_cfg.get("tau", 2))
    nu_lin = rates_cfg.get("nu_linear", [2, 2])
    a, b = int(nu_lin[0]), int(nu_lin[1])
    nu = ClosedFormRate("nu", 1, lambda U: a * U + b, formula=f"{a}*U + {b}")
    sigma = sigma_of(mu, epsilon)
    return mu, epsilon, tau, nu, sigma


def run_constants(cfg: dict) -> ExperimentReport:
    params = cfg["params"]
    report = ExperimentReport("constants", _echo_config(cfg))
    lam = params.get("lam", 1)
    c = params.get("c", 0)
    if "rates" in params:
        mu, epsilon, tau, nu, sigma = _rates_from_config(params["rates"])
    else:
        model = build_model(cfg["model"])
        radius = cfg.get("radius", 5)
        ball = build_ball_cached(model, radius)
        factors = tuple(params.get("factors", range(len(model.factor_ranks))))
        system = build_coset_system(ball, factors, random.Random(cfg["seed"]),
                                    pair_budget=params.get("pair_budget", 1500))
        mu, epsilon, tau, nu, sigma = system.mu, system.epsilon, system.tau, system.nu, system.sigma
    bundle = compute_constants(mu, epsilon, tau, nu, sigma, lam, c)
    report.constants = {
        k: v for k, v in bundle.describe().items() if k != "provenance"
    }
    report.tables["candidates"] = {r["candidate"]: r["value"] for r in bundle.candidate_rows()}
    report.tables["provenance"] = bundle.provenance["inputs"]
    report.add(Condition(
        "lambda-formula", LAMBDA_FORMULA,
        bundle.Lambda == bundle.lam * (6 * bundle.R + 1) + 3 * bundle.c,
    ))
    expected = params.get("expected", {})
    for name, value in sorted(expected.items()):
        actual = getattr(bundle, name, None)
        report.add(Condition(
            f"expected[{name}]",
            f"{name} == {value}",
            actual == value,
            None if actual == value else {"actual": actual},
        ))
    return report


# -- admissible Monte Carlo ----------------------------------------------------------


def run_admissible_mc(cfg: dict) -> ExperimentReport:
    model = build_model(cfg["model"])
    params = cfg["params"]
    radius = cfg.get("radius", 6)
    seed = cfg["seed"]
    report = ExperimentReport("admissible-mc", _echo_config(cfg))
    ball = build_ball_cached(model, radius)
    axis_factor = params.get("axis_factor", 0)
    system = build_coset_system(
        ball, (axis_factor,), random.Random(seed),
        pair_budget=params.get("pair_budget", 2000),
    )
    bundle = compute_constants(system.mu, system.epsilon, system.tau, system.nu, system.sigma, 1, 0)
    mc_graph = LazyBall(model, params.get("mc_radius", 12))
    count = params.get("count", 500)
    stats, witnesses = run_admissible_monte_carlo(
        mc_graph, system, bundle, count, random.Random(seed + 1), axis_factor
    )
    report.constants = {k: v for k, v in bundle.describe().items() if k != "provenance"}
    report.add(Condition(
        "admissible-quasigeodesic",
        "every decomposition passing the admissibility conditions at D is a (Lambda, 0)-quasigeodesic",
        stats.qg_failures == 0,
        witnesses[0] if stats.qg_failures else None,
    ))
    report.add(Condition(
        "fellow-traveller",
        "a geodesic between the endpoints has ordered markers within R of every contracting piece",
        stats.ft_failures == 0,
        next((w for w in witnesses if w.get("kind") == "fellow-traveller"), None),
    ))
    report.tables["monte_carlo"] = {
        "generated": stats.generated,
        "accepted": stats.accepted,
        "qg_failures": stats.qg_failures,
        "ft_failures": stats.ft_failures,
        "max_marker_gap": stats.max_marker_gap,
        "R": bundle.R,
        "Lambda": bundle.Lambda,
        "D": bundle.D,
    }
    return report


# -- amalgam --------------------------------------------------------------------------


def run_amalgam(cfg: dict) -> ExperimentReport:
    model = build_model(cfg["model"])
    params = cfg["params"]
    radius = cfg.get("radius", 6 if model.kind == "free" else 5)
    seed = cfg["seed"]
    report = ExperimentReport("amalgam", _echo_config(cfg))
    ball = build_ball_cached(model, radius)
    H_factor = params.get("H_factor", 0)
    K_factor = params.get("K_factor", 1)
    system = build_coset_system(
        ball, (K_factor,), random.Random(seed),
        pair_budget=params.get("pair_budget", 1500),
    )
    bundle = compute_constants(system.mu, system.epsilon, system.tau, system.nu, system.sigma, 1, 0)
    scale = params.get("scale", "auto")
    N = bundle.D + 1 if scale == "auto" else int(scale)
    fixture = AmalgamFixture(
        model, ScaledLattice(model, H_factor, N), ScaledLattice(model, K_factor, N)
    )
    default_syllables = 6 if model.kind == "free" else 4
    syllable_bound = params.get("syllable_bound", default_syllables)
    coeffs = tuple(params.get("coeffs", [-2, -1, 1, 2] if model.kind == "free" else [-1, 1]))
    lazy = LazyBall(model, (syllable_bound + 2) * 2 * N * max(model.factor_ranks))
    res = check_amalgam_injectivity(
        fixture, lazy, system, bundle, syllable_bound, coeffs,
        check_paths=params.get("check_paths", True),
    )
    report.constants = {k: v for k, v in bundle.describe().items() if k != "provenance"}
    report.constants["N"] = N
    report.add(Condition(
        "amalgam-injectivity",
        "distinct reduced words of the formal free product evaluate to distinct elements",
        not res.collisions, {"collisions": res.collisions[:5]} if res.collisions else None,
    ))
    report.add(Condition(
        "amalgam-nontrivial",
        "no reduced word evaluates to the identity",
        not res.trivial_evaluations,
        {"words": res.trivial_evaluations[:5]} if res.trivial_evaluations else None,
    ))
    report.add(Condition(
        "normal-path-quasigeodesic",
        "every normal path is a (Lambda, 0)-quasigeodesic",
        not res.qg_failures, {"failures": res.qg_failures[:5]} if res.qg_failures else None,
    ))
    report.add(Condition(
        "normal-path-admissible",
        "every normal path satisfies the admissibility conditions at N - 1",
        not res.admissible_failures,
        {"failures": res.admissible_failures[:5]} if res.admissible_failures else None,
    ))
    report.add(Condition(
        "amalgam-hyperbolicity",
        "every evaluation with cyclically reduced syllable length >= 2 is hyperbolic",
        not res.parabolic_misclassifications,
        {"cases": res.parabolic_misclassifications[:5]} if res.parabolic_misclassifications else None,
    ))
    report.tables["amalgam"] = {
        "words": res.words,
        "collisions": len(res.collisions),
        "scale_N": N,
        "syllable_bound": syllable_bound,
    }
    return report


# -- hnn -------------------------------------------------------------------------------


def run_hnn(cfg: dict) -> ExperimentReport:
    model = build_model(cfg["model"])
    if model.factor_ranks != (2, 2):
        raise ConfigError("the hnn experiment runs on the rank-(2,2) free product", "model")
    params = cfg["params"]
    radius = cfg.get("radius", 5)
    seed = cfg["seed"]
    report = ExperimentReport("hnn", _echo_config(cfg))
    ball = build_ball_cached(model, radius)
    system = build_coset_system(
        ball, (0, 1), random.Random(seed),
        pair_budget=params.get("pair_budget", 1500),
        tau_mode="lift-bound",
        extra_buckets=((1, 3),),
    )
    bundle = compute_constants(system.mu, system.epsilon, system.tau, system.nu, system.sigma, 1, 3)
    N = params.get("N", 12)
    fixture = HnnFixture(N, model)

    # relative quasiconvexity constant M of H, then the kappa estimates
    H_spec = fixture.H_spec(params.get("H_depth", 5))
    H_enum, stabilized = H_spec.enumerate_in_ball(ball.radius)
    H_sub = VertexSubset.from_elements(H_enum, "subgroup")
    rngM = random.Random(seed + 2)
    pairs = [(u, v) for u in H_enum for v in H_enum if u < v]
    if len(pairs) > params.get("M_pairs", 300):
        pairs = rngM.sample(pairs, params.get("M_pairs", 300))
    samples = geodesic_samples(ball, pairs)
    family = CosetFamily(model, (0, 1))
    L = system.nu(1) + 1
    rel = check_rel_quasiconvex(H_sub, samples, U=1, L=L, M=ball.radius, family=family, nu=system.nu)
    M = rel.max_observed
    Q_enum = [model.power(fixture.a1, k) for k in range(-ball.radius, ball.radius + 1)]
    kap2 = kappa_estimate(
        ball, H_sub, VertexSubset.from_coset(Coset.of(model, model.identity, 0), "P"),
        M, VertexSubset.from_elements(Q_enum),
    )
    kap1 = kappa_estimate(
        ball, H_sub,
        VertexSubset.from_coset(Coset.of(model, model.inverse(fixture.f), 0), "f^-1 P"),
        M, VertexSubset.from_elements([model.identity]),
    )
    c_param = 3 * fixture.f.length
    threshold = kap1.kappa + kap2.kappa + c_param + 2
    D_input = N - 1 - c_param
    res = check_hnn_injectivity(
        fixture, LazyBall(model, 6 * N * max(2, params.get("t_letters", 3))),
        system, bundle, D_input, kap1.kappa, kap2.kappa,
        t_letter_bound=params.get("t_letters", 3),
        h_syllable_budget=params.get("h_syllables", 3),
        exponents=tuple(params.get("exponents", (-1, 1))),
        check_paths=params.get("check_paths", True),
    )
    report.constants = {k: v for k, v in bundle.describe().items() if k != "provenance"}
    report.constants.update({
        "N": N, "M": M, "kappa1": kap1.kappa, "kappa2": kap2.kappa,
        "threshold": threshold, "D_input": D_input,
        "D_prime": res.D_prime, "D_theorem": res.D_theorem,
    })
    report.add(Condition(
        "scale-threshold",
        "N >= kappa1 + kappa2 + (lam+2)|f| + 2",
        N >= threshold, None if N >= threshold else {"N": N, "threshold": threshold},
    ))
    report.add(Condition(
        "hnn-injectivity",
        "words with distinct normal forms over the stable letter evaluate to distinct elements",
        not res.collisions, {"collisions": res.collisions[:5]} if res.collisions else None,
    ))
    report.add(Condition(
        "hnn-oracle-consistency",
        "words with equal normal forms evaluate to equal elements",
        not res.inconsistencies,
        {"cases": res.inconsistencies[:5]} if res.inconsistencies else None,
    ))
    report.add(Condition(
        "truncation-admissible",
        "every truncation path satisfies the admissibility conditions at (D', lam, (lam+2)|f|)",
        not res.admissible_failures,
        {"failures": res.admissible_failures[:5]} if res.admissible_failures else None,
    ))
    report.add(Condition(
        "truncation-quasigeodesic",
        "every truncation path is a (Lambda, 0)-quasigeodesic",
        not res.qg_failures, {"failures": res.qg_failures[:5]} if res.qg_failures else None,
    ))
    report.add(Condition(
        "truncation-distinct-targets",
        "consecutive truncation targets are distinct peripheral cosets",
        not res.target_failures,
        {"failures": res.target_failures[:5]} if res.target_failures else None,
    ))
    report.add(Condition(
        "hnn-parabolic-conjugacy",
        "every sampled parabolic evaluation has its core in H",
        not res.parabolic_failures,
        {"failures": res.parabolic_failures[:5]} if res.parabolic_failures else None,
    ))
    if not stabilized:
        report.conditions[-1].trusted = False
        report.notes.append("H enumeration not stabilized at this depth")
    report.tables["hnn"] = {
        "words": res.words,
        "oracle_classes": res.oracle_classes,
        "t_letters": params.get("t_letters", 3),
        "h_syllables": params.get("h_syllables", 3),
    }
    return report


# -- transition -------------------------------------------------------------------------


def run_transition(cfg: dict) -> ExperimentReport:
    model = build_model(cfg["model"])
    params = cfg["params"]
    radius = cfg.get("radius", 5)
    seed = cfg["seed"]
    report = ExperimentReport("transition", _echo_config(cfg))
    ball = build_ball_cached(model, radius)
    rng = random.Random(seed)
    factors = tuple(range(len(model.factor_ranks)))
    family = CosetFamily(model, factors) if model.peripheral_factors else None

    words = params.get("subgroup", ["a1", "b1"])
    gens = tuple(model.parse(w) for w in words)
    spec = SubgroupSpec(gens, params.get("depth", 4))
    H_enum, stabilized = spec.enumerate_in_ball(ball.radius)
    H_sub = VertexSubset.from_elements(H_enum, "subgroup")

    system = build_coset_system(ball, factors, random.Random(seed + 1),
                                pair_budget=params.get("pair_budget", 1500))
    pairs = [(u, v) for u in H_enum for v in H_enum if u < v]
    if len(pairs) > params.get("pairs", 200):
        pairs = rng.sample(pairs, params.get("pairs", 200))
    samples = geodesic_samples(ball, pairs)
    U = params.get("U", 1)
    L = params.get("L", "auto")
    L = system.nu(U) + 1 if L == "auto" else int(L)
    M_bound = params.get("M_bound", ball.radius)
    rel = check_rel_quasiconvex(H_sub, samples, U, L, M_bound, family, nu=system.nu)
    report.add(Condition(
        "transition-points-near-subgroup",
        f"every (U={U}, L={L})-transition point lies within M={M_bound} of the subgroup",
        rel.ok, rel.witness if not rel.ok else None,
        trusted=stabilized,
    ))
    report.tables["relative_quasiconvexity"] = {
        "max_observed_M": rel.max_observed,
        "transition_points": rel.transition_points,
        "samples": rel.samples,
        "H_size": len(H_enum),
        "stabilized": stabilized,
    }
    classification = classify_parabolic_intersections(
        ball, spec, conjugator_radius=params.get("conjugator_radius", 2), U_for_L=U
    )
    report.tables["parabolic_classification"] = classification.describe()
    report.add(Condition(
        "parabolic-classification-conclusive",
        "intersection ranks computed from a stabilized enumeration",
        True, None, trusted=classification.stabilized,
    ))
    if model.peripheral_factors:
        B = system.measurements["projection_constant"]["B"]
        lift = run_lift_orthogonality(
            model, params.get("lift_samples", 200),
            params.get("lift_U_list", [1, 2]), B, random.Random(seed + 3),
        )
        report.add(Condition(
            "lift-orthogonality",
            LIFT_BOUND,
            not lift["violations"],
            {"violations": lift["violations"][:5]} if lift["violations"] else None,
        ))
        report.tables["lift_orthogonality"] = {
            "samples": lift["samples"],
            "B": lift["B"],
            "worst_diam": lift["worst_diam"],
            "bounds": lift["bounds"],
        }
    return report
