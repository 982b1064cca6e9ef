"""Admissible decompositions: the constants pipeline and its verifiers.

The pipeline turns measured rate functions into the derived constants
A, C, B, R1..R3, R, Lambda, D1..D5, D in the one dependency order that is
consistent: A, C, B first, then R, then Lambda (which needs R), then the D
candidates (two of which need Lambda).  All bounds in the source inequalities
are strict, and the graph metric is integral, so every candidate is the
smallest integer exceeding its formula (formula value + 1).

An :class:`AdmissibleDecomposition` is an alternating concatenation
p0 q1 p1 ... qn pn of quasigeodesic pieces where every p-piece has both
endpoints in its target contracting subset.  ``verify_admissible`` checks the
four defining conditions; ``check_fellow_traveller`` searches a companion
path for ordered marker points near the p-piece endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .coarse import ContractingSystem, check_orthogonal
from .errors import PreconditionError, StructuralError
from .graph import PathSeq, VertexSubset
from .rates import RateFunction


@dataclass
class ConstantsBundle:
    """Derived constants with full provenance.

    Each candidate field already satisfies its strict inequality; R and D are
    the maxima of their candidates.  ``provenance`` snapshots the input rate
    tables.
    """

    lam: int
    c: int
    A: int
    C: int
    B: int
    R1: int
    R2: int
    R3: int
    R: int
    Lambda: int
    D1: int
    D2: int
    D3: int
    D4: int
    D5: int
    D: int
    provenance: dict = field(default_factory=dict)

    def describe(self) -> dict:
        out = {
            "lam": self.lam, "c": self.c,
            "A": self.A, "C": self.C, "B": self.B,
            "R1": self.R1, "R2": self.R2, "R3": self.R3, "R": self.R,
            "Lambda": self.Lambda,
            "D1": self.D1, "D2": self.D2, "D3": self.D3, "D4": self.D4,
            "D5": self.D5, "D": self.D,
            "provenance": self.provenance,
        }
        return out

    def candidate_rows(self) -> list[dict]:
        """One row per candidate, for the CSV table."""
        rows = []
        for name in ("R1", "R2", "R3", "D1", "D2", "D3", "D4", "D5"):
            rows.append({"candidate": name, "value": getattr(self, name)})
        return rows


def compute_constants(
    mu: RateFunction,
    epsilon: RateFunction,
    tau: RateFunction,
    nu: RateFunction,
    sigma: RateFunction,
    lam: int = 1,
    c: int = 0,
) -> ConstantsBundle:
    """Evaluate the full constants pipeline at class parameters (lam, c).

    Dependency order: A, C, B -> R1..R3, R -> Lambda -> D1..D5, D.  Strict
    inequalities are realized as formula + 1 on integer tables.  Raises
    ``IncompleteRateTableError`` (from the rate lookups) naming any missing
    bucket.
    """
    m10 = mu(1, 0)
    e10 = epsilon(1, 0)
    m = mu(lam, c)
    e = epsilon(lam, c)
    t = tau(lam, c)
    s0 = sigma(0)
    sm = sigma(m10)

    A = m + t + e
    C = lam * (m + e + A) + c
    B = 2 * e10 + 2 * m10 + nu(m10 + s0) + A

    R1 = (A + 2 * e10 + 4 * m10 + 1) + 1
    R2 = (B + 3 * e10 + 4 * m10 + 1) + 1
    R3 = (m10 + 5 * e10 + B + 1) + 1
    R = max(R1, R2, R3)

    Lambda = lam * (6 * R + 1) + 3 * c

    D1 = (m10 + e10 + A + C) + 1
    D2 = (2 * A + 3 * e10 + 6 * m10) + 1
    D3 = Lambda * (B + e + m) + 1
    D4 = Lambda * (R + sm) + 1
    D5 = (13 * e10 + 6 * m10 + 2 * B) + 1
    D = max(D1, D2, D3, D4, D5)

    provenance = {
        "mu": mu.describe(),
        "epsilon": epsilon.describe(),
        "tau": tau.describe(),
        "nu": nu.describe(),
        "sigma": sigma.describe(),
        "inputs": {
            "mu_10": m10, "epsilon_10": e10,
            "mu_lc": m, "epsilon_lc": e, "tau_lc": t,
            "sigma_0": s0, "sigma_mu10": sm,
            "nu_at_mu10_plus_sigma0": nu(m10 + s0),
        },
    }
    return ConstantsBundle(
        lam=lam, c=c, A=A, C=C, B=B,
        R1=R1, R2=R2, R3=R3, R=R, Lambda=Lambda,
        D1=D1, D2=D2, D3=D3, D4=D4, D5=D5, D=D,
        provenance=provenance,
    )


# -- decompositions -----------------------------------------------------------


@dataclass
class Segment:
    """One piece of a decomposition; target is None for connecting (q) pieces."""

    path: PathSeq
    target: VertexSubset | None = None

    @property
    def is_contracting(self) -> bool:
        return self.target is not None


class AdmissibleDecomposition:
    """Alternating concatenation p0 q1 p1 ... qn pn with contracting targets.

    Structural invariants enforced at construction: pieces chain end to end,
    kinds alternate (no two consecutive q-pieces, no two consecutive
    p-pieces), and every p-piece has both endpoints in its target.  Leading
    and trailing q-pieces are allowed; zero-length pieces are allowed.
    """

    def __init__(self, segments: list[Segment], lam=1, c=0):
        if not segments:
            raise StructuralError("a decomposition needs at least one piece")
        for s, t in zip(segments, segments[1:]):
            if s.path.p_plus != t.path.p_minus:
                raise StructuralError("decomposition pieces do not chain")
            if s.is_contracting == t.is_contracting:
                raise StructuralError("pieces must alternate contracting/connecting")
        for i, s in enumerate(segments):
            if s.is_contracting:
                if not (s.target.contains(s.path.p_minus) and s.target.contains(s.path.p_plus)):
                    raise StructuralError(
                        f"piece {i} endpoints not in its contracting target"
                    )
        self.segments = segments
        self.lam = lam
        self.c = c

    @property
    def contracting_segments(self) -> list[tuple[int, Segment]]:
        return [(i, s) for i, s in enumerate(self.segments) if s.is_contracting]

    @property
    def targets(self) -> list[VertexSubset]:
        return [s.target for _, s in self.contracting_segments]

    def concatenated(self) -> PathSeq:
        path = self.segments[0].path
        for s in self.segments[1:]:
            path = path.concat(s.path)
        return path

    @property
    def p_minus(self):
        return self.segments[0].path.p_minus

    @property
    def p_plus(self):
        return self.segments[-1].path.p_plus

    def describe(self) -> dict:
        return {
            "pieces": [
                {
                    "kind": "contracting" if s.is_contracting else "connecting",
                    "length": s.path.length,
                    "target": s.target.describe() if s.target else None,
                }
                for s in self.segments
            ],
            "lam": self.lam,
            "c": self.c,
        }


@dataclass
class ConditionReport:
    condition: str
    ok: bool
    witness: dict | None = None


@dataclass
class AdmissibleReport:
    ok: bool
    D: int
    conditions: list[ConditionReport]

    def __bool__(self):
        return self.ok

    def first_violation(self) -> ConditionReport | None:
        for c in self.conditions:
            if not c.ok:
                return c
        return None

    def describe(self) -> dict:
        return {
            "ok": self.ok,
            "D": self.D,
            "conditions": [
                {"condition": c.condition, "ok": c.ok, "witness": c.witness}
                for c in self.conditions
            ],
        }


def verify_admissible(
    decomp: AdmissibleDecomposition,
    D,
    system: ContractingSystem,
    check_structure: bool = True,
) -> AdmissibleReport:
    """Check the four admissibility conditions at level D.

    (1) alternation with p-endpoints in targets (re-checked), (2) interior
    p-pieces longer than lam*D + c, (3) every q-piece orthogonal to the
    targets it touches, (4) consecutive targets either distinct members of
    the system's nu-bounded family or separated by a long q-piece.
    Reports every condition; the first violation carries a witness.
    """
    lam, c = decomp.lam, decomp.c
    threshold = lam * D + c
    conditions: list[ConditionReport] = []

    struct_ok = True
    if check_structure:
        try:
            AdmissibleDecomposition(decomp.segments, lam, c)
        except StructuralError as exc:
            struct_ok = False
            conditions.append(ConditionReport("structure", False, {"error": str(exc)}))
    if struct_ok:
        conditions.append(ConditionReport("structure", True))

    n_seg = len(decomp.segments)
    ok2 = True
    witness2 = None
    for i, seg in enumerate(decomp.segments):
        if not seg.is_contracting:
            continue
        if i == 0 or i == n_seg - 1:
            continue
        if seg.path.length <= threshold:
            ok2 = False
            witness2 = {
                "piece_index": i,
                "length": seg.path.length,
                "required": f"> {threshold}",
            }
            break
    conditions.append(ConditionReport("interior-length", ok2, witness2))

    ok3 = True
    witness3 = None
    for i, seg in enumerate(decomp.segments):
        if seg.is_contracting:
            continue
        for j in (i - 1, i + 1):
            if 0 <= j < n_seg and decomp.segments[j].is_contracting:
                res = check_orthogonal(
                    seg.path, lam, c, decomp.segments[j].target,
                    system.mu, system.tau,
                )
                if not res.ok:
                    ok3 = False
                    witness3 = {
                        "q_index": i,
                        "target_index": j,
                        "measured_diam": res.measured_diam,
                        "tau": res.tau_value,
                    }
                    break
        if not ok3:
            break
    conditions.append(ConditionReport("orthogonality", ok3, witness3))

    ok4 = True
    witness4 = None
    contracting = decomp.contracting_segments
    for (i1, s1), (i2, s2) in zip(contracting, contracting[1:]):
        if system.nu_certificate(s1.target, s2.target):
            continue
        # the connecting piece between them must be long
        between = [decomp.segments[k] for k in range(i1 + 1, i2)]
        q_len = sum(s.path.length for s in between)
        if q_len <= threshold:
            ok4 = False
            witness4 = {
                "between_pieces": [i1, i2],
                "connector_length": q_len,
                "required": f"> {threshold} or nu-bounded targets",
                "targets_equal": s1.target.key() == s2.target.key(),
            }
            break
    conditions.append(ConditionReport("consecutive-targets", ok4, witness4))

    ok = all(c.ok for c in conditions)
    return AdmissibleReport(ok, D, conditions)


# -- fellow traveller ----------------------------------------------------------


@dataclass
class FellowTravellerResult:
    ok: bool
    R: int
    markers: list[tuple[int, int]]
    failed_piece: int | None = None

    def __bool__(self):
        return self.ok


def check_fellow_traveller(
    decomp: AdmissibleDecomposition,
    alpha: PathSeq,
    R,
) -> FellowTravellerResult:
    """Find ordered markers z_i, w_i on alpha with d(z_i, w_i) >= 1 and
    d(z_i, (p_i)-) < R, d(w_i, (p_i)+) < R for every contracting piece.

    Greedy by smallest final position: for each piece, among all admissible
    (z, w) pairs starting at or after the current position, the one with the
    smallest w is chosen; this is complete because later constraints depend
    only on the final position.
    """
    if alpha.p_minus != decomp.p_minus or alpha.p_plus != decomp.p_plus:
        raise PreconditionError("alpha must share endpoints with the decomposition")
    verts = alpha.vertex_list()
    graph = alpha.graph
    markers: list[tuple[int, int]] = []
    pos = 0
    for piece_no, (_, seg) in enumerate(decomp.contracting_segments):
        start, end = seg.path.p_minus, seg.path.p_plus
        best: tuple[int, int] | None = None
        z_candidates: list[int] = []
        for w in range(pos, len(verts)):
            if graph.distance(verts[w], end) < R:
                for z in z_candidates:
                    if graph.distance(verts[z], verts[w]) >= 1:
                        best = (z, w)
                        break
            if best:
                break
            if graph.distance(verts[w], start) < R:
                z_candidates.append(w)
        if best is None:
            return FellowTravellerResult(False, R, markers, failed_piece=piece_no)
        markers.append(best)
        pos = best[1]
    return FellowTravellerResult(True, R, markers)


# -- constant fitting ------------------------------------------------------------


@dataclass
class FitResult:
    lam: float
    c_min: int
    frontier: list[tuple[float, int]]


def fit_quasigeodesic_constants(
    path: PathSeq,
    lam=1,
    lam_grid: list | None = None,
) -> FitResult:
    """Minimal additive constant making the path a (lam, c)-quasigeodesic,
    plus the Pareto frontier over a grid of multiplicative constants.

    Exact over all vertex pairs; intended for paths of moderate length.
    """
    verts = path.vertex_list()
    graph = path.graph
    pairs: list[tuple[int, int]] = []
    for i in range(len(verts)):
        for j in range(i + 1, len(verts)):
            pairs.append((j - i, graph.distance(verts[i], verts[j])))

    def c_min_for(l) -> int:
        worst = 0
        for length, dist in pairs:
            gap = length - l * dist
            if gap > worst:
                worst = gap
        return int(worst) if worst == int(worst) else int(worst) + 1

    grid = lam_grid if lam_grid is not None else [lam]
    frontier = [(l, c_min_for(l)) for l in grid]
    return FitResult(lam, c_min_for(lam), frontier)
