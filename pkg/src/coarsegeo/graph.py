"""Finite geodesic-metric-graph primitives over Cayley balls.

Two graph realizations share one interface:

* ``BallGraph`` materializes all vertices of a ball and their adjacency;
  it carries a BFS oracle (``bfs_distance``, ``bfs_all``) used by the test
  suite to certify, exhaustively at small radius, that the graph metric of
  a ball agrees with the exact word metric of the model.  Balls of the
  supported models are geodesically convex, so the agreement is not a
  coincidence of small radius.
* ``LazyBall`` is a ball too large to enumerate; membership, distances and
  geodesics come from the word metric directly.  Every operation that would
  need the vertex list raises.

``PathSeq`` stores edge paths in run-length form (``(letter, count)`` runs),
so a geodesic of length 10^4 costs a handful of tuples; vertex access is
O(1) after a cached prefix pass.  ``near_positions`` walks a path against a
subset with Lipschitz skips, which keeps neighborhood-intersection scans
sublinear away from the subset.

All operations are read-only over immutable graphs and safe to call from
concurrent workers; BFS scratch buffers are per-call.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    BallTooSmallError,
    EmptyInputError,
    InternalError,
    ModelMismatchError,
    ResourceBudgetError,
    StructuralError,
)
from .models import Coset, Element, GroupModel


class MetricGraph:
    """Common interface of materialized and lazy Cayley balls."""

    model: GroupModel
    radius: int

    def __contains__(self, x: Element) -> bool:
        return x.model is self.model and x.length <= self.radius

    def margin(self, x: Element) -> int:
        """Distance from x to the boundary sphere (trust-flag ingredient)."""
        return self.radius - x.length

    def distance(self, u: Element, v: Element) -> int:
        """Word metric distance.

        Exact for the supported models because their balls are geodesically
        convex (verified against BFS by the test suite), so the shortest edge
        path inside the ball has the same length as in the full Cayley graph.
        """
        return self.model.dist(u, v)

    def a_geodesic(self, u: Element, v: Element) -> "PathSeq":
        """One geodesic from u to v; deterministic tie-break (cancellation
        moves first at the seam syllable, lowest generator first elsewhere),
        which also keeps the path inside any ball containing u and v."""
        return PathSeq(self, u, self.model.geodesic_runs_between(u, v))

    def neighbors(self, x: Element) -> list[Element]:
        out = []
        for letter in self.model.letters:
            y = self.model.translate(x, letter, 1)
            if y.length <= self.radius:
                out.append(y)
        return out

    @property
    def is_materialized(self) -> bool:
        raise NotImplementedError


class BallGraph(MetricGraph):
    """The ball of given radius, fully materialized with unit-length edges.

    Adjacency is derived from the model on first use (only the BFS oracle
    needs it); the vertex list is the graph's primary content.
    """

    def __init__(self, model: GroupModel, radius: int, elements: list[Element],
                 adjacency: list[list[int]] | None = None):
        self.model = model
        self.radius = radius
        self.elements = elements
        self.index = {e: i for i, e in enumerate(elements)}
        self._adjacency = adjacency

    @classmethod
    def build(cls, model: GroupModel, radius: int, max_vertices: int = 2_000_000) -> "BallGraph":
        """BFS enumeration of all normal forms of length <= radius.

        Deterministic: layers are expanded in letter order.  Raises
        ``ResourceBudgetError`` with a partial-size diagnostic when the ball
        exceeds ``max_vertices``.
        """
        elements = [model.identity]
        seen = {model.identity}
        frontier = [model.identity]
        for _ in range(radius):
            new = []
            for x in frontier:
                for letter in model.letters:
                    y = model.translate(x, letter, 1)
                    if y.length == x.length + 1 and y not in seen:
                        seen.add(y)
                        new.append(y)
                        if len(seen) > max_vertices:
                            raise ResourceBudgetError(
                                f"ball(radius={radius}) exceeds budget of {max_vertices} "
                                f"vertices (partial size {len(seen)})",
                                partial_size=len(seen),
                            )
            elements.extend(new)
            frontier = new
        return cls(model, radius, elements)

    @property
    def adjacency(self) -> list[list[int]]:
        if self._adjacency is None:
            adjacency: list[list[int]] = []
            for x in self.elements:
                row = []
                for letter in self.model.letters:
                    y = self.model.translate(x, letter, 1)
                    j = self.index.get(y)
                    if j is not None:
                        row.append(j)
                adjacency.append(sorted(set(row)))
            self._adjacency = adjacency
        return self._adjacency

    @property
    def is_materialized(self) -> bool:
        return True

    @property
    def vertex_count(self) -> int:
        return len(self.elements)

    def sphere_sizes(self) -> list[int]:
        counts = [0] * (self.radius + 1)
        for e in self.elements:
            counts[e.length] += 1
        return counts

    def bfs_distance(self, u: Element, v: Element) -> int:
        """Shortest edge-path length inside the ball (the BFS oracle)."""
        su, sv = self.index.get(u), self.index.get(v)
        if su is None or sv is None:
            raise InternalError("bfs_distance: vertex not in graph")
        if su == sv:
            return 0
        dist = {su: 0}
        dq = deque([su])
        while dq:
            i = dq.popleft()
            for j in self.adjacency[i]:
                if j not in dist:
                    dist[j] = dist[i] + 1
                    if j == sv:
                        return dist[j]
                    dq.append(j)
        raise InternalError("ball is disconnected; this cannot happen")

    def bfs_all(self, source: Element) -> np.ndarray:
        """BFS distances from one source to every vertex, as an int32 array."""
        s = self.index.get(source)
        if s is None:
            raise InternalError("bfs_all: source not in graph")
        dist = np.full(len(self.elements), -1, dtype=np.int32)
        dist[s] = 0
        dq = deque([s])
        while dq:
            i = dq.popleft()
            di = dist[i] + 1
            for j in self.adjacency[i]:
                if dist[j] < 0:
                    dist[j] = di
                    dq.append(j)
        return dist


class LazyBall(MetricGraph):
    """A ball handled through the exact word metric, never enumerated.

    Used for windows far too large to materialize (combination experiments
    run at radii in the thousands).  Only per-element operations are
    available; anything needing the vertex list is a programming error.
    """

    def __init__(self, model: GroupModel, radius: int):
        self.model = model
        self.radius = radius

    @property
    def is_materialized(self) -> bool:
        return False

    @property
    def elements(self):
        raise ResourceBudgetError(
            f"lazy ball of radius {self.radius} cannot enumerate its vertices"
        )


class PathSeq:
    """An edge path stored as run-length (letter, count) segments.

    Consecutive vertices differ by one generator letter; ``vertex(i)`` and
    ``subpath`` are exact and cheap even for paths of length 10^4.  A path
    must stay inside its graph: per run, the vertex length is convex in the
    run parameter, so the containment check only looks at run endpoints.
    """

    __slots__ = ("graph", "start", "runs", "_offsets", "_run_starts", "_end")

    def __init__(self, graph: MetricGraph, start: Element, runs: Sequence[tuple[int, int]]):
        if start.model is not graph.model:
            raise ModelMismatchError("path start element from a different model")
        self.graph = graph
        self.start = start
        self.runs = tuple((int(l), int(c)) for l, c in runs if c)
        if any(c < 0 for _, c in self.runs):
            raise StructuralError("run counts must be nonnegative")
        self._offsets: list[int] | None = None
        self._run_starts: list[Element] | None = None
        self._end: Element | None = None
        self._validate_containment()

    def _prefixes(self) -> tuple[list[int], list[Element]]:
        if self._offsets is None:
            offs = [0]
            starts = [self.start]
            cur = self.start
            for letter, count in self.runs:
                cur = self.graph.model.translate(cur, letter, count)
                offs.append(offs[-1] + count)
                starts.append(cur)
            self._offsets = offs
            self._run_starts = starts
            self._end = cur
        return self._offsets, self._run_starts

    def _validate_containment(self) -> None:
        offs, starts = self._prefixes()
        worst = max((e.length for e in starts), default=self.start.length)
        if worst > self.graph.radius:
            raise BallTooSmallError(
                f"path leaves ball of radius {self.graph.radius}; "
                f"needs radius {worst}",
                required_radius=worst,
            )

    @property
    def length(self) -> int:
        offs, _ = self._prefixes()
        return offs[-1]

    @property
    def p_minus(self) -> Element:
        return self.start

    @property
    def p_plus(self) -> Element:
        self._prefixes()
        assert self._end is not None
        return self._end

    def vertex(self, i: int) -> Element:
        offs, starts = self._prefixes()
        if i < 0 or i > offs[-1]:
            raise IndexError(f"path position {i} out of range 0..{offs[-1]}")
        # find run containing position i
        lo, hi = 0, len(self.runs)
        while lo < hi:
            mid = (lo + hi) // 2
            if offs[mid + 1] < i:
                lo = mid + 1
            elif offs[mid] > i:
                hi = mid
            else:
                lo = mid
                break
        r = lo
        if r == len(self.runs):
            return starts[-1]
        letter, _ = self.runs[r]
        return self.graph.model.translate(starts[r], letter, i - offs[r])

    def vertices(self) -> Iterator[Element]:
        model = self.graph.model
        cur = self.start
        yield cur
        for letter, count in self.runs:
            for _ in range(count):
                cur = model.translate(cur, letter, 1)
                yield cur

    def vertex_list(self) -> list[Element]:
        return list(self.vertices())

    def subpath(self, i: int, j: int) -> "PathSeq":
        """The subpath from position i to position j (reversed when i > j)."""
        if i > j:
            return self.subpath(j, i).reverse()
        offs, _ = self._prefixes()
        if i < 0 or j > offs[-1]:
            raise IndexError("subpath positions out of range")
        new_runs: list[tuple[int, int]] = []
        for r, (letter, count) in enumerate(self.runs):
            lo = max(i, offs[r])
            hi = min(j, offs[r + 1])
            if hi > lo:
                new_runs.append((letter, hi - lo))
        return PathSeq(self.graph, self.vertex(i), new_runs)

    def reverse(self) -> "PathSeq":
        return PathSeq(
            self.graph,
            self.p_plus,
            tuple((-l, c) for l, c in reversed(self.runs)),
        )

    def concat(self, other: "PathSeq") -> "PathSeq":
        if other.p_minus != self.p_plus:
            raise StructuralError("concatenation endpoints do not match")
        return PathSeq(self.graph, self.start, self.runs + other.runs)

    @classmethod
    def from_vertices(cls, graph: MetricGraph, vertices: Sequence[Element]) -> "PathSeq":
        """Build a path from an explicit vertex sequence, checking adjacency."""
        if not vertices:
            raise EmptyInputError("a path needs at least one vertex")
        model = graph.model
        runs: list[tuple[int, int]] = []
        for u, v in zip(vertices, vertices[1:]):
            step = model.multiply(model.inverse(u), v)
            if step.length != 1:
                raise StructuralError(
                    f"vertices {u!s} and {v!s} are not adjacent"
                )
            f, vec = step.key[0]
            coord = next(c for c, e in enumerate(vec) if e)
            letter = model._factor_offset[f] + coord + 1
            if vec[coord] < 0:
                letter = -letter
            if runs and runs[-1][0] == letter:
                runs[-1] = (letter, runs[-1][1] + 1)
            else:
                runs.append((letter, 1))
        return cls(graph, vertices[0], runs)

    def describe(self) -> dict:
        return {
            "start": str(self.start),
            "runs": [[self.graph.model.letter_name(l), c] for l, c in self.runs],
            "length": self.length,
        }

    def __repr__(self) -> str:
        return f"PathSeq({self.start!s}, len={self.length})"


class VertexSubset:
    """A subset of graph vertices: either an exact coset or an explicit set.

    Coset subsets answer distance/gate queries in closed form; explicit
    subsets scan their members.  ``provenance`` records where the subset
    came from (subgroup / coset / ad-hoc) for reports.
    """

    __slots__ = ("coset", "members", "provenance")

    def __init__(self, coset: Coset | None, members: frozenset[Element] | None,
                 provenance: str):
        self.coset = coset
        self.members = members
        self.provenance = provenance

    @classmethod
    def from_coset(cls, coset: Coset, provenance: str = "coset") -> "VertexSubset":
        return cls(coset, None, provenance)

    @classmethod
    def from_elements(cls, elements: Iterable[Element], provenance: str = "ad-hoc") -> "VertexSubset":
        members = frozenset(elements)
        if not members:
            raise EmptyInputError("empty vertex subset")
        return cls(None, members, provenance)

    @property
    def is_coset(self) -> bool:
        return self.coset is not None

    def key(self):
        if self.coset is not None:
            return ("coset", self.coset.factor, self.coset.rep.key)
        return ("explicit", tuple(sorted(e.key for e in self.members)))

    def __eq__(self, other) -> bool:
        return isinstance(other, VertexSubset) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def contains(self, x: Element) -> bool:
        if self.coset is not None:
            return self.coset.contains(x)
        return x in self.members

    def distance_to(self, x: Element) -> int:
        if self.coset is not None:
            return self.coset.distance_to(x)
        return min(x.model.dist(x, m) for m in self.members)

    def gates(self, x: Element, delta: int = 0) -> tuple[Element, ...]:
        """proj_X(x) with slack delta: points within delta of realizing d(x, X)."""
        if self.coset is not None:
            return self.coset.near_points(x, delta)
        best = self.distance_to(x)
        return tuple(sorted(m for m in self.members if x.model.dist(x, m) <= best + delta))

    def enumerate_in(self, graph: MetricGraph) -> list[Element]:
        if self.coset is not None:
            return self.coset.enumerate_within(graph.radius)
        return sorted(m for m in self.members if m in graph)

    def describe(self) -> dict:
        if self.coset is not None:
            return {
                "provenance": self.provenance,
                "coset_rep": str(self.coset.rep),
                "factor": self.coset.factor,
            }
        sample = sorted(self.members)[:8]
        return {
            "provenance": self.provenance,
            "size": len(self.members),
            "sample": [str(s) for s in sample],
        }

    def __repr__(self) -> str:
        if self.coset is not None:
            return f"VertexSubset({self.coset!r})"
        return f"VertexSubset({len(self.members)} elements, {self.provenance})"


# -- operations --------------------------------------------------------------


def neighborhood(graph: MetricGraph, X: VertexSubset, U: int) -> list[Element]:
    """N_U(X) inside the graph, as a sorted list.

    Exact within the graph; callers must treat results touching the
    boundary shell of width U as untrusted for infinite-graph claims.
    """
    base = X.enumerate_in(graph)
    if not base:
        raise EmptyInputError("neighborhood of an empty subset")
    if U == 0:
        return base
    seen = set(base)
    frontier = list(base)
    for _ in range(U):
        new = []
        for x in frontier:
            for y in graph.neighbors(x):
                if y not in seen:
                    seen.add(y)
                    new.append(y)
        frontier = new
    return sorted(seen)


def diam(points: Iterable[Element]) -> int:
    """Diameter of a finite vertex set under the word metric."""
    pts = list(points)
    if not pts:
        raise EmptyInputError("diameter of an empty set")
    model = pts[0].model
    best = 0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = model.dist(pts[i], pts[j])
            if d > best:
                best = d
    return best


def diam_with_trust(graph: MetricGraph, points: Iterable[Element], shell: int) -> tuple[int, bool]:
    """Diameter plus a trust flag: untrusted when the set touches the
    boundary shell of the given width (the value may be truncated)."""
    pts = list(points)
    value = diam(pts)
    trusted = all(graph.margin(p) >= shell for p in pts)
    return value, trusted


def proj(graph: MetricGraph, A, X: VertexSubset, delta: int = 0) -> list[Element]:
    """proj_X(A): union over a in A of the points of X within delta of
    realizing d(a, X).  With delta = 0 this is the nearest-point set."""
    if isinstance(A, Element):
        items: Iterable[Element] = (A,)
    elif isinstance(A, PathSeq):
        items = A.vertices()
    else:
        items = A
    out: set[Element] = set()
    for a in items:
        out.update(X.gates(a, delta))
    return sorted(out)


def near_positions(path: PathSeq, X: VertexSubset, U: int) -> list[tuple[int, Element]]:
    """Positions (and vertices) of the path lying in N_U(X).

    Exact: d(., X) is 1-Lipschitz along a unit-speed path, so from a vertex
    at distance d > U the next candidate is at least d - U steps ahead.
    Cost is proportional to the number of near vertices plus a logarithmic
    number of probes per excursion, not to the path length.
    """
    out: list[tuple[int, Element]] = []
    L = path.length
    t = 0
    while t <= L:
        v = path.vertex(t)
        d = X.distance_to(v)
        if d <= U:
            out.append((t, v))
            t += 1
        else:
            t += d - U
    return out


def path_min_distance(path: PathSeq, X: VertexSubset) -> int:
    """min over path vertices of d(., X); full scan, meant for short samples."""
    return min(X.distance_to(v) for v in path.vertices())


@dataclass
class QGResult:
    """Outcome of a quasigeodesic check."""

    ok: bool
    lam: float
    c: float
    witness: dict | None = None
    complete: bool = True

    def __bool__(self) -> bool:
        return self.ok


def is_quasigeodesic(path: PathSeq, lam, c, pair_budget: int = 2_000_000) -> QGResult:
    """Check len([x,y]_p) <= lam * d(x,y) + c over on-path vertex pairs.

    A path whose total length equals the distance of its endpoints is a
    geodesic, and every subsegment of a geodesic is geodesic, so such paths
    pass immediately.  Otherwise all vertex pairs are checked when their
    number fits the budget; longer crooked paths get a structured check
    (all pairs among run-boundary windows plus per-run geodesity) and the
    result is flagged ``complete=False``.
    """
    graph = path.graph
    n = path.length
    d_ends = graph.distance(path.p_minus, path.p_plus)
    if n == d_ends:
        return QGResult(True, lam, c)
    if (n + 1) * n // 2 <= pair_budget:
        verts = path.vertex_list()
        for i in range(len(verts)):
            for j in range(i + 1, len(verts)):
                d = graph.distance(verts[i], verts[j])
                if j - i > lam * d + c:
                    return QGResult(
                        False, lam, c,
                        witness={
                            "i": i, "j": j,
                            "x": str(verts[i]), "y": str(verts[j]),
                            "len": j - i, "dist": d,
                        },
                    )
        return QGResult(True, lam, c)
    # windowed fallback for long non-geodesic paths: run boundaries +- window
    offs, _ = path._prefixes()
    window = 64
    positions: set[int] = set()
    for o in offs:
        for w in range(-window, window + 1):
            t = o + w
            if 0 <= t <= n:
                positions.add(t)
    pos = sorted(positions)
    for ii in range(len(pos)):
        for jj in range(ii + 1, len(pos)):
            i, j = pos[ii], pos[jj]
            d = graph.distance(path.vertex(i), path.vertex(j))
            if j - i > lam * d + c:
                return QGResult(
                    False, lam, c,
                    witness={"i": i, "j": j, "len": j - i, "dist": d},
                )
    return QGResult(True, lam, c, complete=False)
