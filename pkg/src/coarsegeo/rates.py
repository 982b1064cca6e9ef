"""Rate functions: the nonnegative controls mu, epsilon, tau, nu, sigma.

A rate is either a closed form or an empirical table.  Tables are keyed by
buckets: a 2-argument rate over (lam, c) snaps to the smallest grid point
dominating both coordinates; a 1-argument rate over U is defined at every
integer up to its largest measured key.  Tabulated rates are forced to be
monotone nondecreasing in each argument by taking running maxima, which is
sound because every consumer only needs an upper bound.
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping

from .errors import IncompleteRateTableError

DEFAULT_BUCKETS: tuple[tuple[int, int], ...] = ((1, 0), (1, 2), (1, 3), (1, 4), (2, 4), (3, 8))


def snap_bucket(lam, c, grid: Iterable[tuple[int, int]] = DEFAULT_BUCKETS) -> tuple[int, int]:
    """The smallest grid bucket dominating (lam, c) componentwise."""
    candidates = [b for b in grid if b[0] >= lam and b[1] >= c]
    if not candidates:
        raise IncompleteRateTableError(
            f"no bucket dominating (lam={lam}, c={c}) in grid {sorted(grid)}",
            bucket=(lam, c),
        )
    return min(candidates, key=lambda b: (b[0] + b[1], b))


class RateFunction:
    """A nonnegative rate, evaluated with ``__call__``.

    One-argument rates take a single U; two-argument rates take (lam, c).
    """

    name: str
    arity: int

    def __call__(self, *args):
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


class ClosedFormRate(RateFunction):
    def __init__(self, name: str, arity: int, fn: Callable, formula: str = ""):
        self.name = name
        self.arity = arity
        self.fn = fn
        self.formula = formula

    def __call__(self, *args):
        if len(args) != self.arity:
            raise TypeError(f"{self.name} takes {self.arity} argument(s)")
        v = self.fn(*args)
        if v < 0:
            raise ValueError(f"rate {self.name}{args} is negative")
        return v

    def describe(self) -> dict:
        return {"name": self.name, "kind": "closed-form", "formula": self.formula}

    def __repr__(self) -> str:
        return f"ClosedFormRate({self.name}: {self.formula})"


class TableRate(RateFunction):
    """An empirical rate table with bucket snapping and enforced monotonicity."""

    def __init__(self, name: str, arity: int, table: Mapping, grid=DEFAULT_BUCKETS):
        self.name = name
        self.arity = arity
        self.grid = tuple(grid)
        if arity == 1:
            keys = sorted(int(k) for k in table)
            vals: dict[int, int] = {}
            running = 0
            for k in keys:
                running = max(running, int(table[k]))
                vals[k] = running
            self.table = vals
        elif arity == 2:
            keys = sorted((int(a), int(b)) for a, b in table)
            vals2: dict[tuple[int, int], int] = {}
            for k in keys:
                dominated = [int(table[j]) for j in keys if j[0] <= k[0] and j[1] <= k[1]]
                vals2[k] = max(dominated + [int(table[k])])
            self.table = vals2
        else:
            raise ValueError("arity must be 1 or 2")
        if any(v < 0 for v in self.table.values()):
            raise ValueError(f"rate table {name} has negative entries")

    def __call__(self, *args):
        if self.arity == 1:
            (u,) = args
            keys = [k for k in self.table if k >= u]
            if not keys:
                raise IncompleteRateTableError(
                    f"rate table {self.name!r} missing bucket U={u} "
                    f"(largest measured {max(self.table)})",
                    bucket=u,
                )
            return self.table[min(keys)]
        lam, c = args
        bucket = snap_bucket(lam, c, self.grid)
        if bucket not in self.table:
            raise IncompleteRateTableError(
                f"rate table {self.name!r} missing bucket {bucket}", bucket=bucket
            )
        return self.table[bucket]

    def describe(self) -> dict:
        if self.arity == 1:
            entries = {str(k): v for k, v in sorted(self.table.items())}
        else:
            entries = {f"{k[0]},{k[1]}": v for k, v in sorted(self.table.items())}
        return {"name": self.name, "kind": "table", "entries": entries}

    def __repr__(self) -> str:
        return f"TableRate({self.name}, {self.table})"


def constant_rate(name: str, arity: int, value) -> ClosedFormRate:
    return ClosedFormRate(name, arity, lambda *a: value, formula=f"{value}")
