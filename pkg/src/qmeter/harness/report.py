"""Tabulated reports: weak-vs-strong resource cost and cloning fidelities."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

from .. import cloning
from ..core import Observable, PureState, observable_variance
from ..weak import WeakConfig, weak_resource_exact, weak_resource_ratio

DEFAULT_MULTIPLES = (1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0)

TABLES = {
    "qubit-fidelity": ("n", "m"),
    "d-fidelity": ("n", "m", "d"),
    "coherent-bound": ("n", "m"),
}


def resource_report(
    cfg: WeakConfig,
    obs: Observable,
    state: PureState,
    m_strong: int,
    grid: Sequence[float] | None = None,
) -> list[dict]:
    """Weak-measurement count matching the statistical error of ``m_strong`` strong ones.

    Rows are sorted by ``delta_p``. The default grid is a set of multiples of
    the state's observable spread plus ``cfg.delta_p`` itself.

    Parameters
    ----------
    cfg : WeakConfig
        Apparatus width of interest; always included in the table.
    obs, state : Observable, PureState
        Fix the spread Delta S of the observable in the state.
    m_strong : int
        Number of strong measurements defining the target error.
    grid : sequence of float, optional
        Explicit Delta_p values (replaces the default multiples).

    Returns
    -------
    list of dict
        Keys ``delta_p``, ``delta_s``, ``m_strong``, ``m_weak`` (integer count)
        and ``m_weak_exact``.
    """
    if m_strong < 1:
        raise ValueError("m_strong must be a positive integer")
    spread = math.sqrt(observable_variance(state, obs))
    if not spread > 0:
        raise ValueError("the state is an eigenstate of the observable; no resource comparison exists")
    values = list(grid) if grid is not None else [k * spread for k in DEFAULT_MULTIPLES]
    values.append(cfg.delta_p)
    rows = []
    for dp in sorted(set(float(v) for v in values)):
        c = WeakConfig(dp)
        rows.append(
            {
                "delta_p": dp,
                "delta_s": spread,
                "m_strong": int(m_strong),
                "m_weak": weak_resource_ratio(c, spread, m_strong),
                "m_weak_exact": weak_resource_exact(c, spread, m_strong),
            }
        )
    return rows


def parse_ranges(text: str) -> dict[str, range]:
    """Parse ``"n=1:3,m=1:10"`` into inclusive integer ranges.

    A bare value (``"d=4"``) is a one-element range.
    """
    out: dict[str, range] = {}
    if not text or not text.strip():
        raise ValueError("empty range string")
    for part in text.split(","):
        name, sep, spec = part.partition("=")
        name = name.strip().lower()
        if not sep or not name:
            raise ValueError(f"malformed range {part!r}; expected name=lo:hi")
        lo, colon, hi = spec.partition(":")
        try:
            a = int(lo)
            b = int(hi) if colon else a
        except ValueError:
            raise ValueError(f"malformed range {part!r}; bounds must be integers") from None
        if b < a:
            raise ValueError(f"empty range {part!r}")
        out[name] = range(a, b + 1)
    return out


def _value(table: str, n: int, m: int, d: int | None) -> float:
    if table == "qubit-fidelity":
        return cloning.qubit_fidelity(n, m)
    if table == "d-fidelity":
        return cloning.d_dim_fidelity(n, m, d)
    return cloning.coherent_fidelity_bound(n, m)


def formula_table(table: str, ranges: dict[str, Iterable[int]]) -> list[dict]:
    """Evaluate a cloning formula on the grid of ``ranges``.

    Combinations with N > M are skipped since no cloner exists for them.
    """
    if table not in TABLES:
        raise ValueError(f"unknown table {table!r}; expected one of {', '.join(TABLES)}")
    names = TABLES[table]
    missing = [v for v in names if v not in ranges]
    extra = sorted(set(ranges) - set(names))
    if missing:
        raise ValueError(f"table {table!r} needs ranges for {', '.join(missing)}")
    if extra:
        raise ValueError(f"table {table!r} does not take {', '.join(extra)}")
    rows = []
    for d in ranges.get("d", [None]):
        for n in ranges["n"]:
            for m in ranges["m"]:
                if n < 1 or n > m:
                    continue
                row = {"n": n, "m": m}
                if d is not None:
                    row["d"] = d
                row["value"] = _value(table, n, m, d)
                rows.append(row)
    return rows
