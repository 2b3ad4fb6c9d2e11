"""Gene vectors <-> feasible junction controls."""

from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Sequence

import numpy as np

from src.errors import ConfigurationError
from src.network.model import ControlSet, Network

SUM_TOL = 1e-12
_BISECTION_ITERS = 200


@dataclass(frozen=True)
class ControlGroup:
    """
    A run of genes that must sum to one within [lo, hi].

    For alpha a group is one incoming road's column of alpha[j] (n_out genes); for
    beta it is one outgoing road's column of beta[j] (n_in genes).
    """

    junction: int
    road: int
    start: int
    size: int
    lo: float
    hi: float

    @property
    def span(self) -> slice:
        return slice(self.start, self.start + self.size)

    @property
    def fixed(self) -> bool:
        """Bounds leave exactly one feasible point (the uniform split)."""
        return abs(self.lo * self.size - 1.0) <= SUM_TOL or abs(self.hi * self.size - 1.0) <= SUM_TOL


def project_capped_simplex(v: np.ndarray, lo: float, hi: float, total: float = 1.0) -> np.ndarray:
    """
    Euclidean projection onto {x : sum x = total, lo <= x <= hi}.

    Bisection on the shift tau in clip(v + tau, lo, hi); the last round-off is
    moved onto the entry with the most slack so the sum is exact.
    """
    v = np.asarray(v, dtype=float)
    n = v.size
    if lo * n > total + SUM_TOL or hi * n < total - SUM_TOL:
        raise ConfigurationError(f"bounds [{lo}, {hi}] infeasible for {n} entries summing to {total}")
    left, right = lo - v.max(), hi - v.min()
    for _ in range(_BISECTION_ITERS):
        tau = 0.5 * (left + right)
        if np.clip(v + tau, lo, hi).sum() < total:
            left = tau
        else:
            right = tau
        if right - left <= 1e-16 * max(1.0, abs(tau)):
            break
    x = np.clip(v + 0.5 * (left + right), lo, hi)
    return _fix_sum(x, lo, hi, total)


def _fix_sum(x: np.ndarray, lo: float, hi: float, total: float = 1.0) -> np.ndarray:
    residual = total - x.sum()
    if residual > 0:
        k = int(np.argmax(hi - x))
    else:
        k = int(np.argmax(x - lo))
    x[k] = min(hi, max(lo, x[k] + residual))
    return x


class SimplexGroups:
    """
    Gene layout made of disjoint capped-simplex groups.

    ``decode_vector`` maps any raw gene vector to a feasible point: clip each group
    to its bounds, rescale it to sum one (an all-zero group becomes uniform) and
    project onto the capped simplex if rescaling broke a bound.
    """

    def __init__(self, groups: Sequence[ControlGroup]):
        self.groups: List[ControlGroup] = list(groups)
        for g in self.groups:
            if g.lo * g.size > 1.0 + SUM_TOL or g.hi * g.size < 1.0 - SUM_TOL:
                raise ConfigurationError(
                    f"bounds [{g.lo}, {g.hi}] infeasible at junction {g.junction} "
                    f"(need lo*{g.size} <= 1 <= hi*{g.size})",
                    junction=g.junction,
                )
        self.n_genes = sum(g.size for g in self.groups)
        self.lower = np.zeros(self.n_genes)
        self.upper = np.ones(self.n_genes)
        for g in self.groups:
            self.lower[g.span] = g.lo
            self.upper[g.span] = g.hi

    @classmethod
    def from_sizes(cls, sizes: Sequence[int], lo: float = 0.0, hi: float = 1.0) -> "SimplexGroups":
        """Anonymous groups, handy for optimizing over plain simplices."""
        groups, start = [], 0
        for i, size in enumerate(sizes):
            groups.append(ControlGroup(junction=-1, road=i, start=start, size=size, lo=lo, hi=hi))
            start += size
        return cls(groups)

    def decode_vector(self, raw: np.ndarray) -> np.ndarray:
        raw = np.asarray(raw, dtype=float)
        if raw.shape != (self.n_genes,):
            raise ConfigurationError(f"expected {self.n_genes} genes, got shape {raw.shape}")
        x = np.empty(self.n_genes)
        for g in self.groups:
            seg = np.clip(raw[g.span], g.lo, g.hi)
            total = seg.sum()
            if total <= np.finfo(float).tiny:
                seg = np.full(g.size, 1.0 / g.size)
            else:
                seg = seg / total
            if np.any(seg < g.lo - SUM_TOL) or np.any(seg > g.hi + SUM_TOL):
                seg = project_capped_simplex(seg, g.lo, g.hi)
            else:
                seg = _fix_sum(np.clip(seg, g.lo, g.hi), g.lo, g.hi)
            x[g.span] = seg
        return x

    def project(self, v: np.ndarray) -> np.ndarray:
        """Group-wise Euclidean projection (used by the KKT residual)."""
        x = np.empty(self.n_genes)
        for g in self.groups:
            x[g.span] = project_capped_simplex(v[g.span], g.lo, g.hi)
        return x

    def uniform(self) -> np.ndarray:
        x = np.empty(self.n_genes)
        for g in self.groups:
            x[g.span] = 1.0 / g.size
        return x

    def violation(self, x: np.ndarray, tol: float = 1e-9) -> Optional[str]:
        """Description of the first violated constraint, or None when feasible."""
        for i, g in enumerate(self.groups):
            seg = x[g.span]
            if abs(seg.sum() - 1.0) > tol:
                return f"group {i} (junction {g.junction}, road {g.road}) sums to {seg.sum():.12g}"
            if np.any(seg < g.lo - tol) or np.any(seg > g.hi + tol):
                return f"group {i} (junction {g.junction}, road {g.road}) leaves [{g.lo}, {g.hi}]"
        return None

    def is_feasible(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        return self.violation(x, tol) is None


class ControlEncoder(SimplexGroups):
    """
    Free entries of alpha (kind="alpha") or beta (kind="beta") as a gene vector.

    Junctions whose groups would be singletons (one outgoing road for alpha, one
    incoming road for beta) contribute no genes; their value is forced to 1.
    """

    def __init__(
        self,
        net: Network,
        kind: Literal["alpha", "beta"],
        lo: float = 0.0,
        hi: float = 1.0,
    ):
        self.net = net
        self.kind = kind
        groups, start = [], 0
        for j in net.junctions:
            if kind == "alpha":
                size, owners = len(j.outgoing), j.incoming
            else:
                size, owners = len(j.incoming), j.outgoing
            if size < 2:
                continue
            g_lo, g_hi = (0.0, 1.0) if kind == "alpha" else (lo, hi)
            for road in owners:
                groups.append(ControlGroup(junction=j.id, road=road, start=start, size=size, lo=g_lo, hi=g_hi))
                start += size
        super().__init__(groups)

    def to_table(self, x: np.ndarray) -> Dict[int, List[List[float]]]:
        """Feasible vector -> per-junction matrices, forced junctions included."""
        table: Dict[int, List[List[float]]] = {}
        for j in self.net.junctions:
            n_in, n_out = len(j.incoming), len(j.outgoing)
            shape = (n_out, n_in) if self.kind == "alpha" else (n_in, n_out)
            table[j.id] = np.ones(shape).tolist()
        columns: Dict[int, List[np.ndarray]] = {}
        for g in self.groups:
            columns.setdefault(g.junction, []).append(x[g.span])
        for jid, cols in columns.items():
            table[jid] = np.column_stack(cols).tolist()
        return table

    def decode(self, raw: np.ndarray) -> Dict[int, List[List[float]]]:
        return self.to_table(self.decode_vector(raw))

    def encode(self, controls: ControlSet) -> np.ndarray:
        """Feasible controls -> gene vector (missing forced junctions are fine)."""
        x = np.empty(self.n_genes)
        position: Dict[int, int] = {}
        for g in self.groups:
            j = self.net.junction(g.junction)
            m = controls.alpha_matrix(j) if self.kind == "alpha" else controls.beta_matrix(j)
            k = position.get(g.junction, 0)
            x[g.span] = m[:, k]
            position[g.junction] = k + 1
        return x


def decode_alpha(raw: np.ndarray, net: Network) -> Dict[int, List[List[float]]]:
    return ControlEncoder(net, "alpha").decode(raw)


def decode_beta(raw: np.ndarray, net: Network, lo: float = 0.0, hi: float = 1.0) -> Dict[int, List[List[float]]]:
    return ControlEncoder(net, "beta", lo, hi).decode(raw)


def encode_alpha(controls: ControlSet, net: Network) -> np.ndarray:
    return ControlEncoder(net, "alpha").encode(controls)


def encode_beta(controls: ControlSet, net: Network) -> np.ndarray:
    return ControlEncoder(net, "beta", controls.beta_lo, controls.beta_hi).encode(controls)
