"""Feasibility checks for networks and controls. Reports problems, never raises."""

from collections import defaultdict
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from src.errors import ConfigurationError
from src.network.model import ControlSet, Network

STOCHASTIC_TOL = 1e-12


class Violation(BaseModel):
    """One broken invariant."""

    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class ValidationReport(BaseModel):
    """Outcome of validate_network; empty iff every invariant holds."""

    violations: List[Violation] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code: str, message: str) -> None:
        self.violations.append(Violation(code=code, message=message))

    def codes(self) -> List[str]:
        return [v.code for v in self.violations]

    def __len__(self) -> int:
        return len(self.violations)

    def raise_if_invalid(self) -> None:
        if self.violations:
            raise ConfigurationError(
                "network validation failed", violations=[str(v) for v in self.violations]
            )


def validate_network(net: Network, controls: Optional[ControlSet] = None) -> ValidationReport:
    """
    Check topology, boundary data, initial densities and (optionally) controls.

    Args:
        net: Network to check
        controls: Optional control set checked against the junction arities

    Returns:
        ValidationReport listing every violation found
    """
    report = ValidationReport()
    road_ids = [r.id for r in net.roads]
    known = set(road_ids)

    for rid in {r for r in road_ids if road_ids.count(r) > 1}:
        report.add("duplicate road id", f"road {rid} defined more than once")
    junction_ids = [j.id for j in net.junctions]
    for jid in {j for j in junction_ids if junction_ids.count(j) > 1}:
        report.add("duplicate junction id", f"junction {jid} defined more than once")

    # endpoint attachments: start of a road feeds from a junction or an inflow,
    # end of a road drains into a junction or an outflow
    start_attach: Dict[int, List[str]] = defaultdict(list)
    end_attach: Dict[int, List[str]] = defaultdict(list)

    for j in net.junctions:
        if not j.incoming or not j.outgoing:
            report.add("empty junction", f"junction {j.id} needs incoming and outgoing roads")
        shared = set(j.incoming) & set(j.outgoing)
        if shared:
            report.add(
                "junction loop",
                f"junction {j.id} lists roads {sorted(shared)} as both incoming and outgoing",
            )
        for rid in j.incoming:
            if rid not in known:
                report.add("unknown road", f"junction {j.id} references missing road {rid}")
            end_attach[rid].append(f"junction {j.id}")
        for rid in j.outgoing:
            if rid not in known:
                report.add("unknown road", f"junction {j.id} references missing road {rid}")
            start_attach[rid].append(f"junction {j.id}")

    for inflow in net.inflows:
        if inflow.road not in known:
            report.add("unknown road", f"inflow references missing road {inflow.road}")
            continue
        start_attach[inflow.road].append("inflow")
        capacity = net.road(inflow.road).fd.capacity
        if inflow.cap_in > capacity * (1 + 1e-12):
            report.add(
                "entry capacity too large",
                f"inflow on road {inflow.road}: cap_in {inflow.cap_in} exceeds capacity {capacity}",
            )
        if inflow.f_in.minimum() < 0:
            report.add("negative inflow", f"inflow on road {inflow.road} has negative f_in")

    for outflow in net.outflows:
        if outflow.road not in known:
            report.add("unknown road", f"outflow references missing road {outflow.road}")
            continue
        end_attach[outflow.road].append("outflow")
        if outflow.f_out.minimum() < 0:
            report.add("negative outflow", f"outflow on road {outflow.road} has negative f_out")

    for rid in road_ids:
        for side, attach in (("start", start_attach[rid]), ("end", end_attach[rid])):
            if not attach:
                report.add("dangling endpoint", f"road {rid} {side} is not attached")
            elif len(attach) > 1:
                report.add(
                    "road multiply attached",
                    f"road {rid} {side} attached to {', '.join(attach)}",
                )

    for rid, spec in net.rho0.items():
        if rid not in known:
            report.add("unknown road", f"rho0 given for missing road {rid}")
            continue
        values = np.atleast_1d(np.asarray(spec, dtype=float))
        rho_max = net.road(rid).fd.rho_max
        if np.any(values < 0) or np.any(values > rho_max):
            report.add("initial density out of range", f"rho0 on road {rid} outside [0, {rho_max}]")

    if controls is not None:
        for violation in check_controls(net, controls):
            report.violations.append(violation)

    return report


def check_controls(net: Network, controls: ControlSet) -> List[Violation]:
    """Shapes, stochasticity and bounds of alpha and beta."""
    found: List[Violation] = []
    lo, hi = controls.beta_lo, controls.beta_hi
    for j in net.junctions:
        n_in, n_out = len(j.incoming), len(j.outgoing)
        try:
            alpha = controls.alpha_matrix(j)
            beta = controls.beta_matrix(j)
        except ConfigurationError as e:
            found.append(Violation(code="control shape", message=e.message))
            continue

        if np.any(alpha < 0) or np.any(alpha > 1):
            found.append(Violation(code="preference out of range", message=f"alpha at junction {j.id} outside [0, 1]"))
        for k in range(n_in):
            if abs(alpha[:, k].sum() - 1.0) > STOCHASTIC_TOL:
                found.append(
                    Violation(
                        code="preference row not stochastic",
                        message=f"alpha at junction {j.id} for incoming road {j.incoming[k]} sums to {alpha[:, k].sum():.12g}",
                    )
                )

        for l in range(n_out):
            if abs(beta[:, l].sum() - 1.0) > STOCHASTIC_TOL:
                found.append(
                    Violation(
                        code="capacity column not stochastic",
                        message=f"beta at junction {j.id} for outgoing road {j.outgoing[l]} sums to {beta[:, l].sum():.12g}",
                    )
                )
        # a single incoming road is forced to 1 and exempt from the bounds
        if n_in > 1 and (np.any(beta < lo - STOCHASTIC_TOL) or np.any(beta > hi + STOCHASTIC_TOL)):
            found.append(
                Violation(code="capacity out of bounds", message=f"beta at junction {j.id} outside [{lo}, {hi}]")
            )
    return found


def check_beta_bounds(net: Network, beta_lo: float, beta_hi: float) -> List[str]:
    """Junctions whose incoming count makes the bounds infeasible (lo*n <= 1 <= hi*n)."""
    problems = []
    for j in net.junctions:
        n = len(j.incoming)
        if n < 2:
            continue
        if beta_lo * n > 1 + STOCHASTIC_TOL or beta_hi * n < 1 - STOCHASTIC_TOL:
            problems.append(
                f"junction {j.id}: beta bounds ({beta_lo}, {beta_hi}) infeasible for "
                f"{n} incoming roads (need lo*{n} <= 1 <= hi*{n})"
            )
    return problems
