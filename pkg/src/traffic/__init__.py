"""LWR network traffic simulation."""

from src.traffic.fluxes import (
    exact_riemann,
    godunov_flux,
    inflow_flux,
    junction_fluxes,
    outflow_flux,
)
from src.traffic.layout import Discretization, NetworkLayout
from src.traffic.simulator import (
    TrafficModel,
    TrafficState,
    TrafficTrajectory,
    simulate,
    step,
)

__all__ = [
    "Discretization",
    "NetworkLayout",
    "godunov_flux",
    "junction_fluxes",
    "inflow_flux",
    "outflow_flux",
    "exact_riemann",
    "TrafficState",
    "TrafficTrajectory",
    "TrafficModel",
    "step",
    "simulate",
]
