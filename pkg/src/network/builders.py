"""Small synthetic networks used by the shipped toy scenarios and the tests."""

from typing import Dict, List, Optional

from src.network.model import (
    BoundaryInflow,
    BoundaryOutflow,
    FundamentalDiagram,
    Junction,
    Network,
    Road,
    TimeSeries,
)


def single_road(
    length: float = 1.0,
    fd: Optional[FundamentalDiagram] = None,
    f_in: float = 0.0,
    cap_in: Optional[float] = None,
    f_out: Optional[float] = None,
    rho0=0.0,
    q0: float = 0.0,
    eps_density: float = 0.5,
    eps_queue: float = 0.45,
    eps_out: float = 0.5,
    origin=(0.0, 0.0),
) -> Network:
    """One straight road along +x with an entry queue and an exit."""
    fd = fd or FundamentalDiagram()
    x0, y0 = origin
    road = Road(
        id=1,
        polyline=[(x0, y0), (x0 + length, y0)],
        fd=fd,
        eps_density=eps_density,
    )
    return Network(
        roads=[road],
        inflows=[
            BoundaryInflow(
                road=1,
                f_in=TimeSeries.constant(f_in),
                cap_in=fd.capacity if cap_in is None else cap_in,
                q0=q0,
                eps_queue=eps_queue,
            )
        ],
        outflows=[
            BoundaryOutflow(
                road=1,
                f_out=TimeSeries.constant(fd.capacity if f_out is None else f_out),
                eps_out=eps_out,
            )
        ],
        rho0={1: rho0},
    )


def closed_loop(
    rho0: Dict[int, object] = None, fd: Optional[FundamentalDiagram] = None
) -> Network:
    """
    Two roads closing a loop through two 1-in/1-out junctions; no boundary at all.

    Road 1 runs (0,0)->(1,0)->(1,1), road 2 runs (1,1)->(0,1)->(0,0).
    """
    fd = fd or FundamentalDiagram()
    roads = [
        Road(id=1, polyline=[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)], fd=fd),
        Road(id=2, polyline=[(1.0, 1.0), (0.0, 1.0), (0.0, 0.0)], fd=fd),
    ]
    junctions = [
        Junction(id=1, incoming=[1], outgoing=[2]),
        Junction(id=2, incoming=[2], outgoing=[1]),
    ]
    return Network(roads=roads, junctions=junctions, rho0=rho0 or {})


# diamond geometry (km); entry on x = 0, exit on x = 4.5, inside [0, 4.5] x [0, 3]
DIAMOND_DOMAIN = (0.0, 0.0, 4.5, 3.0)
_SPLIT = (1.0, 1.5)
_MERGE = (3.5, 1.5)


def diamond(
    f_in: float = 720.0,
    cap_in: Optional[float] = None,
    f_out: Optional[float] = None,
    fd: Optional[FundamentalDiagram] = None,
    symmetric: bool = False,
    four_junctions: bool = False,
    eps_density: float = 0.5,
    eps_queue: float = 0.45,
    eps_out: float = 0.5,
    gamma: float = 1.0e6,
    eta: float = 3.16e-5,
) -> Network:
    """
    Two parallel routes between a split junction and a merge junction.

    Route 2 is the short northern arc. Route 3 is the southern one: a mirror image
    of route 2 when ``symmetric``, otherwise a longer detour hugging the south edge.
    The merge junction carries the only free beta entries. With
    ``four_junctions`` the entry and exit roads are each cut by a 1-in/1-out
    junction, giving roads 0..5 and junctions 0..3.
    """
    fd = fd or FundamentalDiagram()
    common = dict(fd=fd, eps_density=eps_density, gamma=gamma, eta=eta)
    entry_start, exit_end = (0.0, 1.5), (4.5, 1.5)

    north = [_SPLIT, (2.25, 2.5), _MERGE]
    if symmetric:
        south = [_SPLIT, (2.25, 0.5), _MERGE]
    else:
        south = [_SPLIT, (1.0, 0.25), (3.5, 0.25), _MERGE]

    roads: List[Road] = [
        Road.from_points(2, north, **common),
        Road.from_points(3, south, **common),
    ]
    junctions = [
        Junction(id=1, incoming=[1], outgoing=[2, 3]),
        Junction(id=2, incoming=[2, 3], outgoing=[4]),
    ]

    if four_junctions:
        roads += [
            Road.from_points(0, [entry_start, (0.5, 1.5)], **common),
            Road.from_points(1, [(0.5, 1.5), _SPLIT], **common),
            Road.from_points(4, [_MERGE, (4.0, 1.5)], **common),
            Road.from_points(5, [(4.0, 1.5), exit_end], **common),
        ]
        junctions = [Junction(id=0, incoming=[0], outgoing=[1])] + junctions
        junctions.append(Junction(id=3, incoming=[4], outgoing=[5]))
        entry_road, exit_road = 0, 5
    else:
        roads += [
            Road.from_points(1, [entry_start, _SPLIT], **common),
            Road.from_points(4, [_MERGE, exit_end], **common),
        ]
        entry_road, exit_road = 1, 4

    roads.sort(key=lambda r: r.id)
    return Network(
        roads=roads,
        junctions=junctions,
        inflows=[
            BoundaryInflow(
                road=entry_road,
                f_in=TimeSeries.constant(f_in),
                cap_in=fd.capacity if cap_in is None else cap_in,
                eps_queue=eps_queue,
            )
        ],
        outflows=[
            BoundaryOutflow(
                road=exit_road,
                f_out=TimeSeries.constant(fd.capacity if f_out is None else f_out),
                eps_out=eps_out,
            )
        ],
    )
