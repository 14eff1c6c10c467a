"""Downtown Phoenix benchmark: 60 roads, 14 signalised junctions.

Roads 1-11 are inlets and 12-22 outlets. Each junction serves one
incoming road per phase, cycling through its incoming roads in the
listed order, so junctions have 3 or 4 phases and n_c = 12.
"""

from typing import Any, Dict, List, Optional, Tuple

from .config import NoirConfig
from .scenario import Scenario

STEPS = 60
NET_INFLOW = 50.0
FD = {"z_max": 20.0, "rho_min": 20.0, "rho_mid": 40.0, "rho_max": 55.0}
# Outlets discharge a quarter of their density per step; red lights leak 30%
DYNAMICS = {"p_off": 0.3, "p_outlet": 0.25}

# (street, from cross street, to cross street, direction)
ROADS: Dict[int, Tuple[str, str, str, str]] = {
    1: ("N 10th St", "E McKinley St", "E Pierce St", "S"),
    2: ("N 11th St", "E McKinley St", "E Pierce St", "S"),
    3: ("E Fillmore St", "N 12th St", "N 13th St", "W"),
    4: ("E Pierce St", "N 12th St", "N 13th St", "W"),
    5: ("E Taylor St", "N 12th St", "N 13th St", "W"),
    6: ("E Fillmore St", "N 7th St", "N 9th St", "E"),
    7: ("N 9th St", "E Taylor St", "E Polk St", "N"),
    8: ("N 11th St", "E Taylor St", "E Polk St", "N"),
    9: ("N 12th St", "E McKinley St", "E Pierce St", "S"),
    10: ("E Pierce St", "N 7th St", "N 9th St", "E"),
    11: ("N 10th St", "E Taylor St", "E Polk St", "N"),
    12: ("E Fillmore St", "N 7th St", "N 9th St", "W"),
    13: ("N 9th St", "E Taylor St", "E Polk St", "S"),
    14: ("N 11th St", "E Taylor St", "E Polk St", "S"),
    15: ("N 12th St", "E McKinley St", "E Pierce St", "N"),
    16: ("E Pierce St", "N 7th St", "N 9th St", "W"),
    17: ("N 10th St", "E Taylor St", "E Polk St", "S"),
    18: ("N 10th St", "E McKinley St", "E Pierce St", "N"),
    19: ("N 11th St", "E McKinley St", "E Pierce St", "N"),
    20: ("E Fillmore St", "N 12th St", "N 13th St", "E"),
    21: ("E Pierce St", "N 12th St", "N 13th St", "E"),
    22: ("E Taylor St", "N 12th St", "N 13th St", "E"),
    23: ("N 9th St", "E Fillmore St", "E Taylor St", "S"),
    24: ("N 9th St", "E Fillmore St", "E Taylor St", "S"),
    25: ("N 9th St", "E Pierce St", "E Fillmore St", "S"),
    26: ("N 11th St", "E Fillmore St", "E Taylor St", "S"),
    27: ("N 11th St", "E Pierce St", "E Fillmore St", "S"),
    28: ("N 12th St", "E Pierce St", "E Fillmore St", "N"),
    29: ("N 12th St", "E Fillmore St", "E Taylor St", "N"),
    30: ("E Fillmore St", "N 9th St", "N 10th St", "W"),
    31: ("E Fillmore St", "N 10th St", "N 11th St", "W"),
    32: ("E Fillmore St", "N 11th St", "N 12th St", "W"),
    33: ("E Pierce St", "N 9th St", "N 10th St", "W"),
    34: ("E Pierce St", "N 10th St", "N 11th St", "W"),
    35: ("E Pierce St", "N 10th St", "N 11th St", "W"),
    36: ("E Pierce St", "N 11th St", "N 12th St", "W"),
    37: ("N 10th St", "E Fillmore St", "E Taylor St", "S"),
    38: ("N 10th St", "E Pierce St", "E Fillmore St", "S"),
    39: ("E Taylor St", "N 9th St", "N 10th St", "W"),
    40: ("E Taylor St", "N 10th St", "N 11th St", "W"),
    41: ("E Taylor St", "N 11th St", "N 12th St", "W"),
    42: ("N 9th St", "E Fillmore St", "E Taylor St", "N"),
    43: ("N 9th St", "E Fillmore St", "E Taylor St", "N"),
    44: ("N 9th St", "E Pierce St", "E Fillmore St", "N"),
    45: ("N 11th St", "E Fillmore St", "E Taylor St", "N"),
    46: ("N 11th St", "E Pierce St", "E Fillmore St", "N"),
    47: ("N 12th St", "E Pierce St", "E Fillmore St", "S"),
    48: ("N 12th St", "E Fillmore St", "E Taylor St", "S"),
    49: ("E Fillmore St", "N 9th St", "N 10th St", "E"),
    50: ("E Fillmore St", "N 10th St", "N 11th St", "E"),
    51: ("E Fillmore St", "N 11th St", "N 12th St", "E"),
    52: ("E Pierce St", "N 9th St", "N 10th St", "E"),
    53: ("E Pierce St", "N 10th St", "N 11th St", "E"),
    54: ("E Pierce St", "N 10th St", "N 11th St", "E"),
    55: ("E Pierce St", "N 11th St", "N 12th St", "E"),
    56: ("N 10th St", "E Fillmore St", "E Taylor St", "N"),
    57: ("N 10th St", "E Pierce St", "E Fillmore St", "N"),
    58: ("E Taylor St", "N 9th St", "N 10th St", "E"),
    59: ("E Taylor St", "N 10th St", "N 11th St", "E"),
    60: ("E Taylor St", "N 11th St", "N 12th St", "E"),
}

# junction id -> (incoming roads in phase order, outgoing roads)
JUNCTIONS: Dict[int, Tuple[Tuple[int, ...], Tuple[int, ...]]] = {
    1: ((1, 34, 52), (33, 53, 18)),
    2: ((48, 5, 60), (29, 41, 22)),
    3: ((47, 3, 29, 51), (48, 28, 32, 20)),
    4: ((9, 4, 28, 55), (15, 47, 36, 21)),
    5: ((25, 30, 43), (24, 44, 49)),
    6: ((38, 31, 56, 49), (37, 57, 30, 50)),
    7: ((27, 32, 45, 50), (26, 46, 31, 51)),
    8: ((24, 42, 6), (23, 43, 12)),
    9: ((23, 39, 7), (42, 58, 13)),
    10: ((33, 44, 10), (25, 52, 16)),
    11: ((26, 41, 8, 59), (14, 45, 40, 60)),
    12: ((2, 36, 46, 54), (19, 27, 35, 55)),
    13: ((35, 57, 53), (34, 54, 38)),
    14: ((37, 40, 11, 58), (17, 56, 39, 59)),
}

# Opposite directions of one street segment
TWINS: Tuple[Tuple[int, int], ...] = (
    (23, 42), (24, 43), (25, 44), (26, 45), (27, 46), (28, 47), (29, 48),
    (30, 49), (31, 50), (32, 51), (33, 52), (34, 53), (35, 54), (36, 55),
    (37, 56), (38, 57), (39, 58), (40, 59), (41, 60),
)

# junction id -> incoming road -> outgoing roads, where the movements are
# fixed by the signal plan instead of being all-to-all
MOVEMENTS: Dict[int, Dict[int, Tuple[int, ...]]] = {
    12: {
        2: (27, 35, 55),
        36: (19, 27, 35, 55),
        46: (19, 27, 35, 55),
        54: (19, 27, 35, 55),
    },
}


def road_name(road: int) -> str:
    street, start, end, _ = ROADS[road]
    return f"{street} ({start} - {end})"


def phoenix_edges() -> List[Tuple[int, int]]:
    """Movements of every junction.

    Junctions listed in MOVEMENTS use their fixed movements; the others feed
    every outgoing road from every incoming road. A U-turn between twins is
    dropped elsewhere when its reverse is a fixed movement, otherwise it is
    kept only as i -> j with i < j.
    """
    twin_of = {a: b for a, b in TWINS}
    twin_of.update({b: a for a, b in TWINS})
    fixed = {(i, j) for movements in MOVEMENTS.values()
             for i, targets in movements.items() for j in targets}
    edges = set(fixed)
    for junction, (incoming, outgoing) in JUNCTIONS.items():
        if junction in MOVEMENTS:
            continue
        for i in incoming:
            for j in outgoing:
                if twin_of.get(i) == j and ((j, i) in fixed or i > j):
                    continue
                edges.add((i, j))
    return sorted(edges)


def phoenix_document(steps: int = STEPS, u0: float = NET_INFLOW) -> Dict[str, Any]:
    """Scenario document of the benchmark; phases are given as active incoming roads."""
    return {
        "name": "phoenix",
        "roads": [{"id": road, "name": road_name(road), "direction": ROADS[road][3]}
                  for road in sorted(ROADS)],
        "edges": [list(e) for e in phoenix_edges()],
        "junctions": [
            {"id": junction, "incoming": list(incoming), "outgoing": list(outgoing),
             "r": len(incoming)}
            for junction, (incoming, outgoing) in sorted(JUNCTIONS.items())
        ],
        "phases": {
            str(junction): [{"active": [road]} for road in incoming]
            for junction, (incoming, _) in sorted(JUNCTIONS.items())
        },
        "fd": dict(FD),
        "dynamics": dict(DYNAMICS),
        "u0": u0,
        "T": steps,
        "x0": None,
    }


def phoenix_scenario(config: Optional[NoirConfig] = None, steps: int = STEPS,
                     u0: float = NET_INFLOW) -> Scenario:
    return Scenario.from_dict(phoenix_document(steps, u0), config=config)
