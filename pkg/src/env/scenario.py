import logging
import math

import numpy as np

from ..errors import ScenarioError
from .channel import rsrp_matrix
from .types import ChannelParams, Scenario, SmallCell, User, DEFAULT_N_PRB, DEFAULT_TX_POWER_DBM

logger = logging.getLogger(__name__)


def generate_scenario(seed, n_sbs=12, n_users=200, area_side=300.0, demand=112_000.0,
                      channel=None, tx_power=DEFAULT_TX_POWER_DBM, n_prb=DEFAULT_N_PRB):
    """Draw a random layout: uniform SBS/user placement, strongest-RSRP association.

    Identical arguments give a bit-identical scenario.
    """
    if n_sbs < 1:
        raise ScenarioError("n_sbs must be >= 1")
    if n_users < 0:
        raise ScenarioError("n_users must be >= 0")
    if not area_side > 0:
        raise ScenarioError("area_side must be > 0")

    channel = channel or ChannelParams()
    rng = np.random.default_rng(seed)

    sbs_xy = rng.uniform(0.0, area_side, size=(n_sbs, 2))
    user_xy = rng.uniform(0.0, area_side, size=(n_users, 2))
    speeds = rng.uniform(1.0, 10.0, size=n_users)
    headings = rng.uniform(0.0, 2 * math.pi, size=n_users)
    shadowing = rng.normal(0.0, channel.shadow_sigma, size=(n_users, n_sbs))

    tx = np.full(n_sbs, float(tx_power))
    serving = np.argmax(rsrp_matrix(user_xy, sbs_xy, tx, shadowing, channel), axis=1) \
        if n_users else np.zeros(0, dtype=int)

    cells = tuple(
        SmallCell(id=i, position=(float(x), float(y)), tx_power=float(tx_power), n_prb=int(n_prb))
        for i, (x, y) in enumerate(sbs_xy)
    )
    users = tuple(
        User(
            id=u,
            position=(float(user_xy[u, 0]), float(user_xy[u, 1])),
            speed=float(speeds[u]),
            heading=float(headings[u]),
            demand=float(demand),
            serving_cell=int(serving[u]),
            shadowing=tuple(float(s) for s in shadowing[u]),
        )
        for u in range(n_users)
    )
    return Scenario(sbs_list=cells, users=users, area_side=float(area_side), channel=channel, seed=int(seed))


class ScenarioLoader:
    """Line-oriented text snapshots of a Scenario.

    Format (whitespace separated, floats written with repr so reloads are exact):
        AREA <area_side> <seed>
        SBS  <id> <x> <y> <tx_power> <n_prb>
        USER <id> <x> <y> <demand> <speed> <heading> <serving> <shadow_0> ... <shadow_N-1>
    """

    def save(self, scenario, path):
        lines = [f"AREA {scenario.area_side!r} {scenario.seed}"]
        for c in scenario.sbs_list:
            lines.append(f"SBS {c.id} {c.position[0]!r} {c.position[1]!r} {c.tx_power!r} {c.n_prb}")
        for u in scenario.users:
            shadow = " ".join(repr(s) for s in u.shadowing)
            lines.append(
                f"USER {u.id} {u.position[0]!r} {u.position[1]!r} {u.demand!r} "
                f"{u.speed!r} {u.heading!r} {u.serving_cell} {shadow}"
            )
        with open(path, "w") as f:
            f.write("\n".join(lines) + "\n")
        logger.debug(f"💾 [Scenario] Saved {scenario.n_sbs} SBSs / {scenario.n_users} users to {path}")

    def load(self, path, channel=None):
        area, seed = None, 0
        cells, users = [], []
        with open(path) as f:
            for lineno, raw in enumerate(f, start=1):
                parts = raw.split()
                if not parts or parts[0].startswith("#"):
                    continue
                try:
                    kind = parts[0]
                    if kind == "AREA":
                        area, seed = float(parts[1]), int(parts[2])
                    elif kind == "SBS":
                        cells.append(SmallCell(
                            id=int(parts[1]),
                            position=(float(parts[2]), float(parts[3])),
                            tx_power=float(parts[4]),
                            n_prb=int(parts[5]),
                        ))
                    elif kind == "USER":
                        users.append(User(
                            id=int(parts[1]),
                            position=(float(parts[2]), float(parts[3])),
                            demand=float(parts[4]),
                            speed=float(parts[5]),
                            heading=float(parts[6]),
                            serving_cell=int(parts[7]),
                            shadowing=tuple(float(s) for s in parts[8:]),
                        ))
                    else:
                        raise ScenarioError(f"unknown record type {kind!r}")
                except (IndexError, ValueError) as e:
                    raise ScenarioError(f"{path}:{lineno}: malformed record ({e})") from e

        if area is None:
            raise ScenarioError(f"{path}: missing AREA record")
        logger.debug(f"📂 [Scenario] Loaded {len(cells)} SBSs / {len(users)} users from {path}")
        return Scenario(sbs_list=tuple(cells), users=tuple(users), area_side=area,
                        channel=channel or ChannelParams(), seed=seed)
