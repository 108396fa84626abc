"""Monte Carlo drops of gNBs, repeaters and UEs inside the sounder footprint.

Seeding
-------
Each trial gets ``trial_seed = splitmix64(master_seed + (trial_index + 1) * GAMMA)``
(mod 2**64), i.e. the ``trial_index + 1``-th output of a SplitMix64 generator
whose state starts at ``master_seed``. Every emitter class then draws from its
own PCG64 stream seeded with ``SeedSequence([trial_seed, stream_id])``, so
adding repeaters never perturbs gNB or UE draws and paired runs that differ
only in the repeater factor share their gNB and UE layouts.

Placement
---------
gNB counts are Poisson with mean ``density * footprint_area``; positions are
uniform in the footprint disc via radial inversion (r = R*sqrt(u)). Repeaters
and UEs are uniform in their cell disc around the gNB, clipped to the
footprint by redrawing the points that fall outside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .antenna import TxAntenna
from .emitters import (
    EmitterKind,
    EmitterNode,
    assign_oobe_trp,
    coupling_loss,
    ue_transmit_power_db,
)
from .errors import InvalidArgumentError
from .geometry import GroundPoint, SounderGeometry
from .scenario import DuplexMode, Scenario, UeAttach
from .units import DecibelPower

RNG_ALGORITHM = "splitmix64-trial-seed/SeedSequence/PCG64"

SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1

# downstream beams point somewhere inside a 120 deg sector, slightly below the horizon
SECTOR_HALF_WIDTH_DEG = 60.0
DOWNSTREAM_STEER_THETA_DEG = (90.0, 100.0)

STREAM_GNB = 1
STREAM_REPEATER = 2
STREAM_UE = 3


def splitmix64(x: int) -> int:
    z = (x + SPLITMIX_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def trial_seed(master_seed: int, trial_index: int) -> int:
    return splitmix64((master_seed + trial_index * SPLITMIX_GAMMA) & _MASK64)


def stream(seed: int, stream_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream_id])))


@dataclass
class EmitterTable:
    """Column-oriented emitter storage used by the vectorised evaluator.

    ``antennas`` holds the distinct antenna descriptions and ``antenna_id``
    indexes into it. ``serving_x``/``serving_y`` are NaN for emitters without
    a serving node.
    """

    kind: np.ndarray
    x: np.ndarray
    y: np.ndarray
    oobe_dbm: np.ndarray
    l_pwrctl_db: np.ndarray
    panel_azimuth_deg: np.ndarray
    steer_theta_deg: np.ndarray
    steer_phi_deg: np.ndarray
    serving_x: np.ndarray
    serving_y: np.ndarray
    active: np.ndarray
    high_power: np.ndarray
    antenna_id: np.ndarray
    antennas: tuple = ()
    ref_bandwidth_hz: float = 200e6

    def __len__(self):
        return len(self.kind)

    @classmethod
    def empty(cls, ref_bandwidth_hz=200e6):
        f = np.zeros(0)
        return cls(np.zeros(0, dtype=np.int8), f, f, f, f, f, f, f, f, f,
                   np.zeros(0, dtype=bool), np.zeros(0, dtype=bool),
                   np.zeros(0, dtype=np.int16), (), ref_bandwidth_hz)

    @classmethod
    def build(cls, kind, x, y, oobe_dbm, antenna: TxAntenna, ref_bandwidth_hz, *,
              l_pwrctl_db=0.0, panel_azimuth_deg=0.0, steer_theta_deg=90.0, steer_phi_deg=0.0,
              serving_x=np.nan, serving_y=np.nan, active=True, high_power=False):
        n = len(x)

        def col(v, dtype=float):
            return np.broadcast_to(np.asarray(v, dtype=dtype), (n,)).copy()

        return cls(
            kind=col(int(kind), np.int8), x=col(x), y=col(y), oobe_dbm=col(oobe_dbm),
            l_pwrctl_db=col(l_pwrctl_db), panel_azimuth_deg=col(panel_azimuth_deg),
            steer_theta_deg=col(steer_theta_deg), steer_phi_deg=col(steer_phi_deg),
            serving_x=col(serving_x), serving_y=col(serving_y), active=col(active, bool),
            high_power=col(high_power, bool), antenna_id=np.zeros(n, dtype=np.int16),
            antennas=(antenna,), ref_bandwidth_hz=ref_bandwidth_hz,
        )

    @classmethod
    def concat(cls, tables: Sequence["EmitterTable"]) -> "EmitterTable":
        tables = [t for t in tables if len(t)]
        if not tables:
            return cls.empty()
        antennas: list = []
        ids = []
        for t in tables:
            remap = []
            for a in t.antennas:
                if a not in antennas:
                    antennas.append(a)
                remap.append(antennas.index(a))
            ids.append(np.asarray(remap, dtype=np.int16)[t.antenna_id])
        names = ["kind", "x", "y", "oobe_dbm", "l_pwrctl_db", "panel_azimuth_deg",
                 "steer_theta_deg", "steer_phi_deg", "serving_x", "serving_y", "active", "high_power"]
        cols = {n: np.concatenate([getattr(t, n) for t in tables]) for n in names}
        return cls(**cols, antenna_id=np.concatenate(ids), antennas=tuple(antennas),
                   ref_bandwidth_hz=tables[0].ref_bandwidth_hz)

    @classmethod
    def from_nodes(cls, nodes: Sequence[EmitterNode]) -> "EmitterTable":
        if not nodes:
            return cls.empty()
        bw = nodes[0].oobe_trp.ref_bandwidth_hz
        parts = []
        for e in nodes:
            if e.oobe_trp.ref_bandwidth_hz != bw:
                raise InvalidArgumentError("all emitters must share one reference bandwidth")
            sp = e.serving_position
            parts.append(cls.build(
                e.kind, [e.position.x_km], [e.position.y_km], e.oobe_trp.dbm, e.antenna, bw,
                l_pwrctl_db=e.l_pwrctl_db, panel_azimuth_deg=e.panel_azimuth_deg,
                steer_theta_deg=e.steer_theta_deg, steer_phi_deg=e.steer_phi_deg,
                serving_x=np.nan if sp is None else sp.x_km,
                serving_y=np.nan if sp is None else sp.y_km,
                active=e.active, high_power=e.high_power,
            ))
        return cls.concat(parts)

    def to_nodes(self) -> list[EmitterNode]:
        out = []
        for i in range(len(self)):
            sp = None
            if not np.isnan(self.serving_x[i]):
                sp = GroundPoint(float(self.serving_x[i]), float(self.serving_y[i]))
            out.append(EmitterNode(
                kind=EmitterKind(int(self.kind[i])),
                position=GroundPoint(float(self.x[i]), float(self.y[i])),
                oobe_trp=DecibelPower(float(self.oobe_dbm[i]), self.ref_bandwidth_hz),
                antenna=self.antennas[self.antenna_id[i]],
                serving_position=sp,
                active=bool(self.active[i]),
                panel_azimuth_deg=float(self.panel_azimuth_deg[i]),
                steer_theta_deg=float(self.steer_theta_deg[i]),
                steer_phi_deg=float(self.steer_phi_deg[i]),
                l_pwrctl_db=float(self.l_pwrctl_db[i]),
                high_power=bool(self.high_power[i]),
            ))
        return out

    def subset(self, mask) -> "EmitterTable":
        names = ["kind", "x", "y", "oobe_dbm", "l_pwrctl_db", "panel_azimuth_deg",
                 "steer_theta_deg", "steer_phi_deg", "serving_x", "serving_y", "active",
                 "high_power", "antenna_id"]
        return EmitterTable(**{n: getattr(self, n)[mask] for n in names},
                            antennas=self.antennas, ref_bandwidth_hz=self.ref_bandwidth_hz)


@dataclass
class TrialDeployment:
    table: EmitterTable
    trial_index: int = 0
    trial_seed: int = 0
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.counts:
            self.counts = {k: int(np.count_nonzero(self.table.kind == k)) for k in EmitterKind}

    @property
    def emitters(self) -> list[EmitterNode]:
        return self.table.to_nodes()

    @classmethod
    def from_emitters(cls, nodes: Sequence[EmitterNode], trial_index: int = 0) -> "TrialDeployment":
        return cls(EmitterTable.from_nodes(nodes), trial_index=trial_index)

    def count(self, kind: EmitterKind) -> int:
        return self.counts[EmitterKind(kind)]


# --------------------------------------------------------------------------
# drops


def _uniform_disc(rng, n, radius):
    r = radius * np.sqrt(rng.random(n))
    a = 2.0 * math.pi * rng.random(n)
    return r * np.cos(a), r * np.sin(a)


def drop_gnbs(s: Scenario, rng: np.random.Generator) -> np.ndarray:
    """gNB positions as an ``(n, 2)`` array of (x_km, y_km)."""
    g = s.geometry
    n = int(rng.poisson(s.gnb_density_per_km2 * g.area_km2))
    x, y = _uniform_disc(rng, n, g.footprint_radius_km)
    return np.column_stack([x, y])


def _drop_around(centres, per_centre, radius, rng, geometry: SounderGeometry | None):
    """``per_centre`` uniform points in a disc around each centre, centre-major order."""
    centres = np.asarray(centres, dtype=float).reshape(-1, 2)
    cx = np.repeat(centres[:, 0], per_centre)
    cy = np.repeat(centres[:, 1], per_centre)
    dx, dy = _uniform_disc(rng, len(cx), radius)
    x, y = cx + dx, cy + dy
    if geometry is not None:
        r2 = geometry.footprint_radius_km**2
        outside = np.flatnonzero(x * x + y * y > r2)
        while outside.size:
            dx, dy = _uniform_disc(rng, outside.size, radius)
            x[outside] = cx[outside] + dx
            y[outside] = cy[outside] + dy
            outside = outside[x[outside] ** 2 + y[outside] ** 2 > r2]
    return np.column_stack([x, y])


def drop_repeaters(gnbs, f: int, cell_radius_km: float, rng: np.random.Generator,
                   geometry: SounderGeometry | None = None) -> np.ndarray:
    """Exactly ``f`` repeaters per gNB; rows ``i*f .. i*f+f-1`` belong to gNB ``i``."""
    if f < 0:
        raise InvalidArgumentError(f"repeater factor must be >= 0, got {f}")
    return _drop_around(gnbs, f, cell_radius_km, rng, geometry)


@dataclass
class UeDrop:
    ues: EmitterTable
    relays: EmitterTable
    serving_node: np.ndarray  # 0 = own gNB, k >= 1 = k-th repeater of that gNB
    cell: np.ndarray  # index of the gNB whose cell the UE was dropped in

    @property
    def upstream(self) -> EmitterTable:
        return EmitterTable.concat([self.ues, self.relays])


def drop_ues(gnbs, repeaters, s: Scenario, rng: np.random.Generator) -> UeDrop:
    gnbs = np.asarray(gnbs, dtype=float).reshape(-1, 2)
    repeaters = np.asarray(repeaters, dtype=float).reshape(-1, 2)
    n_g = len(gnbs)
    f = len(repeaters) // n_g if n_g else 0
    if n_g and len(repeaters) != f * n_g:
        raise InvalidArgumentError("repeater count must be a multiple of the gNB count")
    bw = s.ref_bandwidth_hz
    pos = _drop_around(gnbs, s.ues_per_gnb, s.cell_radius_km, rng, s.geometry)
    n = len(pos)
    high_power = rng.random(n) < s.high_power_ue_fraction
    cell = np.repeat(np.arange(n_g), s.ues_per_gnb)

    # candidate nodes per UE: column 0 is the gNB, columns 1..f its repeaters
    nodes = np.empty((n, 1 + f, 2))
    nodes[:, 0, :] = gnbs[cell]
    if f:
        nodes[:, 1:, :] = repeaters.reshape(n_g, f, 2)[cell]
    dist = np.hypot(nodes[..., 0] - pos[:, None, 0], nodes[..., 1] - pos[:, None, 1])
    if s.ue_attach is UeAttach.REPEATER and f:
        serving = 1 + np.argmin(dist[:, 1:], axis=1)
    else:
        serving = np.argmin(dist, axis=1)  # argmin returns the first (lowest) index on ties
    rows = np.arange(n)
    sx = nodes[rows, serving, 0]
    sy = nodes[rows, serving, 1]
    d_serv = dist[rows, serving]

    cl = coupling_loss(s.link_frequency_hz, d_serv, s.l_other_db.ue)
    l_pc = np.zeros(n)
    oobe = np.zeros(n)
    for flag, pc in ((False, s.power_control), (True, s.high_power_power_control)):
        m = high_power == flag
        if not m.any():
            continue
        _, l_pc[m] = ue_transmit_power_db(pc, cl[m])
        oobe[m] = assign_oobe_trp(EmitterKind.UE, s.oobe_limits, bw,
                                  ue_p_max_dbm=pc.p_max_dbm, high_power=flag).dbm

    ues = EmitterTable.build(
        EmitterKind.UE, pos[:, 0], pos[:, 1], oobe, s.antennas.ue, bw,
        l_pwrctl_db=l_pc,
        panel_azimuth_deg=np.degrees(np.arctan2(sy - pos[:, 1], sx - pos[:, 0])),
        serving_x=sx, serving_y=sy, high_power=high_power,
    )

    relays = EmitterTable.empty(bw)
    if s.repeaters_relay_upstream and f:
        via = serving > 0
        donor = gnbs[cell[via]]
        rx, ry = sx[via], sy[via]
        relays = EmitterTable.build(
            EmitterKind.REPEATER_UP, rx, ry, oobe[via], s.antennas.repeater_or_gnb, bw,
            l_pwrctl_db=l_pc[via],
            panel_azimuth_deg=np.degrees(np.arctan2(donor[:, 1] - ry, donor[:, 0] - rx)),
            serving_x=donor[:, 0], serving_y=donor[:, 1], high_power=high_power[via],
        )
    return UeDrop(ues, relays, serving, cell)


def _downstream_table(kind, pos, s: Scenario, rng, antenna: TxAntenna, serving=None):
    n = len(pos)
    oobe = assign_oobe_trp(kind, s.oobe_limits, s.ref_bandwidth_hz).dbm
    panel = rng.uniform(-180.0, 180.0, n)
    steer_phi = rng.uniform(-SECTOR_HALF_WIDTH_DEG, SECTOR_HALF_WIDTH_DEG, n)
    steer_theta = rng.uniform(*DOWNSTREAM_STEER_THETA_DEG, n)
    sx = sy = np.nan
    if serving is not None:
        sx, sy = serving[:, 0], serving[:, 1]
    return EmitterTable.build(kind, pos[:, 0], pos[:, 1], oobe, antenna, s.ref_bandwidth_hz,
                              panel_azimuth_deg=panel, steer_theta_deg=steer_theta,
                              steer_phi_deg=steer_phi, serving_x=sx, serving_y=sy)


def _activity(rng, n, loading, gate):
    on = rng.random(n) < loading
    gated = rng.random(n) < gate
    return on & gated


def _gates(s: Scenario):
    down = s.tdd_downlink_fraction if s.duplex_mode in (DuplexMode.DOWNSTREAM, DuplexMode.BOTH) else 0.0
    up = 1.0 - s.tdd_downlink_fraction if s.duplex_mode in (DuplexMode.UPSTREAM, DuplexMode.BOTH) else 0.0
    return down, up


def generate_trial(s: Scenario, trial_index: int) -> TrialDeployment:
    """Build one trial's emitters; a pure function of (scenario, trial_index)."""
    if not 0 <= trial_index < s.trials:
        raise InvalidArgumentError(f"trial_index {trial_index} outside [0, {s.trials})")
    seed = trial_seed(s.master_seed, trial_index)
    g_rng = stream(seed, STREAM_GNB)
    r_rng = stream(seed, STREAM_REPEATER)
    u_rng = stream(seed, STREAM_UE)
    gate_down, gate_up = _gates(s)
    f = s.repeater_factor_f

    gnb_pos = drop_gnbs(s, g_rng)
    gnbs = _downstream_table(EmitterKind.GNB, gnb_pos, s, g_rng, s.antennas.gnb)
    gnbs.active = _activity(g_rng, len(gnbs), s.network_loading, gate_down)

    rep_pos = drop_repeaters(gnb_pos, f, s.cell_radius_km, r_rng, s.geometry)
    reps = _downstream_table(EmitterKind.REPEATER_DOWN, rep_pos, s, r_rng,
                             s.antennas.repeater_or_gnb, serving=np.repeat(gnb_pos, f, axis=0))
    reps.active = _activity(r_rng, len(reps), s.network_loading, gate_down)

    drop = drop_ues(gnb_pos, rep_pos, s, u_rng)
    ue_active = _activity(u_rng, len(drop.ues), s.network_loading, gate_up)
    drop.ues.active = ue_active
    # a relayed transmission is on air exactly when the UE it carries is
    drop.relays.active = ue_active[drop.serving_node > 0] if len(drop.relays) else drop.relays.active

    table = EmitterTable.concat([gnbs, reps, drop.ues, drop.relays])
    if not len(table):
        table = EmitterTable.empty(s.ref_bandwidth_hz)
    return TrialDeployment(table, trial_index=trial_index, trial_seed=seed)
