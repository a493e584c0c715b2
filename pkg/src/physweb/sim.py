"""Deterministic discrete-time proximity simulation.

Nodes advertise, observers scan. Signal strength follows a noiseless
log-distance path-loss model; a node is visible when its RSSI at the
observer reaches the observer's sensitivity. Nodes can sit still, follow
waypoints, or ride along with an observer (a phone acting as a tag), in
which case whatever is attached to the node moves with it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .codec import (
    IBeaconFrame,
    frame_from_dict,
    frame_to_dict,
)
from .errors import PhyswebError, SceneError
from .keys import BeaconKey, key_for_frame

REFERENCE_DISTANCE = 1.0
MIN_DISTANCE = 0.1
MAX_MONITORED_UUIDS = 20
DEFAULT_PATH_LOSS_EXPONENT = 2.0
DEFAULT_TICK_SECONDS = 1.0
DEFAULT_SENSITIVITY = -90.0
DEFAULT_TX_POWER = -59.0


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Waypoint:
    t: float
    x: float
    y: float


@dataclass(frozen=True)
class Attached:
    """Placement of a node carried by an observer."""

    observer_id: str


Placement = Union[Position, Sequence[Waypoint], Attached]


@dataclass(frozen=True)
class RadioNode:
    key: BeaconKey
    frame: object
    placement: Placement
    tx_power_1m: float = DEFAULT_TX_POWER
    id: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.placement, (Position, Attached)):
            object.__setattr__(self, "placement", tuple(self.placement))


@dataclass(frozen=True)
class ObserverDevice:
    id: str
    path: Sequence[Waypoint]
    platform: str = "open"
    sensitivity: float = DEFAULT_SENSITIVITY
    monitored_uuids: Optional[frozenset] = None

    def __post_init__(self):
        object.__setattr__(self, "path", tuple(self.path))
        if self.monitored_uuids is not None:
            object.__setattr__(self, "monitored_uuids", frozenset(bytes(u) for u in self.monitored_uuids))


@dataclass(frozen=True)
class ScanEntry:
    key: BeaconKey
    rssi: float


@dataclass(frozen=True)
class ScanResult:
    observer: str
    tick: int
    entries: tuple = ()

    def to_json(self) -> str:
        scan = [{"key": e.key.canonical, "rssi": round(e.rssi, 1)} for e in self.entries]
        return json.dumps(
            {"tick": self.tick, "observer": self.observer, "scan": scan},
            separators=(",", ":"),
            ensure_ascii=False,
        )


@dataclass(frozen=True)
class Fingerprint:
    keys: tuple = ()


@dataclass(frozen=True)
class ScenePositions:
    observers: dict
    nodes: dict  # canonical key -> Position


def _finite(*values) -> bool:
    return all(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) for v in values)


def _check_path(path, where: str) -> None:
    if not path:
        raise SceneError("EMPTY_PATH", "at least one waypoint is required", where)
    for i, wp in enumerate(path):
        if not _finite(wp.t, wp.x, wp.y):
            raise SceneError("INVALID_POSITION", "waypoint values must be finite", f"{where}/{i}")
    for i in range(1, len(path)):
        if not path[i].t > path[i - 1].t:
            raise SceneError("UNSORTED_WAYPOINTS", "timestamps must be strictly increasing", f"{where}/{i}")


@dataclass(frozen=True)
class Scene:
    """A validated simulation world. Construction raises :class:`SceneError` on any violation."""

    nodes: Sequence[RadioNode] = ()
    observers: Sequence[ObserverDevice] = ()
    path_loss_exponent: float = DEFAULT_PATH_LOSS_EXPONENT
    tick_seconds: float = DEFAULT_TICK_SECONDS
    duration_ticks: int = 1
    _observer_index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "observers", tuple(self.observers))
        self._validate()
        object.__setattr__(self, "_observer_index", {o.id: o for o in self.observers})

    def _validate(self) -> None:
        n = self.path_loss_exponent
        if not _finite(n) or not 1.5 <= n <= 6.0:
            raise SceneError("INVALID_EXPONENT", "path_loss_exponent must be in [1.5, 6.0]", "/path_loss_exponent")
        if not _finite(self.tick_seconds) or self.tick_seconds <= 0:
            raise SceneError("INVALID_TICK", "tick_seconds must be positive", "/tick_seconds")
        d = self.duration_ticks
        if isinstance(d, bool) or not isinstance(d, int) or d < 1:
            raise SceneError("INVALID_DURATION", "duration_ticks must be an integer >= 1", "/duration_ticks")

        ids = set()
        for j, obs in enumerate(self.observers):
            where = f"/observers/{j}"
            if obs.id in ids:
                raise SceneError("DUPLICATE_OBSERVER", f"observer id {obs.id!r} repeats", f"{where}/id")
            ids.add(obs.id)
            if obs.platform not in ("open", "filtered"):
                raise SceneError("INVALID_PLATFORM", "platform must be 'open' or 'filtered'", f"{where}/platform")
            if not _finite(obs.sensitivity):
                raise SceneError("INVALID_SENSITIVITY", "sensitivity must be finite", f"{where}/sensitivity")
            if obs.platform == "filtered":
                if obs.monitored_uuids is None:
                    raise SceneError(
                        "MISSING_MONITORED_UUIDS", "filtered observers must list uuids", f"{where}/monitored_uuids"
                    )
                if len(obs.monitored_uuids) > MAX_MONITORED_UUIDS:
                    raise SceneError(
                        "REGION_LIMIT_EXCEEDED",
                        f"{len(obs.monitored_uuids)} uuids monitored, limit {MAX_MONITORED_UUIDS}",
                        f"{where}/monitored_uuids",
                    )
                if any(len(u) != 16 for u in obs.monitored_uuids):
                    raise SceneError("INVALID_UUID", "monitored uuids must be 16 bytes", f"{where}/monitored_uuids")
            _check_path(obs.path, f"{where}/waypoints")

        keys = set()
        for i, node in enumerate(self.nodes):
            where = f"/nodes/{i}"
            if node.key.canonical in keys:
                raise SceneError("DUPLICATE_NODE_KEY", f"key {node.key.canonical} repeats", f"{where}/key")
            keys.add(node.key.canonical)
            if not _finite(node.tx_power_1m) or not -100 <= node.tx_power_1m <= 20:
                raise SceneError("INVALID_TX_POWER", "tx_power_1m must be in [-100, 20] dBm", f"{where}/tx_power_1m")
            p = node.placement
            if isinstance(p, Attached):
                if p.observer_id not in ids:
                    raise SceneError("UNKNOWN_OBSERVER", f"no observer {p.observer_id!r}", f"{where}/attached_to")
            elif isinstance(p, Position):
                if not _finite(p.x, p.y):
                    raise SceneError("INVALID_POSITION", "coordinates must be finite", f"{where}/position")
            else:
                _check_path(p, f"{where}/waypoints")

    def observer(self, observer_id: str) -> ObserverDevice:
        return self._observer_index[observer_id]


def path_loss_rssi(tx_power_1m: float, distance: float, n: float) -> float:
    """RSSI in dBm at ``distance`` meters: tx - 10 n log10(d / 1 m), d clamped at 0.1 m."""
    d = max(distance, MIN_DISTANCE)
    return tx_power_1m - 10.0 * n * math.log10(d / REFERENCE_DISTANCE)


def interpolate(path: Sequence[Waypoint], t: float) -> Position:
    """Linear interpolation along time-stamped waypoints, clamped at both ends."""
    if t <= path[0].t:
        return Position(path[0].x, path[0].y)
    if t >= path[-1].t:
        return Position(path[-1].x, path[-1].y)
    lo, hi = 0, len(path) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if path[mid].t <= t:
            lo = mid
        else:
            hi = mid
    a, b = path[lo], path[hi]
    f = (t - a.t) / (b.t - a.t)
    return Position(a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f)


def _check_tick(scene: Scene, tick: int) -> None:
    if isinstance(tick, bool) or not isinstance(tick, int) or not 0 <= tick < scene.duration_ticks:
        raise SceneError("TICK_OUT_OF_RANGE", f"tick {tick} outside [0, {scene.duration_ticks})", "")


def advance_scene(scene: Scene, tick: int) -> ScenePositions:
    """Positions of every observer and node at ``tick``."""
    _check_tick(scene, tick)
    t = tick * scene.tick_seconds
    observers = {o.id: interpolate(o.path, t) for o in scene.observers}
    nodes = {}
    for node in scene.nodes:
        p = node.placement
        if isinstance(p, Position):
            pos = p
        elif isinstance(p, Attached):
            pos = observers[p.observer_id]
        else:
            pos = interpolate(p, t)
        nodes[node.key.canonical] = pos
    return ScenePositions(observers, nodes)


def _admitted(observer: ObserverDevice, node: RadioNode) -> bool:
    if isinstance(node.placement, Attached) and node.placement.observer_id == observer.id:
        return False
    if observer.platform == "filtered":
        return isinstance(node.frame, IBeaconFrame) and node.frame.proximity_uuid in observer.monitored_uuids
    return True


def sort_entries(entries: Iterable[ScanEntry]) -> tuple:
    """Strongest first; equal RSSI falls back to canonical key order."""
    return tuple(sorted(entries, key=lambda e: (-e.rssi, e.key.canonical)))


def scan(
    observer: ObserverDevice,
    scene: Scene,
    tick: int,
    positions: Optional[ScenePositions] = None,
) -> ScanResult:
    """Nodes this observer can hear at ``tick``."""
    if positions is None:
        positions = advance_scene(scene, tick)
    else:
        _check_tick(scene, tick)
    here = positions.observers[observer.id]
    n = scene.path_loss_exponent
    entries = []
    for node in scene.nodes:
        if not _admitted(observer, node):
            continue
        rssi = path_loss_rssi(node.tx_power_1m, here.distance_to(positions.nodes[node.key.canonical]), n)
        if rssi >= observer.sensitivity:
            entries.append(ScanEntry(node.key, rssi))
    return ScanResult(observer.id, tick, sort_entries(entries))


def fingerprint_of(result: ScanResult) -> Fingerprint:
    return Fingerprint(tuple(e.key.canonical for e in result.entries))


def run_scenario(scene: Scene) -> list:
    """Every observer's scan for every tick, ordered by (tick, observer id)."""
    timeline = []
    observers = sorted(scene.observers, key=lambda o: o.id)
    for tick in range(scene.duration_ticks):
        positions = advance_scene(scene, tick)
        for obs in observers:
            timeline.append(scan(obs, scene, tick, positions))
    return timeline


def timeline_lines(timeline: Iterable[ScanResult]) -> list:
    return [r.to_json() for r in timeline]


# --- scenario JSON -------------------------------------------------------


def _number(value, where: str) -> float:
    if not _finite(value):
        raise SceneError("INVALID_FIELD", "expected a finite number", where)
    return float(value)


def _position(obj, where: str) -> Position:
    if isinstance(obj, dict):
        if set(obj) != {"x", "y"}:
            raise SceneError("INVALID_FIELD", "position needs exactly x and y", where)
        return Position(_number(obj["x"], f"{where}/x"), _number(obj["y"], f"{where}/y"))
    if isinstance(obj, (list, tuple)) and len(obj) == 2:
        return Position(_number(obj[0], f"{where}/0"), _number(obj[1], f"{where}/1"))
    raise SceneError("INVALID_FIELD", "position must be {x, y} or [x, y]", where)


def _waypoints(obj, where: str) -> tuple:
    if not isinstance(obj, list):
        raise SceneError("INVALID_FIELD", "waypoints must be a list", where)
    out = []
    for i, wp in enumerate(obj):
        w = f"{where}/{i}"
        if isinstance(wp, dict) and set(wp) == {"t", "x", "y"}:
            out.append(Waypoint(_number(wp["t"], f"{w}/t"), _number(wp["x"], f"{w}/x"), _number(wp["y"], f"{w}/y")))
        elif isinstance(wp, (list, tuple)) and len(wp) == 3:
            out.append(Waypoint(*(_number(v, f"{w}/{k}") for k, v in enumerate(wp))))
        else:
            raise SceneError("INVALID_FIELD", "waypoint must be {t, x, y} or [t, x, y]", w)
    return tuple(out)


def _node_from_dict(obj, where: str) -> RadioNode:
    if not isinstance(obj, dict):
        raise SceneError("INVALID_FIELD", "node must be an object", where)
    if "id" not in obj:
        raise SceneError("MISSING_FIELD", "node id is required", f"{where}/id")
    if "frame" not in obj:
        raise SceneError("MISSING_FIELD", "node frame is required", f"{where}/frame")
    frame_obj = obj["frame"]
    frame = None
    try:
        if isinstance(frame_obj, dict) and frame_obj.get("type") == "mac":
            key = BeaconKey.mac(frame_obj["mac"])
        else:
            frame = frame_from_dict(frame_obj)
            key = key_for_frame(frame)
    except (KeyError, ValueError, TypeError, AttributeError, PhyswebError) as exc:
        raise SceneError("INVALID_FRAME", str(exc), f"{where}/frame") from exc
    if "key" in obj:
        try:
            key = BeaconKey.parse(obj["key"])
        except (AttributeError, PhyswebError) as exc:
            raise SceneError("INVALID_KEY", str(exc), f"{where}/key") from exc
    if key is None:
        raise SceneError("MISSING_FIELD", "frame carries no identity; give an explicit key", f"{where}/key")

    placements = [k for k in ("position", "waypoints", "attached_to") if k in obj]
    if len(placements) != 1:
        raise SceneError("INVALID_PLACEMENT", "exactly one of position/waypoints/attached_to", where)
    if "position" in obj:
        placement = _position(obj["position"], f"{where}/position")
    elif "waypoints" in obj:
        placement = _waypoints(obj["waypoints"], f"{where}/waypoints")
    else:
        if not isinstance(obj["attached_to"], str):
            raise SceneError("INVALID_FIELD", "attached_to must be an observer id", f"{where}/attached_to")
        placement = Attached(obj["attached_to"])
    tx = _number(obj.get("tx_power_1m", DEFAULT_TX_POWER), f"{where}/tx_power_1m")
    return RadioNode(key, frame, placement, tx, str(obj["id"]))


def _observer_from_dict(obj, where: str) -> ObserverDevice:
    if not isinstance(obj, dict):
        raise SceneError("INVALID_FIELD", "observer must be an object", where)
    if not isinstance(obj.get("id"), str):
        raise SceneError("MISSING_FIELD", "observer id must be a string", f"{where}/id")
    if "waypoints" in obj:
        path = _waypoints(obj["waypoints"], f"{where}/waypoints")
    elif "position" in obj:
        p = _position(obj["position"], f"{where}/position")
        path = (Waypoint(0.0, p.x, p.y),)
    else:
        raise SceneError("MISSING_FIELD", "observer needs waypoints", f"{where}/waypoints")
    uuids = None
    if obj.get("monitored_uuids") is not None:
        raw = obj["monitored_uuids"]
        if not isinstance(raw, list):
            raise SceneError("INVALID_FIELD", "monitored_uuids must be a list", f"{where}/monitored_uuids")
        try:
            uuids = [bytes.fromhex(u.replace("-", "")) for u in raw]
        except (AttributeError, ValueError) as exc:
            raise SceneError("INVALID_UUID", str(exc), f"{where}/monitored_uuids") from exc
    return ObserverDevice(
        obj["id"],
        path,
        obj.get("platform", "open"),
        _number(obj.get("sensitivity", DEFAULT_SENSITIVITY), f"{where}/sensitivity"),
        uuids,
    )


def scene_from_dict(doc: dict) -> Scene:
    """Build a Scene from the scenario JSON layout. Errors carry JSON-pointer paths."""
    if not isinstance(doc, dict):
        raise SceneError("INVALID_FIELD", "scenario must be a JSON object", "")
    nodes_raw = doc.get("nodes", [])
    observers_raw = doc.get("observers", [])
    if not isinstance(nodes_raw, list):
        raise SceneError("INVALID_FIELD", "nodes must be a list", "/nodes")
    if not isinstance(observers_raw, list):
        raise SceneError("INVALID_FIELD", "observers must be a list", "/observers")
    nodes = [_node_from_dict(o, f"/nodes/{i}") for i, o in enumerate(nodes_raw)]
    observers = [_observer_from_dict(o, f"/observers/{i}") for i, o in enumerate(observers_raw)]
    duration = doc.get("duration_ticks", 1)
    return Scene(
        nodes,
        observers,
        _number(doc.get("path_loss_exponent", DEFAULT_PATH_LOSS_EXPONENT), "/path_loss_exponent"),
        _number(doc.get("tick_seconds", DEFAULT_TICK_SECONDS), "/tick_seconds"),
        duration,
    )


def scene_to_dict(scene: Scene) -> dict:
    """Scenario JSON for ``scene``; ``scene_from_dict(scene_to_dict(s)) == s``."""
    nodes = []
    for node in scene.nodes:
        if node.frame is None:
            frame = {"type": "mac", "mac": node.key.value.hex()}
        else:
            frame = frame_to_dict(node.frame)
        d = {"id": node.id or node.key.canonical, "frame": frame, "key": node.key.canonical,
             "tx_power_1m": node.tx_power_1m}
        p = node.placement
        if isinstance(p, Position):
            d["position"] = {"x": p.x, "y": p.y}
        elif isinstance(p, Attached):
            d["attached_to"] = p.observer_id
        else:
            d["waypoints"] = [{"t": w.t, "x": w.x, "y": w.y} for w in p]
        nodes.append(d)
    observers = []
    for obs in scene.observers:
        d = {
            "id": obs.id,
            "platform": obs.platform,
            "sensitivity": obs.sensitivity,
            "waypoints": [{"t": w.t, "x": w.x, "y": w.y} for w in obs.path],
        }
        if obs.monitored_uuids is not None:
            d["monitored_uuids"] = sorted(u.hex() for u in obs.monitored_uuids)
        observers.append(d)
    return {
        "path_loss_exponent": scene.path_loss_exponent,
        "tick_seconds": scene.tick_seconds,
        "duration_ticks": scene.duration_ticks,
        "nodes": nodes,
        "observers": observers,
    }
