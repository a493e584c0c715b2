"""Key-value attachment store with an append-only journal.

Beacons are registered under their canonical key; attachments (at most
1024 bytes each) hang off registered beacons. Every successful mutation is
appended to the journal as ``seq TAB op TAB base64(json payload)``, and
replaying the journal rebuilds the same state. Live operations and replay
share one apply path, so the two cannot drift apart.
"""

from __future__ import annotations

import base64
import binascii
import json
import logging
import re
import threading
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Union

from .errors import CorruptRecordError, StoreError
from .keys import BeaconKey

logger = logging.getLogger(__name__)

MAX_ATTACHMENT_BYTES = 1024
MAX_DESCRIPTION_CHARS = 256
STATUSES = ("active", "inactive", "decommissioned")
STABILITIES = ("stable", "portable", "mobile", "roving")
OPS = ("register", "status", "attach", "detach")

_LABEL = re.compile(r"[a-z0-9._-]{1,64}")

KeyLike = Union[BeaconKey, str]


def _as_key(key: KeyLike) -> BeaconKey:
    return key if isinstance(key, BeaconKey) else BeaconKey.parse(key)


@dataclass(frozen=True)
class BeaconRegistration:
    key: BeaconKey
    status: str = "active"
    stability: str = "stable"
    latitude: Optional[float] = None
    longitude: Optional[float] = None
    place_id: Optional[str] = None
    floor_level: Optional[int] = None
    description: str = ""

    def validate(self) -> None:
        if not isinstance(self.key, BeaconKey):
            raise StoreError("INVALID_KEY", "registration key must be a BeaconKey")
        if self.status not in STATUSES:
            raise StoreError("INVALID_STATUS", f"status must be one of {', '.join(STATUSES)}")
        if self.stability not in STABILITIES:
            raise StoreError("INVALID_STABILITY", f"stability must be one of {', '.join(STABILITIES)}")
        for name, value, limit in (("latitude", self.latitude, 90), ("longitude", self.longitude, 180)):
            if value is None:
                continue
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not -limit <= value <= limit:
                raise StoreError("INVALID_COORDINATES", f"{name} must be within [-{limit}, {limit}]")
        if self.floor_level is not None and (isinstance(self.floor_level, bool) or not isinstance(self.floor_level, int)):
            raise StoreError("INVALID_FLOOR_LEVEL", "floor_level must be an integer")
        if self.place_id is not None and not isinstance(self.place_id, str):
            raise StoreError("INVALID_PLACE_ID", "place_id must be a string")
        if not isinstance(self.description, str) or len(self.description) > MAX_DESCRIPTION_CHARS:
            raise StoreError("INVALID_DESCRIPTION", f"description must be a string of at most {MAX_DESCRIPTION_CHARS} chars")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["key"] = self.key.canonical
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BeaconRegistration":
        if not isinstance(d, dict) or not isinstance(d.get("key"), str):
            raise StoreError("INVALID_KEY", "registration needs a canonical key string")
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise StoreError("INVALID_REGISTRATION", f"unknown fields: {', '.join(sorted(unknown))}")
        return cls(**{**d, "key": BeaconKey.parse(d["key"])})


@dataclass(frozen=True)
class Attachment:
    attachment_id: str
    beacon: BeaconKey
    namespace: str
    data_type: str
    data: bytes

    def to_dict(self) -> dict:
        return {
            "attachment_id": self.attachment_id,
            "beacon": self.beacon.canonical,
            "namespace": self.namespace,
            "data_type": self.data_type,
            "data": base64.b64encode(self.data).decode("ascii"),
        }


@dataclass(frozen=True)
class JournalRecord:
    seq: int
    op: str
    payload: bytes

    def to_line(self) -> str:
        return f"{self.seq}\t{self.op}\t{base64.b64encode(self.payload).decode('ascii')}"

    @classmethod
    def from_line(cls, line: str) -> "JournalRecord":
        parts = line.rstrip("\r\n").split("\t")
        if len(parts) != 3:
            raise ValueError("expected 3 tab-separated fields")
        seq_text, op, b64 = parts
        if not seq_text.isdigit():
            raise ValueError(f"bad sequence number {seq_text!r}")
        if op not in OPS:
            raise ValueError(f"unknown op {op!r}")
        try:
            payload = base64.b64decode(b64, validate=True)
        except binascii.Error as exc:
            raise ValueError(f"bad base64 payload: {exc}") from exc
        return cls(int(seq_text), op, payload)


def _canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def _check_label(kind: str, value) -> None:
    if not isinstance(value, str) or not _LABEL.fullmatch(value):
        code = "INVALID_NAMESPACE" if kind == "namespace" else "INVALID_DATA_TYPE"
        raise StoreError(code, f"{kind} must be 1-64 chars of [a-z0-9._-]")


class AttachmentStore:
    """Thread-safe beacon registry and attachment map.

    Each public operation holds the store lock for its whole duration, so
    operations are atomic and the journal order is the linearization order.
    """

    def __init__(self, journal_path: Union[str, Path, None] = None):
        self._lock = threading.RLock()
        self._beacons: dict[str, BeaconRegistration] = {}
        self._attachments: dict[int, Attachment] = {}
        self._next_id = 1
        self._seq = 0
        self.journal: list[JournalRecord] = []
        self._journal_file = None
        if journal_path is not None:
            self._journal_file = open(journal_path, "a", encoding="ascii")

    @classmethod
    def open(cls, journal_path: Union[str, Path]) -> "AttachmentStore":
        """Rebuild from an existing journal file (if any) and keep appending to it."""
        path = Path(journal_path)
        store = cls()
        if path.exists():
            store = load_journal_file(path)
        store._journal_file = open(path, "a", encoding="ascii")
        return store

    def close(self) -> None:
        with self._lock:
            if self._journal_file is not None:
                self._journal_file.close()
                self._journal_file = None

    @property
    def seq(self) -> int:
        return self._seq

    # -- apply path shared by live operations and replay --

    def _apply(self, op: str, p: dict):
        if op == "register":
            reg = BeaconRegistration.from_dict(p)
            reg.validate()
            canonical = reg.key.canonical
            if canonical in self._beacons:
                raise StoreError("DUPLICATE_KEY", f"{canonical} is already registered")
            self._beacons[canonical] = reg
            return canonical

        if op == "status":
            canonical = BeaconKey.parse(p["key"]).canonical
            reg = self._beacons.get(canonical)
            if reg is None:
                raise StoreError("UNREGISTERED_BEACON", f"{canonical} is not registered")
            status = p["status"]
            if status not in STATUSES:
                raise StoreError("INVALID_STATUS", f"status must be one of {', '.join(STATUSES)}")
            if reg.status == "decommissioned":
                raise StoreError("TERMINAL_STATUS", f"{canonical} is decommissioned")
            self._beacons[canonical] = replace(reg, status=status)
            return reg.status

        if op == "attach":
            key = BeaconKey.parse(p["key"])
            if key.canonical not in self._beacons:
                raise StoreError("UNREGISTERED_BEACON", f"{key.canonical} is not registered")
            _check_label("namespace", p["namespace"])
            _check_label("data_type", p["data_type"])
            data = base64.b64decode(p["data"], validate=True)
            if len(data) > MAX_ATTACHMENT_BYTES:
                raise StoreError(
                    "ATTACHMENT_TOO_LARGE", f"{len(data)} bytes exceeds the {MAX_ATTACHMENT_BYTES}-byte limit"
                )
            ident = int(p["attachment_id"])
            if ident in self._attachments or ident < 1:
                raise StoreError("DUPLICATE_ATTACHMENT_ID", f"attachment id {ident} already used")
            self._attachments[ident] = Attachment(str(ident), key, p["namespace"], p["data_type"], data)
            self._next_id = max(self._next_id, ident + 1)
            return str(ident)

        if op == "detach":
            return self._attachments.pop(int(p["attachment_id"]), None) is not None

        raise StoreError("UNKNOWN_OP", f"unknown op {op!r}")

    def _commit(self, op: str, payload: dict):
        result = self._apply(op, payload)
        self._seq += 1
        rec = JournalRecord(self._seq, op, _canonical_json(payload))
        self.journal.append(rec)
        if self._journal_file is not None:
            self._journal_file.write(rec.to_line() + "\n")
            self._journal_file.flush()
        return result

    # -- public operations --

    def register_beacon(self, reg: BeaconRegistration) -> str:
        """Register a beacon; returns its canonical key."""
        reg.validate()
        with self._lock:
            return self._commit("register", reg.to_dict())

    def set_beacon_status(self, key: KeyLike, status: str) -> str:
        """Change status; returns the previous one. Decommissioned is final."""
        key = _as_key(key)
        with self._lock:
            return self._commit("status", {"key": key.canonical, "status": status})

    def attach(self, key: KeyLike, namespace: str, data_type: str, data: bytes) -> str:
        key = _as_key(key)
        if not isinstance(data, (bytes, bytearray)):
            raise StoreError("INVALID_DATA", "attachment data must be bytes")
        if len(data) > MAX_ATTACHMENT_BYTES:
            raise StoreError("ATTACHMENT_TOO_LARGE", f"{len(data)} bytes exceeds the {MAX_ATTACHMENT_BYTES}-byte limit")
        with self._lock:
            payload = {
                "attachment_id": str(self._next_id),
                "key": key.canonical,
                "namespace": namespace,
                "data_type": data_type,
                "data": base64.b64encode(bytes(data)).decode("ascii"),
            }
            return self._commit("attach", payload)

    def detach(self, attachment_id) -> bool:
        """Remove an attachment. Unknown or already-removed ids return False."""
        try:
            ident = int(attachment_id)
        except (TypeError, ValueError):
            return False
        if str(ident) != str(attachment_id):
            return False
        with self._lock:
            if ident not in self._attachments:
                return False
            return self._commit("detach", {"attachment_id": str(ident)})

    def get_beacon(self, key: KeyLike) -> Optional[BeaconRegistration]:
        with self._lock:
            return self._beacons.get(_as_key(key).canonical)

    def get_for_observed(self, keys: Iterable[KeyLike], namespace_filter: Optional[str] = None) -> dict:
        """Attachments of every observed key that is registered and active.

        Unknown, inactive and decommissioned keys are left out. Active
        beacons without (matching) attachments map to an empty list.
        """
        wanted = {_as_key(k).canonical for k in keys}
        with self._lock:
            live = {c for c in wanted if c in self._beacons and self._beacons[c].status == "active"}
            out = {c: [] for c in sorted(live)}
            for ident in sorted(self._attachments):
                att = self._attachments[ident]
                if att.beacon.canonical in live and namespace_filter in (None, att.namespace):
                    out[att.beacon.canonical].append(att)
        return out

    def dump(self) -> dict:
        """Full structural state; two stores are equivalent iff their dumps are equal."""
        with self._lock:
            return {
                "seq": self._seq,
                "next_attachment_id": self._next_id,
                "beacons": {c: r.to_dict() for c, r in sorted(self._beacons.items())},
                "attachments": [self._attachments[i].to_dict() for i in sorted(self._attachments)],
            }

    def write_snapshot(self, path: Union[str, Path]) -> None:
        """Dump current state as ``SNAPSHOT seq=N next_id=M`` followed by records."""
        with self._lock:
            lines = [f"SNAPSHOT seq={self._seq} next_id={self._next_id}"]
            n = 0
            for _, reg in sorted(self._beacons.items()):
                n += 1
                lines.append(JournalRecord(n, "register", _canonical_json(reg.to_dict())).to_line())
            for ident in sorted(self._attachments):
                att = self._attachments[ident]
                n += 1
                payload = att.to_dict()
                payload["key"] = payload.pop("beacon")
                lines.append(JournalRecord(n, "attach", _canonical_json(payload)).to_line())
        Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def journal_replay(
    journal: Iterable[Union[JournalRecord, str]],
    store: Optional[AttachmentStore] = None,
) -> AttachmentStore:
    """Rebuild a store from journal records (objects or lines).

    Records at or below ``store.seq`` are skipped, so replaying a prefix and
    then the full journal gives the same result as replaying it once. On a
    sequence gap or unusable record, raises :class:`CorruptRecordError` whose
    ``store`` holds everything applied before the bad record.
    """
    store = store if store is not None else AttachmentStore()
    for position, item in enumerate(journal):
        if isinstance(item, str):
            if not item.strip():
                continue
            try:
                rec = JournalRecord.from_line(item)
            except ValueError as exc:
                raise CorruptRecordError(position, str(exc), store) from exc
        else:
            rec = item
        if rec.seq <= store._seq:
            continue
        if rec.seq != store._seq + 1:
            raise CorruptRecordError(position, f"sequence gap: expected {store._seq + 1}, got {rec.seq}", store)
        try:
            payload = json.loads(rec.payload.decode("utf-8"))
            if not isinstance(payload, dict):
                raise ValueError("payload is not an object")
            with store._lock:
                store._apply(rec.op, payload)
                store._seq = rec.seq
                store.journal.append(rec)
        except (ValueError, KeyError, TypeError, binascii.Error, StoreError) as exc:
            raise CorruptRecordError(position, f"{type(exc).__name__}: {exc}", store) from exc
    return store


def load_journal_file(path: Union[str, Path]) -> AttachmentStore:
    """Replay a journal or snapshot file from disk."""
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if lines and lines[0].startswith("SNAPSHOT"):
        return _load_snapshot(lines)
    return journal_replay(lines)


def _load_snapshot(lines: list) -> AttachmentStore:
    header = dict(tok.split("=", 1) for tok in lines[0].split()[1:])
    try:
        seq, next_id = int(header["seq"]), int(header.get("next_id", 1))
    except (KeyError, ValueError) as exc:
        raise CorruptRecordError(0, f"bad snapshot header {lines[0]!r}") from exc
    store = journal_replay(lines[1:])
    store.journal.clear()
    store._seq = seq
    store._next_id = max(store._next_id, next_id)
    logger.info("loaded snapshot at seq=%d", seq)
    return store
