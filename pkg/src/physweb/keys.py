"""Canonical beacon identities.

A :class:`BeaconKey` is the lookup key of the whole system. Its canonical
string is ``kind:value`` with the value in lowercase hex for binary kinds
and verbatim for SSIDs, e.g. ``ibeacon:00112233...00010002`` or
``ssid:MyHomeAP``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .codec import (
    SSID_MAX_BYTES,
    EddystoneUidFrame,
    IBeaconFrame,
    SsidBeacon,
    beacon_id,
)
from .errors import StoreError

KINDS = ("eddystone_uid", "ibeacon", "ssid", "mac")
_BINARY_SIZES = {"eddystone_uid": 16, "ibeacon": 20, "mac": 6}


@dataclass(frozen=True, order=False)
class BeaconKey:
    kind: str
    value: Union[bytes, str]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise StoreError("INVALID_KEY", f"unknown key kind {self.kind!r}")
        if self.kind == "ssid":
            if not isinstance(self.value, str) or len(self.value.encode("utf-8")) > SSID_MAX_BYTES:
                raise StoreError("INVALID_KEY", "ssid key must be a string of at most 32 bytes")
            return
        size = _BINARY_SIZES[self.kind]
        if not isinstance(self.value, (bytes, bytearray)) or len(self.value) != size:
            raise StoreError("INVALID_KEY", f"{self.kind} key must be {size} bytes")
        object.__setattr__(self, "value", bytes(self.value))

    @property
    def canonical(self) -> str:
        if self.kind == "ssid":
            return f"ssid:{self.value}"
        return f"{self.kind}:{self.value.hex()}"

    def __str__(self) -> str:
        return self.canonical

    def __lt__(self, other: "BeaconKey") -> bool:
        return self.canonical < other.canonical

    @classmethod
    def parse(cls, text: str) -> "BeaconKey":
        """Parse a canonical string. Hex values may use either case."""
        kind, sep, rest = text.partition(":")
        if not sep:
            raise StoreError("INVALID_KEY", f"missing kind prefix in {text!r}")
        if kind == "ssid":
            return cls(kind, rest)
        if kind not in _BINARY_SIZES:
            raise StoreError("INVALID_KEY", f"unknown key kind {kind!r}")
        if rest != rest.strip() or any(c not in "0123456789abcdefABCDEF" for c in rest):
            raise StoreError("INVALID_KEY", f"{kind} value must be hex")
        return cls(kind, bytes.fromhex(rest))

    @classmethod
    def ibeacon(cls, uuid: bytes, major: int, minor: int) -> "BeaconKey":
        return cls("ibeacon", bytes(uuid) + major.to_bytes(2, "big") + minor.to_bytes(2, "big"))

    @classmethod
    def eddystone_uid(cls, namespace: bytes, instance: bytes) -> "BeaconKey":
        return cls("eddystone_uid", bytes(namespace) + bytes(instance))

    @classmethod
    def ssid(cls, name: str) -> "BeaconKey":
        return cls("ssid", name)

    @classmethod
    def mac(cls, address: Union[str, bytes]) -> "BeaconKey":
        if isinstance(address, str):
            address = bytes.fromhex(address.replace(":", "").replace("-", ""))
        return cls("mac", address)


def key_for_frame(frame) -> BeaconKey | None:
    """Identity advertised by a frame, or None for frames that carry none (URL, TLM)."""
    if isinstance(frame, IBeaconFrame):
        return BeaconKey.ibeacon(frame.proximity_uuid, frame.major, frame.minor)
    if isinstance(frame, EddystoneUidFrame):
        return BeaconKey("eddystone_uid", beacon_id(frame))
    if isinstance(frame, SsidBeacon):
        return BeaconKey.ssid(frame.ssid)
    return None
