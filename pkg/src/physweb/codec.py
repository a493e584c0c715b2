"""Byte-exact beacon advertisement frames.

Packet layout: one discriminator byte, then the frame payload. All
multi-byte integers are big-endian.

    0x00  Eddystone-UID  namespace(10) instance(6)
    0x10  Eddystone-URL  scheme(1) compressed body (total <= 18)
    0x20  Eddystone-TLM  version(1) battery_mv(2) temp 8.8(2) sec_count(2) adv_count(2)
    0xA1  iBeacon        uuid(16) major(2) minor(2) measured_power(1, signed)

SSID beacons are not BLE frames; ``parse_ssid_beacon`` handles them.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional, Union
from urllib.parse import urlsplit

from .errors import CodecError

EDDYSTONE_UID = 0x00
EDDYSTONE_URL = 0x10
EDDYSTONE_TLM = 0x20
IBEACON = 0xA1

IBEACON_PAYLOAD_LEN = 21
UID_PAYLOAD_LEN = 16
TLM_PAYLOAD_LEN = 9
URL_MAX_LEN = 18
SSID_MAX_BYTES = 32

URL_SCHEMES = {
    0x00: "http://www.",
    0x01: "https://www.",
    0x02: "http://",
    0x03: "https://",
}

URL_EXPANSIONS = {
    0x00: ".com/",
    0x01: ".org/",
    0x02: ".edu/",
    0x03: ".net/",
    0x04: ".info/",
    0x05: ".biz/",
    0x06: ".gov/",
    0x07: ".com",
    0x08: ".org",
    0x09: ".edu",
    0x0A: ".net",
    0x0B: ".info",
    0x0C: ".biz",
    0x0D: ".gov",
}

# longest prefix first so "https://www." wins over "https://"
_SCHEME_ORDER = sorted(URL_SCHEMES.items(), key=lambda kv: -len(kv[1]))
# longest first; on equal length the slash-terminated form has the lower code
_EXPANSION_ORDER = sorted(URL_EXPANSIONS.items(), key=lambda kv: (-len(kv[1]), kv[0]))

_TLM = struct.Struct(">BHhHH")
_IBEACON_TAIL = struct.Struct(">HHb")


def _check_bytes(name: str, value: bytes, size: int) -> None:
    if not isinstance(value, (bytes, bytearray)) or len(value) != size:
        raise CodecError("INVALID_FIELD", f"{name} must be {size} bytes")


def _check_int(name: str, value: int, lo: int, hi: int) -> None:
    if isinstance(value, bool) or not isinstance(value, int) or not lo <= value <= hi:
        raise CodecError("INVALID_FIELD", f"{name} must be an integer in [{lo}, {hi}]")


@dataclass(frozen=True)
class IBeaconFrame:
    proximity_uuid: bytes
    major: int
    minor: int
    measured_power: int = -59

    def __post_init__(self):
        _check_bytes("proximity_uuid", self.proximity_uuid, 16)
        _check_int("major", self.major, 0, 0xFFFF)
        _check_int("minor", self.minor, 0, 0xFFFF)
        _check_int("measured_power", self.measured_power, -128, 127)
        object.__setattr__(self, "proximity_uuid", bytes(self.proximity_uuid))


@dataclass(frozen=True)
class EddystoneUidFrame:
    namespace: bytes
    instance: bytes

    def __post_init__(self):
        _check_bytes("namespace", self.namespace, 10)
        _check_bytes("instance", self.instance, 6)
        object.__setattr__(self, "namespace", bytes(self.namespace))
        object.__setattr__(self, "instance", bytes(self.instance))


@dataclass(frozen=True)
class EddystoneUrlFrame:
    url: str


@dataclass(frozen=True)
class EddystoneTlmFrame:
    """Telemetry. ``temperature_c`` must be a multiple of 1/256 within int16 range."""

    version: int = 0
    battery_mv: int = 0
    temperature_c: float = 0.0
    sec_count: int = 0
    adv_count: int = 0

    def __post_init__(self):
        _check_int("version", self.version, 0, 0xFF)
        _check_int("battery_mv", self.battery_mv, 0, 0xFFFF)
        _check_int("sec_count", self.sec_count, 0, 0xFFFF)
        _check_int("adv_count", self.adv_count, 0, 0xFFFF)
        raw = float(self.temperature_c) * 256
        if not raw.is_integer() or not -0x8000 <= raw <= 0x7FFF:
            raise CodecError("INVALID_FIELD", "temperature_c is not representable as signed 8.8")
        object.__setattr__(self, "temperature_c", float(self.temperature_c))


@dataclass(frozen=True)
class SsidBeacon:
    ssid: str
    recognized_url: Optional[str] = None


Frame = Union[IBeaconFrame, EddystoneUidFrame, EddystoneUrlFrame, EddystoneTlmFrame]


def compress_url(url: str) -> bytes:
    """Compress an absolute URL into the Eddystone-URL encoding.

    The scheme becomes a single code byte; the body is scanned left to right
    and the longest matching expansion (".com/" before ".com") is replaced by
    its code. Everything else must be printable ASCII.
    """
    if not url:
        raise CodecError("EMPTY_URL", "url is empty")
    for code, prefix in _SCHEME_ORDER:
        if url.startswith(prefix):
            out = bytearray([code])
            body = url[len(prefix):]
            break
    else:
        raise CodecError("NO_SCHEME", f"no recognized scheme prefix in {url!r}")

    i = 0
    while i < len(body):
        for code, text in _EXPANSION_ORDER:
            if body.startswith(text, i):
                out.append(code)
                i += len(text)
                break
        else:
            ch = ord(body[i])
            if not 0x21 <= ch <= 0x7E:
                raise CodecError("NON_ASCII", f"character {body[i]!r} cannot be encoded")
            out.append(ch)
            i += 1
    if len(out) > URL_MAX_LEN:
        raise CodecError("URL_TOO_LONG", f"compressed url is {len(out)} bytes, limit {URL_MAX_LEN}")
    return bytes(out)


def expand_url(data: bytes) -> str:
    """Inverse of :func:`compress_url`."""
    if not data:
        raise CodecError("EMPTY_INPUT", "no bytes to expand")
    scheme = URL_SCHEMES.get(data[0])
    if scheme is None:
        raise CodecError("UNKNOWN_SCHEME_CODE", f"scheme code 0x{data[0]:02x}")
    parts = [scheme]
    for b in data[1:]:
        if b in URL_EXPANSIONS:
            parts.append(URL_EXPANSIONS[b])
        elif 0x21 <= b <= 0x7E:
            parts.append(chr(b))
        else:
            raise CodecError("RESERVED_EXPANSION_CODE", f"byte 0x{b:02x} is reserved")
    return "".join(parts)


def encode_frame(frame: Frame) -> bytes:
    """Serialize a frame to packet bytes (discriminator + payload)."""
    if isinstance(frame, IBeaconFrame):
        return bytes([IBEACON]) + frame.proximity_uuid + _IBEACON_TAIL.pack(
            frame.major, frame.minor, frame.measured_power
        )
    if isinstance(frame, EddystoneUidFrame):
        return bytes([EDDYSTONE_UID]) + frame.namespace + frame.instance
    if isinstance(frame, EddystoneUrlFrame):
        return bytes([EDDYSTONE_URL]) + compress_url(frame.url)
    if isinstance(frame, EddystoneTlmFrame):
        if frame.version != 0:
            raise CodecError("BAD_VERSION", f"TLM version must be 0, got {frame.version}")
        return bytes([EDDYSTONE_TLM]) + _TLM.pack(
            frame.version,
            frame.battery_mv,
            int(frame.temperature_c * 256),
            frame.sec_count,
            frame.adv_count,
        )
    raise TypeError(f"not an advertisement frame: {type(frame).__name__}")


def _fixed(payload: bytes, size: int, name: str) -> None:
    if len(payload) < size:
        raise CodecError("TRUNCATED", f"{name} payload needs {size} bytes, got {len(payload)}")
    if len(payload) > size:
        raise CodecError("TRAILING_BYTES", f"{name} payload needs {size} bytes, got {len(payload)}")


def decode_frame(data: bytes) -> Frame:
    """Parse packet bytes. Any malformed input raises :class:`CodecError`."""
    data = bytes(data)
    if not data:
        raise CodecError("TRUNCATED", "empty packet")
    kind, payload = data[0], data[1:]
    if kind == IBEACON:
        _fixed(payload, IBEACON_PAYLOAD_LEN, "iBeacon")
        major, minor, power = _IBEACON_TAIL.unpack(payload[16:])
        return IBeaconFrame(payload[:16], major, minor, power)
    if kind == EDDYSTONE_UID:
        _fixed(payload, UID_PAYLOAD_LEN, "Eddystone-UID")
        return EddystoneUidFrame(payload[:10], payload[10:])
    if kind == EDDYSTONE_URL:
        if not payload:
            raise CodecError("TRUNCATED", "Eddystone-URL payload is empty")
        if len(payload) > URL_MAX_LEN:
            raise CodecError("URL_TOO_LONG", f"compressed url is {len(payload)} bytes")
        return EddystoneUrlFrame(expand_url(payload))
    if kind == EDDYSTONE_TLM:
        _fixed(payload, TLM_PAYLOAD_LEN, "Eddystone-TLM")
        version, battery, temp, secs, advs = _TLM.unpack(payload)
        if version != 0:
            raise CodecError("BAD_VERSION", f"TLM version must be 0, got {version}")
        return EddystoneTlmFrame(version, battery, temp / 256, secs, advs)
    raise CodecError("UNKNOWN_FRAME_TYPE", f"discriminator 0x{kind:02x}")


def beacon_id(frame: EddystoneUidFrame) -> bytes:
    """16-byte Eddystone beacon ID: namespace followed by instance."""
    return frame.namespace + frame.instance


def parse_ssid_beacon(ssid: str) -> SsidBeacon:
    """Classify a Wi-Fi network name; an http(s) URL in the SSID is surfaced."""
    if len(ssid.encode("utf-8")) > SSID_MAX_BYTES:
        raise CodecError("SSID_TOO_LONG", f"ssid exceeds {SSID_MAX_BYTES} bytes")
    url = None
    if ssid.startswith(("http://", "https://")):
        try:
            parts = urlsplit(ssid)
            if parts.netloc and parts.hostname:
                url = ssid
        except ValueError:
            pass
    return SsidBeacon(ssid, url)


def describe_frame(frame: Frame) -> str:
    """One-line field dump, the format used by ``vectors/frames.txt`` and the CLI."""
    if isinstance(frame, IBeaconFrame):
        return (
            f"ibeacon uuid={frame.proximity_uuid.hex()} major={frame.major} "
            f"minor={frame.minor} power={frame.measured_power}"
        )
    if isinstance(frame, EddystoneUidFrame):
        return f"eddystone_uid namespace={frame.namespace.hex()} instance={frame.instance.hex()}"
    if isinstance(frame, EddystoneUrlFrame):
        return f"eddystone_url url={frame.url}"
    if isinstance(frame, EddystoneTlmFrame):
        return (
            f"eddystone_tlm version={frame.version} battery_mv={frame.battery_mv} "
            f"temperature_c={frame.temperature_c:g} sec_count={frame.sec_count} "
            f"adv_count={frame.adv_count}"
        )
    raise TypeError(f"not an advertisement frame: {type(frame).__name__}")


def frame_to_dict(frame) -> dict:
    """JSON form used in scenario files (``{"type": ..., fields...}``)."""
    if isinstance(frame, IBeaconFrame):
        return {
            "type": "ibeacon",
            "uuid": frame.proximity_uuid.hex(),
            "major": frame.major,
            "minor": frame.minor,
            "measured_power": frame.measured_power,
        }
    if isinstance(frame, EddystoneUidFrame):
        return {"type": "eddystone_uid", "namespace": frame.namespace.hex(), "instance": frame.instance.hex()}
    if isinstance(frame, EddystoneUrlFrame):
        return {"type": "eddystone_url", "url": frame.url}
    if isinstance(frame, EddystoneTlmFrame):
        return {
            "type": "eddystone_tlm",
            "version": frame.version,
            "battery_mv": frame.battery_mv,
            "temperature_c": frame.temperature_c,
            "sec_count": frame.sec_count,
            "adv_count": frame.adv_count,
        }
    if isinstance(frame, SsidBeacon):
        return {"type": "ssid", "ssid": frame.ssid}
    raise TypeError(f"not a frame: {type(frame).__name__}")


def frame_from_dict(obj: dict):
    """Inverse of :func:`frame_to_dict`. Raises KeyError/ValueError/CodecError on bad input."""
    kind = obj["type"]
    if kind == "ibeacon":
        return IBeaconFrame(
            bytes.fromhex(obj["uuid"].replace("-", "")),
            obj["major"],
            obj["minor"],
            obj.get("measured_power", -59),
        )
    if kind == "eddystone_uid":
        return EddystoneUidFrame(bytes.fromhex(obj["namespace"]), bytes.fromhex(obj["instance"]))
    if kind == "eddystone_url":
        frame = EddystoneUrlFrame(obj["url"])
        compress_url(frame.url)
        return frame
    if kind == "eddystone_tlm":
        return EddystoneTlmFrame(
            obj.get("version", 0),
            obj.get("battery_mv", 0),
            obj.get("temperature_c", 0.0),
            obj.get("sec_count", 0),
            obj.get("adv_count", 0),
        )
    if kind == "ssid":
        return parse_ssid_beacon(obj["ssid"])
    raise ValueError(f"unknown frame type {kind!r}")
