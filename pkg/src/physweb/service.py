"""Browsing-mode resolver on top of the attachment store.

The service is strictly pull-based: it answers requests and never sends
anything on its own. ``ResolverService.handle_request`` is a pure routing
function over (request, store state); ``make_server`` wraps it in a stdlib
threading HTTP server.
"""

from __future__ import annotations

import base64
import binascii
import json
import logging
import math
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Iterable, Optional
from urllib.parse import quote, unquote, urlsplit

from .codec import parse_ssid_beacon
from .errors import CodecError, PhyswebError
from .keys import BeaconKey
from .sim import Fingerprint, ScanEntry, ScanResult, sort_entries
from .store import AttachmentStore, BeaconRegistration

logger = logging.getLogger(__name__)

FINGERPRINT_PARAM = "node"

# anything not listed is a validation error (400)
STATUS_CODES = {
    "UNREGISTERED_BEACON": 404,
    "NOT_FOUND": 404,
    "DUPLICATE_KEY": 409,
    "TERMINAL_STATUS": 409,
    "METHOD_NOT_ALLOWED": 405,
}


def augment_url(base: str, fingerprint) -> str:
    """Append one ``node=<key>`` query parameter per visible node, in order."""
    keys = fingerprint.keys if isinstance(fingerprint, Fingerprint) else tuple(fingerprint)
    try:
        parts = urlsplit(base)
    except ValueError as exc:
        raise CodecError("INVALID_URL", str(exc)) from exc
    if not parts.scheme or not parts.netloc:
        raise CodecError("INVALID_URL", f"{base!r} is not an absolute URL")
    if not keys:
        return base
    head, hash_, frag = base.partition("#")
    params = "&".join(f"{FINGERPRINT_PARAM}={quote(k, safe='')}" for k in keys)
    if "?" not in head:
        sep = "?"
    elif head.endswith(("?", "&")):
        sep = ""
    else:
        sep = "&"
    return f"{head}{sep}{params}{hash_}{frag}"


def fingerprint_from_url(url: str) -> Fingerprint:
    """Recover the node keys appended by :func:`augment_url`."""
    query = urlsplit(url).query
    keys = []
    for pair in query.split("&"):
        name, _, value = pair.partition("=")
        if name == FINGERPRINT_PARAM:
            keys.append(unquote(value))
    return Fingerprint(tuple(keys))


@dataclass(frozen=True)
class NearbyEntry:
    key: str
    rssi: float
    attachments: tuple = ()
    url: Optional[str] = None

    def to_dict(self) -> dict:
        d = {
            "key": self.key,
            "rssi": round(self.rssi, 1),
            "attachments": [a.to_dict() for a in self.attachments],
        }
        if self.url is not None:
            d["url"] = self.url
        return d


@dataclass(frozen=True)
class NearbyPage:
    entries: tuple = ()
    generated_at_tick: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "generated_at_tick": self.generated_at_tick,
            "entries": [e.to_dict() for e in self.entries],
        }


def render_nearby(
    scan: ScanResult | Iterable[ScanEntry],
    store: AttachmentStore,
    namespace_filter: Optional[str] = None,
) -> NearbyPage:
    """Resolve a scan into a page of nearby data, strongest signal first.

    SSID beacons whose name is a URL contribute it even when unregistered.
    Keys that resolve to nothing are dropped.
    """
    tick = scan.tick if isinstance(scan, ScanResult) else None
    raw = scan.entries if isinstance(scan, ScanResult) else tuple(scan)
    # a key seen twice keeps its strongest reading
    best: dict[str, ScanEntry] = {}
    for e in raw:
        prev = best.get(e.key.canonical)
        if prev is None or e.rssi > prev.rssi:
            best[e.key.canonical] = e
    entries = sort_entries(best.values())
    resolved = store.get_for_observed([e.key for e in entries], namespace_filter)
    page = []
    for e in entries:
        atts = tuple(resolved.get(e.key.canonical, ()))
        url = None
        if e.key.kind == "ssid":
            try:
                url = parse_ssid_beacon(e.key.value).recognized_url
            except CodecError:
                url = None
        if atts or url:
            page.append(NearbyEntry(e.key.canonical, e.rssi, atts, url))
    return NearbyPage(tuple(page), tick)


@dataclass(frozen=True)
class ApiRequest:
    method: str
    path: str
    body: bytes = b""


@dataclass(frozen=True)
class ApiResponse:
    status: int
    body: object

    def body_bytes(self) -> bytes:
        return json.dumps(self.body, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


class ApiError(PhyswebError):
    pass


def _error(exc: PhyswebError) -> ApiResponse:
    return ApiResponse(STATUS_CODES.get(exc.code, 400), {"error": exc.code, "message": exc.message})


def _json_body(req: ApiRequest):
    try:
        return json.loads(req.body.decode("utf-8") if req.body else "null")
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ApiError("BAD_BODY", f"malformed JSON: {exc}") from exc


def _object_body(req: ApiRequest) -> dict:
    body = _json_body(req)
    if not isinstance(body, dict):
        raise ApiError("BAD_BODY", "request body must be a JSON object")
    return body


def _field(body: dict, name: str, kind=str):
    if name not in body:
        raise ApiError("BAD_BODY", f"missing field {name!r}")
    value = body[name]
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ApiError("BAD_BODY", f"field {name!r} has the wrong type")
    return value


def _optional_namespace(body: dict) -> Optional[str]:
    ns = body.get("namespace")
    if ns is not None and not isinstance(ns, str):
        raise ApiError("BAD_BODY", "namespace must be a string")
    return ns


def _scan_entries(body) -> tuple:
    items = body.get("scan") if isinstance(body, dict) else body
    if not isinstance(items, list):
        raise ApiError("BAD_BODY", "expected a list of scan entries")
    out = []
    for item in items:
        if not isinstance(item, dict):
            raise ApiError("BAD_BODY", "scan entry must be an object")
        rssi = _field(item, "rssi", (int, float))
        if not math.isfinite(rssi):
            raise ApiError("BAD_BODY", "rssi must be finite")
        out.append(ScanEntry(BeaconKey.parse(_field(item, "key")), float(rssi)))
    return tuple(out)


def attachments_map(resolved: dict) -> dict:
    return {k: [a.to_dict() for a in v] for k, v in resolved.items()}


class ResolverService:
    """HTTP-shaped front end for an :class:`AttachmentStore`.

    ``events`` records every request and the response it produced; nothing
    is ever appended without an inbound request.
    """

    def __init__(self, store: Optional[AttachmentStore] = None):
        self.store = store if store is not None else AttachmentStore()
        self.events: list[dict] = []
        self._events_lock = threading.Lock()
        self._request_counter = 0

    def _log(self, event: dict) -> None:
        with self._events_lock:
            self.events.append(event)

    def handle_request(self, req: ApiRequest) -> ApiResponse:
        with self._events_lock:
            self._request_counter += 1
            rid = self._request_counter
        self._log({"request_id": rid, "direction": "inbound", "method": req.method, "path": req.path})
        try:
            resp = self._route(req)
        except PhyswebError as exc:
            resp = _error(exc)
        self._log({"request_id": rid, "direction": "response", "status": resp.status})
        logger.debug("%s %s -> %d", req.method, req.path, resp.status)
        return resp

    def _route(self, req: ApiRequest) -> ApiResponse:
        path = req.path.split("?", 1)[0]
        segments = path.strip("/").split("/")
        method = req.method.upper()

        if path == "/v1/beacons:register":
            self._require(method, "POST")
            reg = BeaconRegistration.from_dict(_object_body(req))
            return ApiResponse(200, {"key": self.store.register_beacon(reg)})

        if path == "/v1/attachments:getForObserved":
            self._require(method, "POST")
            body = _object_body(req)
            keys = _field(body, "keys", list)
            if not all(isinstance(k, str) for k in keys):
                raise ApiError("BAD_BODY", "keys must be canonical key strings")
            resolved = self.store.get_for_observed([BeaconKey.parse(k) for k in keys], _optional_namespace(body))
            return ApiResponse(200, attachments_map(resolved))

        if path == "/v1/nearby":
            self._require(method, "POST")
            body = _json_body(req)
            tick = body.get("tick") if isinstance(body, dict) else None
            if tick is not None and (isinstance(tick, bool) or not isinstance(tick, int)):
                raise ApiError("BAD_BODY", "tick must be an integer")
            ns = _optional_namespace(body) if isinstance(body, dict) else None
            entries = _scan_entries(body)
            scan = ScanResult("", tick, entries) if tick is not None else entries
            return ApiResponse(200, render_nearby(scan, self.store, ns).to_dict())

        if len(segments) == 4 and segments[:2] == ["v1", "beacons"] and segments[3] == "status":
            self._require(method, "PUT")
            key = BeaconKey.parse(unquote(segments[2]))
            status = _field(_object_body(req), "status")
            previous = self.store.set_beacon_status(key, status)
            return ApiResponse(200, {"key": key.canonical, "previous_status": previous, "status": status})

        if len(segments) == 4 and segments[:2] == ["v1", "beacons"] and segments[3] == "attachments":
            self._require(method, "POST")
            key = BeaconKey.parse(unquote(segments[2]))
            body = _object_body(req)
            try:
                data = base64.b64decode(_field(body, "data"), validate=True)
            except binascii.Error as exc:
                raise ApiError("BAD_BODY", f"data is not valid base64: {exc}") from exc
            ident = self.store.attach(key, _field(body, "namespace"), _field(body, "data_type"), data)
            return ApiResponse(200, {"attachment_id": ident})

        if len(segments) == 3 and segments[:2] == ["v1", "attachments"]:
            self._require(method, "DELETE")
            return ApiResponse(200, {"removed": self.store.detach(unquote(segments[2]))})

        raise ApiError("NOT_FOUND", f"no route for {path}")

    @staticmethod
    def _require(method: str, expected: str) -> None:
        if method != expected:
            raise ApiError("METHOD_NOT_ALLOWED", f"use {expected}")


def make_server(service: ResolverService, host: str = "127.0.0.1", port: int = 8080) -> ThreadingHTTPServer:
    """Bind an HTTP/1.1 server that forwards every request to ``service``."""

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def _dispatch(self):
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length) if length else b""
            resp = service.handle_request(ApiRequest(self.command, self.path, body))
            payload = resp.body_bytes()
            self.send_response(resp.status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        do_GET = do_POST = do_PUT = do_DELETE = _dispatch

        def log_message(self, fmt, *args):
            logger.info("%s - %s", self.address_string(), fmt % args)

    return ThreadingHTTPServer((host, port), Handler)
