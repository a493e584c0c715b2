"""``physweb`` command line.

Exit codes: 0 success, 1 usage error, 2 data error. Data errors print
``CODE: message`` on stderr using the library's error code names.
"""

from __future__ import annotations

import argparse
import base64
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .codec import (
    EddystoneTlmFrame,
    EddystoneUidFrame,
    EddystoneUrlFrame,
    IBeaconFrame,
    compress_url,
    decode_frame,
    describe_frame,
    encode_frame,
    expand_url,
)
from .errors import PhyswebError, ScenarioError, SceneError
from .keys import BeaconKey
from .service import ApiRequest, ResolverService
from .sim import Scene, run_scenario, scene_from_dict
from .store import AttachmentStore

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _hex(text: str) -> bytes:
    try:
        return bytes.fromhex(text.replace(":", "").replace("-", ""))
    except ValueError as exc:
        raise PhyswebError("BAD_HEX", f"{text!r} is not hex") from exc


def load_scenario(path) -> tuple[Scene, list]:
    """Read a scenario file; returns the Scene and its ``attachments`` declarations."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ScenarioError("PARSE_ERROR", str(exc)) from exc
    try:
        scene = scene_from_dict(doc)
    except SceneError as exc:
        raise ScenarioError("VALIDATION_ERROR", f"{exc.code}: {exc.message}", exc.path, exc.code) from exc
    attachments = doc.get("attachments", [])
    if not isinstance(attachments, list):
        raise ScenarioError("VALIDATION_ERROR", "attachments must be a list", "/attachments", "INVALID_FIELD")
    for i, a in enumerate(attachments):
        where = f"/attachments/{i}"
        if not isinstance(a, dict):
            raise ScenarioError("VALIDATION_ERROR", "attachment must be an object", where, "INVALID_FIELD")
        for name in ("key", "namespace", "data_type"):
            if not isinstance(a.get(name), str):
                raise ScenarioError("VALIDATION_ERROR", f"{name} must be a string", f"{where}/{name}", "MISSING_FIELD")
        if not isinstance(a.get("data", a.get("data_base64")), str):
            raise ScenarioError("VALIDATION_ERROR", "data or data_base64 is required", f"{where}/data", "MISSING_FIELD")
        try:
            BeaconKey.parse(a["key"])
        except PhyswebError as exc:
            raise ScenarioError("VALIDATION_ERROR", exc.message, f"{where}/key", exc.code) from exc
    return scene, attachments


def _build_parser() -> _Parser:
    p = _Parser(prog="physweb", description="Physical Web beacon toolkit")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    enc = sub.add_parser("encode", help="encode a frame from field flags, print hex")
    kinds = enc.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    ib = kinds.add_parser("ibeacon")
    ib.add_argument("--uuid", required=True)
    ib.add_argument("--major", type=int, required=True)
    ib.add_argument("--minor", type=int, required=True)
    ib.add_argument("--power", type=int, default=-59)
    uid = kinds.add_parser("eddystone-uid")
    uid.add_argument("--namespace", required=True)
    uid.add_argument("--instance", required=True)
    url = kinds.add_parser("eddystone-url")
    url.add_argument("--url", required=True)
    tlm = kinds.add_parser("eddystone-tlm")
    tlm.add_argument("--version", type=int, default=0)
    tlm.add_argument("--battery-mv", type=int, default=0)
    tlm.add_argument("--temperature", type=float, default=0.0)
    tlm.add_argument("--sec-count", type=int, default=0)
    tlm.add_argument("--adv-count", type=int, default=0)

    dec = sub.add_parser("decode", help="decode packet hex, print a field dump")
    dec.add_argument("hex")

    uc = sub.add_parser("url-compress", help="compress a URL, print hex")
    uc.add_argument("url")
    ue = sub.add_parser("url-expand", help="expand compressed URL hex")
    ue.add_argument("hex")

    sim = sub.add_parser("sim", help="run a scenario, print the timeline as JSON lines")
    sim.add_argument("scenario")

    srv = sub.add_parser("serve", help="run the resolver HTTP service")
    srv.add_argument("--port", type=int, required=True)
    srv.add_argument("--journal", required=True)
    srv.add_argument("--host", default="127.0.0.1")

    e2e = sub.add_parser("e2e", help="run a scenario against a fresh store, print nearby pages")
    e2e.add_argument("scenario")
    e2e.add_argument("--namespace", default=None)
    return p


def _encode(args) -> str:
    if args.kind == "ibeacon":
        frame = IBeaconFrame(_hex(args.uuid), args.major, args.minor, args.power)
    elif args.kind == "eddystone-uid":
        frame = EddystoneUidFrame(_hex(args.namespace), _hex(args.instance))
    elif args.kind == "eddystone-url":
        frame = EddystoneUrlFrame(args.url)
    else:
        frame = EddystoneTlmFrame(args.version, args.battery_mv, args.temperature, args.sec_count, args.adv_count)
    return encode_frame(frame).hex()


def _api(service: ResolverService, method: str, path: str, body) -> dict:
    resp = service.handle_request(ApiRequest(method, path, json.dumps(body).encode("utf-8")))
    if resp.status != 200:
        raise PhyswebError(resp.body["error"], resp.body["message"])
    return resp.body


def run_e2e(scene: Scene, attachments: list, namespace: Optional[str] = None,
            service: Optional[ResolverService] = None) -> list:
    """Seed a store through the API, run the scene, return one line per observer and tick."""
    from urllib.parse import quote

    service = service if service is not None else ResolverService()
    registered = set()
    for a in attachments:
        canonical = BeaconKey.parse(a["key"]).canonical
        if canonical not in registered:
            _api(service, "POST", "/v1/beacons:register", {"key": canonical})
            registered.add(canonical)
        data = a["data_base64"] if "data_base64" in a else base64.b64encode(a["data"].encode("utf-8")).decode("ascii")
        _api(
            service,
            "POST",
            f"/v1/beacons/{quote(canonical, safe='')}/attachments",
            {"namespace": a["namespace"], "data_type": a["data_type"], "data": data},
        )
    lines = []
    for result in run_scenario(scene):
        body = {
            "tick": result.tick,
            "scan": [{"key": e.key.canonical, "rssi": e.rssi} for e in result.entries],
        }
        if namespace is not None:
            body["namespace"] = namespace
        page = _api(service, "POST", "/v1/nearby", body)
        lines.append(
            json.dumps({"tick": result.tick, "observer": result.observer, "page": page},
                       separators=(",", ":"), ensure_ascii=False)
        )
    return lines


def _serve(args) -> int:
    from .service import make_server

    store = AttachmentStore.open(args.journal)
    server = make_server(ResolverService(store), args.host, args.port)
    logger.info("serving on %s:%d, journal %s", args.host, args.port, args.journal)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        store.close()
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = _build_parser().parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    try:
        if args.verb == "encode":
            out = [_encode(args)]
        elif args.verb == "decode":
            out = [describe_frame(decode_frame(_hex(args.hex)))]
        elif args.verb == "url-compress":
            out = [compress_url(args.url).hex()]
        elif args.verb == "url-expand":
            out = [expand_url(_hex(args.hex))]
        elif args.verb == "sim":
            scene, _ = load_scenario(args.scenario)
            out = [r.to_json() for r in run_scenario(scene)]
        elif args.verb == "e2e":
            scene, attachments = load_scenario(args.scenario)
            out = run_e2e(scene, attachments, args.namespace)
        else:
            return _serve(args)
    except SceneError as exc:
        print(str(exc), file=stderr)
        return EXIT_DATA
    except PhyswebError as exc:
        print(f"{exc.code}: {exc.message}", file=stderr)
        return EXIT_DATA
    for line in out:
        print(line, file=stdout)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
