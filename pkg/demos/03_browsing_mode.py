"""
Browsing mode against the resolver
==================================

Register a beacon, attach data to it, then turn scans into nearby pages.
Nothing is pushed: the page exists only because the phone asked for it.
"""

import base64
import json
from pathlib import Path

from physweb import AttachmentStore, BeaconKey, BeaconRegistration, ResolverService
from physweb.cli import load_scenario, run_e2e
from physweb.service import ApiRequest
from physweb.store import journal_replay

# %%
# The store directly: register, attach, resolve.
store = AttachmentStore()
cafe = BeaconKey.eddystone_uid(b"\xca\xfe" * 5, b"\x00" * 5 + b"\x01")
store.register_beacon(BeaconRegistration(cafe, stability="stable", description="corner cafe"))
store.attach(cafe, "menu", "text.plain", b"soup of the day: lentil")
print(store.get_for_observed([cafe]))

# %%
# Every write went into the journal; replaying it rebuilds the store.
for rec in store.journal:
    print(rec.to_line()[:72], "...")
assert journal_replay(store.journal).dump() == store.dump()

# %%
# The same thing over the HTTP-shaped API.
svc = ResolverService(store)
body = {"scan": [{"key": cafe.canonical, "rssi": -62}, {"key": "ssid:http://a.io", "rssi": -48}]}
resp = svc.handle_request(ApiRequest("POST", "/v1/nearby", json.dumps(body).encode()))
for entry in resp.body["entries"]:
    data = [base64.b64decode(a["data"]).decode() for a in entry["attachments"]]
    print(entry["rssi"], entry["key"], entry.get("url"), data)

# %%
# The scripted walk-past scenario: the pedestrian's page carries the car's
# attachment only while they are within range.
scene, attachments = load_scenario(Path(__file__).resolve().parents[1] / "scenarios" / "walk-past.json")
for line in run_e2e(scene, attachments):
    row = json.loads(line)
    if row["observer"] == "pedestrian" and row["page"]["entries"]:
        print(row["tick"], [e["key"] for e in row["page"]["entries"]])
