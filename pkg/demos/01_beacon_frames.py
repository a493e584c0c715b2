"""
Beacon frames byte by byte
==========================

Encode each advertisement type, look at the wire bytes, and decode them
back. Also shows the URL compression table at work and how a Wi-Fi SSID
can carry a URL.
"""

from physweb import (
    EddystoneTlmFrame,
    EddystoneUidFrame,
    EddystoneUrlFrame,
    IBeaconFrame,
    beacon_id,
    compress_url,
    decode_frame,
    encode_frame,
    expand_url,
    parse_ssid_beacon,
)
from physweb.codec import describe_frame

# %%
# An iBeacon: 16-byte proximity UUID, 2-byte major and minor, and the
# calibrated power at one meter.
ib = IBeaconFrame(bytes.fromhex("00112233445566778899aabbccddeeff"), major=1, minor=2, measured_power=-59)
packet = encode_frame(ib)
print(len(packet) - 1, "payload bytes:", packet.hex(" "))

# %%
# Eddystone-UID splits its 16-byte beacon ID into a namespace (who owns
# the beacon) and an instance (which one it is).
uid = EddystoneUidFrame(b"\xaa" * 10, b"\xbb" * 6)
print("beacon id:", beacon_id(uid).hex())

# %%
# Eddystone-URL fits a whole URL into 18 bytes. Common prefixes and
# top-level domains become single bytes.
for url in ["http://example.com/", "https://www.a.org", "https://goo.gl/ab"]:
    packed = compress_url(url)
    print(f"{url:24s} -> {packed.hex(' '):30s} ({len(packed)} bytes) -> {expand_url(packed)}")

# %%
# Telemetry: battery, temperature (signed 8.8 fixed point) and counters.
tlm = EddystoneTlmFrame(battery_mv=3000, temperature_c=20.5, sec_count=100, adv_count=1000)
print(encode_frame(tlm).hex(" "))

# %%
# Everything decodes back to the same value.
for frame in (ib, uid, EddystoneUrlFrame("https://www.a.org"), tlm):
    assert decode_frame(encode_frame(frame)) == frame
    print(describe_frame(decode_frame(encode_frame(frame))))

# %%
# A Wi-Fi access point named after a URL is a beacon nobody had to register.
for ssid in ["http://a.io/menu", "MyHomeAP"]:
    print(ssid, "->", parse_ssid_beacon(ssid).recognized_url)
