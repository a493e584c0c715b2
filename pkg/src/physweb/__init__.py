"""Physical Web beacon toolkit: frame codecs, proximity simulation and a
key-value attachment resolver for browsing-mode discovery."""

from .codec import (
    EddystoneTlmFrame,
    EddystoneUidFrame,
    EddystoneUrlFrame,
    IBeaconFrame,
    SsidBeacon,
    beacon_id,
    compress_url,
    decode_frame,
    encode_frame,
    expand_url,
    parse_ssid_beacon,
)
from .errors import CodecError, CorruptRecordError, PhyswebError, SceneError, StoreError
from .keys import BeaconKey, key_for_frame
from .service import NearbyPage, ResolverService, augment_url, render_nearby
from .sim import (
    Attached,
    Fingerprint,
    ObserverDevice,
    Position,
    RadioNode,
    Scene,
    ScanEntry,
    ScanResult,
    Waypoint,
    advance_scene,
    fingerprint_of,
    path_loss_rssi,
    run_scenario,
    scan,
)
from .store import Attachment, AttachmentStore, BeaconRegistration, journal_replay

__version__ = "0.1.0"
