"""
A tag that moves with its owner
===============================

A phone in a parked car advertises a Bluetooth node. A pedestrian walks
past; the node shows up in the pedestrian's scans only while the two are
close. Then the car drives off and the visibility window moves with it.
"""

import numpy as np

from physweb import (
    Attached,
    BeaconKey,
    ObserverDevice,
    RadioNode,
    Scene,
    Waypoint,
    path_loss_rssi,
    run_scenario,
)
from physweb.service import augment_url
from physweb.sim import fingerprint_of

# %%
# The radio model is log-distance path loss with no noise, so visibility
# is a pure function of geometry.
d = np.array([0.0, 1.0, 2.0, 5.0, 10.0, 20.0])
print("rssi at", d, "m:", [round(path_loss_rssi(-59, x, 2.0), 1) for x in d])


def scene_for(car_path):
    car = ObserverDevice("car", car_path)
    walker = ObserverDevice("walker", [Waypoint(0, -30, 3), Waypoint(60, 30, 3)], sensitivity=-80)
    tag = RadioNode(BeaconKey.mac("02:00:00:00:00:01"), None, Attached("car"), -59)
    return Scene([tag], [car, walker], path_loss_exponent=2.0, tick_seconds=1.0, duration_ticks=61)


# %%
# Parked at the origin vs. driving the other way.
for label, path in [("parked", [Waypoint(0, 0, 0)]), ("driving", [Waypoint(0, 20, 0), Waypoint(60, -40, 0)])]:
    seen = [r.tick for r in run_scenario(scene_for(path)) if r.observer == "walker" and r.entries]
    print(f"{label:8s} visible on ticks {seen[0]}..{seen[-1]} ({len(seen)} ticks)")

# %%
# What the walker sees can be sent along as URL context.
timeline = run_scenario(scene_for([Waypoint(0, 0, 0)]))
at_30 = next(r for r in timeline if r.observer == "walker" and r.tick == 30)
print(augment_url("http://some_domain.com/", fingerprint_of(at_30)))
