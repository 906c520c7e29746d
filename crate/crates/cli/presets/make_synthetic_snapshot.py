"""Writes synthetic_snapshot.csv: a few inclined Walker-delta shells, some of
them outside the 400-450 km band, with a little altitude jitter.

The file stands in for a real ephemeris snapshot; any public TLE set can be
converted to the same lat_deg,lon_deg,alt_km layout.
"""

import csv
import math
import random

# (inclination deg, altitude km, planes, sats per plane, phasing)
SHELLS = [
    (53.0, 430.0, 108, 100, 1),
    (43.0, 415.0, 60, 60, 7),
    (97.6, 445.0, 20, 40, 3),
    (53.0, 550.0, 24, 22, 1),
    (70.0, 570.0, 12, 20, 5),
]


def positions(incl, planes, per_plane, phasing):
    ci, si = math.cos(math.radians(incl)), math.sin(math.radians(incl))
    for k in range(planes):
        raan = 2.0 * math.pi * k / planes
        co, so = math.cos(raan), math.sin(raan)
        for j in range(per_plane):
            u = 2.0 * math.pi * j / per_plane + 2.0 * math.pi * phasing * k / (planes * per_plane)
            cu, su = math.cos(u), math.sin(u)
            x = co * cu - so * su * ci
            y = so * cu + co * su * ci
            z = su * si
            yield math.degrees(math.asin(max(-1.0, min(1.0, z)))), math.degrees(math.atan2(y, x))


def main():
    rng = random.Random(425)
    with open("synthetic_snapshot.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["sat_id", "lat_deg", "lon_deg", "alt_km"])
        n = 0
        for incl, alt, planes, per_plane, phasing in SHELLS:
            for lat, lon in positions(incl, planes, per_plane, phasing):
                w.writerow([f"S{n:05d}", f"{lat:.4f}", f"{lon:.4f}", f"{alt + rng.uniform(-4.0, 4.0):.2f}"])
                n += 1


if __name__ == "__main__":
    main()
