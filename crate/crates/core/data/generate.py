#!/usr/bin/env python3
"""Regenerates the bundled miniature city and ping datasets.

The ping samples are synthesized, not measured. For every ordered pair of
cities the round-trip time is modelled as

    rtt_ms = 2 * great_circle_km * ROUTE_INFLATION / FIBER_KM_PER_MS + LAST_MILE_MS

and three hourly samples are emitted per direction, each perturbed by a
seeded uniform factor in [-3%, +3%]. Reykjavik is deliberately given only a
handful of pairs so that ingestion has to prune it.

Run from this directory: python3 generate.py
"""

import math
import random

ROUTE_INFLATION = 1.6
FIBER_KM_PER_MS = 200.0
LAST_MILE_MS = 2.0
EARTH_RADIUS_KM = 6371.0

CITIES = [
    ("amsterdam", 52.3676, 4.9041),
    ("bangalore", 12.9716, 77.5946),
    ("chicago", 41.8781, -87.6298),
    ("dallas", 32.7767, -96.7970),
    ("frankfurt", 50.1109, 8.6821),
    ("helsinki", 60.1699, 24.9384),
    ("hong kong", 22.3193, 114.1694),
    ("johannesburg", -26.2041, 28.0473),
    ("london", 51.5074, -0.1278),
    ("melbourne", -37.8136, 144.9631),
    ("montreal", 45.5017, -73.5673),
    ("mumbai", 19.0760, 72.8777),
    ("munich", 48.1351, 11.5820),
    ("new york", 40.7128, -74.0060),
    ("paris", 48.8566, 2.3522),
    ("reykjavik", 64.1466, -21.9426),
    ("san jose", 37.3382, -121.8863),
    ("sao paulo", -23.5505, -46.6333),
    ("seoul", 37.5665, 126.9780),
    ("singapore", 1.3521, 103.8198),
    ("sydney", -33.8688, 151.2093),
    ("tokyo", 35.6762, 139.6503),
    ("toronto", 43.6532, -79.3832),
    ("vancouver", 49.2827, -123.1207),
    ("vilnius", 54.6872, 25.2797),
]

# Reykjavik only reaches these peers.
PARTIAL = {"reykjavik": {"london", "new york", "amsterdam"}}


def haversine(a, b):
    lat1, lon1 = map(math.radians, a)
    lat2, lon2 = map(math.radians, b)
    h = (math.sin((lat2 - lat1) / 2) ** 2
         + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2)
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def reachable(a, b):
    for city, peers in PARTIAL.items():
        if a == city and b not in peers:
            return False
        if b == city and a not in peers:
            return False
    return True


def main():
    rng = random.Random(20230717)
    with open("cities.csv", "w") as f:
        f.write("city,latitude,longitude\n")
        for name, lat, lon in CITIES:
            f.write(f"{name},{lat},{lon}\n")
    with open("pings.csv", "w") as f:
        f.write("source,destination,timestamp,avg\n")
        for src, slat, slon in CITIES:
            for dst, dlat, dlon in CITIES:
                if src == dst or not reachable(src, dst):
                    continue
                km = haversine((slat, slon), (dlat, dlon))
                base = 2 * km * ROUTE_INFLATION / FIBER_KM_PER_MS + LAST_MILE_MS
                for hour in range(3):
                    rtt = base * (1 + rng.uniform(-0.03, 0.03))
                    f.write(f"{src},{dst},2023-07-17T{hour:02d}:00:00Z,{rtt:.3f}\n")


if __name__ == "__main__":
    main()
