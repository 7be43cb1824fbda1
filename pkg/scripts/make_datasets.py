"""Generate the bundled synthetic check-in corpora.

Each city directory gets a POI table and a photo-stream style visit
log in the canonical schema (poiID,poiName,lat,long,theme and
userID,seqID,poiID,dateTaken).  Routes are simulated with three
ingredients that matter for repetition experiments: a Zipf popularity
skew, so a few POIs dominate every position's marginal distribution; a
per-POI position affinity, so the guidance statistics still carry
usable position signal; and, in the hubbed cities, district stations
that a route calls at twice, so ground truth itineraries contain
honest revisits.  Organic stops never repeat inside a trip.

Every city is seeded, so rerunning this script reproduces the
committed CSVs byte for byte.
"""

from __future__ import annotations

import argparse
import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

THEMES = (
    "Park",
    "Museum",
    "Church",
    "Gallery",
    "Square",
    "Market",
    "Castle",
    "Garden",
    "Bridge",
    "Theatre",
)

# photos taken around early 2013
BASE_EPOCH = 1357030800


@dataclass
class CitySpec:
    name: str
    seed: int
    num_pois: int
    num_trips: int
    max_len: int
    center: tuple[float, float]
    min_len: int = 3
    band_width: float = 0.22
    zipf_s: float = 1.3
    num_users: int = 40
    unknown_rows: int = 3
    # routes walk a sparse symmetric neighbor graph (popular sights
    # cluster along a few corridors), so transition mass concentrates
    # on bidirectional edges the way it does in real city corpora
    num_neighbors: int = 3
    # the two most popular POIs form a bonded landmark pair: visited
    # back to back somewhere in the middle of a trip, in either order,
    # and never apart; everything else avoids them
    anchor_rate: float = 0.45
    anchor_bias: float = 0.5
    # the most photographed POIs act as district stations: a long trip
    # detours to one of a station's feeder sights, calls at the station
    # right away and swings back past it once more later on, the way
    # real itineraries keep returning to a main square or terminus
    hub_rate: float = 0.0
    num_hubs: int = 3
    hub_min_len: int = 6
    num_triggers: int = 6


CITIES = (
    CitySpec("edinburgh", seed=11, num_pois=36, num_trips=170, max_len=8, center=(55.953, -3.188),
             band_width=0.24, zipf_s=1.35, num_neighbors=2, anchor_rate=0.4),
    CitySpec("glasgow", seed=23, num_pois=60, num_trips=240, max_len=8, min_len=5,
             center=(55.861, -4.250), band_width=0.24, zipf_s=1.4, num_neighbors=0,
             anchor_rate=0.0, hub_rate=0.8, num_hubs=8, num_triggers=16),
    CitySpec("osaka", seed=33, num_pois=32, num_trips=150, max_len=7, center=(34.694, 135.502),
             band_width=0.28, zipf_s=1.45, num_neighbors=0, anchor_rate=0.0, hub_rate=0.5),
    CitySpec("toronto", seed=44, num_pois=40, num_trips=190, max_len=8, center=(43.651, -79.347),
             band_width=0.22, zipf_s=1.25, num_neighbors=3, anchor_rate=0.5),
)


def make_city(spec: CitySpec):
    rng = np.random.default_rng(spec.seed)
    k = spec.num_pois
    lats = spec.center[0] + rng.normal(0.0, 0.02, k)
    lons = spec.center[1] + rng.normal(0.0, 0.02, k)
    themes = [THEMES[int(t)] for t in rng.integers(0, len(THEMES), k)]
    pois = [
        {
            "poiID": i + 1,
            "poiName": f"{themes[i]} {i + 1:02d}",
            "lat": round(float(lats[i]), 6),
            "long": round(float(lons[i]), 6),
            "theme": themes[i],
        }
        for i in range(k)
    ]
    # low ids are the heavy hitters
    popularity = 1.0 / np.arange(1, k + 1) ** spec.zipf_s
    # each POI prefers one stretch of the trip, uniformly covering [0, 1]
    affinity = rng.permutation(np.linspace(0.0, 1.0, k))
    # symmetric corridor graph over affinity-adjacent POIs
    adjacency = np.zeros((k, k), dtype=bool)
    jitter = rng.normal(0.0, 0.05, (k, k))
    for i in range(k):
        gap = np.abs(affinity - affinity[i]) + jitter[i]
        gap[i] = np.inf
        for j in np.argsort(gap)[: spec.num_neighbors]:
            adjacency[i, j] = adjacency[j, i] = True

    # feeder sights for the stations: one popular place per stretch of
    # the trip, each tied to the station of its district
    reserved = spec.num_hubs if spec.hub_rate > 0 else 2
    by_affinity = np.argsort(affinity[reserved:]) + reserved
    slices = np.array_split(by_affinity, spec.num_triggers)
    trigger_hub = {int(part.min()): j % spec.num_hubs for j, part in enumerate(slices)}

    user_ids = []
    while len(set(user_ids)) < spec.num_users:
        user_ids = [f"{n}@N00" for n in rng.integers(10_000_000, 99_999_999, spec.num_users)]
    user_ids = sorted(set(user_ids))

    visits = []
    for seq_id in range(1, spec.num_trips + 1):
        user = user_ids[int(rng.integers(0, len(user_ids)))]
        n = int(rng.integers(spec.min_len, spec.max_len + 1))
        hubbed = n >= spec.hub_min_len and rng.random() < spec.hub_rate
        hub_poi = -1
        hub_returns: list[int] = []
        # the feeder sight is never the opening stop (the start is given,
        # not chosen) and comes early enough that a swing back always
        # fits; full-length days detour right after setting out
        feeder_at = -1
        if hubbed:
            feeder_at = 1 if n == spec.max_len else int(rng.integers(1, n - 4))
        has_anchor = not hubbed and n >= 4 and rng.random() < spec.anchor_rate
        # the pair lands on interior slots only, anywhere between the endpoints
        anchor_at = int(rng.integers(1, n - 2)) if has_anchor else -1
        route: list[int] = []
        while len(route) < n:
            pos = len(route)
            if pos in hub_returns:
                route.append(hub_poi)
                continue
            if pos == anchor_at:
                route.extend((0, 1) if rng.random() < spec.anchor_bias else (1, 0))
                continue
            tau = pos / (n - 1)
            weight = popularity * np.exp(-((affinity - tau) ** 2) / (2.0 * spec.band_width**2))
            weight[:reserved] = 0.0
            weight[route] = 0.0
            if pos == feeder_at:
                # the trip detours to one of the station feeders next
                feeders = np.zeros(k)
                feeders[list(trigger_hub)] = weight[list(trigger_hub)]
                if feeders.sum() > 0:
                    weight = feeders
            elif route:
                # stay on the corridor graph while any unvisited neighbor remains
                near = weight * adjacency[route[-1]]
                if near.sum() > 0:
                    weight = near
            weight = weight / weight.sum()
            choice = int(rng.choice(k, p=weight))
            route.append(choice)
            if pos == feeder_at and choice in trigger_hub:
                # first call at the station, straight from its feeder sight
                hub_poi = trigger_hub[choice]
                route.append(hub_poi)
                # swing back as soon as the loop allows, never right away
                # and never as the final stop; the longest days squeeze in
                # a second pass near the end
                later = list(range(len(route) + 1, n - 1))
                if later:
                    hub_returns.append(later[0])
                    if later[-1] >= later[0] + 2:
                        hub_returns.append(later[-1])
        day = int(rng.integers(0, 365))
        ts = BASE_EPOCH + day * 86400 + int(rng.integers(9, 14)) * 3600
        for poi in route:
            photos = int(rng.integers(1, 4))
            for shot in range(photos):
                visits.append(
                    {
                        "userID": user,
                        "seqID": seq_id,
                        "poiID": poi + 1,
                        "dateTaken": ts + shot * int(rng.integers(30, 240)),
                    }
                )
            ts += int(rng.integers(1800, 5400))
    # a few photos at places missing from the POI table; the loader drops them
    for _ in range(spec.unknown_rows):
        row = visits[int(rng.integers(0, len(visits)))]
        visits.append(
            {
                "userID": row["userID"],
                "seqID": row["seqID"],
                "poiID": 900 + int(rng.integers(0, 50)),
                "dateTaken": row["dateTaken"] + 60,
            }
        )
    return pois, visits


def write_city(spec: CitySpec, out_root: Path) -> None:
    pois, visits = make_city(spec)
    city_dir = out_root / spec.name
    city_dir.mkdir(parents=True, exist_ok=True)
    with open(city_dir / f"POI-{spec.name}.csv", "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["poiID", "poiName", "lat", "long", "theme"], lineterminator="\n"
        )
        writer.writeheader()
        writer.writerows(pois)
    with open(city_dir / f"userVisits-{spec.name}.csv", "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["userID", "seqID", "poiID", "dateTaken"], lineterminator="\n"
        )
        writer.writeheader()
        writer.writerows(visits)
    print(f"{spec.name}: {len(pois)} POIs, {len(visits)} visit rows -> {city_dir}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="data", help="output root directory")
    parser.add_argument("--cities", nargs="*", default=[c.name for c in CITIES])
    args = parser.parse_args()
    known = {c.name: c for c in CITIES}
    for name in args.cities:
        if name not in known:
            raise SystemExit(f"unknown city {name!r}; choose from {sorted(known)}")
        write_city(known[name], Path(args.out))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
