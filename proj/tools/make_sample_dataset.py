#!/usr/bin/env python3
"""Writes a synthetic speed-test style dataset (lat,lon,latency_ms).

Points are scattered around population centers; last-mile latency is
lognormal with a regional median. Deterministic for a given seed.
"""

import argparse
import csv

import numpy as np

# (lat, lon, weight, median last-mile ms)
CENTERS = [
    (40.71, -74.01, 8, 12), (34.05, -118.24, 6, 13), (41.88, -87.63, 4, 12),
    (29.76, -95.37, 3, 14), (47.61, -122.33, 2, 11), (43.65, -79.38, 3, 12),
    (19.43, -99.13, 5, 22), (-23.55, -46.63, 6, 20), (-34.60, -58.38, 3, 21),
    (4.71, -74.07, 2, 24), (51.51, -0.13, 6, 10), (48.86, 2.35, 5, 10),
    (52.52, 13.40, 4, 10), (40.42, -3.70, 3, 11), (41.90, 12.50, 3, 12),
    (55.76, 37.62, 4, 14), (59.33, 18.07, 1, 9), (30.04, 31.24, 4, 28),
    (6.52, 3.38, 4, 35), (-1.29, 36.82, 2, 32), (-26.20, 28.05, 2, 26),
    (28.61, 77.21, 8, 25), (19.08, 72.88, 7, 24), (35.68, 139.69, 7, 9),
    (37.57, 126.98, 4, 8), (31.23, 121.47, 7, 15), (39.90, 116.41, 6, 15),
    (22.32, 114.17, 3, 9), (1.35, 103.82, 2, 8), (-6.21, 106.85, 5, 27),
    (14.60, 120.98, 4, 28), (13.76, 100.50, 3, 20), (-33.87, 151.21, 2, 14),
    (-37.81, 144.96, 2, 14), (24.71, 46.68, 2, 20), (25.20, 55.27, 2, 16),
]


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--rows", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=2026)
    parser.add_argument("--out", default="data/speedtest_sample.csv")
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    weights = np.array([c[2] for c in CENTERS], dtype=float)
    picks = rng.choice(len(CENTERS), size=args.rows, p=weights / weights.sum())
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["lat", "lon", "latency_ms"])
        for i in picks:
            lat, lon, _, median = CENTERS[i]
            lat = float(np.clip(lat + rng.normal(0, 1.5), -89.9, 89.9))
            lon = (lon + rng.normal(0, 1.5) + 180) % 360 - 180
            ms = median * float(np.exp(rng.normal(0, 0.45)))
            w.writerow([f"{lat:.4f}", f"{lon:.4f}", f"{ms:.2f}"])


if __name__ == "__main__":
    main()
