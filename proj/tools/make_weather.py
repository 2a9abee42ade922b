#!/usr/bin/env python3
"""Writes the bundled 20-day hourly outdoor temperature series.

The series is synthetic: a diurnal cycle, a slow warming trend and multi-day
weather fronts roughly matching April climatology in Berlin. It stands in for a
recorded station file; any real hourly CSV or EPW file can replace it.
"""
import argparse
import datetime as dt
import math
import random


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/weather_berlin_april.csv")
    ap.add_argument("--days", type=int, default=20)
    ap.add_argument("--seed", type=int, default=2016)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    start = dt.datetime(2016, 4, 1)
    hours = args.days * 24 + 1
    noise = 0.0
    with open(args.out, "w", newline="\n") as f:
        f.write("datetime,temp_c\n")
        for h in range(hours):
            day = h / 24.0
            trend = 10.5 + 0.12 * day
            diurnal = 4.5 * math.sin(2 * math.pi * (h - 9) / 24.0)
            fronts = 2.5 * math.sin(2 * math.pi * day / 5.3 + 1.0) + 1.2 * math.sin(2 * math.pi * day / 2.1)
            noise = 0.85 * noise + rng.gauss(0.0, 0.35)
            temp = trend + diurnal + fronts + noise
            stamp = (start + dt.timedelta(hours=h)).strftime("%Y-%m-%dT%H:%M:%S")
            f.write(f"{stamp},{temp:.1f}\n")


if __name__ == "__main__":
    main()
