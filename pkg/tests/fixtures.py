"""Shared fixtures: golden confusion-matrix counts, and helpers that
turn raw counts into crafted assignment streams."""
from collections import Counter

from facereid.matcher import MATCHED, UNKNOWN, Assignment

TABLE1 = {
    "A": {4: 32, 2: 27, "unknown": 3},
    "B": {4: 4, 1: 196, "unknown": 3},
    "C": {3: 128, "unknown": 4},
}


def crafted_run(counts):
    """One observation per frame (track 1) reproducing ``counts`` exactly."""
    assigned, truth = [], {}
    frame = 0
    for label, row in counts.items():
        for key, n in Counter(row).items():
            for _ in range(n):
                if key == "unknown":
                    assigned.append(Assignment(frame, 1, UNKNOWN))
                else:
                    assigned.append(Assignment(frame, 1, MATCHED, key))
                truth[(frame, 1)] = label
                frame += 1
    return assigned, truth
