"""Evaluation metrics and the repeated-evaluation harness.

F1 compares unordered POI sets.  PairsF1 compares visiting order: both
sequences are first deduplicated to first occurrences, then scored on
their sets of ordered (before, after) pairs.  REP measures repetition
inside generated trips directly: the fraction of positions occupied by
a POI already visited earlier in the same trip, averaged over trips.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from artrip.data import Query, Trajectory, make_query
from artrip.decoding import DecodeConfig, Trip, decode_config_for_query, decode_trip
from artrip.guidance import ConfidenceVector, GuidanceMatrix


def _pois(seq) -> tuple[int, ...]:
    if isinstance(seq, (Trip, Trajectory)):
        return tuple(seq.pois)
    return tuple(seq)


def f1_score(pred, truth) -> float:
    """Harmonic mean of set precision and recall; 0.0 when degenerate."""
    pred_set = set(_pois(pred))
    truth_set = set(_pois(truth))
    if not pred_set or not truth_set:
        return 0.0
    hits = len(pred_set & truth_set)
    precision = hits / len(pred_set)
    recall = hits / len(truth_set)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _dedup(seq: tuple[int, ...]) -> tuple[int, ...]:
    seen: set[int] = set()
    out = []
    for poi in seq:
        if poi not in seen:
            seen.add(poi)
            out.append(poi)
    return tuple(out)


def _ordered_pairs(seq: tuple[int, ...]) -> set[tuple[int, int]]:
    return {(seq[i], seq[j]) for i in range(len(seq)) for j in range(i + 1, len(seq))}


def pairs_f1(pred, truth) -> float:
    """F1 over ordered pairs of the first-occurrence-deduplicated sequences.

    Single-POI sequences have no pairs; the score is then 1.0 exactly
    when the deduplicated sequences are identical, else 0.0.
    """
    pred_seq = _dedup(_pois(pred))
    truth_seq = _dedup(_pois(truth))
    pred_pairs = _ordered_pairs(pred_seq)
    truth_pairs = _ordered_pairs(truth_seq)
    if not pred_pairs or not truth_pairs:
        if not pred_pairs and not truth_pairs:
            return 1.0 if pred_seq == truth_seq else 0.0
        return 0.0
    hits = len(pred_pairs & truth_pairs)
    precision = hits / len(pred_pairs)
    recall = hits / len(truth_pairs)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def trip_repetition(trip) -> float:
    """Fraction of a single trip's positions that revisit an earlier POI."""
    pois = _pois(trip)
    if not pois:
        raise ValueError("empty trip has no repetition ratio")
    return (len(pois) - len(set(pois))) / len(pois)


def rep_score(trips) -> float:
    """Mean repetition ratio over a batch of trips."""
    trips = list(trips)
    if not trips:
        raise ValueError("rep_score needs at least one trip")
    return float(np.mean([trip_repetition(t) for t in trips]))


@dataclass
class MetricReport:
    """Per-repeat rows plus mean/std aggregates across repeats."""

    f1_mean: float
    f1_std: float
    pairs_f1_mean: float
    pairs_f1_std: float
    rep_mean: float
    rep_std: float
    repeats: int
    rows: list[dict] = field(default_factory=list)


def evaluate_decoder(decode_fn, test: list[Trajectory], repeats: int, base_seed: int) -> MetricReport:
    """Score any query -> trip generator against held-out trajectories.

    `decode_fn(query, ordinal, repeat_seed)` must return a Trip.  Each
    repeat r runs every test query with base seed `base_seed + r`, and
    per-query seeds are derived from the query's ordinal, so reruns are
    reproducible row for row.
    """
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    if not test:
        raise ValueError("empty test split")
    rows: list[dict] = []
    per_repeat = {"f1": [], "pairs_f1": [], "rep": []}
    for r in range(repeats):
        repeat_seed = base_seed + r
        f1s, pairs, reps = [], [], []
        for ordinal, truth in enumerate(test):
            query = make_query(truth)
            trip = decode_fn(query, ordinal, repeat_seed)
            row = {
                "repeat": r,
                "query": ordinal,
                "f1": f1_score(trip, truth),
                "pairs_f1": pairs_f1(trip, truth),
                "rep": trip_repetition(trip),
            }
            rows.append(row)
            f1s.append(row["f1"])
            pairs.append(row["pairs_f1"])
            reps.append(row["rep"])
        per_repeat["f1"].append(float(np.mean(f1s)))
        per_repeat["pairs_f1"].append(float(np.mean(pairs)))
        per_repeat["rep"].append(float(np.mean(reps)))
    return MetricReport(
        f1_mean=float(np.mean(per_repeat["f1"])),
        f1_std=float(np.std(per_repeat["f1"])),
        pairs_f1_mean=float(np.mean(per_repeat["pairs_f1"])),
        pairs_f1_std=float(np.std(per_repeat["pairs_f1"])),
        rep_mean=float(np.mean(per_repeat["rep"])),
        rep_std=float(np.std(per_repeat["rep"])),
        repeats=repeats,
        rows=rows,
    )


def evaluate(
    params,
    pm: GuidanceMatrix,
    conf: ConfidenceVector,
    test: list[Trajectory],
    cfg: DecodeConfig,
    repeats: int = 1,
) -> MetricReport:
    """Decode every test query with the model and score the trips."""

    def decode_fn(query: Query, ordinal: int, repeat_seed: int) -> Trip:
        per_query = decode_config_for_query(cfg, repeat_seed, ordinal)
        return decode_trip(query, params, pm, conf, per_query)

    return evaluate_decoder(decode_fn, test, repeats, cfg.seed)


def write_metrics_csv(report: MetricReport, path) -> None:
    """Per-query rows plus mean and std summary rows, stable ordering."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["repeat", "query", "f1", "pairs_f1", "rep"])
        for row in report.rows:
            writer.writerow(
                [row["repeat"], row["query"], repr(row["f1"]), repr(row["pairs_f1"]), repr(row["rep"])]
            )
        writer.writerow(["mean", "", repr(report.f1_mean), repr(report.pairs_f1_mean), repr(report.rep_mean)])
        writer.writerow(["std", "", repr(report.f1_std), repr(report.pairs_f1_std), repr(report.rep_std)])
