"""Greedy k-center coreset selection with per-class quotas and coverage weights."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .data import LabeledDataset

METRICS = ("euclidean", "hilbert-schmidt", "infidelity")
WEIGHT_MODES = ("normalized", "raw")


def _flat(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points)
    return points.reshape(points.shape[0], -1)


def distances_to(points: np.ndarray, anchor: np.ndarray, metric: str) -> np.ndarray:
    """Distance from ``anchor`` to every row of ``points``."""
    if metric in ("euclidean", "hilbert-schmidt"):
        # Frobenius norm of the difference of density matrices equals the
        # Euclidean norm of the flattened complex difference.
        diff = _flat(points) - np.asarray(anchor).reshape(1, -1)
        return np.sqrt(np.sum(np.abs(diff) ** 2, axis=1))
    if metric == "infidelity":
        ov = np.abs(_flat(points).conj() @ np.asarray(anchor).reshape(-1)) ** 2
        return np.sqrt(np.clip(1.0 - ov, 0.0, None))
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


def distance(a, b, metric: str) -> float:
    return float(distances_to(np.asarray(a)[None], np.asarray(b), metric)[0])


def default_metric(ds: LabeledDataset) -> str:
    feats = ds.features
    if feats.ndim == 3:
        return "hilbert-schmidt"
    if np.iscomplexobj(feats):
        return "infidelity"
    return "euclidean"


@dataclass(frozen=True)
class Coreset:
    center_indices: np.ndarray
    weights: np.ndarray
    class_radii: dict
    radius: float
    prune_rate: float
    seed: int
    metric: str

    @property
    def size(self) -> int:
        return len(self.center_indices)

    def to_json(self) -> dict:
        return {
            "center_indices": [int(i) for i in self.center_indices],
            "weights": [int(w) for w in self.weights],
            "class_radii": {str(k): float(v) for k, v in self.class_radii.items()},
            "radius": float(self.radius),
            "prune_rate": float(self.prune_rate),
            "seed": self.seed,
            "metric": self.metric,
        }

    @classmethod
    def from_json(cls, d: dict) -> Coreset:
        return cls(
            np.asarray(d["center_indices"], dtype=np.int64),
            np.asarray(d["weights"], dtype=np.int64),
            {int(k): float(v) for k, v in d["class_radii"].items()},
            float(d["radius"]),
            float(d["prune_rate"]),
            d["seed"],
            d["metric"],
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2))

    @classmethod
    def load(cls, path) -> Coreset:
        return cls.from_json(json.loads(Path(path).read_text()))


def class_quotas(class_sizes: Sequence[int], k: int) -> list[int]:
    """``ceil(|S_j| / |S| * k)`` per class, capped at the class size.

    Whatever a capped class cannot take goes to the largest class with room.
    """
    sizes = [int(s) for s in class_sizes]
    total = sum(sizes)
    quotas = [-(-s * k // total) for s in sizes]
    surplus = 0
    for j, s in enumerate(sizes):
        if quotas[j] > s:
            surplus += quotas[j] - s
            quotas[j] = s
    while surplus > 0:
        room = [j for j in range(len(sizes)) if quotas[j] < sizes[j]]
        if not room:
            break
        j = max(room, key=lambda c: (sizes[c] - quotas[c], -c))
        quotas[j] += 1
        surplus -= 1
    return quotas


def _greedy_class(points: np.ndarray, first: int, quota: int, metric: str) -> list[int]:
    """Farthest-point traversal inside one class (local indices)."""
    chosen = [first]
    nearest = distances_to(points, points[first], metric)
    nearest[first] = -1.0
    while len(chosen) < quota:
        nxt = int(np.argmax(nearest))  # first maximum: smallest index wins ties
        chosen.append(nxt)
        nearest = np.minimum(nearest, distances_to(points, points[nxt], metric))
        nearest[chosen] = -1.0
    return chosen


def covering_radius(ds: LabeledDataset, centers: Sequence[int], metric: str, cls: int) -> float:
    """Largest distance from a class-``cls`` point to its nearest class-``cls`` center."""
    members = ds.class_indices(cls)
    own = [int(c) for c in centers if ds.labels[c] == cls]
    if not own:
        raise ValueError(f"no centers for class {cls}")
    pts = ds.features[members]
    nearest = np.full(len(members), np.inf)
    for c in own:
        nearest = np.minimum(nearest, distances_to(pts, ds.features[c], metric))
    return float(nearest.max())


def compute_weights(ds: LabeledDataset, centers: Sequence[int], class_radii: Mapping[int, float], metric: str) -> np.ndarray:
    """Count same-class points within the class radius of each center."""
    out = np.empty(len(centers), dtype=np.int64)
    for s, c in enumerate(centers):
        cls = int(ds.labels[c])
        pts = ds.features[ds.class_indices(cls)]
        d = distances_to(pts, ds.features[c], metric)
        out[s] = int(np.count_nonzero(d <= class_radii[cls]))
    return out


def greedy_k_center(
    ds: LabeledDataset,
    k: int,
    metric: str | None = None,
    seed: int = 0,
    first: Mapping[int, int] | None = None,
) -> Coreset:
    """Per-class greedy k-center coreset with coverage-count weights.

    ``first`` optionally fixes the initial center of a class (dataset index)
    instead of the seeded uniform pick.
    """
    metric = metric or default_metric(ds)
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    if not ds.n_c <= k <= ds.n:
        raise ValueError(f"k={k} outside [{ds.n_c}, {ds.n}]")
    rng = np.random.default_rng(seed)
    members = [ds.class_indices(c) for c in range(ds.n_c)]
    if any(len(m) == 0 for m in members):
        raise ValueError("empty class")
    quotas = class_quotas([len(m) for m in members], k)
    centers: list[int] = []
    radii: dict[int, float] = {}
    for c, idx in enumerate(members):
        if first is not None and c in first:
            local = np.flatnonzero(idx == first[c])
            if len(local) != 1:
                raise ValueError(f"forced first center {first[c]} is not in class {c}")
            start = int(local[0])
        else:
            start = int(rng.integers(len(idx)))
        chosen = _greedy_class(ds.features[idx], start, quotas[c], metric)
        centers.extend(int(idx[i]) for i in chosen)
        radii[c] = covering_radius(ds, [int(idx[i]) for i in chosen], metric, c)
    weights = compute_weights(ds, centers, radii, metric)
    return Coreset(
        center_indices=np.asarray(centers, dtype=np.int64),
        weights=weights,
        class_radii=radii,
        radius=max(radii.values()),
        prune_rate=len(centers) / ds.n,
        seed=seed,
        metric=metric,
    )


def random_subset(ds: LabeledDataset, size: int, seed: int) -> np.ndarray:
    """Uniform subset without replacement; redrawn until every class appears."""
    if not ds.n_c <= size <= ds.n:
        raise ValueError(f"size={size} outside [{ds.n_c}, {ds.n}]")
    rng = np.random.default_rng(seed)
    while True:
        idx = np.sort(rng.choice(ds.n, size=size, replace=False))
        if len(np.unique(ds.labels[idx])) == ds.n_c:
            return idx


def weighted_mean(losses, weights, mode: str = "normalized") -> float:
    losses = np.asarray(losses, dtype=float)
    w = np.asarray(weights, dtype=float)
    if losses.size == 0:
        raise ValueError("empty coreset")
    if w.shape != losses.shape:
        raise ValueError("weights must align with losses")
    if mode == "normalized":
        return float(w @ losses / w.sum())
    if mode == "raw":
        return float(w @ losses / len(losses))
    raise ValueError(f"unknown weight mode {mode!r}")


def coreset_error(full_losses, coreset_losses, weights, mode: str = "normalized") -> float:
    """``|R_e - R_c|`` between the full-set mean loss and the weighted coreset loss."""
    full = np.asarray(full_losses, dtype=float)
    if full.size == 0:
        raise ValueError("empty full loss list")
    return abs(float(full.mean()) - weighted_mean(coreset_losses, weights, mode))
