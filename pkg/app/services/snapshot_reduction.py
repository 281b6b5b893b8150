"""
Snapshot Reduction Service
Selects weighted representative hours from full-year series with k-means
"""

import logging
import shutil
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from sklearn.cluster import KMeans
from sklearn.preprocessing import MinMaxScaler

from app.core.config import get_settings
from app.core.exceptions import ConfigurationError, NetworkDataError
from app.network.loader import (
    AVAILABILITY_FILE,
    BUSES_FILE,
    GENERATORS_FILE,
    LINES_FILE,
    LOADS_FILE,
    SNAPSHOT_COLUMNS,
    SNAPSHOTS_FILE,
)

logger = logging.getLogger(__name__)

LOAD_PREFIX = "load:"
AVAILABILITY_PREFIX = "avail:"


@dataclass(frozen=True)
class FeatureMatrix:
    """Min-max normalized hourly features; rows follow the source hours"""
    hours: Tuple[str, ...]
    columns: Tuple[str, ...]
    values: np.ndarray
    minimum: np.ndarray
    maximum: np.ndarray

    @property
    def n_hours(self) -> int:
        return len(self.hours)


@dataclass(frozen=True)
class SnapshotSelection:
    """Representative hours and the hours per period each one stands for"""
    hours: Tuple[str, ...]
    positions: np.ndarray
    weights: np.ndarray
    labels: np.ndarray
    centroids: np.ndarray

    def as_frame(self) -> pd.DataFrame:
        return pd.DataFrame({SNAPSHOT_COLUMNS[0]: list(self.hours), SNAPSHOT_COLUMNS[1]: self.weights})


def build_feature_matrix(loads: pd.DataFrame, availability: Optional[pd.DataFrame] = None) -> FeatureMatrix:
    """
    Stack per-bus demand and per-generator availability into normalized features.

    Args:
        loads: Demand in MW, one row per hour, one column per bus
        availability: Availability factors, same index, one column per generator

    Returns:
        FeatureMatrix with every entry in [0, 1]; constant columns map to 0
    """
    frames = [loads.add_prefix(LOAD_PREFIX)]
    if availability is not None and not availability.empty:
        if not availability.index.equals(loads.index):
            raise NetworkDataError("availability and load series cover different hours")
        frames.append(availability.add_prefix(AVAILABILITY_PREFIX))
    features = pd.concat(frames, axis=1).astype(float)
    if features.isna().any().any():
        raise NetworkDataError("feature series contain missing values")

    scaler = MinMaxScaler()
    values = np.clip(scaler.fit_transform(features.to_numpy()), 0.0, 1.0)
    return FeatureMatrix(
        hours=tuple(str(h) for h in features.index),
        columns=tuple(features.columns),
        values=values,
        minimum=scaler.data_min_,
        maximum=scaler.data_max_,
    )


def _exact_weights(sizes: np.ndarray, period_hours: float, n_hours: int) -> np.ndarray:
    weights = sizes * (period_hours / n_hours)
    # rounding residual goes to the largest cluster so the sum is exact
    weights[int(np.argmax(sizes))] += period_hours - weights.sum()
    return weights


def _reseed_empty_clusters(values: np.ndarray, labels: np.ndarray, centers: np.ndarray,
                           k: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Give every empty cluster the hour farthest from its own centroid.

    KMeans leaves clusters empty when source hours repeat. Donors are taken
    from clusters with more than one member, which exist as long as k <= hours.
    """
    sizes = np.bincount(labels, minlength=k)
    for cluster in np.flatnonzero(sizes == 0):
        donors = np.flatnonzero(sizes[labels] > 1)
        distances = np.linalg.norm(values[donors] - centers[labels[donors]], axis=1)
        row = donors[int(np.argmax(distances))]
        donor_cluster = labels[row]

        labels[row] = cluster
        centers[cluster] = values[row]
        sizes[cluster] += 1
        sizes[donor_cluster] -= 1
        centers[donor_cluster] = values[labels == donor_cluster].mean(axis=0)
        logger.debug(f"🔧 Re-seeded empty cluster {cluster} with source row {row}")
    return labels, centers


def reduce_snapshots(features: FeatureMatrix, k: int, seed: int = 0,
                     period_hours: Optional[float] = None) -> SnapshotSelection:
    """
    Cluster the source hours and keep the member hour nearest each centroid.

    Args:
        features: Normalized feature matrix
        k: Number of representative hours
        seed: Random state of the k-means++ initialization
        period_hours: Length the weights sum to (number of source hours by default)

    Returns:
        SnapshotSelection in chronological order of the chosen hours

    Raises:
        ConfigurationError: k outside [1, number of hours]
    """
    n = features.n_hours
    if not 1 <= k <= n:
        raise ConfigurationError(f"k must be between 1 and {n} source hours, got {k}")
    period_hours = float(n) if period_hours is None else float(period_hours)
    settings = get_settings()

    # sklearn relocates centroids of clusters emptied during the iterations
    kmeans = KMeans(
        n_clusters=k,
        init="k-means++",
        n_init=settings.kmeans_n_init,
        max_iter=settings.kmeans_max_iter,
        tol=settings.kmeans_tol,
        random_state=seed,
    ).fit(features.values)

    labels, centers = _reseed_empty_clusters(features.values, kmeans.labels_.copy(),
                                             kmeans.cluster_centers_.copy(), k)
    sizes = np.bincount(labels, minlength=k).astype(float)

    medoids = np.empty(k, dtype=int)
    for cluster in range(k):
        members = np.flatnonzero(labels == cluster)
        distances = np.linalg.norm(features.values[members] - centers[cluster], axis=1)
        medoids[cluster] = members[int(np.argmin(distances))]

    order = np.argsort(medoids, kind="stable")
    weights = _exact_weights(sizes, period_hours, n)[order]
    positions = medoids[order]

    logger.info(f"🗜️ Reduced {n} hours to {k} representative snapshots (seed={seed})")
    return SnapshotSelection(
        hours=tuple(features.hours[p] for p in positions),
        positions=positions,
        weights=weights,
        labels=np.argsort(order)[labels],
        centroids=centers[order],
    )


def _read_series(path: Path) -> pd.DataFrame:
    frame = pd.read_csv(path, dtype={SNAPSHOT_COLUMNS[0]: str})
    if frame.columns.empty or frame.columns[0] != SNAPSHOT_COLUMNS[0]:
        raise NetworkDataError(f"first column must be '{SNAPSHOT_COLUMNS[0]}'", path.name)
    return frame.set_index(SNAPSHOT_COLUMNS[0])


def reduce_time_series(source_dir: Path | str, out_dir: Path | str, k: int, seed: int = 0,
                       period_hours: Optional[float] = None) -> SnapshotSelection:
    """
    Reduce a full-year network directory to k weighted snapshots.

    Reads loads.csv and (optionally) availability.csv covering every source
    hour, writes snapshots.csv plus the reduced series to out_dir, and copies
    the static bus, line and generator tables so out_dir loads as a network.
    """
    source_dir, out_dir = Path(source_dir), Path(out_dir)
    loads_path = source_dir / LOADS_FILE
    if not loads_path.exists():
        raise NetworkDataError("missing file", LOADS_FILE)
    loads = _read_series(loads_path)
    availability_path = source_dir / AVAILABILITY_FILE
    availability = _read_series(availability_path) if availability_path.exists() else None

    period_hours = period_hours if period_hours is not None else get_settings().period_hours
    selection = reduce_snapshots(build_feature_matrix(loads, availability), k, seed, period_hours)

    out_dir.mkdir(parents=True, exist_ok=True)
    selection.as_frame().to_csv(out_dir / SNAPSHOTS_FILE, index=False)
    hours = list(selection.hours)
    loads.loc[hours].to_csv(out_dir / LOADS_FILE)
    if availability is not None:
        availability.loc[hours].to_csv(out_dir / AVAILABILITY_FILE)
    for name in (BUSES_FILE, LINES_FILE, GENERATORS_FILE):
        if (source_dir / name).exists():
            shutil.copyfile(source_dir / name, out_dir / name)

    logger.info(f"💾 Reduced series written to {out_dir}")
    return selection
