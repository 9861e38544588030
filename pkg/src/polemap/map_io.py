"""Cluster map serialization.

The map file is a versioned text document:

    polemap-map 1
    labels pole=5 trunk=6
    cluster <id> <pole|trunk> <cx> <cy> <cz> <c2x> <c2y> <npoints>

Centroids are written with shortest round-trip decimals, so save/load
preserves them exactly. Member points live in an optional binary sidecar
(<path>.points, float32 x y z per point, clusters in file order); without the
sidecar each cluster reloads with a single synthetic point at its centroid.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .cluster_map import POLE, TRUNK, Cluster, ClusterMap, LabeledPoint
from .dataset_io import LabelMap
from .errors import MapFormatError

FORMAT_NAME = "polemap-map"
FORMAT_VERSION = 1

_LABEL_WORDS = {POLE: "pole", TRUNK: "trunk"}
_WORD_LABELS = {"pole": POLE, "trunk": TRUNK}


def save_map(cluster_map: ClusterMap, path, label_map: LabelMap | None = None,
             include_points: bool = True) -> None:
    """Serialize a map; the point sidecar is written unless disabled."""
    label_map = label_map or LabelMap()
    path = Path(path)
    lines = [
        f"{FORMAT_NAME} {FORMAT_VERSION}",
        f"labels pole={label_map.pole_id} trunk={label_map.trunk_id}",
    ]
    blobs = []
    for cluster in cluster_map:
        c3 = cluster.centroid3d
        c2 = cluster.centroid2d
        lines.append(
            "cluster {} {} {} {} {} {} {} {}".format(
                cluster.cluster_id,
                _LABEL_WORDS[cluster.label],
                repr(float(c3[0])),
                repr(float(c3[1])),
                repr(float(c3[2])),
                repr(float(c2[0])),
                repr(float(c2[1])),
                cluster.n_points,
            )
        )
        if include_points:
            blobs.append(np.ascontiguousarray(cluster.point_array().astype("<f4")))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    sidecar = path.with_name(path.name + ".points")
    if include_points:
        sidecar.write_bytes(b"".join(b.tobytes() for b in blobs))
    elif sidecar.exists():
        sidecar.unlink()


def load_map(path) -> ClusterMap:
    """Decode a map file, restoring ids, labels, centroids and points.

    Raises MapFormatError on version mismatch, malformed or trailing content,
    inconsistent centroids, or a sidecar whose size disagrees with the
    declared point counts. Nothing is returned partially decoded.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii")
    except (OSError, UnicodeDecodeError) as exc:
        raise MapFormatError(f"{path}: {exc}") from None
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MapFormatError(f"{path}: empty map file")

    header = lines[0].split()
    if len(header) != 2 or header[0] != FORMAT_NAME:
        raise MapFormatError(f"{path}:1: not a {FORMAT_NAME} file")
    try:
        version = int(header[1])
    except ValueError:
        raise MapFormatError(f"{path}:1: bad version {header[1]!r}") from None
    if version != FORMAT_VERSION:
        raise MapFormatError(f"{path}:1: unsupported map version {version}")
    if len(lines) < 2 or not lines[1].startswith("labels "):
        raise MapFormatError(f"{path}:2: missing labels line")

    records = []
    for lineno, line in enumerate(lines[2:], start=3):
        parts = line.split()
        if not parts:
            raise MapFormatError(f"{path}:{lineno}: blank line inside map body")
        if parts[0] != "cluster" or len(parts) != 9:
            raise MapFormatError(f"{path}:{lineno}: unexpected line")
        try:
            cid = int(parts[1])
            label = _WORD_LABELS[parts[2]]
            c3 = np.array([float(parts[3]), float(parts[4]), float(parts[5])])
            c2 = np.array([float(parts[6]), float(parts[7])])
            count = int(parts[8])
        except (ValueError, KeyError):
            raise MapFormatError(f"{path}:{lineno}: unparseable cluster record") from None
        if count < 1:
            raise MapFormatError(f"{path}:{lineno}: point count must be positive")
        if c2[0] != c3[0] or c2[1] != c3[1]:
            raise MapFormatError(f"{path}:{lineno}: 2D centroid disagrees with 3D centroid")
        records.append((cid, label, c3, c2, count))

    sidecar = path.with_name(path.name + ".points")
    points_per_cluster: list[np.ndarray] | None = None
    if sidecar.exists():
        raw = sidecar.read_bytes()
        expected = sum(rec[4] for rec in records) * 12
        if len(raw) != expected:
            raise MapFormatError(
                f"{sidecar}: size {len(raw)} does not match declared counts ({expected})"
            )
        flat = np.frombuffer(raw, dtype="<f4").reshape(-1, 3)
        points_per_cluster = []
        offset = 0
        for rec in records:
            points_per_cluster.append(flat[offset : offset + rec[4]])
            offset += rec[4]

    cluster_map = ClusterMap()
    for idx, (cid, label, c3, c2, count) in enumerate(records):
        if points_per_cluster is not None:
            pts = [
                LabeledPoint(float(p[0]), float(p[1]), float(p[2]), label)
                for p in points_per_cluster[idx]
            ]
        else:
            pts = [LabeledPoint(float(c3[0]), float(c3[1]), float(c3[2]), label)]
        try:
            cluster_map.insert(Cluster(cid, label, pts, c3, c2))
        except ValueError as exc:
            raise MapFormatError(f"{path}: {exc}") from None
    return cluster_map
