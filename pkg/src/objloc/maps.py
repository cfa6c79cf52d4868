"""Object landmarks, object maps, rigid poses and the scene file format."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .exceptions import InvalidArgumentError, SchemaError

UNIT_NORM_TOL = 1e-6
ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class ObjectRecord:
    """One object landmark.

    ``descriptor`` is normalized to unit length on construction. When
    ``position`` is omitted it is taken as the centroid of ``sample_points``.
    """

    id: int
    class_label: str
    position: Optional[np.ndarray] = None
    descriptor: Optional[np.ndarray] = None
    sample_points: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        points = self.sample_points
        if points is not None:
            points = np.asarray(points, dtype=float).reshape(-1, 3)
            if len(points) == 0:
                points = None
            object.__setattr__(self, "sample_points", points)
        position = self.position
        if position is None:
            if points is None:
                raise InvalidArgumentError(f"object {self.id}: needs a position or sample points")
            position = points.mean(axis=0)
        position = np.asarray(position, dtype=float).reshape(-1)
        if position.shape != (3,) or not np.all(np.isfinite(position)):
            raise InvalidArgumentError(f"object {self.id}: position must be 3 finite values")
        position.setflags(write=False)
        object.__setattr__(self, "position", position)
        if self.descriptor is not None:
            object.__setattr__(self, "descriptor", normalize_descriptor(self.descriptor, self.id))
        object.__setattr__(self, "id", int(self.id))
        object.__setattr__(self, "class_label", str(self.class_label))

    def with_position(self, position) -> "ObjectRecord":
        return ObjectRecord(self.id, self.class_label, position, self.descriptor, None)


def normalize_descriptor(descriptor, obj_id=None) -> np.ndarray:
    d = np.asarray(descriptor, dtype=float).reshape(-1)
    norm = float(np.linalg.norm(d))
    if d.size == 0 or not np.isfinite(norm) or norm == 0.0:
        raise InvalidArgumentError(f"object {obj_id}: descriptor must be a finite non-zero vector")
    d = d / norm
    d.setflags(write=False)
    return d


class ObjectMap:
    """An immutable collection of objects with a cached pairwise distance matrix.

    Objects are addressed by index (their order in ``objects``) or by id via
    :meth:`index_of`.
    """

    def __init__(self, objects: Iterable[ObjectRecord], descriptor_dim: Optional[int] = None):
        objects = tuple(objects)
        ids = [o.id for o in objects]
        if len(set(ids)) != len(ids):
            raise InvalidArgumentError("object ids must be unique within a map")
        dims = {o.descriptor.shape[0] for o in objects if o.descriptor is not None}
        if descriptor_dim is not None:
            dims.add(int(descriptor_dim))
        if len(dims) > 1:
            raise InvalidArgumentError(f"mixed descriptor dimensions {sorted(dims)}")
        self.descriptor_dim = dims.pop() if dims else descriptor_dim
        self.objects = objects
        self._index = {oid: i for i, oid in enumerate(ids)}
        positions = np.array([o.position for o in objects], dtype=float).reshape(-1, 3)
        positions.setflags(write=False)
        self.positions = positions
        diff = positions[:, None, :] - positions[None, :, :]
        cache = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        cache = np.minimum(cache, cache.T)  # exact symmetry
        np.fill_diagonal(cache, 0.0)
        cache.setflags(write=False)
        self.distance_cache = cache

    def __len__(self):
        return len(self.objects)

    def __iter__(self):
        return iter(self.objects)

    def __contains__(self, obj_id):
        return obj_id in self._index

    def __repr__(self):
        return f"ObjectMap(n={len(self)}, descriptor_dim={self.descriptor_dim})"

    @property
    def ids(self) -> list:
        return [o.id for o in self.objects]

    @property
    def labels(self) -> list:
        return [o.class_label for o in self.objects]

    def index_of(self, obj_id: int) -> int:
        try:
            return self._index[obj_id]
        except KeyError:
            raise InvalidArgumentError(f"unknown object id {obj_id}") from None

    def get(self, obj_id: int) -> ObjectRecord:
        return self.objects[self.index_of(obj_id)]

    def distance(self, id_i: int, id_j: int) -> float:
        """Distance between two objects addressed by id."""
        return float(self.distance_cache[self.index_of(id_i), self.index_of(id_j)])

    def subset(self, ids: Iterable[int]) -> "ObjectMap":
        keep = set(ids)
        return ObjectMap([o for o in self.objects if o.id in keep], self.descriptor_dim)

    def transformed(self, pose: "Pose") -> "ObjectMap":
        moved = pose.apply(self.positions) if len(self) else self.positions
        return ObjectMap(
            [o.with_position(p) for o, p in zip(self.objects, moved)], self.descriptor_dim
        )


def pairwise_distance(obj_map: ObjectMap, i: int, j: int) -> float:
    n = len(obj_map)
    for k in (i, j):
        if not isinstance(k, (int, np.integer)) or not 0 <= k < n:
            raise InvalidArgumentError(f"object index {k} out of range for map of {n}")
    return float(obj_map.distance_cache[i, j])


def descriptor_distance(a, b) -> float:
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"descriptor dimensions differ: {a.size} vs {b.size}")
    return float(np.linalg.norm(a - b))


@dataclass(frozen=True)
class Pose:
    """Rigid transform ``x -> rotation @ x + translation`` (local frame to global frame)."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t))):
            raise InvalidArgumentError("pose must be finite")
        if np.abs(R @ R.T - np.eye(3)).max() > ORTHO_TOL or abs(np.linalg.det(R) - 1.0) > ORTHO_TOL:
            raise InvalidArgumentError("rotation must be orthonormal with det +1")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_yaw(cls, yaw: float, translation=(0.0, 0.0, 0.0)) -> "Pose":
        c, s = math.cos(yaw), math.sin(yaw)
        return cls(np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]), translation)

    @classmethod
    def from_matrix(cls, T) -> "Pose":
        T = np.asarray(T, dtype=float)
        return cls(T[:3, :3], T[:3, 3])

    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T

    def apply(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return points @ self.rotation.T + self.translation

    def inverse(self) -> "Pose":
        Rt = self.rotation.T
        return Pose(Rt, -Rt @ self.translation)

    def compose(self, other: "Pose") -> "Pose":
        """``self ∘ other``: apply ``other`` first."""
        return Pose(self.rotation @ other.rotation, self.rotation @ other.translation + self.translation)

    def to_dict(self) -> dict:
        return {"rotation": self.rotation.tolist(), "translation": self.translation.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Pose":
        try:
            return cls(data["rotation"], data["translation"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad pose: {exc}") from None


# --- scene file ---------------------------------------------------------------------------


def map_to_dict(obj_map: ObjectMap, extra: Optional[dict] = None) -> dict:
    objects = []
    for o in obj_map:
        entry = {"id": o.id, "class": o.class_label, "position": o.position.tolist()}
        if o.descriptor is not None:
            entry["descriptor"] = o.descriptor.tolist()
        if o.sample_points is not None:
            entry["points"] = o.sample_points.tolist()
        objects.append(entry)
    data = {"descriptor_dim": obj_map.descriptor_dim or 0, "objects": objects}
    if extra:
        data.update(extra)
    return data


def map_from_dict(data) -> ObjectMap:
    if not isinstance(data, dict) or "objects" not in data or "descriptor_dim" not in data:
        raise SchemaError("scene must be an object with 'descriptor_dim' and 'objects'")
    dim = data["descriptor_dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 0:
        raise SchemaError("'descriptor_dim' must be a non-negative integer")
    if not isinstance(data["objects"], list):
        raise SchemaError("'objects' must be an array")
    records = []
    for k, entry in enumerate(data["objects"]):
        if not isinstance(entry, dict) or not {"id", "class", "position"} <= entry.keys():
            raise SchemaError(f"objects[{k}] needs 'id', 'class' and 'position'")
        if not isinstance(entry["id"], int) or isinstance(entry["id"], bool):
            raise SchemaError(f"objects[{k}].id must be an integer")
        desc = entry.get("descriptor")
        if desc is not None and len(desc) != dim:
            raise SchemaError(f"objects[{k}].descriptor has length {len(desc)}, expected {dim}")
        try:
            records.append(
                ObjectRecord(
                    entry["id"],
                    entry["class"],
                    entry["position"],
                    desc,
                    entry.get("points"),
                )
            )
        except (InvalidArgumentError, TypeError, ValueError) as exc:
            raise SchemaError(f"objects[{k}]: {exc}") from None
    try:
        return ObjectMap(records, dim or None)
    except InvalidArgumentError as exc:
        raise SchemaError(str(exc)) from None


def save_scene(obj_map: ObjectMap, path, extra: Optional[dict] = None) -> None:
    text = json.dumps(map_to_dict(obj_map, extra), indent=1, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_scene(path) -> ObjectMap:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    return map_from_dict(data)


def make_map(positions: Sequence, labels: Sequence[str], descriptors=None, ids=None) -> ObjectMap:
    """Convenience constructor from parallel arrays."""
    positions = np.asarray(positions, dtype=float).reshape(-1, 3)
    if len(labels) != len(positions):
        raise InvalidArgumentError("labels and positions differ in length")
    ids = list(range(len(positions))) if ids is None else list(ids)
    descs = [None] * len(positions) if descriptors is None else list(descriptors)
    return ObjectMap(
        ObjectRecord(i, lab, p, d) for i, lab, p, d in zip(ids, labels, positions, descs)
    )
