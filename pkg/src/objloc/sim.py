"""Synthetic object scenes, simulated observations, an exhaustive oracle and the trial runner."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .association import (
    AssociationPool,
    AssociationSet,
    ClusterParams,
    decide,
    merge_metric,
    update,
)
from .exceptions import (
    DegenerateConfigurationError,
    InfeasibleSpecError,
    InsufficientCorrespondencesError,
    InvalidArgumentError,
    OracleTooLargeError,
    SchemaError,
)
from .maps import ObjectMap, ObjectRecord, Pose, descriptor_distance
from .pose import FULL_6DOF, MODES, YAW_ONLY, estimate_pose, is_success, pose_error

log = logging.getLogger(__name__)

DEFAULT_CLASSES = ("chair", "table", "sofa", "lamp", "shelf", "desk", "cabinet", "plant", "tv", "bed")
CSV_HEADER = ("trial", "attempt", "objects_observed", "success", "rot_err_deg", "trans_err_m",
              "top_rank_of_correct", "pool_size", "wall_time_s")


def default_catalog(n_objects: int, n_classes: Optional[int] = None) -> List[Tuple[str, int]]:
    """Round-robin ``n_objects`` over ``n_classes`` labels (default: half as many classes as objects)."""
    if n_classes is None:
        n_classes = max(1, n_objects // 2)
    n_classes = max(1, min(n_classes, n_objects))
    names = [DEFAULT_CLASSES[i] if i < len(DEFAULT_CLASSES) else f"class{i}" for i in range(n_classes)]
    counts = [n_objects // n_classes + (1 if i < n_objects % n_classes else 0) for i in range(n_classes)]
    return list(zip(names, counts))


@dataclass(frozen=True)
class SceneSpec:
    n_objects: int
    class_catalog: Tuple[Tuple[str, int], ...] = ()
    extent: Tuple[Tuple[float, float, float], Tuple[float, float, float]] = ((0.0, 0.0, 0.0), (8.0, 6.0, 1.5))
    descriptor_dim: int = 16
    class_descriptor_spread: float = 0.1
    seed: int = 0
    # generated objects are at least twice this far apart
    position_noise_ceiling: float = 0.25
    points_per_object: int = 0
    object_radius: float = 0.3
    max_retries: int = 2000

    def __post_init__(self):
        catalog = self.class_catalog or default_catalog(self.n_objects)
        object.__setattr__(self, "class_catalog", tuple((str(c), int(k)) for c, k in catalog))
        object.__setattr__(self, "extent", tuple(tuple(float(v) for v in corner) for corner in self.extent))
        if self.n_objects < 2:
            raise InvalidArgumentError("a scene needs at least 2 objects")
        if sum(k for _, k in self.class_catalog) != self.n_objects:
            raise InvalidArgumentError("class catalog counts must sum to n_objects")
        lo, hi = np.array(self.extent[0]), np.array(self.extent[1])
        if lo.shape != (3,) or hi.shape != (3,) or not np.all(hi > lo):
            raise InvalidArgumentError("extent must be a box with positive volume")
        if self.descriptor_dim < 1:
            raise InvalidArgumentError("descriptor_dim must be positive")


@dataclass(frozen=True)
class ObservationSpec:
    batch_schedule: Tuple[int, ...] = (3, 2, 2)
    position_noise_radius: float = 0.0
    descriptor_noise: float = 0.0
    dropout_rate: float = 0.0
    clutter_rate: float = 0.0
    gt_pose: Optional[Pose] = None
    seed: int = 0
    # "nearest": reveal outward from a random start object; "random": uniform order
    reveal_order: str = "nearest"
    # keep only the half of each object's sample points facing a random direction
    partial_view: bool = False
    # batch indices (1-based) after which run_trials attempts relocalization; empty = every batch
    attempts: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "batch_schedule", tuple(int(b) for b in self.batch_schedule))
        object.__setattr__(self, "attempts", tuple(int(a) for a in self.attempts))
        for name in ("dropout_rate", "clutter_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidArgumentError(f"{name} must lie in [0, 1]")
        if self.position_noise_radius < 0 or self.descriptor_noise < 0:
            raise InvalidArgumentError("noise radii must be non-negative")
        if any(b < 0 for b in self.batch_schedule):
            raise InvalidArgumentError("batch sizes must be non-negative")
        if self.reveal_order not in ("nearest", "random"):
            raise InvalidArgumentError(f"unknown reveal_order {self.reveal_order!r}")
        if any(not 1 <= a <= len(self.batch_schedule) for a in self.attempts):
            raise InvalidArgumentError("attempt indices must refer to batches")

    def attempt_batches(self) -> Tuple[int, ...]:
        return self.attempts or tuple(range(1, len(self.batch_schedule) + 1))


@dataclass(frozen=True)
class DynamicSpec:
    delete_fraction: float = 0.0
    move_fraction: float = 0.3
    move_distance_range: Tuple[float, float] = (1.0, 3.0)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "move_distance_range", tuple(float(v) for v in self.move_distance_range))
        if not 0.0 <= self.delete_fraction <= 1.0:
            raise InvalidArgumentError("delete_fraction must lie in [0, 1]")
        if not 0.3 <= self.move_fraction <= 1.0:
            raise InvalidArgumentError("move_fraction must lie in [0.3, 1]")
        lo, hi = self.move_distance_range
        if not 0 <= lo <= hi:
            raise InvalidArgumentError("move_distance_range must satisfy 0 <= min <= max")


@dataclass(frozen=True)
class SceneInfo:
    prototypes: Dict[str, np.ndarray]
    extent: Tuple[Tuple[float, float, float], Tuple[float, float, float]]


@dataclass(frozen=True)
class TrialResult:
    trial: int
    attempt: int
    success: bool
    rot_error_deg: float
    trans_error_m: float
    objects_observed: int
    pool_size: int
    wall_time_s: float
    top_rank_of_correct: Optional[int]
    decided: bool = False
    decided_correct: Optional[bool] = None

    def csv_row(self) -> list:
        return [self.trial, self.attempt, self.objects_observed, int(self.success),
                _fmt(self.rot_error_deg), _fmt(self.trans_error_m),
                "" if self.top_rank_of_correct is None else self.top_rank_of_correct,
                self.pool_size, f"{self.wall_time_s:.6f}"]


def _fmt(x: float) -> str:
    return "" if x is None or not math.isfinite(x) else f"{x:.6f}"


def _ball(rng: np.random.Generator, n: int, dim: int, radius: float) -> np.ndarray:
    """``n`` points uniform in a ``dim``-ball of the given radius."""
    v = rng.normal(size=(n, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * (radius * rng.random((n, 1)) ** (1.0 / dim))


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


# --- scenes ---------------------------------------------------------------------------------


def generate_scene(spec: SceneSpec) -> Tuple[ObjectMap, SceneInfo]:
    rng = np.random.default_rng(spec.seed)
    lo, hi = np.array(spec.extent[0]), np.array(spec.extent[1])
    min_sep = 2.0 * spec.position_noise_ceiling
    centers = np.empty((0, 3))
    for k in range(spec.n_objects):
        for _ in range(spec.max_retries):
            c = lo + rng.random(3) * (hi - lo)
            if len(centers) == 0 or np.min(np.linalg.norm(centers - c, axis=1)) >= min_sep:
                centers = np.vstack([centers, c])
                break
        else:
            raise InfeasibleSpecError(
                f"could not place object {k} at separation {min_sep} m after {spec.max_retries} tries")
    prototypes = {label: _unit(rng, spec.descriptor_dim) for label, _ in spec.class_catalog}
    labels = [label for label, count in spec.class_catalog for _ in range(count)]
    labels = [labels[i] for i in rng.permutation(len(labels))]
    spread = _ball(rng, spec.n_objects, spec.descriptor_dim, spec.class_descriptor_spread)
    records = []
    for i, (label, c) in enumerate(zip(labels, centers)):
        desc = prototypes[label] + spread[i]
        if spec.points_per_object > 0:
            pts = c + _ball(rng, spec.points_per_object, 3, 1.0)
            pts = c + spec.object_radius * (pts - c) / np.linalg.norm(pts - c, axis=1, keepdims=True)
            records.append(ObjectRecord(i, label, None, desc, pts))
        else:
            records.append(ObjectRecord(i, label, c, desc))
    return ObjectMap(records, spec.descriptor_dim), SceneInfo(prototypes, spec.extent)


def make_dynamic(global_map: ObjectMap, spec: DynamicSpec, return_info: bool = False):
    """Delete a fraction of the objects, then move a fraction of the rest.

    Moves are horizontal (objects stay at their height). With
    ``return_info=True`` also returns the moved and deleted ids.
    """
    rng = np.random.default_rng(spec.seed)
    n = len(global_map)
    n_del = math.floor(spec.delete_fraction * n)
    deleted = set(rng.choice(global_map.ids, size=n_del, replace=False).tolist()) if n_del else set()
    kept = [o for o in global_map if o.id not in deleted]
    n_move = math.ceil(spec.move_fraction * len(kept))
    move_idx = rng.choice(len(kept), size=n_move, replace=False) if n_move else np.array([], int)
    lo, hi = spec.move_distance_range
    out = list(kept)
    moved = []
    for i in sorted(move_idx.tolist()):
        o = kept[i]
        theta = rng.uniform(0.0, 2.0 * math.pi)
        dist = rng.uniform(lo, hi)
        disp = np.array([math.cos(theta), math.sin(theta), 0.0]) * dist
        pts = None if o.sample_points is None else o.sample_points + disp
        out[i] = ObjectRecord(o.id, o.class_label, o.position + disp, o.descriptor, pts)
        moved.append(o.id)
    result = ObjectMap(out, global_map.descriptor_dim)
    if return_info:
        return result, moved, sorted(deleted)
    return result


# --- observations ---------------------------------------------------------------------------


def _class_means(global_map: ObjectMap) -> Dict[str, Optional[np.ndarray]]:
    groups: Dict[str, list] = {}
    for o in global_map:
        groups.setdefault(o.class_label, []).append(o.descriptor)
    means = {}
    for label, descs in groups.items():
        descs = [d for d in descs if d is not None]
        means[label] = np.mean(descs, axis=0) if descs else None
    return means


def derive_observation(global_map: ObjectMap, obs: ObservationSpec, upto_batch: int
                       ) -> Tuple[ObjectMap, List[int]]:
    """Local map after the first ``upto_batch`` batches, plus the ids new in the last one.

    Real detections keep their global id; clutter gets ids above every global
    id. All randomness is drawn up front from ``obs.seed`` so successive
    ``upto_batch`` values describe one consistent, growing observation.
    """
    if not 0 <= upto_batch <= len(obs.batch_schedule):
        raise InvalidArgumentError(f"upto_batch must lie in [0, {len(obs.batch_schedule)}]")
    rng = np.random.default_rng(obs.seed)
    n = len(global_map)
    dim = global_map.descriptor_dim or 1
    gt = obs.gt_pose or Pose.identity()
    to_local = gt.inverse()
    positions = global_map.positions

    start = int(rng.integers(n)) if n else 0
    if obs.reveal_order == "nearest" and n:
        order = np.argsort(np.linalg.norm(positions - positions[start], axis=1), kind="stable")
    else:
        order = rng.permutation(n)
    pos_noise = _ball(rng, n, 3, obs.position_noise_radius)
    desc_noise = _ball(rng, n, dim, obs.descriptor_noise)
    dropped = rng.random(n) < obs.dropout_rate
    view_dirs = rng.normal(size=(n, 3))
    clutter_flag = rng.random(n) < obs.clutter_rate
    clutter_class = rng.integers(max(n, 1), size=n)
    clutter_unit = rng.random((n, 3))
    clutter_desc_noise = _ball(rng, n, dim, obs.descriptor_noise)
    clutter_pos_noise = _ball(rng, n, 3, obs.position_noise_radius)

    batch_of = np.zeros(n, dtype=int)
    cursor = 0
    for b, size in enumerate(obs.batch_schedule, start=1):
        take = order[cursor:cursor + size]
        batch_of[take] = b
        cursor += size
    if n:
        lo, hi = positions.min(axis=0), positions.max(axis=0)
    class_means = _class_means(global_map)
    next_id = (max(global_map.ids) + 1) if n else 0

    records, new_ids = [], []
    for rank, gi in enumerate(order):
        b = batch_of[gi]
        if b == 0 or b > upto_batch:
            continue
        o = global_map.objects[gi]
        if not dropped[gi]:
            world, pts = o.position, None
            if obs.partial_view and o.sample_points is not None:
                d = view_dirs[gi]
                keep = (o.sample_points - o.position) @ d >= 0
                pts = o.sample_points[keep] if keep.any() else o.sample_points
                world = pts.mean(axis=0)
            local_pts = None if pts is None else to_local.apply(pts + pos_noise[gi])
            desc = None if o.descriptor is None else o.descriptor + desc_noise[gi]
            records.append(ObjectRecord(o.id, o.class_label, to_local.apply(world + pos_noise[gi]),
                                        desc, local_pts))
            if b == upto_batch:
                new_ids.append(o.id)
        if clutter_flag[gi]:
            src = global_map.objects[clutter_class[gi] % n]
            world = lo + clutter_unit[gi] * (hi - lo)
            mean = class_means[src.class_label]
            desc = None if mean is None else mean + clutter_desc_noise[gi]
            cid = next_id + int(gi)
            records.append(ObjectRecord(cid, src.class_label, to_local.apply(world + clutter_pos_noise[gi]),
                                        desc))
            if b == upto_batch:
                new_ids.append(cid)
    return ObjectMap(records, global_map.descriptor_dim), new_ids


# --- oracle ---------------------------------------------------------------------------------


def oracle_best_matching(global_map: ObjectMap, local_map: ObjectMap, params: ClusterParams,
                         max_local: int = 8) -> AssociationSet:
    """Best gamma-consistent injective matching by exhaustive enumeration.

    Maximizes the summed ratio metric, then cardinality, then prefers the
    lexicographically smallest pair list.
    """
    if len(local_map) > max_local:
        raise OracleTooLargeError(f"oracle limited to {max_local} local objects, got {len(local_map)}")
    eps = params.epsilon_distance
    local_objs = list(local_map)
    candidates = []
    for lo in local_objs:
        cands = []
        for go in global_map:
            if go.class_label != lo.class_label:
                continue
            if go.descriptor is not None and lo.descriptor is not None \
                    and not descriptor_distance(go.descriptor, lo.descriptor) < params.delta:
                continue
            cands.append(go.id)
        candidates.append(cands)

    best = {"key": None, "pairs": ()}
    chosen: List[Tuple[int, int]] = []
    used = set()

    def metric(p, q):
        return merge_metric(global_map.distance(p[0], q[0]), local_map.distance(p[1], q[1]), eps)

    def visit(k: int):
        if k == len(local_objs):
            pairs = tuple(sorted(chosen))
            score = math.fsum(metric(pairs[i], pairs[j])
                              for i in range(len(pairs)) for j in range(i + 1, len(pairs)))
            key = (score, len(pairs))
            bk = best["key"]
            if bk is None or key > bk or (key == bk and pairs < best["pairs"]):
                best["key"], best["pairs"] = key, pairs
            return
        visit(k + 1)
        beta = local_objs[k].id
        for alpha in candidates[k]:
            if alpha in used:
                continue
            p = (alpha, beta)
            if all(params.gamma < metric(p, q) for q in chosen):
                chosen.append(p)
                used.add(alpha)
                visit(k + 1)
                used.discard(alpha)
                chosen.pop()

    visit(0)
    score = best["key"][0] if best["key"] else 0.0
    return AssociationSet(best["pairs"], score)


# --- trials ---------------------------------------------------------------------------------


@dataclass
class RankedPose:
    rank: int
    rot_error_deg: float
    trans_error_m: float
    success: bool
    elapsed_s: float


@dataclass
class AttemptRecord:
    trial: int
    attempt: int
    objects_observed: int
    revealed: int
    pool_size: int
    cluster_time_s: float
    ranked: List[RankedPose] = field(default_factory=list)
    decided: bool = False
    decided_correct: Optional[bool] = None

    def first_success(self, k: int) -> Optional[RankedPose]:
        for r in self.ranked[:k]:
            if r.success:
                return r
        return None

    def result(self, k: int) -> TrialResult:
        hit = self.first_success(k)
        ref = hit or (self.ranked[0] if self.ranked else None)
        pose_time = sum(r.elapsed_s for r in self.ranked[:k])
        return TrialResult(
            trial=self.trial,
            attempt=self.attempt,
            success=hit is not None,
            rot_error_deg=ref.rot_error_deg if ref else math.nan,
            trans_error_m=ref.trans_error_m if ref else math.nan,
            objects_observed=self.objects_observed,
            pool_size=self.pool_size,
            wall_time_s=self.cluster_time_s + pose_time,
            top_rank_of_correct=hit.rank if hit else None,
            decided=self.decided,
            decided_correct=self.decided_correct,
        )


def trial_seed(base: int, trial: int) -> int:
    return int(np.random.SeedSequence([int(base), int(trial)]).generate_state(1)[0])


def random_gt_pose(rng: np.random.Generator, mode: str = YAW_ONLY) -> Pose:
    t = np.array([rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-0.5, 0.5)])
    if mode == YAW_ONLY:
        return Pose.from_yaw(rng.uniform(-math.pi, math.pi), t)
    from scipy.spatial.transform import Rotation

    R = Rotation.random(random_state=rng).as_matrix()
    u, _, vt = np.linalg.svd(R)
    return Pose(u @ vt, t)


def simulate_trial(global_map: ObjectMap, world_map: ObjectMap, obs: ObservationSpec,
                   params: ClusterParams, max_k: int, mode: str, trial: int = 0) -> List[AttemptRecord]:
    """Feed one observation sequence batch by batch; evaluate the top ``max_k`` sets at each attempt.

    ``world_map`` is what the camera sees; ``global_map`` is the prior map the
    engine matches against (they differ for dynamic scenes).
    """
    seed = trial_seed(obs.seed, trial)
    trial_obs = obs
    if obs.gt_pose is None:
        trial_obs = replace(obs, gt_pose=random_gt_pose(np.random.default_rng(seed), mode), seed=seed)
    else:
        trial_obs = replace(obs, seed=seed)
    gt = trial_obs.gt_pose
    attempts = set(obs.attempt_batches())
    pool = AssociationPool(params)
    records = []
    clock = 0.0
    for b in range(1, len(obs.batch_schedule) + 1):
        local, new_ids = derive_observation(world_map, trial_obs, b)
        t0 = time.perf_counter()
        pool = update(pool, global_map, local, new_ids)
        clock += time.perf_counter() - t0
        if b not in attempts:
            continue
        rec = AttemptRecord(trial, b, len(local), sum(obs.batch_schedule[:b]), len(pool), clock)
        clock = 0.0
        for rank, s in enumerate(pool.ordered()[:max_k], start=1):
            t0 = time.perf_counter()
            try:
                est = estimate_pose(s, global_map, local, mode)
                rot, trans = pose_error(est.pose, gt)
                ok = is_success(rot, trans)
            except (InsufficientCorrespondencesError, DegenerateConfigurationError):
                rot, trans, ok = math.nan, math.nan, False
            rec.ranked.append(RankedPose(rank, rot, trans, ok, time.perf_counter() - t0))
        chosen = decide(pool)
        rec.decided = chosen is not None
        if chosen is not None:
            rec.decided_correct = all(a == b_ for a, b_ in chosen.pairs)
        records.append(rec)
    return records


def _world_and_global(scene: SceneSpec, dynamic: Optional[DynamicSpec]) -> Tuple[ObjectMap, ObjectMap]:
    world, _ = generate_scene(scene)
    return world, (make_dynamic(world, dynamic) if dynamic is not None else world)


def _simulate_many(scene, obs, dynamic, params, max_k, mode, n_trials, jobs) -> List[List[AttemptRecord]]:
    if n_trials < 1:
        raise InvalidArgumentError("n_trials must be >= 1")
    if mode not in MODES:
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    world, global_map = _world_and_global(scene, dynamic)
    if jobs == 1:
        return [simulate_trial(global_map, world, obs, params, max_k, mode, t) for t in range(n_trials)]
    from joblib import Parallel, delayed

    return Parallel(n_jobs=jobs)(
        delayed(simulate_trial)(global_map, world, obs, params, max_k, mode, t) for t in range(n_trials))


def run_trials(scene: SceneSpec, obs: ObservationSpec, dynamic: Optional[DynamicSpec] = None,
               params: ClusterParams = ClusterParams(), top_k: int = 10, n_trials: int = 1,
               mode: str = YAW_ONLY, jobs: int = 1) -> List[TrialResult]:
    """One fresh pool per trial; one result per (trial, attempt), ordered by trial index."""
    if top_k < 1:
        raise InvalidArgumentError("top_k must be >= 1")
    runs = _simulate_many(scene, obs, dynamic, params, top_k, mode, n_trials, jobs)
    return [rec.result(top_k) for recs in runs for rec in recs]


def run_sweep(scene: SceneSpec, obs: ObservationSpec, dynamic: Optional[DynamicSpec],
              params: ClusterParams, gammas: Sequence[float], top_ks: Sequence[int],
              object_counts: Sequence[int], n_trials: int, mode: str = YAW_ONLY,
              jobs: int = 1) -> List[dict]:
    """Success rate and mean wall time for every (gamma, top_k, objects) cell.

    Each object count becomes a batch boundary, so one observation sequence
    per trial serves every count.
    """
    counts = sorted(set(int(c) for c in object_counts))
    if not counts or counts[0] < 1:
        raise InvalidArgumentError("object counts must be positive")
    schedule = tuple(np.diff([0] + counts).tolist())
    sweep_obs = replace(obs, batch_schedule=schedule, attempts=())
    max_k = max(top_ks)
    rows = []
    for g in gammas:
        runs = _simulate_many(scene, sweep_obs, dynamic, replace(params, gamma=float(g)),
                              max_k, mode, n_trials, jobs)
        for k in top_ks:
            for b, c in enumerate(counts, start=1):
                results = [rec.result(k) for recs in runs for rec in recs if rec.attempt == b]
                rows.append({
                    "gamma": float(g),
                    "top_k": int(k),
                    "objects": c,
                    "trials": len(results),
                    "success_rate": float(np.mean([r.success for r in results])),
                    "mean_wall_time_s": float(np.mean([r.wall_time_s for r in results])),
                })
    return rows


SWEEP_HEADER = ("gamma", "top_k", "objects", "trials", "success_rate", "mean_wall_time_s")


def trials_to_csv(results: Sequence[TrialResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in results:
        w.writerow(r.csv_row())
    return buf.getvalue()


def sweep_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_HEADER, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({**row, "success_rate": f"{row['success_rate']:.6f}",
                    "mean_wall_time_s": f"{row['mean_wall_time_s']:.6f}"})
    return buf.getvalue()


# --- config ---------------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchConfig:
    scene: SceneSpec
    observation: ObservationSpec = ObservationSpec()
    dynamic: Optional[DynamicSpec] = None
    engine: ClusterParams = ClusterParams()
    top_k: int = 10
    n_trials: int = 100
    mode: str = YAW_ONLY
    sweep: dict = field(default_factory=dict)


def _build(cls, data, name):
    if not isinstance(data, dict):
        raise SchemaError(f"'{name}' must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise SchemaError(f"unknown keys in '{name}': {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"'{name}': {exc}") from None


def config_from_dict(data: dict) -> BenchConfig:
    if not isinstance(data, dict) or "scene" not in data:
        raise SchemaError("config must be an object with a 'scene' section")
    scene = _build(SceneSpec, data["scene"], "scene")
    obs_data = dict(data.get("observation") or {})
    if obs_data.get("gt_pose") is not None:
        obs_data["gt_pose"] = Pose.from_dict(obs_data["gt_pose"])
    obs = _build(ObservationSpec, obs_data, "observation")
    dyn = _build(DynamicSpec, data["dynamic"], "dynamic") if data.get("dynamic") else None
    engine = _build(ClusterParams, data.get("engine") or {}, "engine")
    extra = set(data) - {"scene", "observation", "dynamic", "engine", "top_k", "n_trials", "mode", "sweep"}
    if extra:
        raise SchemaError(f"unknown config keys {sorted(extra)}")
    mode = data.get("mode", YAW_ONLY)
    if mode not in MODES:
        raise SchemaError(f"mode must be one of {MODES}")
    top_k, n_trials = data.get("top_k", 10), data.get("n_trials", 100)
    if not isinstance(top_k, int) or top_k < 1 or not isinstance(n_trials, int) or n_trials < 1:
        raise SchemaError("top_k and n_trials must be positive integers")
    sweep = data.get("sweep") or {}
    if not isinstance(sweep, dict):
        raise SchemaError("'sweep' must be an object")
    return BenchConfig(scene, obs, dyn, engine, top_k, n_trials, mode, sweep)


def config_to_dict(cfg: BenchConfig) -> dict:
    obs = asdict(cfg.observation)
    obs["gt_pose"] = cfg.observation.gt_pose.to_dict() if cfg.observation.gt_pose else None
    return {
        "scene": asdict(cfg.scene),
        "observation": obs,
        "dynamic": asdict(cfg.dynamic) if cfg.dynamic else None,
        "engine": asdict(cfg.engine),
        "top_k": cfg.top_k,
        "n_trials": cfg.n_trials,
        "mode": cfg.mode,
        "sweep": cfg.sweep,
    }


def load_config(path) -> BenchConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(data)
