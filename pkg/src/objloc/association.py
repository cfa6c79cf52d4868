"""Association-set clustering between a global object map and a local one.

Each association set is a hypothesis: a list of ``(alpha, beta)`` pairs
matching global object ``alpha`` to local object ``beta``. Sets start as
singletons built from class/descriptor gates and grow by agglomerative
merging. Two sets merge only when every new cross pair has a distance
ratio above ``gamma``; the score of a set is the sum of the ratio over all
of its internal pairs.
"""
from __future__ import annotations

import copy
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import InconsistentPoolError, InvalidArgumentError, SchemaError
from .maps import ObjectMap

log = logging.getLogger(__name__)

Pair = Tuple[int, int]


@dataclass(frozen=True)
class ClusterParams:
    """Clustering parameters.

    ``cap_factor=None`` disables the top-K cap and ``stale_epochs=None``
    disables staleness pruning.
    """

    gamma: float = 0.8
    delta: float = 0.5
    cap_factor: Optional[int] = 10
    stale_epochs: Optional[int] = 2
    epsilon_distance: float = 1e-6
    dominance_ratio: float = 1.5
    min_decide_pairs: int = 3

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise InvalidArgumentError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not self.delta > 0:
            raise InvalidArgumentError(f"delta must be positive, got {self.delta}")
        if self.cap_factor is not None and self.cap_factor < 1:
            raise InvalidArgumentError(f"cap_factor must be >= 1, got {self.cap_factor}")
        if self.stale_epochs is not None and self.stale_epochs < 0:
            raise InvalidArgumentError(f"stale_epochs must be >= 0, got {self.stale_epochs}")
        if not self.epsilon_distance >= 0:
            raise InvalidArgumentError("epsilon_distance must be non-negative")
        if not self.dominance_ratio > 1.0:
            raise InvalidArgumentError(f"dominance_ratio must exceed 1, got {self.dominance_ratio}")

    def unpruned(self) -> "ClusterParams":
        return replace(self, cap_factor=None, stale_epochs=None)


@dataclass
class AssociationSet:
    pairs: Tuple[Pair, ...]
    score: float = 0.0
    consumed: bool = False
    created_epoch: int = 0
    last_merge_epoch: int = 0

    def __post_init__(self):
        self.pairs = tuple(sorted({(int(a), int(b)) for a, b in self.pairs}))

    def __len__(self):
        return len(self.pairs)

    @property
    def alphas(self) -> List[int]:
        return [a for a, _ in self.pairs]

    @property
    def betas(self) -> List[int]:
        return [b for _, b in self.pairs]

    def is_injective(self) -> bool:
        return is_injective(self.pairs)

    def sort_key(self):
        return (-self.score, -len(self.pairs), self.pairs)

    def to_dict(self) -> dict:
        return {
            "pairs": [list(p) for p in self.pairs],
            "score": self.score,
            "consumed": self.consumed,
            "created_epoch": self.created_epoch,
            "last_merge_epoch": self.last_merge_epoch,
        }


def is_injective(pairs: Iterable[Pair]) -> bool:
    pairs = list(pairs)
    return len({a for a, _ in pairs}) == len(pairs) == len({b for _, b in pairs})


@dataclass
class AssociationPool:
    params: ClusterParams = field(default_factory=ClusterParams)
    sets: List[AssociationSet] = field(default_factory=list)
    epoch: int = 0

    def __len__(self):
        return len(self.sets)

    def copy(self) -> "AssociationPool":
        return AssociationPool(self.params, [copy.copy(s) for s in self.sets], self.epoch)

    def ordered(self) -> List[AssociationSet]:
        return sorted(self.sets, key=AssociationSet.sort_key)

    def find(self, pairs: Iterable[Pair]) -> Optional[AssociationSet]:
        key = AssociationSet(tuple(pairs)).pairs
        for s in self.sets:
            if s.pairs == key:
                return s
        return None

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "params": asdict(self.params),
            "sets": [s.to_dict() for s in self.ordered()],
        }

    @classmethod
    def from_dict(cls, data: dict, params: Optional[ClusterParams] = None) -> "AssociationPool":
        try:
            if params is None:
                params = ClusterParams(**data["params"]) if "params" in data else ClusterParams()
            sets = [
                AssociationSet(
                    tuple(tuple(p) for p in s["pairs"]),
                    float(s["score"]),
                    bool(s["consumed"]),
                    int(s.get("created_epoch", s["last_merge_epoch"])),
                    int(s["last_merge_epoch"]),
                )
                for s in data["sets"]
            ]
            return cls(params, sets, int(data["epoch"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad pool snapshot: {exc}") from None


# --- primitives ----------------------------------------------------------------------------


def merge_metric(d_global: float, d_local: float, epsilon_distance: float = 1e-6) -> float:
    """Ratio compatibility of two distances, in [0, 1]; 1 means equal."""
    small_g = d_global < epsilon_distance or d_global <= 0.0
    small_l = d_local < epsilon_distance or d_local <= 0.0
    if small_g and small_l:
        return 1.0
    if small_g or small_l:
        return 0.0
    # same value as min(dL/dG, dG/dL) but immune to overflow
    return min(d_global, d_local) / max(d_global, d_local)


def merge_metric_matrix(d_global: np.ndarray, d_local: np.ndarray, epsilon_distance: float) -> np.ndarray:
    """Element-wise :func:`merge_metric`, bit-identical to the scalar version."""
    with np.errstate(divide="ignore", invalid="ignore"):
        h = np.minimum(d_global, d_local) / np.maximum(d_global, d_local)
    small_g = (d_global < epsilon_distance) | (d_global <= 0.0)
    small_l = (d_local < epsilon_distance) | (d_local <= 0.0)
    h[small_g & small_l] = 1.0
    h[small_g ^ small_l] = 0.0
    return h


def _check_ids(pairs: Iterable[Pair], global_map: ObjectMap, local_map: ObjectMap):
    for a, b in pairs:
        if a not in global_map:
            raise InconsistentPoolError(f"global object {a} referenced by pair ({a}, {b}) is missing")
        if b not in local_map:
            raise InconsistentPoolError(f"local object {b} referenced by pair ({a}, {b}) is missing")


def pair_metric(p: Pair, q: Pair, global_map: ObjectMap, local_map: ObjectMap, eps: float) -> float:
    return merge_metric(global_map.distance(p[0], q[0]), local_map.distance(p[1], q[1]), eps)


def canonical_score(pairs: Sequence[Pair], global_map: ObjectMap, local_map: ObjectMap,
                    epsilon_distance: float = 1e-6) -> float:
    """Sum of the merge metric over all unordered pairs of associations (exactly rounded)."""
    pairs = list(pairs)
    return math.fsum(
        pair_metric(pairs[i], pairs[j], global_map, local_map, epsilon_distance)
        for i in range(len(pairs))
        for j in range(i + 1, len(pairs))
    )


def init_singletons(global_map: ObjectMap, local_map: ObjectMap, params: ClusterParams,
                    local_ids: Optional[Iterable[int]] = None, epoch: int = 0) -> List[AssociationSet]:
    """One singleton per class-equal, descriptor-compatible (global, local) pair."""
    if local_ids is None:
        local_objs = list(local_map)
    else:
        local_objs = [local_map.get(b) for b in local_ids]
    out = []
    for lo in local_objs:
        for go in global_map:
            if go.class_label != lo.class_label:
                continue
            if go.descriptor is not None and lo.descriptor is not None:
                if go.descriptor.shape != lo.descriptor.shape:
                    raise InvalidArgumentError("global and local descriptor dimensions differ")
                if not float(np.linalg.norm(go.descriptor - lo.descriptor)) < params.delta:
                    continue
            out.append(AssociationSet(((go.id, lo.id),), 0.0, False, epoch, epoch))
    out.sort(key=lambda s: s.pairs)
    return out


def cross_pairs(d1: AssociationSet, d2: AssociationSet) -> List[Tuple[Pair, Pair]]:
    s1, s2 = set(d1.pairs), set(d2.pairs)
    return [(p, q) for p in d1.pairs if p not in s2 for q in d2.pairs if q not in s1]


def try_merge(d1: AssociationSet, d2: AssociationSet, global_map: ObjectMap, local_map: ObjectMap,
              params: ClusterParams, epoch: int = 0) -> Optional[AssociationSet]:
    """Merge two sets if every new cross pair is compatible; ``None`` otherwise."""
    _check_ids(d1.pairs, global_map, local_map)
    _check_ids(d2.pairs, global_map, local_map)
    if d1.consumed or d2.consumed:
        return None
    s1, s2 = set(d1.pairs), set(d2.pairs)
    if s1 <= s2 or s2 <= s1:
        return None
    union = s1 | s2
    if not is_injective(union):
        return None
    eps = params.epsilon_distance
    for p, q in cross_pairs(d1, d2):
        if not params.gamma < pair_metric(p, q, global_map, local_map, eps):
            return None
    merged = AssociationSet(tuple(union), 0.0, False, epoch, epoch)
    merged.score = canonical_score(merged.pairs, global_map, local_map, eps)
    return merged


# --- clustering ----------------------------------------------------------------------------


class _Universe:
    """Dense pair-compatibility tables over every pair referenced by a pool."""

    def __init__(self, pairs: Sequence[Pair], global_map: ObjectMap, local_map: ObjectMap,
                 params: ClusterParams):
        self.pairs = list(pairs)
        self.index = {p: i for i, p in enumerate(self.pairs)}
        gi = np.array([global_map.index_of(a) for a, _ in self.pairs], dtype=int)
        li = np.array([local_map.index_of(b) for _, b in self.pairs], dtype=int)
        d_g = global_map.distance_cache[np.ix_(gi, gi)]
        d_l = local_map.distance_cache[np.ix_(li, li)]
        h = merge_metric_matrix(d_g, d_l, params.epsilon_distance)
        np.fill_diagonal(h, 0.0)
        self.h = h
        conflict = (gi[:, None] == gi[None, :]) | (li[:, None] == li[None, :])
        self.compat = (h > params.gamma) & ~conflict

    def row(self, pairs: Iterable[Pair]) -> np.ndarray:
        r = np.zeros(len(self.pairs), dtype=bool)
        r[[self.index[p] for p in pairs]] = True
        return r

    def score(self, row: np.ndarray) -> float:
        idx = np.flatnonzero(row)
        sub = self.h[np.ix_(idx, idx)]
        return math.fsum(sub[np.triu_indices(len(idx), 1)].tolist())


def _check_pool(pool: AssociationPool, global_map: ObjectMap, local_map: ObjectMap):
    for s in pool.sets:
        _check_ids(s.pairs, global_map, local_map)


def cluster_epoch(pool: AssociationPool, global_map: ObjectMap, local_map: ObjectMap,
                  shuffle: Optional[np.random.Generator] = None) -> AssociationPool:
    """Merge to a fixed point, then prune duplicates, stale sets and the overflow beyond K.

    Each pass tests every unordered pair of sets that were unconsumed when the
    pass started and that has not been tested in an earlier pass; all parents
    of successful merges are marked consumed together at the end of the pass,
    which makes the result independent of exploration order. ``shuffle``
    permutes that order (used to test exactly this).
    """
    pool = pool.copy()
    _check_pool(pool, global_map, local_map)
    params = pool.params
    pool.sets = _dedupe(pool.sets)
    if not pool.sets:
        return pool

    uni = _Universe(sorted({p for s in pool.sets for p in s.pairs}), global_map, local_map, params)
    rows = {}
    for s in pool.sets:
        r = uni.row(s.pairs)
        s.score = uni.score(r)
        rows[_key(r)] = (s, r)

    active = [key for key, (s, _) in rows.items() if not s.consumed]
    if shuffle is not None:
        active = [active[i] for i in shuffle.permutation(len(active))]
    n_new = len(active)
    not_compat = (~uni.compat).astype(np.float64)
    passes = 0
    while n_new and len(active) > 1:
        passes += 1
        act = np.array([rows[k][1] for k in active], dtype=bool)
        new = act[len(active) - n_new:]
        new_f = new.astype(np.float64)
        act_f = act.astype(np.float64)
        common = (new_f @ not_compat) == 0
        outside = (~(new | common)).astype(np.float64)
        violations = outside @ act_f.T
        inter = new_f @ act_f.T
        new_sizes = new.sum(axis=1)
        act_sizes = act.sum(axis=1)
        ok = (violations == 0) & (new_sizes[:, None] > inter) & (act_sizes[None, :] > inter)
        # each unordered pair once: a new set only looks at sets listed before it
        pos = np.arange(len(active) - n_new, len(active))
        ok &= np.arange(len(active))[None, :] < pos[:, None]
        ii, jj = np.nonzero(ok)
        if len(ii) == 0:
            break
        packed = np.packbits(new[ii] | act[jj], axis=1)
        packed = np.unique(packed.view(np.dtype((np.void, packed.shape[1]))).ravel())
        consumed = set(pos[ii].tolist()) | set(jj.tolist())
        born = []
        for v in packed:
            key = v.tobytes()
            if key in rows:
                continue
            u = np.unpackbits(np.frombuffer(key, dtype=np.uint8), count=len(uni.pairs)).astype(bool)
            s = AssociationSet(tuple(uni.pairs[i] for i in np.flatnonzero(u)), uni.score(u),
                               False, pool.epoch, pool.epoch)
            rows[key] = (s, u)
            born.append(key)
        for k in consumed:
            rows[active[k]][0].consumed = True
        if shuffle is not None:
            born = [born[i] for i in shuffle.permutation(len(born))]
        active = [k for i, k in enumerate(active) if i not in consumed] + born
        n_new = len(born)

    sets = [s for s, _ in rows.values()]
    if params.stale_epochs is not None:
        sets = [s for s in sets
                if len(s) == 1 or pool.epoch - s.last_merge_epoch <= params.stale_epochs]
    sets.sort(key=AssociationSet.sort_key)
    if params.cap_factor is not None:
        cap = params.cap_factor * len(global_map)
        singles = [s for s in sets if len(s) == 1]
        multi = [s for s in sets if len(s) > 1][:cap]
        sets = sorted(singles + multi, key=AssociationSet.sort_key)
    log.debug("epoch %d: %d passes, %d sets", pool.epoch, passes, len(sets))
    pool.sets = sets
    return pool


def _key(row: np.ndarray) -> bytes:
    return np.packbits(row).tobytes()


def _dedupe(sets: Iterable[AssociationSet]) -> List[AssociationSet]:
    best = {}
    for s in sets:
        cur = best.get(s.pairs)
        if cur is None or s.score > cur.score:
            best[s.pairs] = s
    return list(best.values())


def update(pool: AssociationPool, global_map: ObjectMap, local_map: ObjectMap,
           new_local_ids: Iterable[int] = (), shuffle: Optional[np.random.Generator] = None
           ) -> AssociationPool:
    """Advance one epoch: seed singletons for newly observed objects and recluster.

    Sets referring to objects no longer present in either map are dropped first.
    """
    new_local_ids = list(new_local_ids)
    for b in new_local_ids:
        if b not in local_map:
            raise InvalidArgumentError(f"new local id {b} is not in the local map")
    pool = pool.copy()
    pool.epoch += 1
    kept = [s for s in pool.sets
            if all(a in global_map and b in local_map for a, b in s.pairs)]
    if len(kept) != len(pool.sets):
        log.info("dropped %d sets referring to vanished objects", len(pool.sets) - len(kept))
    present = {s.pairs for s in kept}
    seeds = [s for s in init_singletons(global_map, local_map, pool.params,
                                        dict.fromkeys(new_local_ids), pool.epoch)
             if s.pairs not in present]
    pool.sets = kept + seeds
    return cluster_epoch(pool, global_map, local_map, shuffle)


def top_k(pool: AssociationPool, k: int) -> List[AssociationSet]:
    if k < 1:
        raise InvalidArgumentError(f"k must be >= 1, got {k}")
    return pool.ordered()[:k]


def decide(pool: AssociationPool) -> Optional[AssociationSet]:
    """Return the top set once it is large enough and dominates its best rival.

    Rivals are unconsumed sets of two or more pairs that are not subsets of
    the top set.
    """
    ordered = pool.ordered()
    if not ordered:
        return None
    top = ordered[0]
    if len(top) < pool.params.min_decide_pairs:
        return None
    top_pairs = set(top.pairs)
    for s in ordered[1:]:
        if s.consumed or len(s) < 2 or set(s.pairs) <= top_pairs:
            continue
        return top if top.score >= pool.params.dominance_ratio * s.score else None
    return top
