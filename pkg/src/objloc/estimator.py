"""scikit-learn style wrapper: fit on the global map, feed observations, predict the pose."""
from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .association import AssociationPool, ClusterParams, decide, top_k, update
from .exceptions import InvalidArgumentError
from .maps import ObjectMap, make_map, map_from_dict
from .pose import FULL_6DOF, MODES, PoseEstimate, estimate_pose


def check_object_map(X, labels=None, descriptors=None, ids=None) -> ObjectMap:
    """Accept an ObjectMap, a scene dict, or an ``(n, 3)`` position array plus labels."""
    if isinstance(X, ObjectMap):
        return X
    if isinstance(X, dict):
        return map_from_dict(X)
    positions = check_array(X, ensure_min_samples=0, dtype=np.float64)
    if positions.ndim != 2 or positions.shape[1] != 3:
        raise InvalidArgumentError(f"positions must have shape (n, 3), got {positions.shape}")
    if labels is None:
        raise InvalidArgumentError("class labels are required with raw positions")
    if descriptors is not None:
        descriptors = check_array(descriptors, dtype=np.float64)
    return make_map(positions, list(labels), descriptors, ids)


class ObjectRelocalizer(BaseEstimator):
    """Relocalize a growing local object map against a fixed global object map.

    ``fit`` stores the global map and resets the association pool;
    ``partial_fit`` ingests the current local map (one clustering epoch);
    ``predict`` returns the pose of the decided association set, or ``None``
    while the situation is still ambiguous.
    """

    def __init__(self, gamma=0.8, delta=0.5, cap_factor=10, stale_epochs=2,
                 epsilon_distance=1e-6, dominance_ratio=1.5, mode=FULL_6DOF, top_k=10):
        self.gamma = gamma
        self.delta = delta
        self.cap_factor = cap_factor
        self.stale_epochs = stale_epochs
        self.epsilon_distance = epsilon_distance
        self.dominance_ratio = dominance_ratio
        self.mode = mode
        self.top_k = top_k

    def _params(self) -> ClusterParams:
        if self.mode not in MODES:
            raise InvalidArgumentError(f"mode must be one of {MODES}")
        return ClusterParams(self.gamma, self.delta, self.cap_factor, self.stale_epochs,
                             self.epsilon_distance, self.dominance_ratio)

    def fit(self, X, y=None, labels=None, descriptors=None, ids=None):
        self.global_map_ = check_object_map(X, labels, descriptors, ids)
        self.pool_ = AssociationPool(self._params())
        self.local_map_ = None
        return self

    def partial_fit(self, X, new_ids=None, labels=None, descriptors=None, ids=None):
        """Run one update with the current local map.

        ``new_ids`` defaults to every local id not seen in a previous call.
        """
        check_is_fitted(self, "global_map_")
        local = check_object_map(X, labels, descriptors, ids)
        if new_ids is None:
            seen = set(self.local_map_.ids) if self.local_map_ is not None else set()
            new_ids = [i for i in local.ids if i not in seen]
        self.pool_ = update(self.pool_, self.global_map_, local, new_ids)
        self.local_map_ = local
        return self

    def decision(self):
        check_is_fitted(self, "pool_")
        return decide(self.pool_)

    def candidates(self, k: Optional[int] = None):
        check_is_fitted(self, "pool_")
        return top_k(self.pool_, k or self.top_k)

    def predict(self, X=None, **map_kwargs) -> Optional[PoseEstimate]:
        if X is not None:
            self.partial_fit(X, **map_kwargs)
        check_is_fitted(self, "pool_")
        chosen = decide(self.pool_)
        if chosen is None or self.local_map_ is None:
            return None
        return estimate_pose(chosen, self.global_map_, self.local_map_, self.mode)

    def transform(self, X=None, **map_kwargs) -> Optional[np.ndarray]:
        """Local object positions expressed in the global frame (``None`` if undecided)."""
        est = self.predict(X, **map_kwargs)
        if est is None:
            return None
        return est.pose.apply(self.local_map_.positions)
