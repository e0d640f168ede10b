"""scikit-learn compatible wrapper around the two-network transfer pipeline."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from bridgeflow.allocation import TrimConfig
from bridgeflow.simulation import P, PRIMARY_COLUMNS, Q
from bridgeflow.stretch import DEFAULT_MAX_STRETCH
from bridgeflow.transfer import DEFAULT_DELTA, pipeline
from bridgeflow.types import AssetListing, BridgeflowError, BridgeLink, NetworkState

INPUT_FEATURES = ("tbd_p", "current_p", "tbd_q", "current_q", "cap_pq", "cap_qp")


class BridgeTransferEstimator(TransformerMixin, BaseEstimator):
    """Map scenario rows to transfer amounts and band diagnostics.

    Each row of ``X`` is ``(tbd_p, current_p, tbd_q, current_q, cap_pq,
    cap_qp)``. ``transform`` returns one column per entry of
    :data:`bridgeflow.simulation.PRIMARY_COLUMNS`. The asset universe is
    fixed at construction; ``fit`` only validates it and the inputs.

    Parameters
    ----------
    assets : sequence of AssetListing
        Raw global bands with availability on networks ``"P"`` and ``"Q"``.
    max_stretch : float, default=0.2
    delta : float, default=0.0001
    min_weight, max_weight : float, default=0.0, 1.0
        Trim bounds for per-network shares.
    """

    def __init__(
        self,
        assets=None,
        max_stretch=DEFAULT_MAX_STRETCH,
        delta=DEFAULT_DELTA,
        min_weight=0.0,
        max_weight=1.0,
    ):
        self.assets = assets
        self.max_stretch = max_stretch
        self.delta = delta
        self.min_weight = min_weight
        self.max_weight = max_weight

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != len(INPUT_FEATURES):
            raise ValueError(f"expected {len(INPUT_FEATURES)} columns, got {X.shape[1]}")
        if not self.assets:
            raise ValueError("assets must list at least one AssetListing")
        for a in self.assets:
            if not isinstance(a, AssetListing):
                raise TypeError(f"assets must hold AssetListing values, got {type(a).__name__}")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        self.trim_ = TrimConfig(self.min_weight, self.max_weight)
        self.assets_ = tuple(self.assets)
        self.n_features_in_ = X.shape[1]
        return self

    def _evaluate(self, row):
        tbd_p, curr_p, tbd_q, curr_q, cap_pq, cap_qp = (float(v) for v in row)
        return pipeline(
            NetworkState(P, curr_p, tbd_p),
            NetworkState(Q, curr_q, tbd_q),
            BridgeLink(cap_pq, cap_qp),
            self.assets_,
            cfg=self.trim_,
            max_stretch=self.max_stretch,
            delta=self.delta,
        )

    def transform(self, X):
        check_is_fitted(self, "assets_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        out = np.empty((X.shape[0], len(PRIMARY_COLUMNS)))
        for i, row in enumerate(X):
            try:
                r = self._evaluate(row)
            except BridgeflowError as exc:
                raise ValueError(f"row {i}: {exc}") from exc
            d, a_p, a_q = r.decision, r.assessment_p, r.assessment_q
            out[i] = (
                d.delta_pq, d.delta_qp, d.simple_pq, d.simple_qp,
                r.stretch.raw_stretch, r.stretch.collect_deploy_diff,
                a_p.outside_band, a_q.outside_band,
                a_p.max_send, a_q.max_send,
                a_p.max_receive, a_q.max_receive,
            )
        return out

    def get_feature_names_out(self, input_features=None):
        return np.asarray(PRIMARY_COLUMNS, dtype=object)
