"""
Slope One predictor.

    pred(u, i) = mean_u + avg_{j in R_i(u)} dev(i, j)

where dev(i, j) is the mean of r_ui - r_uj over users who rated both and
R_i(u) holds the items of u sharing at least one rater with i. With an empty
R_i(u) the user mean is returned.
"""

import numpy as np

from app.recommend.base import Recommender


class SlopeOne(Recommender):

    @property
    def name(self) -> str:
        return "slope_one"

    def _fit(self) -> None:
        m = self.matrix
        observed = m.mask.astype(float)
        self.freq = observed.T @ observed
        diff_sum = m.ratings.T @ observed - observed.T @ m.ratings
        with np.errstate(divide="ignore", invalid="ignore"):
            self.dev = np.where(self.freq > 0, diff_sum / self.freq, 0.0)
        self.user_mean = m.user_means()
        self.logger.debug(f"Deviation matrix built over {int((self.freq > 0).sum())} co-rated pairs")

    def _score_user(self, u: int) -> np.ndarray:
        rated = np.flatnonzero(self.matrix.mask[u])
        linked = self.freq[:, rated] > 0
        counts = linked.sum(axis=1)
        dev_sum = (self.dev[:, rated] * linked).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            offset = np.where(counts > 0, dev_sum / counts, 0.0)
        return self.user_mean[u] + offset
