"""
Neighbourhood recommenders (user-based and item-based KNN).

Similarities are computed over co-rated entries only. For a pair (x, y):

    msd     = sum (r_x - r_y)^2 / |co-rated|      sim = 1 / (msd + 1)
    pearson = correlation of the co-rated values, centred on their own means

Predictions take the k most similar neighbours that rated the target, keep
those with a positive similarity and return the similarity-weighted mean of
their ratings. Without such a neighbour the global mean is returned.
"""

import numpy as np

from app.recommend.base import Recommender
from app.schemas.recommendation import Similarity

# Rows of the similarity matrix computed per matrix product
SIMILARITY_BLOCK = 512


def similarity_matrix(ratings: np.ndarray, mask: np.ndarray, kind: Similarity) -> np.ndarray:
    """
    Pairwise similarity between the columns of ``ratings``.

    Args:
        ratings: observations x entities, 0 where unobserved
        mask: boolean observation mask, same shape
        kind: ``msd`` or ``pearson``

    Returns:
        entities x entities similarity, 1 on the diagonal, 0 without co-ratings
    """
    observed = mask.astype(float)
    squares = ratings ** 2
    n = ratings.shape[1]
    sim = np.zeros((n, n))

    for start in range(0, n, SIMILARITY_BLOCK):
        block = slice(start, min(start + SIMILARITY_BLOCK, n))
        r_b, m_b = ratings[:, block], observed[:, block]

        freq = m_b.T @ observed
        prods = r_b.T @ ratings
        sq_x = (r_b ** 2).T @ observed
        sq_y = m_b.T @ squares

        with np.errstate(divide="ignore", invalid="ignore"):
            if kind == "msd":
                sq_diff = np.maximum(sq_x + sq_y - 2.0 * prods, 0.0)
                values = np.where(freq > 0, 1.0 / (sq_diff / freq + 1.0), 0.0)
            else:
                s_x = r_b.T @ observed
                s_y = m_b.T @ ratings
                num = freq * prods - s_x * s_y
                var_x = np.maximum(freq * sq_x - s_x ** 2, 0.0)
                var_y = np.maximum(freq * sq_y - s_y ** 2, 0.0)
                den = np.sqrt(var_x * var_y)
                values = np.where(den > 0, num / den, 0.0)

        sim[block] = values

    np.fill_diagonal(sim, 1.0)
    return sim


class UserKNN(Recommender):
    """User-based KNN: neighbours are users who rated the target item."""

    @property
    def name(self) -> str:
        return "user_knn"

    def _fit(self) -> None:
        m = self.matrix
        self.sim = similarity_matrix(m.ratings.T, m.mask.T, self.config.similarity)
        self.global_mean = m.global_mean

    def _score_user(self, u: int) -> np.ndarray:
        m = self.matrix
        s = self.sim[u]
        order = np.argsort(-s, kind="stable")
        neighbours = order[s[order] > 0]
        if neighbours.size == 0:
            return np.full(len(m.item_ids), self.global_mean)

        rated = m.mask[neighbours]
        # the first k raters of each item in similarity order
        within_k = rated & (np.cumsum(rated, axis=0) <= self.config.k_neighbors)
        weights = s[neighbours][:, None] * within_k
        den = weights.sum(axis=0)
        num = (weights * m.ratings[neighbours]).sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(den > 0, num / den, self.global_mean)


class ItemKNN(Recommender):
    """Item-based KNN: neighbours are items the user rated."""

    @property
    def name(self) -> str:
        return "item_knn"

    def _fit(self) -> None:
        m = self.matrix
        self.sim = similarity_matrix(m.ratings, m.mask, self.config.similarity)
        self.global_mean = m.global_mean

    def _score_user(self, u: int) -> np.ndarray:
        m = self.matrix
        rated = np.flatnonzero(m.mask[u])
        values = m.ratings[u, rated]

        sims = self.sim[:, rated]
        sims = np.where(sims > 0, sims, 0.0)
        k = self.config.k_neighbors
        if rated.size > k:
            top = np.argsort(-sims, axis=1, kind="stable")[:, :k]
            sims = np.take_along_axis(sims, top, axis=1)
            neighbour_values = values[top]
        else:
            neighbour_values = np.broadcast_to(values, sims.shape)

        den = sims.sum(axis=1)
        num = (sims * neighbour_values).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(den > 0, num / den, self.global_mean)
