"""
Biased matrix factorisation trained with stochastic gradient descent.

    pred(u, i) = mu + b_u + b_i + q_i . p_u

Ratings are visited in (user, item) order every epoch. Factors start from
N(0, init_std) drawn from a generator seeded by the config, so a given
(config, table) always trains the same model. Items without training
ratings fall back to mu + b_u.
"""

import numpy as np

from app.recommend.base import Recommender


class FunkSVD(Recommender):

    @property
    def name(self) -> str:
        return "funk_svd"

    def _fit(self) -> None:
        cfg = self.config
        m = self.matrix
        rng = np.random.default_rng(cfg.seed)

        self.mu = m.global_mean
        self.bu = np.zeros(len(m.user_ids))
        self.bi = np.zeros(len(m.item_ids))
        self.pu = rng.normal(0.0, cfg.init_std, (len(m.user_ids), cfg.factors))
        self.qi = rng.normal(0.0, cfg.init_std, (len(m.item_ids), cfg.factors))
        self.known_items = m.mask.any(axis=0)
        self.train_errors: list[float] = []

        users, items, ratings = m.triplets()
        lr, reg = cfg.learn_rate, cfg.reg

        for epoch in range(cfg.epochs):
            for u, i, r in zip(users.tolist(), items.tolist(), ratings.tolist()):
                p_u, q_i = self.pu[u], self.qi[i]
                err = r - (self.mu + self.bu[u] + self.bi[i] + float(q_i @ p_u))

                self.bu[u] += lr * (err - reg * self.bu[u])
                self.bi[i] += lr * (err - reg * self.bi[i])

                old_p = p_u.copy()
                p_u += lr * (err * q_i - reg * p_u)
                q_i += lr * (err * old_p - reg * q_i)

            mae = self._training_mae(users, items, ratings)
            self.train_errors.append(mae)
            self.logger.debug(f"Epoch {epoch + 1}/{cfg.epochs}: train MAE {mae:.4f}")

        self.logger.info(f"Trained {cfg.epochs} epochs, final train MAE {self.train_errors[-1]:.4f}")

    def _training_mae(self, users: np.ndarray, items: np.ndarray, ratings: np.ndarray) -> float:
        estimates = (
            self.mu
            + self.bu[users]
            + self.bi[items]
            + np.einsum("ij,ij->i", self.pu[users], self.qi[items])
        )
        return float(np.abs(np.clip(estimates, *self.bounds) - ratings).mean())

    def _score_user(self, u: int) -> np.ndarray:
        learned = self.bi + self.qi @ self.pu[u]
        return self.mu + self.bu[u] + np.where(self.known_items, learned, 0.0)
