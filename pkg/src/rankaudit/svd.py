"""Baseline recommender: truncated SVD of the mean-filled rating matrix.

Missing (user, movie) cells are filled with the global mean of observed
training ratings before factorization.  Scores are inner products of the
user factors with singular-value-scaled item factors, so at full rank they
reproduce the filled matrix.  The factorization runs blocked subspace
iteration with a deterministic seeded start, which keeps memory at the size
of the factors and makes fitted models reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InputError, UnseenEntityError
from .ingest import RatingRecord

__all__ = [
    "RatingMatrix",
    "LowRankModel",
    "build_matrix",
    "truncated_svd",
    "fit_svd",
    "score",
    "save_model",
    "load_model",
]

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class RatingMatrix:
    """Dense user-by-movie rating matrix with mean-filled missing cells."""

    user_ids: tuple[int, ...]
    movie_ids: tuple[int, ...]
    values: np.ndarray
    fill_value: float

    def __post_init__(self) -> None:
        if self.values.shape != (len(self.user_ids), len(self.movie_ids)):
            raise InputError("matrix shape does not match the id maps")
        object.__setattr__(self, "_urow", {u: i for i, u in enumerate(self.user_ids)})
        object.__setattr__(self, "_mcol", {m: j for j, m in enumerate(self.movie_ids)})

    def user_row(self, user_id: int) -> int:
        try:
            return self._urow[user_id]
        except KeyError:
            raise UnseenEntityError(f"user {user_id} not in the training index") from None

    def movie_col(self, movie_id: int) -> int:
        try:
            return self._mcol[movie_id]
        except KeyError:
            raise UnseenEntityError(f"movie {movie_id} not in the training index") from None


def build_matrix(ratings: Sequence[RatingRecord]) -> RatingMatrix:
    """Assemble the training matrix; duplicate cells keep the latest rating.

    The fill value is the mean of the kept observed ratings.
    """
    if not ratings:
        raise InputError("cannot build a rating matrix from no training records")
    latest: dict[tuple[int, int], RatingRecord] = {}
    for r in ratings:
        key = (r.user_id, r.movie_id)
        prev = latest.get(key)
        if prev is None or r.timestamp >= prev.timestamp:
            latest[key] = r

    user_ids = tuple(sorted({u for u, _ in latest}))
    movie_ids = tuple(sorted({m for _, m in latest}))
    urow = {u: i for i, u in enumerate(user_ids)}
    mcol = {m: j for j, m in enumerate(movie_ids)}
    fill = float(np.mean([r.rating for r in latest.values()]))
    values = np.full((len(user_ids), len(movie_ids)), fill)
    for (u, m), r in latest.items():
        values[urow[u], mcol[m]] = r.rating
    return RatingMatrix(
        user_ids=user_ids, movie_ids=movie_ids, values=values, fill_value=fill
    )


def truncated_svd(
    a: np.ndarray,
    k: int,
    seed: int = 0,
    tol: float = 1e-8,
    max_iter: int = 1000,
    oversample: int = 8,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rank-k truncated SVD by seeded blocked subspace iteration.

    Iterates a random (k + oversample)-dimensional block until the leading k
    singular value estimates move by less than ``tol`` relative to the
    largest, then truncates.  Returns (U, s, Vt) with a fixed sign convention
    (the largest-magnitude entry of each left vector is positive) so results
    are reproducible across runs.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise InputError("expected a 2-d matrix")
    m, n = a.shape
    if not 1 <= k <= min(m, n):
        raise InputError(f"rank k={k} outside the valid range 1..{min(m, n)}")
    block = min(k + max(oversample, 0), min(m, n))

    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(a @ rng.standard_normal((n, block)))
    prev = None
    for _ in range(max_iter):
        p, _ = np.linalg.qr(a.T @ q)
        q, _ = np.linalg.qr(a @ p)
        svals = np.linalg.svd(q.T @ a, compute_uv=False)[:k]
        if prev is not None:
            scale = max(float(svals[0]), np.finfo(float).tiny)
            if float(np.max(np.abs(svals - prev))) <= tol * scale:
                break
        prev = svals

    ub, s, vt = np.linalg.svd(q.T @ a, full_matrices=False)
    u = (q @ ub)[:, :k]
    s = s[:k]
    vt = vt[:k, :]
    for r in range(k):
        i = int(np.argmax(np.abs(u[:, r])))
        if u[i, r] < 0:
            u[:, r] = -u[:, r]
            vt[r, :] = -vt[r, :]
    return u, s, vt


@dataclass(frozen=True, eq=False)
class LowRankModel:
    """Fitted factors: score(u, i) = user_factors[u] . item_factors[i].

    Item factors absorb the singular values, so user factors are orthonormal
    columns and the inner products reproduce the rank-k reconstruction.
    """

    rank: int
    user_ids: tuple[int, ...]
    movie_ids: tuple[int, ...]
    user_factors: np.ndarray
    item_factors: np.ndarray
    singular_values: np.ndarray

    def __post_init__(self) -> None:
        if self.user_factors.shape != (len(self.user_ids), self.rank):
            raise InputError("user factor shape mismatch")
        if self.item_factors.shape != (len(self.movie_ids), self.rank):
            raise InputError("item factor shape mismatch")
        object.__setattr__(self, "_urow", {u: i for i, u in enumerate(self.user_ids)})
        object.__setattr__(self, "_mcol", {m: j for j, m in enumerate(self.movie_ids)})

    def score(self, user_id: int, movie_id: int) -> float:
        try:
            u = self._urow[user_id]
            i = self._mcol[movie_id]
        except KeyError as exc:
            raise UnseenEntityError(
                f"cannot score unseen entity {exc.args[0]!r}; filter evaluation "
                "rows to the training index first"
            ) from None
        return float(self.user_factors[u] @ self.item_factors[i])

    def reconstruction(self) -> np.ndarray:
        """The full rank-k approximation (for diagnostics and tests)."""
        return self.user_factors @ self.item_factors.T


def fit_svd(
    matrix: RatingMatrix,
    k: int = 64,
    seed: int = 0,
    tol: float = 1e-8,
    max_iter: int = 1000,
) -> LowRankModel:
    """Factor the filled rating matrix at rank k."""
    u, s, vt = truncated_svd(matrix.values, k, seed=seed, tol=tol, max_iter=max_iter)
    # Row-major copies so scoring arithmetic is identical for freshly fitted
    # and reloaded models (BLAS kernels differ by memory layout).
    return LowRankModel(
        rank=k,
        user_ids=matrix.user_ids,
        movie_ids=matrix.movie_ids,
        user_factors=np.ascontiguousarray(u),
        item_factors=np.ascontiguousarray(vt.T * s),
        singular_values=s,
    )


def score(model: LowRankModel, user_id: int, movie_id: int) -> float:
    """Inner-product score for one (user, movie); unseen entities are errors."""
    return model.score(user_id, movie_id)


def save_model(model: LowRankModel, path: str | Path) -> None:
    """Dump the model as a versioned npz archive of row-major factor arrays."""
    with open(path, "wb") as fh:
        np.savez(
            fh,
            format_version=np.array([MODEL_FORMAT_VERSION], dtype=np.int64),
            rank=np.array([model.rank], dtype=np.int64),
            user_ids=np.array(model.user_ids, dtype=np.int64),
            movie_ids=np.array(model.movie_ids, dtype=np.int64),
            user_factors=np.ascontiguousarray(model.user_factors),
            item_factors=np.ascontiguousarray(model.item_factors),
            singular_values=np.ascontiguousarray(model.singular_values),
        )


def load_model(path: str | Path) -> LowRankModel:
    with np.load(path) as data:
        version = int(data["format_version"][0])
        if version != MODEL_FORMAT_VERSION:
            raise InputError(
                f"unsupported model format version {version} "
                f"(expected {MODEL_FORMAT_VERSION})"
            )
        return LowRankModel(
            rank=int(data["rank"][0]),
            user_ids=tuple(int(u) for u in data["user_ids"]),
            movie_ids=tuple(int(m) for m in data["movie_ids"]),
            user_factors=data["user_factors"],
            item_factors=data["item_factors"],
            singular_values=data["singular_values"],
        )
