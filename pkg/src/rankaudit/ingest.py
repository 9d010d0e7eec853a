"""Rating-data ingestion: CSV parsing, temporal splits, slate assembly.

Input files follow the common recommender CSV layout: a ratings table with
header ``userId,movieId,rating,timestamp`` (half-star ratings between 0.5
and 5.0) and a movie table ``movieId,title,genres`` with pipe-delimited
genres.  The module also reads and writes the line-delimited JSON "slate
file" format shared with the synthetic generator, so pre-scored slates can
enter the audit pipeline directly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .core import Item, RankedSlate, rank_by_score
from .errors import InputError, UnseenEntityError

__all__ = [
    "RatingRecord",
    "MovieRecord",
    "parse_ratings",
    "parse_movies",
    "write_ratings",
    "write_movies",
    "temporal_split",
    "build_eval_slates",
    "read_slates",
    "write_slates",
]

RATINGS_HEADER = ["userId", "movieId", "rating", "timestamp"]
MOVIES_HEADER = ["movieId", "title", "genres"]
NO_GENRES = "(no genres listed)"


@dataclass(frozen=True, slots=True)
class RatingRecord:
    """One timestamped star rating; ratings are half-star multiples in [0.5, 5]."""

    user_id: int
    movie_id: int
    rating: float
    timestamp: int

    def __post_init__(self) -> None:
        doubled = self.rating * 2.0
        if not (1 <= doubled <= 10 and doubled == int(doubled)):
            raise InputError(
                f"rating {self.rating!r} is not a half-star value in [0.5, 5]"
            )


@dataclass(frozen=True, slots=True)
class MovieRecord:
    """Movie metadata; the genre set doubles as the audit group labels."""

    movie_id: int
    title: str
    genres: frozenset[str]


def _check_header(row: list[str] | None, expected: list[str], path: str) -> None:
    if row != expected:
        raise InputError(
            f"{path}: expected header {','.join(expected)!r}, got {row!r}"
        )


def parse_ratings(path: str | Path) -> list[RatingRecord]:
    """Parse a ratings CSV, rejecting malformed rows with their line number."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        _check_header(next(reader, None), RATINGS_HEADER, str(path))
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise InputError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                record = RatingRecord(
                    user_id=int(row[0]),
                    movie_id=int(row[1]),
                    rating=float(row[2]),
                    timestamp=int(row[3]),
                )
            except (ValueError, InputError) as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
            records.append(record)
    return records


def parse_movies(path: str | Path) -> list[MovieRecord]:
    """Parse a movies CSV; quoted titles may contain commas."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            _check_header(next(reader, None), MOVIES_HEADER, str(path))
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 3:
                    raise InputError(
                        f"{path}:{lineno}: expected 3 fields, got {len(row)}"
                    )
                try:
                    movie_id = int(row[0])
                except ValueError as exc:
                    raise InputError(f"{path}:{lineno}: bad movie id {row[0]!r}") from exc
                genres = (
                    frozenset()
                    if row[2] in ("", NO_GENRES)
                    else frozenset(row[2].split("|"))
                )
                records.append(MovieRecord(movie_id=movie_id, title=row[1], genres=genres))
        except csv.Error as exc:
            raise InputError(f"{path}: malformed CSV near line {reader.line_num}: {exc}") from exc
    return records


def write_ratings(records: Iterable[RatingRecord], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RATINGS_HEADER)
        for r in records:
            writer.writerow([r.user_id, r.movie_id, _fmt_rating(r.rating), r.timestamp])


def write_movies(records: Iterable[MovieRecord], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MOVIES_HEADER)
        for m in records:
            genres = "|".join(sorted(m.genres)) if m.genres else NO_GENRES
            writer.writerow([m.movie_id, m.title, genres])


def _fmt_rating(rating: float) -> str:
    return f"{rating:g}"


def temporal_split(
    ratings: Sequence[RatingRecord], train_fraction: float
) -> tuple[list[RatingRecord], list[RatingRecord]]:
    """Split globally by time: the earliest fraction trains, the rest evaluates.

    Ties in timestamp are broken by (user, movie) id so the split is
    deterministic.  Evaluation rows whose user or movie never appears in
    training are dropped, since the ranker cannot score unseen entities.
    """
    if not 0.0 < train_fraction < 1.0:
        raise InputError(f"train fraction must be in (0, 1), got {train_fraction!r}")
    ordered = sorted(ratings, key=lambda r: (r.timestamp, r.user_id, r.movie_id))
    n_train = math.floor(train_fraction * len(ordered))
    train, rest = ordered[:n_train], ordered[n_train:]
    if not train:
        raise InputError("temporal split produced an empty training side")
    users = {r.user_id for r in train}
    movies = {r.movie_id for r in train}
    evaluation = [r for r in rest if r.user_id in users and r.movie_id in movies]
    if not evaluation:
        raise InputError(
            "temporal split produced an empty evaluation side after filtering"
        )
    return train, evaluation


def build_eval_slates(
    eval_records: Sequence[RatingRecord],
    score_fn: Callable[[int, int], float],
    movies: Mapping[int, MovieRecord],
) -> list[RankedSlate]:
    """Assemble one ranked slate per user from evaluation ratings.

    Outcomes are the star ratings, groups are the movie's genres, and the
    order is induced by the supplied scoring function.  Repeat ratings of the
    same movie keep the latest by timestamp.  ``score_fn`` must cover every
    (user, movie) in the records; an unseen entity here means upstream
    filtering was skipped and is reported as such.
    """
    latest: dict[int, dict[int, RatingRecord]] = {}
    for r in eval_records:
        per_user = latest.setdefault(r.user_id, {})
        prev = per_user.get(r.movie_id)
        if prev is None or r.timestamp >= prev.timestamp:
            per_user[r.movie_id] = r

    slates = []
    for user_id in sorted(latest):
        items = []
        for movie_id, record in sorted(latest[user_id].items()):
            movie = movies.get(movie_id)
            if movie is None:
                raise UnseenEntityError(
                    f"movie {movie_id} has ratings but no metadata row"
                )
            items.append(
                Item(
                    id=str(movie_id),
                    score=float(score_fn(user_id, movie_id)),
                    groups=movie.genres,
                    outcome=record.rating,
                )
            )
        slates.append(rank_by_score(items, query_id=str(user_id)))
    return slates


def write_slates(slates: Iterable[RankedSlate], path: str | Path) -> None:
    """Write slates as line-delimited JSON, one query per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for slate in slates:
            payload = {
                "query_id": slate.query_id,
                "items": [
                    {
                        "id": it.id,
                        "score": it.score,
                        "outcome": it.outcome,
                        "groups": sorted(it.groups),
                    }
                    for it in slate.items
                ],
            }
            fh.write(json.dumps(payload, sort_keys=True) + "\n")


def read_slates(path: str | Path) -> list[RankedSlate]:
    """Read a slate file; items are re-ranked to the canonical slate order."""
    slates = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                payload = json.loads(line)
                items = [
                    Item(
                        id=str(entry["id"]),
                        score=float(entry["score"]),
                        outcome=float(entry["outcome"]),
                        groups=frozenset(entry.get("groups", ())),
                    )
                    for entry in payload["items"]
                ]
                slates.append(rank_by_score(items, query_id=str(payload["query_id"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise InputError(f"{path}:{lineno}: malformed slate line: {exc}") from exc
    return slates
