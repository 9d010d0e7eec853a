"""Tests for CSV parsing, temporal splitting and slate files."""

from __future__ import annotations

import pytest

from rankaudit import InputError, Item, UnseenEntityError, rank_by_score
from rankaudit.ingest import (
    MovieRecord,
    RatingRecord,
    build_eval_slates,
    parse_movies,
    parse_ratings,
    read_slates,
    temporal_split,
    write_movies,
    write_ratings,
    write_slates,
)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestParseRatings:
    def test_basic_line(self, tmp_path):
        path = write(tmp_path / "r.csv",
                     "userId,movieId,rating,timestamp\n1,296,5.0,1147880044\n")
        records = parse_ratings(path)
        assert records == [RatingRecord(1, 296, 5.0, 1147880044)]

    def test_non_half_star_rejected_with_line(self, tmp_path):
        path = write(tmp_path / "r.csv",
                     "userId,movieId,rating,timestamp\n1,296,4.7,100\n")
        with pytest.raises(InputError, match=r":2:"):
            parse_ratings(path)

    def test_empty_after_header(self, tmp_path):
        path = write(tmp_path / "r.csv", "userId,movieId,rating,timestamp\n")
        assert parse_ratings(path) == []

    def test_missing_header(self, tmp_path):
        path = write(tmp_path / "r.csv", "user,movie,rating,ts\n1,2,3.0,4\n")
        with pytest.raises(InputError, match="header"):
            parse_ratings(path)

    def test_non_integer_timestamp(self, tmp_path):
        path = write(tmp_path / "r.csv",
                     "userId,movieId,rating,timestamp\n1,296,5.0,noon\n")
        with pytest.raises(InputError, match=r":2:"):
            parse_ratings(path)

    def test_rating_domain_bounds(self):
        with pytest.raises(InputError):
            RatingRecord(1, 1, 0.0, 1)
        with pytest.raises(InputError):
            RatingRecord(1, 1, 5.5, 1)
        RatingRecord(1, 1, 0.5, 1)
        RatingRecord(1, 1, 5.0, 1)


class TestParseMovies:
    def test_basic(self, tmp_path):
        path = write(tmp_path / "m.csv",
                     "movieId,title,genres\n1,Toy Story (1995),Adventure|Animation\n")
        movies = parse_movies(path)
        assert movies == [
            MovieRecord(1, "Toy Story (1995)", frozenset({"Adventure", "Animation"}))
        ]

    def test_quoted_comma_title(self, tmp_path):
        path = write(tmp_path / "m.csv",
                     'movieId,title,genres\n7,"A, B (2000)",Drama\n')
        movies = parse_movies(path)
        assert movies[0].title == "A, B (2000)"
        assert movies[0].genres == frozenset({"Drama"})

    def test_no_genres_sentinel(self, tmp_path):
        path = write(tmp_path / "m.csv",
                     "movieId,title,genres\n9,Oddity,(no genres listed)\n")
        assert parse_movies(path)[0].genres == frozenset()

    def test_bad_movie_id(self, tmp_path):
        path = write(tmp_path / "m.csv", "movieId,title,genres\nx,Bad,Drama\n")
        with pytest.raises(InputError, match=r":2:"):
            parse_movies(path)


class TestRoundTrips:
    def test_ratings_round_trip(self, tmp_path):
        records = [
            RatingRecord(1, 296, 5.0, 1147880044),
            RatingRecord(2, 10, 0.5, 99),
            RatingRecord(3, 11, 3.5, 100),
        ]
        path = tmp_path / "r.csv"
        write_ratings(records, path)
        assert parse_ratings(path) == records

    def test_movies_round_trip(self, tmp_path):
        movies = [
            MovieRecord(1, "Toy Story (1995)", frozenset({"Adventure", "Animation"})),
            MovieRecord(7, "A, B (2000)", frozenset({"Drama"})),
            MovieRecord(9, "Oddity", frozenset()),
        ]
        path = tmp_path / "m.csv"
        write_movies(movies, path)
        assert parse_movies(path) == movies


class TestTemporalSplit:
    def make_records(self, n=10):
        return [RatingRecord(u % 3 + 1, u % 4 + 1, 3.0, 1000 + u) for u in range(n)]

    def test_counts(self):
        train, evaluation = temporal_split(self.make_records(10), 0.8)
        assert len(train) == 8
        assert len(evaluation) <= 2

    def test_eval_filtered_to_training_entities(self):
        records = [
            RatingRecord(1, 1, 3.0, 1),
            RatingRecord(1, 2, 3.0, 2),
            RatingRecord(2, 1, 3.0, 3),  # last training row
            RatingRecord(9, 1, 3.0, 4),  # unseen user: dropped
            RatingRecord(1, 9, 3.0, 5),  # unseen movie: dropped
            RatingRecord(2, 2, 3.0, 6),  # survives
        ]
        train, evaluation = temporal_split(records, 0.5)
        assert {(r.user_id, r.movie_id) for r in evaluation} == {(2, 2)}

    def test_tie_break_is_deterministic(self):
        records = [RatingRecord(u, 1, 3.0, 1000) for u in (3, 1, 2)]
        records += [RatingRecord(5, 1, 3.0, 2000), RatingRecord(1, 1, 3.0, 2000)]
        train_a, _ = temporal_split(records, 0.6)
        train_b, _ = temporal_split(list(reversed(records)), 0.6)
        assert train_a == train_b
        assert [r.user_id for r in train_a] == [1, 2, 3]

    def test_bad_fraction(self):
        with pytest.raises(InputError):
            temporal_split(self.make_records(), 0.0)
        with pytest.raises(InputError):
            temporal_split(self.make_records(), 1.0)

    def test_empty_eval_after_filtering_errors(self):
        records = [RatingRecord(1, 1, 3.0, 1), RatingRecord(2, 2, 3.0, 2)]
        with pytest.raises(InputError):
            temporal_split(records, 0.5)


class TestBuildEvalSlates:
    MOVIES = {
        1: MovieRecord(1, "A", frozenset({"Drama"})),
        2: MovieRecord(2, "B", frozenset({"Comedy"})),
        3: MovieRecord(3, "C", frozenset()),
    }

    def test_single_rating_single_slate(self):
        slates = build_eval_slates(
            [RatingRecord(1, 2, 4.5, 10)], lambda u, m: 0.3, self.MOVIES
        )
        assert len(slates) == 1
        assert slates[0].query_id == "1"
        item = slates[0].items[0]
        assert item.id == "2" and item.outcome == 4.5
        assert item.groups == frozenset({"Comedy"})

    def test_order_follows_scores(self):
        scores = {(1, 1): 0.1, (1, 2): 0.9, (1, 3): 0.5}
        slates = build_eval_slates(
            [RatingRecord(1, m, 3.0, m) for m in (1, 2, 3)],
            lambda u, m: scores[(u, m)],
            self.MOVIES,
        )
        assert [it.id for it in slates[0].items] == ["2", "3", "1"]

    def test_repeat_rating_keeps_latest(self):
        slates = build_eval_slates(
            [RatingRecord(1, 1, 2.0, 10), RatingRecord(1, 1, 4.0, 20)],
            lambda u, m: 0.5,
            self.MOVIES,
        )
        assert slates[0].items[0].outcome == 4.0

    def test_missing_metadata_errors(self):
        with pytest.raises(UnseenEntityError):
            build_eval_slates([RatingRecord(1, 99, 3.0, 1)], lambda u, m: 0.5, self.MOVIES)

    def test_users_sorted_deterministically(self):
        slates = build_eval_slates(
            [RatingRecord(5, 1, 3.0, 1), RatingRecord(2, 1, 3.0, 2)],
            lambda u, m: 0.5,
            self.MOVIES,
        )
        assert [s.query_id for s in slates] == ["2", "5"]


class TestSlateFiles:
    def make_slates(self):
        s1 = rank_by_score(
            [
                Item("a", 0.9, groups={"Drama"}, outcome=1.0),
                Item("b", 0.5, groups={"Drama", "Comedy"}, outcome=0.0),
            ],
            "q1",
        )
        s2 = rank_by_score([Item("c", 0.7, outcome=3.5)], "q2")
        return [s1, s2]

    def test_round_trip(self, tmp_path):
        slates = self.make_slates()
        path = tmp_path / "slates.jsonl"
        write_slates(slates, path)
        loaded = read_slates(path)
        assert len(loaded) == 2
        for a, b in zip(slates, loaded):
            assert a.query_id == b.query_id
            assert [it.id for it in a.items] == [it.id for it in b.items]
            assert [it.score for it in a.items] == [it.score for it in b.items]
            assert [it.outcome for it in a.items] == [it.outcome for it in b.items]
            assert [it.groups for it in a.items] == [it.groups for it in b.items]

    def test_malformed_line_reports_location(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"query_id": "q", "items": [{"id": "a"}]}\n', encoding="utf-8")
        with pytest.raises(InputError, match=":1:"):
            read_slates(path)
