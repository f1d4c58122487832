"""Region/review ingestion, tourist filtering, and the synthetic generator."""

import numpy as np
import pytest
from scipy.stats import chi2_contingency

from regionrec.core import (
    ConfigError,
    Level,
    LoadError,
    ReferentialError,
    RegionId,
    ValidationError,
)
from regionrec.ingest import (
    ReviewEvent,
    ReviewLog,
    SyntheticSpec,
    attach_review_counts,
    filter_tourists,
    generate_synthetic,
    get_region,
    load_assignments,
    load_regions,
    load_reviews,
    neighborhoods_of,
    regions_at_level,
    write_assignments,
    write_regions,
    write_reviews,
)

from helpers import make_city, make_zip, registry_of, table_of


def zip_id(code: str, parent: str) -> RegionId:
    return RegionId(level=Level.NEIGHBORHOOD, code=code, parent_city=parent)


def _world():
    records = [
        make_city("CA"),
        make_city("CB", population=90_000.0),
        make_zip("ZA1", "CA"),
        make_zip("ZA2", "CA", education_rate=0.5),
        make_zip("ZB1", "CB"),
    ]
    return table_of(*records), registry_of(*records)


class TestRegionCsvRoundtrip:
    def test_write_then_load_preserves_everything(self, tmp_path):
        regions, registry = _world()
        path = tmp_path / "regions.csv"
        write_regions(path, regions, registry)
        loaded, loaded_registry = load_regions(path)
        assert set(loaded) == set(regions)
        for rid, record in regions.items():
            assert loaded[rid].name == record.name
            assert loaded[rid].attributes == record.attributes
        assert loaded_registry.racial_categories == registry.racial_categories
        assert loaded_registry.scene_names == registry.scene_names
        assert loaded_registry.venue_categories == registry.venue_categories
        for dim, loaded_dim in zip(registry.dimensions, loaded_registry.dimensions):
            assert loaded_dim.scale == pytest.approx(dim.scale, rel=1e-12)

    def test_cities_written_before_neighborhoods(self, tmp_path):
        regions, registry = _world()
        path = tmp_path / "regions.csv"
        write_regions(path, regions, registry)
        codes = [line.split(",")[1] for line in path.read_text().splitlines()[1:]]
        assert codes == ["CA", "CB", "ZA1", "ZA2", "ZB1"]


class TestLoadRegionErrors:
    def _write(self, tmp_path, text: str):
        path = tmp_path / "regions.csv"
        path.write_text(text)
        return path

    def test_missing_file(self, tmp_path):
        with pytest.raises(LoadError):
            load_regions(tmp_path / "absent.csv")

    def test_empty_file(self, tmp_path):
        with pytest.raises(LoadError, match="empty"):
            load_regions(self._write(tmp_path, ""))

    def test_missing_required_column(self, tmp_path):
        regions, registry = _world()
        path = tmp_path / "regions.csv"
        write_regions(path, regions, registry)
        lines = path.read_text().splitlines()
        lines[0] = lines[0].replace("population", "pop")
        with pytest.raises(LoadError):
            load_regions(self._write(tmp_path, "\n".join(lines)))

    def test_missing_category_columns(self, tmp_path):
        regions, registry = _world()
        path = tmp_path / "regions.csv"
        write_regions(path, regions, registry)
        text = path.read_text().replace("race:a,race:b,", "")
        # Drop the race fields from each data row as well.
        with pytest.raises(LoadError):
            load_regions(self._write(tmp_path, text))

    def test_non_numeric_field_names_row(self, tmp_path):
        regions, registry = _world()
        path = tmp_path / "regions.csv"
        write_regions(path, regions, registry)
        text = path.read_text().replace("90000.0", "ninety-thousand")
        with pytest.raises(LoadError, match="row"):
            load_regions(self._write(tmp_path, text))

    def test_duplicate_code_names_first_row(self, tmp_path):
        regions, registry = _world()
        path = tmp_path / "regions.csv"
        write_regions(path, regions, registry)
        lines = path.read_text().splitlines()
        lines.append(lines[1])  # repeat the first data row
        with pytest.raises(ValidationError, match="first seen"):
            load_regions(self._write(tmp_path, "\n".join(lines) + "\n"))

    def test_unknown_parent_city(self, tmp_path):
        regions, registry = _world()
        path = tmp_path / "regions.csv"
        write_regions(path, regions, registry)
        text = path.read_text().replace("neighborhood,ZB1,CB", "neighborhood,ZB1,CX")
        with pytest.raises(ReferentialError):
            load_regions(self._write(tmp_path, text))

    def test_attribute_violation_names_row(self, tmp_path):
        regions, registry = _world()
        path = tmp_path / "regions.csv"
        write_regions(path, regions, registry)
        text = path.read_text().replace("90000.0", "-90000.0")
        with pytest.raises(ValidationError, match="row"):
            load_regions(self._write(tmp_path, text))


class TestReviewLog:
    def test_roundtrip(self, tmp_path):
        regions, _ = _world()
        events = [
            ReviewEvent("u1", zip_id("ZA1", "CA"), timestamp=100),
            ReviewEvent("u2", zip_id("ZB1", "CB")),
            ReviewEvent("u1", zip_id("ZA2", "CA"), timestamp=200),
        ]
        log = ReviewLog.from_events(events)
        path = tmp_path / "reviews.csv"
        write_reviews(path, log)
        loaded = load_reviews(path, regions)
        assert loaded.events == tuple(events) or list(loaded.events) == events
        assert loaded.n_users == 2

    def test_events_for_preserves_order(self):
        events = [
            ReviewEvent("u1", zip_id("ZA1", "CA")),
            ReviewEvent("u2", zip_id("ZB1", "CB")),
            ReviewEvent("u1", zip_id("ZA2", "CA")),
        ]
        log = ReviewLog.from_events(events)
        assert [e.neighborhood.code for e in log.events_for("u1")] == ["ZA1", "ZA2"]

    def test_empty_file_yields_empty_log(self, tmp_path):
        regions, _ = _world()
        path = tmp_path / "reviews.csv"
        path.write_text("")
        log = load_reviews(path, regions)
        assert log.n_users == 0

    def test_missing_file_raises_load_error(self, tmp_path):
        regions, _ = _world()
        with pytest.raises(LoadError):
            load_reviews(tmp_path / "absent.csv", regions)

    def test_unknown_zip_names_row(self, tmp_path):
        regions, _ = _world()
        path = tmp_path / "reviews.csv"
        path.write_text("user_id,zip,timestamp\nu1,ZQ9,\n")
        with pytest.raises(ReferentialError, match="row 2"):
            load_reviews(path, regions)

    def test_missing_columns_rejected(self, tmp_path):
        regions, _ = _world()
        path = tmp_path / "reviews.csv"
        path.write_text("user,zip\nu1,ZA1\n")
        with pytest.raises(LoadError):
            load_reviews(path, regions)

    def test_bad_timestamp_rejected(self, tmp_path):
        regions, _ = _world()
        path = tmp_path / "reviews.csv"
        path.write_text("user_id,zip,timestamp\nu1,ZA1,yesterday\n")
        with pytest.raises(LoadError):
            load_reviews(path, regions)


def _log(spec: dict[str, list[str]]) -> ReviewLog:
    """spec: user -> list of zip codes (parent = 'C'+second char)."""
    events = [
        ReviewEvent(user, zip_id(code, "C" + code[1]))
        for user, codes in spec.items()
        for code in codes
    ]
    return ReviewLog.from_events(events)


class TestFilterTourists:
    def test_keeps_only_wide_travelers(self):
        log = _log(
            {
                "wide": ["ZA1", "ZB1", "ZC1"],
                "narrow": ["ZA1", "ZA2", "ZA1"],
            }
        )
        kept = filter_tourists(log, min_cbsas=3)
        assert kept.n_users == 1
        assert kept.events_for("wide")

    def test_threshold_counts_distinct_cities_not_events(self):
        log = _log({"u": ["ZA1", "ZA2", "ZA1", "ZB1"]})  # 4 events, 2 cities
        assert filter_tourists(log, min_cbsas=2).n_users == 1
        assert filter_tourists(log, min_cbsas=3).n_users == 0

    def test_idempotent(self):
        log = _log({"a": ["ZA1", "ZB1"], "b": ["ZA1"]})
        once = filter_tourists(log, min_cbsas=2)
        twice = filter_tourists(once, min_cbsas=2)
        assert list(once.events) == list(twice.events)

    def test_monotone_in_threshold(self):
        log = _log(
            {
                "one": ["ZA1"],
                "two": ["ZA1", "ZB1"],
                "three": ["ZA1", "ZB1", "ZC1"],
            }
        )
        sizes = [filter_tourists(log, m).n_users for m in (1, 2, 3, 4)]
        assert sizes == [3, 2, 1, 0]

    def test_order_preserved(self):
        log = _log({"a": ["ZA1", "ZB1"], "b": ["ZC1", "ZD1"]})
        kept = filter_tourists(log, min_cbsas=2)
        assert [e.user_id for e in kept.events] == ["a", "a", "b", "b"]

    def test_invalid_threshold(self):
        with pytest.raises(ConfigError):
            filter_tourists(_log({"a": ["ZA1"]}), 0)


class TestAttachReviewCounts:
    def test_city_counts_include_all_its_zips(self):
        regions, _ = _world()
        log = _log({"u1": ["ZA1", "ZA1", "ZA2"], "u2": ["ZB1"]})
        counted = attach_review_counts(regions, log)
        by_code = {rid.code: rec.total_reviews for rid, rec in counted.items()}
        assert by_code == {"CA": 3, "CB": 1, "ZA1": 2, "ZA2": 1, "ZB1": 1}

    def test_original_table_not_mutated(self):
        regions, _ = _world()
        log = _log({"u1": ["ZA1"]})
        attach_review_counts(regions, log)
        assert all(rec.total_reviews == 0 for rec in regions.values())


class TestTableHelpers:
    def test_regions_at_level(self):
        regions, _ = _world()
        cities = regions_at_level(regions, Level.CITY)
        zips = regions_at_level(regions, Level.NEIGHBORHOOD)
        assert sorted(r.id.code for r in cities) == ["CA", "CB"]
        assert sorted(r.id.code for r in zips) == ["ZA1", "ZA2", "ZB1"]

    def test_neighborhoods_of(self):
        regions, _ = _world()
        assert sorted(r.id.code for r in neighborhoods_of(regions, "CA")) == [
            "ZA1",
            "ZA2",
        ]
        assert neighborhoods_of(regions, "CX") == []

    def test_get_region(self):
        regions, _ = _world()
        assert get_region(regions, Level.CITY, "CA").name == "City CA"
        assert get_region(regions, Level.CITY, "CX") is None


class TestSyntheticSpec:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_cities": 0},
            {"n_users": 0},
            {"n_neighborhoods_per_city": 0},
            {"reviews_per_user_range": (0, 10)},
            {"reviews_per_user_range": (10, 5)},
            {"noise_rate": -0.1},
            {"noise_rate": 1.1},
            {"n_archetypes": 10, "n_cities": 5},
        ],
    )
    def test_invalid_spec_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            SyntheticSpec(**kwargs)

    def test_from_json_converts_range(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(
            '{"n_cities": 8, "reviews_per_user_range": [10, 20], "rng_seed": 3}'
        )
        spec = SyntheticSpec.from_json(path)
        assert spec.n_cities == 8
        assert spec.reviews_per_user_range == (10, 20)
        assert spec.rng_seed == 3


class TestGenerateSynthetic:
    def test_shape_of_output(self, small_synth):
        regions, registry, log, assignments = small_synth
        cities = regions_at_level(regions, Level.CITY)
        zips = regions_at_level(regions, Level.NEIGHBORHOOD)
        assert len(cities) == 9
        assert len(zips) == 45
        assert log.n_users == 36
        assert set(assignments.values()) == {0, 1, 2}
        # Balanced panel: archetypes split as evenly as possible.
        sizes = [sum(1 for a in assignments.values() if a == k) for k in range(3)]
        assert max(sizes) - min(sizes) <= 1

    def test_every_event_points_at_a_real_zip(self, small_synth):
        regions, _registry, log, _ = small_synth
        for event in log.events:
            assert event.neighborhood in regions

    def test_review_counts_attached(self, small_synth):
        regions, _registry, log, _ = small_synth
        total_city = sum(
            rec.total_reviews for rec in regions_at_level(regions, Level.CITY)
        )
        assert total_city == len(log.events)

    def test_deterministic_per_seed(self):
        spec = SyntheticSpec(
            n_cities=7,
            n_neighborhoods_per_city=4,
            n_users=10,
            reviews_per_user_range=(12, 20),
            rng_seed=99,
        )
        r1, _, log1, a1 = generate_synthetic(spec)
        r2, _, log2, a2 = generate_synthetic(spec)
        assert a1 == a2
        assert [
            (e.user_id, e.neighborhood.code) for e in log1.events
        ] == [(e.user_id, e.neighborhood.code) for e in log2.events]
        assert {rid.code for rid in r1} == {rid.code for rid in r2}

    def test_different_seed_changes_reviews(self):
        base = dict(
            n_cities=7,
            n_neighborhoods_per_city=4,
            n_users=10,
            reviews_per_user_range=(12, 20),
        )
        _, _, log1, _ = generate_synthetic(SyntheticSpec(rng_seed=1, **base))
        _, _, log2, _ = generate_synthetic(SyntheticSpec(rng_seed=2, **base))
        assert [
            (e.user_id, e.neighborhood.code) for e in log1.events
        ] != [(e.user_id, e.neighborhood.code) for e in log2.events]

    def test_min_cbsas_guarantee_holds(self, small_synth):
        # Every generated user must survive the tourist filter at the
        # default threshold, so the pipeline never silently drops users.
        _, _, log, _ = small_synth
        kept = filter_tourists(log, min_cbsas=6)
        assert kept.n_users == log.n_users

    def test_full_noise_breaks_archetype_dependence(self):
        # At noise_rate=1.0 reviews are uniform over zips, independent of the
        # user's archetype: a chi-square independence test should not reject.
        spec = SyntheticSpec(
            n_cities=9,
            n_neighborhoods_per_city=4,
            n_users=45,
            n_archetypes=3,
            reviews_per_user_range=(40, 60),
            noise_rate=1.0,
            rng_seed=3,
        )
        _, _, log, assignments = generate_synthetic(spec)
        city_codes = sorted({e.neighborhood.parent_city for e in log.events})
        table = np.zeros((3, len(city_codes)))
        col = {c: j for j, c in enumerate(city_codes)}
        for event in log.events:
            table[assignments[event.user_id], col[event.neighborhood.parent_city]] += 1
        _stat, p_value, _dof, _exp = chi2_contingency(table)
        assert p_value > 0.01

    def test_zero_noise_concentrates_on_own_cluster(self):
        # With two archetypes and no noise, a user's most-reviewed city must
        # belong to their own archetype's cluster (cities alternate clusters).
        spec = SyntheticSpec(
            n_cities=8,
            n_neighborhoods_per_city=4,
            n_users=20,
            n_archetypes=2,
            reviews_per_user_range=(30, 40),
            noise_rate=0.0,
            rng_seed=5,
        )
        _, _, log, assignments = generate_synthetic(spec)
        for user_id in {e.user_id for e in log.events}:
            counts: dict[str, int] = {}
            for event in log.events_for(user_id):
                counts[event.neighborhood.parent_city] = (
                    counts.get(event.neighborhood.parent_city, 0) + 1
                )
            modal_city = max(counts, key=lambda c: (counts[c], c))
            city_index = int(modal_city[1:]) - 100
            assert city_index % 2 == assignments[user_id]


class TestAssignmentsCsv:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "assignments.csv"
        write_assignments(path, {"u2": 1, "u1": 0})
        assert load_assignments(path) == {"u1": 0, "u2": 1}
        # Written sorted by user id.
        lines = path.read_text().splitlines()
        assert lines[1].startswith("u1,")
