import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rggcast.pointproc import (
    GEOMETRY_STREAM,
    SeedSpec,
    SimDomain,
    derive_stream,
    sample_ppp,
)


class TestSimDomain:
    def test_area_and_expected_points(self):
        d = SimDomain(side_m=10.0, intensity_lambda=2.0)
        assert d.area == 100.0
        assert d.expected_points == 200.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(side_m=-1.0, intensity_lambda=1.0),
            dict(side_m=10.0, intensity_lambda=0.0),
            dict(side_m=10.0, intensity_lambda=float("nan")),
            dict(side_m=10.0, intensity_lambda=1.0, radius_r=-2.0),
            dict(side_m=1.0, intensity_lambda=1.0, radius_r=1.0),  # m < 2r
        ],
    )
    def test_rejects_bad_parameters(self, kwargs):
        with pytest.raises(ValueError):
            SimDomain(**kwargs)


class TestSeeds:
    def test_same_triple_same_stream(self):
        a = derive_stream(SeedSpec(123, 4, 5)).random(8)
        b = derive_stream(SeedSpec(123, 4, 5)).random(8)
        assert np.array_equal(a, b)

    @given(
        t1=st.integers(0, 50), s1=st.integers(0, 50),
        t2=st.integers(0, 50), s2=st.integers(0, 50),
    )
    @settings(max_examples=40, deadline=None)
    def test_distinct_triples_distinct_streams(self, t1, s1, t2, s2):
        if (t1, s1) == (t2, s2):
            return
        a = derive_stream(SeedSpec(99, t1, s1)).random(16)
        b = derive_stream(SeedSpec(99, t2, s2)).random(16)
        assert not np.array_equal(a, b)

    def test_rejects_negative_ids(self):
        with pytest.raises(ValueError):
            SeedSpec(1, trial_id=-1)
        with pytest.raises(ValueError):
            SeedSpec(1, stream_id=-2)


class TestSamplePpp:
    def test_source_at_origin_and_last(self):
        d = SimDomain(side_m=10.0, intensity_lambda=1.0)
        pts = sample_ppp(d, SeedSpec(7))
        assert pts.source_index == pts.n_points - 1
        assert np.all(pts.coords[pts.source_index] == 0.0)

    def test_points_inside_window(self):
        d = SimDomain(side_m=8.0, intensity_lambda=2.0)
        pts = sample_ppp(d, SeedSpec(11))
        assert np.all(np.abs(pts.coords) <= 4.0)

    def test_deterministic(self):
        d = SimDomain(side_m=10.0, intensity_lambda=1.5)
        a = sample_ppp(d, SeedSpec(5, trial_id=3))
        b = sample_ppp(d, SeedSpec(5, trial_id=3))
        assert np.array_equal(a.coords, b.coords)

    def test_rejects_non_geometry_stream(self):
        d = SimDomain(side_m=10.0, intensity_lambda=1.0)
        with pytest.raises(ValueError):
            sample_ppp(d, SeedSpec(5, stream_id=GEOMETRY_STREAM + 1))

    def test_poisson_count_statistics(self):
        # mean count over many trials should be close to lambda * m^2
        d = SimDomain(side_m=6.0, intensity_lambda=2.0)
        counts = [
            sample_ppp(d, SeedSpec(2024, trial_id=t)).n_points - 1 for t in range(300)
        ]
        mean = np.mean(counts)
        se = np.std(counts, ddof=1) / np.sqrt(len(counts))
        assert abs(mean - d.expected_points) < 4 * se

    def test_coords_read_only(self):
        d = SimDomain(side_m=10.0, intensity_lambda=1.0)
        pts = sample_ppp(d, SeedSpec(1))
        with pytest.raises(ValueError):
            pts.coords[0, 0] = 99.0
