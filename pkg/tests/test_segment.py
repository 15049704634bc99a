import numpy as np
import pytest

from retiseg import segment


class TestThresholds:
    def test_from_interior(self):
        t = segment.Thresholds.from_interior([0.55, 0.75])
        assert t.rho == (0.0, 0.55, 0.75, 1.0)
        assert t.K == 3

    def test_rejects_non_increasing(self):
        with pytest.raises(ValueError):
            segment.Thresholds((0.0, 0.7, 0.3, 1.0))

    def test_rejects_bad_endpoints(self):
        with pytest.raises(ValueError):
            segment.Thresholds((0.1, 0.5, 1.0))
        with pytest.raises(ValueError):
            segment.Thresholds((0.0, 0.5, 0.9))


class TestThresholdPhases:
    def test_two_phase_rule(self):
        R = np.array([[0.1, 0.5, 0.9]])
        lm = segment.threshold_phases(R, segment.Thresholds((0.0, 0.5, 1.0)))
        np.testing.assert_array_equal(lm.labels.ravel(), [1, 2, 2])

    def test_top_value_goes_to_last_phase(self):
        R = np.array([[1.0]])
        for rho in ((0.0, 0.3, 1.0), (0.0, 0.2, 0.8, 1.0)):
            lm = segment.threshold_phases(R, segment.Thresholds(rho))
            assert lm.labels[0, 0] == lm.K

    def test_boundary_membership(self):
        R = np.array([[0.39, 0.4, 0.61]])
        lm = segment.threshold_phases(R, segment.Thresholds((0.0, 0.4, 0.6, 1.0)))
        np.testing.assert_array_equal(lm.labels.ravel(), [1, 2, 3])

    def test_rejects_out_of_range_reflection(self):
        with pytest.raises(ValueError):
            segment.threshold_phases(np.array([[1.2]]), segment.Thresholds((0.0, 0.5, 1.0)))

    def test_partition_property(self, rng):
        R = rng.uniform(0.0, 1.0, size=(32, 32))
        lm = segment.threshold_phases(R, segment.Thresholds.from_interior((0.25, 0.5, 0.9)))
        assert lm.labels.min() >= 1 and lm.labels.max() <= lm.K
        union = np.zeros_like(R)
        for i in range(1, lm.K + 1):
            mask = segment.phase_mask(lm, i)
            assert (union * mask == 0).all()  # pairwise disjoint
            union += mask
        np.testing.assert_array_equal(union, 1.0)

    def test_monotone_relabeling(self, rng):
        R = rng.uniform(0.0, 1.0, size=200)
        lm = segment.threshold_phases(R.reshape(10, 20),
                                      segment.Thresholds.from_interior((0.3, 0.7)))
        labels = lm.labels.ravel()
        order = np.argsort(R)
        assert (np.diff(labels[order]) >= 0).all()


class TestPhaseMask:
    def test_single_phase_all_ones(self):
        lm = segment.threshold_phases(np.full((4, 4), 0.2),
                                      segment.Thresholds((0.0, 1.0)))
        np.testing.assert_array_equal(segment.phase_mask(lm, 1), 1.0)

    def test_out_of_range_phase(self):
        lm = segment.threshold_phases(np.zeros((2, 2)), segment.Thresholds((0.0, 0.5, 1.0)))
        with pytest.raises(ValueError):
            segment.phase_mask(lm, 3)


class TestRenderOverlay:
    def test_uniform_map_returns_base(self, rng):
        base = rng.uniform(0, 1, size=(8, 8))
        lm = segment.threshold_phases(np.full((8, 8), 0.2),
                                      segment.Thresholds((0.0, 0.5, 1.0)))
        overlay = segment.render_overlay(lm, base)
        np.testing.assert_array_equal(overlay, np.repeat(base[:, :, None], 3, axis=2))

    def test_half_split_single_boundary(self):
        R = np.zeros((8, 8))
        R[:, 4:] = 0.9
        lm = segment.threshold_phases(R, segment.Thresholds((0.0, 0.5, 1.0)))
        mask = segment.boundary_mask(lm)
        expected = np.zeros((8, 8), dtype=bool)
        expected[:, 3:5] = True
        np.testing.assert_array_equal(mask, expected)

    def test_boundary_invariant_under_label_permutation(self):
        R = np.zeros((8, 8))
        R[:, 4:] = 0.9
        lm = segment.threshold_phases(R, segment.Thresholds((0.0, 0.5, 1.0)))
        flipped = segment.LabelMap(3 - lm.labels, lm.K, lm.thresholds)
        np.testing.assert_array_equal(
            segment.boundary_mask(lm), segment.boundary_mask(flipped)
        )

    def test_dimension_mismatch(self):
        lm = segment.threshold_phases(np.zeros((4, 4)), segment.Thresholds((0.0, 1.0)))
        with pytest.raises(ValueError):
            segment.render_overlay(lm, np.zeros((5, 5)))


class TestLabelMapIO:
    def test_round_trip(self, tmp_path, rng):
        R = rng.uniform(0, 1, size=(12, 9))
        lm = segment.threshold_phases(R, segment.Thresholds.from_interior((0.4, 0.8)))
        segment.save_label_map(lm, tmp_path / "labels.png")
        back = segment.load_label_map(tmp_path / "labels.png")
        np.testing.assert_array_equal(back.labels, lm.labels)
        assert back.K == lm.K
        assert back.thresholds.rho == lm.thresholds.rho

    def test_sidecar_contents(self, tmp_path):
        import json

        lm = segment.threshold_phases(np.zeros((2, 2)),
                                      segment.Thresholds.from_interior((0.5,)))
        segment.save_label_map(lm, tmp_path / "labels.png")
        sidecar = json.loads((tmp_path / "labels.json").read_text())
        assert sidecar["K"] == 2
        assert sidecar["thresholds"] == [0.0, 0.5, 1.0]
        assert "palette" in sidecar
