import math

import numpy as np
import pytest

from scheda import (
    ActivationSet,
    Rng,
    activation_vectors,
    cosine,
    export_filters,
    extract,
    filter_grid_image,
    init_params,
    match_counts,
)
from scheda.analysis import write_match_counts_csv
from scheda.errors import ShapeError


def random_acts(rng, features, examples):
    return ActivationSet(rng.uniform(0.01, 0.99, features * examples).reshape(features, examples))


class TestActivationVectors:
    def test_shape(self):
        p = init_params(6, 4, Rng(0))
        acts = activation_vectors(p, np.random.rand(9, 6))
        assert acts.activations.shape == (4, 9)

    def test_zero_weights_half(self):
        p = init_params(6, 4, Rng(0))
        p.weights[:] = 0.0
        acts = activation_vectors(p, np.random.rand(9, 6))
        assert np.all(acts.activations == 0.5)

    def test_equals_extract_transpose(self):
        p = init_params(6, 4, Rng(1))
        x = np.random.rand(9, 6)
        assert np.array_equal(activation_vectors(p, x).activations, extract(p, x).T)

    def test_sigmoid_activations_inside_unit_interval(self):
        p = init_params(6, 4, Rng(2))
        acts = activation_vectors(p, np.random.rand(9, 6)).activations
        assert np.all((acts > 0.0) & (acts < 1.0))


class TestCosine:
    def test_self_similarity(self):
        v = Rng(3).uniform(n=17)
        assert cosine(v, v) == pytest.approx(1.0, rel=1e-12)

    def test_orthogonal(self):
        assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_known_value(self):
        assert round(cosine([1.0, 0.0], [1.0, 1.0]), 10) == 0.7071067812
        assert cosine([1.0, 0.0], [1.0, 1.0]) == pytest.approx(math.sqrt(2) / 2, rel=1e-12)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError, match="zero vector"):
            cosine([0.0, 0.0], [1.0, 0.0])

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            cosine([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_positive_vectors_land_in_unit_half_open(self):
        rng = Rng(4)
        for _ in range(20):
            a = rng.uniform(0.01, 0.99, 11)
            b = rng.uniform(0.01, 0.99, 11)
            assert 0.0 < cosine(a, b) <= 1.0 + 1e-15


class TestMatchCounts:
    def test_self_reference_takes_all(self):
        target = random_acts(Rng(5), 7, 12)
        counts = match_counts(target, [target])
        assert counts.tolist() == [7]

    def test_counts_sum_to_feature_count(self):
        rng = Rng(6)
        target = random_acts(rng, 9, 15)
        refs = [random_acts(rng, 5, 15) for _ in range(4)]
        assert match_counts(target, refs).sum() == 9

    def test_paper_row_arithmetic(self):
        # the published count row sums to the full feature complement
        row = [374, 550, 444, 299, 169, 92, 72]
        assert sum(row) == 2000

    def test_brute_force_oracle_exact(self):
        rng = Rng(7)
        target = random_acts(rng, 5, 10)
        refs = [random_acts(rng, 4, 10) for _ in range(3)]
        counts = match_counts(target, refs)

        expected = [0, 0, 0]
        for i in range(5):
            best_r, best_val = None, -2.0
            for r, ref in enumerate(refs):
                m = max(
                    cosine(target.activations[i], ref.activations[j])
                    for j in range(ref.activations.shape[0])
                )
                if m > best_val:
                    best_r, best_val = r, m
            expected[best_r] += 1
        assert counts.tolist() == expected

    def test_tie_goes_to_earliest_reference(self):
        target = random_acts(Rng(8), 6, 9)
        ref = random_acts(Rng(9), 4, 9)
        counts = match_counts(target, [ref, ref])
        assert counts.tolist() == [6, 0]

    def test_invariant_to_permutation_within_reference(self):
        rng = Rng(10)
        target = random_acts(rng, 6, 9)
        ref_a = random_acts(rng, 5, 9)
        ref_b = random_acts(rng, 5, 9)
        shuffled = ActivationSet(ref_a.activations[::-1].copy(), ref_a.tag)
        assert np.array_equal(
            match_counts(target, [ref_a, ref_b]), match_counts(target, [shuffled, ref_b])
        )

    def test_example_count_mismatch(self):
        with pytest.raises(ShapeError, match="examples"):
            match_counts(random_acts(Rng(1), 3, 8), [random_acts(Rng(2), 3, 9)])

    def test_empty_references_rejected(self):
        with pytest.raises(ValueError):
            match_counts(random_acts(Rng(1), 3, 8), [])

    def test_csv_output(self, tmp_path):
        path = tmp_path / "counts.csv"
        write_match_counts_csv(["da-0.1", "da-0.3"], [5, 2], path)
        assert path.read_text() == "reference_tag,count\nda-0.1,5\nda-0.3,2\n"


class TestExportFilters:
    def test_rgb_grid_dimensions(self, tmp_path):
        w = Rng(11).uniform(-1, 1, 4 * 3072).reshape(4, 3072)
        path = tmp_path / "filters.ppm"
        export_filters(w, (2, 2), "rgb", path)
        data = path.read_bytes()
        header, rest = data.split(b"\n", 1)
        assert header == b"P6"
        dims, rest = rest.split(b"\n", 1)
        assert dims == b"65 65"
        maxval, pixels = rest.split(b"\n", 1)
        assert maxval == b"255"
        assert len(pixels) == 65 * 65 * 3

    def test_constant_filter_is_mid_gray(self):
        w = np.zeros((1, 16))
        img = filter_grid_image(w, (1, 1), "gray")
        assert img.shape == (4, 4, 3)
        assert np.all(img == 127)

    def test_gray_tiles_replicate_channels(self):
        w = Rng(12).uniform(0, 1, 2 * 9).reshape(2, 9)
        img = filter_grid_image(w, (1, 2), "gray")
        assert img.shape == (3, 7, 3)
        assert np.array_equal(img[:, :, 0], img[:, :, 1])
        assert np.array_equal(img[:, :, 0], img[:, :, 2])

    def test_separator_is_black(self):
        w = np.full((2, 4), 5.0)
        img = filter_grid_image(w, (1, 2), "gray")
        assert np.all(img[:, 2, :] == 0)

    def test_normalization_spans_full_range(self):
        w = np.array([[0.0, 1.0, 2.0, 3.0]])
        img = filter_grid_image(w, (1, 1), "gray")
        assert img.min() == 0 and img.max() == 255

    def test_deterministic_bytes(self, tmp_path):
        w = Rng(13).uniform(-1, 1, 3 * 12).reshape(3, 12)
        export_filters(w, (2, 2), "rgb", tmp_path / "a.ppm")
        export_filters(w, (2, 2), "rgb", tmp_path / "b.ppm")
        assert (tmp_path / "a.ppm").read_bytes() == (tmp_path / "b.ppm").read_bytes()

    def test_incompatible_width_rejected(self):
        with pytest.raises(ValueError, match="square"):
            filter_grid_image(np.zeros((1, 10)), (1, 1), "gray")
        with pytest.raises(ValueError, match="divisible"):
            filter_grid_image(np.zeros((1, 16)), (1, 1), "rgb")

    def test_grid_too_small_rejected(self):
        with pytest.raises(ValueError, match="grid"):
            filter_grid_image(np.zeros((5, 16)), (2, 2), "gray")
