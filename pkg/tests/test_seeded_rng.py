import numpy as np
import pytest

from seeded_rng import SeededRng


class TestSeededRng:
    def test_same_stream_same_draws(self):
        a = SeededRng(7).child("seq", 3, "fpf").generator().random(5)
        b = SeededRng(7).child("seq", 3, "fpf").generator().random(5)
        np.testing.assert_array_equal(a, b)

    def test_generator_restarts_stream(self):
        """Each generator() call starts at the beginning of the stream."""
        rng = SeededRng(7)
        assert rng.generator().random() == rng.generator().random()

    def test_distinct_keys_distinct_streams(self):
        root = SeededRng(7)
        draws = {
            root.child(*keys).generator().random()
            for keys in [("a",), ("b",), (1,), ("1",), ("a", 1), ("a", 2), (1, "a")]
        }
        assert len(draws) == 7

    def test_distinct_seeds(self):
        assert SeededRng(1).generator().random() != SeededRng(2).generator().random()

    def test_child_chain_equals_flat_keys_only_when_same_path(self):
        root = SeededRng(11)
        assert root.child("x").child(2) == root.child("x").child(2)
        assert root.child("x").child(2).stream != root.child("x", 2).stream

    def test_rejects_unhashable_key_types(self):
        with pytest.raises(TypeError):
            SeededRng(1).child(1.5)
        with pytest.raises(TypeError):
            SeededRng(1).child(True)

    def test_large_and_negative_seeds_wrap_to_64_bits(self):
        assert SeededRng(-1).seed == 2 ** 64 - 1
        assert SeededRng(2 ** 64 + 5).seed == 5
