import math
import random
from fractions import Fraction
from functools import lru_cache

import pytest
from hypothesis import given, strategies as st

from sparsecube.errors import CorruptStreamError, InvalidPositionError
from sparsecube.huffman import (
    BitStream,
    CodeBook,
    Decoder,
    build_codebook,
    decode_next,
    decode_sequence,
    decoder_init,
    encode_sequence,
)


def optimal_tree_cost(weights):
    """Brute force over every binary tree shape: minimal weighted path length.

    Independent of the heap construction under test.  cost(S) adds the total
    weight of S at each split, which equals sum(w_i * depth_i).
    """
    w = tuple(weights)

    @lru_cache(maxsize=None)
    def cost(mask):
        bits = [i for i in range(len(w)) if mask >> i & 1]
        if len(bits) == 1:
            return 0
        total = sum(w[i] for i in bits)
        best = None
        lowest = 1 << bits[0]
        rest = mask ^ lowest
        sub = rest
        while True:  # proper submasks of rest, paired with the lowest bit
            left = lowest | sub
            right = mask ^ left
            if right:
                c = cost(left) + cost(right)
                if best is None or c < best:
                    best = c
            if sub == 0:
                break
            sub = (sub - 1) & rest
        return total + best

    return cost((1 << len(w)) - 1)


freq_maps = st.dictionaries(
    st.integers(0, 300), st.integers(1, 50), min_size=1, max_size=40
)


class TestCodebook:
    def test_two_symbols_one_bit(self):
        cb = build_codebook({7: 1, 9: 1})
        assert cb.lengths == {7: 1, 9: 1}
        assert cb.codes[7] == (1, 0)
        assert cb.codes[9] == (1, 1)

    def test_three_symbols(self):
        # Oracle over all 3-leaf prefix trees gives lengths (2, 2, 1).
        assert optimal_tree_cost([1, 1, 2]) == 6
        cb = build_codebook({0: 1, 1: 1, 2: 2})
        assert cb.lengths == {0: 2, 1: 2, 2: 1}

    def test_single_symbol_gets_one_bit(self):
        cb = build_codebook({5: 5})
        assert cb.lengths == {5: 1}

    def test_empty_freqs_error(self):
        with pytest.raises(ValueError):
            build_codebook({})

    def test_nonpositive_count_error(self):
        with pytest.raises(ValueError):
            build_codebook({1: 0})

    @given(freq_maps)
    def test_kraft_equality(self, freqs):
        cb = build_codebook(freqs)
        if len(freqs) >= 2:
            assert sum(Fraction(1, 2**l) for l in cb.lengths.values()) == 1

    @given(freq_maps)
    def test_prefix_free(self, freqs):
        cb = build_codebook(freqs)
        codes = [(format(c, f"0{l}b")) for l, c in cb.codes.values()]
        for i, a in enumerate(codes):
            for b in codes[i + 1 :]:
                assert not a.startswith(b) and not b.startswith(a)

    @given(freq_maps)
    def test_expected_length_within_one_bit_of_entropy(self, freqs):
        # The 1-bit convention for a single-symbol alphabet sits outside the
        # classic bound, which assumes at least two symbols.
        if len(freqs) < 2:
            return
        cb = build_codebook(freqs)
        total = sum(freqs.values())
        entropy = -sum(
            n / total * math.log2(n / total) for n in freqs.values()
        )
        avg_len = cb.encoded_bit_count(freqs) / total
        assert entropy <= avg_len + 1e-9
        assert avg_len < entropy + 1

    def test_optimality_small_alphabets(self):
        rng = random.Random(11)
        for _ in range(200):
            k = rng.randint(2, 6)
            freqs = {s: rng.randint(1, 40) for s in rng.sample(range(100), k)}
            cb = build_codebook(freqs)
            got = cb.encoded_bit_count(freqs)
            assert got == optimal_tree_cost(list(freqs.values()))

    def test_deterministic_construction(self):
        freqs = {3: 2, 1: 2, 7: 2, 5: 2}
        assert build_codebook(freqs).codes == build_codebook(freqs).codes

    def test_serialization_round_trip(self):
        cb = build_codebook({0: 3, 1: 1, 2: 1, 9: 7})
        data = cb.to_bytes()
        again, end = CodeBook.from_bytes(data)
        assert end == len(data) == cb.size_bytes()
        assert again.codes == cb.codes


class TestEncode:
    def test_empty_sequence(self):
        cb = build_codebook({0: 1, 1: 1})
        stream, ends = encode_sequence(cb, [])
        assert stream.bit_length == 0
        assert stream.data == b""
        assert ends == []

    def test_two_symbol_example(self):
        # Canonical assignment pins 0->bit 0, 1->bit 1, so "0101" packs
        # MSB-first into a single octet 0b0101_0000.
        cb = build_codebook({0: 1, 1: 1})
        stream, ends = encode_sequence(cb, [0, 1, 0, 1])
        assert stream.bit_length == 4
        assert stream.data == bytes([0b01010000])
        assert ends == [(0, 1), (0, 2), (0, 3), (0, 4)]

    def test_unknown_symbol(self):
        cb = build_codebook({0: 1, 1: 1})
        with pytest.raises(ValueError):
            encode_sequence(cb, [2])

    def test_bit_count_matches_lengths(self):
        freqs = {0: 5, 1: 3, 2: 1}
        cb = build_codebook(freqs)
        seq = [0] * 5 + [1] * 3 + [2]
        stream, _ = encode_sequence(cb, seq)
        assert stream.bit_length == cb.encoded_bit_count(freqs)


class TestDecode:
    def test_stream_of_abab(self):
        cb = build_codebook({0: 1, 1: 1})
        stream, _ = encode_sequence(cb, [0, 1, 0, 1])
        dec = decoder_init(cb, stream, 0, 0)
        assert [decode_next(dec) for _ in range(4)] == [0, 1, 0, 1]
        assert decode_next(dec) is None

    def test_init_at_anchor_returns_next_symbol(self):
        rng = random.Random(5)
        freqs = {s: rng.randint(1, 9) for s in range(17)}
        cb = build_codebook(freqs)
        seq = rng.choices(list(freqs), k=60)
        stream, ends = encode_sequence(cb, seq)
        for i, (byte, bit) in enumerate(ends[:-1]):
            dec = decoder_init(cb, stream, byte, bit)
            assert dec.decode_next() == seq[i + 1]

    def test_anchor_suffix_decoding(self):
        rng = random.Random(6)
        freqs = {s: rng.randint(1, 9) for s in range(30)}
        cb = build_codebook(freqs)
        seq = rng.choices(list(freqs), k=80)
        stream, ends = encode_sequence(cb, seq)
        for i in (0, 10, 41, 78):
            byte, bit = ends[i]
            rest = decode_sequence(cb, stream, len(seq) - 1 - i, byte, bit)
            assert rest == seq[i + 1 :]

    def test_init_past_stream_end(self):
        cb = build_codebook({0: 1, 1: 1})
        stream, _ = encode_sequence(cb, [0, 1])
        with pytest.raises(InvalidPositionError):
            decoder_init(cb, stream, 1, 0)
        dec = decoder_init(cb, stream, 0, 2)  # exactly the end
        assert dec.decode_next() is None

    def test_truncated_mid_code_is_corruption(self):
        cb = build_codebook({0: 1, 1: 1, 2: 2, 3: 4})  # 3-bit codes exist
        stream, _ = encode_sequence(cb, [0])
        ln = cb.lengths[0]
        truncated = BitStream(stream.data, ln - 1)
        with pytest.raises(CorruptStreamError):
            Decoder(cb, truncated).decode_next()

    @given(st.data())
    def test_round_trip(self, data):
        freqs = data.draw(freq_maps)
        cb = build_codebook(freqs)
        seq = data.draw(st.lists(st.sampled_from(sorted(freqs)), max_size=200))
        stream, _ = encode_sequence(cb, seq)
        assert decode_sequence(cb, stream, len(seq)) == seq

    def test_round_trip_large_alphabet(self):
        rng = random.Random(13)
        freqs = {s: rng.randint(1, 1000) for s in range(300)}
        cb = build_codebook(freqs)
        seq = rng.choices(range(300), k=5000)
        stream, _ = encode_sequence(cb, seq)
        assert decode_sequence(cb, stream, len(seq)) == seq

    def test_single_symbol_stream(self):
        cb = build_codebook({4: 9})
        stream, _ = encode_sequence(cb, [4, 4, 4])
        assert decode_sequence(cb, stream, 3) == [4, 4, 4]

    def test_skewed_codebook_slow_path(self):
        # Fibonacci-like weights force code lengths past the lookup table.
        freqs = {i: fib for i, fib in enumerate([1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377])}
        cb = build_codebook(freqs)
        assert cb.max_len > 11
        seq = list(freqs) * 3
        stream, _ = encode_sequence(cb, seq)
        assert decode_sequence(cb, stream, len(seq)) == seq
