import random

import pytest
from hypothesis import given, settings, strategies as st

from sparsecube.diffseq import (
    DhcHeader,
    DscHeader,
    build_dhc,
    build_difference_sequence,
    build_dsc,
    lookup_dhc,
    lookup_dsc,
    pack_diffs,
    rebuild_accelerators,
    unpack_diffs,
)
from sparsecube.errors import CorruptStreamError, FormatError
from sparsecube.headers import build_boc, build_lpc
from sparsecube.errors import OffsetOverflowError


def reconstruct(diffs, jumps):
    """Literal application of the recursive rebuild rule (independent oracle):
    positive diffs extend the previous position, zeros fetch the smallest jump
    greater than it."""
    out = []
    for j, d in enumerate(diffs):
        if d > 0:
            out.append(out[-1] + d)
        else:
            prev = out[-1] if out else -1
            out.append(min(x for x in jumps if x > prev))
    return out


def random_increasing(rng, n, max_gap):
    cur = rng.randint(0, 5)
    out = [cur]
    for _ in range(n - 1):
        cur += rng.randint(1, max_gap)
        out.append(cur)
    return out


position_lists = st.lists(
    st.integers(0, 100_000), min_size=1, max_size=120, unique=True
).map(sorted)


class TestDifferenceSequence:
    def test_small_gaps_single_jump(self):
        diffs, jumps, accel = build_difference_sequence([5, 6, 7], 8)
        assert diffs == [0, 1, 1]
        assert jumps == [5]
        assert accel == [0]

    def test_overflow_forces_jump(self):
        # 300 - 0 = 300 > 255, so the second element becomes a jump.
        diffs, jumps, accel = build_difference_sequence([0, 300, 301], 8)
        assert diffs == [0, 0, 1]
        assert jumps == [0, 300]
        assert accel == [0, 1]

    def test_zero_jump_correspondence_pattern(self):
        # Layout engineered so diffs 0, 3 and 5 are zeros: the fourth position
        # equals the second jump, and the fifth extends it by its gap.
        positions = [10, 11, 12, 400, 401, 900, 901, 902, 903]
        diffs, jumps, accel = build_difference_sequence(positions, 8)
        zero_at = [i for i, d in enumerate(diffs) if d == 0]
        assert zero_at == [0, 3, 5]
        assert len(jumps) == 3
        assert positions[3] == jumps[1]
        assert positions[4] == jumps[1] + diffs[4]

    def test_zero_jump_bijection(self):
        rng = random.Random(3)
        for _ in range(50):
            positions = random_increasing(rng, rng.randint(1, 80), 700)
            diffs, jumps, _ = build_difference_sequence(positions, 8)
            assert sum(1 for d in diffs if d == 0) == len(jumps)
            assert jumps[0] == positions[0]
            assert all(a < b for a, b in zip(jumps, jumps[1:]))

    @pytest.mark.parametrize("bits", [4, 8, 12, 16])
    def test_reconstruction_exact(self, bits):
        rng = random.Random(bits)
        for _ in range(200):
            positions = random_increasing(rng, rng.randint(1, 100), 2 ** (bits + 2))
            diffs, jumps, _ = build_difference_sequence(positions, bits)
            assert reconstruct(diffs, jumps) == positions

    @given(position_lists, st.sampled_from([4, 8, 12, 16]))
    def test_reconstruction_property(self, positions, bits):
        diffs, jumps, accel = build_difference_sequence(positions, bits)
        assert reconstruct(diffs, jumps) == positions
        assert [positions[a] for a in accel] == jumps

    def test_rejects_bad_width(self):
        with pytest.raises(ValueError):
            build_difference_sequence([1, 2], 0)
        with pytest.raises(ValueError):
            build_difference_sequence([1, 2], 33)


class TestPacking:
    @pytest.mark.parametrize("bits", [1, 4, 7, 8, 12, 16, 24, 32])
    def test_pack_unpack(self, bits):
        rng = random.Random(bits)
        values = [rng.randrange(1 << bits) for _ in range(257)]
        data = pack_diffs(values, bits)
        assert len(data) == (bits * len(values) + 7) // 8
        assert unpack_diffs(data, bits, len(values)) == values


def theorem_block_len(positions, offset_width, cap=64):
    """Largest block length (searched downward) the offsets still fit."""
    for block_len in range(cap, 0, -1):
        try:
            return build_boc(positions, block_len=block_len, offset_width=offset_width)
        except OffsetOverflowError:
            continue
    raise AssertionError("block length 1 must always fit")


class TestJumpsVsBase:
    @pytest.mark.parametrize("offset_width,bits", [(1, 8), (2, 16)])
    def test_never_more_jumps_than_bases(self, offset_width, bits):
        rng = random.Random(offset_width)
        for _ in range(100):
            positions = random_increasing(
                rng, rng.randint(1, 90), rng.choice([10, 200, 5000, 80_000])
            )
            _, jumps, _ = build_difference_sequence(positions, bits)
            boc = theorem_block_len(positions, offset_width)
            assert len(jumps) <= len(boc.bases)


def oracle_lookup(positions, query):
    h = build_lpc(positions)
    return h.lookup(query)


class TestDsc:
    def test_basic_lookups(self):
        h = build_dsc([5, 6, 7], diff_bits=8)
        assert lookup_dsc(h, 6) == 1  # linear-scan oracle over the positions
        assert lookup_dsc(h, 8) is None
        assert lookup_dsc(h, 4) is None

    def test_jumps_are_exact_hits(self):
        positions = [0, 300, 301, 900, 905]
        h = build_dsc(positions, diff_bits=8, stride=1)
        for k, j in enumerate(h.jumps):
            assert lookup_dsc(h, j) == h.accel[k]

    def test_single_cell(self):
        h = build_dsc([42], diff_bits=8)
        assert h.jumps == [42]
        assert unpack_diffs(h.diff_data, 8, 1) == [0]
        assert lookup_dsc(h, 42) == 0
        assert lookup_dsc(h, 41) is None
        assert lookup_dsc(h, 43) is None

    def test_size_formula(self):
        for positions, bits in (([5, 6, 7], 8), ([0, 300, 301], 8), ([1, 2], 16)):
            h = build_dsc(positions, diff_bits=bits)
            n = len(positions)
            assert h.size_bytes() == (bits * n + 7) // 8 + 8 * len(h.jumps)

    def test_full_domain_vs_oracle(self):
        rng = random.Random(9)
        for bits in (4, 8):
            positions = random_increasing(rng, 60, 2 ** (bits + 1))
            h = build_dsc(positions, diff_bits=bits, stride=4)
            for q in range(positions[-1] + 3):
                assert lookup_dsc(h, q) == oracle_lookup(positions, q)

    def test_sampled_domain_vs_oracle_wide_diffs(self):
        rng = random.Random(10)
        positions = random_increasing(rng, 60, 2**17)
        h = build_dsc(positions, diff_bits=16, stride=4)
        queries = positions + [rng.randrange(positions[-1] + 2) for _ in range(2000)]
        for q in queries:
            assert lookup_dsc(h, q) == oracle_lookup(positions, q)

    def test_serialization_and_rebuild(self):
        rng = random.Random(21)
        positions = random_increasing(rng, 200, 600)
        h = build_dsc(positions, diff_bits=8, stride=4)
        again = DscHeader.from_bytes(h.to_bytes())
        assert again.accel == h.accel
        assert again.to_bytes() == h.to_bytes()
        for q in rng.sample(range(positions[-1] + 2), 100):
            assert again.lookup(q) == h.lookup(q)

    def test_corrupt_data_detected(self):
        h = build_dsc([0, 300, 301], diff_bits=8)
        with pytest.raises(CorruptStreamError):
            DscHeader.from_bytes(h.to_bytes()[:-1])

    def test_positions_round_trip(self):
        rng = random.Random(2)
        positions = random_increasing(rng, 150, 500)
        assert build_dsc(positions, diff_bits=8).positions() == positions


class TestDhc:
    def test_frequent_gap_gets_shortest_code(self):
        # Clustered positions: gap 1 dominates, so its code is minimal.
        positions = list(range(100, 150)) + list(range(300, 340)) + [1000, 1003]
        h = build_dhc(positions, diff_bits=8)
        shortest = min(h.codebook.lengths.values())
        assert h.codebook.lengths[1] == shortest

    def test_dense_run_beats_dsc(self):
        positions = list(range(1000))
        dhc = build_dhc(positions, diff_bits=16)
        dsc = build_dsc(positions, diff_bits=16)
        assert dhc.stream.bit_length == 999  # one 1-bit code per gap
        assert dhc.size_bytes() < dsc.size_bytes()

    def test_single_cell(self):
        h = build_dhc([7], diff_bits=8)
        assert h.jumps == [7]
        assert h.stream.bit_length == 0
        assert h.codebook is None
        assert lookup_dhc(h, 7) == 0
        assert lookup_dhc(h, 8) is None

    def test_lookup_matches_oracle(self):
        rng = random.Random(31)
        positions = random_increasing(rng, 80, 600)
        h = build_dhc(positions, diff_bits=8, stride=4)
        for q in range(positions[-1] + 3):
            assert lookup_dhc(h, q) == oracle_lookup(positions, q)

    def test_query_below_first_jump(self):
        h = build_dhc([50, 51], diff_bits=8)
        assert lookup_dhc(h, 10) is None

    def test_serialization_and_rebuild(self):
        rng = random.Random(8)
        positions = random_increasing(rng, 300, 700)
        h = build_dhc(positions, diff_bits=8, stride=8)
        again = DhcHeader.from_bytes(h.to_bytes())
        assert again.accel == h.accel
        assert again.byte_pos == h.byte_pos
        assert again.bit_pos == h.bit_pos
        assert again.to_bytes() == h.to_bytes()
        for q in rng.sample(range(positions[-1] + 2), 150):
            assert again.lookup(q) == h.lookup(q)

    def test_rebuild_accelerators_dispatcher(self):
        rng = random.Random(14)
        positions = random_increasing(rng, 120, 900)
        dsc = build_dsc(positions, diff_bits=8, stride=4)
        want = list(dsc.accel)
        dsc.accel = []
        assert rebuild_accelerators(dsc) == want

        dhc = build_dhc(positions, diff_bits=8, stride=4)
        want = (list(dhc.accel), list(dhc.byte_pos), list(dhc.bit_pos))
        dhc.accel, dhc.byte_pos, dhc.bit_pos = [], [], []
        assert rebuild_accelerators(dhc) == want

    def test_corrupt_stream_detected(self):
        rng = random.Random(4)
        positions = random_increasing(rng, 50, 600)
        h = build_dhc(positions, diff_bits=8)
        raw = bytearray(h.to_bytes())
        raw = raw[: len(raw) - len(h.stream.data) // 2]  # drop half the stream
        with pytest.raises((CorruptStreamError, FormatError)):
            DhcHeader.from_bytes(bytes(raw))

    def test_positions_round_trip(self):
        rng = random.Random(19)
        positions = random_increasing(rng, 150, 900)
        assert build_dhc(positions, diff_bits=8).positions() == positions


class TestStrideTransparency:
    @given(position_lists)
    @settings(max_examples=30)
    def test_lookups_identical_across_strides(self, positions):
        rng = random.Random(len(positions))
        queries = [rng.randrange(positions[-1] + 2) for _ in range(40)] + positions[:10]
        want = [oracle_lookup(positions, q) for q in queries]
        for stride in (1, 4, 16, 64):
            dsc = build_dsc(positions, diff_bits=8, stride=stride)
            dhc = build_dhc(positions, diff_bits=8, stride=stride)
            assert [lookup_dsc(dsc, q) for q in queries] == want
            assert [lookup_dhc(dhc, q) for q in queries] == want
