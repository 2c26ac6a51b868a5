import math

import numpy as np
import pytest

from randprobe import (
    BitCursor,
    BitString,
    Exhausted,
    FormatError,
    TooShort,
    complement,
    draw_witness,
    generate,
    load_bitfile,
    read_chunk,
    split_into_samples,
    write_bitfile,
)
from randprobe.generators import SourceSpec


def bs(text, origin=""):
    return BitString.from_text01(text, origin)


class TestBitString:
    def test_round_trip_text(self):
        assert bs("10100101").to_text01() == "10100101"
        assert bs("").to_text01() == ""

    def test_pad_bits_are_canonical(self):
        # same 3 bits from differently padded raw bytes compare equal
        assert BitString(b"\xa0", 3) == BitString(b"\xbf", 3)

    def test_equality_ignores_origin(self):
        assert bs("101", "a") == bs("101", "b")
        assert bs("101") != bs("1010")

    def test_bit_indexing(self):
        x = bs("0110")
        assert [x.bit(i) for i in range(4)] == [0, 1, 1, 0]
        with pytest.raises(IndexError):
            x.bit(4)

    def test_read_uint_matches_bits(self):
        x = generate(SourceSpec("pcg32", seed=3), 256)
        text = x.to_text01()
        for pos, width in [(0, 8), (3, 13), (250, 6), (7, 1), (0, 256)]:
            assert x.read_uint(pos, width) == int(text[pos:pos + width], 2)

    def test_from_int_rejects_overflow(self):
        with pytest.raises(ValueError):
            BitString.from_int(16, 4)

    def test_unpacked(self):
        assert np.array_equal(bs("10110").unpacked(), np.array([1, 0, 1, 1, 0], dtype=np.uint8))


class TestComplement:
    def test_definition(self):
        assert complement(bs("0110")) == bs("1001")

    def test_empty(self):
        assert complement(bs("")) == bs("")

    def test_involution_restores_bits_and_origin(self):
        x = bs("110100101", origin="src")
        back = complement(complement(x))
        assert back == x
        assert back.origin == "src"
        assert complement(x).origin == "~src"

    def test_length_preserved(self):
        x = generate(SourceSpec("mt19937", seed=9), 1037)
        assert len(complement(x)) == 1037


class TestCursorReads:
    @pytest.mark.parametrize("text,width,expected", [("1010", 4, 10), ("0001", 4, 1)])
    def test_read_chunk_examples(self, text, width, expected):
        assert read_chunk(BitCursor(bs(text)), width) == expected

    def test_read_past_end_without_wrap(self):
        with pytest.raises(Exhausted):
            read_chunk(BitCursor(bs("111")), 4)

    def test_position_advances_by_total(self):
        x = generate(SourceSpec("xoroshiro128plus", seed=4), 4096)
        cur = BitCursor(x)
        widths = [1, 7, 32, 5, 64, 13, 2]
        for w in widths:
            cur.read(w)
        assert cur.position == sum(widths)
        assert cur.bits_read == sum(widths)

    def test_wrap_read_crosses_end(self):
        cur = BitCursor(bs("101"), wrap=True)
        assert cur.read(2) == 0b10
        # next 5 bits wrap: "1" then "101" then "1"
        assert cur.read(5) == 0b11011
        assert cur.bits_read == 7
        assert 0 <= cur.position <= 3

    def test_wrap_width_longer_than_string(self):
        cur = BitCursor(bs("10"), wrap=True)
        assert cur.read(7) == 0b1010101

    def test_wrap_on_empty_string_exhausts(self):
        with pytest.raises(Exhausted):
            BitCursor(bs(""), wrap=True).read(1)


class TestDrawWitness:
    def test_first_chunk_accepted(self):
        d = draw_witness(BitCursor(bs("0010" + "0" * 8)), 15)
        assert (d.value, d.bits_consumed, d.trials) == (2, 4, 1)

    def test_rejects_value_above_range(self):
        # 15 > 14 is rejected, then 3 accepted
        d = draw_witness(BitCursor(bs("11110011")), 15)
        assert (d.value, d.bits_consumed) == (3, 8)

    def test_rejects_zero(self):
        d = draw_witness(BitCursor(bs("00000101")), 15)
        assert (d.value, d.bits_consumed) == (5, 8)

    def test_starvation_exhausts(self):
        with pytest.raises(Exhausted):
            draw_witness(BitCursor(bs("1111" * 6)), 15)

    def test_wrap_starvation_guard(self):
        with pytest.raises(Exhausted):
            draw_witness(BitCursor(bs("1111" * 6), wrap=True), 15)

    def test_invalid_n(self):
        for n in (2, 9 * 2, 1):
            with pytest.raises(ValueError):
                draw_witness(BitCursor(bs("1010")), n)

    def test_uniform_on_random_stream(self):
        # n=13: accepted values must be uniform on [1, 12] within 5 sigma
        n_draws = 120_000
        x = generate(SourceSpec("mt19937", seed=20260824), n_draws * 8)
        cur = BitCursor(x)
        counts = [0] * 13
        for _ in range(n_draws):
            counts[draw_witness(cur, 13).value] += 1
        assert counts[0] == 0
        p = 1 / 12
        sigma = math.sqrt(n_draws * p * (1 - p))
        for v in range(1, 13):
            assert abs(counts[v] - n_draws * p) < 5 * sigma


class TestBitfiles:
    def test_packed_byte(self, tmp_path):
        f = tmp_path / "x.bin"
        f.write_bytes(bytes([0xA5]))
        assert load_bitfile(f, "packed-msb").to_text01() == "10100101"

    def test_packed_declared_length(self, tmp_path):
        f = tmp_path / "x.bin"
        f.write_bytes(bytes([0xA5, 0xFF]))
        assert load_bitfile(f, "packed-msb", max_bits=11).to_text01() == "10100101111"

    def test_ascii_skips_whitespace(self, tmp_path):
        f = tmp_path / "x.txt"
        f.write_text("01 10\n")
        assert load_bitfile(f, "ascii01").to_text01() == "0110"

    def test_ascii_rejects_garbage(self, tmp_path):
        f = tmp_path / "x.txt"
        f.write_text("01x")
        with pytest.raises(FormatError):
            load_bitfile(f, "ascii01")

    def test_unknown_format(self, tmp_path):
        with pytest.raises(FormatError):
            load_bitfile(tmp_path / "x", "utf8")

    def test_missing_file_is_io_error(self, tmp_path):
        with pytest.raises(OSError):
            load_bitfile(tmp_path / "nope.bin", "packed-msb")

    @pytest.mark.parametrize("fmt", ["packed-msb", "ascii01"])
    def test_write_read_round_trip(self, tmp_path, fmt):
        x = generate(SourceSpec("philox4x32", seed=5), 4096)
        f = tmp_path / "bits"
        write_bitfile(x, f, fmt)
        assert load_bitfile(f, fmt, max_bits=4096) == x


class TestSplit:
    def test_partition(self):
        halves = split_into_samples(bs("10100101"), 2, 4)
        assert [h.to_text01() for h in halves] == ["1010", "0101"]

    def test_identity(self):
        x = bs("110011")
        assert split_into_samples(x, 1, 6) == [x]

    def test_too_short(self):
        with pytest.raises(TooShort):
            split_into_samples(bs("10100101"), 3, 4)

    def test_unaligned_pieces(self):
        x = bs("110100101011001")
        pieces = split_into_samples(x, 3, 5)
        assert [p.to_text01() for p in pieces] == ["11010", "01010", "11001"]

    def test_complement_commutes_with_split(self):
        x = generate(SourceSpec("pcg32", seed=77), 1024 * 3)
        a = [complement(p) for p in split_into_samples(x, 3, 1024)]
        b = split_into_samples(complement(x), 3, 1024)
        assert a == b
