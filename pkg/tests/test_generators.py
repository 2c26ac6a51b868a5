import math

import numpy as np
import pytest

from randprobe import FormatError, TooShort, generate, parse_source_spec, pi_bits
from randprobe.generators import (
    MT19937,
    Pcg32,
    Philox4x32,
    SourceSpec,
    SplitMix64,
    Xoroshiro128Plus,
    _splitmix64_block,
)

from oracles import (
    ref_mt19937_stream,
    ref_pcg32_stream,
    ref_philox4x32_block,
    ref_pi_bbp_fixed,
    ref_splitmix64_stream,
    ref_xoroshiro128plus_stream,
)


class TestSourceSpecValidation:
    def test_prng_needs_seed(self):
        with pytest.raises(FormatError):
            SourceSpec("mt19937").validate()

    def test_pi_refuses_seed(self):
        with pytest.raises(FormatError):
            SourceSpec("pi", seed=1).validate()

    def test_bias_only_for_bernoulli(self):
        with pytest.raises(FormatError):
            SourceSpec("pcg32", seed=1, bias=0.5).validate()

    def test_bias_range(self):
        with pytest.raises(FormatError):
            SourceSpec("bernoulli", seed=1, bias=1.5).validate()

    def test_file_needs_path_and_format(self):
        with pytest.raises(FormatError):
            SourceSpec("file", path="x.bin").validate()

    def test_unknown_family(self):
        with pytest.raises(FormatError):
            SourceSpec("lcg").validate()

    def test_parse_spec_strings(self):
        spec = parse_source_spec("bernoulli:bias=0.4,seed=7")
        assert (spec.family, spec.bias, spec.seed) == ("bernoulli", 0.4, 7)
        spec = parse_source_spec("pi")
        assert spec.family == "pi"
        with pytest.raises(FormatError):
            parse_source_spec("mt19937:seed")
        with pytest.raises(FormatError):
            parse_source_spec("mt19937:speed=1")


class TestKnownVectors:
    """Published values for the exact core recurrences."""

    def test_mt19937_seed_5489(self):
        gen = MT19937(5489)
        assert [gen.next_word() for _ in range(5)] == [
            3499211612, 581869302, 3890346734, 3586334585, 545404204]

    def test_pcg32_demo_stream(self):
        gen = Pcg32.from_stream(42, 54)
        assert [gen.next_word() for _ in range(6)] == [
            0xA15C02B7, 0x7B47F409, 0xBA1D3330, 0x83D2F293, 0xBFA4784B, 0xCBED606E]

    def test_philox_zero_key_zero_counter(self):
        gen = Philox4x32.from_key(0, 0)
        assert [gen.next_word() for _ in range(4)] == [
            0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8]

    def test_splitmix64_seed_zero(self):
        gen = SplitMix64(0)
        assert [gen.next_word() for _ in range(3)] == [
            0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


class TestAgainstNaiveTranscriptions:
    """First 1024 bits of each family equal an independent reference."""

    def test_mt19937(self):
        words = ref_mt19937_stream(123, 32)
        expect = b"".join(w.to_bytes(4, "big") for w in words)
        assert generate(SourceSpec("mt19937", seed=123), 1024).data == expect

    def test_xoroshiro128plus(self):
        s0, s1 = ref_splitmix64_stream(99, 2)
        words = ref_xoroshiro128plus_stream(s0, s1, 16)
        expect = b"".join(w.to_bytes(8, "big") for w in words)
        assert generate(SourceSpec("xoroshiro128plus", seed=99), 1024).data == expect

    def test_pcg32(self):
        initstate, initseq = ref_splitmix64_stream(7, 2)
        words = ref_pcg32_stream(initstate, initseq, 32)
        expect = b"".join(w.to_bytes(4, "big") for w in words)
        assert generate(SourceSpec("pcg32", seed=7), 1024).data == expect

    def test_philox4x32(self):
        key = ref_splitmix64_stream(2024, 1)[0]
        k0, k1 = key & 0xFFFFFFFF, key >> 32
        words = []
        for block in range(8):
            words += ref_philox4x32_block((block, 0, 0, 0), (k0, k1))
        expect = b"".join(w.to_bytes(4, "big") for w in words)
        assert generate(SourceSpec("philox4x32", seed=2024), 1024).data == expect

    def test_splitmix_block_matches_scalar(self):
        gen = SplitMix64(42)
        scalar = [gen.next_word() for _ in range(100)]
        block = _splitmix64_block(42, 0, 100)
        assert block.tolist() == scalar
        offset = _splitmix64_block(42, 60, 40)
        assert offset.tolist() == scalar[60:]


class TestGenerateContract:
    @pytest.mark.parametrize("family", ["mt19937", "xoroshiro128plus", "pcg32", "philox4x32"])
    def test_prefix_consistency(self, family):
        spec = SourceSpec(family, seed=5)
        long = generate(spec, 3000)
        short = generate(spec, 1111)
        assert long.read_uint(0, 1111) == short.read_uint(0, 1111)

    def test_determinism(self):
        spec = SourceSpec("xoroshiro128plus", seed=31337)
        assert generate(spec, 10**6) == generate(spec, 10**6)

    def test_origin_defaults_to_family(self):
        assert generate(SourceSpec("pcg32", seed=1), 64).origin == "pcg32"
        assert generate(SourceSpec("pcg32", seed=1), 64, origin="lab").origin == "lab"

    def test_n_bits_must_be_positive(self):
        with pytest.raises(ValueError):
            generate(SourceSpec("pcg32", seed=1), 0)


class TestBernoulli:
    def test_degenerate_biases(self):
        zeros = generate(SourceSpec("bernoulli", seed=3, bias=0.0), 999)
        ones = generate(SourceSpec("bernoulli", seed=3, bias=1.0), 999)
        assert zeros.unpacked().sum() == 0
        assert ones.unpacked().sum() == 999

    def test_ones_fraction_tracks_bias(self):
        n = 1 << 20
        for bias in (0.25, 0.4, 0.5):
            x = generate(SourceSpec("bernoulli", seed=11, bias=bias), n)
            frac = x.unpacked().mean()
            assert abs(frac - bias) < 5 * math.sqrt(bias * (1 - bias) / n)

    def test_prefix_consistency(self):
        spec = SourceSpec("bernoulli", seed=8, bias=0.4)
        long = generate(spec, 2_000_000)
        short = generate(spec, 700_001)
        assert long.read_uint(0, 700_001) == short.read_uint(0, 700_001)

    def test_seed_changes_stream(self):
        a = generate(SourceSpec("bernoulli", seed=1, bias=0.5), 4096)
        b = generate(SourceSpec("bernoulli", seed=2, bias=0.5), 4096)
        assert a != b


class TestFileSource:
    def test_round_trip(self, tmp_path):
        raw = tmp_path / "raw.bin"
        raw.write_bytes(bytes(range(256)))
        spec = SourceSpec("file", path=str(raw), format="packed-msb")
        x = generate(spec, 2048)
        assert x.data == bytes(range(256))

    def test_short_file_errors(self, tmp_path):
        raw = tmp_path / "raw.bin"
        raw.write_bytes(b"\x01\x02")
        spec = SourceSpec("file", path=str(raw), format="packed-msb")
        with pytest.raises(TooShort):
            generate(spec, 64)


class TestPiBits:
    # binary fraction of pi - 3 starts 0010 0100 0011 1111 0110 1010 1000 1000
    HEX128 = "243F6A8885A308D313198A2E03707344"

    def test_first_8_bits(self):
        assert pi_bits(8).to_text01() == "00100100"

    def test_first_32_bits(self):
        assert pi_bits(32).read_uint(0, 32) == 0x243F6A88

    def test_first_128_bits(self):
        assert pi_bits(128).read_uint(0, 128) == int(self.HEX128, 16)

    def test_single_bit(self):
        assert pi_bits(1).to_text01() == "0"

    def test_against_bbp_series(self):
        n = 512
        fixed = ref_pi_bbp_fixed(n)           # floor(pi * 2^n), independent series
        expect = fixed - (3 << n)             # fractional part
        assert pi_bits(n).read_uint(0, n) == expect

    @pytest.mark.parametrize("k", [1, 7, 63, 64, 500])
    def test_prefix_property(self, k):
        longer = pi_bits(k + 1)
        assert longer.read_uint(0, k) == pi_bits(k).read_uint(0, k)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            pi_bits(0)
