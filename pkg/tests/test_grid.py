import math

import numpy as np
import pytest

from beltrami import (
    GridSpec,
    lp_norm,
    make_field,
    read_field,
    trig_field,
    write_field,
    zero_field,
)
from beltrami.operators import to_coeffs


class TestGridSpec:
    def test_defaults(self):
        spec = GridSpec(16)
        assert spec.L == pytest.approx(2 * math.pi)
        assert spec.h == pytest.approx(2 * math.pi / 16)

    @pytest.mark.parametrize("n", [8, 15, 17, 48, 0, -16])
    def test_rejects_bad_sizes(self, n):
        with pytest.raises(ValueError, match="power of two"):
            GridSpec(n)

    @pytest.mark.parametrize("L", [0.0, -1.0])
    def test_rejects_bad_period(self, L):
        with pytest.raises(ValueError, match="period"):
            GridSpec(16, L)


class TestMakeField:
    def test_identity_map(self):
        f = make_field(GridSpec(16), 1.0, 0.0, np.zeros(256))
        assert f.c == 1.0 and f.d == 0.0
        assert np.all(f.values == 0)

    def test_constant_field(self):
        f = make_field(GridSpec(16), 0.0, 0.0, np.full(256, 5.0 + 0j))
        assert f.periodic_mean == pytest.approx(5.0)
        assert np.all(f.values == 5.0)

    def test_composite_field_value_at_origin(self):
        # c*0 + d*0 + P(0) with P = 0.1*exp(2i pi x/L): total at z=0 is 0.1
        spec = GridSpec(16)
        x = (np.arange(16) * spec.h)[None, :] * np.ones((16, 1))
        samples = 0.1 * np.exp(1j * (2 * np.pi / spec.L) * x)
        f = make_field(spec, 1.0, 0.3, samples)
        assert f.total_values()[0, 0] == pytest.approx(0.1)

    def test_sample_count_mismatch(self):
        with pytest.raises(ValueError, match="sample-count mismatch"):
            make_field(GridSpec(16), 0.0, 0.0, np.zeros(255))

    def test_inputs_reproduced_exactly(self):
        rng = np.random.default_rng(0)
        vals = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
        f = make_field(GridSpec(32), 0.25 + 1j, -0.5j, vals)
        assert f.c == 0.25 + 1j and f.d == -0.5j
        assert np.array_equal(f.values, vals)

    def test_values_immutable(self):
        f = zero_field(GridSpec(16))
        with pytest.raises(ValueError):
            f.values[0, 0] = 1.0

    def test_arithmetic(self):
        spec = GridSpec(16)
        f = trig_field(spec, [(1, 0, 1.0)], c=1.0)
        g = trig_field(spec, [(0, 1, 2.0)], d=0.5)
        s = f + g
        assert s.c == 1.0 and s.d == 0.5
        assert np.allclose(s.values, f.values + g.values)
        assert np.allclose((2.0 * f).values, 2.0 * f.values)
        assert np.allclose((f - f).values, 0.0)

    def test_spec_mismatch_arithmetic(self):
        with pytest.raises(ValueError, match="mismatch"):
            zero_field(GridSpec(16)) + zero_field(GridSpec(32))


class TestLpNorm:
    def test_constant(self):
        f = make_field(GridSpec(16), 0.0, 0.0, np.full(256, 2.0 + 0j))
        assert lp_norm(f, 3) == pytest.approx(2.0)

    def test_unimodular_wave(self):
        f = trig_field(GridSpec(32), [(1, 0, 1.0)])
        assert lp_norm(f, 2) == pytest.approx(1.0)

    def test_sine_closed_form(self):
        # mean of sin^2 over a period is 1/2
        spec = GridSpec(32)
        x = (np.arange(32) * spec.h)[None, :] * np.ones((32, 1))
        f = make_field(spec, 0.0, 0.0, np.sin(2 * np.pi * x / spec.L))
        assert lp_norm(f, 2) == pytest.approx(1 / math.sqrt(2), rel=1e-12)

    def test_rejects_small_p(self):
        with pytest.raises(ValueError, match="p must be"):
            lp_norm(zero_field(GridSpec(16)), 0.5)

    def test_periodic_only_excludes_affine(self):
        f = make_field(GridSpec(16), 1.0, 0.0, np.zeros(256))
        assert lp_norm(f, 2, periodic_only=True) == 0.0
        assert lp_norm(f, 2) > 0.0

    def test_parseval(self):
        # sample-space l2 equals coefficient-space l2
        for seed in range(5):
            f = trig_field(GridSpec(64), [(1, 2, 0.5), (3, -1, 0.2j), (0, 0, 1.1)])
            rng = np.random.default_rng(seed)
            f = make_field(f.spec, 0, 0, f.values + 0.1 * rng.normal(size=(64, 64)))
            sc = to_coeffs(f)
            spectral = math.sqrt(np.sum(np.abs(sc.coeffs) ** 2))
            assert lp_norm(f, 2, periodic_only=True) == pytest.approx(spectral, rel=1e-10)


class TestFieldFiles:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        vals = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
        f = make_field(GridSpec(16, 3.5), 0.1 - 2j, 0.25j, vals)
        path = tmp_path / "f.bfld"
        write_field(f, path)
        g = read_field(path)
        assert g.spec == f.spec
        assert g.c == f.c and g.d == f.d
        assert np.array_equal(g.values, f.values)

    def test_round_trip_bytes_stable(self, tmp_path):
        f = trig_field(GridSpec(16), [(1, 1, 0.3 + 0.7j)], c=1 / 3)
        p1, p2 = tmp_path / "a.bfld", tmp_path / "b.bfld"
        write_field(f, p1)
        write_field(read_field(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_round_trip_extreme_magnitudes(self, tmp_path):
        vals = np.zeros((16, 16), dtype=complex)
        vals[0, 0] = 1e-308 + 1e308j
        vals[3, 5] = -2.2250738585072014e-308
        vals[7, 7] = 0.1 + 1 / 3 * 1j
        f = make_field(GridSpec(16), 1e-300, 1e300j, vals)
        path = tmp_path / "x.bfld"
        write_field(f, path)
        g = read_field(path)
        assert g.c == f.c and g.d == f.d
        assert np.array_equal(g.values, f.values)

    def test_identity_map_encoding(self, tmp_path):
        path = tmp_path / "id.bfld"
        lines = ["BFLD1 16 16 6.283185307179586 1 0 0 0"] + ["0 0"] * 256
        path.write_text("\n".join(lines) + "\n")
        f = read_field(path)
        assert f.c == 1.0 and f.d == 0.0 and f.spec.n == 16
        assert np.all(f.values == 0)

    def test_sample_count_mismatch(self, tmp_path):
        path = tmp_path / "short.bfld"
        lines = ["BFLD1 16 16 6.283185307179586 1 0 0 0"] + ["0 0"] * 255
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError, match="sample-count mismatch"):
            read_field(path)

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "bad.bfld"
        path.write_text("BFLD2 16 16 1 0 0 0 0\n")
        with pytest.raises(ValueError, match="malformed header"):
            read_field(path)

    def test_non_finite_values(self, tmp_path):
        path = tmp_path / "nan.bfld"
        lines = ["BFLD1 16 16 6.283185307179586 0 0 0 0"] + ["0 0"] * 255 + ["nan 0"]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError, match="non-finite"):
            read_field(path)
