import math
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import logistic
from rugos.core import PointCloud, RoughnessField
from rugos.exceptions import (
    EmptySet,
    MalformedHeader,
    MissingSplatProperty,
    MissingVertexElement,
    PlyError,
    NonNumericRow,
    RaggedRow,
    TooFewColumns,
    TruncatedBody,
    UnsupportedFormat,
)
from rugos.io import (
    ASCII,
    BINARY_LITTLE_ENDIAN,
    CentersAll,
    DensitySampled,
    GaussianSplatSet,
    OpacityThreshold,
    is_splat_ply,
    load_cloud,
    load_ply,
    load_xyz,
    parse_splat_ply,
    save_ply,
    save_xyz,
    splats_to_cloud,
    write_splat_ply,
)
from rugos.io.splat import retained_mask, sh_dc_to_rgb8
from rugos.roughness import attach_fields

THREE = [[0.0, 0.0, 0.0], [1.5, -2.25, 3.0], [1e-3, 2e5, -7.125]]

ASCII_PLY = """ply
format ascii 1.0
comment made by hand
element vertex 3
property float x
property float y
property float z
end_header
0 0 0
1.5 -2.25 3
0.001 200000 -7.125
"""


def test_ascii_three_vertices(tmp_path):
    p = tmp_path / "a.ply"
    p.write_text(ASCII_PLY)
    c = load_ply(p)
    np.testing.assert_array_equal(c.points, np.float32(THREE).astype(np.float64))
    assert c.comments == ("made by hand",)


def test_binary_matches_ascii(tmp_path):
    cloud = PointCloud(THREE, colors=[[1, 2, 3], [4, 5, 6], [7, 8, 9]],
                       normals=[[0, 0, 1]] * 3, scalar_fields={"roughness_r0_2": [0.1, np.nan, 0.3]})
    save_ply(cloud, tmp_path / "a.ply", ASCII)
    save_ply(cloud, tmp_path / "b.ply", BINARY_LITTLE_ENDIAN)
    a = load_ply(tmp_path / "a.ply")
    b = load_ply(tmp_path / "b.ply")
    for attr in ("points", "colors", "normals"):
        np.testing.assert_array_equal(getattr(a, attr), getattr(b, attr))
    np.testing.assert_array_equal(a.scalar_fields["roughness_r0_2"], b.scalar_fields["roughness_r0_2"])
    np.testing.assert_array_equal(a.points, cloud.points)


def test_extra_float_property_becomes_field(tmp_path):
    text = ASCII_PLY.replace("property float z\n", "property float z\nproperty float roughness_r0_2\n")
    text = text.replace("0 0 0\n", "0 0 0 0.5\n").replace("3\n0.001", "3 nan\n0.001")
    text = text.replace("-7.125\n", "-7.125 0.25\n")
    p = tmp_path / "a.ply"
    p.write_text(text)
    c = load_ply(p)
    f = c.scalar_fields["roughness_r0_2"]
    assert f[0] == 0.5 and math.isnan(f[1]) and f[2] == 0.25


def test_binary_round_trip_bit_identical(tmp_path, rng):
    P = rng.normal(size=(1000, 3)) * 1e3
    save_ply(PointCloud(P), tmp_path / "a.ply")
    assert load_ply(tmp_path / "a.ply").points.tobytes() == P.tobytes()


def test_ascii_round_trip_exact(tmp_path, rng):
    P = rng.normal(size=(200, 3))
    save_ply(PointCloud(P), tmp_path / "a.ply", ASCII)
    np.testing.assert_array_equal(load_ply(tmp_path / "a.ply").points, P)


def test_field_property_name(tmp_path):
    f = RoughnessField(0.2, [0.1, 0.2, np.nan])
    save_ply(attach_fields(PointCloud(THREE), [f]), tmp_path / "a.ply", ASCII)
    text = (tmp_path / "a.ply").read_text()
    assert "property float roughness_r0_2" in text


def test_million_point_defined_count(tmp_path, rng):
    n = 1_000_000
    v = rng.uniform(size=n)
    v[rng.uniform(size=n) < 0.1] = np.nan
    fields = [RoughnessField(0.2, v), RoughnessField(0.6, np.where(v < 0.5, np.nan, v))]
    cloud = attach_fields(PointCloud(rng.uniform(size=(n, 3))), fields)
    save_ply(cloud, tmp_path / "big.ply")
    back = load_ply(tmp_path / "big.ply")
    for f in fields:
        got = back.scalar_fields[f.name]
        assert np.count_nonzero(~np.isnan(got)) == f.defined_count


def test_skips_preceding_element(tmp_path):
    text = ASCII_PLY.replace(
        "element vertex 3",
        "element camera 1\nproperty float fx\nelement vertex 3",
    ).replace("end_header\n", "end_header\n500\n")
    p = tmp_path / "a.ply"
    p.write_text(text)
    assert len(load_ply(p)) == 3


def test_faces_after_vertices_ignored(tmp_path):
    text = ASCII_PLY.replace(
        "end_header", "element face 1\nproperty list uchar int vertex_indices\nend_header"
    ) + "3 0 1 2\n"
    p = tmp_path / "a.ply"
    p.write_text(text)
    assert len(load_ply(p)) == 3


@pytest.mark.parametrize(
    "text, exc",
    [
        ("plx\n", MalformedHeader),
        ("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n", MalformedHeader),
        ("ply\nformat binary_big_endian 1.0\nend_header\n", UnsupportedFormat),
        ("ply\nformat ascii 1.0\nelement vertex 1\nproperty quad x\nend_header\n", MalformedHeader),
        ("ply\nformat ascii 1.0\nelement face 0\nproperty float a\nend_header\n", MissingVertexElement),
        (ASCII_PLY.rsplit("0.001", 1)[0], TruncatedBody),
    ],
)
def test_ply_errors(tmp_path, text, exc):
    p = tmp_path / "bad.ply"
    p.write_text(text)
    with pytest.raises(exc):
        load_ply(p)


def test_binary_truncated(tmp_path, rng):
    save_ply(PointCloud(rng.normal(size=(10, 3))), tmp_path / "a.ply")
    data = (tmp_path / "a.ply").read_bytes()
    (tmp_path / "b.ply").write_bytes(data[:-5])
    with pytest.raises(TruncatedBody):
        load_ply(tmp_path / "b.ply")


# -- xyz --------------------------------------------------------------------


def test_xyz_basic(tmp_path):
    p = tmp_path / "a.xyz"
    p.write_text("0 0 0\n1 1 1")
    assert len(load_xyz(p)) == 2


def test_xyz_extra_column(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("0,0,0,0.5")
    c = load_xyz(p)
    assert len(c) == 1 and c.scalar_fields["col4"].tolist() == [0.5]


def test_xyz_errors(tmp_path):
    p = tmp_path / "a.xyz"
    p.write_text("a b c\n")
    with pytest.raises(NonNumericRow) as e:
        load_xyz(p)
    assert e.value.line == 1
    p.write_text("# c\n0 0 0\n1 1\n")
    with pytest.raises(TooFewColumns) as e:
        load_xyz(p)
    assert e.value.line == 3
    p.write_text("0 0 0\n1 1 1 1\n")
    with pytest.raises(RaggedRow):
        load_xyz(p)


def test_xyz_round_trip(tmp_path, rng):
    c = PointCloud(rng.normal(size=(50, 3)), scalar_fields={"col4": rng.uniform(size=50)})
    save_xyz(c, tmp_path / "a.xyz")
    back = load_cloud(tmp_path / "a.xyz")
    np.testing.assert_array_equal(back.points, c.points)
    np.testing.assert_array_equal(back.scalar_fields["col4"], c.scalar_fields["col4"])


# -- splats -----------------------------------------------------------------


def make_splats(logits, rest=None, rng=None):
    rng = rng or np.random.default_rng(0)
    n = len(logits)
    return GaussianSplatSet(
        centers=rng.normal(size=(n, 3)),
        log_scales=np.log(rng.uniform(0.01, 0.05, (n, 3))),
        rotations=rng.normal(size=(n, 4)),
        logit_opacities=np.asarray(logits, dtype=np.float64),
        sh_dc=rng.normal(size=(n, 3)),
        sh_rest=rest,
    )


def test_parse_two_splats_raw(tmp_path):
    write_splat_ply(make_splats([0.0, 2.0]), tmp_path / "s.ply")
    s = parse_splat_ply(tmp_path / "s.ply")
    assert len(s) == 2
    assert s.logit_opacities.tolist() == [0.0, 2.0]
    assert s.sh_rest is None
    assert is_splat_ply(tmp_path / "s.ply")


def test_missing_scale(tmp_path):
    save_ply(PointCloud(THREE), tmp_path / "c.ply")
    with pytest.raises(MissingSplatProperty) as e:
        parse_splat_ply(tmp_path / "c.ply")
    assert e.value.name == "scale_0"
    assert not is_splat_ply(tmp_path / "c.ply")


def test_degree3_rest_columns(tmp_path):
    # degree-3 SH: 16 coefficients per channel, 15 beyond DC, times 3 channels
    rest = np.arange(4 * 45, dtype=np.float64).reshape(4, 45)
    write_splat_ply(make_splats([0, 1, 2, 3], rest=rest), tmp_path / "s.ply")
    header = (tmp_path / "s.ply").read_bytes().split(b"end_header")[0].decode()
    assert header.count("property float f_rest_") == (16 - 1) * 3
    s = parse_splat_ply(tmp_path / "s.ply")
    assert s.sh_rest.shape == (4, 45)
    np.testing.assert_array_equal(s.sh_rest, rest)


def test_threshold_by_hand():
    s = make_splats([-2.0, 0.0, 2.0])
    assert logistic(2.0) == pytest.approx(0.8808, abs=1e-4)
    out = splats_to_cloud(s, OpacityThreshold(0.6))
    assert len(out) == 1
    np.testing.assert_array_equal(out.points, s.centers[2:])


def test_logit_zero_kept_at_half():
    s = make_splats([0.0])
    assert len(splats_to_cloud(s, OpacityThreshold(0.5))) == 1


def test_centers_all():
    s = make_splats(np.linspace(-5, 5, 11))
    out = splats_to_cloud(s, CentersAll())
    np.testing.assert_array_equal(out.points, s.centers)
    np.testing.assert_array_equal(out.colors, sh_dc_to_rgb8(s.sh_dc))


def test_empty_set():
    with pytest.raises(EmptySet):
        splats_to_cloud(make_splats([]), CentersAll())


def test_sh_dc_colors():
    assert sh_dc_to_rgb8([[0, 0, 0]]).tolist() == [[128, 128, 128]]
    assert sh_dc_to_rgb8([[-10, 10, 0.5 / 0.28209479177387814]]).tolist() == [[0, 255, 255]]


def test_density_sampled_deterministic():
    s = make_splats([1.0, 2.0, -3.0, 0.5])
    a = splats_to_cloud(s, DensitySampled(20, seed=7))
    b = splats_to_cloud(s, DensitySampled(20, seed=7))
    c = splats_to_cloud(s, DensitySampled(20, seed=8))
    np.testing.assert_array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)
    assert any("seed 7" in x for x in a.comments)
    # retained only: tau drops the negative logit splat
    d = splats_to_cloud(s, DensitySampled(20, seed=7, tau=0.5))
    assert len(d) < len(a)


def test_density_sampled_counts_follow_scale():
    s = GaussianSplatSet(
        centers=np.zeros((3, 3)),
        log_scales=np.log([[0.1] * 3, [0.2] * 3, [0.4] * 3]),
        rotations=np.tile([1.0, 0, 0, 0], (3, 1)),
        logit_opacities=np.zeros(3),
        sh_dc=np.zeros((3, 3)),
    )
    out = splats_to_cloud(s, DensitySampled(10, seed=1))
    assert len(out) == 5 + 10 + 20


logit_lists = st.lists(st.floats(-20, 20, allow_nan=False), min_size=1, max_size=60)


@settings(max_examples=100, deadline=None)
@given(logit_lists, st.floats(0, 1), st.floats(0, 1))
def test_retention_monotone_in_tau(logits, t1, t2):
    lo, hi = sorted((t1, t2))
    s = make_splats(logits)
    a = retained_mask(s, lo)
    b = retained_mask(s, hi)
    assert np.all(a | ~b)  # everything kept at hi is kept at lo
    assert len(splats_to_cloud(s, OpacityThreshold(hi))) <= len(splats_to_cloud(s, OpacityThreshold(lo)))


@settings(max_examples=100, deadline=None)
@given(logit_lists)
def test_half_threshold_is_sign_of_logit(logits):
    s = make_splats(logits)
    assert np.array_equal(retained_mask(s, 0.5), np.asarray(logits) >= 0)


def _corpus():
    """Valid files in both encodings, mutated by the fuzz test below."""
    cloud = PointCloud(THREE, colors=[[1, 2, 3]] * 3, scalar_fields={"f": [1.0, 2.0, 3.0]},
                       comments=("c",))
    out = [ASCII_PLY.encode()]
    with tempfile.TemporaryDirectory() as d:
        for fmt in (ASCII, BINARY_LITTLE_ENDIAN):
            p = Path(d) / "x.ply"
            save_ply(cloud, p, fmt)
            out.append(p.read_bytes())
    return out


CORPUS = _corpus()


@settings(max_examples=400, deadline=None)
@given(
    st.sampled_from(range(len(CORPUS))),
    st.integers(0, 400),
    st.binary(min_size=0, max_size=8),
    st.sampled_from(["truncate", "replace", "insert"]),
)
def test_header_parse_is_total(tmp_path_factory, which, pos, junk, how):
    data = CORPUS[which]
    pos = min(pos, len(data))
    if how == "truncate":
        data = data[:pos]
    elif how == "replace":
        data = data[:pos] + junk + data[pos + len(junk):]
    else:
        data = data[:pos] + junk + data[pos:]
    p = tmp_path_factory.mktemp("fuzz") / "f.ply"
    p.write_bytes(data)
    try:
        load_ply(p)
    except PlyError:
        pass
