import numpy as np
import pytest

from tilesched.media import (
    DistortionTable,
    FrameType,
    Packet,
    SegmentFormatError,
    SynthConfig,
    build_distortion_table,
    frame_types_for,
    load_segment,
    read_pgm,
    save_segment,
    synth_activity,
    synth_hotspot,
    synth_video,
    write_pgm,
)


# ----------------------------------------------------------------- types


def test_packet_validation():
    with pytest.raises(ValueError, match="positive"):
        Packet(0, 0, FrameType.I, 0)
    with pytest.raises(ValueError, match="penalty"):
        Packet(0, 0, FrameType.P, 10, -1.0)
    with pytest.raises(ValueError, match="B packets"):
        Packet(0, 0, FrameType.B, 10, 0.5)


def test_distortion_table_validation():
    with pytest.raises(ValueError, match="square"):
        DistortionTable([np.zeros((2, 3))])
    bad_diag = np.array([[0.0, 0.0], [0.1, 0.5]])
    with pytest.raises(ValueError, match=r"d\[i\]\[i\]"):
        DistortionTable([bad_diag])
    upper = np.array([[0.0, 0.3], [0.1, 0.0]])
    with pytest.raises(ValueError, match="above the diagonal"):
        DistortionTable([upper])
    neg = np.array([[0.0, 0.0], [-0.1, 0.0]])
    with pytest.raises(ValueError, match="finite"):
        DistortionTable([neg])


# ------------------------------------------------------------- synthesis


def test_degenerate_single_frame_segment():
    seg = synth_video(SynthConfig(tiles=1, frames=1, gop_length=1))
    assert seg.packet_count == 1
    assert seg.tile(0).packets[0].frame_type is FrameType.I
    assert seg.distortion.matrix(0).shape == (1, 1)


def test_synth_determinism_byte_identical(tmp_path):
    cfg = SynthConfig(tiles=24, frames=125, gop_length=25, seed=7)
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    save_segment(synth_video(cfg), a)
    save_segment(synth_video(cfg), b)
    assert a.read_bytes() == b.read_bytes()


def test_b_packets_carry_no_penalty():
    seg = synth_video(SynthConfig(tiles=2, frames=8, gop_length=8, seed=3))
    for ts in seg.tiles:
        for p in ts.packets:
            if p.frame_type is FrameType.B:
                assert p.propagation_penalty == 0.0


def test_invalid_configs_rejected():
    with pytest.raises(ValueError, match="tile count"):
        synth_video(SynthConfig(tiles=0))
    with pytest.raises(ValueError, match="frame count"):
        synth_video(SynthConfig(frames=0))
    with pytest.raises(ValueError, match="gop_length"):
        synth_video(SynthConfig(frames=10, gop_length=12))
    with pytest.raises(ValueError, match="exactly one I"):
        synth_video(SynthConfig(frames=4, gop_length=4, gop_pattern="IPIB"))
    with pytest.raises(ValueError, match="propagation_scale"):
        SynthConfig(propagation_scale=-1.0).validate()


def test_gop_structure():
    cfg = SynthConfig(tiles=1, frames=50, gop_length=10, seed=1)
    types = frame_types_for(cfg)
    for start in range(0, 50, 10):
        assert types[start] is FrameType.I
        assert FrameType.I not in types[start + 1 : start + 10]


def test_monotone_decay_within_gop():
    seg = synth_video(SynthConfig(tiles=3, frames=25, gop_length=25, seed=5))
    for tile in range(3):
        d = seg.distortion.matrix(tile)
        # strictly increasing with the concealment gap
        for j in (0, 3, 11):
            gaps = d[j + 1 :, j]
            assert np.all(np.diff(gaps) > 0)
        # for fixed reference, staleness never improves with i
        for j in range(24):
            col = d[j + 1 :, j]
            assert np.all(np.diff(col) >= 0)


def test_size_ordering_by_frame_type():
    seg = synth_video(SynthConfig(tiles=6, frames=25, gop_length=25, seed=9))
    by_type: dict[FrameType, list[int]] = {t: [] for t in FrameType}
    for ts in seg.tiles:
        for p in ts.packets:
            by_type[p.frame_type].append(p.size_bytes)
    assert np.mean(by_type[FrameType.I]) > np.mean(by_type[FrameType.P])
    assert np.mean(by_type[FrameType.P]) > np.mean(by_type[FrameType.B])


def test_tile_byte_total_matches_packet_sum():
    seg = synth_video(SynthConfig(tiles=2, frames=25, gop_length=25, seed=2))
    for ts in seg.tiles:
        assert ts.total_bytes == sum(p.size_bytes for p in ts.packets)
    assert seg.packet_count == seg.tile_count * seg.frames_per_tile


def test_activity_field_and_hotspot_are_stable():
    cfg = SynthConfig(tiles=24, frames=25, gop_length=25, seed=4)
    field = synth_activity(cfg)
    assert field.shape == (24,)
    hot = synth_hotspot(cfg)
    # the hotspot sits in the two middle rows of the 4x6 grid
    assert 6 <= hot < 18
    assert np.array_equal(field, synth_activity(cfg))


# ------------------------------------------------------------ file format


def test_round_trip_identity(tmp_path):
    seg = synth_video(SynthConfig(tiles=2, frames=8, gop_length=8, seed=3))
    path = tmp_path / "seg.txt"
    save_segment(seg, path)
    assert load_segment(path) == seg


def test_truncated_file_rejected(tmp_path):
    seg = synth_video(SynthConfig(tiles=2, frames=4, gop_length=4, seed=0))
    path = tmp_path / "seg.txt"
    save_segment(seg, path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:4]) + "\n")
    with pytest.raises(SegmentFormatError, match="missing packet"):
        load_segment(path)


def test_nonzero_diagonal_rejected(tmp_path):
    seg = synth_video(SynthConfig(tiles=1, frames=4, gop_length=4, seed=0))
    path = tmp_path / "seg.txt"
    save_segment(seg, path)
    with open(path, "a") as fh:
        fh.write("0 2 2 0.5\n")
    with pytest.raises(SegmentFormatError, match=r"d\[i\]\[i\]"):
        load_segment(path)


def test_upper_triangular_record_rejected(tmp_path):
    seg = synth_video(SynthConfig(tiles=1, frames=4, gop_length=4, seed=0))
    path = tmp_path / "seg.txt"
    save_segment(seg, path)
    with open(path, "a") as fh:
        fh.write("0 1 3 0.25\n")
    with pytest.raises(SegmentFormatError, match="j <= i"):
        load_segment(path)


def test_bad_header_and_records(tmp_path):
    path = tmp_path / "seg.txt"
    path.write_text("tiles 1 frames\n")
    with pytest.raises(SegmentFormatError, match="header"):
        load_segment(path)
    path.write_text("")
    with pytest.raises(SegmentFormatError, match="empty"):
        load_segment(path)
    path.write_text("tiles 1 frames 2 gop 2\n0 0 I 10 0.0\n0 1 Q 10 0.0\n")
    with pytest.raises(SegmentFormatError, match="bad packet record"):
        load_segment(path)


def test_comments_and_sparse_distortion(tmp_path):
    path = tmp_path / "seg.txt"
    path.write_text(
        "# a comment\n"
        "tiles 1 frames 2 gop 2\n"
        "0 0 I 10 0.0  # inline comment\n"
        "0 1 P 5 0.25\n"
    )
    seg = load_segment(path)
    assert seg.distortion.d(0, 1, 0) == 0.0  # missing entries default to zero


# ------------------------------------------------- tables from frames


def test_identical_frames_give_zero_table(rng):
    img = rng.integers(0, 256, size=(16, 16)).astype(np.uint8)
    table = build_distortion_table([[img, img, img]])
    assert not table.matrix(0).any()


def test_single_frame_gives_1x1_zero_table(rng):
    img = rng.integers(0, 256, size=(16, 16)).astype(np.uint8)
    table = build_distortion_table([[img]])
    assert table.matrix(0).shape == (1, 1)


def test_inverted_pair_table(rng):
    img = rng.integers(0, 256, size=(16, 16)).astype(np.float64)
    table = build_distortion_table([[img, 255.0 - img]])
    assert table.d(0, 1, 0) > 0.9


def test_dimension_mismatch_rejected(rng):
    a = rng.integers(0, 256, size=(16, 16))
    b = rng.integers(0, 256, size=(16, 18))
    with pytest.raises(ValueError, match="shape"):
        build_distortion_table([[a, b]])


# ---------------------------------------------------------------- PGM


def test_pgm_round_trip(tmp_path, rng):
    img = rng.integers(0, 256, size=(9, 13)).astype(np.uint8)
    path = tmp_path / "f.pgm"
    write_pgm(img, path)
    assert np.array_equal(read_pgm(path), img)


def test_pgm_with_comment(tmp_path):
    path = tmp_path / "f.pgm"
    path.write_bytes(b"P5\n# comment line\n2 2\n255\n\x00\x01\x02\x03")
    img = read_pgm(path)
    assert img.tolist() == [[0, 1], [2, 3]]


def test_pgm_truncated_rejected(tmp_path):
    path = tmp_path / "f.pgm"
    path.write_bytes(b"P5\n4 4\n255\n\x00\x01")
    with pytest.raises(ValueError, match="truncated"):
        read_pgm(path)
