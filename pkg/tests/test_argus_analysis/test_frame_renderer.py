import hashlib

import numpy as np
import pytest

from aeolus.argus_analysis.frame_renderer import (
    BACKGROUND_CODE,
    COLOR_CODES,
    GOAL_CODE,
    PALETTE,
    FrameRenderer,
    encode_ppm,
    render_frames,
)
from aeolus.errors import DatasetError

PPM_HEADER = b"P6\n700 700\n255\n"


def test_stride_selects_frames(tmp_path, make_log):
    """Test that a stride of 100 writes ten frames plus the index."""
    paths = render_frames(make_log(n_episodes=1), 0, tmp_path, stride=100)
    assert [p.name for p in paths] == [f"episode00000_step{s:04d}.ppm" for s in range(0, 1000, 100)]
    lines = (tmp_path / "frames.csv").read_text().splitlines()
    assert lines[0] == "file,step,orange_x,orange_y,purple_x,purple_y,green_x,green_y"
    assert len(lines) == 11


def test_frames_are_full_size_ppm(tmp_path, make_log):
    """Test the PPM header and payload size of every frame."""
    for path in render_frames(make_log(n_episodes=1), 0, tmp_path, stride=250):
        payload = path.read_bytes()
        assert payload.startswith(PPM_HEADER)
        assert len(payload) == len(PPM_HEADER) + 700 * 700 * 3


def test_rendering_is_deterministic(tmp_path, make_log):
    """Test that rendering one episode twice gives byte-identical files."""
    log = make_log(n_episodes=2)

    def digests(out_dir):
        return [hashlib.sha256(p.read_bytes()).hexdigest() for p in render_frames(log, 1, out_dir, stride=200)]

    assert digests(tmp_path / "a") == digests(tmp_path / "b")


def test_disc_at_the_edge_stays_in_frame():
    """Test that a disc centered on a corner is clipped, not wrapped."""
    renderer = FrameRenderer()
    renderer.draw_disc(1, (0.0, 0.0), 20, COLOR_CODES["orange"])
    frame = renderer.render()
    assert frame.shape == (700, 700)
    assert frame[0, 0] == COLOR_CODES["orange"]
    assert frame[699, 699] == BACKGROUND_CODE
    assert frame[0, 690] == BACKGROUND_CODE
    assert np.count_nonzero(frame == COLOR_CODES["orange"]) < 700


def test_higher_layer_wins():
    """Test that overlapping discs merge with the higher z-index on top."""
    renderer = FrameRenderer()
    renderer.draw_disc(1, (350.0, 350.0), 20, COLOR_CODES["orange"])
    renderer.draw_disc(2, (360.0, 350.0), 20, COLOR_CODES["purple"])
    frame = renderer.render()
    assert frame[350, 355] == COLOR_CODES["purple"]
    assert frame[350, 332] == COLOR_CODES["orange"]
    assert renderer.layered_frames == {}


def test_reach_frames_mark_the_goal(tmp_path, make_log):
    """Test that reach frames carry the goal cross and goal columns."""
    log = make_log("reach", n_episodes=1, n_balls=1)
    log.records["pixels"][:, 0] = [600.0, 600.0]
    goal = log.goals(log.records[:1])[0]
    (path,) = render_frames(log, 0, tmp_path, stride=1000)
    image = np.frombuffer(path.read_bytes()[len(PPM_HEADER):], dtype=np.uint8).reshape(700, 700, 3)
    x, y = (int(round(v)) for v in goal)
    assert np.array_equal(image[y, x], PALETTE[GOAL_CODE])
    assert (tmp_path / "frames.csv").read_text().splitlines()[0].endswith("goal_x,goal_y")


def test_bad_stride_and_missing_episode(tmp_path, make_log):
    """Test a zero stride and an unknown episode id."""
    log = make_log(n_episodes=1)
    with pytest.raises(ValueError):
        render_frames(log, 0, tmp_path, stride=0)
    with pytest.raises(DatasetError):
        render_frames(log, 7, tmp_path)


def test_ppm_shape_check():
    """Test that non-RGB arrays are rejected."""
    with pytest.raises(ValueError):
        encode_ppm(np.zeros((4, 4)))
