import numpy as np
import pytest

import micropolar as mp
from micropolar.checkpoint import checkpoint_read, checkpoint_write, read_header
from micropolar.errors import CheckpointError

ZERO = mp.ForcingSpec.zero()


def _trajectory(grid, params, seed=5):
    rng = np.random.default_rng(seed)
    u0 = mp.leray_project(mp.random_field(grid, 2, rng, amplitude=0.2, sigma=3.0))
    om0 = mp.random_field(grid, 1, rng, amplitude=0.2, sigma=3.0)
    th0 = mp.random_field(grid, 1, rng, amplitude=0.2, sigma=3.0)
    times = np.linspace(0, 0.25, 9)
    return mp.initial_trajectory(u0, om0, th0, times, params, ZERO, ZERO)


def test_roundtrip_bit_exact(grid2d, params, tmp_path):
    traj = _trajectory(grid2d, params)
    path = tmp_path / "t.mpk"
    checkpoint_write(traj, str(path), config_hash="abc123")
    back = checkpoint_read(str(path))
    assert np.array_equal(back.times, traj.times)
    assert back.m == traj.m
    for name in ("u", "om", "th", "rhs_u", "rhs_om", "rhs_th",
                 "free_u", "free_om", "free_th"):
        for a, b in zip(getattr(traj, name), getattr(back, name)):
            assert np.array_equal(a.coeffs, b.coeffs)
            assert a.mean_zero == b.mean_zero


def test_header_readable(grid2d, params, tmp_path):
    traj = _trajectory(grid2d, params)
    path = tmp_path / "t.mpk"
    checkpoint_write(traj, str(path), config_hash="deadbeef")
    header = read_header(str(path))
    assert header["config_hash"] == "deadbeef"
    assert header["grid"]["n"] == grid2d.n
    assert len(header["times"]) == traj.node_count


def test_truncated_file_rejected(grid2d, params, tmp_path):
    traj = _trajectory(grid2d, params)
    path = tmp_path / "t.mpk"
    checkpoint_write(traj, str(path), config_hash="x")
    data = path.read_bytes()
    path.write_bytes(data[: len(data) - 64])
    with pytest.raises(CheckpointError):
        checkpoint_read(str(path))


def test_not_a_checkpoint_rejected(tmp_path):
    path = tmp_path / "junk.mpk"
    path.write_bytes(b"not a checkpoint at all")
    with pytest.raises(CheckpointError):
        read_header(str(path))


def test_hash_mismatch_refused(grid2d, params, tmp_path):
    traj = _trajectory(grid2d, params)
    path = tmp_path / "t.mpk"
    checkpoint_write(traj, str(path), config_hash="aaaa")
    with pytest.raises(CheckpointError):
        checkpoint_read(str(path), expected_hash="bbbb")
    assert checkpoint_read(str(path), expected_hash="aaaa") is not None


def test_resume_matches_uninterrupted(grid2d, params, cfg2, tmp_path):
    rng = np.random.default_rng(6)
    u0 = mp.leray_project(mp.random_field(grid2d, 2, rng, amplitude=0.2, sigma=3.0))
    om0 = mp.random_field(grid2d, 1, rng, amplitude=0.2, sigma=3.0)
    th0 = mp.random_field(grid2d, 1, rng, amplitude=0.2, sigma=3.0)
    pic = mp.PicardConfig(horizon=0.25, nodes_per_unit=96, tol=1e-11, m_max=40)
    full = mp.global_solve(u0, om0, th0, cfg2, params, ZERO, ZERO, pic, 0.5)

    half = mp.global_solve(u0, om0, th0, cfg2, params, ZERO, ZERO, pic, 0.25)
    path = tmp_path / "w.mpk"
    checkpoint_write(half.traj, str(path), config_hash="h")
    loaded = checkpoint_read(str(path), expected_hash="h")
    state = loaded.state_at(loaded.node_count - 1)
    resumed = mp.global_solve(state[0], state[1], state[2], cfg2, params,
                              ZERO, ZERO, pic, 0.25, strict_initial=False)
    end_full = full.traj.state_at(full.traj.node_count - 1)
    end_res = resumed.traj.state_at(resumed.traj.node_count - 1)
    from micropolar.solver import duhamel_residual
    quad = duhamel_residual(full.traj, params)
    tol = 10 * max(float(np.max(v)) for v in quad.values())
    for a, b in zip(end_full, end_res):
        assert (a - b).l2() <= max(tol, 1e-12)


def test_version_mismatch_refused(grid2d, params, tmp_path):
    import json
    import struct

    traj = _trajectory(grid2d, params)
    path = tmp_path / "t.mpk"
    checkpoint_write(traj, str(path), config_hash="x")
    data = bytearray(path.read_bytes())
    (hlen,) = struct.unpack("<Q", bytes(data[8:16]))
    header = json.loads(bytes(data[16:16 + hlen]).decode())
    header["version"] = 99
    new_head = json.dumps(header, sort_keys=True).encode()
    rebuilt = data[:8] + struct.pack("<Q", len(new_head)) + new_head \
        + data[16 + hlen:]
    path.write_bytes(bytes(rebuilt))
    with pytest.raises(CheckpointError):
        read_header(str(path))
