import json

import numpy as np
import pytest

from oracles import image_from_ranges, random_rotation
from topo_lidar import formats
from topo_lidar.cli import run
from topo_lidar.core.geometry import PointCloud, ProjectionConfig
from topo_lidar.evaluation.trajectory import PoseTrajectory
from topo_lidar.pairgen import Label, SegmentationMask


@pytest.fixture
def cloud_file(tmp_path, rng):
    path = tmp_path / "cloud.xyz"
    formats.write_xyz(str(path), PointCloud(rng.normal(size=(12, 3)) * 5))
    return str(path)


def read_json(capsys):
    return json.loads(capsys.readouterr().out)


def test_ph_writes_one_row_per_vertex(cloud_file, tmp_path):
    out = tmp_path / "pd.csv"
    assert run(["ph", cloud_file, "--out", str(out)]) == 0
    rows = formats.read_diagram(str(out))
    assert len(rows) == 12
    assert sum(np.isinf(d) for _, d in rows) == 1


def test_reruns_are_byte_identical(cloud_file, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(["encode", cloud_file, "--out-dir", str(out), "--seed", "7", "--k", "4", "--widths", "8,16"]) == 0
        assert run(["optimize", cloud_file, "--out-dir", str(out / "opt"), "--steps", "12", "--record-every", "5", "--no-backtracking"]) == 0
    for name in ("layer_1.csv", "layer_2.csv", "opt/history.csv", "opt/snapshot_00012.xyz"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert (a / "layer_2.csv").read_text().startswith("# seed=7 layer=2 k=4 width=16\n")
    assert sorted(p.name for p in (a / "opt").glob("snapshot_*.xyz")) == [
        "snapshot_00000.xyz", "snapshot_00005.xyz", "snapshot_00010.xyz", "snapshot_00012.xyz",
    ]


def test_image_ph_on_a_text_grid(tmp_path):
    grid = tmp_path / "grid.txt"
    grid.write_text("2 5 1 6 3\n")
    out = tmp_path / "pd.csv"
    assert run(["image-ph", str(grid), "--out", str(out)]) == 0
    assert formats.read_diagram(str(out)) == [(2.0, 5.0), (3.0, 6.0), (1.0, float("inf"))]


def test_loss_grad(cloud_file, tmp_path, capsys):
    out = tmp_path / "grad.csv"
    assert run(["loss-grad", cloud_file, "--out", str(out)]) == 0
    summary = read_json(capsys)
    assert summary["n_edges"] == 11
    assert not summary["degenerate"]
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# loss=")
    assert lines[1] == "idx,gx,gy,gz"
    assert len(lines) == 2 + 12


def test_metrics_self_comparison(cloud_file, capsys):
    assert run(["metrics", cloud_file, cloud_file]) == 0
    report = read_json(capsys)
    assert report["cd"] == 0.0
    assert report["emd"] == 0.0
    assert report["jsd"] == pytest.approx(0.0, abs=1e-12)
    assert report["mmd"] == pytest.approx(0.0, abs=1e-12)
    assert report["rmse"] is None


def test_metrics_skip_and_bad_skip(cloud_file, capsys):
    assert run(["metrics", cloud_file, cloud_file, "--skip", "emd,mmd"]) == 0
    report = read_json(capsys)
    assert report["emd"] is None and report["mmd"] is None
    assert run(["metrics", cloud_file, cloud_file, "--skip", "psnr"]) == 1


def test_traj_eval_identical_files(tmp_path, rng, capsys):
    traj = PoseTrajectory(np.stack([random_rotation(rng) for _ in range(10)]), np.cumsum(rng.normal(size=(10, 3)), axis=0))
    path = str(tmp_path / "poses.txt")
    formats.write_poses(path, traj)
    assert run(["traj-eval", path, path, "--delta", "1"]) == 0
    report = read_json(capsys)
    assert set(report) == {"ate", "rpe_trans", "rpe_rot"}
    assert all(abs(v) < 1e-9 for v in report.values())


def test_pairgen(tmp_path):
    cfg = ProjectionConfig(height=4, width=16)
    ranges = np.full((4, 16), 10.0)
    ranges[:, 0:2] = 0.0
    img = image_from_ranges(ranges, cfg)
    dynamic = np.zeros((4, 16), bool)
    dynamic[1, 10] = True
    formats.write_rimg(str(tmp_path / "scan.rimg"), img)
    formats.write_mask(str(tmp_path / "mask.pgm"), SegmentationMask.from_image(img, dynamic))

    out = tmp_path / "pair"
    argv = ["pairgen", str(tmp_path / "scan.rimg"), str(tmp_path / "mask.pgm"), "--out-dir", str(out)]
    assert run(argv) == 0
    summary = json.loads((out / "pairgen.json").read_text())
    assert summary["source"] == 5
    assert summary["targets"] == [0]
    assert summary["labels"]["dynamic"] == 1

    mask = formats.read_mask(str(out / "mask.pgm"))
    assert mask.labels[1, 0] == Label.DYNAMIC
    assert not formats.read_rimg(str(out / "static.rimg")).valid[1, 10]
    assert formats.read_rimg(str(out / "dynamic.rimg")).valid[1, 0]


def test_convert_then_sparsify(cloud_file, tmp_path):
    rimg = tmp_path / "scan.rimg"
    assert run(["convert", cloud_file, str(rimg), "--height", "16", "--width", "64"]) == 0
    sparse = tmp_path / "sparse.rimg"
    assert run(["sparsify", str(rimg), str(sparse), "--rows", "2", "--cols", "8"]) == 0
    assert formats.read_rimg(str(sparse)).shape == (8, 8)

    assert run(["sparsify", str(rimg), str(tmp_path / "bad.rimg"), "--rows", "3"]) == 2
    assert not (tmp_path / "bad.rimg").exists()
    assert run(["sparsify", str(rimg), str(sparse), "--preset", "ard8", "--rows", "2"]) == 1


def test_ablate(tmp_path):
    out = tmp_path / "ablation.json"
    assert run(["ablate", "--seeds", "2", "--steps", "3", "--out", str(out)]) == 0
    assert set(json.loads(out.read_text())) == {"seeds", "variants", "statistics"}


@pytest.mark.parametrize(
    "argv",
    [[], ["frobnicate"], ["ph"], ["ph", "x.xyz", "--out", "pd.csv", "--bogus"], ["traj-eval", "a", "b", "--delta", "one"]],
)
def test_usage_errors(argv):
    assert run(argv) == 1


def test_encode_requires_a_seed(cloud_file, tmp_path):
    assert run(["encode", cloud_file, "--out-dir", str(tmp_path / "enc")]) == 1
    assert not (tmp_path / "enc").exists()


def test_help_exits_cleanly(capsys):
    assert run(["--help"]) == 0
    assert "topo_lidar" in capsys.readouterr().out


def test_data_errors_leave_no_outputs(tmp_path):
    one = tmp_path / "one.xyz"
    one.write_text("1 2 3\n")
    out_dir = tmp_path / "opt"
    assert run(["optimize", str(one), "--out-dir", str(out_dir)]) == 2
    assert not out_dir.exists()

    assert run(["ph", str(tmp_path / "missing.xyz"), "--out", str(tmp_path / "pd.csv")]) == 2
    assert not (tmp_path / "pd.csv").exists()


def test_bad_settings_are_a_usage_error(monkeypatch, cloud_file, tmp_path):
    monkeypatch.setenv("TOPO_LIDAR_THREADS", "zero")
    assert run(["ph", cloud_file, "--out", str(tmp_path / "pd.csv")]) == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["optimize", "{cloud}", "--out-dir", "{tmp}/opt", "--steps", "0"],
        ["optimize", "{cloud}", "--out-dir", "{tmp}/opt", "--lr", "-1"],
        ["optimize", "{cloud}", "--out-dir", "{tmp}/opt", "--anchor", "-0.5"],
        ["encode", "{cloud}", "--out-dir", "{tmp}/enc", "--seed", "1", "--k", "0"],
        ["encode", "{cloud}", "--out-dir", "{tmp}/enc", "--seed", "1", "--widths", "8,0"],
        ["traj-eval", "{cloud}", "{cloud}", "--delta", "0"],
        ["pairgen", "{cloud}", "{cloud}", "--out-dir", "{tmp}/pair", "--sectors", "0"],
        ["sparsify", "{cloud}", "{tmp}/s.rimg", "--rows", "0"],
        ["metrics", "{cloud}", "{cloud}", "--bandwidth", "-2"],
        ["ablate", "--seeds", "0"],
    ],
)
def test_bad_flag_values_are_usage_errors(argv, cloud_file, tmp_path):
    argv = [a.format(cloud=cloud_file, tmp=tmp_path) for a in argv]
    assert run(argv) == 1
    assert sorted(p.name for p in tmp_path.iterdir()) == ["cloud.xyz"]


def test_flags_are_checked_before_inputs_are_read(tmp_path):
    missing = str(tmp_path / "missing.xyz")
    assert run(["optimize", missing, "--out-dir", str(tmp_path / "o"), "--steps", "0"]) == 1
    assert run(["convert", missing, str(tmp_path / "x.rimg"), "--fov-up", "-30"]) == 1
    assert run(["metrics", missing, missing, "--extent", "5,-5,0,1"]) == 1
    # a well-formed command on a missing file is a data error
    assert run(["optimize", missing, "--out-dir", str(tmp_path / "o")]) == 2
