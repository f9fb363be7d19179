import numpy as np
import pytest
from conftest import write_pair
from oracles import breast_phantom

from mammodense import imageio
from mammodense.cli import main
from mammodense.metrics import reports_from_csv
from mammodense.pipeline import (
    ConfigError,
    PipelineConfig,
    load_config,
    pair_files,
    run_batch,
    run_single,
)


def _roi_truth(breast, disk):
    """Expected dense fraction inside the ROI, counted directly."""
    rows = breast.sum(axis=1)
    cols = breast.sum(axis=0)
    wr = int(np.argmax(rows))
    mw, mh = int(rows.max()), int(cols.max())
    left = int(np.nonzero(cols)[0][0])
    r0, r1 = max(0, wr - mh // 4), min(breast.shape[0], wr + mh // 4)
    c0, c1 = left + mw // 3, min(breast.shape[1], left + mw)
    region = breast[r0:r1, c0:c1]
    return (disk[r0:r1, c0:c1] & region).sum() / region.sum()


def test_load_config():
    cfg = load_config("# comment\nt_low = 0.5\nreference = mean  # inline\nkernel-size = 15\ndebug_stages = yes\n")
    assert (cfg.t_low, cfg.reference, cfg.kernel_size, cfg.debug_stages) == (0.5, "mean", 15, True)
    assert load_config("") == PipelineConfig()
    assert load_config("wavelength = auto").wavelength is None


@pytest.mark.parametrize(
    "text", ["t_lo = 0.5", "t_low 0.5", "t_low = abc", "t_low = 0.9", "kernel_size = 4", "reference = median"]
)
def test_load_config_rejects(text):
    with pytest.raises(ConfigError):
        load_config(text)


def test_run_single_phantom(tmp_path):
    breast, disk = write_pair(tmp_path / "i", tmp_path / "m", "p")
    report, dense = run_single(tmp_path / "i/p.pgm", tmp_path / "m/p.pgm", PipelineConfig(out=str(tmp_path / "o")))
    truth = _roi_truth(breast, disk)
    # the edge response trims a few pixels off the disk rim
    assert abs(report.percent_dense - truth) < 0.08
    assert report.category == 2
    assert dense.shape == breast.shape and not (dense & ~breast).any()
    assert np.array_equal(imageio.load_mask(tmp_path / "o/p_dense.pgm"), dense)


def test_flipped_input_gives_mirrored_mask(tmp_path):
    write_pair(tmp_path / "i", tmp_path / "m", "a")
    write_pair(tmp_path / "i", tmp_path / "m", "b", flip=True)
    cfg = PipelineConfig(out=str(tmp_path / "o"))
    ra, da = run_single(tmp_path / "i/a.pgm", tmp_path / "m/a.pgm", cfg)
    rb, db = run_single(tmp_path / "i/b.pgm", tmp_path / "m/b.pgm", cfg)
    assert np.array_equal(da[:, ::-1], db)
    assert (ra.dense_px, ra.breast_px) == (rb.dense_px, rb.breast_px)


def test_segment_cli_deterministic(tmp_path, capsys):
    write_pair(tmp_path / "i", tmp_path / "m", "p", seed=1)
    args = [str(tmp_path / "i/p.pgm"), str(tmp_path / "m/p.pgm")]
    assert main(["segment", *args, "--out", str(tmp_path / "o1")]) == 0
    assert main(["segment", *args, "--out", str(tmp_path / "o2"), "--jobs", "3"]) == 0
    for name in ("p_dense.pgm", "report.csv"):
        assert (tmp_path / "o1" / name).read_bytes() == (tmp_path / "o2" / name).read_bytes()
    assert "p," in capsys.readouterr().out


def test_debug_stages(tmp_path):
    write_pair(tmp_path / "i", tmp_path / "m", "p")
    rc = main(["segment", str(tmp_path / "i/p.pgm"), str(tmp_path / "m/p.pgm"), "--out", str(tmp_path / "o"), "--debug-stages"])
    assert rc == 0
    names = {p.name for p in (tmp_path / "o/p").iterdir()}
    for stage in ("enhanced", "response", "suppressed", "low", "high", "and", "final"):
        assert f"{stage}.pgm" in names
    assert sum(n.startswith("response_") for n in names) == 8


def test_missing_mask_exit_code(tmp_path, capsys):
    write_pair(tmp_path / "i", tmp_path / "m", "p")
    missing = tmp_path / "m/nope.pgm"
    assert main(["segment", str(tmp_path / "i/p.pgm"), str(missing)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_dimension_mismatch_exit_code(tmp_path, capsys):
    write_pair(tmp_path / "i", tmp_path / "m", "p")
    imageio.save_mask(tmp_path / "small.pgm", np.ones((10, 10), bool))
    assert main(["segment", str(tmp_path / "i/p.pgm"), str(tmp_path / "small.pgm")]) == 3
    assert "data error" in capsys.readouterr().err


def test_malformed_file_exit_code(tmp_path):
    (tmp_path / "bad.pgm").write_bytes(b"P7 junk")
    write_pair(tmp_path / "i", tmp_path / "m", "p")
    assert main(["segment", str(tmp_path / "bad.pgm"), str(tmp_path / "m/p.pgm")]) == 3


def test_usage_exit_codes(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["segment"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    (tmp_path / "bad.cfg").write_text("colour = blue\n")
    assert main(["kernels", "--config", str(tmp_path / "bad.cfg")]) == 1
    assert main(["kernels", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["kernels", "--t-low", "0.9", "--t-high", "0.5"]) == 1


def test_cli_flags_override_config(tmp_path, monkeypatch):
    from mammodense import cli

    (tmp_path / "c.cfg").write_text("t_low = 0.5\ngain = 2.0\ntiles_x = 4\n")
    seen = {}
    monkeypatch.setattr(cli, "cmd_kernels", lambda args, cfg: seen.setdefault("cfg", cfg) and 0)
    main(["kernels", "--config", str(tmp_path / "c.cfg"), "--gain", "0.5", "--tiles", "3x5"])
    cfg = seen["cfg"]
    assert (cfg.t_low, cfg.gain, cfg.tiles_x, cfg.tiles_y) == (0.5, 0.5, 3, 5)


def test_kernels_command(tmp_path, capsys):
    assert main(["kernels", "--kernel-size", "15", "--orientations", "4", "--out", str(tmp_path)]) == 0
    files = sorted(tmp_path.glob("kernel_*.pgm"))
    assert [f.name for f in files] == [
        "kernel_00_000.0.pgm",
        "kernel_01_045.0.pgm",
        "kernel_02_090.0.pgm",
        "kernel_03_135.0.pgm",
    ]
    assert imageio.load_image(files[0]).shape == (15, 15)


def test_enhance_command(tmp_path):
    write_pair(tmp_path / "i", tmp_path / "m", "p", seed=4)
    rc = main(["enhance", str(tmp_path / "i/p.pgm"), str(tmp_path / "m/p.pgm"), "--out", str(tmp_path / "o")])
    assert rc == 0
    out = imageio.load_image(tmp_path / "o/p_clahe.pgm")
    breast = imageio.load_mask(tmp_path / "m/p.pgm")
    assert out.shape == breast.shape and not out.pixels[~breast].any()


def test_pair_files(phantom_dirs, tmp_path):
    images, masks, _ = phantom_dirs
    (images / "mdb009.pgm").write_bytes((images / "mdb001.pgm").read_bytes())
    pairs, warnings = pair_files(images, masks)
    assert [p[0] for p in pairs] == ["mdb001", "mdb002", "mdb003"]
    assert warnings == [f"mdb009: no mask in {masks}"]


def test_batch_sorted_and_equals_singles(phantom_dirs, tmp_path):
    images, masks, _ = phantom_dirs
    reports, warnings, failed = run_batch(images, masks, PipelineConfig(out=str(tmp_path / "b")))
    assert [r.image_id for r in reports] == ["mdb001", "mdb002", "mdb003"]
    assert warnings == [] and failed == 0
    singles = [
        run_single(images / f"{s}.pgm", masks / f"{s}.pgm", PipelineConfig(out=str(tmp_path / "s")))[0]
        for s in ("mdb003", "mdb001", "mdb002")
    ]
    assert sorted(singles, key=lambda r: r.image_id) == reports


def test_batch_cli_parallel_identical(phantom_dirs, tmp_path):
    images, masks, _ = phantom_dirs
    assert main(["batch", str(images), str(masks), "--out", str(tmp_path / "j1")]) == 0
    assert main(["batch", str(images), str(masks), "--out", str(tmp_path / "j3"), "--jobs", "3"]) == 0
    for name in ("report.csv", "mdb001_dense.pgm", "mdb002_dense.pgm", "mdb003_dense.pgm"):
        assert (tmp_path / "j1" / name).read_bytes() == (tmp_path / "j3" / name).read_bytes()


def test_batch_unpaired_warning(tmp_path, capsys):
    write_pair(tmp_path / "i", tmp_path / "m", "mdb001")
    write_pair(tmp_path / "i", tmp_path / "other", "mdb002")
    assert main(["batch", str(tmp_path / "i"), str(tmp_path / "m"), "--out", str(tmp_path / "o")]) == 0
    captured = capsys.readouterr()
    rows = reports_from_csv((tmp_path / "o/report.csv").read_text())
    assert [r.image_id for r in rows] == ["mdb001"]
    assert captured.err.count("warning:") == 1 and "mdb002" in captured.err


def test_batch_empty_pairing(tmp_path):
    (tmp_path / "i").mkdir()
    (tmp_path / "m").mkdir()
    assert main(["batch", str(tmp_path / "i"), str(tmp_path / "m")]) == 3
    assert main(["batch", str(tmp_path / "nope"), str(tmp_path / "m")]) == 2


def test_batch_failed_image_is_warned(tmp_path, capsys):
    write_pair(tmp_path / "i", tmp_path / "m", "good")
    write_pair(tmp_path / "i", tmp_path / "m", "bad")
    imageio.save_mask(tmp_path / "m/bad.pgm", np.zeros((256, 256), bool))
    assert main(["batch", str(tmp_path / "i"), str(tmp_path / "m"), "--out", str(tmp_path / "o")]) == 3
    assert "bad:" in capsys.readouterr().err
    assert [r.image_id for r in reports_from_csv((tmp_path / "o/report.csv").read_text())] == ["good"]


def test_report_recomputes_batch_csv(phantom_dirs, tmp_path):
    images, masks, _ = phantom_dirs
    assert main(["batch", str(images), str(masks), "--out", str(tmp_path / "b")]) == 0
    batch_csv = (tmp_path / "b/report.csv").read_text()
    assert main(["report", str(masks), str(tmp_path / "b"), "--out", str(tmp_path / "r")]) == 0
    assert (tmp_path / "r/report.csv").read_text() == batch_csv


def test_mean_reference_label(tmp_path):
    write_pair(tmp_path / "i", tmp_path / "m", "p")
    cfg = PipelineConfig(out=str(tmp_path), reference="mean")
    report, _ = run_single(tmp_path / "i/p.pgm", tmp_path / "m/p.pgm", cfg)
    assert report.threshold_reference == "mean"


def test_pbm_mask_accepted(tmp_path):
    px, breast, _ = breast_phantom(n=128)
    imageio.save_image(tmp_path / "a.pgm", imageio.GrayImage(px, 8))
    packed = np.packbits(breast, axis=1).tobytes()
    (tmp_path / "a.pbm").write_bytes(b"P4\n128 128\n" + packed)
    report, _ = run_single(tmp_path / "a.pgm", tmp_path / "a.pbm", PipelineConfig(out=str(tmp_path / "o")))
    assert report.breast_px > 0
