import numpy as np
import pytest
from oracles import breast_phantom

from mammodense import imageio
from mammodense.imageio import GrayImage


def write_pair(image_dir, mask_dir, stem, flip=False, seed=None, n=256):
    px, breast, disk = breast_phantom(n=n, flip=flip, seed=seed)
    image_dir.mkdir(parents=True, exist_ok=True)
    mask_dir.mkdir(parents=True, exist_ok=True)
    imageio.save_image(image_dir / f"{stem}.pgm", GrayImage(px, 8))
    imageio.save_mask(mask_dir / f"{stem}.pgm", breast)
    return breast, disk


@pytest.fixture
def phantom_dirs(tmp_path):
    images, masks = tmp_path / "images", tmp_path / "masks"
    truth = {
        "mdb003": write_pair(images, masks, "mdb003", seed=3),
        "mdb001": write_pair(images, masks, "mdb001"),
        "mdb002": write_pair(images, masks, "mdb002", flip=True, seed=2),
    }
    return images, masks, truth


# (criterion, passed, detail) rows filled in by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
