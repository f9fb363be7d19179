import numpy as np
import pytest

from mammodense.metrics import (
    DensityReport,
    categorize,
    density_percent,
    dice,
    make_report,
    reports_from_csv,
    reports_to_csv,
)


def test_density_percent():
    breast = np.zeros((10, 10), bool)
    breast[:, :] = True
    dense = np.zeros((10, 10), bool)
    assert density_percent(breast, breast) == 1.0
    assert density_percent(dense, breast) == 0.0
    dense[:5, :5] = True
    assert density_percent(dense, breast) == 0.25


def test_density_percent_errors():
    with pytest.raises(ValueError):
        density_percent(np.zeros((2, 2), bool), np.zeros((2, 2), bool))
    with pytest.raises(ValueError):
        density_percent(np.ones((2, 2), bool), np.eye(2, dtype=bool))


def test_density_crop_invariance():
    rng = np.random.default_rng(0)
    breast = np.zeros((20, 20), bool)
    breast[4:16, 3:17] = True
    dense = breast & (rng.random((20, 20)) > 0.5)
    assert density_percent(dense, breast) == density_percent(dense[4:16, 3:17], breast[4:16, 3:17])


@pytest.mark.parametrize("p, cat", [(0.0, 1), (0.2499, 1), (0.25, 2), (0.5, 3), (0.74, 3), (0.75, 4), (1.0, 4)])
def test_categorize(p, cat):
    assert categorize(p) == cat


def test_categorize_monotone_and_range():
    cats = [categorize(p) for p in np.linspace(0, 1, 401)]
    assert cats == sorted(cats)
    with pytest.raises(ValueError):
        categorize(1.01)
    with pytest.raises(ValueError):
        categorize(-0.1)
    assert categorize(0.35, edges=(0.3, 0.6, 0.9)) == 2


def test_report_and_csv_round_trip():
    breast = np.ones((4, 5), bool)
    dense = np.zeros((4, 5), bool)
    dense[0] = True
    r = make_report("mdb001", dense, breast, "mean")
    assert (r.breast_px, r.dense_px, r.percent_dense, r.category) == (20, 5, 0.25, 2)
    text = reports_to_csv([r])
    assert text.splitlines()[0] == "image_id,breast_px,dense_px,percent_dense,category,threshold_reference"
    assert text.splitlines()[1] == "mdb001,20,5,0.250000,2,mean"
    assert reports_from_csv(text) == [r]


def test_report_invariant():
    with pytest.raises(ValueError):
        DensityReport("x", 3, 4, 1.0, 4, "max")


def test_dice():
    a = np.zeros((4, 4), bool)
    a[:2] = True
    b = np.zeros((4, 4), bool)
    b[1:3] = True
    assert dice(a, a) == 1.0
    assert dice(a, b) == 0.5
    assert dice(np.zeros(3, bool), np.zeros(3, bool)) == 1.0
