import io

import pytest

from conftest import load
from ungrasp import atlas
from ungrasp import geometry as geo
from ungrasp.primitives import Primitive, PrimitiveLabel

COARSE = atlas.Grid((0, 40, 5), (0, 90, 6), (0.1, 1.0, 0.1))


def test_classify_examples():
    assert atlas.classify(load("corner"), geo.Configuration(20, 45, 0.5)).label == atlas.FREE
    assert atlas.classify(load("symmetric"), geo.Configuration(0, 90, 0.3)).label == atlas.INSECURE
    cell = atlas.classify(load("symmetric"), geo.Configuration(10, 10, 0.0))
    assert cell.label == atlas.INVALID and not cell.in_C


def test_obs_takes_priority():
    cell = atlas.classify(load("symmetric"), geo.Configuration(0, 80, 0.3))
    assert cell.in_C_obs and cell.label == atlas.OBS


def test_policies():
    s = load("asymmetric")
    q = geo.Configuration(30, 0, 0.7)
    for policy in (atlas.CONSERVATIVE, atlas.ROLLING, "RG_SA_SB(-)",
                   PrimitiveLabel(Primitive.RG_RA_RB, -1)):
        assert atlas.classify(s, q, policy).label == atlas.FREE
    with pytest.raises(ValueError):
        atlas.classify(s, q, 3.5)


def test_grid_counts():
    assert len(atlas.Grid((0, 40, 1), (0, 90, 1), (0.5, 1.0, 0.05))) == 41 * 91 * 11
    assert len(atlas.Grid()) == 41 * 91 * 19
    with pytest.raises(ValueError):
        atlas.Grid((0, 10, 0), (0, 90, 1), (0.1, 1, 0.1)).axes()
    with pytest.raises(ValueError):
        atlas.Grid((10, 0, 1), (0, 90, 1), (0.1, 1, 0.1)).axes()


def test_sweep_order_and_count():
    cells = atlas.sweep(load("asymmetric"), COARSE)
    assert len(cells) == len(COARSE)
    keys = [c.q.as_tuple() for c in cells]
    assert keys == sorted(keys)


def test_sweep_parallel_matches_serial():
    s = load("asymmetric")
    grid = atlas.Grid((0, 30, 10), (0, 90, 15), (0.2, 1.0, 0.2))
    assert atlas.sweep(s, grid, workers=2) == atlas.sweep(s, grid)


def test_free_label_consistency():
    for cell in atlas.sweep(load("obstacle"), COARSE):
        assert (cell.label == atlas.FREE) == (cell.in_C and cell.in_C_grasp and not cell.in_C_obs)


def test_symmetric_no_free_goal_cells():
    grid = atlas.Grid((0, 0, 1), (90, 90, 1), (0.05, 1.0, 0.05))
    cells = atlas.sweep(load("symmetric"), grid)
    assert len(cells) == 20
    assert not any(c.label == atlas.FREE for c in cells)


def test_conservative_subset_of_rolling():
    s = load("asymmetric")
    cons = atlas.free_mask(atlas.sweep(s, COARSE, atlas.CONSERVATIVE))
    roll = atlas.free_mask(atlas.sweep(s, COARSE, atlas.ROLLING))
    assert cons.any()
    assert not (cons & ~roll).any()


def test_csv_round_trip():
    cells = atlas.sweep(load("asymmetric"), atlas.Grid((0, 10, 5), (0, 30, 15), (0.5, 0.7, 0.1)))
    buf = io.StringIO()
    atlas.write_csv(cells, buf)
    text = buf.getvalue()
    assert text.splitlines()[0] == ",".join(atlas.HEADER)
    assert "\r" not in text
    assert atlas.read_csv(io.StringIO(text + "# footer\n")) == cells
