import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from secpat.config import ConfigError, RunConfig
from secpat.forward import SensorLayout, simulate
from secpat.geometry import ConvexDomain, two_disk_phantom
from secpat.io import FormatError, read_image, read_measurement, write_image, write_measurement, write_pgm
from secpat.metrics import GridMismatchError, Metrics, box_mask, compare, mass_outside, max_abs_error, peak_offset, relative_l2
from secpat.transforms import ImageGrid

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_relative_l2_definition():
    a = np.arange(12.0).reshape(3, 4)
    assert relative_l2(a, a) == 0.0
    assert relative_l2(a, 2 * a) == pytest.approx(1.0, abs=1e-15)
    assert relative_l2(np.zeros(3), np.zeros(3)) == 0.0
    assert relative_l2(np.zeros(3), np.ones(3)) == math.inf
    with pytest.raises(GridMismatchError):
        relative_l2(np.zeros(3), np.zeros(4))


@given(arrays(float, (5, 6), elements=finite), arrays(float, (5, 6), elements=finite))
def test_relative_l2_independent_recomputation(a, b):
    # plain-Python oracle
    num = den = 0.0
    for x, y in zip(a.ravel().tolist(), b.ravel().tolist()):
        num += (x - y) ** 2
        den += x * x
    if den == 0:
        return
    assert relative_l2(a, b) == pytest.approx(math.sqrt(num) / math.sqrt(den), rel=1e-12, abs=1e-300)


def test_metrics_helpers():
    a = np.zeros((9, 9))
    a[2, 3] = 1
    b = np.zeros((9, 9))
    b[5, 7] = 2
    assert peak_offset(a, b) == pytest.approx(5.0)
    assert max_abs_error(a, b) == 2.0
    support = np.zeros((9, 9), bool)
    support[5, 7] = True
    assert mass_outside(b, support, dilation=0) == 0.0
    # dilation grows the support by one 4-connected step per iteration; (2,3) is 3 + 4 steps from (5,7)
    assert mass_outside(a, support, dilation=6) == 1.0
    assert mass_outside(a, support, dilation=7) == 0.0
    g = ImageGrid.square(1.0, 4)
    assert box_mask(g, (0, 1, 0, 1)).sum() == 4


def test_metrics_nonnegative_and_compare():
    with pytest.raises(ValueError):
        Metrics(-1.0, 0.0, 0.0, 0.0)
    g = ImageGrid.square(1.0, 8)
    img = g.with_values(np.outer(np.arange(8.0), np.ones(8)))
    m = compare(img, img)
    assert m.relative_l2 == 0 and m.max_abs_error == 0 and m.peak_offset == 0
    assert m.lines()[0] == "relative_l2=0"
    assert compare(img, g.with_values(2 * img.values)).relative_l2 == 1.0
    with pytest.raises(GridMismatchError):
        compare(img, ImageGrid.square(2.0, 8).with_values(img.values))


@pytest.mark.parametrize("mode, domain", [("m1", "disk:1"), ("m3", "ellipse:1.2:0.9"), ("m2", "halfspace")])
def test_measurement_round_trip(tmp_path, mode, domain):
    dom = ConvexDomain.parse(domain)
    ph = two_disk_phantom(dom)
    lay = SensorLayout(mode, dom, 5, 40, 20.0 if not dom.bounded else 4.5, half_width=4.0)
    data = simulate(ph, dom, lay)
    path = tmp_path / "m.csv"
    write_measurement(path, data)
    back = read_measurement(path)
    assert back.layout == data.layout
    np.testing.assert_array_equal(back.values, data.values)
    assert back.provenance["phantom"] == ph.digest()
    lines = path.read_text().splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    assert len(body) == lay.n_t and all(len(ln.split(",")) == lay.n_sensors + 1 for ln in body)
    # determinism: writing again gives identical bytes
    path2 = tmp_path / "m2.csv"
    write_measurement(path2, simulate(ph, dom, lay))
    assert path.read_bytes() == path2.read_bytes()


def test_measurement_format_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("# mode=m3\n1,2\n")
    with pytest.raises(FormatError):
        read_measurement(p)
    p.write_text("# broken header\n")
    with pytest.raises(FormatError):
        read_measurement(p)
    lay = SensorLayout("m3", ConvexDomain.disk(1.0), 2, 8, 3.0)
    head = "".join(f"# {k}={v}\n" for k, v in lay.to_dict().items())
    p.write_text(head + "0.1,1,2\n")
    with pytest.raises(FormatError, match="shape"):
        read_measurement(p)
    rows = "\n".join(f"{t!r},x,1" for t in lay.times)
    p.write_text(head + rows + "\n")
    with pytest.raises(FormatError, match="number"):
        read_measurement(p)


@given(arrays(float, (3, 4), elements=finite))
def test_image_round_trip(tmp_path_factory, vals):
    path = tmp_path_factory.mktemp("img") / "i.csv"
    img = ImageGrid(vals, (-1.0, 2.0, 0.5, 1.5))
    write_image(path, img)
    back = read_image(path)
    assert back.same_grid(img)
    np.testing.assert_array_equal(back.values, img.values)


def test_image_format_errors(tmp_path):
    p = tmp_path / "i.csv"
    p.write_text("# nx=2\n1,2\n")
    with pytest.raises(FormatError):
        read_image(p)
    p.write_text("# bbox=[0,1,0,1]\n# nx=2\n# ny=2\n1,2\n")
    with pytest.raises(FormatError):
        read_image(p)


def test_pgm_orientation(tmp_path):
    g = ImageGrid.square(1.0, 4)
    vals = np.zeros((4, 4))
    vals[-1, 0] = 1.0  # largest y, smallest x
    write_pgm(tmp_path / "p.pgm", g.with_values(vals))
    lines = (tmp_path / "p.pgm").read_text().split("\n")
    assert lines[:3] == ["P2", "4 4", "255"]
    assert lines[3].split()[0] == "255"
    write_pgm(tmp_path / "z.pgm", g.with_values(np.zeros((4, 4))))
    assert set((tmp_path / "z.pgm").read_text().split()[4:]) == {"0"}


# --- configuration ---------------------------------------------------------------------


def test_config_round_trip(tmp_path):
    cfg = RunConfig(domain="ellipse:1.2:0.9", mode="m3", grid_bbox=[-1, 1, -1, 1])
    cfg.dump(tmp_path / "c.json")
    assert RunConfig.load(tmp_path / "c.json") == cfg
    with pytest.raises(ConfigError, match="unknown"):
        RunConfig.from_dict({"nope": 1})
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "bad.json")


@pytest.mark.parametrize(
    "kw, words",
    [
        ({"domain": "halfspace", "mode": "m3"}, "strictly convex"),
        ({"domain": "halfspace", "mode": "m4"}, "strictly convex"),
        ({"domain": "ellipse:2:1", "mode": "m2", "method": "kunyansky"}, "disk only"),
        ({"domain": "ellipse:2:1", "mode": "m2", "method": "fhr-inv"}, "disk only"),
        ({"mode": "m1", "method": "radon"}, "m3/m4"),
        ({"mode": "m3", "method": "series"}, "radon"),
        ({"mode": "m2", "method": "series"}, "m1 data only"),
        ({"mode": "m7"}, "mode"),
        ({"method": "magic"}, "method"),
        ({"n_t": 0}, "n_t"),
        ({"omega_max": -1.0}, "omega"),
    ],
)
def test_config_rejects_incompatible(kw, words):
    with pytest.raises(ConfigError, match=words):
        RunConfig(**kw).validate()


def test_config_auto_methods():
    assert RunConfig(mode="m1").resolved_method() == "series"
    assert RunConfig(mode="m2").resolved_method() == "fhr-lap"
    assert RunConfig(mode="m4").validate().resolved_method() == "radon"
    assert json.loads(json.dumps(RunConfig().to_dict()))["domain"] == "disk:1.0"
