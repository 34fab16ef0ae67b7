import numpy as np
import pytest

from thinfilm import snapshot
from thinfilm.field_energy import Magnetization2D
from thinfilm.geometry import DomainMask, erode


@pytest.mark.parametrize(
    "mask",
    [
        DomainMask.disk(1.0, 0.1, center=(0.3, -0.2)),
        DomainMask.rectangle(1.0, 0.5, 0.05),
        DomainMask.polygon([(0, 0), (1, 0), (0.4, 0.8)], 0.04),
    ],
)
def test_round_trip_is_bit_exact(mask, tmp_path):
    m = Magnetization2D.random_unit(mask, np.random.default_rng(0))
    path = snapshot.save(tmp_path / "f.tfm", m, 1e-3, 2.5, {"note": "x"})
    back, eps, Q = snapshot.load(path)
    assert (eps, Q) == (1e-3, 2.5)
    assert back.values.tobytes() == m.values.tobytes()
    assert np.array_equal(back.mask.inside, mask.inside)
    assert back.mask.h == mask.h and back.mask.origin == mask.origin
    assert path.with_suffix(".tfm.json").exists()
    assert snapshot.dumps(back, eps, Q) == snapshot.dumps(m, 1e-3, 2.5)


def test_eroded_region_round_trip():
    mask = erode(DomainMask.disk(1.0, 0.1), 0.3)
    m = Magnetization2D.uniform(mask, (0, 1, 0))
    back, _, _ = snapshot.loads(snapshot.dumps(m, 1e-2, 2.0))
    assert np.array_equal(back.mask.inside, mask.inside)


def test_rejects_bad_data():
    m = Magnetization2D.uniform(DomainMask.disk(1.0, 0.25))
    data = snapshot.dumps(m, 1e-2, 2.0)
    with pytest.raises(snapshot.SnapshotError):
        snapshot.loads(b"garbage" + data)
    with pytest.raises(snapshot.SnapshotError):
        snapshot.loads(data[:-8])
