import struct

import numpy as np
import pytest

from lapjitter import sidecar as sc
from lapjitter.geometry import build_jitter_map
from lapjitter.jitter import SinusoidSet, subdivision_curves


def curves():
    roll = subdivision_curves(SinusoidSet.from_arrays([4.0, 1.5], [1000.0, 2000.0], [0.1, 0.2]), 64, 3.54e-5, 6)
    pitch = subdivision_curves(SinusoidSet.from_arrays([1.0], [3000.0], [1.0]), 64, 3.54e-5, 6)
    return roll, pitch


def test_round_trip_bit_exact(tmp_path):
    roll, pitch = curves()
    path = sc.write_sidecar(tmp_path / "a.lapj", roll, pitch, height=48)
    back = sc.read_sidecar(path)
    assert np.array_equal(back.roll, roll) and np.array_equal(back.pitch, pitch)
    assert (back.width, back.subdivisions, back.height) == (64, 6, 48)


def test_header_layout():
    roll, pitch = curves()
    data = sc.encode(roll, pitch, height=48)
    assert data[:4] == b"LAPJ"
    assert struct.unpack("<IIIII", data[4:24]) == (1, 64, 2, 6, 48)
    assert len(data) == 24 + 8 * 2 * 6 * 64
    assert struct.unpack("<d", data[24:32])[0] == roll[0, 0]
    # pitch block follows all roll records
    assert struct.unpack("<d", data[24 + 8 * 6 * 64:32 + 8 * 6 * 64])[0] == pitch[0, 0]


def test_single_direction():
    back = sc.decode(sc.encode(np.arange(5.0)))
    assert back.pitch is None and back.roll.tolist() == [[0, 1, 2, 3, 4]]


@pytest.mark.parametrize("mutate", [
    lambda d: b"XXXX" + d[4:],
    lambda d: d[:4] + struct.pack("<I", 9) + d[8:],
    lambda d: d[:-8],
    lambda d: d[:10],
    lambda d: d[:24] + struct.pack("<d", float("nan")) + d[32:],
])
def test_corrupt_sidecars_rejected(mutate):
    roll, pitch = curves()
    with pytest.raises(sc.SidecarError):
        sc.decode(mutate(sc.encode(roll, pitch)))


def test_flow_storage_elides_rows():
    roll, pitch = curves()
    flow = build_jitter_map(roll[0], pitch[0], 30)
    data = sc.encode_flow(flow)
    assert len(data) == 24 + 8 * 2 * 64
    assert np.array_equal(sc.decode_flow(data), flow)
    flow[3, 3, 0] += 1
    with pytest.raises(ValueError):
        sc.encode_flow(flow)


def test_csv_round_trip(tmp_path):
    roll, pitch = curves()
    p = sc.write_curves_csv(tmp_path / "c.csv", roll[0], pitch[0])
    lines = p.read_text().splitlines()
    assert lines[0] == "column,roll_px,pitch_px"
    assert lines[1].split(",")[0] == "1"
    r, q = sc.read_curves_csv(p)
    assert np.array_equal(r, roll[0]) and np.array_equal(q, pitch[0])
