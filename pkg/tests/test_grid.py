"""Grid metadata, field containers, ghost extensions and snapshot I/O."""

import numpy as np
import pytest

from qtf.grid import (
    BCKind,
    DomainSpec,
    QTensorField,
    ScalarField,
    VelocityField,
    apply_velocity_bcs,
    pad_mirror,
    pad_odd,
    read_snapshot,
    write_snapshot,
)

RNG = np.random.default_rng(7)


def test_domain_validation():
    with pytest.raises(ValueError):
        DomainSpec(4, 8, 8)
    with pytest.raises(ValueError):
        DomainSpec(8, 8, 8, lx=0.0)
    with pytest.raises(ValueError):
        DomainSpec(9, 8, 8)  # periodic needs even counts
    DomainSpec(9, 9, 9, bc_kind="box")  # odd is fine on box domains


def test_domain_properties():
    dom = DomainSpec(8, 16, 32, 1.0, 2.0, 4.0, bc_kind="box")
    assert dom.shape == (8, 16, 32)
    assert dom.spacing == (0.125, 0.125, 0.125)
    assert dom.cell_volume == pytest.approx(0.125**3)
    assert not dom.periodic
    assert dom.bc_kind is BCKind.BOX


def test_coords_offsets():
    per = DomainSpec(8, 8, 8, 1.0, 1.0, 1.0)
    box = DomainSpec(8, 8, 8, 1.0, 1.0, 1.0, bc_kind="box")
    x_per = per.coords()[0].ravel()
    x_box = box.coords()[0].ravel()
    assert x_per[0] == 0.0 and x_per[-1] == pytest.approx(7.0 / 8.0)
    # box samples live at cell centers, half a cell off the walls
    assert x_box[0] == pytest.approx(1.0 / 16.0)
    assert x_box[-1] == pytest.approx(15.0 / 16.0)


def test_domain_dict_round_trip():
    dom = DomainSpec(8, 10, 12, 1.0, 2.0, 3.0, bc_kind="box")
    assert DomainSpec.from_dict(dom.to_dict()) == dom


def test_field_shape_validation():
    dom = DomainSpec(8, 8, 8)
    with pytest.raises(ValueError):
        VelocityField(dom, np.zeros((8, 8, 8)))
    with pytest.raises(ValueError):
        QTensorField(dom, np.zeros((8, 8, 8, 3)))
    assert ScalarField(dom).data.shape == (8, 8, 8)
    assert VelocityField(dom).data.shape == (8, 8, 8, 3)
    assert QTensorField(dom).data.shape == (8, 8, 8, 5)


def test_field_copy_is_independent():
    dom = DomainSpec(8, 8, 8)
    f = ScalarField(dom, RNG.standard_normal(dom.shape))
    g = f.copy()
    g.data[0, 0, 0] += 1.0
    assert f.data[0, 0, 0] != g.data[0, 0, 0]


def test_magnitudes():
    dom = DomainSpec(8, 8, 8)
    s = ScalarField(dom, -2.0 * np.ones(dom.shape))
    assert np.all(s.magnitude() == 2.0)
    u = VelocityField(dom, np.broadcast_to([3.0, 4.0, 0.0], dom.shape + (3,)).copy())
    assert np.allclose(u.magnitude(), 5.0)
    q = QTensorField(dom, np.broadcast_to([1.0, 0, 0, 1.0, 0], dom.shape + (5,)).copy())
    # diag(1,1,-2) has Frobenius magnitude sqrt(6)
    assert np.allclose(q.magnitude(), np.sqrt(6.0))


def test_pad_mirror_values():
    data = np.arange(4.0)[:, None, None] * np.ones((1, 2, 2))
    ext = pad_mirror(data, 0, 1)
    assert ext.shape[0] == 6
    assert np.all(ext[0] == data[0])    # f_{-1} = f_0
    assert np.all(ext[-1] == data[-1])  # f_n = f_{n-1}


def test_pad_odd_values():
    data = np.arange(1.0, 5.0)[:, None, None] * np.ones((1, 2, 2))
    ext = pad_odd(data, 0, 1)
    assert np.all(ext[0] == -data[0])
    assert np.all(ext[-1] == -data[-1])
    assert np.all(ext[1:-1] == data)


def test_apply_velocity_bcs():
    box = DomainSpec(8, 8, 8, bc_kind="box")
    u = VelocityField(box, RNG.standard_normal(box.shape + (3,)))
    v = apply_velocity_bcs(u)
    for axis in range(3):
        assert np.all(np.take(v.data, 0, axis=axis) == 0.0)
        assert np.all(np.take(v.data, -1, axis=axis) == 0.0)
    # interior untouched
    assert np.array_equal(v.data[1:-1, 1:-1, 1:-1], u.data[1:-1, 1:-1, 1:-1])
    per = DomainSpec(8, 8, 8)
    w = VelocityField(per, RNG.standard_normal(per.shape + (3,)))
    assert apply_velocity_bcs(w) is w


@pytest.mark.parametrize("cls,name", [
    (ScalarField, "pressure"),
    (VelocityField, "velocity"),
    (QTensorField, "qtensor"),
])
def test_snapshot_round_trip_bit_exact(tmp_path, cls, name):
    dom = DomainSpec(8, 10, 12, 1.0, 2.0, 3.0, bc_kind="box")
    field = cls(dom, RNG.standard_normal(dom.shape + cls.ncomp_shape))
    path = tmp_path / f"{name}.bin"
    write_snapshot(path, field, 1.25, name)
    back, t, label = read_snapshot(path)
    assert t == 1.25 and label == name
    assert back.domain == dom
    assert np.array_equal(back.data, field.data)


def test_snapshot_layout_x_fastest(tmp_path):
    import json

    dom = DomainSpec(8, 8, 8)
    data = np.zeros(dom.shape)
    data[:, 0, 0] = np.arange(8.0)  # varies along x only
    path = tmp_path / "s.bin"
    write_snapshot(path, ScalarField(dom, data), 0.0, "s")
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        raw = np.frombuffer(fh.read(), dtype="<f8")
    assert header["layout"] == "x-fastest"
    assert header["endianness"] == "little"
    # the first nx values on disk sweep the x axis
    assert np.array_equal(raw[:8], np.arange(8.0))
