import numpy as np
import pytest

from akbrst.curvature import darboux_frame
from akbrst.frames import (
    build_frame_system,
    build_orthonormal_frame,
    build_unitary_frame,
    regauge,
    verify_frame_identities,
)
from akbrst.manifolds import standard_surface

from .conftest import BUILTIN_NAMES, max_abs


@pytest.mark.parametrize("name", BUILTIN_NAMES)
def test_all_vielbein_identities(ambients, name):
    amb = ambients[name]
    worst = {}
    for x in amb.manifold.sample_points(20, seed=1):
        for k, v in verify_frame_identities(build_frame_system(amb, standard_surface(), x)).items():
            worst[k] = max(worst.get(k, 0.0), v)
    assert max(worst.values()) < 1e-10, worst
    for key in ("RA1", "JA3", "CH5", "CBA3", "EIG-J-vec", "EIG-eps-covec"):
        assert key in worst


def test_orthonormal_at_nilmanifold_point(nil):
    F = build_orthonormal_frame(nil, [1.0, 0, 0, 0])
    E = F.E.value
    g = nil.g([1.0, 0, 0, 0])
    assert max_abs(E.T @ g @ E - np.eye(4)) < 1e-12


@pytest.mark.parametrize("builder", [build_unitary_frame, darboux_frame])
def test_adapted_frames_make_J_standard(nil, builder):
    x = np.array([0.3, -0.1, 0.2, 0.5])
    F = builder(nil, x)
    E, Einv = F.E.value, F.Einv.value
    Jf = Einv @ nil.J(x) @ E
    assert max_abs(Jf @ Jf + np.eye(4)) < 1e-12
    assert max_abs(Jf + Jf.T) < 1e-12


def test_regauge_preserves_identities(nil):
    rng = np.random.default_rng(0)
    Q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
    x = nil.manifold.sample_points(1, seed=2)[0]
    orth = regauge(build_orthonormal_frame(nil, x), Q)
    res = verify_frame_identities(build_frame_system(nil, standard_surface(), x, orth=orth))
    assert max(res.values()) < 1e-10
