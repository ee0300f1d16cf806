import numpy as np
import pytest

from subricci import fields as F
from subricci.errors import DomainError
from subricci.invariants import (LiftedFields, curvatures, darboux0, darboux_pairings, hamiltonian_field,
                                 phase_points)
from subricci.models import heisenberg, lifted, noninvariant_perturbation, rotated_heisenberg, sample_phase_points


@pytest.fixture(scope="module")
def noninv():
    m = noninvariant_perturbation()
    return m, lifted(m)


def _rel(a, b):
    return np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b)))


def test_heisenberg_reference_point(heis):
    _, lf = heis
    rec = curvatures(lf, phase_points([0.0, 0.0, 0.0], [1.0, 0.0, 1.0])[None])
    assert rec.h1[0] == pytest.approx(1.0)
    assert rec.h2[0] == pytest.approx(0.0)
    assert rec.h0[0] == pytest.approx(-1.0)
    assert rec.H[0] == pytest.approx(0.5)
    assert rec.ric[0] == pytest.approx(1.0)
    assert rec.kappa[0] == pytest.approx(0.0, abs=1e-14)
    assert rec.r[0] == pytest.approx(0.0, abs=1e-14)


def test_zero_energy_rejected(heis):
    _, lf = heis
    with pytest.raises(DomainError):
        curvatures(lf, phase_points([0.0, 0.0, 0.0], [0.0, 0.0, 1.0])[None])


def test_h0_is_conserved_on_heisenberg(heis):
    m, lf = heis
    pts = sample_phase_points(m, 50, seed=11, cs=lf.cs)
    assert np.max(np.abs(F.apply_vf(lf.Hvec, lf.h[0])(pts))) <= 1e-12


@pytest.mark.parametrize("which", ["hopf", "noninv"])
def test_bracket_of_lifts(which, hopf, noninv):
    m, lf = hopf if which == "hopf" else noninv
    pts = sample_phase_points(m, 40, seed=5, cs=lf.cs)
    b = F.lie_bracket(lf.h_vec[1], lf.h_vec[2])
    target = hamiltonian_field(lf.hh(1, 2))
    assert np.max(np.abs(b(pts) - target(pts))) <= 1e-9


@pytest.mark.parametrize("which", ["hopf", "noninv"])
def test_xi_annihilators(which, hopf, noninv):
    m, lf = hopf if which == "hopf" else noninv
    pts = sample_phase_points(m, 40, seed=6, cs=lf.cs)
    assert np.max(np.abs(F.apply_vf(lf.xi1, lf.H)(pts))) <= 1e-12
    assert np.max(np.abs(lf.beta(lf.xi2(pts), pts))) <= 1e-12


def test_a_vanishes_for_bundle_type(heis, hopf):
    for m, lf in (heis, hopf):
        rec = curvatures(lf, sample_phase_points(m, 50, seed=8, cs=lf.cs))
        assert np.max(np.abs(rec.a)) <= 1e-10


def test_two_routes_to_ric(noninv, hopf):
    for m, lf in (noninv, hopf):
        rec = curvatures(lf, sample_phase_points(m, 50, seed=9, cs=lf.cs))
        assert _rel(rec.ric, rec.ric_alt) <= 1e-8
        assert np.max(np.abs(rec.a - rec.a_algebraic)) <= 1e-10


def test_ric_scales_quadratically(heis):
    m, lf = heis
    pts = sample_phase_points(m, 30, seed=1, cs=lf.cs)
    double = pts.copy()
    double[:, 3:] *= 2
    assert np.allclose(curvatures(lf, double).ric, 4 * curvatures(lf, pts).ric, rtol=1e-12)


@pytest.mark.parametrize("which", ["heis", "hopf", "noninv"])
def test_darboux_frame_at_zero(which, heis, hopf, noninv):
    m, lf = {"heis": heis, "hopf": hopf, "noninv": noninv}[which]
    pts = sample_phase_points(m, 50, seed=12, cs=lf.cs)
    frame = darboux0(lf, pts)
    worst = max(np.max(np.abs(v)) for v in darboux_pairings(frame).values())
    assert worst <= 1e-9
    for k in ("e1", "e2", "e3"):
        assert np.max(np.abs(frame[k][:3])) <= 1e-12
    dh0 = lf.h[0].jet(F.Point(pts), 1).gradient()
    assert np.max(np.abs(np.sum(dh0 * frame["e1"], axis=0))) <= 1e-10


def test_rotation_invariance(heis):
    m, lf = heis
    rot = lifted(rotated_heisenberg(0.7))
    pts = sample_phase_points(m, 100, seed=13, cs=lf.cs)
    a, b = curvatures(lf, pts), curvatures(rot, pts)
    for name in ("ric", "r", "kappa", "H", "h0"):
        assert _rel(getattr(b, name), getattr(a, name)) <= 1e-8, name


def test_order9_recompute(noninv):
    m, lf8 = noninv
    lf9 = LiftedFields(m.structure(9))
    pts = sample_phase_points(m, 30, seed=14, cs=lf8.cs)
    a, b = curvatures(lf8, pts), curvatures(lf9, pts)
    for name in ("ric", "r", "kappa", "chi1"):
        assert _rel(getattr(b, name), getattr(a, name)) <= 1e-9, name


def test_low_order_exhausts():
    from subricci.errors import OrderExhaustedError

    lf = LiftedFields(heisenberg().structure(4))
    with pytest.raises(OrderExhaustedError):
        curvatures(lf, phase_points([0.1, 0.2, 0.3], [1.0, 0.0, 1.0])[None])
