import numpy as np
import pytest

from subricci.contact import FrameSpec
from subricci.expr import parse
from subricci.flow import FlowOptions, integrate_flow
from subricci.mcp import DEFAULT_T_GRID, density_change, mcp_check_many, mcp_pointwise_check
from subricci.models import lifted, noninvariant_perturbation, sample_phase_points

XYZ = ("x", "y", "z")


def test_grid():
    assert len(DEFAULT_T_GRID) == 100 and DEFAULT_T_GRID[0] == 0 and DEFAULT_T_GRID[-1] == 0.99


def test_heisenberg_passes_with_r_zero(heis):
    m, lf = heis
    reps = mcp_check_many(lf, sample_phase_points(m, 4, seed=30, cs=lf.cs), 0.0)
    for rp in reps:
        assert rp.status == "pass", rp.as_dict()
        assert rp.r == 0.0
        assert rp.max_St_distortion_product <= 1 + 1e-6
        assert rp.loewner_min_eig >= -1e-7


def test_heisenberg_loewner_with_large_h0(heis):
    _, lf = heis
    alpha = np.array([0.1, 0.2, 0.0, 0.8, 0.6, 4.0])
    rp = mcp_pointwise_check(lf, alpha, 0.0)
    assert abs(rp.h0) > 1
    assert rp.passed and rp.loewner_min_eig >= -1e-7


def test_hopf_passes_with_inferred_r(hopf):
    m, lf = hopf
    reps = mcp_check_many(lf, sample_phase_points(m, 3, seed=31, cs=lf.cs))
    for rp in reps:
        assert rp.status == "pass", rp.as_dict()
        assert rp.r == pytest.approx(rp.hypothesis_margins["r_inferred"])
        assert rp.r > 0


def test_equality_case(heis):
    # curvature replaced by the comparison constant saturates the bound
    _, lf = heis
    alpha = np.array([0.0, 0.0, 0.0, 1.0, 0.0, 0.0])
    tr = integrate_flow(lf, alpha, 1.0, FlowOptions(variational=False))
    r = 1.5
    R11 = np.full(len(tr.t), 2 * r * tr.H[0])
    rp = mcp_pointwise_check(lf, alpha, r, samples=(tr, R11, np.zeros(len(tr.t))))
    assert rp.passed
    assert np.max(np.abs(rp.extra["product"] - 1)) <= 1e-6


def test_noninvariant_is_skipped():
    m = noninvariant_perturbation()
    lf = lifted(m)
    reps = mcp_check_many(lf, sample_phase_points(m, 3, seed=0, cs=lf.cs))
    assert all(rp.status == "skipped" for rp in reps)
    assert all("hypotheses" in rp.reason for rp in reps)
    d = reps[0].as_dict()
    assert d["pass"] is False and d["max_St_distortion_product"] is None


def test_report_dict_keys(heis):
    _, lf = heis
    d = mcp_pointwise_check(lf, np.array([0, 0, 0, 1.0, 0, 1.0]), 0.0).as_dict()
    assert {"alpha", "H", "h0", "r", "status", "pass", "hypothesis_margins",
            "max_St_distortion_product", "loewner_min_eig"} <= set(d)


@pytest.fixture(scope="module")
def heis_points(heis):
    m, _ = heis
    return FrameSpec(XYZ, m.spec.v1, m.spec.v2, box=((-0.5, 0.5),) * 3).sample_points(20, seed=5)


F_QUAD = parse("(x^2 + y^2 + z^2)/2", XYZ)


def test_density_identity_at_zero(heis, heis_points):
    _, lf = heis
    rep = density_change(lf, F_QUAD, heis_points, 0.0)
    assert np.all(rep.jacobian_route == 1) and np.all(rep.riccati_route == 1)


def test_density_routes_agree(heis, heis_points):
    _, lf = heis
    rep = density_change(lf, F_QUAD, heis_points, 0.3)
    assert rep.max_rel_diff <= 1e-4
    assert np.allclose(rep.det_B0, 1.0, atol=1e-12)
