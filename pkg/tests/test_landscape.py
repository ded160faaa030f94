import math

import pytest

from needle_lab.analytic import probability
from needle_lab.core import GridCell, NeedleLabError
from needle_lab.landscape import (
    AspectSweepSpec,
    StructureNotFound,
    evaluate_aspect,
    find_lambda_thresholds,
    find_minima,
    psi_marginal_oracle,
    sweep_aspect,
    sweep_length,
)


def test_length_sweep_examples():
    rows = sweep_length("2d-needle", [1.0], [math.inf])
    assert rows[0].p == pytest.approx(2 / math.pi, abs=1e-15)
    rows = sweep_length("2d-needle", [1.0, math.sqrt(2), 1.6, 2.5], [1.0])
    assert [r.p for r in rows[1:]] == [1.0, 1.0, 1.0]
    assert rows[0].p < 1
    assert sweep_length("3d-needle", [10.0], [1.0])[0].p < 1


def test_length_sweep_grouping_and_order():
    rows = sweep_length("2d-sc", [2.0, 0.5, 1.0], [1.0, 2.0], sigma_over_b=0.1, threads=3)
    assert [r.series for r in rows] == [1.0] * 3 + [2.0] * 3
    assert [r.abscissa for r in rows] == [0.5, 1.0, 2.0] * 2


def test_length_sweep_single_family_matches_direct():
    rows = sweep_length("3d-sc", [0.5, 1.5, 3.0], [math.inf], sigma_over_b=0.2)
    for r in rows:
        assert r.p == pytest.approx(probability("bnp-3d-sc", 3 * r.abscissa, math.inf, 3.0, 0.6).value, abs=1e-14)


def test_length_sweep_depends_only_on_ratios():
    a = sweep_length("3d-sc", [0.4, 1.2, 2.7], [1.5], sigma_over_b=0.1, b=3.0)
    b = sweep_length("3d-sc", [0.4, 1.2, 2.7], [1.5], sigma_over_b=0.1, b=7.5)
    for ra, rb in zip(a, b):
        assert ra.p == pytest.approx(rb.p, abs=1e-12)


def test_aspect_examples():
    spec = AspectSweepSpec(1.0, t_min=1.0, t_max=2.0, t_steps=3)
    assert sweep_aspect(spec)[0].p == pytest.approx(3 / math.pi, abs=1e-15)
    tiny = AspectSweepSpec(1e-8, t_min=1.0, t_max=5.0, t_steps=5)
    assert max(r.p for r in sweep_aspect(tiny)) < 1e-3
    spec3 = AspectSweepSpec(1.5, variant="3d-needle", t_min=1.0, t_max=2.0, t_steps=5)
    assert float(evaluate_aspect(spec3, [1.605])[0]) == pytest.approx(0.732816, abs=1e-4)


def test_aspect_spec_validation():
    with pytest.raises(NeedleLabError):
        AspectSweepSpec(0.0)
    with pytest.raises(NeedleLabError):
        AspectSweepSpec(1.0, t_min=0.5)
    with pytest.raises(NeedleLabError):
        AspectSweepSpec(1.0, sigma_l=0.1, variant="2d-needle")
    with pytest.raises(NeedleLabError):
        AspectSweepSpec(1.0, variant="bnp-2d-needle")


def test_fat_rods_flagged_certain():
    # sigma_l * sqrt(lam * t) >= 1 means sigma >= b
    rows = sweep_aspect(AspectSweepSpec(1.0, sigma_l=0.8, t_min=1.0, t_max=3.0, t_steps=5, variant="2d-sc"))
    assert rows[-1].p == 1.0


@pytest.mark.parametrize("lam", [0.5, 0.8, 1.5])
def test_flat_at_square_cell(lam):
    h = 1e-4

    def p(t):
        return probability("2d-needle", 1.0, math.sqrt(t / lam), 1 / math.sqrt(lam * t)).value

    assert abs(p(1 + h) - p(1 - h)) / (2 * h) <= 1e-4


@pytest.mark.parametrize("lam,count", [(0.5, 1), (0.8, 2), (0.9, 2), (1.2, 1)])
def test_minima_count_scenario(lam, count):
    rep = find_minima(AspectSweepSpec(lam))
    assert rep.count == count


def test_minima_global_location():
    assert find_minima(AspectSweepSpec(0.5)).minima[0][0] == 1.0
    rep = find_minima(AspectSweepSpec(0.8))
    assert rep.global_t == 1.0
    rep = find_minima(AspectSweepSpec(0.9))
    assert rep.global_t > 1.0
    t_lo, t_hi = sorted(t for t, _ in rep.minima)
    assert t_lo == 1.0 and t_hi > 1.0


def test_3d_minimum():
    rep = find_minima(AspectSweepSpec(1.5, variant="3d-needle", t_max=3.0, t_steps=100))
    t, p = rep.minima[rep.global_min]
    assert t == pytest.approx(1.605, abs=5e-3)
    assert p == pytest.approx(0.732816, abs=1e-4)


def test_thresholds_ordered():
    th = find_lambda_thresholds()
    assert th.lambda1 < th.lambda2 < th.lambda3
    assert th.search_interval == (0.5, 1.2)


def test_thresholds_need_a_flip():
    with pytest.raises(StructureNotFound):
        find_lambda_thresholds(lam_lo=0.5, lam_hi=0.6)
    with pytest.raises(NeedleLabError):
        find_lambda_thresholds("3d-needle")


def test_oracle_examples():
    g = GridCell(math.sqrt(6), math.sqrt(6))
    assert psi_marginal_oracle(0.0, None, g) == 0.0
    assert psi_marginal_oracle(3.0, None, g) == pytest.approx(0.733559, abs=1e-4)
    g3 = GridCell(3, 3)
    assert psi_marginal_oracle(5.0, 0.3, g3) == pytest.approx(probability("3d-sc", 5, 3, 3, 0.3).value, abs=1e-5)
    assert psi_marginal_oracle(1.0, 3.0, g3) == 1.0
