import csv
import json
import math

import pytest

import climrisk


def test_pricing_reduces_to_black_scholes():
    bs = climrisk.bs_call(100.0, 80.0, 0.3, 5.0, 0.02)
    assert climrisk.lewis_call(100.0, 80.0, 0.3, 5.0, 0.02) == pytest.approx(bs, rel=1e-10)
    assert climrisk.lewis_call(100.0, 80.0, 0.3, 5.0, 0.02, lam=0.5, theta=0.2) < bs


def test_fvm_round_trip():
    v, s, d, t, r = 150.0, 0.25, 90.0, 4.0, 0.03
    e = climrisk.bs_call(v, d, s, t, r)
    d1 = (math.log(v / d) + (r + 0.5 * s * s) * t) / (s * math.sqrt(t))
    n_d1 = 0.5 * math.erfc(-d1 / math.sqrt(2.0))
    sol = climrisk.solve_fvm(e, s * v * n_d1 / e, d, t, r)
    assert sol["asset_value"] == pytest.approx(v, rel=1e-10)
    assert sol["asset_vol"] == pytest.approx(s, rel=1e-10)


def test_risk_measures_and_shock():
    losses = [float(i) for i in range(1, 101)]
    assert climrisk.var(losses, 0.95) == pytest.approx(95.05)
    assert climrisk.expected_shortfall(losses, 0.95) == pytest.approx(98.0)
    assert climrisk.gordon_shock(0.0, 0.1, 0.2) == 0.0
    assert climrisk.cluster_alpha(0.5, 0.2) == pytest.approx(0.1)


def test_errors_carry_kind():
    with pytest.raises(climrisk.ClimriskError) as info:
        climrisk.var([], 0.95)
    assert info.value.kind == "EmptyLosses"
    with pytest.raises(climrisk.ClimriskError) as info:
        climrisk.bs_call(-1.0, 1.0, 0.2, 1.0, 0.0)
    assert info.value.kind == "DomainError"


def test_fixture_pipeline(tmp_path):
    climrisk.write_fixture(tmp_path, seed=5, firms_per_cluster=5, n_paths=300)
    truth = json.loads((tmp_path / "truth.json").read_text())
    assert len(truth["firms"]) == 40
    with pytest.raises(climrisk.ClimriskError) as info:
        climrisk.run(tmp_path / "run.json", stage="simulate")
    assert info.value.exit_code == 3
    written = climrisk.run(tmp_path / "run.json", stage="all", threads=2)
    report = tmp_path / "out" / "report.csv"
    assert report in written
    with report.open() as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 12
    assert all(float(row["delta_L"]) >= 0.0 for row in rows)
