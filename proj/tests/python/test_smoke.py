import math

import pytest

import fastgate as fg

CA40 = 39.9626 * 1.66053906660e-27


def test_exponent_small_q():
    p = fg.MathieuParams(0.01, 0.05)
    assert fg.characteristic_exponent(p) == pytest.approx(math.sqrt(0.01 + 0.05**2 / 2), rel=0.01)


def test_mu_is_one_without_drive():
    assert fg.mu_factor(fg.MathieuParams(0.04, 0.0), math.pi) == 1.0


def test_unstable_raises():
    with pytest.raises(fg.FastgateError, match="Unstable"):
        fg.characteristic_exponent(fg.MathieuParams(0.3, 0.9))


def test_paul_chi():
    assert fg.chi_paul(1 / 6) == pytest.approx(-1.399e-2, abs=1e-4)


def test_frag_schedule():
    s = fg.frag_schedule(0.5, 0.3, 0.1, 4)
    assert sum(s.group_counts) == 0
    assert list(s.group_counts) == [-4, 8, -8, 8, -8, 4]
    assert s.gate_time == pytest.approx(1.0)


def test_empty_schedule_infidelity():
    s = fg.PulseSchedule()
    spec = fg.harmonic_spectrum(-0.014)
    e = fg.gate_errors(s, spec, 1.0)
    r = fg.infidelity(e, fg.ThermalState(), spec)
    assert r.infidelity == pytest.approx(2 / 3 * (math.pi / 4) ** 2, rel=1e-12)


def test_optimize_and_sweep():
    model = fg.ideal_model(-0.014, 2.31)
    c = fg.OptimizationConfig()
    c.time_bound = 1.2
    c.starts = 16
    c.laser = fg.LaserConfig(0.2)
    r = fg.optimize_gate(model, c)
    assert r.achieved_gate_time <= 1.2
    assert r.infidelity < 1e-12
    rows = fg.sweep("thermal_n", [0.1, 1.0, 100.0], r, model, c)
    assert rows[0].infidelity == pytest.approx(r.infidelity, rel=1e-12)
    assert rows[2].infidelity >= rows[1].infidelity


def test_oracle_matches_floquet():
    trap = fg.make_paul_trap(2 * math.pi * 1e6, fg.MathieuParams(0.0, 0.2), 1 / 6, CA40)
    train = fg.instantaneous_train(fg.frag_schedule(0.55, 0.36, 0.21, 2, math.pi))
    opts = fg.OracleOptions()
    opts.steps_per_rf_period = 100
    o = fg.oracle_infidelity(trap, train, fg.ThermalState(), opts)
    f = fg.floquet_infidelity(train, fg.mode_spectrum(trap), opts.laser, fg.ThermalState())
    assert o.infidelity == pytest.approx(f.infidelity, rel=0.05)
