import csv
import json

import numpy as np
import pytest

from liftns import harness
from liftns.config import ExperimentConfig
from liftns.solver import CFLWarning

SMALL = ExperimentConfig(grid_n=16, dt=0.01, T=0.3, output_dir="unused")


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def affine_report():
    return harness.run_validation(SMALL.with_(rate_mode="affine", r0=1.0, r1=0.5))


class TestRunValidation:
    def test_constant_rate_doubles_tau(self):
        rep = harness.run_validation(SMALL)
        assert rep.passed
        t = np.array([row[0] for row in rep.panel_a])
        tau = np.array([row[3] for row in rep.panel_a])
        assert np.array_equal(tau, 2.0 * t)

    def test_identity_rate_diffs_tiny(self):
        rep = harness.run_validation(SMALL.with_(r0=1.0))
        assert rep.passed
        assert all(c["tol"] <= 1e-8 for c in rep.checks.values())
        for row_a, row_b in zip(rep.panel_a, rep.panel_b):
            assert abs(row_a[1] - row_a[4]) <= 1e-12 * row_a[1]
            assert row_b[4] <= 1e-12

    def test_affine_rate_panel_b_within_budget(self, affine_report):
        assert affine_report.passed
        assert max(row[4] for row in affine_report.panel_b) <= 1e-6

    def test_rows_sorted_and_flags_consistent(self, affine_report):
        t = [row[0] for row in affine_report.panel_a]
        assert t == sorted(t)
        for c in affine_report.checks.values():
            bound_ok = c["value"] >= -c["tol"] if c["value"] < 0 else c["value"] <= c["tol"]
            assert c["ok"] == bound_ok

    def test_divergence_gives_failed_report(self):
        with pytest.warns(CFLWarning):
            rep = harness.run_validation(ExperimentConfig(grid_n=8, dt=5.0, T=500.0, amplitude=1e6))
        assert rep.diverged and rep.status == "FAILED"
        assert "diverged" in rep.error
        assert "FAILED" in harness.render_table(rep)

    def test_fault_injection_detected(self):
        """Damping one mode mid-run keeps the flow dissipative but breaks equivalence."""
        cfg = SMALL.with_(r0=1.0)

        def damp(step, coeffs):
            if step == 15:
                coeffs[:, 1, 1, 1] *= 0.99
            return coeffs

        rep = harness.run_validation(cfg, hook=damp)
        flags = rep.flags
        assert flags["energy_inequality_physical"] and flags["energy_inequality_lifted"]
        assert not flags["energy_match"]
        assert not flags["bkm_invariance"]
        assert rep.status == "FAILED"


class TestCsv:
    def test_headers(self, affine_report, tmp_path):
        a, b, d = harness.emit_csv(affine_report, tmp_path)
        assert read_csv(a)[0] == ["t", "u_l2sq", "cum_dissipation", "tau", "U_l2sq", "cum_dissipation_weighted"]
        assert read_csv(b)[0] == ["t", "bkm_physical", "tau", "bkm_lifted_weighted", "abs_diff"]
        rows = read_csv(d)
        assert rows[0][:3] == ["run", "step", "t"]
        assert len(rows) == 1 + len(affine_report.physical) + len(affine_report.lifted)

    def test_values_round_trip_exactly(self, affine_report, tmp_path):
        a, _, _ = harness.emit_csv(affine_report, tmp_path)
        parsed = [[float(v) for v in row] for row in read_csv(a)[1:]]
        assert parsed == [list(map(float, row)) for row in affine_report.panel_a]
        raw = a.read_bytes()
        assert raw.endswith(b"\n") and b"\r" not in raw

    def test_zero_horizon(self, tmp_path):
        rep = harness.run_validation(SMALL.with_(T=0.0))
        a, b, _ = harness.emit_csv(rep, tmp_path)
        assert read_csv(a)[1:] == [["0", "1.2500000000000004", "0", "0", "1.2500000000000004", "0"]]
        assert len(read_csv(b)) == 2

    def test_rerun_byte_identical(self, tmp_path):
        cfg = SMALL.with_(rate_mode="affine", r0=1.0, r1=0.5, lift_mode="free", dtau=0.02)
        first = harness.write_outputs(harness.run_validation(cfg), tmp_path / "a")
        second = harness.write_outputs(harness.run_validation(cfg), tmp_path / "b")
        for p, q in zip(first, second):
            if p.name != "summary.json":  # carries wall-clock timings
                assert p.read_bytes() == q.read_bytes(), p.name

    def test_unwritable_directory_names_path(self, affine_report, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError, match="file"):
            harness.emit_csv(affine_report, blocker / "sub")


class TestTable:
    def test_headers_present(self, affine_report):
        text = harness.render_table(affine_report)
        for header in (
            "Panel A: Energy Conservation", "Physical time", "Lifted time",
            "||u||_L2^2", "int ||grad u||^2", "||U||_L2^2", "int ||grad U||^2 phi_prime",
            "Panel B: Beale-Kato-Majda Criterion", "int ||omega||_Linf",
            "int ||Omega||_Linf phi_prime^-1", "|Diff|", "tau",
        ):
            assert header in text

    def test_three_decimals_match_csv(self, affine_report, tmp_path):
        a, _, _ = harness.emit_csv(affine_report, tmp_path)
        csv_rows = {row[0]: row for row in read_csv(a)[1:]}
        text = harness.render_table(affine_report)
        panel = text.split("Panel A")[1].split("Panel B")[0]
        table_rows = [line for line in panel.splitlines() if "|" in line and line.strip()[0].isdigit()]
        assert len(table_rows) == affine_report.config.table_rows
        inv = affine_report.invariance
        for line, i in zip(table_rows, harness.table_indices(inv.t, affine_report.config.table_rows)):
            left, right = line.split("|")
            stored = csv_rows[format(inv.t[i], ".17g")]
            expected_left = [f"{float(stored[k]):.3f}" for k in (0, 1, 2)]
            expected_right = [f"{float(stored[k]):.3f}" for k in (3, 4, 5)]
            assert left.split() == expected_left
            assert right.split() == expected_right

    def test_half_convention_labels(self, affine_report):
        rep = harness.RunReport(
            affine_report.config.with_(energy_convention="half"),
            physical=affine_report.physical, lifted=affine_report.lifted,
            lift_map=affine_report.lift_map, invariance=affine_report.invariance,
            checks=affine_report.checks,
        )
        text = harness.render_table(rep)
        assert "0.5||u||^2" in text and "E0 = 0.625" in text

    def test_table_indices(self):
        t = np.linspace(0, 5, 5001)
        assert harness.table_indices(t, 5) == [1000, 2000, 3000, 4000, 5000]
        assert harness.table_indices(np.array([0.0]), 5) == [0]


class TestSummary:
    def test_json_contents(self, affine_report, tmp_path):
        harness.write_outputs(affine_report, tmp_path)
        data = json.loads((tmp_path / "summary.json").read_text())
        assert data["status"] == "PASS"
        assert set(data["checks"]) == set(affine_report.checks)
        assert "grid_n = 16" in data["config"]
