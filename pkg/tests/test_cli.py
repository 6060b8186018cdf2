from __future__ import annotations

import json

from restaking.cli import main

FIG_ATOMIC = {
    "validators": [{"id": "v1", "stake": 20}, {"id": "v2", "stake": 20}],
    "services": [{"id": "s", "threshold": 0.5, "prize": 5}],
    "allocations": [
        {"validator": "v1", "service": "s", "amount": 20},
        {"validator": "v2", "service": "s", "amount": 20},
    ],
}

HALF_ALLOCATED = {
    "validators": [{"id": "v", "stake": 2}],
    "services": [{"id": "s", "threshold": 1, "prize": 1}],
    "allocations": [{"validator": "v", "service": "s", "amount": 1}],
}


def write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


class TestCheck:
    def test_robust_below_boundary(self, tmp_path, capsys):
        path = write(tmp_path, "net.json", FIG_ATOMIC)
        assert main(["check", path, "--budget", "14"]) == 0
        out = capsys.readouterr().out
        assert "robust" in out and "symmetric" in out

    def test_insecure_with_witness(self, tmp_path, capsys):
        path = write(tmp_path, "net.json", HALF_ALLOCATED)
        assert main(["check", path]) == 1
        out = capsys.readouterr().out
        assert "NOT" in out
        assert "s=1.000000" in out  # witness uses the full allocation

    def test_malformed_json_is_input_error(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{\"validators\": [", encoding="utf-8")
        assert main(["check", str(path)]) == 2
        assert "error" in capsys.readouterr().err

    def test_engines_agree(self, tmp_path, capsys):
        path = write(tmp_path, "net.json", FIG_ATOMIC)
        assert main(["check", path, "--budget", "15", "--oracle", "--mip"]) == 1
        out = capsys.readouterr().out
        assert "symmetric" in out and "mip" in out and "brute-force" in out

    def test_asymmetric_routes_to_mip(self, tmp_path, capsys):
        payload = json.loads(json.dumps(FIG_ATOMIC))
        payload["validators"][1]["stake"] = 25
        path = write(tmp_path, "net.json", payload)
        assert main(["check", path, "--budget", "14"]) == 0
        assert "mip" in capsys.readouterr().out

    def test_fraction_flag(self, tmp_path):
        payload = {
            "validators": [{"id": "v1", "stake": 9}, {"id": "v2", "stake": 9},
                            {"id": "v3", "stake": 9}],
            "services": [{"id": s, "threshold": 1 / 3, "prize": 1} for s in "abc"],
            "allocations": [
                {"validator": f"v{i}", "service": s, "amount": 6}
                for i in (1, 2, 3)
                for s in "abc"
            ],
        }
        path = write(tmp_path, "net.json", payload)
        # one Byzantine service breaks robustness at budget 2
        assert main(["check", path, "--budget", "2"]) == 0
        assert main(["check", path, "--budget", "2", "--fraction", str(1 / 3)]) == 1

    def test_dump_mip(self, tmp_path):
        path = write(tmp_path, "net.json", FIG_ATOMIC)
        dump = tmp_path / "program.lp"
        assert main(["check", path, "--dump-mip", str(dump)]) == 0
        text = dump.read_text(encoding="utf-8")
        assert text.startswith("Maximize") and "Binaries" in text

    def test_oversized_asymmetric_network_is_a_capability_error(self, tmp_path, capsys):
        validators = [{"id": f"v{i}", "stake": 10 + i} for i in range(25)]
        services = [{"id": f"s{j}", "threshold": 0.5, "prize": 1} for j in range(25)]
        allocations = [
            {"validator": f"v{i}", "service": f"s{i}", "amount": 5} for i in range(25)
        ]
        path = write(tmp_path, "net.json", {
            "validators": validators, "services": services, "allocations": allocations,
        })
        assert main(["check", path]) == 2
        assert "too large" in capsys.readouterr().err

    def test_oracle_guard_on_large_networks(self, tmp_path, capsys):
        validators = [{"id": f"v{i}", "stake": 10} for i in range(9)]
        services = [{"id": "s", "threshold": 0.5, "prize": 1}]
        path = write(tmp_path, "net.json", {
            "validators": validators, "services": services, "allocations": [],
        })
        assert main(["check", path, "--oracle"]) == 2
        assert "brute-force" in capsys.readouterr().err


class TestSweep:
    def test_fig3_preset_writes_three_files(self, tmp_path, capsys):
        config = write(
            tmp_path, "sweeps.json",
            {"sweeps": [{"name": "fig3", "degree_step": 3.0, "sizes": [10, 11, 12]}]},
        )
        out = tmp_path / "out"
        assert main(["sweep", config, "--out", str(out)]) == 0
        files = sorted(p.name for p in out.iterdir())
        assert files == ["figure3_n10.csv", "figure3_n11.csv", "figure3_n12.csv"]
        assert "rows" in capsys.readouterr().out

    def test_fig6_preset_columns(self, tmp_path):
        config = write(
            tmp_path, "sweeps.json",
            {"sweeps": [{"name": "fig6", "f_grid": [0.0, 1 / 15]}]},
        )
        out = tmp_path / "out"
        assert main(["sweep", config, "--out", str(out)]) == 0
        header = (out / "figure6.csv").read_text().splitlines()[0]
        assert header == (
            "robustness_threshold,min_budget_base_only,"
            "min_budget_no_base,min_budget_total"
        )

    def test_empty_sweep_list_warns(self, tmp_path, capsys):
        config = write(tmp_path, "sweeps.json", {"sweeps": []})
        assert main(["sweep", config, "--out", str(tmp_path / "out")]) == 0
        assert "warning" in capsys.readouterr().err

    def test_custom_security_sweep(self, tmp_path):
        config = write(
            tmp_path, "sweeps.json",
            {
                "sweeps": [
                    {
                        "name": "custom",
                        "kind": "security",
                        "file": "tiny.csv",
                        "n": 4,
                        "m": 4,
                        "thresholds": [0.5],
                        "degrees": [1.0, 2.0],
                    }
                ]
            },
        )
        out = tmp_path / "out"
        assert main(["sweep", config, "--out", str(out)]) == 0
        lines = (out / "tiny.csv").read_text().splitlines()
        assert len(lines) == 3

    def test_unknown_preset_rejected(self, tmp_path, capsys):
        config = write(tmp_path, "sweeps.json", {"sweeps": [{"name": "zzz"}]})
        assert main(["sweep", config, "--out", str(tmp_path)]) == 2
        assert "unknown sweep preset" in capsys.readouterr().err


class TestIncentives:
    def test_uniform_matrix(self, tmp_path, capsys):
        payload = {
            "validators": [{"id": "v1", "stake": 10}, {"id": "v2", "stake": 10}],
            "services": [
                {"id": "a", "threshold": 0.5, "prize": 1},
                {"id": "b", "threshold": 0.5, "prize": 1},
            ],
            "allocations": [],
            "rewards": {"a": 1.0, "b": 1.0},
            "target_degree": 1.0,
        }
        path = write(tmp_path, "net.json", payload)
        assert main(["incentives", path]) == 0
        out = capsys.readouterr().out
        assert out.count("5.000000") >= 4
        assert "1.000000" in out  # degrees equal the target

    def test_precondition_violation_names_service(self, tmp_path, capsys):
        payload = {
            "validators": [{"id": "v", "stake": 10}],
            "services": [
                {"id": "big", "threshold": 0.5, "prize": 1},
                {"id": "small", "threshold": 0.5, "prize": 1},
            ],
            "allocations": [],
            "rewards": {"big": 100.0, "small": 1.0},
            "target_degree": 1.5,
        }
        path = write(tmp_path, "net.json", payload)
        assert main(["incentives", path]) == 2
        assert "big" in capsys.readouterr().err

    def test_verify_flag(self, tmp_path, capsys):
        payload = {
            "validators": [{"id": "v1", "stake": 10}, {"id": "v2", "stake": 4}],
            "services": [
                {"id": "a", "threshold": 0.5, "prize": 1},
                {"id": "b", "threshold": 0.5, "prize": 1},
            ],
            "allocations": [],
            "rewards": {"a": 2.0, "b": 1.0},
            "target_degree": 1.2,
        }
        path = write(tmp_path, "net.json", payload)
        assert main(["incentives", path, "--verify", "50"]) == 0
        out = capsys.readouterr().out
        assert "max best-response gain" in out
