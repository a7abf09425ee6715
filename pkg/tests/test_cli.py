"""End-to-end CLI tests: exit codes, file outputs, determinism."""
import json


from densesearch import DenseNetConfig, densenet121_config, estimate_resources, validate_config
from densesearch import SearchSpace
from densesearch.cli import main


def run_config_dict(seed=0, iterations=400):
    return {
        "space": {
            "num_stages": 2,
            "kernel_choices": [3, 5],
            "growth_choices": [2, 4],
            "layers_min": 2,
            "layers_max": 4,
            "stem_choices": [8],
            "depth_budget": 8,
        },
        "objective": {
            "alphas": [1.0, 1.0],
            "beta": 0.1,
            "rho_max": 20,
            "flops_budget": 10 ** 12,
            "params_budget": 10 ** 9,
        },
        "search": {
            "population_size": 8,
            "iterations": iterations,
            "prune_period": min(100, max(1, iterations // 2)),
            "population_cap": 8,
            "seed": seed,
        },
    }


def write_run_config(path, data):
    path.write_text(json.dumps(data, indent=2))


OUTPUT_FILES = ("best_architecture.json", "trajectory.csv",
                "entropy_report.csv", "fit_report.csv")


class TestSearchCommand:
    def test_happy_path_writes_four_files(self, tmp_path, capsys):
        config = tmp_path / "run.json"
        write_run_config(config, run_config_dict())
        out = tmp_path / "out"
        code = main(["search", "--config", str(config), "--out", str(out)])
        assert code == 0
        for name in OUTPUT_FILES:
            assert (out / name).is_file(), name
        printed = capsys.readouterr().out
        assert "final objective:" in printed
        assert "params:" in printed

    def test_unknown_key_exits_two_and_names_it(self, tmp_path, capsys):
        data = run_config_dict()
        data["mystery_knob"] = True
        config = tmp_path / "run.json"
        write_run_config(config, data)
        code = main(["search", "--config", str(config), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "mystery_knob" in capsys.readouterr().err

    def test_invalid_json_exits_two_with_line(self, tmp_path, capsys):
        config = tmp_path / "run.json"
        config.write_text('{\n  "space": [,\n}')
        code = main(["search", "--config", str(config), "--out", str(tmp_path / "o")])
        assert code == 2
        assert "line 2" in capsys.readouterr().err

    def test_missing_config_exits_two(self, tmp_path, capsys):
        code = main(["search", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "o")])
        assert code == 2

    def test_infeasible_initial_exits_three(self, tmp_path, capsys):
        data = run_config_dict()
        data["objective"]["params_budget"] = 1
        config = tmp_path / "run.json"
        write_run_config(config, data)
        code = main(["search", "--config", str(config), "--out", str(tmp_path / "o")])
        assert code == 3

    def test_refuses_overwrite_without_force(self, tmp_path, capsys):
        config = tmp_path / "run.json"
        write_run_config(config, run_config_dict(iterations=50))
        out = tmp_path / "out"
        assert main(["search", "--config", str(config), "--out", str(out)]) == 0
        assert main(["search", "--config", str(config), "--out", str(out)]) == 2
        assert "--force" in capsys.readouterr().err
        assert main(["search", "--config", str(config), "--out", str(out),
                     "--force"]) == 0

    def test_byte_identical_across_runs_and_worker_counts(self, tmp_path):
        config = tmp_path / "run.json"
        write_run_config(config, run_config_dict())
        outs = []
        for name, workers in (("a", "1"), ("b", "4"), ("c", "16")):
            out = tmp_path / name
            code = main(["search", "--config", str(config), "--out", str(out),
                         "--workers", workers])
            assert code == 0
            outs.append(out)
        for name in OUTPUT_FILES:
            blobs = [(out / name).read_bytes() for out in outs]
            assert blobs[0] == blobs[1] == blobs[2], name

    def test_seed_override_changes_trajectory_seed(self, tmp_path):
        config = tmp_path / "run.json"
        write_run_config(config, run_config_dict(seed=0))
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(["search", "--config", str(config), "--out", str(out_a)]) == 0
        assert main(["search", "--config", str(config), "--out", str(out_b),
                     "--seed", "1"]) == 0
        # Different seeds may or may not reach different bests, but the
        # trajectories must differ somewhere.
        a = (out_a / "trajectory.csv").read_bytes()
        b = (out_b / "trajectory.csv").read_bytes()
        assert a != b

    def test_emitted_architecture_revalidates(self, tmp_path):
        data = run_config_dict()
        config = tmp_path / "run.json"
        write_run_config(config, data)
        out = tmp_path / "out"
        assert main(["search", "--config", str(config), "--out", str(out)]) == 0
        arch = DenseNetConfig.from_json((out / "best_architecture.json").read_text())
        space = SearchSpace.from_dict(data["space"])
        assert validate_config(arch, space) == []

    def test_log_stride_thins_trajectory(self, tmp_path):
        config = tmp_path / "run.json"
        write_run_config(config, run_config_dict(iterations=100))
        out = tmp_path / "out"
        assert main(["search", "--config", str(config), "--out", str(out),
                     "--log-stride", "20"]) == 0
        rows = (out / "trajectory.csv").read_text().splitlines()
        assert len(rows) == 1 + 100 // 20


class TestScoreCommand:
    def _write_arch(self, tmp_path, config=None):
        path = tmp_path / "arch.json"
        path.write_text((config or densenet121_config()).to_json())
        return path

    def test_feasible_architecture_exits_zero(self, tmp_path, capsys):
        arch = self._write_arch(tmp_path)
        code = main(["score", str(arch)])
        assert code == 0
        out = capsys.readouterr().out
        assert "objective value:" in out
        assert "feasible: yes" in out

    def test_json_report_is_machine_readable(self, tmp_path, capsys):
        arch = self._write_arch(tmp_path)
        assert main(["score", str(arch), "--json"]) == 0
        report = json.loads(capsys.readouterr().out)
        res = estimate_resources(densenet121_config())
        assert report["params"] == res.params
        assert report["flops"] == res.flops
        assert report["feasible"] is True
        assert len(report["stage_entropies"]) == 4

    def test_budget_violation_exits_one(self, tmp_path, capsys):
        arch = self._write_arch(tmp_path)
        objective = tmp_path / "objective.json"
        objective.write_text(json.dumps({
            "alphas": [1, 1, 1, 1], "beta": 0.1, "rho_max": 20,
            "flops_budget": 10 ** 12, "params_budget": 10 ** 6,
        }))
        code = main(["score", str(arch), str(objective)])
        assert code == 1
        assert "feasible: no" in capsys.readouterr().out

    def test_empty_file_exits_two(self, tmp_path, capsys):
        empty = tmp_path / "arch.json"
        empty.write_text("")
        assert main(["score", str(empty)]) == 2

    def test_schema_violation_exits_two(self, tmp_path, capsys):
        bad = tmp_path / "arch.json"
        data = densenet121_config().to_dict()
        data["extra"] = 1
        bad.write_text(json.dumps(data))
        assert main(["score", str(bad)]) == 2
        assert "extra" in capsys.readouterr().err


class TestCompareFitsCommand:
    def _write_csv(self, tmp_path, values):
        path = tmp_path / "entropy.csv"
        rows = ["stage_index,num_layers,in_width,growth_rate,kernel,entropy_nats,effectiveness"]
        for i, v in enumerate(values):
            rows.append(f"{i},2,8,4,3,{v},0.25")
        path.write_text("\n".join(rows) + "\n")
        return path

    def test_exact_power_ranks_first(self, tmp_path, capsys):
        path = self._write_csv(tmp_path, [2.0 * m ** 1.5 for m in range(1, 6)])
        code = main(["compare-fits", str(path)])
        assert code == 0
        assert capsys.readouterr().out.splitlines()[0].startswith("1. power")

    def test_exact_quadratic_ranks_first(self, tmp_path, capsys):
        path = self._write_csv(tmp_path, [float(3 * m * m + m + 2) for m in range(1, 6)])
        code = main(["compare-fits", str(path)])
        assert code == 0
        assert capsys.readouterr().out.splitlines()[0].startswith("1. quadratic")

    def test_report_file_written(self, tmp_path):
        path = self._write_csv(tmp_path, [2.0 * m ** 1.5 for m in range(1, 6)])
        out = tmp_path / "fits.csv"
        assert main(["compare-fits", str(path), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("family,")
        assert len(lines) == 5

    def test_three_rows_exits_four(self, tmp_path, capsys):
        path = self._write_csv(tmp_path, [1.0, 2.0, 3.0])
        assert main(["compare-fits", str(path)]) == 4

    def test_malformed_csv_exits_two(self, tmp_path, capsys):
        path = tmp_path / "entropy.csv"
        path.write_text("not,a,real,header\n1,2,3,4\n")
        assert main(["compare-fits", str(path)]) == 2


class TestFitReportCommand:
    def test_writes_reports_for_architecture(self, tmp_path, capsys):
        arch = tmp_path / "arch.json"
        arch.write_text(densenet121_config().to_json())
        out = tmp_path / "reports"
        code = main(["fit-report", str(arch), "--out", str(out)])
        assert code == 0
        entropy_lines = (out / "entropy_report.csv").read_text().splitlines()
        assert len(entropy_lines) == 5
        fit_lines = (out / "fit_report.csv").read_text().splitlines()
        assert len(fit_lines) == 5
        assert "power fit:" in capsys.readouterr().out


class TestExportCommand:
    def test_roundtrip_to_stdout(self, tmp_path, capsys):
        arch = tmp_path / "arch.json"
        original = densenet121_config()
        arch.write_text(original.to_json())
        assert main(["export", str(arch)]) == 0
        assert DenseNetConfig.from_json(capsys.readouterr().out) == original

    def test_writes_canonical_file(self, tmp_path, capsys):
        arch = tmp_path / "arch.json"
        # Same payload with scrambled key order still exports canonically.
        data = densenet121_config().to_dict()
        scrambled = {k: data[k] for k in reversed(list(data))}
        arch.write_text(json.dumps(scrambled))
        out = tmp_path / "canonical.json"
        assert main(["export", str(arch), "--out", str(out)]) == 0
        assert out.read_text() == densenet121_config().to_json()

    def test_rejects_bad_architecture(self, tmp_path, capsys):
        arch = tmp_path / "arch.json"
        arch.write_text(json.dumps({"schema_version": 1}))
        assert main(["export", str(arch)]) == 2
