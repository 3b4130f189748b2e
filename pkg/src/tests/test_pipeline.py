import csv
import io
import json

import numpy as np
import pytest

from main import build_pipeline, main
from src.core.transform import DyadicFunction, save_binary
from src.schemas import ExperimentConfig
from src.services.logmeans_service import harmonic_l


def _run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _table(text):
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_kernel_export(capsys):
    code, out, _ = _run(capsys, "kernel", "--kind", "F", "--n", "4", "--K", "3", "--quiet-header")
    assert code == 0
    assert out.splitlines()[0] == "index,sample,multiplier"
    rows = _table(out)
    assert len(rows) == 8
    multipliers = [float(row["multiplier"]) for row in rows]
    np.testing.assert_allclose(multipliers[:4], [1.0, 9 / 11, 6 / 11, 0.0], rtol=1e-15)
    assert np.mean([float(row["sample"]) for row in rows]) == pytest.approx(1.0)


def test_dirichlet_kernel_export(capsys):
    code, out, _ = _run(capsys, "kernel", "--kind", "D", "--n", "8", "--K", "4", "--quiet-header")
    assert code == 0
    rows = _table(out)
    assert [float(row["sample"]) for row in rows] == [8.0, 8.0] + [0.0] * 14
    assert [float(row["multiplier"]) for row in rows] == [1.0] * 8 + [0.0] * 8


def test_header_line(capsys):
    _, out, _ = _run(capsys, "kernel", "--kind", "G", "--n", "3", "--K", "2")
    assert out.startswith("# walsh-logmeans kernel G generated ")


def test_quiet_header_is_deterministic(capsys):
    argv = ("kernel", "--kind", "F", "--n", "13", "--K", "5", "--quiet-header")
    _, first, _ = _run(capsys, *argv)
    _, second, _ = _run(capsys, *argv)
    assert first == second


@pytest.mark.parametrize(
    "argv,fragment",
    [
        (("kernel", "--kind", "F", "--K", "3"), "n"),
        (("kernel", "--kind", "F", "--n", "9", "--K", "3"), "exceeds"),
        (("kernel", "--kind", "F", "--n", "4", "--K", "3", "--d", "2"), "one-dimensional"),
        (("converge", "--K", "3", "--sweep", "4,16"), "sweep"),
        (("diverge", "--what", "xi"), "n"),
        (("diverge", "--what", "lemma-gg", "--n", "3", "--K", "6"), "resolution"),
        (("diverge", "--what", "regions", "--n", "2", "--tilde", "0"), "tilde"),
        (("converge", "--function", "parabola"), "function"),
        (("diverge", "--what", "est1", "--d", "2", "--B", "1", "--K", "5,2", "--nmax", "2"), "K: axis 2 needs resolution 5"),
        (("diverge", "--what", "search", "--n", "2", "--d", "2", "--B", "2", "--K", "3,5"), "K: axis 1 needs resolution 5"),
    ],
)
def test_usage_errors_exit_two(capsys, argv, fragment):
    code, out, err = _run(capsys, *argv)
    assert code == 2
    assert out == ""
    assert fragment in err


def test_missing_config_file_exits_two(capsys, tmp_path):
    code, _, err = _run(capsys, "kernel", "--config", str(tmp_path / "absent.cfg"))
    assert code == 2
    assert "not found" in err


def test_config_file_and_flag_override(capsys, tmp_path):
    path = tmp_path / "kernel.cfg"
    path.write_text("# exported kernel\nkind=F\nn=4\nK=3\nquiet-header=true\n")
    code, out, _ = _run(capsys, "kernel", "--config", str(path))
    assert code == 0
    assert float(_table(out)[1]["multiplier"]) == pytest.approx(9 / 11)
    code, out, _ = _run(capsys, "kernel", "--config", str(path), "--n", "5")
    assert float(_table(out)[1]["multiplier"]) == pytest.approx(harmonic_l(4) / harmonic_l(5))


def test_config_round_trip():
    for values in (
        {"command": "converge", "d": 2, "K": "6", "B": "2", "function": "walsh", "params": "index=3;", "seed": 4},
        {"command": "diverge", "what": "search", "n": 2, "d": 2, "B": [1, 2], "r": 3, "trials": 5, "c": 0.5},
        {"command": "norms", "what": "types", "sweep": [2, 4, 8], "K": 8},
        {"command": "kernel", "kind": "G", "n": 7, "K": [4], "format": "json", "quiet_header": True},
    ):
        config = ExperimentConfig.model_validate(values)
        assert ExperimentConfig.from_key_value(config.to_key_value()).model_dump() == config.model_dump()


def test_converge_constant_is_reproduced(capsys):
    code, out, _ = _run(capsys, "converge", "--function", "constant", "--param", "value=2.5", "--quiet-header")
    assert code == 0
    rows = _table(out)
    assert [int(row["n"]) for row in rows] == [4, 8, 16, 32, 64]
    for row in rows:
        assert float(row["l1_error"]) < 1e-12
        assert float(row["mes_gt_0.1"]) == 0.0


def test_converge_walsh_function_error(capsys):
    code, out, _ = _run(
        capsys, "converge", "--K", "6", "--function", "walsh", "--param", "index=3", "--sweep", "4,8,32", "--quiet-header"
    )
    assert code == 0
    errors = [float(row["l1_error"]) for row in _table(out)]
    expected = [1.0 - harmonic_l(n - 3) / harmonic_l(n) for n in (4, 8, 32)]
    np.testing.assert_allclose(errors, expected, rtol=1e-12)


def test_converge_from_binary_file(capsys, tmp_path, rng):
    f = DyadicFunction((5,), rng.normal(size=32))
    path = save_binary(f, tmp_path / "f.bin")
    code, out, _ = _run(capsys, "converge", "--K", "5", "--function", f"file:{path}", "--sweep", "32", "--quiet-header")
    assert code == 0
    assert len(_table(out)) == 1


def test_workers_do_not_change_results(capsys):
    argv = ("converge", "--d", "2", "--K", "5", "--B", "1", "--sweep", "4,8,16,32", "--quiet-header")
    _, serial, _ = _run(capsys, *argv)
    _, threaded, _ = _run(capsys, *argv, "--workers", "3")
    assert serial == threaded


def test_json_output(capsys):
    code, out, _ = _run(capsys, "diverge", "--what", "regions", "--n", "2", "--format", "json", "--quiet-header")
    assert code == 0
    payload = json.loads(out)
    assert payload["command"] == "diverge"
    assert payload["what"] == "regions"
    assert "generated" not in payload
    assert payload["reports"][0]["mode"] == "override"
    code, out, _ = _run(capsys, "diverge", "--what", "regions", "--n", "2", "--faithful", "--format", "json")
    payload = json.loads(out)
    assert "generated" in payload
    assert all(interval["empty"] for interval in payload["reports"][0]["omega"])


def test_output_file(capsys, tmp_path):
    target = tmp_path / "out" / "kernel.csv"
    code, out, _ = _run(capsys, "kernel", "--kind", "G", "--n", "5", "--K", "4", "--output", str(target))
    assert code == 0
    assert out == ""
    assert len(_table(target.read_text())) == 16


def test_diverge_lemma_scan_table(capsys):
    code, out, _ = _run(capsys, "diverge", "--what", "lemma-gg", "--n", "2", "--quiet-header")
    assert code == 0
    rows = _table(out)
    assert list(rows[0]) == ["m", "start", "end", "points", "min", "argmin"]
    assert [int(row["m"]) for row in rows] == [2, 3, 4]


def test_diverge_faithful_lemma_scan_is_empty(capsys):
    code, out, _ = _run(capsys, "diverge", "--what", "lemma-gg", "--n", "2", "--faithful", "--format", "json")
    assert code == 0
    report = json.loads(out)["reports"][0]
    assert report["empty"] is True
    assert report["min"] is None


def test_diverge_xi_and_search(capsys):
    code, out, _ = _run(
        capsys, "diverge", "--what", "xi", "--n", "2", "--d", "2", "--B", "1,2", "--r", "1", "--beta", "2", "--quiet-header"
    )
    assert code == 0
    row = _table(out)[0]
    assert row["sup_ok"] == "true" and row["luxemburg_ok"] == "true"
    assert row["B"] == "1,2"
    code, out, _ = _run(
        capsys, "diverge", "--what", "search", "--n", "2", "--d", "2", "--B", "1,2", "--r", "1", "--trials", "2", "--quiet-header"
    )
    assert code == 0
    assert float(_table(out)[0]["measure"]) == pytest.approx(0.00390625)


def test_diverge_sweeps(capsys):
    for what, columns in (
        ("kernel-growth", ["n", "p", "l1_norm", "ratio", "increment"]),
        ("op-bound", ["n", "young", "mean_l1", "test_norm", "ratio", "formula"]),
        ("est1", ["n", "c", "threshold", "measure", "ratio", "bound_applies"]),
        ("cond1", ["n", "decay", "scale", "holds"]),
    ):
        code, out, _ = _run(capsys, "diverge", "--what", what, "--nmax", "3", "--d", "2", "--B", "1,2", "--quiet-header")
        assert code == 0, what
        rows = _table(out)
        assert list(rows[0]) == columns
        assert [int(row["n"]) for row in rows] == ([1, 2, 3] if what == "kernel-growth" else [2, 3])


def test_pipeline_run_returns_rows():
    pipeline = build_pipeline()
    config = ExperimentConfig.model_validate({"command": "norms", "what": "types", "sweep": [2, 8], "K": 8})
    result = pipeline.run(config)
    assert result.columns == ["n", "strong_ratio", "weak_ratio"]
    assert [row[0] for row in result.rows] == [2, 8]


def test_resolution_checks_follow_the_target():
    full = {"command": "diverge", "d": 2, "B": [1], "K": [5, 5]}
    ExperimentConfig.model_validate({**full, "what": "est1", "nmax": 2})
    ExperimentConfig.model_validate({**full, "what": "search", "n": 2})
    ExperimentConfig.model_validate({**full, "what": "op-bound", "nmax": 2, "K": [5, 1]})
    with pytest.raises(ValueError, match="axis 2"):
        ExperimentConfig.model_validate({**full, "what": "est1", "nmax": 2, "K": [5, 4]})
