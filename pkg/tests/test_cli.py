import csv
import io
import json
import subprocess
import sys

import pytest

from kacmax.cli import (
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_USAGE,
    ExperimentConfig,
    ResultTable,
    UsageError,
    main,
    parse_complex,
    parse_complex_list,
    parse_grid,
    run,
)


def invoke(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def csv_body(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.reader(io.StringIO("\n".join(lines))))


def csv_meta(text):
    return json.loads("\n".join(l[2:] for l in text.splitlines() if l.startswith("# ")))


# -- parsing --------------------------------------------------------------------


def test_parse_grid_range_is_exact():
    assert parse_grid("1.1:1.4:0.1") == [1.1, 1.2, 1.3, 1.4]
    g = parse_grid("1.05:3:0.05")
    assert len(g) == 40 and g[-1] == 3.0 and g[20] == 2.05


def test_parse_grid_list_and_errors():
    assert parse_grid("0.3, 0.5,0.7") == [0.3, 0.5, 0.7]
    for bad in ("1:2", "2:1:0.1", "1:2:0", "a:b:c", "x,y"):
        with pytest.raises(UsageError):
            parse_grid(bad)


def test_parse_complex():
    assert parse_complex("1.5") == 1.5
    assert parse_complex("1.42857+0i") == 1.42857
    assert parse_complex("-0.3j") == -0.3j
    assert parse_complex_list("1.3, 1.6i") == [1.3, 1.6j]
    with pytest.raises(UsageError):
        parse_complex("one")


# -- config -----------------------------------------------------------------------


def test_config_round_trip():
    cfg = ExperimentConfig("ldp", {"n": 5, "y": "0.5"}, seed=9, format="json")
    again = ExperimentConfig.from_json(cfg.to_json())
    assert again == cfg


def test_config_resolved_fills_defaults():
    cfg = ExperimentConfig("fredholm", {"t": "0.5"}).resolved()
    assert cfg.params == {"t": "0.5", "radial": 64, "angular": 128}


@pytest.mark.parametrize(
    "data",
    [
        {"command": "ldp", "colour": "red"},
        {"command": "ldp", "params": {"nn": 3}},
        {"command": "nope"},
        {"params": {}},
        {"command": "ldp", "seed": -1},
        {"command": "ldp", "format": "xml"},
    ],
)
def test_config_rejects_bad_input(data):
    with pytest.raises(UsageError):
        ExperimentConfig.from_dict(data)


def test_result_table_shape_check():
    with pytest.raises(ValueError):
        ResultTable(["a", "b"], [[1]])


def test_csv_uses_round_trip_precision():
    text = ResultTable(["x"], [[0.1], [1 / 3]], {"k": 1}).to_csv()
    rows = csv_body(text)
    assert rows[1] == ["0.10000000000000001"]
    assert float(rows[2][0]) == 1 / 3


# -- commands ---------------------------------------------------------------------


def test_eval_limit_cdf_table():
    table = run(ExperimentConfig("eval-limit-cdf", {"y_grid": "1.1:3.0:0.1"}))
    assert table.columns == ["y", "limit_cdf"]
    assert len(table.rows) == 20
    assert table.rows[0][0] == pytest.approx(1.1)
    assert table.meta["config"]["params"]["y_grid"] == "1.1:3.0:0.1"


def test_eval_f_both_table(capsys):
    code, out, _ = invoke(capsys, "eval-F", "--y", "0.6", "--k-max", "5", "--method", "both")
    assert code == EXIT_OK
    rows = csv_body(out)
    assert rows[0] == ["y", "term", "J", "series_J", "contribution"]
    assert [r[1] for r in rows[1:]] == ["0", "1", "2", "3", "4", "5", "total"]
    total = sum(float(r[4]) for r in rows[1:-1])
    assert float(rows[-1][4]) == pytest.approx(total, rel=1e-12)


def test_cdf_fluctuations_columns(capsys):
    code, out, _ = invoke(capsys, "cdf-fluctuations", "--n", "16", "--samples", "100", "--seed", "1")
    assert code == EXIT_OK
    rows = csv_body(out)
    assert rows[0] == ["y", "empirical", "limit", "abs_diff"]
    for y, emp, lim, diff in rows[1:]:
        assert abs(float(emp) - float(lim)) == pytest.approx(float(diff), abs=1e-15)


def test_moments_row(capsys):
    code, out, _ = invoke(capsys, "moments", "--n", "5", "--u", "1.42857+0i", "--samples", "2000")
    assert code == EXIT_OK
    rows = csv_body(out)
    assert rows[0][-4:] == ["formula", "mc", "std_error", "z_score"]
    assert len(rows) == 2


def test_json_output_is_strict(capsys):
    code, out, _ = invoke(capsys, "eval-F", "--y", "0.5", "--k-max", "2", "--format", "json")
    assert code == EXIT_OK
    body = json.loads(out, parse_constant=lambda c: pytest.fail(f"non-standard constant {c}"))
    assert set(body) == {"meta", "columns", "rows"}
    assert body["rows"][-1][2] is None


def test_ldp_byte_identical(capsys):
    args = ("ldp", "--n", "6", "--y", "0.6", "--samples", "500", "--seed", "7")
    _, first, _ = invoke(capsys, *args)
    _, second, _ = invoke(capsys, *args)
    assert first == second
    assert csv_meta(first)["seed"] == 7


def test_thread_count_does_not_change_output(capsys):
    args = ("dpp-sample", "--n", "3", "--count", "200", "--seed", "2")
    _, one, _ = invoke(capsys, *args, "--threads", "1")
    _, four, _ = invoke(capsys, *args, "--threads", "4")
    assert one == four


def test_replay_from_echoed_config(capsys, tmp_path):
    out = tmp_path / "run.json"
    code, _, _ = invoke(capsys, "direct-mc", "--n", "2", "--samples", "3000", "--seed", "5", "--format", "json", "--out", str(out))
    assert code == EXIT_OK
    replay = tmp_path / "replay.json"
    code, _, _ = invoke(capsys, "--config", str(out), "--out", str(replay))
    assert code == EXIT_OK
    assert replay.read_text() == out.read_text()


def test_replay_from_csv_meta(capsys, tmp_path):
    _, first, _ = invoke(capsys, "sample-roots", "--n", "4", "--count", "2", "--seed", "3")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(csv_meta(first)["config"]))
    _, second, _ = invoke(capsys, "--config", str(cfg))
    assert second == first


@pytest.mark.parametrize(
    "argv",
    [
        ["bogus"],
        [],
        ["ldp", "--n", "0"],
        ["quadrature-J", "--k", "9"],
        ["correlations", "--z", "0.1,0.1"],
        ["eval-limit-cdf", "--y-grid", "3:1:0.1"],
        ["ldp", "--sampler", "ginibre"],
        ["ldp", "--y", "1.5"],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    code, _, _ = invoke(capsys, *argv)
    assert code == EXIT_USAGE


def test_missing_config_file_exit_2(capsys, tmp_path):
    code, _, err = invoke(capsys, "--config", str(tmp_path / "absent.json"))
    assert code == EXIT_USAGE
    assert "config" in err


def test_numerical_failure_exit_3(capsys):
    code, _, err = invoke(capsys, "sample-roots", "--n", "64", "--max-iter", "1")
    assert code == EXIT_NUMERIC
    assert "numerical failure" in err


def test_selftest_subset_passes(capsys):
    code, out, err = invoke(capsys, "selftest", "--quick", "--only", "7,10")
    assert code == EXIT_OK
    assert "criterion  7 [PASS]" in err and "criterion 10 [PASS]" in err
    assert len(csv_body(out)) == 3


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "kacmax", "eval-limit-cdf", "--y-grid", "2"], capture_output=True, text=True, check=False
    )
    assert res.returncode == 0
    assert csv_body(res.stdout)[1][0] == "2"


@pytest.mark.slow
def test_ldp_full_size_byte_identical_across_threads(capsys):
    args = ("ldp", "--n", "20", "--y", "0.6", "--samples", "100000", "--seed", "7")
    _, first, _ = invoke(capsys, *args, "--threads", "1")
    _, second, _ = invoke(capsys, *args, "--threads", "3")
    assert first == second
