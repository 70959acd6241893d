import csv
import json
import logging

import numpy as np
import pytest

from shade.cli import main
from shade.records import (
    ConfigError,
    QueryRecord,
    RunConfig,
    ValidationError,
    dump_jsonl,
    ensure_cluster_labels,
    load_jsonl,
)
from shade.synthetic import SyntheticSpec, generate_pool


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def read_csv_body(path):
    """CSV rows after the '#' metadata header."""
    with open(path, encoding="utf-8", newline="") as handle:
        return [row for row in csv.reader(line for line in handle if not line.startswith("#"))]


class TestQueryRecord:
    def test_minimal_label_record(self):
        record = QueryRecord(query_id="q1", cluster_labels=(0, 0, 1))
        assert record.n == 3

    def test_needs_structure(self):
        with pytest.raises(ValidationError, match="cluster_labels or an entailment"):
            QueryRecord(query_id="q1", responses=("a", "b"))

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError, match="inconsistent dimensions"):
            QueryRecord(query_id="q1", responses=("a", "b", "c"), cluster_labels=(0, 1))

    def test_bad_incorrectness_label(self):
        with pytest.raises(ValidationError, match="label_sequence"):
            QueryRecord(query_id="q1", cluster_labels=(0,), label_sequence=2)


class TestLoadJsonl:
    def test_valid_line(self, tmp_path):
        path = tmp_path / "pool.jsonl"
        write_lines(path, ['{"query_id":"q1","cluster_labels":[0,0,1]}'])
        records = load_jsonl(path)
        assert len(records) == 1 and records[0].n == 3

    def test_matrix_dimension_error_carries_line_number(self, tmp_path):
        path = tmp_path / "pool.jsonl"
        write_lines(
            path,
            [
                '{"query_id":"q1","cluster_labels":[0,1]}',
                '{"query_id":"q2","responses":["a","b","c"],"entailment":[[1,0],[0,1]]}',
            ],
        )
        with pytest.raises(ValidationError, match="line 2"):
            load_jsonl(path)
        records = load_jsonl(path, strict=False)
        assert [r.query_id for r in records] == ["q1"]

    def test_flat_matrix_requires_n(self, tmp_path):
        path = tmp_path / "pool.jsonl"
        write_lines(path, ['{"query_id":"q1","entailment":[1.0,0.1,0.1,1.0]}'])
        with pytest.raises(ValidationError, match="explicit 'n'"):
            load_jsonl(path)
        write_lines(path, ['{"query_id":"q1","n":2,"entailment":[1.0,0.1,0.1,1.0]}'])
        assert load_jsonl(path)[0].entailment.shape == (2, 2)

    def test_out_of_range_entries(self, tmp_path):
        path = tmp_path / "pool.jsonl"
        write_lines(path, ['{"query_id":"q1","n":2,"entailment":[1.0,1.5,0.1,1.0]}'])
        with pytest.raises(ValidationError, match=r"\[0, 1\]"):
            load_jsonl(path)

    def test_duplicate_query_id(self, tmp_path):
        path = tmp_path / "pool.jsonl"
        write_lines(
            path,
            ['{"query_id":"q1","cluster_labels":[0]}', '{"query_id":"q1","cluster_labels":[1]}'],
        )
        with pytest.raises(ValidationError, match="duplicate"):
            load_jsonl(path)

    def test_invalid_json_reported(self, tmp_path):
        path = tmp_path / "pool.jsonl"
        write_lines(path, ["{not json"])
        with pytest.raises(ValidationError, match="line 1.*invalid JSON"):
            load_jsonl(path)

    def test_empty_file_warns(self, tmp_path, caplog):
        path = tmp_path / "pool.jsonl"
        path.write_text("", encoding="utf-8")
        with caplog.at_level(logging.WARNING):
            assert load_jsonl(path) == []
        assert any("no records" in r.message for r in caplog.records)

    def test_unknown_keys_tolerated(self, tmp_path):
        path = tmp_path / "pool.jsonl"
        write_lines(path, ['{"query_id":"q1","cluster_labels":[0],"question":"?"}'])
        assert load_jsonl(path)[0].query_id == "q1"

    def test_simulate_round_trip_no_warnings(self, tmp_path, caplog):
        pool = generate_pool(SyntheticSpec(true_alphabet_size=4, responses_per_query=12, seed=7), 5)
        path = tmp_path / "pool.jsonl"
        dump_jsonl(pool, path)
        with caplog.at_level(logging.WARNING):
            loaded = load_jsonl(path, strict=True)
        assert not caplog.records
        assert [r.query_id for r in loaded] == [r.query_id for r in pool]
        assert all(r.cluster_labels == p.cluster_labels for r, p in zip(loaded, pool))
        # matrix survives up to the 6-decimal write precision
        assert np.allclose(loaded[0].entailment, pool[0].entailment, atol=5e-7)


class TestEnsureClusterLabels:
    def test_fills_missing_labels(self):
        a = np.full((3, 3), 0.9)
        records = [QueryRecord(query_id="q", entailment=a)]
        filled = ensure_cluster_labels(records, 0.5)
        assert filled[0].cluster_labels == (0, 0, 0)

    def test_keeps_existing_labels(self):
        record = QueryRecord(query_id="q", cluster_labels=(0, 1))
        assert ensure_cluster_labels([record], 0.5)[0] is record


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.n_values == (5, 8, 10, 25, 50)
        assert cfg.trials == 10
        assert "shade" in cfg.estimators

    def test_from_toml(self, tmp_path):
        path = tmp_path / "cfg.toml"
        path.write_text('beta = 2.0\nn_values = [5, 10]\nestimators = ["plugin", "shade"]\n')
        cfg = RunConfig.from_toml(path)
        assert cfg.beta == 2.0 and cfg.n_values == (5, 10)

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "cfg.toml"
        path.write_text("gamma = 1.0\n")
        with pytest.raises(ConfigError, match="unknown config keys"):
            RunConfig.from_toml(path)

    def test_range_validation(self):
        with pytest.raises(ConfigError):
            RunConfig(tau=1.5)
        with pytest.raises(ConfigError, match="unknown estimator"):
            RunConfig(estimators=("plugin", "chao"))
        with pytest.raises(ConfigError, match="correction_sign"):
            RunConfig(correction_sign=0.5)

    def test_as_dict_round_trips(self):
        cfg = RunConfig(alpha=0.2)
        assert RunConfig.from_dict(cfg.as_dict()) == cfg


@pytest.fixture()
def small_pool(tmp_path):
    path = tmp_path / "pool.jsonl"
    pool = generate_pool(SyntheticSpec(true_alphabet_size=5, responses_per_query=20, seed=3), 8)
    dump_jsonl(pool, path)
    return path


class TestCli:
    def test_score_degenerate_consensus(self, tmp_path):
        inp = tmp_path / "in.jsonl"
        ones = [1.0] * 25
        write_lines(inp, [json.dumps({"query_id": "q1", "n": 5, "entailment": ones})])
        out = tmp_path / "scores.csv"
        assert main(["score", "--input", str(inp), "--output", str(out)]) == 0
        body = read_csv_body(out)
        header, row = body[0], body[1]
        record = dict(zip(header, row))
        assert record["query_id"] == "q1"
        assert float(record["h_shade"]) == 0.0
        assert float(record["s_final"]) == 1.0
        assert (tmp_path / "scores_scores.png").exists()

    def test_score_jsonl_output_and_partial_fields(self, tmp_path):
        inp = tmp_path / "in.jsonl"
        write_lines(inp, [json.dumps({"query_id": "q1", "cluster_labels": [0, 0, 1, 2, 2]})])
        out = tmp_path / "scores.jsonl"
        assert main(["score", "--input", str(inp), "--output", str(out), "--no-figures"]) == 0
        lines = out.read_text().splitlines()
        assert "_meta" in json.loads(lines[0])
        row = json.loads(lines[1])
        assert row["k_obs"] == 3 and row["s_soft_eigv"] is None and row["h_shade"] is None

    def test_evaluate_zero_error_at_pool_size(self, small_pool, tmp_path):
        out = tmp_path / "table.csv"
        code = main(
            ["evaluate", "--input", str(small_pool), "--output", str(out),
             "--n", "20", "--trials", "2", "--seed", "1"]
        )
        assert code == 0
        body = read_csv_body(out)
        header = body[0]
        plugin_row = next(r for r in body[1:] if r[0] == "plugin")
        assert float(plugin_row[header.index("mae_n20")]) == 0.0
        assert (tmp_path / "table_mae.png").exists()

    def test_evaluate_byte_identical_reruns(self, small_pool, tmp_path):
        args = ["evaluate", "--input", str(small_pool), "--n", "5,10", "--trials", "2",
                "--seed", "7", "--no-figures"]
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--output", str(out1)]) == 0
        assert main(args + ["--output", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_winrates_from_error_columns_reproduces_published_rate(self, tmp_path):
        errors = tmp_path / "errors.csv"
        with open(errors, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["shade", "plugin"])
            writer.writerows([[0.0, 1.0]] * 3372)
            writer.writerows([[1.0, 0.0]] * 1176)
            writer.writerows([[1.0, 1.0]] * (5556 - 3372 - 1176))
        out = tmp_path / "wr.csv"
        assert main(["winrates", "--errors", str(errors), "--output", str(out), "--no-figures"]) == 0
        body = read_csv_body(out)
        header, row = body[0], body[1]
        record = dict(zip(header, row))
        assert record["baseline"] == "plugin"
        assert (int(record["wins"]), int(record["losses"]), int(record["n_valid"])) == (3372, 1176, 5556)
        assert float(record["win_rate_pct"]) == pytest.approx(74.1, abs=0.05)

    def test_winrates_from_pool(self, small_pool, tmp_path):
        out = tmp_path / "wr.csv"
        code = main(
            ["winrates", "--input", str(small_pool), "--output", str(out),
             "--n", "5,10", "--trials", "2", "--seed", "0"]
        )
        assert code == 0
        body = read_csv_body(out)
        baselines = {row[0] for row in body[1:]}
        assert baselines == {"plugin", "gt", "ggt", "u_eigv", "hybrid_gt", "hybrid_ggt"}
        assert (tmp_path / "wr_winrates.png").exists()

    def test_detect_report(self, tmp_path):
        inp = tmp_path / "labeled.jsonl"
        rng = np.random.default_rng(0)
        lines = []
        for i in range(14):
            k = 1 + (i % 4)
            labels = list(range(k)) + [0] * (6 - k)
            a = np.where(np.equal.outer(labels, labels), 0.9, 0.1)
            np.fill_diagonal(a, 1.0)
            lines.append(
                json.dumps(
                    {
                        "query_id": f"q{i}",
                        "n": 6,
                        "cluster_labels": labels,
                        "entailment": [round(float(x), 6) for x in a.ravel()],
                        "labels": {"sequence": int(k > 2), "response": int(rng.integers(0, 2))},
                        "dataset": "trivia" if i % 2 else "squad",
                    }
                )
            )
        write_lines(inp, lines)
        out = tmp_path / "det.csv"
        assert main(["detect", "--input", str(inp), "--output", str(out)]) == 0
        body = read_csv_body(out)
        header = body[0]
        assert header[0] == "score"
        assert "auc_s_squad" in header and "auc_r_trivia" in header and header[-1] == "mean"
        numsets_row = dict(zip(header, next(r for r in body[1:] if r[0] == "numsets")))
        assert float(numsets_row["auc_s_squad"]) == 1.0  # score == label construction
        assert (tmp_path / "det_auc.png").exists()

    def test_detect_missing_labels_exit_one(self, tmp_path):
        inp = tmp_path / "unlabeled.jsonl"
        write_lines(inp, [json.dumps({"query_id": "q0", "n": 2, "entailment": [1, 0.2, 0.2, 1]})])
        out = tmp_path / "det.csv"
        assert main(["detect", "--input", str(inp), "--output", str(out), "--no-figures"]) == 1

    def test_detect_unknown_score_exit_two(self, tmp_path, small_pool):
        assert main(
            ["detect", "--input", str(small_pool), "--output", str(small_pool) + ".csv",
             "--scores", "bogus"]
        ) == 2

    def test_simulate_round_trip(self, tmp_path):
        spec = tmp_path / "spec.toml"
        spec.write_text(
            "true_alphabet_size = 4\nresponses_per_query = 10\nqueries = 6\nseed = 2\n"
        )
        out = tmp_path / "pool.jsonl"
        assert main(["simulate", "--spec", str(spec), "--out", str(out)]) == 0
        records = load_jsonl(out, strict=True)
        assert len(records) == 6
        assert all(r.true_k == 4 for r in records)

    def test_simulate_bad_spec_exit_two(self, tmp_path):
        spec = tmp_path / "spec.toml"
        spec.write_text("true_alphabet_size = 0\n")
        assert main(["simulate", "--spec", str(spec), "--out", str(tmp_path / "x.jsonl")]) == 2

    def test_config_error_exit_two(self, tmp_path, small_pool):
        cfg = tmp_path / "cfg.toml"
        cfg.write_text("tau = 2.0\n")
        code = main(
            ["score", "--input", str(small_pool), "--config", str(cfg),
             "--output", str(tmp_path / "out.csv")]
        )
        assert code == 2

    def test_validation_error_exit_one(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        write_lines(bad, ['{"query_id":"q1"}'])
        code = main(["score", "--input", str(bad), "--output", str(tmp_path / "out.csv")])
        assert code == 1

    def test_schema_independent_of_content(self, tmp_path):
        paths = []
        for tag, payload in (
            ("labels", {"query_id": "q1", "cluster_labels": [0, 1]}),
            ("matrix", {"query_id": "q1", "n": 2, "entailment": [1, 0.9, 0.9, 1]}),
        ):
            inp = tmp_path / f"{tag}.jsonl"
            write_lines(inp, [json.dumps(payload)])
            out = tmp_path / f"{tag}.csv"
            assert main(["score", "--input", str(inp), "--output", str(out), "--no-figures"]) == 0
            paths.append(out)
        headers = [read_csv_body(p)[0] for p in paths]
        assert headers[0] == headers[1]

    def test_metadata_embeds_config(self, small_pool, tmp_path):
        out = tmp_path / "table.csv"
        main(["evaluate", "--input", str(small_pool), "--output", str(out),
              "--n", "5", "--trials", "1", "--no-figures"])
        text = out.read_text()
        assert "# config =" in text and '"seed": 0' in text
