import json

import pytest

from groundkit import synthetic
from groundkit.cli import build_parser, run
from groundkit.config import ConfigError, GlobalConfig, load_config, override


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    synthetic.random_corpus(d, n_screenshots=4, elements=(10, 30), seed=11)
    return d


@pytest.fixture(scope="module")
def bench(tmp_path_factory):
    d = tmp_path_factory.mktemp("bench")
    rows = synthetic.benchmark_records(30, seed=2)
    (d / "bench.jsonl").write_text("".join(json.dumps(r) + "\n" for r in rows))
    preds = []
    for r in rows:
        x1, y1, x2, y2 = r["gt_box"]
        preds.append({"record_id": r["id"], "text": f"({(x1 + x2) / 2}, {(y1 + y2) / 2})"})
    (d / "pred.jsonl").write_text("".join(json.dumps(p) + "\n" for p in preds))
    return d


def test_validate_clean(corpus_dir, capsys):
    assert run(["validate", "--corpus", str(corpus_dir)]) == 0
    assert json.loads(capsys.readouterr().out)["errors"] == 0


def test_unknown_subcommand_is_usage_error(capsys):
    assert run(["frobnicate"]) == 2
    assert "invalid choice" in capsys.readouterr().err


def test_eval_missing_benchmark_names_flag(bench, capsys):
    assert run(["eval", "--pred", str(bench / "pred.jsonl"), "--coord-space", "pixel"]) == 2
    assert "--benchmark" in capsys.readouterr().err


def test_eval_missing_coord_space(bench, capsys):
    assert run(["eval", "--benchmark", str(bench / "bench.jsonl"), "--pred", str(bench / "pred.jsonl")]) == 2
    assert "--coord-space" in capsys.readouterr().err


def test_eval_runs(bench, tmp_path, capsys):
    out = tmp_path / "r.json"
    code = run(["eval", "--benchmark", str(bench / "bench.jsonl"), "--pred", str(bench / "pred.jsonl"),
                "--coord-space", "pixel", "--by", "platform", "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["accuracy"] == 1.0
    assert "platform" in capsys.readouterr().out


def test_eval_unknown_breakdown_key(bench, capsys):
    code = run(["eval", "--benchmark", str(bench / "bench.jsonl"), "--pred", str(bench / "pred.jsonl"),
                "--coord-space", "pixel", "--by", "nosuchtag"])
    assert code == 2


def test_missing_corpus_is_usage_error(capsys):
    assert run(["stats"]) == 2
    assert "--corpus" in capsys.readouterr().err


def test_data_errors_exit_one(tmp_path, capsys):
    assert run(["stats", "--corpus", str(tmp_path / "nowhere")]) == 1
    bad = tmp_path / "c"
    synthetic.random_corpus(bad, n_screenshots=1, elements=(3, 3), seed=0, images=False)
    with open(bad / "elements.jsonl", "a") as fh:
        fh.write("{not json\n")
    assert run(["validate", "--corpus", str(bad)]) == 1


def test_reward_server_needs_mode(capsys):
    assert run(["reward-server"]) == 2
    assert run(["reward-server", "--listen", "1:2", "--stdio"]) == 2


@pytest.mark.parametrize(
    "cmd,flags",
    [
        ("validate", ["--corpus", "--strict", "--out"]),
        ("stats", ["--corpus", "--out", "--table"]),
        ("dedup", ["--corpus", "--threshold", "--label-mode", "--min-crop-px", "--out", "--report"]),
        ("synth", ["--corpus", "--unique", "--kinds", "--max-gap-px", "--retry-rejected", "--out"]),
        ("export-sft", ["--pool", "--corpus", "--mix", "--total", "--out"]),
        ("select-rl", ["--pool", "--exclude", "--k", "--out"]),
        ("reward-server", ["--listen", "--stdio"]),
        ("eval", ["--benchmark", "--pred", "--coord-space", "--by", "--strict-ids", "--pick", "--out"]),
    ],
)
def test_help_lists_flags(cmd, flags, capsys):
    assert run([cmd, "--help"]) == 0
    text = capsys.readouterr().out
    for f in flags + ["--config", "--seed", "--workers", "--log-level"]:
        assert f in text


def _pipeline(corpus_dir, out, seed="3"):
    out.mkdir()
    common = ["--seed", seed, "--log-level", "ERROR"]
    assert run(["stats", "--corpus", str(corpus_dir), "--out", str(out / "stats.json")] + common) == 0
    assert run(["dedup", "--corpus", str(corpus_dir), "--out", str(out / "unique.jsonl"),
                "--report", str(out / "dedup.json")] + common) == 0
    assert run(["synth", "--corpus", str(corpus_dir), "--unique", str(out / "unique.jsonl"),
                "--kinds", "direct,spatial", "--out", str(out / "pool")] + common) == 0
    assert run(["export-sft", "--pool", str(out / "pool"), "--mix", "0.6,0,0.4", "--total", "20",
                "--out", str(out / "sft.jsonl")] + common) == 0
    assert run(["select-rl", "--pool", str(out / "unique.jsonl"), "--exclude", str(out / "sft.jsonl"),
                "--k", "5", "--out", str(out / "rl.jsonl")] + common) == 0


def _snapshot(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def test_pipeline_is_deterministic(corpus_dir, tmp_path, monkeypatch):
    monkeypatch.delenv("GROUNDKIT_LLM_URL", raising=False)
    _pipeline(corpus_dir, tmp_path / "a")
    _pipeline(corpus_dir, tmp_path / "b")
    a, b = _snapshot(tmp_path / "a"), _snapshot(tmp_path / "b")
    assert set(a) >= {"stats.json", "unique.jsonl", "dedup.json", "sft.jsonl", "rl.jsonl"}
    assert a == b
    assert len((tmp_path / "a" / "sft.jsonl").read_text().splitlines()) == 20
    assert len((tmp_path / "a" / "rl.jsonl").read_text().splitlines()) == 5


def test_config_precedence(tmp_path):
    cfg_path = tmp_path / "c.json"
    cfg_path.write_text(json.dumps({"seed": 9, "workers": 3, "dedup": {"threshold": 2}}))
    cfg = load_config(cfg_path, env={"GROUNDKIT_WORKERS": "5"})
    assert (cfg.seed, cfg.workers, cfg.dedup.threshold) == (9, 3, 2)
    override(cfg, {"seed": 1, "dedup.threshold": None})
    assert (cfg.seed, cfg.dedup.threshold) == (1, 2)
    assert load_config(env={"GROUNDKIT_WORKERS": "5"}).workers == 5
    assert load_config(env={}) == GlobalConfig()


@pytest.mark.parametrize("data", [{"sed": 1}, {"dedup": {"treshold": 1}}, {"dedup": 3}, [1]])
def test_config_rejects_bad_keys(tmp_path, data):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(data))
    with pytest.raises(ConfigError):
        load_config(p, env={})


def test_bad_config_exits_two(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text('{"nope": 1}')
    assert run(["stats", "--config", str(p), "--corpus", "x"]) == 2
    assert "nope" in capsys.readouterr().err


def test_resolved_config_logged(corpus_dir, tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"dedup": {"threshold": 4}}))
    run(["stats", "--config", str(p), "--corpus", str(corpus_dir), "--seed", "12", "--out", str(tmp_path / "s.json")])
    line = next(x for x in capsys.readouterr().err.splitlines() if "resolved config" in x)
    resolved = json.loads(line.split("resolved config: ", 1)[1])
    assert resolved["seed"] == 12 and resolved["dedup"]["threshold"] == 4


def test_parser_has_all_commands():
    sub = next(a for a in build_parser()._actions if a.dest == "command")
    assert set(sub.choices) == {"validate", "stats", "dedup", "synth", "export-sft", "select-rl",
                                "reward-server", "eval"}
