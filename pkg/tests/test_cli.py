import json

import pytest

from wbckit.cli import main
from wbckit.config import PipelineConfig, config_from_dict, config_to_dict, load_config
from wbckit.core import parse_manifest


def run(argv):
    return main(argv)


def test_dump_config_default_values(tmp_path):
    out = tmp_path / "cfg.json"
    assert run(["dump-config", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["patient_fractions"] == {
        "phase1_train": 0.15, "phase2_train": 0.45,
        "phase2_eval": 0.10, "phase2_test": 0.30,
    }
    assert data["severity_fractions"]["phase2_train"] == [0.07, 0.55, 0.30, 0.08]
    assert data["severity_fractions"]["phase2_eval"] == [0.40, 0.45, 0.12, 0.03]
    assert data["severity_fractions"]["phase2_test"] == [0.35, 0.45, 0.15, 0.05]
    assert data["operator_count_rule"] == {"mild": [1, 3], "moderate": [1, 4],
                                           "extreme": [3, 5]}
    mild = data["param_ranges"]["mild"]
    assert mild["crop_ratio"] == [0.02, 0.10]
    assert mild["motion_kernel"] == [3, 15]
    extreme = data["param_ranges"]["extreme"]
    assert extreme["noise_sigma"] == [18, 25.5]
    assert extreme["gamma"] == [0.5, 1.5]


def test_config_roundtrip(tmp_path):
    cfg = PipelineConfig()
    assert config_from_dict(config_to_dict(cfg)) == cfg
    out = tmp_path / "cfg.json"
    run(["dump-config", "--out", str(out)])
    assert load_config(out) == cfg


def full_pipeline(tmp_path, seed, workers="1", tag="run"):
    root = tmp_path / tag
    ds = root / "data"
    assert run(["synth", "--out", str(ds), "--patients", "10", "--images", "40",
                "--seed", str(seed), "--side", "32"]) == 0
    plan = root / "plan.csv"
    assert run(["split", "--manifest", str(ds / "manifest.csv"), "--seed", str(seed),
                "--restarts", "8", "--out", str(plan),
                "--stats", str(root / "stats.json")]) == 0
    assigned = root / "assigned.csv"
    assert run(["assign", "--manifest", str(ds / "manifest.csv"), "--plan", str(plan),
                "--seed", str(seed), "--out", str(assigned),
                "--report", str(root / "quotas.json")]) == 0
    degraded = root / "degraded"
    assert run(["degrade", "--manifest", str(assigned), "--images", str(ds / "images"),
                "--out", str(degraded), "--seed", str(seed),
                "--workers", workers]) == 0
    return root


def test_full_pipeline_and_evaluate(tmp_path):
    root = full_pipeline(tmp_path, seed=7)
    assigned = parse_manifest(root / "assigned.csv")
    assert assigned.has_split and assigned.has_severity
    sub = root / "selfsub.csv"
    sub.write_text("image_id,label\n" +
                   "".join(f"{r.image_id},{r.label.value}\n" for r in assigned))
    report_path = root / "report.json"
    assert run(["evaluate", "--truth", str(root / "assigned.csv"), "--pred", str(sub),
                "--out", str(report_path)]) == 0
    report = json.loads(report_path.read_text())
    # classes absent from the small truth set contribute zeros under the
    # default convention, so a perfect submission scores supported/13
    supported = sum(1 for n in assigned.class_counts().values() if n)
    assert report["macro"]["macro_f1"] == pytest.approx(supported / 13)
    assert run(["evaluate", "--truth", str(root / "assigned.csv"), "--pred", str(sub),
                "--out", str(report_path), "--zero-support-recall", "exclude"]) == 0
    report = json.loads(report_path.read_text())
    assert report["macro"]["balanced_accuracy"] == 1.0


def test_pipeline_determinism_across_runs(tmp_path):
    a = full_pipeline(tmp_path, seed=7, tag="a")
    b = full_pipeline(tmp_path, seed=7, tag="b")
    for rel in ["plan.csv", "assigned.csv", "degraded/recipes.jsonl"]:
        assert (a / rel).read_bytes() == (b / rel).read_bytes()
    a_imgs = sorted((a / "degraded").glob("*.png"))
    b_imgs = sorted((b / "degraded").glob("*.png"))
    assert [p.name for p in a_imgs] == [p.name for p in b_imgs]
    for pa, pb in zip(a_imgs, b_imgs):
        assert pa.read_bytes() == pb.read_bytes()


def test_leaderboard_command(tmp_path):
    root = full_pipeline(tmp_path, seed=3, tag="lb")
    truth = parse_manifest(root / "assigned.csv")
    labels = [r.label.value for r in truth]
    perfect = root / "team_perfect.csv"
    perfect.write_text("image_id,label\n" +
                       "".join(f"{r.image_id},{l}\n" for r, l in zip(truth, labels)))
    constant = root / "team_constant.csv"
    constant.write_text("image_id,label\n" +
                        "".join(f"{r.image_id},SNE\n" for r in truth))
    out = root / "leaderboard.csv"
    per_class = root / "per_class.csv"
    assert run(["leaderboard", "--truth", str(root / "assigned.csv"),
                "--pred", str(perfect), str(constant),
                "--out", str(out), "--per-class", str(per_class)]) == 0
    lines = out.read_text().splitlines()
    supported = sum(1 for n in truth.class_counts().values() if n)
    assert lines[1].startswith(f"1,team_perfect,{supported / 13:.3f}")
    assert lines[2].startswith("2,team_constant,")
    assert per_class.read_text().splitlines()[0] == "class,mean_f1,min_f1,max_f1"


def test_validation_error_exit_code_and_json(tmp_path, capsys):
    ds = tmp_path / "d"
    assert run(["synth", "--out", str(ds), "--patients", "4", "--images", "8",
                "--seed", "1", "--side", "16"]) == 0
    bad = tmp_path / "bad.csv"
    bad.write_text("image_id,label\nghost,SNE\n")
    code = run(["--json", "evaluate", "--truth", str(ds / "manifest.csv"),
                "--pred", str(bad)])
    assert code == 1
    err = capsys.readouterr().err
    payload = json.loads([l for l in err.splitlines() if l.startswith("{")][0])
    assert payload["error"]["kind"] == "validation"


def test_io_error_exit_code(tmp_path):
    assert run(["evaluate", "--truth", str(tmp_path / "nope.csv"),
                "--pred", str(tmp_path / "nope2.csv")]) == 2


def test_split_sizes_from_cli(tmp_path, rng):
    csv = tmp_path / "patients.csv"
    lines = ["patient_id,label,count"]
    for i in range(493):
        lines.append(f"p{i:03d},SNE,{int(rng.integers(1, 30))}")
        lines.append(f"p{i:03d},LY,{int(rng.integers(1, 10))}")
    csv.write_text("\n".join(lines) + "\n")
    out = tmp_path / "plan.csv"
    assert run(["split", "--patients-csv", str(csv),
                "--fractions", "0.15,0.45,0.10,0.30", "--seed", "42",
                "--restarts", "4", "--out", str(out)]) == 0
    from collections import Counter
    rows = out.read_text().splitlines()[1:]
    sizes = Counter(line.split(",")[1] for line in rows)
    assert sizes == Counter({"phase2_train": 222, "phase2_test": 148,
                             "phase1_train": 74, "phase2_eval": 49})
