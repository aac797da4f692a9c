import json

import pytest
from click.testing import CliRunner

from canonrep.cli import main
from canonrep.jsonio import load_json


@pytest.fixture
def runner():
    return CliRunner()


def _gen(runner, tmp_path, name="p.json", depth=2, branching=3, mds=True, seed=7):
    out = tmp_path / name
    res = runner.invoke(
        main,
        [
            "gen", "--depth", str(depth), "--branching", str(branching),
            "--dimension", "1", "--seed", str(seed), "--out", str(out),
        ]
        + (["--mds"] if mds else []),
    )
    assert res.exit_code == 0, res.output
    return out


# ---------------------------------------------------------------------------
# gen / validate

def test_gen_deterministic_bytes(runner, tmp_path):
    a = _gen(runner, tmp_path, "a.json", seed=7)
    b = _gen(runner, tmp_path, "b.json", seed=7)
    assert a.read_bytes() == b.read_bytes()


def test_gen_mds_flag_yields_mds(runner, tmp_path):
    from canonrep import is_mds
    from canonrep.jsonio import process_from_json

    path = _gen(runner, tmp_path, mds=True, seed=13)
    assert is_mds(process_from_json(load_json(path))).ok


def test_gen_size_guard(runner, tmp_path):
    res = runner.invoke(
        main,
        ["gen", "--depth", "9", "--branching", "2", "--seed", "1",
         "--out", str(tmp_path / "x.json")],
    )
    assert res.exit_code == 1


def test_validate_ok(runner, tmp_path):
    path = _gen(runner, tmp_path)
    res = runner.invoke(main, ["validate", "--in", str(path)])
    assert res.exit_code == 0


def test_validate_bad_prob_sum_names_node(runner, tmp_path):
    doc = {
        "format_version": 1,
        "dimension": 1,
        "depth": 1,
        "root": {
            "branches": [
                {"value": ["1"], "prob": "1/2", "child": None},
                {"value": ["2"], "prob": "1/3", "child": None},
            ]
        },
    }
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    res = runner.invoke(main, ["validate", "--in", str(bad)])
    assert res.exit_code == 1
    assert "root" in res.output or "root" in (res.stderr or "")


def test_validate_truncated_file(runner, tmp_path):
    bad = tmp_path / "trunc.json"
    bad.write_text('{"format_version": 1,')
    res = runner.invoke(main, ["validate", "--in", str(bad)])
    assert res.exit_code == 2


def test_unsupported_format_version(runner, tmp_path):
    path = _gen(runner, tmp_path)
    res = runner.invoke(
        main, ["validate", "--in", str(path), "--format-version", "2"]
    )
    assert res.exit_code == 2


# ---------------------------------------------------------------------------
# represent / decouple / transport round trips

def test_represent_round_trip(runner, tmp_path):
    from canonrep import joint_law, law_of_representation
    from canonrep.jsonio import process_from_json, representation_from_json

    p_path = _gen(runner, tmp_path)
    r_path = tmp_path / "r.json"
    res = runner.invoke(main, ["represent", "--in", str(p_path), "--out", str(r_path)])
    assert res.exit_code == 0, res.output
    assert "law preserved: true" in res.output
    rep = representation_from_json(load_json(r_path))
    process = process_from_json(load_json(p_path))
    assert law_of_representation(rep) == joint_law(process)


def test_decouple_emits_pair_process(runner, tmp_path):
    from canonrep.jsonio import pair_process_from_json
    from canonrep import are_tangent, satisfies_ci, validate_process

    p_path = _gen(runner, tmp_path)
    r_path = tmp_path / "r.json"
    runner.invoke(main, ["represent", "--in", str(p_path), "--out", str(r_path)])
    pair_path = tmp_path / "pair.json"
    res = runner.invoke(main, ["decouple", "--in", str(r_path), "--out", str(pair_path)])
    assert res.exit_code == 0, res.output
    assert "direct marginal preserved: true" in res.output
    pq = pair_process_from_json(load_json(pair_path))
    validate_process(pq.process)
    assert pq.process.dimension == 2
    assert are_tangent(pq).ok
    assert satisfies_ci(pq, 1).ok


def test_transport_from_pair(runner, tmp_path):
    p_path = _gen(runner, tmp_path)
    r_path = tmp_path / "r.json"
    pair_path = tmp_path / "pair.json"
    t_path = tmp_path / "t.json"
    runner.invoke(main, ["represent", "--in", str(p_path), "--out", str(r_path)])
    runner.invoke(main, ["decouple", "--in", str(r_path), "--out", str(pair_path)])
    res = runner.invoke(main, ["transport", "--in", str(pair_path), "--out", str(t_path)])
    assert res.exit_code == 0, res.output
    assert "measure preserving: true" in res.output
    doc = load_json(t_path)
    assert doc["format_version"] == 1
    assert [step["step"] for step in doc["steps"]] == [1, 2]
    first_pairs = doc["steps"][0]["sections"][0]["pairs"]
    assert all(len(pair) == 2 and len(pair[0]) == 2 for pair in first_pairs)


def test_transport_two_representations(runner, tmp_path):
    # coupling two copies of one representation is tangent when the step
    # laws do not depend on history
    from canonrep import canonical_representation, random_independent_process
    from canonrep.jsonio import dump_json, representation_to_json

    p = random_independent_process(2, 3, 1, seed=7)
    r_path = tmp_path / "r.json"
    dump_json(representation_to_json(canonical_representation(p)), r_path)
    t_path = tmp_path / "t.json"
    res = runner.invoke(
        main,
        ["transport", "--in", str(r_path), "--in2", str(r_path), "--out", str(t_path)],
    )
    assert res.exit_code == 0, res.output
    assert "measure preserving: true" in res.output


def test_transport_non_tangent_pair_fails(runner, tmp_path):
    a_path = _gen(runner, tmp_path, "a.json", seed=7)
    b_path = _gen(runner, tmp_path, "b.json", seed=8)
    ra, rb = tmp_path / "ra.json", tmp_path / "rb.json"
    runner.invoke(main, ["represent", "--in", str(a_path), "--out", str(ra)])
    runner.invoke(main, ["represent", "--in", str(b_path), "--out", str(rb)])
    res = runner.invoke(
        main,
        ["transport", "--in", str(ra), "--in2", str(rb), "--out",
         str(tmp_path / "t.json")],
    )
    assert res.exit_code == 1


# ---------------------------------------------------------------------------
# bench

def test_bench_report_schema_and_gate(runner, tmp_path):
    p_path = _gen(runner, tmp_path)
    r_path = tmp_path / "r.json"
    runner.invoke(main, ["represent", "--in", str(p_path), "--out", str(r_path)])
    out = tmp_path / "bench.json"
    res = runner.invoke(
        main,
        ["bench", "--in", str(r_path), "--p", "2", "--samples", "20000",
         "--seed", "3", "--out", str(out)],
    )
    assert res.exit_code == 0, res.output
    doc = load_json(out)
    assert set(doc) >= {"ratio", "ci_low", "ci_high", "p", "M", "seed", "oracle"}
    assert doc["oracle"]["exact_ratio"] == 1.0
    assert doc["ci_low"] <= 1.0 <= doc["ci_high"]


def test_bench_requires_seed(runner, tmp_path):
    res = runner.invoke(
        main, ["bench", "--in", "x.json", "--out", "y.json"]
    )
    assert res.exit_code == 2  # click usage error


def test_bench_csv(runner, tmp_path):
    p_path = _gen(runner, tmp_path)
    r_path = tmp_path / "r.json"
    runner.invoke(main, ["represent", "--in", str(p_path), "--out", str(r_path)])
    csv_path = tmp_path / "sums.csv"
    res = runner.invoke(
        main,
        ["bench", "--in", str(r_path), "--p", "2", "--samples", "200",
         "--seed", "3", "--out", str(tmp_path / "b.json"), "--csv", str(csv_path)],
    )
    assert res.exit_code == 0
    lines = csv_path.read_text().strip().splitlines()
    assert len(lines) == 201
    assert lines[0].startswith("path,")


def test_bench_exact_flag_forces_oracle(runner, tmp_path):
    p_path = _gen(runner, tmp_path)
    r_path = tmp_path / "r.json"
    runner.invoke(main, ["represent", "--in", str(p_path), "--out", str(r_path)])
    out = tmp_path / "b.json"
    # depth-limit 0 would normally skip the oracle; --exact forces it
    res = runner.invoke(
        main,
        ["bench", "--in", str(r_path), "--p", "2", "--samples", "2000",
         "--seed", "3", "--depth-limit", "0", "--exact", "--out", str(out)],
    )
    assert res.exit_code == 0, res.output
    assert load_json(out)["oracle"]["exact_ratio"] == 1.0
    res = runner.invoke(
        main,
        ["bench", "--in", str(r_path), "--p", "2", "--samples", "2000",
         "--seed", "3", "--depth-limit", "0", "--out", str(out)],
    )
    assert res.exit_code == 0
    assert load_json(out)["oracle"]["exact_ratio"] is None


def test_decouple_copy_marginal_true_for_independent_source(runner, tmp_path):
    from canonrep import canonical_representation, random_independent_process
    from canonrep.jsonio import dump_json, representation_to_json

    p = random_independent_process(2, 3, 1, seed=5)
    r_path = tmp_path / "r.json"
    dump_json(representation_to_json(canonical_representation(p)), r_path)
    res = runner.invoke(
        main, ["decouple", "--in", str(r_path), "--out", str(tmp_path / "pp.json")]
    )
    assert res.exit_code == 0
    assert "copy marginal matches source: true" in res.output


def test_bench_byte_deterministic(runner, tmp_path):
    p_path = _gen(runner, tmp_path)
    r_path = tmp_path / "r.json"
    runner.invoke(main, ["represent", "--in", str(p_path), "--out", str(r_path)])
    outs = []
    for name in ("b1.json", "b2.json"):
        out = tmp_path / name
        res = runner.invoke(
            main,
            ["bench", "--in", str(r_path), "--p", "2", "--samples", "5000",
             "--seed", "9", "--out", str(out)],
        )
        assert res.exit_code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


# ---------------------------------------------------------------------------
# skorohod

def test_skorohod_exit_sample_report(runner, tmp_path):
    p_path = _gen(runner, tmp_path)
    out = tmp_path / "sk.json"
    res = runner.invoke(
        main,
        ["skorohod", "--in", str(p_path), "--scheme", "exit_sample",
         "--samples", "20000", "--seed", "5", "--out", str(out)],
    )
    assert res.exit_code == 0, res.output
    doc = load_json(out)
    assert doc["chi_square"]["p_value"] > 0.01
    assert doc["martingale"] is not None
    assert doc["martingale"]["mean_ok"] and doc["martingale"]["slopes_ok"]


def test_skorohod_byte_deterministic(runner, tmp_path):
    p_path = _gen(runner, tmp_path)
    outs = []
    for name in ("s1.json", "s2.json"):
        out = tmp_path / name
        res = runner.invoke(
            main,
            ["skorohod", "--in", str(p_path), "--scheme", "exit_sample",
             "--samples", "3000", "--seed", "5", "--out", str(out)],
        )
        assert res.exit_code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_skorohod_rejects_non_mds(runner, tmp_path):
    p_path = _gen(runner, tmp_path, mds=False, seed=29)
    from canonrep import is_mds
    from canonrep.jsonio import process_from_json

    if is_mds(process_from_json(load_json(p_path))).ok:
        pytest.skip("fixture happens to be zero-mean")
    res = runner.invoke(
        main,
        ["skorohod", "--in", str(p_path), "--samples", "100", "--seed", "1",
         "--out", str(tmp_path / "s.json")],
    )
    assert res.exit_code == 1


def test_skorohod_euler_small(runner, tmp_path):
    p_path = _gen(runner, tmp_path)
    out = tmp_path / "sk_euler.json"
    res = runner.invoke(
        main,
        ["skorohod", "--in", str(p_path), "--scheme", "euler",
         "--samples", "300", "--seed", "5", "--dt", "5e-5", "--out", str(out)],
    )
    assert res.exit_code == 0, res.output
    doc = load_json(out)
    assert doc["scheme"] == "euler"
    assert doc["chi_square"]["p_value"] > 0.01
    assert doc["martingale"] is None  # below the path threshold


def test_skorohod_csv_and_svg(runner, tmp_path):
    p_path = _gen(runner, tmp_path)
    csv_path = tmp_path / "f.csv"
    svg_path = tmp_path / "f.svg"
    res = runner.invoke(
        main,
        ["skorohod", "--in", str(p_path), "--scheme", "exit_sample",
         "--samples", "500", "--seed", "5", "--out", str(tmp_path / "s.json"),
         "--csv", str(csv_path), "--svg", str(svg_path)],
    )
    assert res.exit_code == 0, res.output
    assert csv_path.read_text().startswith("path,t,F_0")
    svg = svg_path.read_text()
    assert svg.startswith("<svg") and "polyline" in svg
