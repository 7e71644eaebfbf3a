import json
import socket
import subprocess
import sys
import time
from pathlib import Path

import pytest
from click.testing import CliRunner

from shiftlab.cli import main

HORSESHOE_MAP = {"N": 2, "nu": 1, "a": [0.5, 0.0], "f": "mul(c(4.0),pow(var,2))"}
SIN_F = "mul(c(8.0),sin(mul(c(6.283185307179586),var)))"
SIN_TABLE_CFG = {
    "f": SIN_F,
    "a": [0.5, 0.0],
    "centers": [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
    "r": 0.2,
    "R": 0.45,
    "n_r": 5,
    "n_theta": 7,
}
RENDER_CFG = {
    "a": 0.25,
    "slice": {
        "u_range": [-2.0, 2.0],
        "v_range": [-2.0, 2.0],
        "width": 40,
        "height": 96,
        "max_iter": 150,
    },
}


def _invoke(args):
    return CliRunner().invoke(main, args)


_RUN_COUNTER = 0


def _run(tmp_path, command, cfg, extra=(), name="cfg.json"):
    global _RUN_COUNTER
    _RUN_COUNTER += 1
    cfg_path = tmp_path / name
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / f"out-{command}-{_RUN_COUNTER}"
    res = _invoke([command, "--config", str(cfg_path), "--out", str(out), *extra])
    return res, out


def _manifest(out: Path) -> dict:
    return json.loads((out / "manifest.json").read_text())


def test_orbit_command(tmp_path):
    cfg = {"map": {"wandering": 0.25}, "start": [[-1, 0], [0, 0], [1, 0]], "steps": 6}
    res, out = _run(tmp_path, "orbit", cfg)
    assert res.exit_code == 0, res.output
    doc = json.loads((out / "orbit.json").read_text())
    assert doc["escaped_at"] is None
    assert len(doc["samples"]) == 7
    csv = (out / "orbit.csv").read_text()
    assert csv.startswith("step,re1,im1,re2,im2,re3,im3,escaped\n")
    man = _manifest(out)
    assert man["command"] == "orbit"
    assert man["config"]["steps"] == 6
    # thread count must never leak into recorded outputs
    assert '"threads"' not in (out / "manifest.json").read_text()


def test_entropy_command(tmp_path):
    cfg = {
        "map": HORSESHOE_MAP,
        "per_axis": 12,
        "n_values": [2],
        "epsilons": [0.3],
        "with_covering": True,
    }
    res, out = _run(tmp_path, "entropy", cfg)
    assert res.exit_code == 0, res.output
    doc = json.loads((out / "entropy.json").read_text())
    assert doc["grid_size"] == 144
    lines = (out / "entropy.csv").read_text().strip().split("\n")
    assert lines[0] == "n,epsilon,s_lower,c_upper,h_lower,h_upper"
    assert len(lines) == 2


def test_certify_pass_and_fail(tmp_path):
    res, out = _run(tmp_path, "certify", {"f": "mul(c(4.0),pow(var,2))", "a": [0.5, 0], "r": 1.0})
    assert res.exit_code == 0, res.output
    doc = json.loads((out / "certificate.json").read_text())
    assert doc["valid"] is True
    assert not (out / "failure.json").exists()

    res, out = _run(tmp_path, "certify", {"f": "var", "a": [1.0, 0], "r": 1.0}, name="bad.json")
    assert res.exit_code == 1
    failure = json.loads((out / "failure.json").read_text())
    assert failure["command"] == "certify"
    assert "invalid" in failure["reason"]
    # the certificate itself is still written for inspection
    assert json.loads((out / "certificate.json").read_text())["valid"] is False


def test_jtable_pass_and_fail(tmp_path):
    res, out = _run(tmp_path, "jtable", SIN_TABLE_CFG)
    assert res.exit_code == 0, res.output
    doc = json.loads((out / "jtable.json").read_text())
    assert doc["min_cardinality"] == 3 and doc["passed"] is True

    bad = dict(SIN_TABLE_CFG, f="var")
    res, out = _run(tmp_path, "jtable", bad, name="bad.json")
    assert res.exit_code == 1
    failure = json.loads((out / "failure.json").read_text())
    assert failure["min_cardinality"] == 0
    assert failure["required"] == 1


def test_words_command(tmp_path):
    res, out = _run(tmp_path, "words", {"k": 6, "lengths": [4, 6]})
    assert res.exit_code == 0, res.output
    doc = json.loads((out / "words.json").read_text())
    assert doc["counts"][0]["count"] == str(6**3 * 4)
    assert doc["counts"][1]["count"] == str(6**3 * 4**3)


def test_wandering_command_and_seed_override(tmp_path):
    cfg = {"a": 0.25, "samples": 400}
    res, out = _run(tmp_path, "wandering", cfg, extra=("--seed", "9"))
    assert res.exit_code == 0, res.output
    man = _manifest(out)
    assert man["config"]["seed"] == 9
    doc = json.loads((out / "wandering.json").read_text())
    assert doc["sign"] == -1 and doc["passed"] is True
    assert doc["identities"]["seed"] == 9


def test_wandering_failure_writes_reason(tmp_path):
    cfg = {"a": 0.25, "samples": 200, "tol": 1e-18}
    res, out = _run(tmp_path, "wandering", cfg)
    assert res.exit_code == 1
    failure = json.loads((out / "failure.json").read_text())
    assert failure["tol"] == 1e-18
    assert failure["base_residual"] > 1e-18


def test_render_command(tmp_path):
    res, out = _run(tmp_path, "render", RENDER_CFG)
    assert res.exit_code == 0, res.output
    doc = json.loads((out / "render.json").read_text())
    assert "csv" not in doc and "ppm_b64" not in doc
    assert sum(doc["histogram"].values()) == 40 * 96
    assert (out / "basin.ppm").read_bytes().startswith(b"P6\n40 96\n255\n")
    lines = (out / "basin.csv").read_text().strip().split("\n")
    assert len(lines) == 1 + 40 * 96


def test_usage_errors_exit_two(tmp_path):
    res = _invoke(["orbit", "--config", str(tmp_path / "missing.json")])
    assert res.exit_code == 2

    bad_json = tmp_path / "broken.json"
    bad_json.write_text("{not json")
    res = _invoke(["orbit", "--config", str(bad_json)])
    assert res.exit_code == 2
    assert "not valid JSON" in res.output

    res, _ = _run(tmp_path, "certify", {"f": "var", "a": [1, 0], "r": 1.0, "bogus": 2})
    assert res.exit_code == 2
    assert "invalid config" in res.output

    res, _ = _run(tmp_path, "jtable", dict(SIN_TABLE_CFG, R=5.0), name="geom.json")
    assert res.exit_code == 2  # target disks overlap

    guard = {"map": HORSESHOE_MAP, "per_axis": 100, "with_covering": True}
    res, _ = _run(tmp_path, "entropy", guard, name="guard.json")
    assert res.exit_code == 2
    assert "guard" in res.output


def _tree_bytes(out: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


def test_thread_count_never_changes_bytes(tmp_path):
    res1, out1 = _run(tmp_path, "jtable", SIN_TABLE_CFG, extra=("--threads", "1"))
    res3, out3 = _run(tmp_path, "jtable", SIN_TABLE_CFG, extra=("--threads", "3"))
    assert res1.exit_code == 0 and res3.exit_code == 0
    assert _tree_bytes(out1) == _tree_bytes(out3)

    res1, out1 = _run(tmp_path, "render", RENDER_CFG, extra=("--threads", "1"))
    res3, out3 = _run(tmp_path, "render", RENDER_CFG, extra=("--threads", "3"))
    assert res1.exit_code == 0 and res3.exit_code == 0
    assert _tree_bytes(out1) == _tree_bytes(out3)


def _free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture(scope="module")
def server_url():
    import httpx

    port = _free_port()
    proc = subprocess.Popen(
        [
            sys.executable,
            "-m",
            "uvicorn",
            "shiftlab.service.app:app",
            "--host",
            "127.0.0.1",
            "--port",
            str(port),
            "--log-level",
            "warning",
        ]
    )
    url = f"http://127.0.0.1:{port}"
    try:
        for _ in range(100):
            try:
                if httpx.get(url + "/v1/health", timeout=1.0).status_code == 200:
                    break
            except httpx.HTTPError:
                time.sleep(0.15)
        else:
            raise RuntimeError("service did not come up")
        yield url
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def test_server_mode_matches_in_process(tmp_path, server_url):
    for command, cfg in (
        ("certify", {"f": "mul(c(4.0),pow(var,2))", "a": [0.5, 0], "r": 1.0}),
        ("render", RENDER_CFG),
    ):
        res_local, out_local = _run(tmp_path, command, cfg)
        res_remote, out_remote = _run(
            tmp_path, command, cfg, extra=("--server", server_url)
        )
        assert res_local.exit_code == 0, res_local.output
        assert res_remote.exit_code == 0, res_remote.output
        assert _tree_bytes(out_local) == _tree_bytes(out_remote)


def test_server_mode_maps_rejection_to_usage(tmp_path, server_url):
    res, _ = _run(
        tmp_path,
        "certify",
        {"f": "var", "a": [0.5, 0], "r": -1.0},
        extra=("--server", server_url),
    )
    assert res.exit_code == 2


def test_server_mode_unreachable_is_transport_error(tmp_path):
    res, _ = _run(
        tmp_path,
        "certify",
        {"f": "var", "a": [0.5, 0], "r": 1.0},
        extra=("--server", "http://127.0.0.1:1"),
    )
    assert res.exit_code == 1
    assert "unreachable" in res.output
