import io
import json
import threading
import urllib.error
import urllib.request

import pytest

from spinsynth.cli import (
    EXIT_BUDGET,
    EXIT_INPUT_ERROR,
    EXIT_NO_STRATEGY,
    EXIT_OK,
    parse_bound,
    run_cli,
    serve_api,
)
from tests.conftest import SHOWCASE


@pytest.fixture()
def showcase_file(tmp_path):
    path = tmp_path / "showcase.cpi"
    path.write_text(SHOWCASE)
    return str(path)


def run(argv, capsys):
    code = run_cli(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_bound_exactness():
    from fractions import Fraction

    assert parse_bound("155,7.5") == (Fraction(155), Fraction(15, 2))
    assert parse_bound(["1/3", 2]) == (Fraction(1, 3), Fraction(2))
    # floats round-trip through their shortest decimal form, not binary junk
    assert parse_bound([6.6]) == (Fraction(33, 5),)


def test_validate_ok(showcase_file, capsys):
    code, out, _ = run(["validate", showcase_file], capsys)
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["ok"] and doc["impact_dimension"] == 2
    assert doc["nature_gateways"] == ["Nat"]


def test_validate_error_exit_code_and_span(tmp_path, capsys):
    bad = tmp_path / "broken.cpi"
    bad.write_text("A[1]{1} ,\n(B[1]{1} / C[1]{1})")
    code, _, err = run(["validate", str(bad)], capsys)
    assert code == EXIT_INPUT_ERROR
    assert "2:" in err  # line 2, with a column


def test_synthesize_json_and_exit_codes(showcase_file, capsys):
    code, out, _ = run(["synthesize", showcase_file, "--bound", "155,7.5"], capsys)
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["exists"] is True
    assert doc["expected_impact"] == ["151", "6.6"]
    assert doc["schema"] == 1

    code, out, _ = run(["synthesize", showcase_file, "--bound", "100,1"], capsys)
    assert code == EXIT_NO_STRATEGY
    assert json.loads(out)["exists"] is False


def test_synthesize_human_format(showcase_file, capsys):
    code, out, _ = run(
        ["synthesize", showcase_file, "--bound", "155,7.5", "--format", "human"],
        capsys,
    )
    assert code == EXIT_OK
    assert "expected impact: [151, 6.6]" in out


def test_synthesize_wrong_dimension(showcase_file, capsys):
    code, _, err = run(["synthesize", showcase_file, "--bound", "155"], capsys)
    assert code == EXIT_INPUT_ERROR


def test_budget_exit_code(showcase_file, capsys):
    code, _, err = run(
        ["synthesize", showcase_file, "--bound", "155,7.5", "--node-cap", "5"], capsys
    )
    assert code == EXIT_BUDGET
    assert "board too large" in err


def test_decide_matches_synthesize(showcase_file, capsys):
    code, out, _ = run(["decide", showcase_file, "--bound", "155,7.5"], capsys)
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["exists"] is True

    code, _, _ = run(["decide", showcase_file, "--bound", "131,7.5"], capsys)
    assert code == EXIT_NO_STRATEGY


def test_dot_outputs(showcase_file, capsys):
    for flag, marker in ((None, "digraph process"), ("--spin", "digraph net"), ("--board", "digraph board")):
        argv = ["dot", showcase_file] + ([flag] if flag else [])
        code, out, _ = run(argv, capsys)
        assert code == EXIT_OK
        assert out.startswith(marker)


def test_inline_text_input(capsys):
    code, out, _ = run(["validate", "--text", "A[1]{1}"], capsys)
    assert code == EXIT_OK
    assert json.loads(out)["tasks"] == 1


def test_bench_small_sweep(capsys):
    code, out, _ = run(["bench", "--seeds", "4", "--bounds-per-instance", "5"], capsys)
    assert code == EXIT_OK
    assert "0 disagreements" in out


# ---------------------------------------------------------------------------
# HTTP service


@pytest.fixture(scope="module")
def server():
    srv = serve_api(0)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{srv.server_address[1]}"
    srv.shutdown()
    srv.server_close()


def http(base, path, payload=None):
    if payload is None:
        req = urllib.request.Request(base + path)
    else:
        req = urllib.request.Request(
            base + path,
            data=json.dumps(payload).encode(),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read())


def test_health(server):
    status, doc = http(server, "/health")
    assert status == 200 and doc["ok"]


def test_parse_endpoint(server):
    status, doc = http(server, "/parse", {"text": SHOWCASE})
    assert status == 200
    assert doc["dot"].startswith("digraph process")
    assert doc["choice_gateways"] == ["Dep", "Paint"]


def test_parse_endpoint_rejects_empty(server):
    status, doc = http(server, "/parse", {})
    assert status == 400


def test_parse_endpoint_reports_span(server):
    status, doc = http(server, "/parse", {"text": "A[1]{1} ,\n(B[1]{1} / C[1]{1})"})
    assert status == 400
    assert doc["span"]["line"] == 2
    assert doc["span"]["column"] >= 1


def test_synthesize_endpoint(server):
    status, doc = http(server, "/synthesize", {"text": SHOWCASE, "bound": ["155", "7.5"]})
    assert status == 200
    assert doc["exists"] is True
    assert doc["expected_impact"] == ["151", "6.6"]
    assert doc["board"]["finals"] == 8
    assert "wall_ms" in doc


def test_synthesize_endpoint_budget(server):
    status, doc = http(
        server, "/synthesize", {"text": SHOWCASE, "bound": ["155", "7.5"], "node_cap": 4}
    )
    assert status == 413


def test_synthesize_recursive_engine(server):
    status, doc = http(
        server,
        "/synthesize",
        {"text": SHOWCASE, "bound": ["155", "7.5"], "engine": "recursive"},
    )
    assert status == 200
    assert doc["exists"] is True and "residual" in doc


def test_concurrent_requests_are_isolated(server):
    results = {}

    def call(tag, bound):
        results[tag] = http(server, "/synthesize", {"text": SHOWCASE, "bound": bound})

    threads = [
        threading.Thread(target=call, args=("yes", ["155", "7.5"])),
        threading.Thread(target=call, args=("no", ["131", "7.5"])),
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results["yes"][1]["exists"] is True
    assert results["no"][1]["exists"] is False


def test_cli_and_http_strategy_json_identical(server, showcase_file, capsys):
    code = run_cli(["synthesize", showcase_file, "--bound", "155,7.5"])
    cli_out, _ = capsys.readouterr()
    cli_doc = json.loads(cli_out)
    _, http_doc = http(server, "/synthesize", {"text": SHOWCASE, "bound": ["155", "7.5"]})
    for volatile in ("wall_ms", "board"):
        http_doc.pop(volatile, None)
    assert cli_doc == http_doc