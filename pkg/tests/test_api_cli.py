import json
import warnings

import pytest
from click.testing import CliRunner

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from arboreal.api import app
from arboreal.cli import main
from arboreal.perms import ORDERS_VERSION
from arboreal.service import VERBS


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_info(client):
    data = client.get("/info").json()
    assert data["orders_version"] == ORDERS_VERSION
    assert set(data["verbs"]) == set(VERBS)


def test_unknown_verb_is_404(client):
    assert client.post("/run/nope", json={}).status_code == 404


def test_request_validation(client):
    assert client.post("/run/haar", json={"samples": 0}).status_code == 422


def test_haar_over_http(client):
    resp = client.post("/run/haar", json={"params": {"shape": "3,4"}})
    data = resp.json()
    assert resp.status_code == 200 and data["ok"]
    assert data["csv"].startswith("# {")


def test_errors_become_failed_results(client):
    data = client.post("/run/verify-psi-phi", json={"params": {"shape": "3,4", "i": 1, "depth": 4}}).json()
    assert not data["ok"]
    assert data["result"]["assertions"] == {"completed": False}


def test_cli_folner_writes_outputs(tmp_path):
    res = CliRunner().invoke(main, ["--out", str(tmp_path), "folner", "--shape", "3,3"])
    assert res.exit_code == 0, res.output
    table = (tmp_path / "folner.csv").read_text().splitlines()
    assert table[1] == "n,defect_num,defect_den,defect_float"
    result = json.loads((tmp_path / "folner.json").read_text())
    assert result["header"]["schema"]


def test_cli_verify_psi_phi_stdout():
    res = CliRunner().invoke(main, ["verify", "psi-phi", "--shape", "3,3", "--i", "1", "--depth", "2"])
    assert res.exit_code == 0
    data = json.loads(res.stdout)
    assert data["checks"] and all(c["failures"] == 0 for c in data["checks"])


def test_cli_exit_code_on_failure(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"name": "verify", "params": {"shapes": ["3,3"], "fuzz_cases": 2,
                                                            "epsilon_cases": 1, "faults": ["corrupt_t"]}}))
    res = CliRunner().invoke(main, ["verify", "--config", str(cfg)])
    assert res.exit_code == 1


def test_cli_lists_spec_verbs():
    res = CliRunner().invoke(main, ["--help"])
    for verb in ("equidist", "hedlund", "average", "minimality", "verify", "haar", "folner",
                 "rn-check", "serve"):
        assert verb in res.output
