"""HTTP service surface."""

import pytest
from fastapi.testclient import TestClient

from agapia.service import app

client = TestClient(app)

SMALL = "module{listen a}{read nil}{a=a+1;}{speak a}{write nil}"


class TestHealth:
    def test_health(self):
        r = client.get("/health")
        assert r.status_code == 200 and r.json()["status"] == "ok"


class TestParseEndpoint:
    def test_parse(self):
        r = client.post("/parse", json={"source": SMALL})
        assert r.status_code == 200
        body = r.json()
        assert body["ast"]["node"] == "SourceFile"
        assert "a = a + 1" in body["pretty"]

    def test_syntax_error_422(self):
        r = client.post("/parse", json={"source": "module{listen }{"})
        assert r.status_code == 422


class TestTypecheckEndpoint:
    def test_type(self):
        r = client.post("/typecheck", json={"source": SMALL})
        assert r.status_code == 200
        assert r.json()["text"].startswith("<(a:tn)")


class TestRunEndpoint:
    def test_run(self):
        r = client.post("/run", json={"source": SMALL, "tin": [3], "seed": 1})
        assert r.status_code == 200
        body = r.json()
        assert body["rows"] == 1 and body["cols"] == 1
        assert body["east"] == {"v": "int", "value": 4}

    def test_run_with_render(self):
        r = client.post("/run", json={"source": SMALL, "tin": [0], "render": "svg"})
        assert r.status_code == 200 and r.json()["rendered"].startswith("<svg")

    def test_runtime_error_400(self):
        bad = "module{listen a}{read nil}{a=1/0;}{speak a}{write nil}"
        r = client.post("/run", json={"source": bad, "tin": [0]})
        assert r.status_code == 400


class TestVerifyEndpoint:
    def test_small_script(self):
        script = (
            '(script (domain (n 1 1)) (vars (x (int 0 3)))\n'
            '  (program INC "module{listen x:tn}{read nil}{x=x+1;}{speak x:tn}{write nil}")\n'
            '  (proof (basic :name inc :program INC :pre "x < 2" :post "x\' = x + 1")))'
        )
        r = client.post("/verify", json={"script": script})
        assert r.status_code == 200
        body = r.json()
        assert body["ok"] is True and body["results"][0]["status"] == "valid"

    def test_flagship_at_n1(self):
        from agapia.protocol import flagship_proof

        r = client.post("/verify", json={"script": flagship_proof(), "n_max": 1})
        assert r.status_code == 200 and r.json()["ok"] is True


class TestProtocolEndpoint:
    def test_ring(self):
        r = client.post("/protocol/ring", json={"n": 2, "seed": 0})
        assert r.status_code == 200
        body = r.json()
        assert body["ok"] is True and body["oracle_match"] is True
        assert body["final_state"]["token"] == ["white", 0]
