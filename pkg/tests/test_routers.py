import pytest
from fastapi.testclient import TestClient

from app.main import app

P1 = {"num": [-1, 1], "den": [2, 3, 1]}


@pytest.fixture
def client():
    with TestClient(app) as c:
        yield c


def test_root(client):
    response = client.get("/")
    assert response.status_code == 200
    assert "/analysis/" in response.json()["endpoints"]


def test_analysis(client):
    body = {"plant": P1, "coding": {"kind": "shearing1", "params": {"c": 1}}}
    response = client.post("/analysis/", json=body)
    assert response.status_code == 200
    report = response.json()
    assert report["P_bar"]["minimum-phase"] is True
    assert [z["re"] for z in report["P_bar"]["zeros"]] == pytest.approx([-1.0, -1.0])


def test_analysis_text(client):
    response = client.post("/analysis/text", json={"plant": P1})
    assert response.status_code == 200
    assert "zeros and poles unchanged" in response.json()["text"]


def test_invalid_coding_is_unprocessable(client):
    body = {"plant": P1, "coding": {"a": 1, "b": 2, "c": 0.5, "d": 1}}
    assert client.post("/analysis/", json=body).status_code == 422


def test_design_not_found(client):
    body = {"plant": {"num": [1, 0, 1], "den": [0, 0, 0, 1]}}
    response = client.post("/design/", json=body)
    assert response.status_code == 404
    assert "no stabilizing static gain" in response.json()["detail"]


def test_design(client):
    body = {"plant": {"num": [1], "den": [-1, 1]}, "design": {"F1": 2, "F2": 3}}
    response = client.post("/design/", json=body)
    assert response.status_code == 200
    assert response.json()["coding"]["b"] == pytest.approx(2.0)


def test_attack_requires_section(client):
    assert client.post("/attacks/", json={"plant": P1}).status_code == 400


def test_attack_domain_error(client):
    body = {"plant": {"num": [1], "den": [-1, 1]}, "attacks": [{"point": "forward_w"}]}
    response = client.post("/attacks/", json=body)
    assert response.status_code == 400
    assert "no admissible mode" in response.json()["detail"]


def test_attack_stealthy(client):
    body = {
        "plant": P1,
        "attacks": [{"point": "forward_w", "amplitude": 0.1}],
        "simulation": {"horizon": 5, "dt": 0.001, "initial_state": "attack_aligned"},
    }
    response = client.post("/attacks/", json=body)
    assert response.status_code == 200
    assert response.json()["verdict"] == "STEALTHY"


def test_simulation_csv(client):
    body = {"plant": P1, "reference": {"kind": "step"}, "simulation": {"horizon": 1, "dt": 0.01}}
    response = client.post("/simulation/csv", json=body)
    assert response.status_code == 200
    assert response.headers["content-type"].startswith("text/csv")
    assert response.text.startswith("t,r,u,q,qbar,ubar,ybar,vbar,v,y,w,z,plant_state_norm\n")


def test_simulation_round_trip(client):
    body = {"plant": P1, "coding": {"kind": "rotation", "params": {"theta": 0.3}}, "reference": {"kind": "step"},
            "simulation": {"horizon": 2, "dt": 0.01}}
    response = client.post("/simulation/?check_round_trip=true", json=body)
    assert response.status_code == 200
    assert response.json()["round_trip"]["max_abs_y_minus_ybar"] <= 1e-6
