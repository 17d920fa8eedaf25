"""Regenerate tests/fixture JSON by driving the real service in-process.

Run from the repository root:

    python3 frontend/scripts/capture_fixtures.py

The UI's snapshot tests compare rendered values against these files, so
they must always be byte-for-byte what the service returns.
"""

from __future__ import annotations

import json
import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

from flavorbench.service import create_app
from flavorbench.synth import fixture_workspace

OUT = Path(__file__).resolve().parent.parent / "fixtures"


def dump(name: str, doc) -> None:
    path = OUT / f"{name}.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {path.relative_to(Path.cwd())}")


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        ws = Path(tmp) / "ws"
        fixture_workspace(ws)
        client = TestClient(create_app(ws))

        dump("health", client.get("/api/health").json())
        dump("ingredients", client.get("/api/ingredients").json())
        groups = client.get("/api/groups").json()
        dump("groups", groups)
        dump("dimensions", client.get("/api/dimensions").json())
        dump("dimension_sweet", client.get("/api/dimensions/sweet").json())
        dump("culture", client.get("/api/culture").json())
        dump("projection3d", client.get("/api/projection3d").json())

        # merge round-trip: miso_paste into soy_sauce, exactly what the
        # review queue submits; capture the response and the next fetch
        by_name = {g["name"]: g["canonical_id"] for g in groups["groups"]}
        action = {"action": "merge",
                  "sources": [by_name["miso_paste"]],
                  "target": by_name["soy_sauce"]}
        dump("merge_action", {"actions": [action]})
        resp = client.post("/api/overrides", json={"actions": [action]})
        assert resp.status_code == 200, resp.text
        dump("merge_response", resp.json())
        dump("groups_after_merge", client.get("/api/groups").json())

        bad = client.post("/api/overrides", json={"actions": [
            {"action": "merge", "sources": [999], "target": 2},
        ]})
        assert bad.status_code == 400, bad.text
        dump("merge_rejected", bad.json())

        job = client.post("/api/recompute").json()
        dump("recompute_started", job)
        for _ in range(200):
            status = client.get(f"/api/jobs/{job['job_id']}").json()
            if status["status"] != "pending":
                break
            time.sleep(0.05)
        assert status["status"] == "done", status
        dump("recompute_done", status)


if __name__ == "__main__":
    main()
