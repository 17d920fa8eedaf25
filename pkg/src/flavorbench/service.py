"""HTTP/JSON service over a workspace directory.

The raw embeddings are the source of truth; the current consolidation is
always base map + replayed overrides.json. POST /api/overrides validates
an action batch by replaying it before anything is written, under a
single-writer lock. Every response carries an X-Workspace-Manifest
header so clients can tell when the inputs changed underneath them.
"""

from __future__ import annotations

import math
import os
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import axes as axes_mod
from . import culture as culture_mod
from . import curation, kernels
from .curation import OverrideError, save_overrides
from .stats import Seed
from .workspace import Workspace, manifest_digest

SWEET_POLE = "sweet"
SAVOURY_POLE = "savoury"


def _nan_to_none(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _group_rows(ws: Workspace) -> list:
    """Per-canonical similarity stats from the raw vectors."""
    groups = ws.current_map.groups()
    multi = {cid: members for cid, members in groups.items() if len(members) >= 2}
    stats: dict[int, tuple] = {}
    if multi:
        member_rows = []
        starts = [0]
        order = sorted(multi)
        for cid in order:
            member_rows.extend(ws.raw.rows_for(multi[cid]))
            starts.append(len(member_rows))
        unit = ws.raw.unit_rows(np.array(member_rows, dtype=np.int64))
        means, mins = kernels.group_pair_stats(unit, np.array(starts, dtype=np.int64))
        stats = {cid: (float(means[i]), float(mins[i])) for i, cid in enumerate(order)}
    rows = []
    for cid in sorted(groups):
        entry = ws.current_map.catalog[cid]
        members = groups[cid]
        mean_c, min_c = stats.get(cid, (None, None))
        rows.append({
            "canonical_id": cid,
            "name": entry.name,
            "categories": list(entry.categories),
            "vegetarian": entry.vegetarian,
            "vegan": entry.vegan,
            "member_ids": members,
            "member_names": [ws.current_map.original_names[i] for i in members],
            "n": len(members),
            "mean_pairwise": _nan_to_none(mean_c),
            "min_pairwise": _nan_to_none(min_c),
        })
    return rows


def _dimension_detail(ws: Workspace, labels) -> dict:
    body = {
        "dimension": labels.dimension,
        "kind": labels.kind,
        "n": len(labels.labels),
        "units": labels.units,
        "scale": list(labels.scale) if labels.scale else None,
        "values": {
            ws.merged.name(eid): (sorted(v) if isinstance(v, frozenset) else v)
            for eid, v in sorted(labels.labels.items())
        },
    }
    try:
        if labels.kind == "ordinal":
            report = axes_mod.evaluate_ordinal(ws.merged, labels)
        elif labels.kind == "binary":
            report = axes_mod.evaluate_binary(ws.merged, labels)
        elif labels.kind == "numeric":
            report = axes_mod.evaluate_measured(ws.merged, labels, labels)
        elif labels.kind == "categorical":
            report = axes_mod.categorical_delta(ws.merged, labels).report()
        else:
            report = None
        body["report"] = report.to_dict() if report else None
    except (ValueError, KeyError) as exc:
        body["report"] = {"error": str(exc)}
    return body


def create_app(workspace_dir, token_env: str | None = None,
               frontend_dir: str | None = None) -> FastAPI:
    workspace_dir = Path(workspace_dir)
    state = {"ws": Workspace.load(workspace_dir), "digest": ""}
    state["digest"] = manifest_digest(state["ws"].manifest())
    write_lock = threading.Lock()
    jobs: dict[str, dict] = {}
    jobs_lock = threading.Lock()
    job_counter = {"next": 1}

    required_token = os.environ.get(token_env) if token_env else None

    app = FastAPI(title="flavorbench workspace", docs_url=None, redoc_url=None)

    def refresh() -> None:
        ws = Workspace.load(workspace_dir)
        state["ws"] = ws
        state["digest"] = manifest_digest(ws.manifest())

    @app.middleware("http")
    async def manifest_and_auth(request: Request, call_next):
        if required_token and request.url.path.startswith("/api/"):
            supplied = request.headers.get("authorization", "")
            if supplied != f"Bearer {required_token}":
                response = JSONResponse({"detail": "missing or bad bearer token"},
                                        status_code=401)
                response.headers["X-Workspace-Manifest"] = state["digest"]
                return response
        response = await call_next(request)
        response.headers["X-Workspace-Manifest"] = state["digest"]
        return response

    @app.get("/api/health")
    def health():
        ws = state["ws"]
        return {
            "status": "ok",
            "manifest": state["digest"],
            "n_original": len(ws.raw),
            "n_canonical": len(ws.merged),
            "n_overrides": len(ws.overrides),
        }

    @app.get("/api/ingredients")
    def ingredients():
        ws = state["ws"]
        groups = ws.current_map.groups()
        out = []
        for cid in sorted(ws.current_map.catalog):
            entry = ws.current_map.catalog[cid]
            out.append({
                "canonical_id": cid,
                "name": entry.name,
                "categories": list(entry.categories),
                "vegetarian": entry.vegetarian,
                "vegan": entry.vegan,
                "group_size": len(groups[cid]),
            })
        return {"ingredients": out, "count": len(out)}

    @app.get("/api/groups")
    def groups():
        ws = state["ws"]
        rows = _group_rows(ws)
        return {"groups": rows, "count": len(rows),
                "removed_ids": ws.current_map.removed_ids()}

    @app.post("/api/overrides")
    def post_overrides(payload: dict):
        if not isinstance(payload, dict) or "actions" not in payload:
            raise HTTPException(400, "body must be an object with an actions array")
        actions = payload["actions"]
        if not isinstance(actions, list) or not actions:
            raise HTTPException(400, "actions must be a non-empty array")
        with write_lock:
            ws = state["ws"]
            try:
                extended = ws.overrides.extended(actions)
                new_map, audit = curation.apply_overrides(ws.base_map, extended)
            except (OverrideError, ValueError, KeyError) as exc:
                raise HTTPException(400, f"override rejected: {exc}") from None
            save_overrides(extended, workspace_dir / "overrides.json")
            refresh()
        return {
            "applied": len(actions),
            "n_overrides": len(extended),
            "n_groups": len(new_map.catalog),
            "audit": audit[-len(actions):],
        }

    @app.get("/api/dimensions")
    def dimensions():
        ws = state["ws"]
        dims = ws.label_dimensions()
        return {"dimensions": [
            {"dimension": d, "kind": ls.kind, "n": len(ls.labels)}
            for d, ls in sorted(dims.items())
        ]}

    @app.get("/api/dimensions/{name}")
    def dimension_detail(name: str):
        ws = state["ws"]
        dims = ws.label_dimensions()
        if name not in dims:
            raise HTTPException(404, f"no dimension named {name!r}; "
                                     f"have {sorted(dims)}")
        return _dimension_detail(ws, dims[name])

    @app.get("/api/culture")
    def culture():
        ws = state["ws"]
        tags = ws.cuisine()
        if tags is None:
            raise HTTPException(404, "workspace has no cuisine_tags.json")
        k = min(culture_mod.DEFAULT_K, len(ws.merged) - 1)
        purity = culture_mod.knn_purity(ws.merged, tags, k=k)
        intra = culture_mod.intra_cluster_similarity(ws.merged, tags)
        return {
            "legend": list(tags.catalog),
            "purity": purity.to_dict(),
            "intra_similarity": intra.to_dict(),
            "tags": {ws.merged.name(i): sorted(t) for i, t in sorted(tags.tags.items())},
        }

    @app.get("/api/projection3d")
    def projection3d():
        ws = state["ws"]
        coords = ws.coords3d()
        if coords is None:
            raise HTTPException(404, "workspace has no coords3d.csv")
        dims = ws.label_dimensions()
        tags = ws.cuisine()
        profile = dims.get("flavor_profile")
        tag_names = ({i: sorted(t) for i, t in tags.tags.items()} if tags else {})
        points = []
        for eid in sorted(coords):
            if not ws.merged.has_id(eid):
                continue  # retired by an override; drop the ghost point
            x, y, z = coords[eid]
            points.append({
                "id": eid,
                "name": ws.merged.name(eid),
                "x": x, "y": y, "z": z,
                "profile": profile.labels.get(eid) if profile else None,
                "cuisines": tag_names.get(eid, []),
            })
        pole = None
        if profile is not None:
            sweet_ids = [i for i, v in profile.labels.items()
                         if v == SWEET_POLE and i in coords]
            savoury_ids = [i for i, v in profile.labels.items()
                           if v == SAVOURY_POLE and i in coords]
            if sweet_ids and savoury_ids:
                try:
                    pole = axes_mod.pole_plane_projection(
                        coords, high_ids=sweet_ids, low_ids=savoury_ids,
                    ).to_dict()
                    pole["low_pole"] = SAVOURY_POLE
                    pole["high_pole"] = SWEET_POLE
                except ValueError:
                    pole = None
        legend = list(tags.catalog) if tags else []
        return {"points": points, "pole": pole, "legend": legend}

    def _run_recompute(job_id: str) -> None:
        try:
            ws = state["ws"]
            result = {}
            try:
                result["noise"] = curation.variant_noise(
                    ws.raw, ws.current_map, top_k=20, seed=Seed(0),
                ).to_dict()
            except ValueError as exc:
                result["noise"] = {"error": str(exc)}
            tags = ws.cuisine()
            if tags is not None:
                k = min(culture_mod.DEFAULT_K, len(ws.merged) - 1)
                result["purity"] = culture_mod.knn_purity(ws.merged, tags, k=k).to_dict()
            with jobs_lock:
                jobs[job_id] = {"status": "done", "result": result}
        except Exception as exc:  # noqa: BLE001 - job must record any failure
            with jobs_lock:
                jobs[job_id] = {"status": "failed", "error": str(exc)}

    @app.post("/api/recompute")
    def recompute():
        with jobs_lock:
            job_id = f"job-{job_counter['next']}"
            job_counter["next"] += 1
            jobs[job_id] = {"status": "pending"}
        thread = threading.Thread(target=_run_recompute, args=(job_id,), daemon=True)
        thread.start()
        return {"job_id": job_id, "status": "pending"}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        with jobs_lock:
            job = jobs.get(job_id)
        if job is None:
            raise HTTPException(404, f"no job {job_id!r}")
        return {"job_id": job_id, **job}

    if frontend_dir:
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="frontend")

    return app
