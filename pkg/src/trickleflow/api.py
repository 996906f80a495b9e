"""HTTP JSON API and SSE stream consumed by the control room."""
from __future__ import annotations

import json
import logging
import queue as queue_mod

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.responses import JSONResponse, StreamingResponse

from .errors import ConflictError, GoneError, IntegrityError, NotFoundError
from .federation import matrix_to_csv, scheduling_matrix
from .incident import IncidentConfig, IncidentService, Region

log = logging.getLogger(__name__)

SSE_KEEPALIVE_S = 15.0


def sse_frame(event_type: str, data: dict) -> str:
    return f"event: {event_type}\ndata: {json.dumps(data)}\n\n"


def create_app(service: IncidentService) -> FastAPI:
    app = FastAPI(title="trickleflow", version="0.1.0")
    app.state.service = service

    @app.exception_handler(NotFoundError)
    async def _not_found(request, exc):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(ConflictError)
    async def _conflict(request, exc):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(GoneError)
    async def _gone(request, exc):
        return JSONResponse(status_code=410, content={"detail": str(exc)})

    @app.exception_handler(IntegrityError)
    async def _integrity(request, exc):
        return JSONResponse(status_code=500, content={"detail": str(exc)})

    # -- incidents ------------------------------------------------------------

    @app.post("/incidents", status_code=201)
    def create_incident(body: dict):
        try:
            region = Region(**body["region"])
            config = (IncidentConfig(**body["config"])
                      if "config" in body else None)
            incident_id = service.create_incident(
                kind=body.get("kind", "mosquito"),
                region=region,
                species=body.get("species", "albopictus"),
                disease=body.get("disease", "chikungunya"),
                ladder=tuple(body["ladder"]) if "ladder" in body else None,
                config=config,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"incident_id": incident_id}

    @app.post("/incidents/{incident_id}/activate")
    def activate(incident_id: str):
        service.activate(incident_id)
        return {"status": "ACTIVE"}

    @app.get("/incidents/{incident_id}")
    def get_incident(incident_id: str):
        inc = service.incident(incident_id)
        return {
            "id": inc.id,
            "kind": inc.kind,
            "status": inc.status,
            "species": inc.species,
            "disease": inc.disease,
            "region": vars(inc.region),
            "ladder": list(inc.ladder.rungs),
            "scenario_ids": list(inc.scenario_ids),
            "events": list(inc.events),
        }

    @app.post("/incidents/{incident_id}/scenarios", status_code=201)
    def create_scenario(incident_id: str, body: dict | None = None):
        body = body or {}
        try:
            ladder = tuple(body["ladder"]) if "ladder" in body else None
            scenario_id = service.create_scenario(
                incident_id, ladder=ladder, seed=body.get("seed"))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"scenario_id": scenario_id}

    # -- scenarios and results ----------------------------------------------------

    @app.get("/scenarios/{scenario_id}")
    def get_scenario(scenario_id: str):
        sc = service.scenario(scenario_id)
        with sc.lock:
            return {
                "id": sc.id,
                "incident_id": sc.incident_id,
                "ladder": list(sc.ladder.rungs),
                "visible_fidelity": sc.visible_fidelity,
                "rungs": {
                    str(f): r.result_set(sc.id) for f, r in sc.rungs.items()
                },
            }

    @app.get("/scenarios/{scenario_id}/result")
    def get_result(scenario_id: str):
        return service.visible_result(scenario_id)

    @app.get("/scenarios/{scenario_id}/events")
    def get_events(scenario_id: str, request: Request, replay: bool = True,
                   follow: bool = True):
        """SSE stream of scenario events; with follow=false the stream
        closes after the replayed backlog (for polling clients)."""
        backlog, sub = service.subscribe(scenario_id, replay=replay)

        def stream():
            try:
                for event in backlog:
                    yield sse_frame(event["type"],
                                    {**event["data"], "seq": event["seq"]})
                while follow:
                    try:
                        event = sub.get(timeout=SSE_KEEPALIVE_S)
                    except queue_mod.Empty:
                        yield ": keepalive\n\n"
                        continue
                    yield sse_frame(event["type"],
                                    {**event["data"], "seq": event["seq"]})
            finally:
                service.unsubscribe(scenario_id, sub)

        return StreamingResponse(stream(), media_type="text/event-stream")

    # -- data ----------------------------------------------------------------------

    @app.get("/data/{data_id}")
    def get_data(data_id: str):
        entry = service.datamgr.entry(data_id)
        stream = service.datamgr.fetch(data_id)
        return StreamingResponse(
            stream, media_type="application/octet-stream",
            headers={"X-Data-Kind": entry.kind,
                     "X-Data-Filename": entry.filename})

    # -- federation -------------------------------------------------------------------

    @app.get("/machines")
    def get_machines():
        return service.federation.state_snapshot()

    @app.get("/metrics/scheduling-matrix")
    def get_matrix():
        matrix = scheduling_matrix(service.federation.records())
        return Response(content=matrix_to_csv(matrix), media_type="text/csv")

    # -- EDI ----------------------------------------------------------------------------

    @app.post("/edi/push/{handler_name}")
    async def edi_push(handler_name: str, request: Request):
        content = await request.body()
        result = service.edi.ingest(handler_name, content, source="pushed")
        if result["deduplicated"]:
            return Response(
                content=json.dumps({"deduplicated": True}),
                media_type="application/json", status_code=200)
        return Response(
            content=json.dumps({"deduplicated": False,
                                "message_id": result["message_id"]}),
            media_type="application/json", status_code=202)

    return app
