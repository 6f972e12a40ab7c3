"""FastAPI service wrapping the toolchain.

The service is a local job server: request bodies carry paths resolved
on the server's filesystem, and artifacts are written there. Input and
configuration problems map to 400, simulation/runtime failures to 500
with the diagnostic carried verbatim in the detail field.
"""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, ops
from ..errors import (ManifestError, MergeError, SchemaViolation,
                      SemanticError, SizeMismatch, Unsatisfiable,
                      VrcflowError, XmlSyntaxError)
from .schemas import (HealthResponse, MergeRequest, MergeResponse,
                      ReportRequest, ReportResponse, RunRequest, RunResponse)

_INPUT_ERRORS = (ManifestError, MergeError, SchemaViolation, SemanticError,
                 SizeMismatch, Unsatisfiable, XmlSyntaxError,
                 FileNotFoundError, ValueError)


def create_app() -> FastAPI:
    app = FastAPI(title="vrcflow", version=__version__,
                  description="Dataflow-to-VRC toolchain service")

    @app.exception_handler(VrcflowError)
    async def vrcflow_error(request: Request, exc: VrcflowError):
        status = 400 if isinstance(exc, _INPUT_ERRORS) else 500
        return JSONResponse(status_code=status,
                            content={"detail": str(exc),
                                     "error": type(exc).__name__})

    @app.exception_handler(FileNotFoundError)
    async def missing_file(request: Request, exc: FileNotFoundError):
        return JSONResponse(status_code=400,
                            content={"detail": str(exc),
                                     "error": "FileNotFoundError"})

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/merge", response_model=MergeResponse)
    def merge_endpoint(req: MergeRequest):
        return ops.merge_networks(req.inputs, req.out_dir,
                                  base_address=req.base_address,
                                  fu_monitors=req.fu_monitors)

    @app.post("/run", response_model=RunResponse)
    def run_endpoint(req: RunRequest):
        return ops.run_manifest(req.manifest)

    @app.post("/report", response_model=ReportResponse)
    def report_endpoint(req: ReportRequest):
        return ops.summarize_traces(req.csv_dir, req.event)

    return app
