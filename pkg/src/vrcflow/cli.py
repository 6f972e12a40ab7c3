"""Command-line client for the toolchain service.

Subcommands talk HTTP to a vrcflow service. By default the service runs
in-process (the CLI mounts the FastAPI app over an ASGI transport, so
all paths resolve on the local filesystem); --server points it at a
remote instance instead. `vrcflow serve` starts a standalone server.

Exit codes: 0 success, 1 runtime/simulation error, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import sys

import httpx

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    # in-process: mount the service over a synchronous ASGI client
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from starlette.testclient import TestClient
    from .service import create_app
    return TestClient(create_app(), raise_server_exceptions=False)


def _post(args, path: str, payload: dict) -> tuple[int, dict]:
    with _client(args.server) as client:
        try:
            resp = client.post(path, json=payload)
        except httpx.HTTPError as exc:
            print(f"error: cannot reach service: {exc}", file=sys.stderr)
            return EXIT_RUNTIME, {}
    try:
        body = resp.json()
    except ValueError:
        body = {"detail": resp.text}
    if resp.status_code >= 500:
        print(f"error: {body.get('detail', resp.text)}", file=sys.stderr)
        return EXIT_RUNTIME, body
    if resp.status_code >= 400:
        print(f"error: {body.get('detail', resp.text)}", file=sys.stderr)
        return EXIT_USAGE, body
    return EXIT_OK, body


def cmd_merge(args) -> int:
    code, body = _post(args, "/merge", {
        "inputs": args.inputs,
        "out_dir": args.out_dir,
        "base_address": int(args.base_address, 0),
        "fu_monitors": args.fu_monitors,
    })
    if code != EXIT_OK:
        return code
    print(f"merged {len(args.inputs)} network(s) -> {body['merged_xdf']}")
    print(f"  configurations: {body['configurations']}")
    print(f"  functional actors: {body['functional_actors']}, "
          f"sboxes: {body['sbox_count']}")
    print(f"  c_tab: {body['ctab']}")
    print(f"  monitor config: {body['mdc_info']} ({body['events']} events)")
    return EXIT_OK


def cmd_run(args) -> int:
    code, body = _post(args, "/run", {"manifest": args.manifest})
    if code != EXIT_OK:
        return code
    t = body["throughput"]
    print(f"ran {body['iterations']} iteration(s) of kernel "
          f"{body['kernel']!r}, monitoring={body['monitoring']}")
    print(f"  throughput: {t['fps_mean']:.2f} FpS "
          f"(std dev {t['fps_std']:.4f})")
    print(f"  trace rows: {body['rows_written']}"
          + (f" -> {body['csv_dir']}" if body.get("csv_dir") else ""))
    print(f"  report: {body['report']}")
    if body.get("overhead"):
        print(body["overhead"]["table"])
    return EXIT_OK


def cmd_report(args) -> int:
    code, body = _post(args, "/report",
                       {"csv_dir": args.csv_dir, "event": args.event})
    if code != EXIT_OK:
        return code
    print(body["text"])
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn
    from .service import create_app
    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vrcflow",
        description="Merge dataflow networks into a virtual reconfigurable "
                    "circuit, run monitored applications on its simulator, "
                    "and analyze the traces.")
    parser.add_argument("--server", metavar="URL", default=None,
                        help="use a running service instead of in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("merge", help="merge XDF networks into one accelerator")
    p.add_argument("-o", "--out-dir", required=True)
    p.add_argument("inputs", nargs="+", metavar="XDF")
    p.add_argument("--base-address", default="0x43c00000")
    p.add_argument("--fu-monitors", action="store_true",
                   help="include per-FU firing counters in the monitor window")
    p.set_defaults(fn=cmd_merge)

    p = sub.add_parser("run", help="execute a run manifest")
    p.add_argument("-m", "--manifest", required=True)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("report", help="summarize trace CSVs")
    p.add_argument("csv_dir")
    p.add_argument("--event", default=None,
                   help="also dump a per-event timeline")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("serve", help="start the toolchain service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except KeyboardInterrupt:
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
