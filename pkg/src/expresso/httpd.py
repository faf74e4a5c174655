"""Minimal JSON HTTP plumbing for the desk-scale services.

Every service is a plain Python object wrapped by a route table and served
by a threading HTTP server on an ephemeral loopback port.  Peers identify
themselves with an ``X-Source-Address`` header, the desk-scale stand-in
for the network address a real deployment would see; each service keeps a
request log of (source, method, path) tuples, which is what the privacy
assertions scan.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qsl, urlsplit

SOURCE_HEADER = "X-Source-Address"


class ApiError(Exception):
    def __init__(self, status: int, code: str, detail: str = ""):
        super().__init__(detail or code)
        self.status = status
        self.code = code
        self.detail = detail


@dataclass
class Request:
    method: str
    path: str
    query: dict
    body: dict
    raw_body: bytes
    headers: dict
    source: str
    match: re.Match | None = None

    def param(self, name: str) -> str:
        if name in self.query:
            return self.query[name]
        raise ApiError(400, "missing_parameter", "missing query parameter %r" % name)


@dataclass
class Response:
    status: int = 200
    payload: dict | None = None
    raw: bytes | None = None
    content_type: str = "application/json"
    headers: dict = field(default_factory=dict)


class Service:
    """Route table plus request log; wrap with :func:`serve` to go live."""

    def __init__(self, name: str):
        self.name = name
        self.routes: list[tuple[str, re.Pattern, object]] = []
        self.request_log: list[tuple[str, str, str]] = []
        self._log_lock = threading.Lock()

    def route(self, method: str, pattern: str):
        compiled = re.compile("^" + pattern + "$")

        def register(fn):
            self.routes.append((method, compiled, fn))
            return fn

        return register

    def log_request(self, source: str, method: str, path: str):
        with self._log_lock:
            self.request_log.append((source, method, path))

    def dispatch(self, req: Request) -> Response:
        for method, pattern, fn in self.routes:
            if method != req.method:
                continue
            m = pattern.match(req.path)
            if m:
                req.match = m
                return fn(req)
        raise ApiError(404, "not_found", "no route for %s %s" % (req.method, req.path))


def _make_handler(service: Service):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet the default stderr chatter
            pass

        def _handle(self, method: str):
            parts = urlsplit(self.path)
            source = self.headers.get(SOURCE_HEADER, "unknown")
            service.log_request(source, method, parts.path)
            length = int(self.headers.get("Content-Length", 0) or 0)
            raw = self.rfile.read(length) if length else b""
            body = {}
            if raw and self.headers.get("Content-Type", "").startswith("application/json"):
                try:
                    body = json.loads(raw)
                except ValueError:
                    self._send(Response(400, {"error": "bad_json", "detail": ""}))
                    return
            req = Request(
                method=method,
                path=parts.path,
                query=dict(parse_qsl(parts.query)),
                body=body,
                raw_body=raw,
                headers=dict(self.headers),
                source=source,
            )
            try:
                resp = service.dispatch(req)
            except ApiError as exc:
                resp = Response(exc.status, {"error": exc.code, "detail": exc.detail})
            except Exception as exc:  # noqa: BLE001 - service must stay up
                resp = Response(500, {"error": "internal", "detail": str(exc)})
            self._send(resp)

        def _send(self, resp: Response):
            if resp.raw is not None:
                data = resp.raw
            else:
                data = json.dumps(resp.payload if resp.payload is not None else {}).encode()
            self.send_response(resp.status)
            self.send_header("Content-Type", resp.content_type)
            self.send_header("Content-Length", str(len(data)))
            for key, value in resp.headers.items():
                self.send_header(key, value)
            self.end_headers()
            self.wfile.write(data)

        def do_GET(self):
            self._handle("GET")

        def do_POST(self):
            self._handle("POST")

        def do_DELETE(self):
            self._handle("DELETE")

    return Handler


class RunningServer:
    def __init__(self, service: Service, httpd: ThreadingHTTPServer, thread: threading.Thread):
        self.service = service
        self.httpd = httpd
        self.thread = thread
        self.base_url = "http://127.0.0.1:%d" % httpd.server_address[1]

    def stop(self):
        self.httpd.shutdown()
        self.httpd.server_close()
        self.thread.join(timeout=5)


def serve(service: Service, port: int = 0) -> RunningServer:
    httpd = ThreadingHTTPServer(("127.0.0.1", port), _make_handler(service))
    thread = threading.Thread(target=httpd.serve_forever, name=service.name, daemon=True)
    thread.start()
    return RunningServer(service, httpd, thread)
