"""Minimal JSON-over-HTTP plumbing on top of the standard library."""
from __future__ import annotations

import json
import re
import urllib.error
import urllib.request
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..errors import ConfigurationError, JobNotFound, PayloadTooLarge, QaoaBatchError, SubmissionError


class RemoteError(QaoaBatchError):
    def __init__(self, status, doc):
        self.status = status
        self.doc = doc
        super().__init__(f"HTTP {status}: {doc.get('message', doc)}")


class Unreachable(QaoaBatchError):
    """The peer could not be contacted at all."""


def request(method, url, body=None, timeout=10.0):
    data = None if body is None else json.dumps(body).encode()
    req = urllib.request.Request(url, data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            raw = resp.read()
    except urllib.error.HTTPError as exc:
        try:
            doc = json.loads(exc.read() or b"{}")
        except ValueError:
            doc = {"message": str(exc)}
        raise RemoteError(exc.code, doc) from None
    except (urllib.error.URLError, OSError) as exc:
        raise Unreachable(f"{method} {url}: {exc}") from None
    return json.loads(raw) if raw else {}


def error_doc(exc):
    doc = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, SubmissionError):
        doc["circuit_ids"] = exc.circuit_ids
    return doc


def status_for(exc):
    if isinstance(exc, PayloadTooLarge):
        return 413
    if isinstance(exc, JobNotFound):
        return 404
    if isinstance(exc, (SubmissionError, ValueError, KeyError, ConfigurationError)):
        return 400
    return 500


class Router:
    """``(method, regex) -> handler(match, body)`` table; handlers return ``(status, doc)``."""

    def __init__(self):
        self.routes = []

    def add(self, method, pattern, fn):
        self.routes.append((method, re.compile(f"^{pattern}$"), fn))

    def dispatch(self, method, path, body):
        for m, rx, fn in self.routes:
            match = rx.match(path)
            if match and m == method:
                return fn(match, body)
        return 404, {"error": "NotFound", "message": f"no route for {method} {path}"}


def serve(router, host, port, max_body=256 << 20):
    """Start a threading HTTP server for ``router``; the caller runs ``serve_forever``."""

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, *args):  # keep test output quiet
            pass

        def _handle(self, method):
            length = int(self.headers.get("Content-Length") or 0)
            if length > max_body:
                self._reply(413, {"error": "PayloadTooLarge", "message": f"body exceeds {max_body} bytes"})
                return
            raw = self.rfile.read(length) if length else b""
            try:
                body = json.loads(raw) if raw else {}
                status, doc = router.dispatch(method, self.path.split("?")[0], body)
            except Exception as exc:  # every failure becomes a JSON error document
                status, doc = status_for(exc), error_doc(exc)
            self._reply(status, doc)

        def _reply(self, status, doc):
            out = json.dumps(doc, sort_keys=True).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(out)))
            self.end_headers()
            self.wfile.write(out)

        def do_GET(self):
            self._handle("GET")

        def do_POST(self):
            self._handle("POST")

    server = ThreadingHTTPServer((host, port), Handler)
    server.daemon_threads = True
    return server
