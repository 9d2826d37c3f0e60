"""Local HTTP inference service.

Endpoints (JSON UTF-8, permissive CORS so the browser scanner can call in
from any origin):

    GET  /v1/health    -> {"status":"ok"}
    GET  /v1/model     -> model header plus parameter count / file size
    POST /v1/classify  -> {"label","confidence","probabilities",
                           "latency_ms","model_id"}

Classify accepts ``{"image_b64": <base64 PNG/JPEG>}`` or a multipart form
with an ``image`` field.  Decoded payloads above 10 MiB are refused with
413.  Every non-2xx body is ``{"error": code, "message": text}``.

The model is loaded once and shared read-only across request threads; the
forward pass takes no lock.
"""

from __future__ import annotations

import base64
import binascii
import io
import json
import logging
import time
from email.parser import BytesParser
from email.policy import default as _email_default_policy
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageDecodeError, ServiceStartupError
from .model import ModelSpec, predict
from .modelfile import load_model, model_info

log = logging.getLogger("bdcd.server")

MAX_IMAGE_BYTES = 10 * 1024 * 1024           # decoded payload cap
MAX_BODY_BYTES = MAX_IMAGE_BYTES * 3 // 2 + 4096   # base64 + envelope headroom


def decode_image_bytes(blob: bytes) -> np.ndarray:
    """PNG/JPEG bytes to a uint8 HxWx3 raster."""
    try:
        with Image.open(io.BytesIO(blob)) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ImageDecodeError(f"cannot decode image: {exc}") from exc


def classify_bytes(model: ModelSpec, blob: bytes, model_id: str) -> dict:
    """Run one image through the model; latency covers decode to response."""
    start = time.perf_counter()
    raster = decode_image_bytes(blob)
    pred = predict(model, raster)
    probs = {name: float(p) for name, p in zip(model.class_labels, pred.probabilities)}
    return {
        "label": pred.label,
        "confidence": pred.confidence,
        "probabilities": probs,
        "latency_ms": (time.perf_counter() - start) * 1000.0,
        "model_id": model_id,
    }


def _multipart_field(content_type: str, body: bytes, field: str) -> bytes | None:
    msg = BytesParser(policy=_email_default_policy).parsebytes(
        b"Content-Type: " + content_type.encode("latin-1") + b"\r\n\r\n" + body)
    if not msg.is_multipart():
        return None
    for part in msg.iter_parts():
        if part.get_param("name", header="content-disposition") == field:
            return part.get_payload(decode=True)
    return None


class _Handler(BaseHTTPRequestHandler):
    server_version = "bdcd"
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        log.debug("%s " + fmt, self.address_string(), *args)

    def _cors(self):
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")

    def _send_json(self, status: int, payload: dict):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self._cors()
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, status: int, code: str, message: str):
        self._send_json(status, {"error": code, "message": message})

    def do_OPTIONS(self):
        self.send_response(204)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        if self.path == "/v1/health":
            self._send_json(200, {"status": "ok"})
        elif self.path == "/v1/model":
            self._send_json(200, self.server.info)
        else:
            self._send_error_json(404, "not_found", f"no route for {self.path}")

    def do_POST(self):
        if self.path != "/v1/classify":
            self._send_error_json(404, "not_found", f"no route for {self.path}")
            return
        try:
            length = int(self.headers.get("Content-Length") or 0)
        except ValueError:
            self._send_error_json(400, "bad_request", "invalid Content-Length")
            return
        if length > MAX_BODY_BYTES:
            self._send_error_json(413, "payload_too_large",
                                  f"request body above {MAX_BODY_BYTES} bytes")
            return
        if length <= 0:
            self._send_error_json(400, "bad_request", "empty request body")
            return
        body = self.rfile.read(length)
        ctype = (self.headers.get("Content-Type") or "").strip()

        if ctype.split(";")[0].strip().lower() == "application/json":
            try:
                payload = json.loads(body.decode("utf-8"))
                encoded = payload["image_b64"]
            except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError):
                self._send_error_json(400, "bad_request",
                                      'body must be JSON with an "image_b64" field')
                return
            try:
                blob = base64.b64decode(encoded, validate=True)
            except (binascii.Error, ValueError, TypeError):
                self._send_error_json(400, "bad_image", "image_b64 is not valid base64")
                return
        elif ctype.split(";")[0].strip().lower() == "multipart/form-data":
            try:
                blob = _multipart_field(ctype, body, "image")
            except Exception:
                blob = None
            if blob is None:
                self._send_error_json(400, "bad_request",
                                      'multipart body must carry an "image" field')
                return
        else:
            self._send_error_json(400, "bad_request",
                                  "send application/json or multipart/form-data")
            return

        if len(blob) > MAX_IMAGE_BYTES:
            self._send_error_json(413, "payload_too_large",
                                  f"image above {MAX_IMAGE_BYTES} bytes")
            return
        try:
            result = classify_bytes(self.server.model, blob, self.server.model_id)
        except ImageDecodeError as exc:
            self._send_error_json(400, "bad_image", str(exc))
            return
        self._send_json(200, result)


class InferenceServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, model_path, host: str = "127.0.0.1", port: int = 8080):
        self.model = load_model(model_path)
        self.info = model_info(model_path)
        self.model_id = self.info["model_id"]
        try:
            super().__init__((host, port), _Handler)
        except OSError as exc:
            raise ServiceStartupError(f"cannot bind {host}:{port}: {exc}") from exc


def create_server(model_path, host: str = "127.0.0.1", port: int = 8080) -> InferenceServer:
    return InferenceServer(model_path, host, port)


def serve(model_path, host: str = "127.0.0.1", port: int = 8080) -> None:
    """Blocking entry point: load the model and serve until interrupted."""
    httpd = create_server(model_path, host, port)
    bound = httpd.server_address
    log.info("serving model %s on http://%s:%d", model_path, bound[0], bound[1])
    try:
        httpd.serve_forever()
    finally:
        httpd.server_close()
