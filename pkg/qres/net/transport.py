"""Request/response channels carrying frames.

``LocalEndpoint`` calls a handler in-process but still pushes every frame
through the codec; ``TcpEndpoint`` and ``serve_tcp`` do the same over sockets.
"""

from __future__ import annotations

import socket
import socketserver
import threading
from typing import Callable, List, Optional, Tuple

from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_exponential

from qres.errors import QresError, Truncated
from qres.net.wire import Frame, error_frame, frame_decode, frame_encode, frame_length
from qres.utils import get_logger

logger = get_logger(__name__)

Handler = Callable[[Frame], Frame]
Transcript = List[Tuple[str, bytes]]


def safe_handle(handler: Handler, frame: Frame) -> Frame:
    try:
        return handler(frame)
    except QresError as e:
        return error_frame(e)
    except Exception as e:
        logger.exception("handler failed type=%s", frame.type.name)
        return error_frame(e)


class LocalEndpoint:
    """In-process channel; ``transcript`` records ("in"|"out", bytes) as seen by the handler."""

    def __init__(self, handler: Handler, transcript: Optional[Transcript] = None):
        self.handler = handler
        self.transcript = transcript

    def request(self, frame: Frame) -> Frame:
        raw = frame_encode(frame)
        if self.transcript is not None:
            self.transcript.append(("in", raw))
        reply = frame_encode(safe_handle(self.handler, frame_decode(raw)))
        if self.transcript is not None:
            self.transcript.append(("out", reply))
        return frame_decode(reply)

    def close(self) -> None:
        pass


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(min(n - len(buf), 1 << 20))
        if not chunk:
            raise Truncated(f"connection closed after {len(buf)} of {n} bytes")
        buf.extend(chunk)
    return bytes(buf)


def read_frame(sock: socket.socket) -> Optional[Frame]:
    """Next frame from the socket, or None on a clean close between frames."""
    first = sock.recv(4)
    if not first:
        return None
    header = first + _recv_exact(sock, 4 - len(first)) if len(first) < 4 else first
    body = _recv_exact(sock, frame_length(header))
    return frame_decode(header + body)


class TcpEndpoint:
    def __init__(self, host: str, port: int, timeout: float = 60.0):
        self.host = host
        self.port = port
        self.timeout = timeout
        self._sock: Optional[socket.socket] = None
        self._lock = threading.Lock()

    @retry(stop=stop_after_attempt(10), wait=wait_exponential(multiplier=0.2, min=0.2, max=5),
           retry=retry_if_exception_type(OSError), reraise=True)
    def _connect(self) -> socket.socket:
        return socket.create_connection((self.host, self.port), timeout=self.timeout)

    def request(self, frame: Frame) -> Frame:
        with self._lock:
            if self._sock is None:
                self._sock = self._connect()
            try:
                self._sock.sendall(frame_encode(frame))
                reply = read_frame(self._sock)
            except (OSError, QresError):
                self.close()
                raise
            if reply is None:
                self.close()
                raise Truncated(f"{self.host}:{self.port} closed the connection")
            return reply

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            finally:
                self._sock = None


class _FrameHandler(socketserver.BaseRequestHandler):
    def handle(self):
        handler: Handler = self.server.frame_handler
        while True:
            try:
                frame = read_frame(self.request)
            except QresError as e:
                logger.warning("tcp bad frame peer=%s err=%s", self.client_address[0], e)
                self.request.sendall(frame_encode(error_frame(e)))
                return
            except OSError:
                return
            if frame is None:
                return
            self.request.sendall(frame_encode(safe_handle(handler, frame)))


class _Server(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True


def serve_tcp(handler: Handler, host: str, port: int) -> socketserver.ThreadingTCPServer:
    """Bind a threaded frame server; call ``serve_forever`` (or ``start_background``) on the result."""
    server = _Server((host, port), _FrameHandler)
    server.frame_handler = handler
    logger.info("tcp listening addr=%s:%d", *server.server_address[:2])
    return server


def start_background(server: socketserver.BaseServer) -> threading.Thread:
    t = threading.Thread(target=server.serve_forever, name="qres-tcp", daemon=True)
    t.start()
    return t
