from .transport import LocalEndpoint, TcpEndpoint, serve_tcp, start_background
from .wire import Frame, FrameType, frame_decode, frame_encode

__all__ = [
    "Frame",
    "FrameType",
    "LocalEndpoint",
    "TcpEndpoint",
    "frame_decode",
    "frame_encode",
    "serve_tcp",
    "start_background",
]
