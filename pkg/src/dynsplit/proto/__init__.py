from .codec import (
    DEFAULT_MAX_PAYLOAD,
    HEADER_SIZE,
    MAGIC,
    VERSION,
    BadMagic,
    BadVersion,
    ChecksumError,
    MalformedPayload,
    Message,
    MsgType,
    OversizedFrame,
    ProtocolError,
    TruncatedFrame,
    UnknownMessageType,
    decode,
    decode_header,
    encode,
)
from .transport import (
    LoopbackEndpoint,
    StreamEndpoint,
    StreamListener,
    TransportError,
    loopback_transport,
    stream_connect,
    stream_transport,
)

__all__ = [
    "BadMagic", "BadVersion", "ChecksumError", "DEFAULT_MAX_PAYLOAD", "HEADER_SIZE", "LoopbackEndpoint",
    "MAGIC", "MalformedPayload", "Message", "MsgType", "OversizedFrame", "ProtocolError",
    "StreamEndpoint", "StreamListener", "TransportError", "TruncatedFrame", "UnknownMessageType",
    "VERSION", "decode", "decode_header", "encode", "loopback_transport", "stream_connect",
    "stream_transport",
]
