"""Minimal WebSocket (RFC 6455) text-frame transport over asyncio streams.

Just enough of the protocol for the session service and its clients:
HTTP upgrade handshake, unfragmented text frames, close, and ping/pong.
Payloads are UTF-8 JSON documents; framing and schema live here so the
server, the Python test client, and the browser console all speak the
same wire format.
"""

import asyncio
import base64
import hashlib
import json
import os
import struct

_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_TEXT = 0x1
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA

# Frames are small JSON documents; anything bigger is a broken peer.
MAX_FRAME_BYTES = 1 << 20

SCHEMA_VERSION = 1

MSG_HELLO = "hello"
MSG_TELEMETRY = "telemetry"
MSG_PHASE_CHANGE = "phase_change"
MSG_EVENT = "event"
MSG_COMMAND = "command"
MSG_COMMAND_ACK = "command_ack"
MSG_ERROR = "error"

MESSAGE_TYPES = (
    MSG_HELLO,
    MSG_TELEMETRY,
    MSG_PHASE_CHANGE,
    MSG_EVENT,
    MSG_COMMAND,
    MSG_COMMAND_ACK,
    MSG_ERROR,
)


class WireClosed(ConnectionError):
    """Peer closed the websocket."""


def accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + _GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def encode_frame(opcode: int, payload: bytes, masked: bool = False) -> bytes:
    head = bytearray([0x80 | opcode])
    mask_bit = 0x80 if masked else 0x00
    n = len(payload)
    if n < 126:
        head.append(mask_bit | n)
    elif n < 1 << 16:
        head.append(mask_bit | 126)
        head += struct.pack(">H", n)
    else:
        head.append(mask_bit | 127)
        head += struct.pack(">Q", n)
    if masked:
        mask = os.urandom(4)
        head += mask
        payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return bytes(head) + payload


async def read_frame(reader: asyncio.StreamReader) -> tuple[int, bytes]:
    try:
        header = await reader.readexactly(2)
    except (asyncio.IncompleteReadError, ConnectionResetError) as exc:
        raise WireClosed("connection closed") from exc
    fin = header[0] & 0x80
    opcode = header[0] & 0x0F
    if not fin or opcode == 0x0:
        raise ValueError("fragmented frames are not supported")
    masked = header[1] & 0x80
    length = header[1] & 0x7F
    if length == 126:
        length = struct.unpack(">H", await reader.readexactly(2))[0]
    elif length == 127:
        length = struct.unpack(">Q", await reader.readexactly(8))[0]
    if length > MAX_FRAME_BYTES:
        raise ValueError(f"frame of {length} bytes exceeds the {MAX_FRAME_BYTES} limit")
    mask = await reader.readexactly(4) if masked else None
    payload = await reader.readexactly(length) if length else b""
    if mask:
        payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return opcode, payload


class WsConnection:
    """One established websocket endpoint (either side of the handshake)."""

    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter, mask_outgoing: bool):
        self.reader = reader
        self.writer = writer
        self.mask_outgoing = mask_outgoing
        self.closed = False

    async def send_text(self, text: str):
        if self.closed:
            raise WireClosed("connection already closed")
        self.writer.write(encode_frame(OP_TEXT, text.encode("utf-8"), self.mask_outgoing))
        await self.writer.drain()

    async def send_json(self, message: dict):
        await self.send_text(json.dumps(message, separators=(",", ":")))

    async def recv_text(self) -> str:
        """Next text payload; answers pings and raises WireClosed on close."""
        while True:
            opcode, payload = await read_frame(self.reader)
            if opcode == OP_TEXT:
                return payload.decode("utf-8")
            if opcode == OP_PING:
                self.writer.write(encode_frame(OP_PONG, payload, self.mask_outgoing))
                await self.writer.drain()
            elif opcode == OP_CLOSE:
                await self.close()
                raise WireClosed("close frame received")
            # pongs and anything else are ignored

    async def recv_json(self) -> dict:
        return json.loads(await self.recv_text())

    async def close(self):
        if self.closed:
            return
        self.closed = True
        try:
            self.writer.write(encode_frame(OP_CLOSE, b"", self.mask_outgoing))
            await self.writer.drain()
        except (ConnectionError, RuntimeError):
            pass
        self.writer.close()


async def server_handshake(
    reader: asyncio.StreamReader, writer: asyncio.StreamWriter
) -> WsConnection:
    """Answer an HTTP upgrade request; raises ValueError on a bad request."""
    request = await asyncio.wait_for(reader.readuntil(b"\r\n\r\n"), timeout=10.0)
    lines = request.decode("latin-1").split("\r\n")
    headers = {}
    for line in lines[1:]:
        if ":" in line:
            name, _, value = line.partition(":")
            headers[name.strip().lower()] = value.strip()
    if headers.get("upgrade", "").lower() != "websocket" or "sec-websocket-key" not in headers:
        writer.write(b"HTTP/1.1 400 Bad Request\r\nConnection: close\r\n\r\n")
        await writer.drain()
        raise ValueError("not a websocket upgrade request")
    response = (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {accept_key(headers['sec-websocket-key'])}\r\n"
        "\r\n"
    )
    writer.write(response.encode("ascii"))
    await writer.drain()
    return WsConnection(reader, writer, mask_outgoing=False)


async def connect(host: str, port: int, path: str = "/") -> WsConnection:
    """Open a client connection (used by tests and headless drivers)."""
    reader, writer = await asyncio.open_connection(host, port)
    key = base64.b64encode(os.urandom(16)).decode("ascii")
    request = (
        f"GET {path} HTTP/1.1\r\n"
        f"Host: {host}:{port}\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Key: {key}\r\n"
        "Sec-WebSocket-Version: 13\r\n"
        "\r\n"
    )
    writer.write(request.encode("ascii"))
    await writer.drain()
    response = await asyncio.wait_for(reader.readuntil(b"\r\n\r\n"), timeout=10.0)
    status = response.split(b"\r\n", 1)[0]
    if b"101" not in status:
        writer.close()
        raise ConnectionError(f"websocket handshake refused: {status.decode('latin-1')}")
    expected = accept_key(key).encode("ascii")
    if expected not in response:
        writer.close()
        raise ConnectionError("websocket handshake accept-key mismatch")
    return WsConnection(reader, writer, mask_outgoing=True)
