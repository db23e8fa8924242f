"""In-process publish/subscribe and request/reply message layer.

Topics carry schema-tagged payloads in timestamped, sequence-numbered
envelopes with per-topic FIFO delivery; services provide synchronous
one-to-one calls. Envelopes can be recorded to (and replayed from)
newline-delimited JSON. The same line format doubles as the wire format:
attach any writable text stream (including a socket's makefile) as a
recorder sink and external processes can follow the traffic live.

Wire format, one message per line, UTF-8:

    {"topic": "/human/joint_states", "stamp": 1.230000, "seq": 7, "payload": {...}}

``stamp`` is seconds with six decimal places.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from typing import Callable, IO, Iterable

from .core import GuidanceError

# Standard topic names used by the guidance pipeline.
TOPIC_JOINT_STATES = "/human/joint_states"
TOPIC_ERGOTAC_CMD = "/feedback/ergotac/cmd"
TOPIC_CUFF_CMD = "/feedback/cuff/cmd"
TOPIC_GUIDANCE_ERROR = "/guidance/error"
SERVICE_CUFF_CALIBRATE = "/cuff/calibrate"

# Payload schemas: field name -> kind. Kinds: "float", "int", "str", "bool";
# a trailing "?" makes the field nullable.
JOINT_STATES_SCHEMA = {"shoulder_deg": "float", "knee_deg": "float"}
ERGOTAC_CMD_SCHEMA = {"type": "str", "joint": "str", "unit_placement": "str", "level": "str"}
CUFF_CMD_SCHEMA = {"type": "str", "joint": "str", "slide": "str", "squeeze_force_n": "float"}
GUIDANCE_ERROR_SCHEMA = {"shoulder_deg": "float?", "knee_deg": "float?"}


class BusError(GuidanceError):
    """Base class for message bus failures."""


class UnknownTopicError(BusError):
    """Publish/subscribe on a topic that was never registered."""


class SchemaError(BusError):
    """A payload does not match the topic or service schema."""


class ServiceUnavailableError(BusError):
    """No handler is registered at the requested endpoint."""


class ServiceCallError(BusError):
    """The service handler failed; the cause is carried in the message."""


class RecordingParseError(BusError):
    """A recorded line could not be parsed; carries the 1-based line number."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


@dataclass(frozen=True)
class Envelope:
    """One delivered message: topic, stamp, per-topic sequence, payload."""

    topic: str
    stamp: float
    seq: int
    payload: dict


def _check_kind(value, kind: str) -> object:
    if kind.endswith("?"):
        if value is None:
            return None
        kind = kind[:-1]
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError
        if not math.isfinite(value):
            raise TypeError
        return float(value)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise TypeError
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise TypeError
        return value
    raise ValueError(f"unknown schema kind {kind!r}")


def validate_payload(schema: dict[str, str], payload: dict, where: str) -> dict:
    """Check a payload against a schema; returns the normalized copy."""
    if not isinstance(payload, dict):
        raise SchemaError(f"{where}: payload must be a mapping")
    unknown = set(payload) - set(schema)
    if unknown:
        raise SchemaError(f"{where}: unknown fields {sorted(unknown)}")
    out = {}
    for name, kind in schema.items():
        if name not in payload:
            raise SchemaError(f"{where}: missing field {name!r}")
        try:
            out[name] = _check_kind(payload[name], kind)
        except TypeError:
            raise SchemaError(
                f"{where}: field {name!r} expected {kind}, got {payload[name]!r}"
            ) from None
    return out


class Subscription:
    """Handle delivering a topic's envelopes in publication order.

    Envelopes published before the subscription existed are not delivered.
    With a callback the handle can skip retention to stay O(1) in memory.
    """

    def __init__(self, topic: str, callback: Callable[[Envelope], None] | None, retain: bool):
        self.topic = topic
        self._callback = callback
        self._retain = retain
        self.received: list[Envelope] = []

    def _deliver(self, envelope: Envelope) -> None:
        if self._retain:
            self.received.append(envelope)
        if self._callback is not None:
            self._callback(envelope)


class Recorder:
    """Writes every envelope of the selected topics to a line sink."""

    def __init__(self, bus: "MessageBus", topics: set[str], sink: IO[str]):
        self._bus = bus
        self.topics = topics
        self._sink = sink
        self.closed = False

    def _capture(self, envelope: Envelope) -> None:
        if not self.closed and envelope.topic in self.topics:
            self._sink.write(encode_envelope(envelope) + "\n")

    def close(self) -> None:
        self.closed = True
        self._bus._recorders.remove(self)


def encode_envelope(envelope: Envelope) -> str:
    """Single-line wire encoding of an envelope."""
    payload = json.dumps(envelope.payload, sort_keys=True, separators=(",", ":"))
    return (
        f'{{"topic":{json.dumps(envelope.topic)},"stamp":{envelope.stamp:.6f},'
        f'"seq":{envelope.seq},"payload":{payload}}}'
    )


def decode_envelope(line: str, line_no: int = 1) -> Envelope:
    """Parse one wire line back into an envelope."""
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordingParseError(line_no, f"invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise RecordingParseError(line_no, "expected a JSON object")
    missing = {"topic", "stamp", "seq", "payload"} - set(data)
    if missing:
        raise RecordingParseError(line_no, f"missing fields {sorted(missing)}")
    if not isinstance(data["topic"], str) or not isinstance(data["payload"], dict):
        raise RecordingParseError(line_no, "bad field types")
    if isinstance(data["seq"], bool) or not isinstance(data["seq"], int) or data["seq"] < 0:
        raise RecordingParseError(line_no, "seq must be an unsigned integer")
    if not isinstance(data["stamp"], (int, float)) or isinstance(data["stamp"], bool):
        raise RecordingParseError(line_no, "stamp must be a number")
    return Envelope(data["topic"], float(data["stamp"]), data["seq"], data["payload"])


class MessageBus:
    """Topic registry with per-topic FIFO fanout and synchronous services.

    Delivery is in-process and synchronous: publish returns after every
    current subscriber has received the envelope exactly once. No history is
    retained for late subscribers; recordings cover offline needs.
    """

    def __init__(self) -> None:
        self._schemas: dict[str, dict[str, str]] = {}
        self._seq: dict[str, int] = {}
        self._last_stamp: dict[str, float] = {}
        self._subs: dict[str, list[Subscription]] = {}
        self._services: dict[str, tuple[Callable, dict | None, dict | None]] = {}
        self._recorders: list[Recorder] = []

    def register_topic(self, topic: str, schema: dict[str, str]) -> None:
        if not topic or not topic.startswith("/"):
            raise UnknownTopicError(f"topic path must start with '/', got {topic!r}")
        existing = self._schemas.get(topic)
        if existing is not None and existing != schema:
            raise BusError(f"topic {topic} already registered with a different schema")
        self._schemas.setdefault(topic, dict(schema))
        self._seq.setdefault(topic, 0)
        self._subs.setdefault(topic, [])

    def topics(self) -> list[str]:
        return sorted(self._schemas)

    def subscribe(
        self,
        topic: str,
        callback: Callable[[Envelope], None] | None = None,
        retain: bool = True,
    ) -> Subscription:
        self._require_topic(topic)
        sub = Subscription(topic, callback, retain)
        self._subs[topic].append(sub)
        return sub

    def unsubscribe(self, subscription: Subscription) -> None:
        self._subs[subscription.topic].remove(subscription)

    def publish(self, topic: str, payload: dict, stamp: float) -> Envelope:
        """Validate, stamp, sequence, and fan out one message."""
        self._require_topic(topic)
        normalized = validate_payload(self._schemas[topic], payload, f"topic {topic}")
        envelope = Envelope(topic, stamp, self._seq[topic], normalized)
        return self._deliver(envelope)

    def inject(self, envelope: Envelope) -> Envelope:
        """Deliver a pre-built envelope verbatim (used by replay).

        The envelope keeps its original stamp and sequence number; the
        topic's counter continues from it.
        """
        self._require_topic(envelope.topic)
        validate_payload(
            self._schemas[envelope.topic], envelope.payload, f"topic {envelope.topic}"
        )
        return self._deliver(envelope)

    def _deliver(self, envelope: Envelope) -> Envelope:
        topic = envelope.topic
        last = self._last_stamp.get(topic)
        if last is not None and envelope.stamp < last:
            raise BusError(
                f"stamp regression on {topic}: {envelope.stamp:.6f} after {last:.6f}"
            )
        self._last_stamp[topic] = envelope.stamp
        self._seq[topic] = max(self._seq[topic], envelope.seq) + 1
        for recorder in self._recorders:
            recorder._capture(envelope)
        for sub in list(self._subs[topic]):
            sub._deliver(envelope)
        return envelope

    def _require_topic(self, topic: str) -> None:
        if topic not in self._schemas:
            raise UnknownTopicError(f"topic {topic!r} is not registered")

    # --- services ---------------------------------------------------------

    def register_service(
        self,
        path: str,
        handler: Callable[[dict], dict],
        request_schema: dict[str, str] | None = None,
        response_schema: dict[str, str] | None = None,
    ) -> None:
        if path in self._services:
            raise BusError(f"service {path} already has a handler")
        self._services[path] = (handler, request_schema, response_schema)

    def call_service(self, path: str, request: dict) -> dict:
        """Synchronous one-to-one request/reply."""
        if path not in self._services:
            raise ServiceUnavailableError(f"no handler at {path!r}")
        handler, request_schema, response_schema = self._services[path]
        if request_schema is not None:
            request = validate_payload(request_schema, request, f"service {path} request")
        try:
            response = handler(request)
        except SchemaError:
            raise
        except Exception as exc:
            raise ServiceCallError(f"service {path} failed: {exc}") from exc
        if response_schema is not None:
            response = validate_payload(response_schema, response, f"service {path} response")
        return response

    # --- recording ----------------------------------------------------------

    def record(self, topics: Iterable[str], sink: IO[str]) -> Recorder:
        """Capture every envelope on the listed topics to a line sink.

        The sink may be a file, an in-memory buffer, or a socket makefile;
        each envelope is written as one wire-format line as it is delivered.
        """
        topic_set = set(topics)
        for topic in topic_set:
            self._require_topic(topic)
        recorder = Recorder(self, topic_set, sink)
        self._recorders.append(recorder)
        return recorder


def replay(
    lines: Iterable[str],
    bus: MessageBus,
    speed: float | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> list[Envelope]:
    """Republish a recording onto a bus, preserving stamps and sequences.

    ``speed`` scales pacing: the wall-clock gap between consecutive messages
    is their stamp difference divided by the speed (None replays without
    pacing). Stamps are never rescaled.
    """
    if speed is not None and speed <= 0:
        raise BusError(f"replay speed must be positive, got {speed!r}")
    republished = []
    previous_stamp: float | None = None
    for line_no, line in enumerate(lines, start=1):
        stripped = line.rstrip("\n")
        if not stripped:
            raise RecordingParseError(line_no, "blank line")
        envelope = decode_envelope(stripped, line_no)
        if speed is not None and previous_stamp is not None:
            gap = (envelope.stamp - previous_stamp) / speed
            if gap > 0:
                sleep(gap)
        previous_stamp = envelope.stamp
        republished.append(bus.inject(envelope))
    return republished


def register_standard_topics(bus: MessageBus) -> None:
    """Register the guidance pipeline's topics on a bus."""
    bus.register_topic(TOPIC_JOINT_STATES, JOINT_STATES_SCHEMA)
    bus.register_topic(TOPIC_ERGOTAC_CMD, ERGOTAC_CMD_SCHEMA)
    bus.register_topic(TOPIC_CUFF_CMD, CUFF_CMD_SCHEMA)
    bus.register_topic(TOPIC_GUIDANCE_ERROR, GUIDANCE_ERROR_SCHEMA)


CALIBRATE_REQUEST_SCHEMA = {
    "gamma0_deg": "float",
    "k_force_deg_per_n": "float",
    "k_slide_deg": "float",
}
CALIBRATE_RESPONSE_SCHEMA = {
    "ok": "bool",
    "gamma0_deg": "float",
    "k_force_deg_per_n": "float",
    "k_slide_deg": "float",
}


def register_cuff_calibration_service(bus: MessageBus, store: dict) -> None:
    """Expose CUFF calibration as a request/reply endpoint.

    On success the resulting calibration is placed in ``store`` under the
    key ``"calibration"`` and echoed back to the caller.
    """
    from .devices import cuff_calibrate

    def handler(request: dict) -> dict:
        calibration = cuff_calibrate(
            request["gamma0_deg"], request["k_force_deg_per_n"], request["k_slide_deg"]
        )
        store["calibration"] = calibration
        return {
            "ok": True,
            "gamma0_deg": calibration.gamma0_deg,
            "k_force_deg_per_n": calibration.k_force_deg_per_n,
            "k_slide_deg": calibration.k_slide_deg,
        }

    bus.register_service(
        SERVICE_CUFF_CALIBRATE, handler, CALIBRATE_REQUEST_SCHEMA, CALIBRATE_RESPONSE_SCHEMA
    )
