"""Versioned JSON schemas for every payload that crosses a process boundary:
adapter responses and fixtures, scenario files, telemetry records, and the
session wire protocol. Nothing unvalidated reaches the graph or controller.
"""

from __future__ import annotations

import jsonschema

TRIPLET_SCHEMA_VERSION = 1
CONSTRAINT_SCHEMA_VERSION = 1
GRASP_SCHEMA_VERSION = 1
SCENARIO_SCHEMA_VERSION = 1
TELEMETRY_SCHEMA_VERSION = 1
WIRE_SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """A payload failed validation against its wire schema."""


_AXIS = {"type": "string", "enum": ["X", "Y", "Z"]}
_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_QUAT = {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4}

TRIPLET_RESPONSE_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"const": TRIPLET_SCHEMA_VERSION},
        "objects": {"type": "array", "items": {"type": "string", "minLength": 1}},
        "triplets": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "a": {"type": "string", "minLength": 1},
                    "verb": {"type": "string", "minLength": 1},
                    "b": {"type": "string", "minLength": 1},
                },
                "required": ["a", "verb", "b"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["objects", "triplets"],
    "additionalProperties": False,
}

CONSTRAINT_RESPONSE_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"const": CONSTRAINT_SCHEMA_VERSION},
        "constraints": {
            "type": "array",
            "maxItems": 3,
            "items": {
                "type": "object",
                "properties": {
                    "axis_a": _AXIS,
                    "axis_b": _AXIS,
                    "sign": {"type": "integer", "enum": [1, -1]},
                },
                "required": ["axis_a", "axis_b", "sign"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["constraints"],
    "additionalProperties": False,
}

# Fixture file mapping object pairs to recorded constraint responses.
CONSTRAINT_FIXTURE_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"const": CONSTRAINT_SCHEMA_VERSION},
        "pairs": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "a": {"type": "string", "minLength": 1},
                    "b": {"type": "string", "minLength": 1},
                    "constraints": CONSTRAINT_RESPONSE_SCHEMA["properties"]["constraints"],
                },
                "required": ["a", "b", "constraints"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["pairs"],
    "additionalProperties": False,
}

GRASP_FIXTURE_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"const": GRASP_SCHEMA_VERSION},
        "objects": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "grasps": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "properties": {
                                "position": _VEC3,
                                "quaternion": _QUAT,
                                "width": {"type": "number", "exclusiveMinimum": 0},
                                "score": {"type": "number"},
                            },
                            "required": ["position", "quaternion", "width", "score"],
                            "additionalProperties": False,
                        },
                    },
                },
                "required": ["name", "grasps"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["objects"],
    "additionalProperties": False,
}

_SHAPE = {
    "type": "object",
    "properties": {
        "kind": {"type": "string", "enum": ["box", "cylinder"]},
        # box: [x, y, z] side lengths; cylinder: [radius, height] (axis +Z)
        "dimensions": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                       "minItems": 2, "maxItems": 3},
        "offset": _VEC3,
    },
    "required": ["kind", "dimensions"],
    "additionalProperties": False,
}

SCENARIO_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"const": SCENARIO_SCHEMA_VERSION},
        "name": {"type": "string"},
        "seed": {"type": "integer"},
        "tick_rate": {"type": "number", "exclusiveMinimum": 0},
        "workspace": {
            "type": "object",
            "properties": {"min": _VEC3, "max": _VEC3},
            "required": ["min", "max"],
            "additionalProperties": False,
        },
        "eef_start": {
            "type": "object",
            "properties": {"position": _VEC3, "orientation": _QUAT},
            "required": ["position"],
            "additionalProperties": False,
        },
        "objects": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "shape": {"type": "string", "enum": ["box", "cylinder", "composite"]},
                    "dimensions": _SHAPE["properties"]["dimensions"],
                    "parts": {"type": "array", "items": _SHAPE, "minItems": 1},
                    "position": _VEC3,
                    "orientation": _QUAT,
                    "region": {"type": "array", "items": {"type": "number", "minimum": 0},
                               "minItems": 2, "maxItems": 2},
                    "yaw_random": {"type": "boolean"},
                    "keypoints": {
                        "type": "object",
                        "additionalProperties": _VEC3,
                    },
                },
                "required": ["name", "shape", "position"],
                "additionalProperties": False,
            },
        },
        "tasks": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "kind": {"type": "string", "enum": ["place", "insert", "hammer"]},
                    "tool": {"type": "string", "minLength": 1},
                    "target": {"type": "string", "minLength": 1},
                },
                "required": ["kind", "tool", "target"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["version", "seed", "tick_rate", "workspace", "eef_start", "objects"],
    "additionalProperties": False,
}

TELEMETRY_HEADER_SCHEMA = {
    "type": "object",
    "properties": {
        "v": {"const": TELEMETRY_SCHEMA_VERSION},
        "type": {"const": "header"},
        "scenario": SCENARIO_SCHEMA,
        "task": {"type": ["object", "null"]},
        "method": {"type": "string"},
        "seed": {"type": "integer"},
        "config": {"type": "object"},
    },
    "required": ["v", "type", "scenario", "method", "seed"],
}

TELEMETRY_TICK_SCHEMA = {
    "type": "object",
    "properties": {
        "v": {"const": TELEMETRY_SCHEMA_VERSION},
        "type": {"const": "tick"},
        "tick": {"type": "integer", "minimum": 0},
        "stage": {"type": "string",
                  "enum": ["grasping", "auto_grasp", "interaction", "done"]},
        "u_h": _VEC3,
        "gripper": {"type": ["string", "null"], "enum": ["close", "open", None]},
        "u_r": _QUAT,
        "belief": {"type": ["object", "null"],
                   "additionalProperties": {"type": "number"}},
        "argmax": {"type": ["integer", "null"]},
        "eef": {
            "type": "object",
            "properties": {"position": _VEC3, "orientation": _QUAT},
            "required": ["position", "orientation"],
            "additionalProperties": False,
        },
        "hash": {"type": "string"},
        "diag": {"type": "array", "items": {"type": "string"}},
    },
    "required": ["v", "type", "tick", "stage", "u_h", "gripper", "u_r", "belief",
                 "argmax", "eef", "hash"],
    "additionalProperties": False,
}

# Client -> server: translation plus gripper only. There is deliberately no
# rotation field anywhere in this schema.
WIRE_CLIENT_SCHEMA = {
    "type": "object",
    "properties": {
        "input": _VEC3,
        "gripper": {"type": ["string", "null"], "enum": ["close", "open", None]},
        "seq": {"type": "integer", "minimum": 0},
    },
    "required": ["input", "seq"],
    "additionalProperties": False,
}

WIRE_SERVER_STATE_SCHEMA = {
    "type": "object",
    "properties": {
        "v": {"const": WIRE_SCHEMA_VERSION},
        "type": {"const": "state"},
        "tick": {"type": "integer", "minimum": 0},
        "stage": {"type": "string"},
        "eef": {"type": "object"},
        "objects": {"type": "array"},
        "belief": {"type": ["object", "null"]},
        "argmax": {"type": ["integer", "null"]},
        "attached": {"type": ["integer", "null"]},
        "success": {"type": "boolean"},
        "hash": {"type": "string"},
    },
    "required": ["v", "type", "tick", "stage", "eef", "objects", "belief",
                 "argmax", "attached", "success"],
    "additionalProperties": False,
}

WIRE_SERVER_EVENT_SCHEMA = {
    "type": "object",
    "properties": {
        "v": {"const": WIRE_SCHEMA_VERSION},
        "type": {"const": "event"},
        "event": {"type": "string", "enum": ["init", "attach", "success", "error"]},
        "detail": {},
    },
    "required": ["v", "type", "event"],
    "additionalProperties": True,
}

_BY_NAME = {
    "triplets": TRIPLET_RESPONSE_SCHEMA,
    "constraints": CONSTRAINT_RESPONSE_SCHEMA,
    "constraint_fixture": CONSTRAINT_FIXTURE_SCHEMA,
    "grasp_fixture": GRASP_FIXTURE_SCHEMA,
    "scenario": SCENARIO_SCHEMA,
    "telemetry_header": TELEMETRY_HEADER_SCHEMA,
    "telemetry_tick": TELEMETRY_TICK_SCHEMA,
    "wire_client": WIRE_CLIENT_SCHEMA,
    "wire_state": WIRE_SERVER_STATE_SCHEMA,
    "wire_event": WIRE_SERVER_EVENT_SCHEMA,
}


def validate_payload(kind: str, payload: dict) -> dict:
    """Validate a payload against the named schema; raises SchemaError with
    the validator's message (and JSON path) on failure."""
    schema = _BY_NAME.get(kind)
    if schema is None:
        raise KeyError(f"unknown schema {kind!r}")
    try:
        jsonschema.validate(payload, schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"{kind} payload invalid at {path}: {exc.message}") from exc
    return payload
