"""Run artifacts: events.json (schema-validated), diagnostics.csv, summary.json."""
import csv
import json
import os

_SCHEMA_PATH = os.path.join(os.path.dirname(os.path.dirname(__file__)), "events.schema.json")


def load_schema():
    with open(_SCHEMA_PATH) as fh:
        return json.load(fh)


def validate_events(doc, schema=None):
    """Minimal JSON-schema validation (type/required/enum/items/bounds)."""
    schema = schema or load_schema()

    def check(node, sch, path):
        if "type" in sch:
            ty = sch["type"]
            ok = {
                "object": lambda v: isinstance(v, dict),
                "array": lambda v: isinstance(v, list),
                "string": lambda v: isinstance(v, str),
                "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
                "integer": lambda v: isinstance(v, int) and not isinstance(v, bool),
                "boolean": lambda v: isinstance(v, bool),
            }[ty](node)
            if not ok:
                raise ValueError(f"{path}: expected {ty}")
        if "enum" in sch and node not in sch["enum"]:
            raise ValueError(f"{path}: {node!r} not in {sch['enum']}")
        if isinstance(node, (int, float)) and not isinstance(node, bool):
            if "minimum" in sch and node < sch["minimum"]:
                raise ValueError(f"{path}: {node} below minimum")
            if "exclusiveMinimum" in sch and node <= sch["exclusiveMinimum"]:
                raise ValueError(f"{path}: {node} not above {sch['exclusiveMinimum']}")
        if isinstance(node, dict):
            for req in sch.get("required", []):
                if req not in node:
                    raise ValueError(f"{path}: missing required key {req!r}")
            for key, sub in sch.get("properties", {}).items():
                if key in node:
                    check(node[key], sub, f"{path}.{key}")
        if isinstance(node, list):
            if "minItems" in sch and len(node) < sch["minItems"]:
                raise ValueError(f"{path}: fewer than {sch['minItems']} items")
            if "maxItems" in sch and len(node) > sch["maxItems"]:
                raise ValueError(f"{path}: more than {sch['maxItems']} items")
            if "items" in sch:
                for k, item in enumerate(node):
                    check(item, sch["items"], f"{path}[{k}]")

    check(doc, schema, "$")
    return True


def write_events(path, events):
    doc = {"schema_version": 1, "events": events}
    validate_events(doc)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


DIAG_FIELDS = ["time", "area", "volume", "H_min", "H_max", "max_A_over_H"]


def write_diagnostics_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=DIAG_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(row[k]) for k in DIAG_FIELDS})


def write_summary(path, summary):
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
