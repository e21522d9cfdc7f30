#!/usr/bin/env python3
"""Validates every line of a JSONL message capture against the session schema.

    validate_messages.py SCHEMA MESSAGES_JSONL

Fails when a line does not validate, when the capture is empty, or when a
message type listed in the schema never appears.
"""
import json
import sys

import jsonschema

REQUIRED_TYPES = {
    "snapshot", "refused", "state", "plan_preview", "metrics", "event", "ack", "heartbeat",
    "set_target", "set_params", "clutch", "reset", "ping", "open",
}


def main(argv):
    if len(argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    with open(argv[1]) as f:
        schema = json.load(f)
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)

    seen, failures, count = set(), 0, 0
    with open(argv[2]) as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            count += 1
            msg = json.loads(line)
            seen.add(msg.get("type"))
            errors = list(validator.iter_errors(msg))
            if errors:
                failures += 1
                best = jsonschema.exceptions.best_match(errors)
                print(f"line {lineno} ({msg.get('type')}): {best.message}", file=sys.stderr)

    missing = REQUIRED_TYPES - seen
    if missing:
        print("message types never exercised: " + ", ".join(sorted(missing)), file=sys.stderr)
    if count == 0:
        print("no messages captured", file=sys.stderr)
    print(f"{count} messages, {failures} invalid")
    return 0 if failures == 0 and not missing and count > 0 else 1


if __name__ == "__main__":
    sys.exit(main(sys.argv))
