#!/usr/bin/env python3
"""Test helper: answers action 0 to every request."""
import json
import sys

print(json.dumps({"imt_protocol": 1}), flush=True)
for line in sys.stdin:
    request = json.loads(line)
    print(json.dumps({"action": 0}), flush=True)
