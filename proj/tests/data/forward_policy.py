#!/usr/bin/env python3
"""Test helper: always chooses action 'forward' (index 0) on gridworlds."""
import json
import sys

print(json.dumps({"imt_protocol": 1}), flush=True)
for line in sys.stdin:
    json.loads(line)
    print(json.dumps({"action": 0}), flush=True)
