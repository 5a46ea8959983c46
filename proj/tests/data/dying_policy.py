#!/usr/bin/env python3
"""Test helper: completes the handshake, then dies on the first request."""
import json
import sys

print(json.dumps({"imt_protocol": 1}), flush=True)
sys.stdin.readline()
sys.exit(1)
