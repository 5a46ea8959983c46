#!/usr/bin/env python3
"""Test helper: advertises an unknown protocol version."""
import json

print(json.dumps({"imt_protocol": 99}), flush=True)
