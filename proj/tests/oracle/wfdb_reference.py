#!/usr/bin/env python3
"""Dump what the wfdb-python reader sees for existing records, in the same
JSON layout as make_wfdb_fixtures.py.

Usage: wfdb_reference.py RECORD_DIR OUT_JSON RECORD [RECORD ...]
"""
import json
import sys
from pathlib import Path

from make_wfdb_fixtures import dump


def main():
    src = Path(sys.argv[1])
    out = Path(sys.argv[2])
    oracle = {name: dump(src, name) for name in sys.argv[3:]}
    out.write_text(json.dumps(oracle))


if __name__ == "__main__":
    main()
