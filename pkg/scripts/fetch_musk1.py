#!/usr/bin/env python3
"""Download UCI Musk (Version 1) and convert it to data/musk1.csv.

Needs outbound network access to archive.ics.uci.edu. After it succeeds,
`pytest tests/test_acceptance.py -k musk1` exercises the end-to-end gate
(92 bags, 47 positive / 45 negative, 476 instances, 166 features).
"""

import io
import sys
import urllib.request
import zipfile
from pathlib import Path

URL = "https://archive.ics.uci.edu/static/public/74/musk+version+1.zip"
REPO = Path(__file__).resolve().parents[1]


def main() -> int:
    sys.path.insert(0, str(REPO / "src"))
    from milt.data import convert_musk_uci, save_csv

    print(f"downloading {URL} ...")
    with urllib.request.urlopen(URL, timeout=120) as resp:
        blob = resp.read()
    with zipfile.ZipFile(io.BytesIO(blob)) as zf:
        member = next(n for n in zf.namelist() if n.endswith("clean1.data"))
        raw = zf.read(member).decode("utf-8")
    tmp = REPO / "data" / "clean1.data"
    tmp.parent.mkdir(exist_ok=True)
    tmp.write_text(raw)
    ds = convert_musk_uci(tmp, name="musk1")
    counts = ds.class_counts()
    print(
        f"converted: {len(ds.bags)} bags ({counts.get(1, 0)} pos / {counts.get(0, 0)} neg), "
        f"{ds.n_instances} instances, d={ds.dimension}"
    )
    dest = REPO / "data" / "musk1.csv"
    save_csv(ds, dest)
    tmp.unlink()
    print(f"wrote {dest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
