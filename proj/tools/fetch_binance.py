#!/usr/bin/env python3
"""Download Binance spot 5-minute klines and write potfield OHLCV CSVs.

    python3 tools/fetch_binance.py --months 2021-03 2021-04 2021-05 2021-09

writes data/BTC_5m.csv and data/ETH_5m.csv (timestamp in Unix seconds).
"""

import argparse
import csv
import io
import pathlib
import urllib.request
import zipfile

BASE = "https://data.binance.vision/data/spot/monthly/klines/{sym}/5m/{sym}-5m-{month}.zip"
PAIRS = {"BTC": "BTCUSDT", "ETH": "ETHUSDT"}


def month_rows(sym, month):
    url = BASE.format(sym=sym, month=month)
    with urllib.request.urlopen(url, timeout=60) as resp:
        payload = resp.read()
    with zipfile.ZipFile(io.BytesIO(payload)) as zf:
        with zf.open(zf.namelist()[0]) as fh:
            for row in csv.reader(io.TextIOWrapper(fh)):
                if not row or not row[0].isdigit():
                    continue
                open_ms = int(row[0])
                # later archives use microseconds
                seconds = open_ms // 1_000_000 if open_ms > 10**14 else open_ms // 1000
                yield [seconds, *row[1:6]]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--months", nargs="+", required=True, help="YYYY-MM, ascending")
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for asset, sym in PAIRS.items():
        path = out / f"{asset}_5m.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["timestamp", "open", "high", "low", "close", "volume"])
            for month in args.months:
                w.writerows(month_rows(sym, month))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
