#!/usr/bin/env python3
"""Fetch the UCI Adult train/test split and convert it to TSV + column descriptor.

The raw files are taken from the `responsibly` wheel on PyPI, which ships the
original `adult.data` / `adult.test` files unchanged. Output goes to
data/adult/{train.tsv,test.tsv,train.cd}.
"""
import pathlib
import subprocess
import sys
import tempfile
import zipfile

ROOT = pathlib.Path(__file__).resolve().parent.parent
OUT = ROOT / "data" / "adult"

# (name, kind) in file order; kinds follow the column descriptor convention.
COLUMNS = [
    ("age", "Num"),
    ("workclass", "Categ"),
    ("fnlwgt", "Num"),
    ("education", "Categ"),
    ("education-num", "Num"),
    ("marital-status", "Categ"),
    ("occupation", "Categ"),
    ("relationship", "Categ"),
    ("race", "Categ"),
    ("sex", "Categ"),
    ("capital-gain", "Num"),
    ("capital-loss", "Num"),
    ("hours-per-week", "Num"),
    ("native-country", "Categ"),
    ("income", "Label"),
]


def convert(raw: str) -> list[str]:
    rows = []
    for line in raw.splitlines():
        line = line.strip()
        if not line or line.startswith("|"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != len(COLUMNS):
            raise SystemExit(f"unexpected field count {len(fields)}: {line!r}")
        label = fields[-1].rstrip(".")
        fields[-1] = "1" if label == ">50K" else "0"
        rows.append("\t".join(fields))
    return rows


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "-d", tmp, "responsibly==0.1.2"],
            check=True,
        )
        wheel = next(pathlib.Path(tmp).glob("responsibly-*.whl"))
        with zipfile.ZipFile(wheel) as z:
            train = z.read("responsibly/dataset/adult/adult.data").decode()
            test = z.read("responsibly/dataset/adult/adult.test").decode()
    OUT.mkdir(parents=True, exist_ok=True)
    for name, raw in (("train.tsv", train), ("test.tsv", test)):
        rows = convert(raw)
        (OUT / name).write_text("\n".join(rows) + "\n")
        print(f"{name}: {len(rows)} rows")
    cd = "".join(f"{i}\t{kind}\n" for i, (_, kind) in enumerate(COLUMNS))
    (OUT / "train.cd").write_text(cd)


if __name__ == "__main__":
    main()
