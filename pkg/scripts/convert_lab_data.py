"""One-time conversion of the upstream lab LUPI archive to the loader's table.

The upstream files ship as Stata ``.dta``. Column names differ between
releases, so pass them explicitly:

    python3 scripts/convert_lab_data.py raw.dta lab_choices.csv \
        --participant subject --round round --choice guess \
        --session session --winners winners.csv --winner-column winning_number

With ``--session``, participant ids become ``<session>-<subject>``. Rows with
a missing choice are dropped and reported. Needs pandas (not a package
dependency).
"""
import argparse
import sys

import pandas as pd


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("source", help=".dta (or .csv) file from the archive")
    ap.add_argument("out", help="participant,round,choice output path")
    ap.add_argument("--participant", default="subject")
    ap.add_argument("--round", default="round")
    ap.add_argument("--choice", default="choice")
    ap.add_argument("--session", help="optional column that qualifies participant ids")
    ap.add_argument("--only-session", help="keep a single session value")
    ap.add_argument("--winners", help="also write round,winning_number to this path")
    ap.add_argument("--winner-column", default="winning_number")
    args = ap.parse_args(argv)

    if args.source.endswith(".dta"):
        df = pd.read_stata(args.source, convert_categoricals=False)
    else:
        df = pd.read_csv(args.source)
    if args.only_session is not None:
        df = df[df[args.session].astype(str) == args.only_session]

    pid = df[args.participant].astype("Int64").astype(str)
    if args.session and args.only_session is None:
        pid = df[args.session].astype(str) + "-" + pid
    table = pd.DataFrame({"participant": pid, "round": df[args.round], "choice": df[args.choice]})
    missing = table["choice"].isna()
    if missing.any():
        print(f"dropping {int(missing.sum())} row(s) without a choice", file=sys.stderr)
    table = table[~missing].astype({"round": int, "choice": int})
    table.sort_values(["participant", "round"], kind="stable").to_csv(args.out, index=False, lineterminator="\n")

    if args.winners:
        win = df.groupby(args.round)[args.winner_column].first().astype("Int64")
        pd.DataFrame({"round": win.index, "winning_number": win.values}).to_csv(
            args.winners, index=False, lineterminator="\n", na_rep=""
        )
    print(f"wrote {len(table)} records for {table['participant'].nunique()} participants", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
