import csv
import sys

with open(sys.argv[1], newline="", encoding="utf-8") as handle:
    rows = list(csv.DictReader(handle))

# ASSERTION_START
row_total = len(rows)
assert row_total > 0, "batch must not be empty"
# ASSERTION_END

print(f"rows={row_total}")
