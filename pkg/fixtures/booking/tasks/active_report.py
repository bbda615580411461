import csv
import sys

with open(sys.argv[1], newline="", encoding="utf-8") as handle:
    rows = list(csv.DictReader(handle))

active = [row for row in rows if row["status"] in ("ACTIVE", "PENDING")]
by_location = {}
for row in active:
    by_location[row["location"]] = by_location.get(row["location"], 0) + 1

for location in sorted(by_location):
    print(f"{location}: {by_location[location]}")
print(f"total_active={len(active)}")
