import csv
import sys

with open(sys.argv[1], newline="", encoding="utf-8") as handle:
    rows = list(csv.DictReader(handle))

categories = [int(row["guest_cat"]) for row in rows if row["guest_cat"] != ""]

# ASSERTION_START
for category in categories:
    assert category >= 1, f"guest category {category} is out of range"
# ASSERTION_END

buckets = {}
for category in categories:
    buckets[category] = buckets.get(category, 0) + 1
for category in sorted(buckets):
    print(f"cat{category}: {buckets[category]}")
