import csv
import sys

with open(sys.argv[1], newline="", encoding="utf-8") as handle:
    rows = list(csv.DictReader(handle))

sensor_ids = [row["sensor_id"] for row in rows]

# ASSERTION_START
assert len(set(sensor_ids)) == len(sensor_ids), "duplicate sensor ids in the delivery"
# ASSERTION_END

print(f"sensors={len(set(sensor_ids))} rows={len(sensor_ids)}")
