import csv
import sys

with open(sys.argv[1], newline="", encoding="utf-8") as handle:
    rows = list(csv.DictReader(handle))

# ASSERTION_START
for row in rows:
    assert row["reading"] != "", "reading column must be fully populated"
# ASSERTION_END

readings = [float(row["reading"]) for row in rows]

# ASSERTION_START
for value in readings:
    assert -50.0 <= value <= 60.0, f"reading {value} outside the sensor range"
# ASSERTION_END

mean_reading = sum(readings) / len(readings)
print(f"mean_reading={mean_reading:.3f}")
