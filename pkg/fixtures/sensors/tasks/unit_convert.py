import csv
import sys

with open(sys.argv[1], newline="", encoding="utf-8") as handle:
    rows = list(csv.DictReader(handle))

CALIBRATION_OFFSETS = {"C": 273.15}

# ASSERTION_START
for row in rows:
    assert row["unit"] in CALIBRATION_OFFSETS, f"no calibration for unit {row['unit']!r}"
# ASSERTION_END

kelvin = [float(row["reading"]) + CALIBRATION_OFFSETS[row["unit"]] for row in rows]
print(f"max_kelvin={max(kelvin):.2f}")
