import csv
import sys


def load_rows(path):
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


rows = load_rows(sys.argv[1])

# ASSERTION_START
for row in rows:
    if row["status"] == "COMPLETED":
        assert row["email"] != "", f"completed booking for {row['name']} lacks an email"
# ASSERTION_END

revenue = [float(row["revenue"]) for row in rows if row["revenue"] != ""]
mean = sum(revenue) / len(revenue)
# ASSERTION_START
variance_check = sum((value - mean) ** 2 for value in revenue) / len(revenue)
assert variance_check > 0.0, "revenue is constant; normalization would divide by zero"
# ASSERTION_END
spread = (sum((value - mean) ** 2 for value in revenue) / len(revenue)) ** 0.5
normalized = [(value - mean) / spread for value in revenue]

notified = 0
for row, score in zip(rows, normalized):
    if row["status"] == "COMPLETED":
        rate = 0.10 if row["guest_cat"] in ("2", "3") else 0.05
        message = f"Hello {row['name']}, enjoy a {rate:.0%} discount on your next booking"
        _ = (row["email"], message)
        notified += 1

print(f"notified={notified} mean_revenue={mean:.2f}")
