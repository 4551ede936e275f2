rows = [("apple", 3, 0.5), ("banana", 12, 0.25), ("cherry", 7, 3.0)]
for name, qty, price in rows:
    print("%-8s|%4d|%6.2f" % (name, qty, price))
total = 0.0
for _, q, p in rows:
    total += q * p
print("total: %.2f" % total)
