def running_totals(values):
    totals = []
    acc = 0
    for v in values:
        acc += v
        totals.append(acc)
    return totals


series = running_totals([3, 1, 4, 1, 5, 9, 2, 6])
mean = sum(series) / len(series)
print(series, mean)
print(max(series) - min(series), sorted(series, reverse=True)[:3])
