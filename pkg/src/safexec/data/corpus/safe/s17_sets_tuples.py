evens = set(range(0, 20, 2))
threes = set([0, 3, 6, 9, 12, 15, 18])
both = evens.intersection(threes)
either = sorted(evens.union(threes))
point = (3, 4)
x, y = point
swapped = (y, x)
print(sorted(both), either)
print(point, swapped, point + swapped, len(point))
