people = [("grace", 85), ("alan", 41), ("ada", 36), ("edsger", 72)]
by_age = sorted(people, key=lambda p: p[1])
by_name_desc = sorted(people, reverse=True)
oldest = max(people, key=lambda p: p[1])
youngest = min(people, key=lambda p: p[1])
ages = [age for _, age in people]
ages.sort()
print(by_age)
print(by_name_desc)
print(oldest, youngest, ages)
