n = 27
steps = 0
while n != 1:
    if n % 2 == 0:
        n = n // 2
    else:
        n = 3 * n + 1
    steps += 1
    if steps > 1000:
        break
print("collatz steps:", steps)
i = 0
found = -1
while i < 100:
    i += 1
    if i % 7 == 0 and i % 5 == 0:
        found = i
        break
    if i % 2 == 0:
        continue
print(found)
