x = 1 + 3
y = x * 7 - 2
q = 17 // 5
r = 17 % 5
half = 7 / 2
big = 2 ** 100
neg = -big // 3
print(x, y, q, r, half)
print(big, neg)
