base = 7
x = base ** 100000
print(x)
