def fib(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


values = [fib(i) for i in range(15)]
print(values)
print(fib(90))
