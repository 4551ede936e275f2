def make_counter(start):
    def step(n):
        return start + n
    return step


add_five = make_counter(5)
print(add_five(1), add_five(10))
square = lambda v: v * v
print(list(range(4)), [square(i) for i in range(4)])
