def square(v):
    return v * v

result = square(12)
