def inner():
    n = 0
    for i in range(3):
        for j in range(3):
            n += 1
    return n


def outer():
    total = 0
    for i in range(3):
        for j in range(3):
            for k in range(3):
                total += inner()
    return total


outer()
