def spawn(depth):
    return spawn(depth + 1) + 1


spawn(0)
