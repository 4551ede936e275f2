history = [1, 2]
history[-5] = 0
