buf = [0, 0, 0]
for i in range(4):
    buf[i] = i * 2
