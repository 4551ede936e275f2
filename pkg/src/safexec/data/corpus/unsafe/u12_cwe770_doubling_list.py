chunk = ["data"] * 100000
buffer = []
while len(buffer) >= 0:
    buffer = buffer + chunk
