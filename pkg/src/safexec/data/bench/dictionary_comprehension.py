table = {i: i * i for i in range(10)}
