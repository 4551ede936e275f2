arr = [0] * 5
arr[10] = 1
