x = 7
if x > 5:
    y = 1
else:
    y = 0
