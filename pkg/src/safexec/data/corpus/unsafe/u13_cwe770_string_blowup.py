s = "a"
for i in range(100):
    s = s + s
print(len(s))
