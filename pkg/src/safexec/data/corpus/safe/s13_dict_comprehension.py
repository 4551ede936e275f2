names = ["ada", "grace", "alan", "edsger"]
lengths = {name: len(name) for name in names}
long_names = {name: size for name, size in lengths.items() if size > 3}
inverse = {v: k for k, v in enumerate(names)}
print(lengths)
print(long_names)
print(inverse)
