letters = ["a", "b", "c"]
numbers = [10, 20, 30]
for index, (letter, number) in enumerate(zip(letters, numbers), 1):
    print(index, letter, number)
pairs = list(zip(letters, numbers))
table = dict(pairs)
print(pairs, table)
