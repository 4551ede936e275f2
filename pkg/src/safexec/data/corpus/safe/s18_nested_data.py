inventory = {
    "fruit": {"apple": 3, "pear": 0},
    "veg": {"kale": 2},
}
inventory["veg"]["leek"] = 5
inventory["fruit"]["pear"] += 4
totals = {kind: sum(items.values()) for kind, items in inventory.items()}
matrix = []
for row in range(3):
    matrix.append([row * 3 + col for col in range(3)])
diagonal = [matrix[i][i] for i in range(3)]
print(inventory)
print(totals, diagonal)
