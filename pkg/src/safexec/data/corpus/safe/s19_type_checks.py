def describe(value):
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, (float, str)):
        return "float-or-str"
    return "other"


samples = [True, 3, 2.5, "s", [1], None]
kinds = [describe(v) for v in samples]
print(kinds)
print(int("42") + 1, float("2.5") * 2, str(3.0), bool(""), abs(-7), round(2.675, 2))
