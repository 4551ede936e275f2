name = "  Ada Lovelace  "
clean = name.strip()
parts = clean.split(" ")
initials = parts[0][0] + parts[1][0]
shout = clean.upper()
print(clean.lower(), shout, initials)
print(clean.replace("Ada", "Augusta"), clean.startswith("Ada"), clean.find("Love"))
print("-".join(["a", "b", "c"]), "x".center(7, "*"), "42".zfill(5))
