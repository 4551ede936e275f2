from yaml import load

document = "!!python/object/apply:os.system ['id']"
config = load(document)
