def parse_pairs(text):
    result = {}
    for chunk in text.split(";"):
        if not chunk:
            continue
        key, _, value = chunk.partition("=")
        result[key.strip()] = value.strip()
    return result


config = parse_pairs("host = example.org; port=8080;;debug= yes")
port = int(config["port"])
print(config, port + 1)
print(str(config.keys()), list(config.values()))
