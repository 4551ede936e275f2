settings = {"mode": "fast"}
level = settings["debug_level"]
