x = 42
