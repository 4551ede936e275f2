count = "10"
total = count + 5
