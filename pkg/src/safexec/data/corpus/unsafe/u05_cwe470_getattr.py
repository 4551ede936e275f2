method_name = "upper"
handler = getattr("text", method_name)
print(handler())
