user_input = "__import__('os').system('id')"
result = eval(user_input)
print(result)
