stack = []
for i in range(6):
    stack.append(i * i)
top = stack.pop()
stack.insert(0, -1)
stack.extend([100, 200])
stack.remove(4)
middle = stack[1:4]
reversed_copy = stack[::-1]
print(stack, top, middle, reversed_copy)
print(stack.index(100), stack.count(1), len(stack), 9 in stack)
