from calc import add

assert add(2, 3) == 5
assert add(10, 4) == 14
print("trigger ok")
