from clamp import clamp

assert clamp(15) == 10
assert clamp(99) == 10
print("trigger ok")
