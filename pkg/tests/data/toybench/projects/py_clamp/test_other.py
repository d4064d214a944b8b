from clamp import clamp

assert clamp(5) == 5
assert clamp(-3) == -3
print("other ok")
