import math
from math import sqrt, gcd

hyp = sqrt(3 ** 2 + 4 ** 2)
angle = math.degrees(math.atan2(1, 1))
g = gcd(84, 36)
area = math.pi * 2.5 ** 2
print(hyp, angle, g)
print(round(area, 4), math.floor(-2.5), math.ceil(2.1), math.factorial(12))
print(math.isclose(0.1 + 0.2, 0.3), 0.1 + 0.2)
