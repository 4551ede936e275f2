pi_approx = 355 / 113
label = "pi"
width = 10
line = f"{label:>{width}} = {pi_approx:.6f}"
print(line)
print(f"{12345:,} {0.5:%} {255:x} {255:#o} {'q'!r}")
print(f"{[1, 2]} {(3,)} {None} {True}")
