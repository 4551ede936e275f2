def grade(score):
    if score >= 90:
        return "A"
    elif score >= 80:
        return "B"
    elif score >= 70:
        return "C"
    return "F"


scores = [95, 83, 71, 12, 90]
grades = [grade(s) for s in scores]
passed = [s for s in scores if s >= 70]
label = "all passed" if len(passed) == len(scores) else "some failed"
print(grades, passed, label)
print(1 < 2 < 3, 3 > 2 > 2, not passed, None is None, [] or "empty", 0 and 1)
