def func(s):
    return s.upper()


func(1234)
