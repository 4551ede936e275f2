import string

def caesar(text, shift):
    letters = string.ascii_lowercase
    out = []
    for ch in text:
        if ch in letters:
            out.append(letters[(letters.index(ch) + shift) % 26])
        else:
            out.append(ch)
    return "".join(out)


secret = caesar("hello world", 3)
print(secret, caesar(secret, -3))
print(string.digits, len(string.punctuation))
