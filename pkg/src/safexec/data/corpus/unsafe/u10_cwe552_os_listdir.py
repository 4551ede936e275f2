import os

for entry in os.listdir("/home"):
    print(entry)
