from urllib.request import urlopen

script = urlopen("http://example.org/x").read()
