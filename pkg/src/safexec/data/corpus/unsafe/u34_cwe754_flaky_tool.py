status = flaky_api("https://status.example.org")
print(status)
