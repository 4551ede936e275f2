topic = "quarterly numbers"
while len(topic) > 0:
    report = slow_report(topic)
