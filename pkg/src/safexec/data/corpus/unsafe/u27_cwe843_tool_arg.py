summary = search_wikipedia(1234)
print(summary)
