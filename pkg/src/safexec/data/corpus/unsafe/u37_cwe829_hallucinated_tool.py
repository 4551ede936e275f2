booking = book_flight("NYC", "SFO")
print(booking)
