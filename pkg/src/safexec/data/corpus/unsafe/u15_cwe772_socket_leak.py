import socket

conn = socket.socket()
conn.connect(("example.org", 80))
