import threading


def task():
    pass


while True:
    threading.Thread(target=task).start()
