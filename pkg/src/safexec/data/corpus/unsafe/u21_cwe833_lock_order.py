lock1.acquire()
lock2.acquire()
