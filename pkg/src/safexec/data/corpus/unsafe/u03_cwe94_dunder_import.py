module = __import__("subprocess")
module.run(["ls", "/"])
