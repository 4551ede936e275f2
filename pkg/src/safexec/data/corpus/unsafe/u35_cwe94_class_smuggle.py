class Loader:
    def run(self, code):
        return eval(code)


Loader().run("1 + 1")
