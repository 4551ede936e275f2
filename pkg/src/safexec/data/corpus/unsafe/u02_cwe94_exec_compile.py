payload = "print('owned')"
exec(compile(payload, "<payload>", "exec"))
