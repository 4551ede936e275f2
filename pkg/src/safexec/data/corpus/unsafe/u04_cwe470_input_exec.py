class_name = input()
exec(f"import {class_name}")
