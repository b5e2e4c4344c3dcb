def solve(symbols):
    count = sum(1 for o in symbols["objects"] if o["color"] == "red")
    print(count)
