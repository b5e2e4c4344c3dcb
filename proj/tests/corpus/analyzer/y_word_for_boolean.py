def solve(symbols):
    has_red = any(o["color"] == "red" for o in symbols["objects"])
    return "probably" if has_red else "unlikely"
