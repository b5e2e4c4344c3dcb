def solve(symbols):
    # TODO: break ties between equally large objects
    largest = max(symbols["objects"], key=lambda o: o["size"])
    return largest["shape"]
