def solve(symbols):
    # Sum the sizes of all red objects.
    total = 0.0
    for obj in symbols["objects"]:
        if obj["color"] == "red":
            total += obj["size"]
    return total
