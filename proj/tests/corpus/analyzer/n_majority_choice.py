def solve(symbols):
    counts = {}
    for obj in symbols["objects"]:
        counts[obj["color"]] = counts.get(obj["color"], 0) + 1
    best = max(sorted(counts), key=lambda c: counts[c])
    labels = {"red": "A", "blue": "B", "green": "C"}
    return labels[best]
