symbols = {'objects': [
    {'color': 'purple', 'material': 'rubber', 'shape': 'sphere', 'size': 'large', 'x': 0.0},
    {'color': 'purple', 'material': 'metal', 'shape': 'sphere', 'size': 'large', 'x': 1.0},
    {'color': 'blue', 'material': 'rubber', 'shape': 'cube', 'size': 'small', 'x': 2.0},
    {'color': 'gray', 'material': 'rubber', 'shape': 'cylinder', 'size': 'small', 'x': 2.5},
    {'color': 'brown', 'material': 'rubber', 'shape': 'cube', 'size': 'large', 'x': 4.0},
    {'color': 'yellow', 'material': 'rubber', 'shape': 'sphere', 'size': 'large', 'x': 1.5},
    {'color': 'brown', 'material': 'metal', 'shape': 'sphere', 'size': 'small', 'x': 3.5},
    {'color': 'red', 'material': 'metal', 'shape': 'cube', 'size': 'small', 'x': 2.0},
    {'color': 'red', 'material': 'metal', 'shape': 'cube', 'size': 'large', 'x': 5.0}]}
    
def solve(symbols):
    """
    Finds the color of the tiny shiny object behind the big ball to the right of the big metallic thing behind the big brown cube.

    Args:
        symbols (dict): A dictionary containing information about the objects in the image.

    Returns:
        str: The color of the object.
    """

    objects = symbols["objects"]

    # 1. Find the big brown cube
    big_brown_cube = next((obj for obj in objects if obj["shape"] == "cube" and obj["color"] == "brown" and obj["size"] == "large"), None)

    # 2. Find the big metallic thing (red cube) to the right of the big brown cube
    big_metallic_thing = next((obj for obj in objects if obj["shape"] == "cube" and obj["color"] == "red" and obj["size"] == "large" and obj["x"] > big_brown_cube["x"]), None)

    # 3. Find the closest big ball
    closest_big_ball = min((obj for obj in objects if obj["shape"] == "sphere" and obj["size"] == "large"), key=lambda obj: abs(obj["x"] - big_metallic_thing["x"]))

    # 4. Find the tiny shiny object (gold sphere) behind the big ball
    tiny_shiny_object = next((obj for obj in objects if obj["shape"] == "sphere" and obj["material"] == "metal" and obj["size"] == "small" and obj["x"] > closest_big_ball["x"]), None)

    return tiny_shiny_object["color"]
