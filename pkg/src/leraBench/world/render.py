"""Observation renderings of a Scene: snapshot, text and raster.

All three are pure functions of the scene. The raster is a binary portable
pixmap (P6) of the table seen from above: a 4x4 grid of 16x16 pixel cells.
"""
import io

from leraBench.world.scene import serialize_scene

FORMATS = ("snapshot", "text", "raster")

CELL_PX = 16
GRID = 4

PALETTE = {
    "table": (196, 164, 120),
    "red": (220, 40, 40),
    "green": (40, 170, 60),
    "blue": (40, 80, 220),
    "yellow": (235, 210, 40),
    "container": (150, 150, 150),
    "appliance": (90, 90, 90),
    "item": (245, 245, 245),
}

_FLAG_WORDS = {
    "open": ("open", "closed"),
    "powered": ("switched on", "switched off"),
    "clean": ("clean", "dirty"),
    "hot": ("hot", "not hot"),
}

_SURFACE = {"tabletop": "table", "household": "counter"}


def observe(scene, fmt="snapshot"):
    if fmt == "snapshot":
        return serialize_scene(scene)
    if fmt == "text":
        return describe(scene)
    if fmt == "raster":
        return rasterize(scene)
    raise ValueError(f"unknown observation format {fmt!r}")


def describe(scene):
    """Natural-language account of placements, flags and the gripper."""
    surface = _SURFACE.get(scene.family, "table")
    lines = []
    if not scene.objects:
        lines.append(f"The {surface} is empty.")
    for oid in scene.ids():
        obj = scene.objects[oid]
        placement = obj.placement
        if placement.site == "on_table":
            where = f"on the {surface} at position {placement.cell}"
        elif placement.site == "held":
            where = "in the gripper"
        else:
            where = f"{placement.site} {placement.target}"
        sentence = f"{oid} is {where}"
        states = [_FLAG_WORDS[name][0 if value else 1] for name, value in sorted(obj.flags.items())]
        if states:
            sentence += "; it is " + " and ".join(states)
        lines.append(sentence + ".")
    if scene.gripper_holding:
        lines.append(f"The gripper holds {scene.gripper_holding}.")
    else:
        lines.append("The gripper holds nothing.")
    if scene.located_target:
        lines.append(f"The agent is at {scene.located_target}.")
    return "\n".join(lines)


def _fill(pixels, width, x0, y0, size, color):
    for y in range(y0, y0 + size):
        row = (y * width + x0) * 3
        pixels[row:row + size * 3] = bytes(color) * size


def _ring(pixels, width, x0, y0, size, thickness, color):
    for y in range(y0, y0 + size):
        for x in range(x0, x0 + size):
            edge = min(x - x0, y - y0, x0 + size - 1 - x, y0 + size - 1 - y)
            if edge < thickness:
                i = (y * width + x) * 3
                pixels[i:i + 3] = bytes(color)


def _colorOf(obj):
    if obj.descriptor.color != "none":
        return PALETTE[obj.descriptor.color]
    return PALETTE[obj.kind]


def rasterize(scene):
    width = height = GRID * CELL_PX
    pixels = bytearray(bytes(PALETTE["table"]) * (width * height))
    for oid in scene.ground():
        obj = scene.objects[oid]
        cell = obj.placement.cell
        if cell >= GRID * GRID:
            continue
        x0 = (cell % GRID) * CELL_PX
        y0 = (cell // GRID) * CELL_PX
        if obj.kind == "bowl":
            _ring(pixels, width, x0 + 1, y0 + 1, CELL_PX - 2, 2, _colorOf(obj))
            slots = [(4, 4), (9, 4), (4, 9), (9, 9)]
            inside = [c for c in scene.childrenOf(oid) if scene.objects[c].placement.site == "in"]
            for (dx, dy), child in zip(slots, inside):
                _fill(pixels, width, x0 + dx, y0 + dy, 3, _colorOf(scene.objects[child]))
                for top in scene.childrenOf(child):
                    _fill(pixels, width, x0 + dx + 1, y0 + dy + 1, 1, _colorOf(scene.objects[top]))
        elif obj.kind == "block":
            _fill(pixels, width, x0 + 2, y0 + 2, CELL_PX - 4, _colorOf(obj))
            for top in scene.childrenOf(oid):
                _fill(pixels, width, x0 + 5, y0 + 5, CELL_PX - 10, _colorOf(scene.objects[top]))
        elif obj.kind == "item":
            _fill(pixels, width, x0 + 4, y0 + 4, CELL_PX - 8, _colorOf(obj))
        else:
            _fill(pixels, width, x0 + 1, y0 + 1, CELL_PX - 2, _colorOf(obj))
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    return header + bytes(pixels)


def raster_png(ppm, size):
    """PNG copy of a P6 raster, enlarged by the largest whole factor that fits in size pixels."""
    from PIL import Image
    image = Image.open(io.BytesIO(ppm))
    factor = max(1, size // image.width)
    if factor > 1:
        image = image.resize((image.width * factor, image.height * factor), Image.NEAREST)
    out = io.BytesIO()
    image.save(out, format="PNG")
    return out.getvalue()
