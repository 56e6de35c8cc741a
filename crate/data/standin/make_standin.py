"""Regenerate the stand-in benchmark corpus from scikit-image's bundled sample data.

Every output is an 8-bit grayscale PNG whose sides are divisible by 8.
Color sources are converted with Pillow's "L" mode (BT.601 luma).
"""
import os

from PIL import Image
import skimage

SRC = os.path.join(os.path.dirname(skimage.__file__), "data")
OUT = os.path.dirname(os.path.abspath(__file__))

# name -> (source file, crop box (left, top, right, bottom) or None)
IMAGES = {
    "astronaut": ("astronaut.png", None),
    "brick": ("brick.png", None),
    "camera": ("camera.png", None),
    "coffee": ("coffee.png", (100, 0, 500, 400)),
    "grass": ("grass.png", None),
    "gravel": ("gravel.png", None),
    "hubble": ("hubble_deep_field.jpg", (244, 180, 756, 692)),
    "ihc": ("ihc.png", None),
    "moon": ("moon.png", None),
    "retina": ("retina.jpg", (450, 450, 962, 962)),
}

for name, (src, box) in IMAGES.items():
    im = Image.open(os.path.join(SRC, src)).convert("L")
    if box is not None:
        im = im.crop(box)
    assert im.size[0] % 8 == 0 and im.size[1] % 8 == 0, name
    im.save(os.path.join(OUT, name + ".png"), optimize=True)
    print(name, im.size)
