#!/usr/bin/env python3
# Copyright 2026 The Partsketch Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates src/raster/font_8x12.inc from DejaVu Sans Mono.

Each printable ASCII glyph (0x20..0x7e) is thresholded into an 8x12 cell;
one byte per row, most significant bit is the leftmost pixel.
"""
import os
import sys
from PIL import Image, ImageDraw, ImageFont

FONT = "/usr/share/fonts/truetype/dejavu/DejaVuSansMono.ttf"
W, H = 8, 12


def glyph_rows(font, ch):
    img = Image.new("L", (W, H), 0)
    ImageDraw.Draw(img).text((0, -1), ch, fill=255, font=font)
    rows = []
    for y in range(H):
        bits = 0
        for x in range(W):
            if img.getpixel((x, y)) >= 110:
                bits |= 0x80 >> x
        rows.append(bits)
    return rows


def main(out, header_path=None):
    font = ImageFont.truetype(FONT, 11)
    lines = ["// Generated by tools/gen_font.py. Do not edit.",
             "// 95 glyphs (0x20..0x7e), 12 rows each, MSB = leftmost pixel."]
    for code in range(0x20, 0x7F):
        rows = glyph_rows(font, chr(code))
        body = ", ".join("0x%02x" % r for r in rows)
        lines.append("{%s},  // %r" % (body, chr(code)))
    header = open(header_path).read() if header_path and os.path.exists(header_path) else ""
    with open(out, "w") as fh:
        fh.write(header + ("\n" if header else "") + "\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "font_8x12.inc",
         sys.argv[2] if len(sys.argv) > 2 else None)
