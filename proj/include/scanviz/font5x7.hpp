#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "scanviz/geometry.hpp"

namespace scanviz::font {

// Embedded 5x7 bitmap font. Glyphs are 5 columns x 7 rows; one column of
// spacing between characters. Metrics are exact so AOI boxes can be derived
// without rendering.
inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;
inline constexpr int kAdvance = 6;  // glyph + 1px spacing

bool has_glyph(char c);

// Row bitmaps, bit 4 = leftmost column.
const std::array<std::uint8_t, 7>& glyph(char c);

// Pixel width of a string at the given integer scale (no trailing spacing).
int text_width(const std::string& text, int scale);
inline int text_height(int scale) { return kGlyphHeight * scale; }

// Draws text with its top-left corner at (x,y). Pixels outside the image are
// dropped. Throws LayoutError on characters without a glyph.
void draw_text(std::vector<std::uint8_t>& pixels, int img_w, int img_h, int x, int y,
               const std::string& text, int scale, std::uint8_t intensity);

// Bounding box the text occupies when drawn at (x,y).
Rect text_bbox(int x, int y, const std::string& text, int scale);

}  // namespace scanviz::font
