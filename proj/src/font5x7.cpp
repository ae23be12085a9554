#include "scanviz/font5x7.hpp"

#include <map>

#include "scanviz/error.hpp"

namespace scanviz::font {
namespace {

std::array<std::uint8_t, 7> rows(const char* r0, const char* r1, const char* r2, const char* r3,
                                 const char* r4, const char* r5, const char* r6) {
    const char* rs[7] = {r0, r1, r2, r3, r4, r5, r6};
    std::array<std::uint8_t, 7> out{};
    for (int i = 0; i < 7; ++i) {
        std::uint8_t bits = 0;
        for (int j = 0; j < 5; ++j) bits = static_cast<std::uint8_t>((bits << 1) | (rs[i][j] == '#'));
        out[i] = bits;
    }
    return out;
}

const std::map<char, std::array<std::uint8_t, 7>>& table() {
    static const std::map<char, std::array<std::uint8_t, 7>> t = {
        {' ', rows(".....", ".....", ".....", ".....", ".....", ".....", ".....")},
        {'A', rows(".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#")},
        {'B', rows("####.", "#...#", "#...#", "####.", "#...#", "#...#", "####.")},
        {'C', rows(".###.", "#...#", "#....", "#....", "#....", "#...#", ".###.")},
        {'D', rows("###..", "#..#.", "#...#", "#...#", "#...#", "#..#.", "###..")},
        {'E', rows("#####", "#....", "#....", "####.", "#....", "#....", "#####")},
        {'F', rows("#####", "#....", "#....", "####.", "#....", "#....", "#....")},
        {'G', rows(".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".####")},
        {'H', rows("#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#")},
        {'I', rows(".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###.")},
        {'J', rows("..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##..")},
        {'K', rows("#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#")},
        {'L', rows("#....", "#....", "#....", "#....", "#....", "#....", "#####")},
        {'M', rows("#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#")},
        {'N', rows("#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#", "#...#")},
        {'O', rows(".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###.")},
        {'P', rows("####.", "#...#", "#...#", "####.", "#....", "#....", "#....")},
        {'Q', rows(".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#")},
        {'R', rows("####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#")},
        {'S', rows(".####", "#....", "#....", ".###.", "....#", "....#", "####.")},
        {'T', rows("#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#..")},
        {'U', rows("#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###.")},
        {'V', rows("#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#..")},
        {'W', rows("#...#", "#...#", "#...#", "#.#.#", "#.#.#", "#.#.#", ".#.#.")},
        {'X', rows("#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#")},
        {'Y', rows("#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#..")},
        {'Z', rows("#####", "....#", "...#.", "..#..", ".#...", "#....", "#####")},
        {'0', rows(".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###.")},
        {'1', rows("..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###.")},
        {'2', rows(".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####")},
        {'3', rows("#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###.")},
        {'4', rows("...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#.")},
        {'5', rows("#####", "#....", "####.", "....#", "....#", "#...#", ".###.")},
        {'6', rows("..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###.")},
        {'7', rows("#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#...")},
        {'8', rows(".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###.")},
        {'9', rows(".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##..")},
        {'-', rows(".....", ".....", ".....", "#####", ".....", ".....", ".....")},
        {'.', rows(".....", ".....", ".....", ".....", ".....", ".##..", ".##..")},
        {',', rows(".....", ".....", ".....", ".....", ".##..", "..#..", ".#...")},
        {':', rows(".....", ".##..", ".##..", ".....", ".##..", ".##..", ".....")},
        {'?', rows(".###.", "#...#", "....#", "...#.", "..#..", ".....", "..#..")},
        {'%', rows("##...", "##..#", "...#.", "..#..", ".#...", "#..##", "...##")},
        {'(', rows("...#.", "..#..", ".#...", ".#...", ".#...", "..#..", "...#.")},
        {')', rows(".#...", "..#..", "...#.", "...#.", "...#.", "..#..", ".#...")},
    };
    return t;
}

}  // namespace

bool has_glyph(char c) { return table().count(c) != 0; }

const std::array<std::uint8_t, 7>& glyph(char c) {
    auto it = table().find(c);
    if (it == table().end())
        throw LayoutError(std::string("no glyph for character '") + c + "'");
    return it->second;
}

int text_width(const std::string& text, int scale) {
    if (text.empty()) return 0;
    return (kAdvance * static_cast<int>(text.size()) - 1) * scale;
}

void draw_text(std::vector<std::uint8_t>& pixels, int img_w, int img_h, int x, int y,
               const std::string& text, int scale, std::uint8_t intensity) {
    int cx = x;
    for (char c : text) {
        const auto& g = glyph(c);
        for (int r = 0; r < kGlyphHeight; ++r) {
            for (int col = 0; col < kGlyphWidth; ++col) {
                if (!(g[r] & (1 << (4 - col)))) continue;
                for (int sy = 0; sy < scale; ++sy) {
                    for (int sx = 0; sx < scale; ++sx) {
                        int px = cx + col * scale + sx;
                        int py = y + r * scale + sy;
                        if (px < 0 || px >= img_w || py < 0 || py >= img_h) continue;
                        pixels[static_cast<std::size_t>(py) * img_w + px] = intensity;
                    }
                }
            }
        }
        cx += kAdvance * scale;
    }
}

Rect text_bbox(int x, int y, const std::string& text, int scale) {
    return {x, y, x + text_width(text, scale), y + text_height(scale)};
}

}  // namespace scanviz::font
