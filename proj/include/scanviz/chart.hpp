#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scanviz/geometry.hpp"

namespace scanviz {

enum class Orientation { Horizontal, Vertical };

enum class AoiKind { Title, Mark, CategoryLabel, ValueTick, AxisLine, ValueLabel };

// The three report regions used by the metrics module, plus background.
enum class Region { Title, Mark, Axis, Background };

Region region_of(AoiKind kind);
std::string to_string(AoiKind kind);
std::string to_string(Region region);
AoiKind aoi_kind_from_string(const std::string& s);

struct ChartStyle {
    int bar_color_intensity = 96;    // 0-255
    int background_intensity = 248;  // 0-255
};

struct Datum {
    std::string category_label;
    double value = 0.0;  // >= 0
};

struct ChartSpec {
    std::string chart_id;
    Orientation orientation = Orientation::Vertical;
    std::string title;
    std::string category_axis_label;
    std::string value_axis_label;
    std::vector<Datum> data;  // 2..12 entries, distinct labels
    double value_axis_max = 0.0;
    double tick_step = 0.0;
    ChartStyle style;
};

// Throws ParamError if any ChartSpec invariant is violated.
void validate_spec(const ChartSpec& spec);

struct Aoi {
    std::string aoi_id;
    AoiKind kind = AoiKind::Mark;
    Rect bbox;
    std::optional<std::string> text;
    std::optional<int> datum_index;
};

struct RenderedChart {
    ChartSpec spec;
    std::vector<std::uint8_t> pixels;  // kImageSize x kImageSize, row-major
    std::vector<Aoi> aois;
    int original_width = kImageSize;
    int original_height = kImageSize;

    std::uint8_t at(int x, int y) const {
        return pixels[static_cast<std::size_t>(y) * kImageSize + x];
    }
    const Aoi* find_aoi(const std::string& aoi_id) const;
};

struct GenParams {
    int min_categories = 6;
    int max_categories = 10;
    int min_value = 8;
    int max_value = 96;
    std::optional<Orientation> orientation;  // unset = random per chart
    std::vector<std::string> word_list;      // category label candidates (uppercase)
    std::vector<std::string> value_words;    // value-axis label candidates
    std::vector<std::string> category_words; // category-axis label candidates

    static GenParams defaults();
};

// Deterministic for a fixed seed; output satisfies all ChartSpec invariants.
ChartSpec generate_spec(std::uint64_t seed, const GenParams& params);

// Pure, bit-identical across runs. Throws LayoutError when text does not fit
// the fixed margins (never truncates).
RenderedChart render(const ChartSpec& spec);

// Smallest-area AOI containing the point, or nullptr. Throws BoundsError on
// out-of-bounds points.
const Aoi* aoi_at(const RenderedChart& chart, int x, int y);

// --- serialization ---

std::string spec_to_json(const ChartSpec& spec);
ChartSpec spec_from_json(const std::string& json_text);

std::string aois_to_json(const RenderedChart& chart);
std::vector<Aoi> aois_from_json(const std::string& json_text);

void write_pgm(const std::string& path, const std::vector<std::uint8_t>& pixels, int w, int h);
std::vector<std::uint8_t> read_pgm(const std::string& path, int& w, int& h);

}  // namespace scanviz
