#include "scanviz/chart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

#include "scanviz/error.hpp"
#include "scanviz/font5x7.hpp"
#include "scanviz/rng.hpp"

namespace scanviz {

namespace {

constexpr std::uint8_t kTextInk = 16;

// Shared layout constants. Title strip on top, then the axis-title line,
// then the plot region. Margins hold tick and category labels.
constexpr int kTitleY = 4;
constexpr int kAxisTitleY = 22;
constexpr int kPlotTop = 34;

std::string format_value(double v) {
    double r = std::round(v);
    if (std::abs(v - r) < 1e-9) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%ld", static_cast<long>(r));
        return buf;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

int scale_extent(double value, double axis_max, int plot_extent) {
    return std::max(1, static_cast<int>(std::lround(value / axis_max * plot_extent)));
}

void fill_rect(std::vector<std::uint8_t>& px, const Rect& r, std::uint8_t intensity) {
    Rect c = r.clipped(kImageSize, kImageSize);
    for (int y = c.y0; y < c.y1; ++y)
        for (int x = c.x0; x < c.x1; ++x) px[static_cast<std::size_t>(y) * kImageSize + x] = intensity;
}

struct TextDraw {
    Rect bbox;
};

TextDraw place_text(std::vector<std::uint8_t>& px, int x, int y, const std::string& text,
                    int scale, std::uint8_t ink) {
    Rect bb = font::text_bbox(x, y, text, scale);
    if (bb.x0 < 0 || bb.y0 < 0 || bb.x1 > kImageSize || bb.y1 > kImageSize)
        throw LayoutError("text '" + text + "' does not fit the image");
    font::draw_text(px, kImageSize, kImageSize, x, y, text, scale, ink);
    return {bb};
}

}  // namespace

Region region_of(AoiKind kind) {
    switch (kind) {
        case AoiKind::Title: return Region::Title;
        case AoiKind::Mark:
        case AoiKind::ValueLabel: return Region::Mark;
        case AoiKind::CategoryLabel:
        case AoiKind::ValueTick:
        case AoiKind::AxisLine: return Region::Axis;
    }
    return Region::Background;
}

std::string to_string(AoiKind kind) {
    switch (kind) {
        case AoiKind::Title: return "Title";
        case AoiKind::Mark: return "Mark";
        case AoiKind::CategoryLabel: return "CategoryLabel";
        case AoiKind::ValueTick: return "ValueTick";
        case AoiKind::AxisLine: return "AxisLine";
        case AoiKind::ValueLabel: return "ValueLabel";
    }
    return "?";
}

std::string to_string(Region region) {
    switch (region) {
        case Region::Title: return "title";
        case Region::Mark: return "mark";
        case Region::Axis: return "axis";
        case Region::Background: return "background";
    }
    return "?";
}

AoiKind aoi_kind_from_string(const std::string& s) {
    if (s == "Title") return AoiKind::Title;
    if (s == "Mark") return AoiKind::Mark;
    if (s == "CategoryLabel") return AoiKind::CategoryLabel;
    if (s == "ValueTick") return AoiKind::ValueTick;
    if (s == "AxisLine") return AoiKind::AxisLine;
    if (s == "ValueLabel") return AoiKind::ValueLabel;
    throw ParamError("unknown AOI kind: " + s);
}

void validate_spec(const ChartSpec& spec) {
    if (spec.data.size() < 2 || spec.data.size() > 12)
        throw ParamError("chart must have 2..12 data points, got " + std::to_string(spec.data.size()));
    std::set<std::string> labels;
    double max_value = 0.0;
    for (const auto& d : spec.data) {
        if (d.category_label.empty()) throw ParamError("empty category label");
        if (!labels.insert(d.category_label).second)
            throw ParamError("duplicate category label: " + d.category_label);
        if (d.value < 0.0) throw ParamError("negative value for " + d.category_label);
        max_value = std::max(max_value, d.value);
    }
    if (spec.value_axis_max < max_value)
        throw ParamError("value_axis_max below maximum data value");
    if (spec.tick_step <= 0.0) throw ParamError("tick_step must be positive");
    double ratio = spec.value_axis_max / spec.tick_step;
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
        throw ParamError("tick_step does not divide value_axis_max evenly");
    auto in_byte = [](int v) { return v >= 0 && v <= 255; };
    if (!in_byte(spec.style.bar_color_intensity) || !in_byte(spec.style.background_intensity))
        throw ParamError("style intensity out of [0,255]");
}

const Aoi* RenderedChart::find_aoi(const std::string& aoi_id) const {
    for (const auto& a : aois)
        if (a.aoi_id == aoi_id) return &a;
    return nullptr;
}

GenParams GenParams::defaults() {
    GenParams p;
    p.word_list = {"ANT", "BAT", "CAT", "DOG", "EEL", "ELK", "EMU", "FOX", "HEN", "JAY",
                   "KIT", "OWL", "PIG", "RAM", "RAT", "YAK", "BEE", "COD", "DOE", "SOW",
                   "LYNX", "MOLE", "MULE", "SEAL", "SWAN", "TOAD", "WOLF", "CRANE",
                   "HERON", "LEMUR", "OTTER", "ZEBRA"};
    p.value_words = {"SALES", "COUNT", "SCORE", "TOTAL", "PRICE", "UNITS"};
    p.category_words = {"CITY", "TEAM", "ITEM", "YEAR", "TYPE", "SHOP"};
    return p;
}

ChartSpec generate_spec(std::uint64_t seed, const GenParams& params) {
    if (params.min_categories > params.max_categories || params.min_categories < 2 ||
        params.max_categories > 12)
        throw ParamError("category count range invalid");
    if (params.min_value > params.max_value || params.min_value < 0)
        throw ParamError("value range invalid");
    if (params.word_list.empty() || params.value_words.empty() || params.category_words.empty())
        throw ParamError("word lists must be non-empty");

    Rng rng(seed);
    ChartSpec spec;
    char idbuf[24];
    std::snprintf(idbuf, sizeof(idbuf), "c%016llx", static_cast<unsigned long long>(seed));
    spec.chart_id = idbuf;

    spec.orientation = params.orientation
                           ? *params.orientation
                           : (rng.uniform_int(0, 1) ? Orientation::Vertical : Orientation::Horizontal);
    int n = rng.uniform_int(params.min_categories, params.max_categories);

    // Labels must fit their margin: under-bar slots for vertical charts, the
    // fixed left margin for horizontal ones.
    int max_len;
    if (spec.orientation == Orientation::Vertical) {
        int slot = 266 / n;
        max_len = (slot - 1) / font::kAdvance;
    } else {
        max_len = 10;
    }
    std::vector<std::string> candidates;
    for (const auto& w : params.word_list)
        if (static_cast<int>(w.size()) <= max_len && !w.empty()) candidates.push_back(w);
    if (static_cast<int>(candidates.size()) < n)
        throw ParamError("word list has too few labels of length <= " + std::to_string(max_len));

    // Partial Fisher-Yates draw of n distinct labels.
    for (int i = 0; i < n; ++i) {
        int j = rng.uniform_int(i, static_cast<int>(candidates.size()) - 1);
        std::swap(candidates[i], candidates[j]);
    }

    double max_value = 0.0;
    for (int i = 0; i < n; ++i) {
        Datum d;
        d.category_label = candidates[i];
        d.value = rng.uniform_int(params.min_value, params.max_value);
        max_value = std::max(max_value, d.value);
        spec.data.push_back(d);
    }

    // Axis maximum: k ticks of a "nice" step (1, 2 or 5 times a power of ten).
    int k = rng.uniform_int(4, 5);
    double raw = std::max(1.0, std::ceil(max_value / k));
    double step = 1.0;
    while (step < raw) {
        if (step * 2.0 >= raw) { step *= 2.0; break; }
        if (step * 5.0 >= raw) { step *= 5.0; break; }
        step *= 10.0;
    }
    spec.tick_step = step;
    spec.value_axis_max = step * k;

    const auto& vw = params.value_words[rng.uniform_int(0, static_cast<int>(params.value_words.size()) - 1)];
    const auto& cw = params.category_words[rng.uniform_int(0, static_cast<int>(params.category_words.size()) - 1)];
    spec.value_axis_label = vw;
    spec.category_axis_label = cw;
    spec.title = vw + " BY " + cw;

    spec.style.bar_color_intensity = rng.uniform_int(64, 160);
    spec.style.background_intensity = rng.uniform_int(232, 255);

    validate_spec(spec);
    return spec;
}

RenderedChart render(const ChartSpec& spec) {
    validate_spec(spec);

    RenderedChart chart;
    chart.spec = spec;
    chart.pixels.assign(static_cast<std::size_t>(kImageSize) * kImageSize,
                        static_cast<std::uint8_t>(spec.style.background_intensity));
    auto& px = chart.pixels;
    const auto bar_ink = static_cast<std::uint8_t>(spec.style.bar_color_intensity);
    const auto bg = static_cast<std::uint8_t>(spec.style.background_intensity);
    const int n = static_cast<int>(spec.data.size());

    auto add_aoi = [&](std::string id, AoiKind kind, Rect bbox, std::optional<std::string> text,
                       std::optional<int> datum) {
        chart.aois.push_back({std::move(id), kind, bbox, std::move(text), datum});
    };

    // Title, centered, double scale.
    {
        int w = font::text_width(spec.title, 2);
        if (w > kImageSize - 8) throw LayoutError("title too long: " + spec.title);
        auto t = place_text(px, (kImageSize - w) / 2, kTitleY, spec.title, 2, kTextInk);
        add_aoi("title", AoiKind::Title, t.bbox, spec.title, std::nullopt);
    }

    int num_ticks = static_cast<int>(std::lround(spec.value_axis_max / spec.tick_step)) + 1;

    if (spec.orientation == Orientation::Vertical) {
        const int left = 46, right = 312, top = kPlotTop, bottom = 278;
        const int plot_w = right - left, plot_h = bottom - top;

        auto vt = place_text(px, 6, kAxisTitleY, spec.value_axis_label, 1, kTextInk);
        add_aoi("axis-label-value", AoiKind::AxisLine, vt.bbox, spec.value_axis_label, std::nullopt);

        fill_rect(px, {left - 2, top, left, bottom + 2}, kTextInk);
        add_aoi("axisline-value", AoiKind::AxisLine, {left - 2, top, left, bottom + 2},
                std::nullopt, std::nullopt);
        fill_rect(px, {left - 2, bottom, right, bottom + 2}, kTextInk);
        add_aoi("axisline-category", AoiKind::AxisLine, {left - 2, bottom, right, bottom + 2},
                std::nullopt, std::nullopt);

        for (int j = 0; j < num_ticks; ++j) {
            double v = j * spec.tick_step;
            int y = bottom - static_cast<int>(std::lround(v / spec.value_axis_max * plot_h));
            fill_rect(px, {left - 6, y - 1, left - 2, y + 1}, kTextInk);
            std::string text = format_value(v);
            int w = font::text_width(text, 1);
            if (38 - w < 0) throw LayoutError("tick label too long: " + text);
            place_text(px, 38 - w, y - 3, text, 1, kTextInk);
            add_aoi("tick-" + std::to_string(j), AoiKind::ValueTick, {38 - w, y - 3, left - 2, y + 4},
                    text, std::nullopt);
        }

        for (int i = 0; i < n; ++i) {
            const auto& d = spec.data[i];
            int sx0 = left + static_cast<int>(std::lround(static_cast<double>(i) * plot_w / n));
            int sx1 = left + static_cast<int>(std::lround(static_cast<double>(i + 1) * plot_w / n));
            int slot = sx1 - sx0;
            int bw = std::max(4, static_cast<int>(std::lround(0.6 * slot)));
            int bx0 = (sx0 + sx1) / 2 - bw / 2;
            int h = scale_extent(d.value, spec.value_axis_max, plot_h);
            Rect bar{bx0, bottom - h, bx0 + bw, bottom};
            fill_rect(px, bar, bar_ink);
            add_aoi("mark-" + std::to_string(i), AoiKind::Mark, bar, std::nullopt, i);

            std::string vtext = format_value(d.value);
            int vw = font::text_width(vtext, 1);
            Rect vbb;
            if (h >= 13 && vw <= bw - 2) {
                vbb = place_text(px, (sx0 + sx1) / 2 - vw / 2, bar.y0 + 3, vtext, 1, bg).bbox;
            } else {
                int vy = bar.y0 - 9;
                if (vy < kPlotTop - 4) throw LayoutError("value label does not fit above bar");
                vbb = place_text(px, (sx0 + sx1) / 2 - vw / 2, vy, vtext, 1, kTextInk).bbox;
            }
            add_aoi("vlabel-" + std::to_string(i), AoiKind::ValueLabel, vbb, vtext, i);

            int cw = font::text_width(d.category_label, 1);
            if (cw > slot - 1) throw LayoutError("category label too wide: " + d.category_label);
            auto ct = place_text(px, (sx0 + sx1) / 2 - cw / 2, 283, d.category_label, 1, kTextInk);
            add_aoi("clabel-" + std::to_string(i), AoiKind::CategoryLabel, ct.bbox,
                    d.category_label, i);
        }

        int cwl = font::text_width(spec.category_axis_label, 1);
        auto ca = place_text(px, (kImageSize - cwl) / 2, 298, spec.category_axis_label, 1, kTextInk);
        add_aoi("axis-label-category", AoiKind::AxisLine, ca.bbox, spec.category_axis_label,
                std::nullopt);
    } else {
        const int left = 72, right = 310, top = kPlotTop, bottom = 272;
        const int plot_w = right - left, plot_h = bottom - top;

        auto ct = place_text(px, 6, kAxisTitleY, spec.category_axis_label, 1, kTextInk);
        add_aoi("axis-label-category", AoiKind::AxisLine, ct.bbox, spec.category_axis_label,
                std::nullopt);

        fill_rect(px, {left - 2, top, left, bottom + 2}, kTextInk);
        add_aoi("axisline-category", AoiKind::AxisLine, {left - 2, top, left, bottom + 2},
                std::nullopt, std::nullopt);
        fill_rect(px, {left - 2, bottom, right, bottom + 2}, kTextInk);
        add_aoi("axisline-value", AoiKind::AxisLine, {left - 2, bottom, right, bottom + 2},
                std::nullopt, std::nullopt);

        for (int j = 0; j < num_ticks; ++j) {
            double v = j * spec.tick_step;
            int x = left + static_cast<int>(std::lround(v / spec.value_axis_max * plot_w));
            fill_rect(px, {x - 1, bottom + 2, x + 1, bottom + 6}, kTextInk);
            std::string text = format_value(v);
            int w = font::text_width(text, 1);
            int tx = std::clamp(x - w / 2, 0, kImageSize - w);
            place_text(px, tx, 280, text, 1, kTextInk);
            add_aoi("tick-" + std::to_string(j), AoiKind::ValueTick,
                    {std::min(tx, x - 1), bottom + 2, std::max(tx + w, x + 1), 287}, text,
                    std::nullopt);
        }

        for (int i = 0; i < n; ++i) {
            const auto& d = spec.data[i];
            int sy0 = top + static_cast<int>(std::lround(static_cast<double>(i) * plot_h / n));
            int sy1 = top + static_cast<int>(std::lround(static_cast<double>(i + 1) * plot_h / n));
            int slot = sy1 - sy0;
            int bh = std::max(4, static_cast<int>(std::lround(0.6 * slot)));
            int by0 = (sy0 + sy1) / 2 - bh / 2;
            int len = scale_extent(d.value, spec.value_axis_max, plot_w);
            Rect bar{left, by0, left + len, by0 + bh};
            fill_rect(px, bar, bar_ink);
            add_aoi("mark-" + std::to_string(i), AoiKind::Mark, bar, std::nullopt, i);

            std::string vtext = format_value(d.value);
            int vw = font::text_width(vtext, 1);
            int vy = (sy0 + sy1) / 2 - 3;
            Rect vbb;
            if (len >= vw + 6 && bh >= 9) {
                vbb = place_text(px, bar.x1 - vw - 3, vy, vtext, 1, bg).bbox;
            } else {
                if (bar.x1 + 3 + vw > kImageSize - 2)
                    throw LayoutError("value label does not fit right of bar");
                vbb = place_text(px, bar.x1 + 3, vy, vtext, 1, kTextInk).bbox;
            }
            add_aoi("vlabel-" + std::to_string(i), AoiKind::ValueLabel, vbb, vtext, i);

            int cw = font::text_width(d.category_label, 1);
            if (cw > left - 6 || 7 > slot)
                throw LayoutError("category label too large: " + d.category_label);
            auto cl = place_text(px, left - 4 - cw, (sy0 + sy1) / 2 - 3, d.category_label, 1,
                                 kTextInk);
            add_aoi("clabel-" + std::to_string(i), AoiKind::CategoryLabel, cl.bbox,
                    d.category_label, i);
        }

        int vwl = font::text_width(spec.value_axis_label, 1);
        auto va = place_text(px, (kImageSize - vwl) / 2, 298, spec.value_axis_label, 1, kTextInk);
        add_aoi("axis-label-value", AoiKind::AxisLine, va.bbox, spec.value_axis_label,
                std::nullopt);
    }

    for (const auto& a : chart.aois) {
        if (a.bbox.x0 < 0 || a.bbox.y0 < 0 || a.bbox.x1 > kImageSize || a.bbox.y1 > kImageSize ||
            a.bbox.empty())
            throw LayoutError("AOI " + a.aoi_id + " outside image bounds");
    }
    return chart;
}

const Aoi* aoi_at(const RenderedChart& chart, int x, int y) {
    if (x < 0 || x >= kImageSize || y < 0 || y >= kImageSize)
        throw BoundsError("aoi_at: point out of image bounds");
    const Aoi* best = nullptr;
    for (const auto& a : chart.aois) {
        if (!a.bbox.contains(x, y)) continue;
        if (!best || a.bbox.area() < best->bbox.area()) best = &a;
    }
    return best;
}

// --- serialization ---

namespace {
using nlohmann::json;
}

std::string spec_to_json(const ChartSpec& spec) {
    json j;
    j["chart_id"] = spec.chart_id;
    j["orientation"] = spec.orientation == Orientation::Vertical ? "vertical" : "horizontal";
    j["title"] = spec.title;
    j["category_axis_label"] = spec.category_axis_label;
    j["value_axis_label"] = spec.value_axis_label;
    j["data"] = json::array();
    for (const auto& d : spec.data)
        j["data"].push_back({{"category_label", d.category_label}, {"value", d.value}});
    j["value_axis_max"] = spec.value_axis_max;
    j["tick_step"] = spec.tick_step;
    j["style"] = {{"bar_color_intensity", spec.style.bar_color_intensity},
                  {"background_intensity", spec.style.background_intensity}};
    return j.dump(2);
}

ChartSpec spec_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("chart spec JSON: ") + e.what(), 0);
    }
    try {
        ChartSpec spec;
        spec.chart_id = j.at("chart_id").get<std::string>();
        std::string o = j.at("orientation").get<std::string>();
        if (o == "vertical")
            spec.orientation = Orientation::Vertical;
        else if (o == "horizontal")
            spec.orientation = Orientation::Horizontal;
        else
            throw ParamError("bad orientation: " + o);
        spec.title = j.at("title").get<std::string>();
        spec.category_axis_label = j.at("category_axis_label").get<std::string>();
        spec.value_axis_label = j.at("value_axis_label").get<std::string>();
        for (const auto& dj : j.at("data"))
            spec.data.push_back({dj.at("category_label").get<std::string>(),
                                 dj.at("value").get<double>()});
        spec.value_axis_max = j.at("value_axis_max").get<double>();
        spec.tick_step = j.at("tick_step").get<double>();
        spec.style.bar_color_intensity = j.at("style").at("bar_color_intensity").get<int>();
        spec.style.background_intensity = j.at("style").at("background_intensity").get<int>();
        validate_spec(spec);
        return spec;
    } catch (const json::exception& e) {
        throw ParseError(std::string("chart spec JSON: ") + e.what(), 0);
    }
}

std::string aois_to_json(const RenderedChart& chart) {
    json arr = json::array();
    for (const auto& a : chart.aois) {
        json j;
        j["aoi_id"] = a.aoi_id;
        j["kind"] = to_string(a.kind);
        j["bbox"] = {a.bbox.x0, a.bbox.y0, a.bbox.x1, a.bbox.y1};
        if (a.text)
            j["text"] = *a.text;
        else
            j["text"] = nullptr;
        if (a.datum_index)
            j["datum_index"] = *a.datum_index;
        else
            j["datum_index"] = nullptr;
        arr.push_back(j);
    }
    return arr.dump(2);
}

std::vector<Aoi> aois_from_json(const std::string& json_text) {
    json arr;
    try {
        arr = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("AOI JSON: ") + e.what(), 0);
    }
    std::vector<Aoi> out;
    try {
        for (const auto& j : arr) {
            Aoi a;
            a.aoi_id = j.at("aoi_id").get<std::string>();
            a.kind = aoi_kind_from_string(j.at("kind").get<std::string>());
            const auto& b = j.at("bbox");
            a.bbox = {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
            if (!j.at("text").is_null()) a.text = j.at("text").get<std::string>();
            if (!j.at("datum_index").is_null()) a.datum_index = j.at("datum_index").get<int>();
            out.push_back(std::move(a));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("AOI JSON: ") + e.what(), 0);
    }
    return out;
}

void write_pgm(const std::string& path, const std::vector<std::uint8_t>& pixels, int w, int h) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    f << "P5\n" << w << " " << h << "\n255\n";
    f.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (!f) throw IoError("write failed: " + path);
}

std::vector<std::uint8_t> read_pgm(const std::string& path, int& w, int& h) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for read: " + path);
    std::string magic;
    int maxval = 0;
    f >> magic >> w >> h >> maxval;
    if (magic != "P5" || maxval != 255 || w <= 0 || h <= 0)
        throw ParseError("not a supported P5 PGM: " + path, 0);
    f.get();  // single whitespace after header
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(w) * h);
    f.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (!f) throw IoError("truncated PGM: " + path);
    return pixels;
}

}  // namespace scanviz
