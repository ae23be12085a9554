#include "scanviz/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "scanviz/error.hpp"

namespace scanviz {

double dtw(const std::vector<PixelCoord>& a, const std::vector<PixelCoord>& b) {
    if (a.empty() || b.empty()) throw EmptyInputError("dtw: empty scanpath");
    const std::size_t m = a.size(), n = b.size();
    const double inf = std::numeric_limits<double>::infinity();
    // Rolling rows: D[i][j] = cost(i,j) + min(D[i-1][j], D[i][j-1], D[i-1][j-1]).
    std::vector<double> prev(n + 1, inf), cur(n + 1, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= m; ++i) {
        cur[0] = inf;
        for (std::size_t j = 1; j <= n; ++j) {
            double dx = a[i - 1].x - b[j - 1].x;
            double dy = a[i - 1].y - b[j - 1].y;
            double c = std::sqrt(dx * dx + dy * dy);
            cur[j] = c + std::min({prev[j], cur[j - 1], prev[j - 1]});
        }
        std::swap(prev, cur);
    }
    return prev[n];
}

namespace {

std::vector<int> cell_symbols(const std::vector<PixelCoord>& path, int cell_px) {
    if (cell_px <= 0) throw ParamError("levenshtein: cell_px must be positive");
    std::vector<int> out;
    out.reserve(path.size());
    for (const auto& p : path) {
        int c = p.x / cell_px, r = p.y / cell_px;
        out.push_back(r * 100000 + c);  // unique per (col,row), any grid width
    }
    return out;
}

int edit_distance(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t m = a.size(), n = b.size();
    std::vector<int> prev(n + 1), cur(n + 1);
    for (std::size_t j = 0; j <= n; ++j) prev[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= m; ++i) {
        cur[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= n; ++j) {
            int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[n];
}

std::vector<int> collapse_runs(const std::vector<int>& seq) {
    std::vector<int> out;
    for (int s : seq)
        if (out.empty() || out.back() != s) out.push_back(s);
    return out;
}

}  // namespace

int levenshtein(const std::vector<PixelCoord>& a, const std::vector<PixelCoord>& b, int cell_px) {
    if (a.empty() || b.empty()) throw EmptyInputError("levenshtein: empty scanpath");
    return edit_distance(cell_symbols(a, cell_px), cell_symbols(b, cell_px));
}

std::vector<int> to_aoi_sequence(const std::vector<PixelCoord>& fixations,
                                 const RenderedChart& chart) {
    std::vector<int> out;
    out.reserve(fixations.size());
    for (const auto& p : fixations) {
        const Aoi* a = aoi_at(chart, p.x, p.y);
        out.push_back(a ? static_cast<int>(a - chart.aois.data()) : kBackgroundSymbol);
    }
    return out;
}

double sequence_score(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.empty() || b.empty()) throw EmptyInputError("sequence_score: empty sequence");
    std::vector<int> ca = collapse_runs(a), cb = collapse_runs(b);
    // With match 1 / mismatch 0 / gap 0 the optimal alignment score is the LCS.
    const std::size_t m = ca.size(), n = cb.size();
    std::vector<int> prev(n + 1, 0), cur(n + 1, 0);
    for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            if (ca[i - 1] == cb[j - 1])
                cur[j] = prev[j - 1] + 1;
            else
                cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return static_cast<double>(prev[n]) / static_cast<double>(std::max(m, n));
}

double sequence_score(const Scanpath& a, const Scanpath& b, const RenderedChart& chart) {
    return sequence_score(to_aoi_sequence(a.fixations, chart),
                          to_aoi_sequence(b.fixations, chart));
}

SummaryStats summary_stats(const Scanpath& s, const RenderedChart& chart, const Task& task) {
    SummaryStats st;
    st.num_fixations = static_cast<int>(s.fixations.size());
    if (st.num_fixations == 0) return st;

    std::vector<const Aoi*> task_aois;
    for (const auto& id : task.task_aoi_ids)
        if (const Aoi* a = chart.find_aoi(id)) task_aois.push_back(a);

    int in_task = 0, in_title = 0, in_mark = 0, in_axis = 0;
    Region prev = Region::Background;
    bool first = true;
    bool seen_title = false, seen_mark = false, seen_axis = false;
    for (const auto& p : s.fixations) {
        for (const Aoi* a : task_aois) {
            if (a->bbox.contains(p.x, p.y)) {
                ++in_task;
                break;
            }
        }
        const Aoi* a = aoi_at(chart, p.x, p.y);
        Region r = a ? region_of(a->kind) : Region::Background;
        switch (r) {
            case Region::Title: ++in_title; break;
            case Region::Mark: ++in_mark; break;
            case Region::Axis: ++in_axis; break;
            case Region::Background: break;
        }
        if (!first && r != prev) ++st.transitions;
        if (first || r != prev) {
            // region entry
            if (r == Region::Title) {
                if (seen_title) ++st.revisit_title;
                seen_title = true;
            } else if (r == Region::Mark) {
                if (seen_mark) ++st.revisit_mark;
                seen_mark = true;
            } else if (r == Region::Axis) {
                if (seen_axis) ++st.revisit_axis;
                seen_axis = true;
            }
        }
        prev = r;
        first = false;
    }
    double n = st.num_fixations;
    st.task_aoi_ratio = 100.0 * in_task / n;
    st.title_ratio = 100.0 * in_title / n;
    st.mark_ratio = 100.0 * in_mark / n;
    st.axis_ratio = 100.0 * in_axis / n;
    return st;
}

MeanBest mean_best(const std::vector<Scanpath>& predicted, const std::vector<Scanpath>& reference,
                   const PairMetric& metric, bool maximize) {
    if (predicted.empty() || reference.empty()) throw EmptyInputError("mean_best: empty set");
    MeanBest out;
    double mean_sum = 0.0, best_sum = 0.0;
    for (const auto& p : predicted) {
        double best = maximize ? -std::numeric_limits<double>::infinity()
                               : std::numeric_limits<double>::infinity();
        for (const auto& r : reference) {
            double v = metric(p, r);
            mean_sum += v;
            best = maximize ? std::max(best, v) : std::min(best, v);
        }
        best_sum += best;
    }
    out.mean = mean_sum / (static_cast<double>(predicted.size()) * reference.size());
    out.best = best_sum / static_cast<double>(predicted.size());
    return out;
}

MeanBest leave_one_out(const std::vector<Scanpath>& humans, const PairMetric& metric,
                       bool maximize) {
    if (humans.size() < 2) throw EmptyInputError("leave_one_out: need at least 2 scanpaths");
    MeanBest out;
    double mean_sum = 0.0, best_sum = 0.0;
    for (std::size_t i = 0; i < humans.size(); ++i) {
        double best = maximize ? -std::numeric_limits<double>::infinity()
                               : std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < humans.size(); ++j) {
            double v = metric(humans[i], humans[j]);
            mean_sum += v;
            if (j != i) best = maximize ? std::max(best, v) : std::min(best, v);
        }
        best_sum += best;
    }
    double n = static_cast<double>(humans.size());
    out.mean = mean_sum / (n * n);
    out.best = best_sum / n;
    return out;
}

namespace {

using nlohmann::json;

const char* kReportHeader =
    "task_id,method,sequence_score_mean,sequence_score_best,lev_mean,lev_best,dtw_mean,dtw_best,"
    "num_fixations_mean,num_fixations_sd,task_aoi_ratio,title_ratio,mark_ratio,axis_ratio,"
    "fixation_transitions,revisit_title,revisit_mark,revisit_axis";

json row_to_json(const MetricReportRow& r) {
    return json{{"task_id", r.task_id},
                {"method", r.method},
                {"sequence_score_mean", r.sequence_score_mean},
                {"sequence_score_best", r.sequence_score_best},
                {"lev_mean", r.lev_mean},
                {"lev_best", r.lev_best},
                {"dtw_mean", r.dtw_mean},
                {"dtw_best", r.dtw_best},
                {"num_fixations_mean", r.num_fixations_mean},
                {"num_fixations_sd", r.num_fixations_sd},
                {"task_aoi_ratio", r.task_aoi_ratio},
                {"title_ratio", r.title_ratio},
                {"mark_ratio", r.mark_ratio},
                {"axis_ratio", r.axis_ratio},
                {"fixation_transitions", r.fixation_transitions},
                {"revisit_title", r.revisit_title},
                {"revisit_mark", r.revisit_mark},
                {"revisit_axis", r.revisit_axis}};
}

MetricReportRow row_from_json(const json& j) {
    MetricReportRow r;
    r.task_id = j.at("task_id").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.sequence_score_mean = j.at("sequence_score_mean").get<double>();
    r.sequence_score_best = j.at("sequence_score_best").get<double>();
    r.lev_mean = j.at("lev_mean").get<double>();
    r.lev_best = j.at("lev_best").get<double>();
    r.dtw_mean = j.at("dtw_mean").get<double>();
    r.dtw_best = j.at("dtw_best").get<double>();
    r.num_fixations_mean = j.at("num_fixations_mean").get<double>();
    r.num_fixations_sd = j.at("num_fixations_sd").get<double>();
    r.task_aoi_ratio = j.at("task_aoi_ratio").get<double>();
    r.title_ratio = j.at("title_ratio").get<double>();
    r.mark_ratio = j.at("mark_ratio").get<double>();
    r.axis_ratio = j.at("axis_ratio").get<double>();
    r.fixation_transitions = j.at("fixation_transitions").get<double>();
    r.revisit_title = j.at("revisit_title").get<double>();
    r.revisit_mark = j.at("revisit_mark").get<double>();
    r.revisit_axis = j.at("revisit_axis").get<double>();
    return r;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void write_report_csv(const std::string& path, const std::vector<MetricReportRow>& rows) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write report: " + path);
    f << kReportHeader << "\n";
    for (const auto& r : rows) {
        f << r.task_id << "," << r.method << "," << fmt(r.sequence_score_mean) << ","
          << fmt(r.sequence_score_best) << "," << fmt(r.lev_mean) << "," << fmt(r.lev_best) << ","
          << fmt(r.dtw_mean) << "," << fmt(r.dtw_best) << "," << fmt(r.num_fixations_mean) << ","
          << fmt(r.num_fixations_sd) << "," << fmt(r.task_aoi_ratio) << "," << fmt(r.title_ratio)
          << "," << fmt(r.mark_ratio) << "," << fmt(r.axis_ratio) << ","
          << fmt(r.fixation_transitions) << "," << fmt(r.revisit_title) << ","
          << fmt(r.revisit_mark) << "," << fmt(r.revisit_axis) << "\n";
    }
}

void write_report_json(const std::string& path, const std::vector<MetricReportRow>& rows) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write report: " + path);
    json arr = json::array();
    for (const auto& r : rows) arr.push_back(row_to_json(r));
    f << arr.dump(2) << "\n";
}

std::vector<MetricReportRow> read_report_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read report: " + path);
    std::string line;
    if (!std::getline(f, line)) throw ParseError("empty report: " + path, 0);
    if (line != kReportHeader) throw ParseError("unexpected report header: " + line, 1);
    std::vector<MetricReportRow> rows;
    std::size_t ln = 1;
    while (std::getline(f, line)) {
        ++ln;
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
        if (cols.size() != 18)
            throw ParseError("report line " + std::to_string(ln) + ": expected 18 columns", ln);
        MetricReportRow r;
        r.task_id = cols[0];
        r.method = cols[1];
        try {
            r.sequence_score_mean = std::stod(cols[2]);
            r.sequence_score_best = std::stod(cols[3]);
            r.lev_mean = std::stod(cols[4]);
            r.lev_best = std::stod(cols[5]);
            r.dtw_mean = std::stod(cols[6]);
            r.dtw_best = std::stod(cols[7]);
            r.num_fixations_mean = std::stod(cols[8]);
            r.num_fixations_sd = std::stod(cols[9]);
            r.task_aoi_ratio = std::stod(cols[10]);
            r.title_ratio = std::stod(cols[11]);
            r.mark_ratio = std::stod(cols[12]);
            r.axis_ratio = std::stod(cols[13]);
            r.fixation_transitions = std::stod(cols[14]);
            r.revisit_title = std::stod(cols[15]);
            r.revisit_mark = std::stod(cols[16]);
            r.revisit_axis = std::stod(cols[17]);
        } catch (const std::exception&) {
            throw ParseError("report line " + std::to_string(ln) + ": bad number", ln);
        }
        rows.push_back(r);
    }
    return rows;
}

std::vector<MetricReportRow> read_report_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read report: " + path);
    json arr;
    try {
        f >> arr;
    } catch (const json::exception& e) {
        throw ParseError(std::string("report JSON: ") + e.what(), 0);
    }
    std::vector<MetricReportRow> rows;
    for (const auto& j : arr) rows.push_back(row_from_json(j));
    return rows;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    return cols;
}

std::vector<Scanpath> ingest_csv(std::ifstream& f, const std::string& header, int image_w,
                                 int image_h) {
    auto cols = split_csv(header);
    const std::vector<std::string> want = {"chart_id", "task_id", "fix_index", "x", "y"};
    if (cols.size() != want.size()) throw ParseError("CSV header: expected 5 columns", 1);
    for (std::size_t i = 0; i < want.size(); ++i)
        if (cols[i] != want[i])
            throw ParseError("CSV header: missing column " + want[i], 1);

    std::vector<Scanpath> out;
    std::string line;
    std::size_t ln = 1;
    while (std::getline(f, line)) {
        ++ln;
        if (line.empty()) continue;
        auto v = split_csv(line);
        if (v.size() != 5)
            throw ParseError("CSV line " + std::to_string(ln) + ": expected 5 columns", ln);
        int x, y;
        try {
            x = std::stoi(v[3]);
            y = std::stoi(v[4]);
        } catch (const std::exception&) {
            throw ParseError("CSV line " + std::to_string(ln) + ": bad coordinate", ln);
        }
        if (x < 0 || x >= image_w || y < 0 || y >= image_h)
            throw ParseError("CSV line " + std::to_string(ln) + ": fixation out of bounds", ln);
        if (out.empty() || out.back().chart_id != v[0] || out.back().task_id != v[1]) {
            Scanpath s;
            s.chart_id = v[0];
            s.task_id = v[1];
            s.method = "human";
            out.push_back(std::move(s));
        }
        out.back().fixations.push_back({x, y});
        out.back().cell_trace.push_back({x * kGridSize / image_w, y * kGridSize / image_h});
    }
    return out;
}

}  // namespace

std::vector<Scanpath> ingest_scanpaths(const std::string& path, int image_w, int image_h) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read scanpaths: " + path);
    std::string first;
    if (!std::getline(f, first)) return {};

    std::vector<Scanpath> out;
    if (!first.empty() && first[0] == '{') {
        std::size_t ln = 0;
        std::string line = first;
        do {
            ++ln;
            if (line.empty()) continue;
            out.push_back(scanpath_from_json(line, ln));
        } while (std::getline(f, line));
    } else {
        out = ingest_csv(f, first, image_w, image_h);
    }
    std::size_t idx = 0;
    for (const auto& s : out) {
        ++idx;
        for (const auto& p : s.fixations)
            if (p.x < 0 || p.x >= image_w || p.y < 0 || p.y >= image_h)
                throw ParseError("scanpath " + std::to_string(idx) + " (" + s.chart_id +
                                     "): fixation out of bounds",
                                 idx);
    }
    return out;
}

void write_scanpaths_csv(const std::string& path, const std::vector<Scanpath>& paths) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write scanpaths: " + path);
    f << "chart_id,task_id,fix_index,x,y\n";
    for (const auto& s : paths) {
        int i = 0;
        for (const auto& p : s.fixations)
            f << s.chart_id << "," << s.task_id << "," << i++ << "," << p.x << "," << p.y << "\n";
    }
}

}  // namespace scanviz
