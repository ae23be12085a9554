#include "scanviz/memory.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "scanviz/error.hpp"

namespace scanviz {

Memory::Memory(int capacity, double rho) : capacity_(capacity), rho_(rho) {
    if (capacity < 1) throw ParamError("memory capacity must be >= 1");
    if (rho <= 0.0) throw ParamError("forgetting weight rho must be > 0");
}

std::vector<double> Memory::forgetting_distribution(int t) const {
    if (items_.empty()) throw EmptyInputError("forgetting_distribution on empty memory");
    int max_ti = 0;
    for (const auto& it : items_) max_ti = std::max(max_ti, it.t_i);
    if (t < max_ti) throw ParamError("current fixation index precedes an item's insertion");

    // Shift by the max exponent for numerical stability; softmax is
    // translation invariant.
    double max_e = -1e300;
    std::vector<double> e(items_.size());
    for (std::size_t i = 0; i < items_.size(); ++i) {
        e[i] = rho_ * (t - items_[i].t_i);
        max_e = std::max(max_e, e[i]);
    }
    double sum = 0.0;
    for (auto& v : e) {
        v = std::exp(v - max_e);
        sum += v;
    }
    for (auto& v : e) v /= sum;
    return e;
}

void Memory::insert(const MemoryItem& item, int t, Rng& rng) {
    for (auto& it : items_) {
        if (it.text == item.text && it.position == item.position) {
            ++it.visits;
            it.t_i = t;
            return;
        }
    }
    MemoryItem fresh = item;
    fresh.t_i = t;
    fresh.visits = std::max(1, item.visits);
    if (size() < capacity_) {
        items_.push_back(std::move(fresh));
        return;
    }
    auto p = forgetting_distribution(t);
    double u = rng.uniform01();
    double acc = 0.0;
    std::size_t victim = items_.size() - 1;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (u < acc) {
            victim = i;
            break;
        }
    }
    items_[victim] = std::move(fresh);
}

const MemoryItem* Memory::find_text(const std::string& text) const {
    for (const auto& it : items_)
        if (iequals(it.text, text)) return &it;
    return nullptr;
}

std::string Memory::summarize(const Task& task, const std::string& last_op_result) const {
    std::string out = "task: " + task.prompt + "\n";
    if (items_.empty()) {
        out += "memory: empty\n";
    } else {
        std::vector<const MemoryItem*> ordered;
        for (const auto& it : items_) ordered.push_back(&it);
        std::stable_sort(ordered.begin(), ordered.end(),
                         [](const MemoryItem* a, const MemoryItem* b) { return a->t_i < b->t_i; });
        for (const auto* it : ordered) {
            out += it->text + " at cell (" + std::to_string(it->position.col) + "," +
                   std::to_string(it->position.row) + "), seen x" + std::to_string(it->visits) +
                   "\n";
        }
    }
    out += "last result: " + last_op_result + "\n";
    return out;
}

std::string Memory::trace_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& it : items_) {
        arr.push_back({{"text", it.text},
                       {"position", {it.position.col, it.position.row}},
                       {"t_i", it.t_i},
                       {"visits", it.visits}});
    }
    return nlohmann::json{{"items", arr}}.dump();
}

}  // namespace scanviz
