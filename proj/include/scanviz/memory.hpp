#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scanviz/geometry.hpp"
#include "scanviz/rng.hpp"
#include "scanviz/task.hpp"

namespace scanviz {

struct MemoryItem {
    std::string text;
    GridCoord position;
    int t_i = 0;     // fixation index at (last) insertion
    int visits = 1;  // re-confirmation count
};

// Capacity-limited working memory with recency-based softmax forgetting.
// Single-owner per simulation episode.
class Memory {
public:
    explicit Memory(int capacity = 7, double rho = 0.1);

    int capacity() const { return capacity_; }
    double rho() const { return rho_; }
    const std::vector<MemoryItem>& items() const { return items_; }
    bool empty() const { return items_.empty(); }
    int size() const { return static_cast<int>(items_.size()); }

    // p_i = exp(rho*(t - t_i)) / sum_j exp(rho*(t - t_j)). Throws
    // EmptyInputError on empty memory; ParamError if t < max t_i.
    std::vector<double> forgetting_distribution(int t) const;

    // Duplicate (text, position) refreshes t_i and bumps visits; otherwise
    // appends, evicting a sampled victim when at capacity.
    void insert(const MemoryItem& item, int t, Rng& rng);

    // First item matching the text case-insensitively, if any.
    const MemoryItem* find_text(const std::string& text) const;

    // Deterministic observation text: prompt, items in t_i order, last
    // subtask outcome.
    std::string summarize(const Task& task, const std::string& last_op_result) const;

    std::string trace_json() const;  // one JSON object, for episode trace dumps

private:
    int capacity_;
    double rho_;
    std::vector<MemoryItem> items_;
};

}  // namespace scanviz
