#pragma once

// Report emission: CSV tables plus the SVG charts they back. Everything here
// is a pure function of already-computed records, so reruns are byte-stable.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "chainbench/analysis.hpp"
#include "chainbench/scoring.hpp"
#include "chainbench/svg.hpp"

namespace chainbench {

struct MissingStage : std::runtime_error {
    explicit MissingStage(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Score summary (actual vs theoretical accuracy)

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
    std::string out = "dataset,model,n,k,acc_all,acc_last,acc_expected,gap\n";
    for (const SummaryRow& r : rows) {
        out += csv_escape(r.dataset) + "," + csv_escape(r.model) + "," +
               std::to_string(r.n) + "," + std::to_string(r.k) + "," +
               fmt_double(r.acc_all, 6) + "," + fmt_double(r.acc_last, 6) + ",";
        out += r.acc_expected ? fmt_double(*r.acc_expected, 6) : "";
        out += ",";
        out += r.gap ? fmt_double(*r.gap, 6) : "";
        out += "\n";
    }
    return out;
}

inline std::vector<SummaryRow> summary_rows_from_csv(const std::string& text) {
    std::vector<SummaryRow> rows;
    auto lines = split(text, '\n');
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        auto cells = split(lines[i], ',');
        if (cells.size() < 8) continue;
        SummaryRow r;
        r.dataset = cells[0];
        r.model = cells[1];
        r.n = static_cast<int>(*parse_int(cells[2]));
        r.k = static_cast<int>(*parse_int(cells[3]));
        r.acc_all = std::stod(cells[4]);
        r.acc_last = std::stod(cells[5]);
        if (!cells[6].empty()) r.acc_expected = std::stod(cells[6]);
        if (!cells[7].empty()) r.gap = std::stod(cells[7]);
        rows.push_back(std::move(r));
    }
    return rows;
}

// One actual line and one dashed theoretical line per (dataset, model).
inline std::string accuracy_chart_svg(const std::vector<SummaryRow>& rows) {
    std::map<std::pair<std::string, std::string>, std::vector<const SummaryRow*>> groups;
    for (const SummaryRow& r : rows) groups[{r.dataset, r.model}].push_back(&r);
    svg::LineChart chart;
    chart.title = "Actual vs theoretical accuracy";
    chart.x_label = "composed sub-problems (n)";
    chart.y_label = "accuracy";
    for (auto& [key, group] : groups) {
        std::sort(group.begin(), group.end(),
                  [](const SummaryRow* a, const SummaryRow* b) { return a->n < b->n; });
        svg::Series actual{key.first + "/" + key.second + " actual", {}, false};
        svg::Series theoretical{key.first + "/" + key.second + " theoretical", {}, true};
        for (const SummaryRow* r : group) {
            actual.points.emplace_back(r->n, r->acc_all);
            if (r->acc_expected) theoretical.points.emplace_back(r->n, *r->acc_expected);
        }
        chart.series.push_back(std::move(actual));
        if (!theoretical.points.empty()) chart.series.push_back(std::move(theoretical));
    }
    return svg::render(chart);
}

// ---------------------------------------------------------------------------
// Analysis aggregation

struct AnalysisSummaryRow {
    std::string dataset;
    std::string model;
    int n = 0;
    std::size_t records = 0;
    std::map<std::string, std::size_t> category_counts;
    std::optional<double> mean_error_position;
    std::vector<double> mean_budget_fractions;  // indexed by sub-problem position
    double mean_reflections = 0.0;
    double long_reflection_rate = 0.0;
};

inline std::vector<AnalysisSummaryRow> aggregate_analysis(
    const std::vector<AnalysisRecord>& records,
    const std::map<std::string, ComposedMeta>& meta, const std::string& model) {
    struct Acc {
        std::size_t count = 0;
        std::map<std::string, std::size_t> categories;
        double position_sum = 0.0;
        std::size_t position_count = 0;
        std::vector<double> fraction_sums;
        std::size_t reflection_sum = 0;
        std::size_t long_count = 0;
    };
    std::map<std::pair<std::string, int>, Acc> groups;
    for (const AnalysisRecord& r : records) {
        auto mit = meta.find(r.composed_id);
        if (mit == meta.end())
            throw std::runtime_error("no composed metadata for " + r.composed_id);
        Acc& g = groups[{mit->second.dataset, mit->second.n}];
        ++g.count;
        ++g.categories[error_category_name(r.error.category)];
        if (r.error.error_position_tokens) {
            g.position_sum += static_cast<double>(*r.error.error_position_tokens);
            ++g.position_count;
        }
        if (g.fraction_sums.size() < r.budget.fractions.size())
            g.fraction_sums.resize(r.budget.fractions.size(), 0.0);
        for (std::size_t i = 0; i < r.budget.fractions.size(); ++i)
            g.fraction_sums[i] += r.budget.fractions[i];
        g.reflection_sum += r.reflection.reflection_count;
        if (r.reflection.long_reflection) ++g.long_count;
    }
    std::vector<AnalysisSummaryRow> rows;
    for (const auto& [key, g] : groups) {
        AnalysisSummaryRow row;
        row.dataset = key.first;
        row.model = model;
        row.n = key.second;
        row.records = g.count;
        row.category_counts = g.categories;
        if (g.position_count > 0)
            row.mean_error_position = g.position_sum / static_cast<double>(g.position_count);
        row.mean_budget_fractions.resize(g.fraction_sums.size());
        for (std::size_t i = 0; i < g.fraction_sums.size(); ++i)
            row.mean_budget_fractions[i] =
                g.fraction_sums[i] / static_cast<double>(g.count);
        row.mean_reflections =
            static_cast<double>(g.reflection_sum) / static_cast<double>(g.count);
        row.long_reflection_rate =
            static_cast<double>(g.long_count) / static_cast<double>(g.count);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline const std::vector<std::string>& error_category_order() {
    static const std::vector<std::string> order = {
        "problem_reasoning", "dependency_reasoning", "early_stop",
        "output_truncation", "none"};
    return order;
}

inline std::string error_types_csv(const std::vector<AnalysisSummaryRow>& rows) {
    std::string out = "dataset,model,n,category,count,fraction\n";
    for (const AnalysisSummaryRow& r : rows) {
        for (const std::string& cat : error_category_order()) {
            auto it = r.category_counts.find(cat);
            std::size_t count = it == r.category_counts.end() ? 0 : it->second;
            out += csv_escape(r.dataset) + "," + csv_escape(r.model) + "," +
                   std::to_string(r.n) + "," + cat + "," + std::to_string(count) + "," +
                   fmt_double(static_cast<double>(count) /
                                  static_cast<double>(r.records ? r.records : 1),
                              6) +
                   "\n";
        }
    }
    return out;
}

inline std::string error_types_svg(const std::vector<AnalysisSummaryRow>& rows) {
    svg::StackedBars chart;
    chart.title = "Error type distribution";
    chart.x_label = "composed sub-problems (n)";
    chart.y_label = "share of transcripts";
    chart.layer_names = error_category_order();
    chart.values.assign(chart.layer_names.size(), {});
    std::vector<const AnalysisSummaryRow*> sorted;
    for (const auto& r : rows) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(),
              [](const AnalysisSummaryRow* a, const AnalysisSummaryRow* b) {
                  return std::tie(a->dataset, a->n) < std::tie(b->dataset, b->n);
              });
    for (const AnalysisSummaryRow* r : sorted) {
        chart.x_labels.push_back(r->dataset.empty()
                                     ? "n=" + std::to_string(r->n)
                                     : r->dataset + " n=" + std::to_string(r->n));
        for (std::size_t layer = 0; layer < chart.layer_names.size(); ++layer) {
            auto it = r->category_counts.find(chart.layer_names[layer]);
            double count = it == r->category_counts.end()
                               ? 0.0
                               : static_cast<double>(it->second);
            chart.values[layer].push_back(
                count / static_cast<double>(r->records ? r->records : 1));
        }
    }
    return svg::render(chart);
}

inline std::string budget_csv(const std::vector<AnalysisSummaryRow>& rows,
                              const std::string& tokenizer_mode) {
    std::string out = "dataset,model,n,position,mean_fraction,tokenizer_mode\n";
    for (const AnalysisSummaryRow& r : rows)
        for (std::size_t i = 0; i < r.mean_budget_fractions.size(); ++i)
            out += csv_escape(r.dataset) + "," + csv_escape(r.model) + "," +
                   std::to_string(r.n) + "," + std::to_string(i + 1) + "," +
                   fmt_double(r.mean_budget_fractions[i], 6) + "," + tokenizer_mode +
                   "\n";
    return out;
}

inline std::string budget_svg(const std::vector<AnalysisSummaryRow>& rows) {
    svg::StackedBars chart;
    chart.title = "Thinking budget allocation";
    chart.x_label = "composed sub-problems (n)";
    chart.y_label = "share of response tokens";
    std::size_t max_positions = 0;
    for (const auto& r : rows) max_positions = std::max(max_positions,
                                                        r.mean_budget_fractions.size());
    for (std::size_t i = 0; i < max_positions; ++i)
        chart.layer_names.push_back("position " + std::to_string(i + 1));
    chart.values.assign(max_positions, {});
    std::vector<const AnalysisSummaryRow*> sorted;
    for (const auto& r : rows) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(),
              [](const AnalysisSummaryRow* a, const AnalysisSummaryRow* b) {
                  return std::tie(a->dataset, a->n) < std::tie(b->dataset, b->n);
              });
    for (const AnalysisSummaryRow* r : sorted) {
        chart.x_labels.push_back(r->dataset.empty()
                                     ? "n=" + std::to_string(r->n)
                                     : r->dataset + " n=" + std::to_string(r->n));
        for (std::size_t layer = 0; layer < max_positions; ++layer)
            chart.values[layer].push_back(layer < r->mean_budget_fractions.size()
                                              ? r->mean_budget_fractions[layer]
                                              : 0.0);
    }
    return svg::render(chart);
}

inline std::string reflection_csv(const std::vector<AnalysisSummaryRow>& rows,
                                  const std::string& lexicon_hash) {
    std::string out =
        "dataset,model,n,mean_reflections,long_reflection_rate,mean_error_position,"
        "lexicon_hash\n";
    for (const AnalysisSummaryRow& r : rows) {
        out += csv_escape(r.dataset) + "," + csv_escape(r.model) + "," +
               std::to_string(r.n) + "," + fmt_double(r.mean_reflections, 6) + "," +
               fmt_double(r.long_reflection_rate, 6) + ",";
        out += r.mean_error_position ? fmt_double(*r.mean_error_position, 2) : "";
        out += "," + lexicon_hash + "\n";
    }
    return out;
}

inline std::string reflection_svg(const std::vector<AnalysisSummaryRow>& rows) {
    std::map<std::string, std::vector<const AnalysisSummaryRow*>> by_dataset;
    for (const auto& r : rows) by_dataset[r.dataset].push_back(&r);
    svg::LineChart chart;
    chart.title = "Reflection frequency and range";
    chart.x_label = "composed sub-problems (n)";
    chart.y_label = "per-transcript mean";
    double y_max = 1.0;
    for (auto& [dataset, group] : by_dataset) {
        std::sort(group.begin(), group.end(),
                  [](const AnalysisSummaryRow* a, const AnalysisSummaryRow* b) {
                      return a->n < b->n;
                  });
        svg::Series freq{dataset + " reflections", {}, false};
        svg::Series longr{dataset + " long-range rate", {}, true};
        for (const AnalysisSummaryRow* r : group) {
            freq.points.emplace_back(r->n, r->mean_reflections);
            longr.points.emplace_back(r->n, r->long_reflection_rate);
            y_max = std::max(y_max, r->mean_reflections);
        }
        chart.series.push_back(std::move(freq));
        chart.series.push_back(std::move(longr));
    }
    chart.y_max = y_max;
    return svg::render(chart);
}

}  // namespace chainbench
