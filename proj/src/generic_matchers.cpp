#include "setmlvis/generic_matchers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

namespace setmlvis::generic {

namespace {

struct IndexedNames {
  std::vector<std::string> names;
  std::unordered_map<std::string, std::size_t> index;

  std::size_t intern(const std::string& s) {
    auto [it, inserted] = index.emplace(s, names.size());
    if (inserted) names.push_back(s);
    return it->second;
  }
};

template <class Cell, class Convert>
PredictionTable make_table(std::span<const LabeledPrediction> records,
                           std::vector<std::vector<Cell>> PredictionTable::*field,
                           Convert convert) {
  IndexedNames models, items;
  for (const auto& r : records) {
    models.intern(r.model_id);
    items.intern(r.item_id);
  }
  std::vector<std::vector<std::optional<Cell>>> cells(
      items.names.size(), std::vector<std::optional<Cell>>(models.names.size()));
  for (const auto& r : records) {
    auto& cell = cells[items.index.at(r.item_id)][models.index.at(r.model_id)];
    if (cell) throw MatchError("duplicate prediction for model '" + r.model_id + "', item '" +
                               r.item_id + "'");
    cell = convert(r);
  }

  PredictionTable t;
  t.models = models.names;
  t.items = items.names;
  auto& out = t.*field;
  out.resize(items.names.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t m = 0; m < cells[i].size(); ++m) {
      if (!cells[i][m]) {
        throw MatchError("criterion 2 violated: model '" + t.models[m] +
                         "' has no prediction for item '" + t.items[i] + "'");
      }
      out[i].push_back(*cells[i][m]);
    }
  }
  return t;
}

}  // namespace

PredictionTable make_label_table(std::span<const LabeledPrediction> records) {
  return make_table(records, &PredictionTable::labels,
                    [](const LabeledPrediction& r) { return r.label; });
}

PredictionTable make_value_table(std::span<const LabeledPrediction> records) {
  return make_table(records, &PredictionTable::values, [](const LabeledPrediction& r) {
    double v = 0;
    const char* end = r.label.data() + r.label.size();
    auto [ptr, ec] = std::from_chars(r.label.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v))
      throw MatchError("item '" + r.item_id + "': '" + r.label + "' is not a number");
    return v;
  });
}

std::vector<AgreementGroup> match_classification(const PredictionTable& table,
                                                 const std::map<std::string, std::string>* truth) {
  if (table.labels.size() != table.items.size())
    throw MatchError("criterion 2 violated: label matrix does not cover every item");
  std::vector<AgreementGroup> out;
  for (std::size_t i = 0; i < table.items.size(); ++i) {
    const auto& row = table.labels[i];
    if (row.size() != table.models.size())
      throw MatchError("criterion 2 violated: item '" + table.items[i] +
                       "' lacks predictions from some models");
    std::vector<std::pair<std::string, std::vector<ModelIndex>>> blocks;
    for (ModelIndex m = 0; m < row.size(); ++m) {
      auto it = std::find_if(blocks.begin(), blocks.end(),
                             [&](const auto& b) { return b.first == row[m]; });
      if (it == blocks.end()) blocks.push_back({row[m], {m}});
      else it->second.push_back(m);
    }
    std::optional<std::string> true_label;
    if (truth) {
      auto t = truth->find(table.items[i]);
      if (t != truth->end()) true_label = t->second;
    }
    for (auto& [label, models] : blocks) {
      AgreementGroup g{table.items[i], Signature(std::move(models)), label, std::nullopt};
      if (true_label)
        g.correctness = label == *true_label ? MatchStatus::TruePositive : MatchStatus::FalsePositive;
      out.push_back(std::move(g));
    }
  }
  return out;
}

std::vector<AgreementGroup> match_regression(const std::string& item_id,
                                             std::span<const double> values_by_model,
                                             double epsilon) {
  if (!(epsilon > 0)) throw MatchError("epsilon must be positive");
  std::vector<ModelIndex> order(values_by_model.size());
  std::iota(order.begin(), order.end(), ModelIndex{0});
  std::stable_sort(order.begin(), order.end(), [&](ModelIndex l, ModelIndex r) {
    return values_by_model[l] < values_by_model[r];
  });

  std::vector<AgreementGroup> out;
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    RegressionSummary s{values_by_model[order[start]], values_by_model[order[end - 1]], 0};
    std::vector<ModelIndex> models;
    for (std::size_t k = start; k < end; ++k) {
      s.mean += values_by_model[order[k]];
      models.push_back(order[k]);
    }
    s.mean /= static_cast<double>(end - start);
    out.push_back(AgreementGroup{item_id, Signature(std::move(models)), s, std::nullopt});
  };
  for (std::size_t k = 1; k <= order.size(); ++k) {
    if (k == order.size() ||
        values_by_model[order[k]] - values_by_model[order[k - 1]] > epsilon) {
      emit(k);
      start = k;
    }
  }
  return out;
}

std::vector<AgreementGroup> match_regression(const PredictionTable& table, double epsilon) {
  std::vector<AgreementGroup> out;
  for (std::size_t i = 0; i < table.items.size(); ++i) {
    if (i >= table.values.size() || table.values[i].size() != table.models.size())
      throw MatchError("criterion 2 violated: item '" + table.items[i] +
                       "' lacks predictions from some models");
    auto groups = match_regression(table.items[i], table.values[i], epsilon);
    out.insert(out.end(), std::make_move_iterator(groups.begin()),
               std::make_move_iterator(groups.end()));
  }
  return out;
}

std::vector<int> max_weight_assignment(const std::vector<std::vector<long long>>& weight) {
  const std::size_t rows = weight.size();
  const std::size_t cols = rows ? weight[0].size() : 0;
  const std::size_t n = std::max(rows, cols);
  if (n == 0) return {};

  // Shortest augmenting path with potentials on the square padded cost
  // matrix cost = -weight (padding cells cost 0). 1-based indexing.
  auto cost = [&](std::size_t i, std::size_t j) -> long long {
    if (i - 1 < rows && j - 1 < cols) return -weight[i - 1][j - 1];
    return 0;
  };
  const long long inf = std::numeric_limits<long long>::max() / 4;
  std::vector<long long> u(n + 1), v(n + 1);
  std::vector<std::size_t> p(n + 1), way(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<long long> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      long long delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const long long cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> result(rows, -1);
  for (std::size_t j = 1; j <= n; ++j)
    if (p[j] >= 1 && p[j] <= rows && j <= cols) result[p[j] - 1] = static_cast<int>(j - 1);
  return result;
}

ClusterAlignment align_clusterings(const ClusterLabels& a, const ClusterLabels& b) {
  if (a.size() != b.size() ||
      !std::equal(a.begin(), a.end(), b.begin(),
                  [](const auto& l, const auto& r) { return l.first == r.first; }))
    throw MatchError("clusterings must cover the same item set");

  std::vector<std::string> la, lb;
  {
    std::set<std::string> sa, sb;
    for (const auto& [item, label] : a) sa.insert(label);
    for (const auto& [item, label] : b) sb.insert(label);
    la.assign(sa.begin(), sa.end());
    lb.assign(sb.begin(), sb.end());
  }
  auto pos = [](const std::vector<std::string>& labels, const std::string& s) {
    return static_cast<std::size_t>(std::lower_bound(labels.begin(), labels.end(), s) -
                                    labels.begin());
  };

  std::vector<std::vector<long long>> contingency(la.size(), std::vector<long long>(lb.size(), 0));
  for (const auto& [item, label] : a) ++contingency[pos(la, label)][pos(lb, b.at(item))];

  const std::vector<int> assignment = max_weight_assignment(contingency);
  ClusterAlignment out;
  for (std::size_t i = 0; i < la.size(); ++i) {
    if (assignment[i] < 0) continue;
    const auto j = static_cast<std::size_t>(assignment[i]);
    if (contingency[i][j] > 0) out.mapping[la[i]] = lb[j];
  }

  for (const auto& [item, label_a] : a) {
    const std::string& label_b = b.at(item);
    auto m = out.mapping.find(label_a);
    if (m != out.mapping.end() && m->second == label_b) {
      out.groups.push_back(
          AgreementGroup{item, Signature({0, 1}), ClusterLabelPair{label_a, label_b}, std::nullopt});
    } else {
      out.groups.push_back(
          AgreementGroup{item, Signature({0}), ClusterLabelPair{label_a, ""}, std::nullopt});
      out.groups.push_back(
          AgreementGroup{item, Signature({1}), ClusterLabelPair{"", label_b}, std::nullopt});
    }
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               std::size_t columns,
                                               std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw MatchError(path.string() + ": cannot open");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != columns) {
      throw MatchError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(columns) + " columns");
    }
    if (header.empty()) header = std::move(fields);
    else rows.push_back(std::move(fields));
  }
  if (header.empty()) throw MatchError(path.string() + ": missing header");
  return rows;
}

}  // namespace

std::vector<LabeledPrediction> read_prediction_csv(const std::filesystem::path& path) {
  std::vector<std::string> header;
  auto rows = read_csv(path, 3, header);
  if (header[0] != "model_id" || header[1] != "item_id" ||
      (header[2] != "label" && header[2] != "value" && header[2] != "cluster"))
    throw MatchError(path.string() + ": header must be model_id,item_id,label|value|cluster");
  std::vector<LabeledPrediction> out;
  out.reserve(rows.size());
  for (auto& r : rows) out.push_back({std::move(r[0]), std::move(r[1]), std::move(r[2])});
  return out;
}

std::map<std::string, std::string> read_truth_csv(const std::filesystem::path& path) {
  std::vector<std::string> header;
  auto rows = read_csv(path, 2, header);
  if (header[0] != "item_id") throw MatchError(path.string() + ": header must be item_id,label");
  std::map<std::string, std::string> out;
  for (auto& r : rows)
    if (!out.emplace(r[0], r[1]).second)
      throw MatchError(path.string() + ": duplicate item '" + r[0] + "'");
  return out;
}

}  // namespace setmlvis::generic
