#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "sslrank/csv.hpp"
#include "sslrank/rng.hpp"

namespace sslrank {

/// Raised for malformed input files and data that violates the schema.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

enum class Task { Classification, Mlc, Hmlc, Str, Mtr };

inline const char* task_name(Task t) {
  switch (t) {
    case Task::Classification: return "classification";
    case Task::Mlc: return "mlc";
    case Task::Hmlc: return "hmlc";
    case Task::Str: return "str";
    case Task::Mtr: return "mtr";
  }
  return "?";
}

inline Task parse_task(const std::string& s) {
  if (s == "classification") return Task::Classification;
  if (s == "mlc") return Task::Mlc;
  if (s == "hmlc") return Task::Hmlc;
  if (s == "str") return Task::Str;
  if (s == "mtr") return Task::Mtr;
  throw DataError("unknown task: '" + s + "'");
}

inline bool is_classification_like(Task t) {
  return t == Task::Classification || t == Task::Mlc || t == Task::Hmlc;
}

enum class FeatureKind { Numeric, Nominal };

/// One data column. Features are fully observed after load-time imputation;
/// target columns use the owning block's labeled mask, with NaN / code -1
/// standing in for masked entries.
struct Column {
  std::string name;
  FeatureKind kind = FeatureKind::Numeric;
  std::vector<double> numeric;             // kind == Numeric
  std::vector<int> codes;                  // kind == Nominal, index into categories
  std::vector<std::string> categories;     // kind == Nominal, declared value set
  double min = 0.0, max = 0.0;             // numeric observed range

  std::size_t size() const {
    return kind == FeatureKind::Numeric ? numeric.size() : codes.size();
  }
  double range() const { return max - min; }
};

/// Label partial order for HMLC. parents[i] lists the parent label indices
/// of label i; labels without parents are roots.
struct Hierarchy {
  std::vector<std::string> labels;
  std::vector<std::vector<int>> parents;
  double alpha = 0.75;  // in (0,1)
  std::vector<double> weights;
};

/// Per-label weights: roots get 1, every other label gets
/// alpha * mean(parent weights), resolved in topological order.
/// The recurrence has a unique solution on a DAG, so any valid
/// topological order yields the same weights.
inline std::vector<double> hierarchy_weights(const Hierarchy& h) {
  const std::size_t n = h.labels.size();
  if (h.alpha <= 0.0 || h.alpha >= 1.0)
    throw std::invalid_argument("hierarchy alpha must lie in (0,1)");
  std::vector<std::vector<int>> children(n);
  std::vector<int> pending(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    pending[i] = static_cast<int>(h.parents[i].size());
    for (int p : h.parents[i]) children[p].push_back(static_cast<int>(i));
  }
  std::vector<double> w(n, 0.0);
  std::vector<int> queue;
  for (std::size_t i = 0; i < n; ++i)
    if (pending[i] == 0) {
      w[i] = 1.0;
      queue.push_back(static_cast<int>(i));
    }
  std::size_t head = 0, done = 0;
  while (head < queue.size()) {
    int u = queue[head++];
    ++done;
    if (!h.parents[u].empty()) {
      double sum = 0.0;
      for (int p : h.parents[u]) sum += w[p];
      w[u] = h.alpha * sum / static_cast<double>(h.parents[u].size());
    }
    for (int c : children[u])
      if (--pending[c] == 0) queue.push_back(c);
  }
  if (done != n) throw DataError("hierarchy contains a cycle");
  return w;
}

/// The target side of a dataset. Targets of one example are missing jointly:
/// labeled[e] == false means every target value of e is unknown.
struct TargetBlock {
  Task task = Task::Classification;
  std::vector<Column> columns;
  std::optional<Hierarchy> hierarchy;      // HMLC only
  std::vector<std::uint8_t> labeled;

  std::size_t count() const { return columns.size(); }

  /// alpha_j weights of Eq-style target averages: hierarchy weights for
  /// HMLC, all ones otherwise.
  std::vector<double> alphas() const {
    if (task == Task::Hmlc && hierarchy) return hierarchy->weights;
    return std::vector<double>(columns.size(), 1.0);
  }
};

struct Dataset {
  std::vector<Column> features;
  TargetBlock targets;
  std::size_t n_examples = 0;

  std::size_t size() const { return n_examples; }
  std::size_t feature_count() const { return features.size(); }

  bool is_labeled(std::size_t row) const { return targets.labeled[row] != 0; }
  std::size_t labeled_count() const {
    return static_cast<std::size_t>(
        std::count(targets.labeled.begin(), targets.labeled.end(), std::uint8_t{1}));
  }
  std::vector<int> labeled_indices() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < n_examples; ++i)
      if (is_labeled(i)) out.push_back(static_cast<int>(i));
    return out;
  }

  /// Recompute observed ranges and check structural invariants. Call after
  /// building or editing a dataset programmatically.
  void finalize() {
    if (n_examples == 0) throw DataError("empty dataset");
    if (targets.labeled.size() != n_examples)
      throw DataError("labeled mask length mismatch");
    for (auto& c : features) {
      if (c.size() != n_examples) throw DataError("feature column length mismatch");
      update_range(c, nullptr);
    }
    if (targets.columns.empty()) throw DataError("dataset has no targets");
    for (auto& c : targets.columns) {
      if (c.size() != n_examples) throw DataError("target column length mismatch");
      update_range(c, &targets.labeled);
    }
    if (targets.task == Task::Hmlc) {
      if (!targets.hierarchy) throw DataError("HMLC dataset requires a hierarchy");
      if (targets.hierarchy->weights.size() != targets.columns.size())
        targets.hierarchy->weights = hierarchy_weights(*targets.hierarchy);
    }
  }

 private:
  static void update_range(Column& c, const std::vector<std::uint8_t>* mask) {
    if (c.kind != FeatureKind::Numeric) return;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < c.numeric.size(); ++i) {
      if (mask && !(*mask)[i]) continue;
      lo = std::min(lo, c.numeric[i]);
      hi = std::max(hi, c.numeric[i]);
    }
    if (lo <= hi) {
      c.min = lo;
      c.max = hi;
    } else {
      c.min = c.max = 0.0;
    }
  }
};

namespace detail {

inline constexpr const char* kMissing = "?";

inline int category_code(const Column& c, const std::string& value) {
  for (std::size_t i = 0; i < c.categories.size(); ++i)
    if (c.categories[i] == value) return static_cast<int>(i);
  throw DataError("value '" + value + "' not in declared categories of column '" +
                  c.name + "'");
}

inline void check_hierarchy_row(const Hierarchy& h, const TargetBlock& t,
                                std::size_t row) {
  for (std::size_t j = 0; j < t.columns.size(); ++j) {
    if (t.columns[j].numeric[row] != 1.0) continue;
    for (int p : h.parents[j])
      if (t.columns[p].numeric[row] != 1.0)
        throw DataError("row " + std::to_string(row + 1) + ": label '" +
                        h.labels[j] + "' present without its predecessor '" +
                        h.labels[p] + "'");
  }
}

}  // namespace detail

/// Load a CSV data file against a JSON schema descriptor.
///
/// Schema keys: `task`, `features` (objects with name/kind and, for nominal,
/// categories), `targets` (names, or objects with categories for
/// classification), `hierarchy` (parent -> child edge list, HMLC) and
/// `alpha`. Missing values are written as "?". Missing feature values are
/// imputed here (numeric: mean of observed, nominal: mode of observed, ties
/// to the earliest declared category); missing targets stay unlabeled.
inline Dataset load_dataset(const std::string& data_path,
                            const std::string& schema_path) {
  nlohmann::json schema;
  {
    std::ifstream in(schema_path);
    if (!in) throw DataError("cannot open schema: " + schema_path);
    try {
      in >> schema;
    } catch (const nlohmann::json::exception& e) {
      throw DataError("schema parse error: " + std::string(e.what()));
    }
  }
  if (!schema.is_object()) throw DataError("schema must be a JSON object");

  Dataset d;
  d.targets.task = parse_task(schema.value("task", std::string()));

  for (const auto& f : schema.at("features")) {
    Column c;
    c.name = f.at("name").get<std::string>();
    const std::string kind = f.value("kind", "numeric");
    if (kind == "numeric") {
      c.kind = FeatureKind::Numeric;
    } else if (kind == "nominal") {
      c.kind = FeatureKind::Nominal;
      c.categories = f.at("categories").get<std::vector<std::string>>();
      if (c.categories.empty())
        throw DataError("nominal feature '" + c.name + "' has no categories");
    } else {
      throw DataError("unknown column kind '" + kind + "' for feature '" + c.name +
                      "'");
    }
    d.features.push_back(std::move(c));
  }

  const Task task = d.targets.task;
  for (const auto& t : schema.at("targets")) {
    Column c;
    if (t.is_string()) {
      c.name = t.get<std::string>();
    } else {
      c.name = t.at("name").get<std::string>();
      if (t.contains("categories"))
        c.categories = t.at("categories").get<std::vector<std::string>>();
    }
    if (task == Task::Classification) {
      if (c.categories.empty())
        throw DataError("classification target '" + c.name +
                        "' must declare categories");
      c.kind = FeatureKind::Nominal;
    } else {
      c.kind = FeatureKind::Numeric;  // MLC/HMLC labels live as 0/1 columns
    }
    d.targets.columns.push_back(std::move(c));
  }
  if (d.targets.columns.empty()) throw DataError("schema declares no targets");
  if (task == Task::Classification && d.targets.columns.size() != 1)
    throw DataError("classification requires exactly one target");
  if (task == Task::Str && d.targets.columns.size() != 1)
    throw DataError("STR requires exactly one target");

  if (task == Task::Hmlc) {
    Hierarchy h;
    for (const auto& c : d.targets.columns) h.labels.push_back(c.name);
    h.parents.assign(h.labels.size(), {});
    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < h.labels.size(); ++i)
      index[h.labels[i]] = static_cast<int>(i);
    for (const auto& edge : schema.value("hierarchy", nlohmann::json::array())) {
      const auto parent = edge.at(0).get<std::string>();
      const auto child = edge.at(1).get<std::string>();
      auto pi = index.find(parent), ci = index.find(child);
      if (pi == index.end() || ci == index.end())
        throw DataError("hierarchy edge references unknown label: " + parent +
                        " -> " + child);
      h.parents[ci->second].push_back(pi->second);
    }
    h.alpha = schema.value("alpha", 0.75);
    h.weights = hierarchy_weights(h);
    d.targets.hierarchy = std::move(h);
  }

  // --- data file ---
  std::vector<std::vector<std::string>> rows;
  try {
    rows = csv::parse_file(data_path);
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
  if (rows.empty()) throw DataError("empty dataset: " + data_path);
  const auto& header = rows.front();
  std::unordered_map<std::string, std::size_t> col_of;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!col_of.emplace(header[i], i).second)
      throw DataError("duplicate CSV column '" + header[i] + "'");
  }
  auto locate = [&](const std::string& name) {
    auto it = col_of.find(name);
    if (it == col_of.end()) throw DataError("CSV is missing column '" + name + "'");
    return it->second;
  };
  if (col_of.size() != d.features.size() + d.targets.columns.size())
    throw DataError("CSV has columns not declared in the schema");

  const std::size_t m = rows.size() - 1;
  if (m == 0) throw DataError("empty dataset: " + data_path);
  d.n_examples = m;

  auto cell = [&](std::size_t row, std::size_t col) -> const std::string& {
    const auto& r = rows[row + 1];
    if (col >= r.size())
      throw DataError("row " + std::to_string(row + 2) + " has too few fields");
    return r[col];
  };

  for (auto& c : d.features) {
    const std::size_t src = locate(c.name);
    if (c.kind == FeatureKind::Numeric) {
      c.numeric.resize(m);
      std::vector<std::size_t> missing;
      double sum = 0.0;
      std::size_t seen = 0;
      for (std::size_t r = 0; r < m; ++r) {
        const auto& v = cell(r, src);
        if (v == detail::kMissing) {
          missing.push_back(r);
        } else {
          c.numeric[r] = csv::parse_double(v);
          sum += c.numeric[r];
          ++seen;
        }
      }
      const double fill = seen ? sum / static_cast<double>(seen) : 0.0;
      for (auto r : missing) c.numeric[r] = fill;
    } else {
      c.codes.resize(m);
      std::vector<std::size_t> missing;
      std::vector<std::size_t> counts(c.categories.size(), 0);
      for (std::size_t r = 0; r < m; ++r) {
        const auto& v = cell(r, src);
        if (v == detail::kMissing) {
          missing.push_back(r);
        } else {
          c.codes[r] = detail::category_code(c, v);
          ++counts[c.codes[r]];
        }
      }
      const int mode = static_cast<int>(
          std::max_element(counts.begin(), counts.end()) - counts.begin());
      for (auto r : missing) c.codes[r] = mode;
    }
  }

  d.targets.labeled.assign(m, 1);
  std::vector<std::size_t> target_src;
  for (auto& c : d.targets.columns) target_src.push_back(locate(c.name));
  for (std::size_t r = 0; r < m; ++r) {
    std::size_t miss = 0;
    for (auto src : target_src)
      if (cell(r, src) == detail::kMissing) ++miss;
    if (miss == target_src.size()) {
      d.targets.labeled[r] = 0;
    } else if (miss != 0) {
      throw DataError("row " + std::to_string(r + 2) +
                      ": targets must be missing jointly, not partially");
    }
  }
  for (std::size_t j = 0; j < d.targets.columns.size(); ++j) {
    auto& c = d.targets.columns[j];
    if (c.kind == FeatureKind::Nominal) {
      c.codes.assign(m, -1);
      for (std::size_t r = 0; r < m; ++r)
        if (d.targets.labeled[r]) c.codes[r] = detail::category_code(c, cell(r, target_src[j]));
    } else {
      c.numeric.assign(m, std::numeric_limits<double>::quiet_NaN());
      for (std::size_t r = 0; r < m; ++r) {
        if (!d.targets.labeled[r]) continue;
        c.numeric[r] = csv::parse_double(cell(r, target_src[j]));
        if ((task == Task::Mlc || task == Task::Hmlc) && c.numeric[r] != 0.0 &&
            c.numeric[r] != 1.0)
          throw DataError("row " + std::to_string(r + 2) + ": label column '" +
                          c.name + "' must be 0 or 1");
      }
    }
  }
  if (task == Task::Hmlc) {
    for (std::size_t r = 0; r < m; ++r)
      if (d.targets.labeled[r])
        detail::check_hierarchy_row(*d.targets.hierarchy, d.targets, r);
  }

  d.finalize();
  return d;
}

/// Write the data CSV back out; load_dataset(save_dataset(d), schema) == d.
inline void save_dataset(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  std::vector<std::string> row;
  for (const auto& c : d.features) row.push_back(c.name);
  for (const auto& c : d.targets.columns) row.push_back(c.name);
  csv::write_row(out, row);
  for (std::size_t r = 0; r < d.n_examples; ++r) {
    row.clear();
    for (const auto& c : d.features) {
      if (c.kind == FeatureKind::Numeric)
        row.push_back(csv::format_double(c.numeric[r]));
      else
        row.push_back(c.categories[c.codes[r]]);
    }
    for (const auto& c : d.targets.columns) {
      if (!d.targets.labeled[r]) {
        row.push_back(detail::kMissing);
      } else if (c.kind == FeatureKind::Nominal) {
        row.push_back(c.categories[c.codes[r]]);
      } else {
        row.push_back(csv::format_double(c.numeric[r]));
      }
    }
    csv::write_row(out, row);
  }
}

/// Keep exactly `l` labeled examples, chosen by a seeded permutation.
/// For a fixed seed the kept sets are nested across values of `l`.
inline Dataset mask_labels(const Dataset& d, std::size_t l, std::uint64_t seed) {
  if (l > d.size()) throw std::invalid_argument("mask_labels: L exceeds dataset size");
  if (d.labeled_count() != d.size())
    throw std::invalid_argument("mask_labels: source dataset must be fully labeled");
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  Dataset out = d;
  std::vector<std::uint8_t> keep(d.size(), 0);
  for (std::size_t i = 0; i < l; ++i) keep[order[i]] = 1;
  for (std::size_t r = 0; r < d.size(); ++r) {
    if (keep[r]) continue;
    out.targets.labeled[r] = 0;
    for (auto& c : out.targets.columns) {
      if (c.kind == FeatureKind::Nominal)
        c.codes[r] = -1;
      else
        c.numeric[r] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  out.finalize();
  return out;
}

/// New dataset holding the given rows (in the given order). Row repeats are
/// allowed; observed ranges are recomputed over the subset.
inline Dataset subset_rows(const Dataset& d, const std::vector<int>& rows) {
  Dataset out;
  out.n_examples = rows.size();
  out.targets.task = d.targets.task;
  out.targets.hierarchy = d.targets.hierarchy;
  auto take = [&](const Column& c) {
    Column n;
    n.name = c.name;
    n.kind = c.kind;
    n.categories = c.categories;
    if (c.kind == FeatureKind::Numeric) {
      n.numeric.reserve(rows.size());
      for (int r : rows) n.numeric.push_back(c.numeric[r]);
    } else {
      n.codes.reserve(rows.size());
      for (int r : rows) n.codes.push_back(c.codes[r]);
    }
    return n;
  };
  for (const auto& c : d.features) out.features.push_back(take(c));
  for (const auto& c : d.targets.columns) out.targets.columns.push_back(take(c));
  out.targets.labeled.reserve(rows.size());
  for (int r : rows) out.targets.labeled.push_back(d.targets.labeled[r]);
  out.finalize();
  return out;
}

/// Copy of d with labels kept only on the listed rows; every listed row must
/// currently be labeled.
inline Dataset mask_to_rows(const Dataset& d, const std::vector<int>& labeled_rows) {
  Dataset out = d;
  std::vector<std::uint8_t> keep(d.size(), 0);
  for (int r : labeled_rows) {
    if (!d.is_labeled(r))
      throw std::invalid_argument("mask_to_rows: row is not labeled in the source");
    keep[r] = 1;
  }
  for (std::size_t r = 0; r < d.size(); ++r) {
    if (keep[r]) continue;
    out.targets.labeled[r] = 0;
    for (auto& c : out.targets.columns) {
      if (c.kind == FeatureKind::Nominal)
        c.codes[r] = -1;
      else
        c.numeric[r] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  out.finalize();
  return out;
}

inline Dataset remove_unlabeled(const Dataset& d) {
  return subset_rows(d, d.labeled_indices());
}

/// One-hot encoded feature matrix (row major). Numeric features are copied,
/// each nominal feature expands to one indicator column per declared
/// category; blocks[i] maps original feature i to its (start, width) slice.
struct EncodedMatrix {
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  std::vector<std::pair<int, int>> blocks;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
};

inline EncodedMatrix one_hot_encode(const Dataset& d) {
  EncodedMatrix m;
  m.rows = d.size();
  int width = 0;
  for (const auto& c : d.features) {
    const int w = c.kind == FeatureKind::Numeric
                      ? 1
                      : static_cast<int>(c.categories.size());
    m.blocks.emplace_back(width, w);
    width += w;
  }
  m.cols = static_cast<std::size_t>(width);
  m.values.assign(m.rows * m.cols, 0.0);
  for (std::size_t f = 0; f < d.features.size(); ++f) {
    const auto& c = d.features[f];
    const int start = m.blocks[f].first;
    for (std::size_t r = 0; r < m.rows; ++r) {
      if (c.kind == FeatureKind::Numeric)
        m.at(r, start) = c.numeric[r];
      else
        m.at(r, start + c.codes[r]) = 1.0;
    }
  }
  return m;
}

}  // namespace sslrank
