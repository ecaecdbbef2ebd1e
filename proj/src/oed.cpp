#include "peval/oed.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "peval/error.hpp"

namespace peval {

const char* factor_name(int factor) noexcept {
  static const char* names[kFactors] = {"L", "H", "N", "E", "F"};
  return factor >= 0 && factor < kFactors ? names[factor] : "?";
}

int gf4_add(int x, int y) noexcept { return x ^ y; }

int gf4_mul(int x, int y) noexcept {
  if (x == 0 || y == 0) return 0;
  // log table over the generator a: 1 = a^0, a = a^1, a^2 = a^2 (encoded 3).
  static const int log[4] = {-1, 0, 1, 2};
  static const int exp[3] = {1, 2, 3};
  return exp[(log[x] + log[y]) % 3];
}

LevelMatrix l16_4_5() {
  LevelMatrix array(kPlanRows, kFactors);
  for (int i = 0; i < kLevels; ++i) {
    for (int j = 0; j < kLevels; ++j) {
      const int r = kLevels * i + j;
      array(r, 0) = i;
      array(r, 1) = j;
      array(r, 2) = gf4_add(i, j);
      array(r, 3) = gf4_add(i, gf4_mul(2, j));
      array(r, 4) = gf4_add(i, gf4_mul(3, j));
    }
  }
  return array;
}

OrthogonalityReport verify_orthogonality(const LevelMatrix& array) {
  if (array.rows() != kPlanRows || array.cols() != kFactors)
    throw Error(Errc::MalformedArray, "expected a 16 x 5 array, got " + std::to_string(array.rows()) + " x " +
                                          std::to_string(array.cols()));
  if (array.size() > 0 && (array.minCoeff() < 0 || array.maxCoeff() >= kLevels))
    throw Error(Errc::MalformedArray, "level index outside 0..3");

  OrthogonalityReport report;
  for (int c = 0; c < kFactors; ++c) {
    std::array<int, kLevels> hist{};
    for (int r = 0; r < kPlanRows; ++r) ++hist[static_cast<std::size_t>(array(r, c))];
    for (int level = 0; level < kLevels; ++level) {
      if (hist[static_cast<std::size_t>(level)] != kPlanRows / kLevels) {
        report.pass = false;
        report.column = c;
        report.violation = "column " + std::to_string(c) + " has level " + std::to_string(level) + " " +
                           std::to_string(hist[static_cast<std::size_t>(level)]) + " times";
        return report;
      }
    }
  }
  for (int a = 0; a < kFactors; ++a) {
    for (int b = a + 1; b < kFactors; ++b) {
      std::array<int, kLevels * kLevels> seen{};
      for (int r = 0; r < kPlanRows; ++r) ++seen[static_cast<std::size_t>(array(r, a) * kLevels + array(r, b))];
      for (int p = 0; p < kLevels * kLevels; ++p) {
        if (seen[static_cast<std::size_t>(p)] != 1) {
          report.pass = false;
          report.columns = std::make_pair(a, b);
          report.violation = "columns " + std::to_string(a) + "," + std::to_string(b) + " cover level pair (" +
                             std::to_string(p / kLevels) + "," + std::to_string(p % kLevels) + ") " +
                             std::to_string(seen[static_cast<std::size_t>(p)]) + " times";
          return report;
        }
      }
    }
  }
  return report;
}

namespace {

template <typename T>
bool distinct(const std::array<T, kLevels>& levels) {
  std::set<T> s(levels.begin(), levels.end());
  return s.size() == levels.size();
}

template <typename T>
int index_of(const std::array<T, kLevels>& levels, const T& value) {
  auto it = std::find(levels.begin(), levels.end(), value);
  if (it == levels.end()) throw Error(Errc::ConfigError, "value is not a level of its factor");
  return static_cast<int>(it - levels.begin());
}

}  // namespace

void FactorTable::validate() const {
  if (!distinct(window_lengths) || !distinct(hops) || !distinct(hidden_nodes) || !distinct(epochs) ||
      !distinct(activations))
    throw Error(Errc::ConfigError, "factor levels must be distinct within each factor");
  for (auto l : window_lengths)
    if (l < 1) throw Error(Errc::ConfigError, "window length levels must be at least 1");
  for (auto n : hidden_nodes)
    if (n < 1) throw Error(Errc::ConfigError, "hidden node levels must be at least 1");
}

FactorTable parse_factor_table(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigError, std::string("factor table is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(Errc::ConfigError, "factor table must be a JSON object");
  FactorTable table;
  auto integers = [&](const char* key, std::array<std::size_t, kLevels>& dst) {
    if (!doc.contains(key)) return;
    const auto& v = doc[key];
    if (!v.is_array() || v.size() != kLevels)
      throw Error(Errc::ConfigError, std::string("factor ") + key + " must list exactly 4 levels", std::nullopt, key);
    for (std::size_t i = 0; i < kLevels; ++i) {
      if (!v[i].is_number_integer() || v[i].get<long long>() < 0)
        throw Error(Errc::ConfigError, std::string("factor ") + key + " levels must be non-negative integers",
                    std::nullopt, key);
      dst[i] = v[i].get<std::size_t>();
    }
  };
  integers("L", table.window_lengths);
  integers("H", table.hops);
  integers("N", table.hidden_nodes);
  integers("E", table.epochs);
  if (doc.contains("F")) {
    const auto& v = doc["F"];
    if (!v.is_array() || v.size() != kLevels)
      throw Error(Errc::ConfigError, "factor F must list exactly 4 levels", std::nullopt, "F");
    for (std::size_t i = 0; i < kLevels; ++i) {
      auto a = v[i].is_string() ? parse_activation(v[i].get<std::string>()) : std::nullopt;
      if (!a) throw Error(Errc::ConfigError, "factor F has an unknown activation", std::nullopt, "F");
      table.activations[i] = *a;
    }
  }
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    static const std::set<std::string> known{"L", "H", "N", "E", "F"};
    if (!known.count(it.key())) throw Error(Errc::ConfigError, "unknown factor key '" + it.key() + "'");
  }
  table.validate();
  return table;
}

FactorTable load_factor_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigError, "cannot open factor table " + path, std::nullopt, path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_factor_table(buf.str());
}

FactorAssignment assignment_from_levels(const FactorTable& table, const std::array<int, kFactors>& levels,
                                        std::size_t plan_row) {
  for (int l : levels)
    if (l < 0 || l >= kLevels) throw Error(Errc::MalformedArray, "level index outside 0..3");
  auto at = [&](int f) { return static_cast<std::size_t>(levels[static_cast<std::size_t>(f)]); };
  FactorAssignment a;
  a.window_length = table.window_lengths[at(0)];
  a.hop = table.hops[at(1)];
  a.hidden_nodes = table.hidden_nodes[at(2)];
  a.epochs = table.epochs[at(3)];
  a.activation = table.activations[at(4)];
  a.plan_row = plan_row;
  a.levels = levels;
  return a;
}

std::array<int, kFactors> levels_of(const FactorTable& table, const FactorAssignment& a) {
  return {index_of(table.window_lengths, a.window_length), index_of(table.hops, a.hop),
          index_of(table.hidden_nodes, a.hidden_nodes), index_of(table.epochs, a.epochs),
          index_of(table.activations, a.activation)};
}

std::vector<FactorAssignment> generate_plan(const FactorTable& table) {
  table.validate();
  const LevelMatrix array = l16_4_5();
  std::vector<FactorAssignment> plan;
  plan.reserve(kPlanRows);
  for (int r = 0; r < kPlanRows; ++r) {
    std::array<int, kFactors> levels{};
    for (int c = 0; c < kFactors; ++c) levels[static_cast<std::size_t>(c)] = array(r, c);
    plan.push_back(assignment_from_levels(table, levels, static_cast<std::size_t>(r)));
  }
  return plan;
}

void write_plan_csv(std::ostream& out, const std::vector<FactorAssignment>& plan) {
  out << "plan_row,L,H,N,E,F\n";
  for (const auto& a : plan)
    out << a.plan_row << ',' << a.window_length << ',' << a.hop << ',' << a.hidden_nodes << ',' << a.epochs << ','
        << activation_tag(a.activation) << '\n';
}

RangeAnalysis range_analysis(const FactorTable& table,
                             const std::vector<std::pair<FactorAssignment, double>>& results) {
  std::array<bool, kPlanRows> seen{};
  if (results.size() != static_cast<std::size_t>(kPlanRows))
    throw Error(Errc::IncompletePlan, "range analysis needs exactly 16 results, got " + std::to_string(results.size()));
  for (const auto& [a, response] : results) {
    if (a.plan_row >= static_cast<std::size_t>(kPlanRows) || seen[a.plan_row])
      throw Error(Errc::IncompletePlan, "plan row " + std::to_string(a.plan_row) + " is missing or duplicated",
                  a.plan_row);
    seen[a.plan_row] = true;
    if (!std::isfinite(response)) throw Error(Errc::OutOfRange, "range analysis responses must be finite", a.plan_row);
  }

  RangeAnalysis out;
  std::array<std::array<int, kLevels>, kFactors> counts{};
  for (const auto& [a, response] : results) {
    const auto levels = levels_of(table, a);
    for (std::size_t f = 0; f < kFactors; ++f) {
      out.level_means[f][static_cast<std::size_t>(levels[f])] += response;
      ++counts[f][static_cast<std::size_t>(levels[f])];
    }
  }
  for (std::size_t f = 0; f < kFactors; ++f) {
    for (std::size_t l = 0; l < kLevels; ++l)
      if (counts[f][l] > 0) out.level_means[f][l] /= counts[f][l];
    const auto& m = out.level_means[f];
    out.best_levels[f] = static_cast<int>(std::min_element(m.begin(), m.end()) - m.begin());
    out.ranges[f] = *std::max_element(m.begin(), m.end()) - *std::min_element(m.begin(), m.end());
  }
  std::iota(out.ranking.begin(), out.ranking.end(), 0);
  std::stable_sort(out.ranking.begin(), out.ranking.end(), [&](int a, int b) {
    return out.ranges[static_cast<std::size_t>(a)] > out.ranges[static_cast<std::size_t>(b)];
  });
  out.recommended = assignment_from_levels(table, out.best_levels, kPlanRows);
  return out;
}

}  // namespace peval
