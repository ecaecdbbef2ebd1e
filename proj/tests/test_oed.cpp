#include <doctest.h>

#include <map>
#include <random>
#include <set>
#include <sstream>

#include "peval/oed.hpp"

using namespace peval;

namespace {

// Brute-force count of every ordered level pair in every column pair.
bool pairs_each_once(const LevelMatrix& a) {
  for (int c1 = 0; c1 < a.cols(); ++c1)
    for (int c2 = c1 + 1; c2 < a.cols(); ++c2) {
      std::map<std::pair<int, int>, int> seen;
      for (int r = 0; r < a.rows(); ++r) ++seen[{a(r, c1), a(r, c2)}];
      if (seen.size() != 16) return false;
      for (const auto& [k, n] : seen)
        if (n != 1) return false;
    }
  return true;
}

std::vector<std::pair<FactorAssignment, double>> responses(const std::vector<FactorAssignment>& plan,
                                                           double (*f)(const FactorAssignment&)) {
  std::vector<std::pair<FactorAssignment, double>> out;
  for (const auto& a : plan) out.emplace_back(a, f(a));
  return out;
}

}  // namespace

TEST_CASE("gf4 arithmetic") {
  // a * a = a^2 = a + 1, a * a^2 = 1
  CHECK(gf4_mul(2, 2) == 3);
  CHECK(gf4_mul(2, 3) == 1);
  CHECK(gf4_mul(3, 3) == 2);
  for (int x = 0; x < 4; ++x) {
    CHECK(gf4_mul(x, 0) == 0);
    CHECK(gf4_mul(x, 1) == x);
    CHECK(gf4_add(x, x) == 0);
    for (int y = 0; y < 4; ++y) {
      CHECK(gf4_mul(x, y) == gf4_mul(y, x));
      for (int z = 0; z < 4; ++z) CHECK(gf4_mul(x, gf4_add(y, z)) == gf4_add(gf4_mul(x, y), gf4_mul(x, z)));
    }
  }
}

TEST_CASE("l16 array shape and balance") {
  const LevelMatrix a = l16_4_5();
  REQUIRE(a.rows() == 16);
  REQUIRE(a.cols() == 5);
  for (int c = 0; c < 5; ++c) {
    int hist[4] = {0, 0, 0, 0};
    for (int r = 0; r < 16; ++r) ++hist[a(r, c)];
    for (int h : hist) CHECK(h == 4);
  }
  CHECK(pairs_each_once(a));
  CHECK(verify_orthogonality(a).pass);
  // row (i, j) = (1, 2)
  CHECK(a(6, 0) == 1);
  CHECK(a(6, 1) == 2);
  CHECK(a(6, 2) == 3);
  CHECK(a(6, 3) == (1 ^ 3));
  CHECK(a(6, 4) == (1 ^ 1));
}

TEST_CASE("verify_orthogonality catches a swap") {
  const LevelMatrix base = l16_4_5();
  int caught = 0;
  for (int c = 0; c < 5; ++c)
    for (int r1 = 0; r1 < 16; ++r1)
      for (int r2 = r1 + 1; r2 < 16; ++r2) {
        if (base(r1, c) == base(r2, c)) continue;
        LevelMatrix m = base;
        std::swap(m(r1, c), m(r2, c));
        const auto report = verify_orthogonality(m);
        CHECK_FALSE(report.pass);
        CHECK(pairs_each_once(m) == report.pass);
        REQUIRE(report.columns.has_value());
        CHECK((report.columns->first == c || report.columns->second == c));
        ++caught;
      }
  CHECK(caught > 0);

  LevelMatrix changed = base;
  changed(0, 2) = (changed(0, 2) + 1) % 4;
  const auto unbalanced = verify_orthogonality(changed);
  CHECK_FALSE(unbalanced.pass);
  CHECK(unbalanced.column == 2);
}

TEST_CASE("verify_orthogonality rejects malformed arrays") {
  LevelMatrix two(16, 2);
  for (int r = 0; r < 16; ++r) {
    two(r, 0) = r / 4;
    two(r, 1) = r % 4;
  }
  try {
    verify_orthogonality(two);
    FAIL("expected MalformedArray");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MalformedArray);
  }
  LevelMatrix bad = l16_4_5();
  bad(3, 3) = 4;
  CHECK_THROWS_AS(verify_orthogonality(bad), Error);
  CHECK_THROWS_AS(verify_orthogonality(LevelMatrix(15, 5)), Error);
}

TEST_CASE("generate_plan maps levels through the default table") {
  const FactorTable table;
  const auto plan = generate_plan(table);
  REQUIRE(plan.size() == 16);
  const auto& first = plan[0];
  CHECK(first.levels == std::array<int, 5>{0, 0, 0, 0, 0});
  CHECK(first.window_length == 5);
  CHECK(first.hop == 0);
  CHECK(first.hidden_nodes == 5);
  CHECK(first.epochs == 10);
  CHECK(first.activation == Activation::Linear);

  const auto top = assignment_from_levels(table, {3, 3, 3, 3, 3}, 0);
  CHECK(top.window_length == 20);
  CHECK(top.hop == 3);
  CHECK(top.hidden_nodes == 20);
  CHECK(top.epochs == 1000);
  CHECK(top.activation == Activation::ReLU);

  const LevelMatrix a = l16_4_5();
  std::set<std::array<int, 5>> distinct;
  std::map<std::size_t, int> by_l, by_e;
  std::map<Activation, int> by_f;
  for (std::size_t r = 0; r < 16; ++r) {
    CHECK(plan[r].plan_row == r);
    const auto back = levels_of(table, plan[r]);
    for (int c = 0; c < 5; ++c) CHECK(back[static_cast<std::size_t>(c)] == a(static_cast<int>(r), c));
    distinct.insert(back);
    ++by_l[plan[r].window_length];
    ++by_e[plan[r].epochs];
    ++by_f[plan[r].activation];
  }
  CHECK(distinct.size() == 16);
  for (const auto& [k, n] : by_l) CHECK(n == 4);
  for (const auto& [k, n] : by_e) CHECK(n == 4);
  for (const auto& [k, n] : by_f) CHECK(n == 4);
}

TEST_CASE("plan csv") {
  std::ostringstream out;
  write_plan_csv(out, generate_plan(FactorTable{}));
  const std::string text = out.str();
  CHECK(text.rfind("plan_row,L,H,N,E,F\n0,5,0,5,10,linear\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 17);
}

TEST_CASE("factor table json") {
  const FactorTable t = parse_factor_table(R"({"E": [10, 20, 30, 50], "F": ["tanh", "relu", "linear", "sigmoid"]})");
  CHECK(t.epochs == std::array<std::size_t, 4>{10, 20, 30, 50});
  CHECK(t.activations[0] == Activation::Tanh);
  CHECK(t.window_lengths == FactorTable{}.window_lengths);

  auto code = [](const std::string& text) {
    try {
      parse_factor_table(text);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::IoFailure;
  };
  CHECK(code(R"({"L": [5, 10, 15]})") == Errc::ConfigError);
  CHECK(code(R"({"L": [5, 5, 15, 20]})") == Errc::ConfigError);
  CHECK(code(R"({"Q": [1, 2, 3, 4]})") == Errc::ConfigError);
  CHECK(code(R"({"F": ["tanh", "relu", "linear", "softmax"]})") == Errc::ConfigError);
  CHECK(code(R"({"L": [0, 1, 2, 3]})") == Errc::ConfigError);
  CHECK(code("not json") == Errc::ConfigError);
}

TEST_CASE("range_analysis on a constructed activation effect") {
  const auto plan = generate_plan(FactorTable{});
  const auto ra = range_analysis(FactorTable{}, responses(plan, [](const FactorAssignment& a) {
    return a.activation == Activation::Tanh ? 0.1 : 0.9;
  }));
  CHECK(ra.recommended.activation == Activation::Tanh);
  CHECK(ra.ranking[0] == 4);
  CHECK(ra.ranges[4] == doctest::Approx(0.8));
  for (int f = 0; f < 4; ++f) CHECK(ra.ranges[static_cast<std::size_t>(f)] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(ra.recommended.plan_row == kPlanRows);
}

TEST_CASE("range_analysis ties and level means") {
  const FactorTable table;
  const auto plan = generate_plan(table);
  const auto flat = range_analysis(table, responses(plan, [](const FactorAssignment&) { return 0.5; }));
  for (int f = 0; f < 5; ++f) {
    CHECK(flat.ranges[static_cast<std::size_t>(f)] == 0.0);
    CHECK(flat.best_levels[static_cast<std::size_t>(f)] == 0);
  }
  CHECK(flat.recommended.window_length == 5);
  CHECK(flat.recommended.activation == Activation::Linear);

  const auto by_l = range_analysis(table, responses(plan, [](const FactorAssignment& a) {
    return static_cast<double>(a.window_length);
  }));
  CHECK(by_l.recommended.window_length == 5);
  CHECK(by_l.ranges[0] == 15.0);
  for (int lvl = 0; lvl < 4; ++lvl) CHECK(by_l.level_means[0][static_cast<std::size_t>(lvl)] == table.window_lengths[static_cast<std::size_t>(lvl)]);
}

TEST_CASE("range_analysis invariances") {
  const FactorTable table;
  const auto plan = generate_plan(table);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::pair<FactorAssignment, double>> base;
    for (const auto& a : plan) base.emplace_back(a, static_cast<double>(rng() % 1000) / 64.0);
    const auto ra = range_analysis(table, base);
    auto shifted = base, scaled = base;
    for (auto& [a, v] : shifted) v += 8.0;
    for (auto& [a, v] : scaled) v *= 4.0;
    const auto rs = range_analysis(table, shifted);
    const auto rk = range_analysis(table, scaled);
    CHECK(rs.best_levels == ra.best_levels);
    CHECK(rs.ranking == ra.ranking);
    CHECK(rk.best_levels == ra.best_levels);
    CHECK(rk.ranking == ra.ranking);
    for (std::size_t f = 0; f < 5; ++f) {
      CHECK(rs.ranges[f] == doctest::Approx(ra.ranges[f]).epsilon(1e-12));
      CHECK(rk.ranges[f] == doctest::Approx(4.0 * ra.ranges[f]).epsilon(1e-12));
    }
  }
}

TEST_CASE("range_analysis needs the complete plan") {
  const FactorTable table;
  const auto plan = generate_plan(table);
  std::vector<std::pair<FactorAssignment, double>> partial;
  for (std::size_t r = 0; r < 15; ++r) partial.emplace_back(plan[r], 1.0);
  try {
    range_analysis(table, partial);
    FAIL("expected IncompletePlan");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::IncompletePlan);
  }
  partial.emplace_back(plan[3], 1.0);
  CHECK_THROWS_AS(range_analysis(table, partial), Error);
}
