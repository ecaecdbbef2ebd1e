#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "peval/network.hpp"

namespace peval {

inline constexpr int kLevels = 4;
inline constexpr int kFactors = 5;
inline constexpr int kPlanRows = 16;
inline constexpr int kFullFactorialRuns = 1024;  // 4^5

using LevelMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

// Factor order everywhere: window length L, hop H, hidden nodes N, epochs E, activation F.
enum class Factor { L = 0, H = 1, N = 2, E = 3, F = 4 };
const char* factor_name(int factor) noexcept;

// GF(4) = {0, 1, a, a^2} encoded 0..3 with a^2 = a + 1; addition is XOR.
int gf4_add(int x, int y) noexcept;
int gf4_mul(int x, int y) noexcept;

// Row r = 4 i + j (i, j in 0..3) is [i, j, i+j, i+a*j, i+a^2*j] over GF(4).
LevelMatrix l16_4_5();

struct OrthogonalityReport {
  bool pass = true;
  std::string violation;
  std::optional<int> column;                    // balance violation
  std::optional<std::pair<int, int>> columns;   // pair-coverage violation
};

// Exhaustive check of column balance and pairwise level coverage.
// Throws Errc::MalformedArray unless the array is 16 x 5 with levels in 0..3.
OrthogonalityReport verify_orthogonality(const LevelMatrix& array);

struct FactorTable {
  std::array<std::size_t, kLevels> window_lengths{5, 10, 15, 20};
  std::array<std::size_t, kLevels> hops{0, 1, 2, 3};
  std::array<std::size_t, kLevels> hidden_nodes{5, 10, 15, 20};
  std::array<std::size_t, kLevels> epochs{10, 50, 200, 1000};
  std::array<Activation, kLevels> activations{Activation::Linear, Activation::Sigmoid, Activation::Tanh,
                                              Activation::ReLU};

  void validate() const;
};

// JSON object with keys "L", "H", "N", "E" (4 non-negative integers each)
// and "F" (4 activation tags). Missing keys keep their defaults.
FactorTable parse_factor_table(const std::string& json_text);
FactorTable load_factor_table(const std::string& path);

struct FactorAssignment {
  std::size_t window_length = 0;
  std::size_t hop = 0;
  std::size_t hidden_nodes = 0;
  std::size_t epochs = 0;
  Activation activation = Activation::Linear;
  std::size_t plan_row = 0;
  std::array<int, kFactors> levels{};
};

FactorAssignment assignment_from_levels(const FactorTable& table, const std::array<int, kFactors>& levels,
                                        std::size_t plan_row);
std::array<int, kFactors> levels_of(const FactorTable& table, const FactorAssignment& assignment);

std::vector<FactorAssignment> generate_plan(const FactorTable& table);

// `plan_row,L,H,N,E,F`
void write_plan_csv(std::ostream& out, const std::vector<FactorAssignment>& plan);

struct RangeAnalysis {
  std::array<std::array<double, kLevels>, kFactors> level_means{};
  std::array<double, kFactors> ranges{};
  std::array<int, kFactors> best_levels{};
  std::array<int, kFactors> ranking{};  // factor indices, largest range first
  FactorAssignment recommended;  // plan_row == kPlanRows: not necessarily a plan row
};

// Lower response is better; ties go to the lowest level index.
RangeAnalysis range_analysis(const FactorTable& table,
                             const std::vector<std::pair<FactorAssignment, double>>& results);

}  // namespace peval
