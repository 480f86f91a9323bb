#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "latcorr/estimator.hpp"
#include "latcorr/kendall.hpp"
#include "latcorr/synth.hpp"
#include "support.hpp"

using namespace latcorr;
using V = std::vector<double>;

namespace {

constexpr auto C = VariableType::continuous;
constexpr auto B = VariableType::binary;
constexpr auto T = VariableType::truncated;

// A permutation of 0..m-1 with exactly k inversions, from its Lehmer code.
std::vector<int> permutation_with_inversions(int m, int k) {
  std::vector<int> pool(m), out;
  for (int i = 0; i < m; ++i) pool[i] = i;
  for (int i = 0; i < m; ++i) {
    const int c = std::min(k, m - 1 - i);
    k -= c;
    out.push_back(pool[c]);
    pool.erase(pool.begin() + c);
  }
  return out;
}

// Truncated x with `zeros` zeros followed by positives 1..; continuous y whose
// positive block has `inversions` discordant pairs and whose zero block lies below it.
std::pair<V, V> tc_fixture(int n, int zeros, int inversions) {
  V x(n), y(n);
  const auto perm = permutation_with_inversions(n - zeros, inversions);
  for (int i = 0; i < n; ++i) {
    if (i < zeros) {
      x[i] = 0.0;
      y[i] = i + 1;
    } else {
      x[i] = i - zeros + 1;
      y[i] = zeros + 1 + perm[i - zeros];
    }
  }
  return {x, y};
}

EstimateOptions with(EstimationMethod m) {
  EstimateOptions o;
  o.method = m;
  return o;
}

DataMatrix make_matrix(const std::vector<std::string>& names, const std::vector<V>& cols) {
  V flat;
  for (const auto& c : cols) flat.insert(flat.end(), c.begin(), c.end());
  return DataMatrix(names, cols.front().size(), flat);
}

const GridSet& all_grids() {
  static const GridSet g = testing::grid_set(
      {CaseKind::BC, CaseKind::BB, CaseKind::TC, CaseKind::TT, CaseKind::TB});
  return g;
}

}  // namespace

TEST_SUITE("estimator") {

TEST_CASE("classify_pair") {
  CHECK(classify_pair(C, C).kind == CaseKind::CC);
  CHECK_FALSE(classify_pair(C, C).swap);
  CHECK(classify_pair(C, T).kind == CaseKind::TC);
  CHECK(classify_pair(C, T).swap);
  CHECK_FALSE(classify_pair(T, C).swap);
  CHECK(classify_pair(B, T).kind == CaseKind::TB);
  CHECK(classify_pair(B, T).swap);
  CHECK_FALSE(classify_pair(T, B).swap);
  CHECK(classify_pair(C, B).kind == CaseKind::BC);
  CHECK(classify_pair(C, B).swap);
  CHECK(classify_pair(B, B).kind == CaseKind::BB);
  CHECK(classify_pair(T, T).kind == CaseKind::TT);
}

TEST_CASE("abd formulas") {
  auto p = [](double v) { return Probability(v); };
  CHECK(abd(CaseKind::TC, p(0.0)) == 1.0);
  CHECK(abd(CaseKind::TC, p(0.5)) == 0.75);
  CHECK(abd(CaseKind::BC, p(0.5)) == 0.5);
  CHECK(abd(CaseKind::TT, p(0.6), p(0.3)) == doctest::Approx(0.64).epsilon(1e-15));
  CHECK(abd(CaseKind::BB, p(0.2), p(0.7)) == doctest::Approx(2 * 0.2 * 0.3).epsilon(1e-15));
  // TB: b = max(pi0_y, 1 - pi0_y) = 0.7; 2 * 0.7 * (1 - max(0.7, 0.4)).
  CHECK(abd(CaseKind::TB, p(0.4), p(0.3)) == doctest::Approx(2 * 0.7 * 0.3).epsilon(1e-15));
  CHECK(abd(CaseKind::TB, p(0.9), p(0.3)) == doctest::Approx(2 * 0.7 * 0.1).epsilon(1e-15));
  CHECK(abd(CaseKind::CC, p(0.3)) == 1.0);
}

TEST_CASE("boundary dispatch on constructed fixtures") {
  // n = 100, 50 zeros: ABD = 0.75 and 0.9 ABD = 0.675, i.e. S = 3341.25 of 4950 pairs.
  // S = 2500 + 1225 - 2k for k inversions in the positive block.
  const auto& grids = all_grids();
  REQUIRE(grids.find(CaseKind::TC));
  {
    const auto [x, y] = tc_fixture(100, 50, 192);
    CHECK(kendall_tau_a(x, y) * 4950 == doctest::Approx(3341).epsilon(1e-12));
    const auto e = estimate_pair(x, y, T, C, with(EstimationMethod::mlbd), grids);
    CHECK(e.kind == CaseKind::TC);
    CHECK(e.method_used == MethodUsed::ml);
    CHECK(e.fallback == Fallback::none);
    const auto swapped = estimate_pair(y, x, C, T, with(EstimationMethod::mlbd), grids);
    CHECK(swapped.method_used == MethodUsed::ml);
    CHECK(swapped.r_hat == e.r_hat);
  }
  {
    const auto [x, y] = tc_fixture(100, 50, 191);
    CHECK(kendall_tau_a(x, y) * 4950 == doctest::Approx(3343).epsilon(1e-12));
    const auto e = estimate_pair(x, y, T, C, with(EstimationMethod::mlbd), grids);
    CHECK(e.method_used == MethodUsed::org);
    CHECK(e.fallback == Fallback::boundary);
    const auto org = estimate_pair(x, y, T, C, with(EstimationMethod::org), grids);
    CHECK(e.r_hat == org.r_hat);
    // A larger constant moves the same pair back inside.
    EstimateOptions wide = with(EstimationMethod::mlbd);
    wide.boundary.overrides[static_cast<std::size_t>(CaseKind::TC)] = 0.95;
    CHECK(estimate_pair(x, y, T, C, wide, grids).method_used == MethodUsed::ml);
    wide.boundary.overrides[static_cast<std::size_t>(CaseKind::TC)].reset();
    wide.boundary.constant = 0.95;
    CHECK(estimate_pair(x, y, T, C, wide, grids).method_used == MethodUsed::ml);
  }
}

TEST_CASE("high zero proportion goes to ORG under MLBD") {
  // 95 zeros: ABD = 0.0975; the maximal tau_hat here is 485/4950.
  const auto [x, y] = tc_fixture(100, 95, 0);
  const auto e = estimate_pair(x, y, T, C, with(EstimationMethod::mlbd), all_grids());
  CHECK(std::abs(e.stats.tau_hat) > 0.9 * abd(CaseKind::TC, Probability(0.95)));
  CHECK(e.method_used == MethodUsed::org);
  CHECK(e.stats.pi0_x.value() == 0.95);
  CHECK(e.stats.delta_x.has_value());
  CHECK_FALSE(e.stats.delta_y.has_value());
  const auto ml = estimate_pair(x, y, T, C, with(EstimationMethod::ml), all_grids());
  CHECK(ml.method_used == MethodUsed::ml);
}

TEST_CASE("continuous pairs use the closed form under every method") {
  const V x{1, 2, 3}, y{1, 3, 2};
  const GridSet none;
  for (auto m : {EstimationMethod::org, EstimationMethod::ml, EstimationMethod::mlbd}) {
    const auto e = estimate_pair(x, y, C, C, with(m), none);
    CHECK(e.method_used == MethodUsed::closed_form);
    CHECK(e.r_hat == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("zero tau gives zero under every method") {
  V x{0, 0, 1, 2, 3, 4}, y{1, 2, 3, 4, 5, 6};
  while (kendall_tau_a(x, y) != 0.0) REQUIRE(std::next_permutation(y.begin(), y.end()));
  for (auto m : {EstimationMethod::org, EstimationMethod::ml, EstimationMethod::mlbd}) {
    CHECK(std::abs(estimate_pair(x, y, T, C, with(m), all_grids()).r_hat) <= 1e-6);
  }
}

TEST_CASE("missing grid and degenerate columns") {
  const auto [x, y] = tc_fixture(40, 20, 30);
  const GridSet none;
  CHECK_THROWS_AS(estimate_pair(x, y, T, C, with(EstimationMethod::ml), none), MissingGridError);
  CHECK_THROWS_AS(estimate_pair(x, y, T, C, with(EstimationMethod::mlbd), none), MissingGridError);
  CHECK_NOTHROW(estimate_pair(x, y, T, C, with(EstimationMethod::org), none));
  try {
    estimate_pair(x, y, T, C, with(EstimationMethod::ml), none);
  } catch (const MissingGridError& e) {
    CHECK(e.kind() == CaseKind::TC);
    CHECK(std::string(e.what()).find("tc") != std::string::npos);
  }

  const V zeros(40, 0.0), ones(40, 1.0);
  try {
    estimate_pair(zeros, y, T, C, with(EstimationMethod::org), none, "abundance", "y");
    FAIL("expected DegenerateVariableError");
  } catch (const DegenerateVariableError& e) {
    CHECK(e.column() == "abundance");
  }
  CHECK_THROWS_AS(estimate_pair(x, ones, C, B, with(EstimationMethod::org), none), DegenerateVariableError);
  CHECK_THROWS_AS(estimate_pair(x, V(40, 2.0), C, B, with(EstimationMethod::org), none), InvalidColumnError);
  V neg = x;
  neg[0] = -1;
  CHECK_THROWS_AS(estimate_pair(neg, y, T, C, with(EstimationMethod::org), none), InvalidColumnError);

  // A truncated column without zeros is treated as continuous.
  const auto e = estimate_pair(y, x, T, T, with(EstimationMethod::org), none);
  CHECK(e.kind == CaseKind::TC);
  V shifted = x;
  for (auto& v : shifted) v += 1.0;
  CHECK(estimate_pair(shifted, y, T, C, with(EstimationMethod::mlbd), none).kind == CaseKind::CC);
}

TEST_CASE("MLBD equals ML inside the boundary and ORG outside") {
  const auto& grids = all_grids();
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> ur(-0.95, 0.95), up(0.05, 0.95);
  for (auto c : {CaseKind::BC, CaseKind::BB, CaseKind::TC, CaseKind::TT, CaseKind::TB}) {
    if (!grids.find(c)) continue;
    CAPTURE(to_string(c));
    int inside = 0, outside = 0;
    for (int k = 0; k < 60; ++k) {
      ScenarioSpec spec{.kind = c, .r_true = ur(gen), .pi0 = up(gen), .pi0_second = up(gen), .n = 60, .replications = 1, .seed = gen()};
      const auto pr = generate_scenario_pair(spec, 0);
      const auto mlbd = estimate_pair(pr.x, pr.y, pr.tx, pr.ty, with(EstimationMethod::mlbd), grids);
      const auto ml = estimate_pair(pr.x, pr.y, pr.tx, pr.ty, with(EstimationMethod::ml), grids);
      const auto org = estimate_pair(pr.x, pr.y, pr.tx, pr.ty, with(EstimationMethod::org), grids);
      const double bound = 0.9 * abd(c, mlbd.stats.pi0_x, mlbd.stats.pi0_y);
      if (std::abs(mlbd.stats.tau_hat) <= bound) {
        CHECK(mlbd.r_hat == ml.r_hat);
        ++inside;
      } else {
        CHECK(mlbd.r_hat == org.r_hat);
        CHECK(mlbd.method_used == MethodUsed::org);
        ++outside;
      }
      CHECK(std::abs(mlbd.r_hat) <= 1.0);
    }
    CHECK(inside > 0);
  }
}

TEST_CASE("empirical tau_hat respects ABD") {
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> ur(-0.99, 0.99), up(0.05, 0.95);
  const std::size_t n = 100;
  for (auto c : {CaseKind::BC, CaseKind::BB, CaseKind::TC, CaseKind::TT, CaseKind::TB}) {
    CAPTURE(to_string(c));
    double worst = -1.0;
    for (int k = 0; k < 1000; ++k) {
      ScenarioSpec spec{.kind = c, .r_true = ur(gen), .pi0 = up(gen), .pi0_second = up(gen), .n = n, .replications = 1, .seed = gen()};
      const auto pr = generate_scenario_pair(spec, 0);
      const double tau = kendall_tau_a(pr.x, pr.y);
      const auto px = zero_proportion(pr.x), py = zero_proportion(pr.y);
      worst = std::max(worst, std::abs(tau) - abd(c, px, py));
    }
    CHECK(worst <= 2.0 / n);
  }
}

TEST_CASE("infer_type") {
  CHECK(infer_type(V{0, 1, 1, 0}) == B);
  CHECK(infer_type(V{0, 0, 2.5, 3.1}) == T);
  CHECK(infer_type(V{-1.2, 0.4}) == C);
  CHECK(infer_type(V{0, 0, 2.5, 2.5}) == C);  // one distinct nonzero value
  CHECK(infer_type(V{1, 1, 1}) == C);
  CHECK(infer_type(V{1.5, 2.5}) == C);
  CHECK_THROWS_AS(infer_type(V{}), std::invalid_argument);
}

TEST_CASE("matrix assembly") {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> nd;
  const std::size_t n = 80;
  V a(n), b(n), c(n), d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = nd(gen);
    a[i] = z + 0.5 * nd(gen);
    b[i] = z + nd(gen) > 0.2 ? 1.0 : 0.0;
    c[i] = std::max(0.0, z + nd(gen) - 0.1);
    d[i] = std::max(0.0, -z + nd(gen) + 0.3);
  }
  const std::vector<std::string> names{"a", "b", "c", "d", "a2"};
  const auto data = make_matrix(names, {a, b, c, d, a});
  const auto types = infer_types(data);
  CHECK(types == std::vector{C, B, T, T, C});
  MatrixOptions opts;
  const auto m = estimate_matrix(data, types, opts, all_grids());
  REQUIRE(m.dim() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(m(i, i) == 1.0);
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(m(i, j) == m(j, i));
      CHECK(std::abs(m(i, j)) <= 1.0);
    }
  }
  CHECK(m(0, 4) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m.provenance[0 * 5 + 2].kind == CaseKind::TC);
  CHECK(m.provenance[1 * 5 + 2].kind == CaseKind::TB);

  // p = 2 agrees with estimate_pair.
  const auto pair = estimate_matrix(make_matrix({"c", "b"}, {c, b}), std::vector{T, B}, opts, all_grids());
  CHECK(pair(0, 1) == estimate_pair(c, b, T, B, opts.estimate, all_grids()).r_hat);

  // Thread count does not change a single bit.
  MatrixOptions threaded = opts;
  threaded.threads = 4;
  CHECK(estimate_matrix(data, types, threaded, all_grids()).values == m.values);

  // Permuting columns permutes the matrix.
  const std::vector<std::size_t> perm{3, 0, 4, 2, 1};
  std::vector<V> cols{a, b, c, d, a};
  std::vector<V> pcols;
  std::vector<std::string> pnames;
  std::vector<VariableType> ptypes;
  for (auto k : perm) {
    pcols.push_back(cols[k]);
    pnames.push_back(names[k]);
    ptypes.push_back(types[k]);
  }
  const auto pm = estimate_matrix(make_matrix(pnames, pcols), ptypes, opts, all_grids());
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) CHECK(pm(i, j) == m(perm[i], perm[j]));
  }
}

TEST_CASE("matrix error policies") {
  const V good{0, 1, 2, 3, 0, 5}, bin_const{1, 1, 1, 1, 1, 1}, other{3, 1, 4, 1, 5, 9};
  const auto data = make_matrix({"g", "flat", "o"}, {good, bin_const, other});
  const std::vector types{T, B, C};
  MatrixOptions opts;
  opts.estimate.method = EstimationMethod::org;
  try {
    estimate_matrix(data, types, opts, GridSet{});
    FAIL("expected PairError");
  } catch (const PairError& e) {
    CHECK(e.first() == 0);
    CHECK(e.second() == 1);
    CHECK(std::string(e.what()).find("flat") != std::string::npos);
    CHECK_THROWS_AS(std::rethrow_exception(e.cause()), DegenerateVariableError);
  }
  opts.on_error = ErrorPolicy::skip;
  const auto m = estimate_matrix(data, types, opts, GridSet{});
  CHECK(std::isnan(m(0, 1)));
  CHECK(std::isnan(m(1, 2)));
  CHECK(std::isfinite(m(0, 2)));
  CHECK(m.provenance[0 * 3 + 1].error.has_value());
  CHECK_FALSE(m.provenance[0 * 3 + 2].error.has_value());

  MatrixOptions ml;
  try {
    estimate_matrix(make_matrix({"g", "o"}, {good, other}), std::vector{T, C}, ml, GridSet{});
    FAIL("expected PairError");
  } catch (const PairError& e) {
    CHECK_THROWS_AS(std::rethrow_exception(e.cause()), MissingGridError);
  }
}

TEST_CASE("91 truncated variables") {
  std::mt19937_64 gen(91);
  std::normal_distribution<double> nd;
  const std::size_t n = 120, p = 91;
  std::vector<V> cols(p, V(n));
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("taxon" + std::to_string(j));
  for (std::size_t i = 0; i < n; ++i) {
    const double f = nd(gen);
    for (std::size_t j = 0; j < p; ++j) {
      const double cut = -0.8 + 1.6 * static_cast<double>(j) / p;
      const double z = 0.6 * f + 0.8 * nd(gen);
      cols[j][i] = z > cut ? std::exp(z) : 0.0;
    }
  }
  const auto data = make_matrix(names, cols);
  const auto types = infer_types(data);
  CHECK(std::all_of(types.begin(), types.end(), [](auto t) { return t == T; }));
  MatrixOptions opts;
  opts.threads = 2;
  const auto m = estimate_matrix(data, types, opts, all_grids());
  REQUIRE(m.dim() == p);
  for (std::size_t i = 0; i < p; ++i) {
    CHECK(m(i, i) == 1.0);
    for (std::size_t j = i + 1; j < p; ++j) {
      REQUIRE(m(i, j) == m(j, i));
      REQUIRE(std::abs(m(i, j)) <= 1.0);
    }
  }
}

TEST_CASE("names and parsing of enums") {
  CHECK(to_string(EstimationMethod::mlbd) == "mlbd");
  CHECK(parse_estimation_method("ORG") == EstimationMethod::org);
  CHECK_THROWS_AS(parse_estimation_method("fast"), std::invalid_argument);
  CHECK(to_string(MethodUsed::closed_form) == "closed_form");
  CHECK(to_string(Fallback::out_of_hull) == "out_of_hull");
}

}  // TEST_SUITE
