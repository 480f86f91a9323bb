#include "latcorr/synth.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace latcorr {

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) noexcept {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
  }
  return ctr;
}

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_(stream) {}

double NormalStream::next() noexcept {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  const auto w = philox4x32_10({static_cast<std::uint32_t>(block_),
                                static_cast<std::uint32_t>(block_ >> 32),
                                static_cast<std::uint32_t>(stream_),
                                static_cast<std::uint32_t>(stream_ >> 32)},
                               key_);
  ++block_;
  auto unit = [](std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  };
  const double u1 = 1.0 - unit(w[0], w[1]);  // (0, 1]
  const double u2 = unit(w[2], w[3]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

std::pair<std::vector<double>, std::vector<double>> generate_latent_pair(std::size_t n, double r,
                                                                         std::uint64_t seed,
                                                                         std::uint64_t stream) {
  if (!(std::abs(r) < 1.0)) throw std::domain_error("generate_latent_pair: need |r| < 1");
  NormalStream g(seed, stream);
  const double s = std::sqrt(1.0 - r * r);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z1 = g.next();
    const double z2 = g.next();
    x[i] = z1;
    y[i] = r * z1 + s * z2;
  }
  return {std::move(x), std::move(y)};
}

namespace {

// k-th order statistic (1-based) with k = round(n * pi0); 0 when no entry should fall at or below.
std::size_t zero_count(std::size_t n, Probability pi0) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * pi0.value()));
}

double order_statistic(std::span<const double> x, std::size_t k) {
  std::vector<double> s(x.begin(), x.end());
  std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(k - 1), s.end());
  return s[k - 1];
}

}  // namespace

std::vector<double> apply_truncation(std::span<const double> x, Probability pi0) {
  if (x.empty()) return {};
  const std::size_t k = zero_count(x.size(), pi0);
  std::vector<double> out(x.begin(), x.end());
  if (k == 0) {
    const double lo = *std::min_element(x.begin(), x.end());
    for (double& v : out) v = v - lo + 1.0;
    return out;
  }
  const double cut = order_statistic(x, k);
  for (double& v : out) v = v > cut ? v - cut : 0.0;
  return out;
}

std::vector<double> apply_dichotomization(std::span<const double> x, Probability pi0) {
  if (x.empty()) return {};
  const std::size_t k = zero_count(x.size(), pi0);
  std::vector<double> out(x.size(), 1.0);
  if (k == 0) return out;
  const double cut = order_statistic(x, k);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > cut ? 1.0 : 0.0;
  return out;
}

void ScenarioSpec::validate() const {
  if (kind == CaseKind::CC) throw std::invalid_argument("scenario: cc has no approximation error");
  if (!(std::abs(r_true) < 1.0)) throw std::invalid_argument("scenario: need |r| < 1");
  if (n < 10) throw std::invalid_argument("scenario: need n >= 10");
  if (replications < 1) throw std::invalid_argument("scenario: need at least one replication");
  auto check = [&](double p, const char* what) {
    if (!(p > 0.0 && p < 1.0)) {
      throw std::invalid_argument(std::string("scenario: ") + what + " must lie in (0, 1)");
    }
    const auto k = zero_count(n, Probability(p));
    if (k == 0 || k == n) {
      throw std::invalid_argument(std::string("scenario: ") + what +
                                  " leaves a constant column at this n");
    }
  };
  check(pi0, "pi0");
  if (threshold_count(kind) == 2) check(pi0_second.value_or(pi0), "second pi0");
}

SyntheticPair generate_scenario_pair(const ScenarioSpec& spec, std::uint64_t replication) {
  auto [x, y] = generate_latent_pair(spec.n, spec.r_true, spec.seed, replication);
  const Probability p1(spec.pi0);
  const Probability p2(spec.pi0_second.value_or(spec.pi0));
  using VT = VariableType;
  switch (spec.kind) {
    case CaseKind::TC:
      return {apply_truncation(x, p1), std::move(y), VT::truncated, VT::continuous};
    case CaseKind::BC:
      return {apply_dichotomization(x, p1), std::move(y), VT::binary, VT::continuous};
    case CaseKind::TT:
      return {apply_truncation(x, p1), apply_truncation(y, p2), VT::truncated, VT::truncated};
    case CaseKind::BB:
      return {apply_dichotomization(x, p1), apply_dichotomization(y, p2), VT::binary, VT::binary};
    case CaseKind::TB:
      return {apply_truncation(x, p1), apply_dichotomization(y, p2), VT::truncated, VT::binary};
    case CaseKind::CC:
      break;
  }
  return {std::move(x), std::move(y), VT::continuous, VT::continuous};
}

AccuracyCell run_accuracy_experiment(const ScenarioSpec& spec, const GridSet& grids,
                                     unsigned threads, const BoundaryConfig& boundary) {
  spec.validate();
  struct Rep {
    double err_ml, err_mlbd;
    bool boundary;
  };
  std::vector<Rep> reps(spec.replications);
  std::vector<std::exception_ptr> errors(spec.replications);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= reps.size()) return;
      try {
        const SyntheticPair d = generate_scenario_pair(spec, k);
        auto run = [&](EstimationMethod m) {
          return estimate_pair(d.x, d.y, d.tx, d.ty, EstimateOptions{m, boundary}, grids);
        };
        const PairEstimate org = run(EstimationMethod::org);
        const PairEstimate ml = run(EstimationMethod::ml);
        const PairEstimate mlbd = run(EstimationMethod::mlbd);
        reps[k] = {std::abs(ml.r_hat - org.r_hat), std::abs(mlbd.r_hat - org.r_hat),
                   mlbd.fallback == Fallback::boundary};
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < std::max(1u, threads); ++t) pool.emplace_back(worker);
    worker();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  AccuracyCell cell{spec.kind, spec.r_true, spec.pi0, spec.pi0_second.value_or(spec.pi0)};
  double sum_ml = 0.0, sum_mlbd = 0.0;
  for (const Rep& r : reps) {
    cell.max_err_ml = std::max(cell.max_err_ml, r.err_ml);
    cell.max_err_mlbd = std::max(cell.max_err_mlbd, r.err_mlbd);
    sum_ml += r.err_ml;
    sum_mlbd += r.err_mlbd;
    cell.boundary_active += r.boundary ? 1 : 0;
  }
  cell.mean_err_ml = sum_ml / static_cast<double>(reps.size());
  cell.mean_err_mlbd = sum_mlbd / static_cast<double>(reps.size());
  return cell;
}

std::vector<AccuracyCell> run_accuracy_sweep(CaseKind kind, std::span<const double> r_values,
                                             std::span<const double> pi0_values, std::size_t n,
                                             std::size_t replications, std::uint64_t seed,
                                             const GridSet& grids, unsigned threads) {
  std::vector<AccuracyCell> cells;
  for (double r : r_values) {
    for (double p : pi0_values) {
      ScenarioSpec spec{kind, r, p, std::nullopt, n, replications, seed};
      cells.push_back(run_accuracy_experiment(spec, grids, threads));
    }
  }
  return cells;
}

namespace {

std::vector<double> evenly_spaced(double from, double to, int count) {
  std::vector<double> v(static_cast<std::size_t>(count));
  const double by = (to - from) / (count - 1);
  for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = from + i * by;
  v.back() = to;
  return v;
}

}  // namespace

std::vector<double> default_sweep_r() { return evenly_spaced(0.05, 0.91, 9); }
std::vector<double> default_sweep_pi0() { return evenly_spaced(0.03, 0.95, 11); }

void write_accuracy_csv(std::ostream& out, std::span<const AccuracyCell> cells, std::uint64_t seed,
                        std::size_t n, std::size_t replications) {
  char buf[256];
  out << "# generator: philox4x32-10, box-muller normals, stream = replication index\n";
  out << "# seed: " << seed << "\n# n: " << n << "\n# replications: " << replications << "\n";
  bool two = false;
  for (const auto& c : cells) two = two || threshold_count(c.kind) == 2;
  if (two) {
    for (const auto& c : cells) {
      if (threshold_count(c.kind) == 2) {
        std::snprintf(buf, sizeof buf, "# pi0 of second variable: %.17g\n", c.pi0_second);
        out << buf;
        break;
      }
    }
  }
  out << "case,r,pi0,method,max_abs_err,mean_abs_err\n";
  for (const auto& c : cells) {
    const std::string k = to_string(c.kind);
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,ml,%.17g,%.17g\n", k.c_str(), c.r, c.pi0,
                  c.max_err_ml, c.mean_err_ml);
    out << buf;
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,mlbd,%.17g,%.17g\n", k.c_str(), c.r, c.pi0,
                  c.max_err_mlbd, c.mean_err_mlbd);
    out << buf;
  }
}

std::vector<TimingRow> run_timing_benchmark(std::span<const CaseKind> cases, std::size_t n,
                                            std::size_t replications, const GridSet& grids,
                                            std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  constexpr EstimationMethod kMethods[3] = {EstimationMethod::org, EstimationMethod::ml,
                                            EstimationMethod::mlbd};
  std::vector<TimingRow> rows;
  for (CaseKind c : cases) {
    std::array<std::vector<double>, 3> us;
    for (std::size_t rep = 0; rep < replications; ++rep) {
      SyntheticPair d;
      if (c == CaseKind::CC) {
        auto [x, y] = generate_latent_pair(n, 0.5, seed, rep);
        d = {std::move(x), std::move(y), VariableType::continuous, VariableType::continuous};
      } else {
        d = generate_scenario_pair(ScenarioSpec{c, 0.5, 0.5, std::nullopt, n, 1, seed}, rep);
      }
      for (std::size_t j = 0; j < 3; ++j) {
        const std::size_t m = (rep + j) % 3;
        const EstimateOptions opt{kMethods[m], {}};
        // An untimed call first, so no method pays for the cache state left by another.
        estimate_pair(d.x, d.y, d.tx, d.ty, opt, grids);
        const auto t0 = clock::now();
        const PairEstimate e = estimate_pair(d.x, d.y, d.tx, d.ty, opt, grids);
        const auto t1 = clock::now();
        // Keep the result observable so the call cannot be elided.
        if (std::isnan(e.r_hat)) throw std::logic_error("run_timing_benchmark: NaN estimate");
        us[m].push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
      }
    }
    auto median = [](std::vector<double> v) {
      if (v.empty()) return 0.0;
      const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
      std::nth_element(v.begin(), mid, v.end());
      if (v.size() % 2 == 1) return *mid;
      return 0.5 * (*mid + *std::max_element(v.begin(), mid));
    };
    rows.push_back({c, n, replications, median(us[0]), median(us[1]), median(us[2])});
  }
  return rows;
}

void write_timing_csv(std::ostream& out, std::span<const TimingRow> rows) {
  out << "case,n,reps,org_median_us,ml_median_us,mlbd_median_us,org_over_ml,mlbd_over_ml\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%.6g,%.6g,%.6g,%.6g,%.6g\n",
                  to_string(r.kind).c_str(), r.n, r.replications, r.org_us, r.ml_us, r.mlbd_us,
                  r.org_over_ml(), r.mlbd_over_ml());
    out << buf;
  }
}

}  // namespace latcorr
