#include "latcorr/interp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "latcorr/mvn.hpp"
#include "latcorr/optimize.hpp"

namespace latcorr {

GridAxis::GridAxis(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw std::domain_error("GridAxis: need at least 2 points");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i])) throw std::domain_error("GridAxis: non-finite point");
    if (i > 0) {
      const double gap = points_[i] - points_[i - 1];
      if (!(gap > 0.0)) throw std::domain_error("GridAxis: points not strictly increasing");
      h_max_ = std::max(h_max_, gap);
    }
  }
}

std::optional<GridAxis::Cell> GridAxis::locate(double x) const {
  if (!(x >= points_.front() && x <= points_.back())) return std::nullopt;
  auto it = std::upper_bound(points_.begin(), points_.end(), x);
  std::size_t lo = static_cast<std::size_t>(it - points_.begin()) - 1;
  if (lo + 1 == points_.size()) return Cell{lo - 1, 1.0};
  return Cell{lo, (x - points_[lo]) / (points_[lo + 1] - points_[lo])};
}

GridAxis build_tau_axis(CaseKind c) {
  std::vector<double> pts;
  switch (c) {
    case CaseKind::CC:
      throw std::invalid_argument("build_tau_axis: the cc case has a closed-form inverse and no grid");
    case CaseKind::TC:
    case CaseKind::TT:
      for (int i = -99; i <= 99; ++i) pts.push_back(i / 100.0);
      break;
    case CaseKind::BC:
    case CaseKind::BB:
    case CaseKind::TB: {
      // Dense near zero, where the attainable tau range of binary pairs is concentrated.
      std::vector<double> half;
      for (int i = 0; i <= 18; ++i) half.push_back(0.001 + 0.005 * i);
      for (int i = 0; i <= 57; ++i) half.push_back(0.101 + 0.007 * i);
      for (auto it = half.rbegin(); it != half.rend(); ++it) pts.push_back(-*it);
      pts.push_back(0.0);
      pts.insert(pts.end(), half.begin(), half.end());
      break;
    }
  }
  return GridAxis(std::move(pts));
}

GridAxis build_delta_axis(VariableType t) {
  constexpr int kPoints = 50;
  std::vector<double> pi0(kPoints);
  switch (t) {
    case VariableType::continuous:
      throw std::invalid_argument("build_delta_axis: continuous variables have no threshold");
    case VariableType::binary: {
      const double by = (0.99 - 0.01) / (kPoints - 1);
      for (int i = 0; i < kPoints; ++i) pi0[i] = 0.01 + i * by;
      break;
    }
    case VariableType::truncated: {
      const double top = std::pow(10.0, 0.99);
      const double by = (top - 1.0) / (kPoints - 1);
      for (int i = 0; i < kPoints; ++i) pi0[i] = std::log10(1.0 + i * by);
      // log10(1) = 0 maps to an infinite threshold; use a finite stand-in below the next node.
      pi0[0] = 0.5 * pi0[1];
      break;
    }
  }
  std::vector<double> pts(kPoints);
  for (int i = 0; i < kPoints; ++i) pts[i] = std_normal_quantile(pi0[i]);
  return GridAxis(std::move(pts));
}

std::vector<VariableType> delta_axis_types(CaseKind c) {
  using VT = VariableType;
  switch (c) {
    case CaseKind::CC:
      return {};
    case CaseKind::BC:
      return {VT::binary};
    case CaseKind::BB:
      return {VT::binary, VT::binary};
    case CaseKind::TC:
      return {VT::truncated};
    case CaseKind::TT:
      return {VT::truncated, VT::truncated};
    case CaseKind::TB:
      return {VT::truncated, VT::binary};
  }
  return {};
}

InterpolationGrid::InterpolationGrid(CaseKind c, GridAxis tau, std::vector<GridAxis> deltas,
                                     std::vector<double> values)
    : kind_(c), tau_(std::move(tau)), deltas_(std::move(deltas)), values_(std::move(values)) {
  if (c == CaseKind::CC) throw std::domain_error("InterpolationGrid: no grid for the cc case");
  if (static_cast<int>(deltas_.size()) != threshold_count(c)) {
    throw std::domain_error("InterpolationGrid: wrong number of threshold axes for case " +
                            to_string(c));
  }
  std::size_t inner = 1;
  for (const auto& d : deltas_) inner *= d.size();
  if (values_.size() != tau_.size() * inner) {
    throw std::domain_error("InterpolationGrid: value count does not match axis lengths");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(std::abs(values_[i]) <= kOrgUpperBound)) {
      throw std::domain_error("InterpolationGrid: value outside [-0.999, 0.999] at index " +
                              std::to_string(i));
    }
  }
  for (std::size_t j = 0; j < inner; ++j) {
    for (std::size_t t = 1; t < tau_.size(); ++t) {
      if (values_[t * inner + j] < values_[(t - 1) * inner + j]) {
        std::ostringstream msg;
        msg << "InterpolationGrid: values decrease along tau at tau index " << t
            << ", threshold column " << j;
        throw std::domain_error(msg.str());
      }
    }
  }
}

double InterpolationGrid::h_max() const noexcept {
  double h = tau_.h_max();
  for (const auto& d : deltas_) h = std::max(h, d.h_max());
  return h;
}

double InterpolationGrid::at(std::size_t tau_index, std::size_t d1, std::size_t d2) const noexcept {
  std::size_t idx = tau_index;
  if (!deltas_.empty()) idx = idx * deltas_[0].size() + d1;
  if (deltas_.size() > 1) idx = idx * deltas_[1].size() + d2;
  return values_[idx];
}

InterpolationGrid precompute_grid(CaseKind c, const PrecomputeOptions& options) {
  if (c == CaseKind::CC) {
    throw std::invalid_argument("precompute_grid: the cc case has a closed-form inverse");
  }
  GridAxis tau = build_tau_axis(c);
  std::vector<GridAxis> deltas;
  for (VariableType t : delta_axis_types(c)) deltas.push_back(build_delta_axis(t));

  const std::size_t n1 = deltas[0].size();
  const std::size_t n2 = deltas.size() > 1 ? deltas[1].size() : 1;
  const std::size_t inner = n1 * n2;

  // F_TT is symmetric in its two thresholds: fill the upper triangle and mirror.
  const bool symmetric = c == CaseKind::TT;
  std::vector<std::pair<std::size_t, std::size_t>> columns;
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = symmetric ? i : 0; j < n2; ++j) columns.emplace_back(i, j);
  }

  std::vector<double> values(tau.size() * inner, 0.0);
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex mu;
  std::string failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= columns.size()) return;
      const auto [i, j] = columns[k];
      const Thresholds th = deltas.size() == 1
                                ? Thresholds(deltas[0].points()[i])
                                : Thresholds(deltas[0].points()[i], deltas[1].points()[j]);
      try {
        for (std::size_t t = 0; t < tau.size(); ++t) {
          const double r = bridge_inverse_org(c, tau.points()[t], th).r;
          values[t * inner + i * n2 + j] = r;
          if (symmetric) values[t * inner + j * n2 + i] = r;
        }
      } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << "precompute_grid(" << to_string(c) << "): threshold indices (" << i;
        if (deltas.size() > 1) msg << ", " << j;
        msg << "): " << e.what();
        std::lock_guard lock(mu);
        if (failure.empty()) failure = msg.str();
        next.store(columns.size());
        return;
      }
      std::lock_guard lock(mu);
      ++done;
      if (options.progress) options.progress(done, columns.size());
    }
  };

  const unsigned n_threads = std::max(1u, options.threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (!failure.empty()) throw NumericalError(failure);
  return InterpolationGrid(c, std::move(tau), std::move(deltas), std::move(values));
}

std::optional<double> multilinear_interpolate(const InterpolationGrid& grid, double tau,
                                              const Thresholds& deltas) {
  const auto axes = grid.delta_axes();
  if (deltas.size() != static_cast<int>(axes.size())) {
    throw std::domain_error("multilinear_interpolate: expected " + std::to_string(axes.size()) +
                            " threshold(s) for case " + to_string(grid.kind()));
  }
  std::array<GridAxis::Cell, 3> cell;
  std::array<std::size_t, 3> stride{};
  const std::size_t dim = grid.dimension();

  auto tc = grid.tau_axis().locate(tau);
  if (!tc) return std::nullopt;
  cell[0] = *tc;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    auto dc = axes[a].locate(deltas[static_cast<int>(a)]);
    if (!dc) return std::nullopt;
    cell[a + 1] = *dc;
  }
  stride[dim - 1] = 1;
  for (std::size_t a = dim - 1; a > 0; --a) stride[a - 1] = stride[a] * axes[a - 1].size();

  // Gather the 2^d corners, then collapse one axis at a time, last axis first. This is the
  // weighted corner average, but std::lerp keeps nodes exact, equal corners unchanged and
  // the result monotone along tau.
  std::array<double, 8> corner{};
  const auto values = grid.values();
  for (unsigned k = 0; k < (1u << dim); ++k) {
    std::size_t idx = 0;
    for (std::size_t a = 0; a < dim; ++a) {
      const bool up = (k >> (dim - 1 - a)) & 1u;
      idx += (cell[a].lower + (up ? 1 : 0)) * stride[a];
    }
    corner[k] = values[idx];
  }
  for (std::size_t a = dim; a-- > 0;) {
    const unsigned half = 1u << a;
    for (unsigned k = 0; k < half; ++k) corner[k] = std::lerp(corner[2 * k], corner[2 * k + 1], cell[a].alpha);
  }
  const double acc = corner[0];
  return std::clamp(acc, -1.0, 1.0);
}

double interpolation_error_bound(CaseKind c, double h, double M, double r) {
  switch (c) {
    case CaseKind::BC:
      return 2.0 * h * h * std::abs(r) * (2.0 * M * M + 1.0) * std::exp(M * M);
    case CaseKind::TC: {
      const double tail = std_normal_cdf(-std::sqrt(2.0) * M);
      return 4.0 * h * h / (tail * tail) * std::max(std::abs(r) / tail, std::sqrt(1.0 - r * r));
    }
    default:
      throw std::invalid_argument("interpolation_error_bound: only bc and tc have a bound, got " +
                                  to_string(c));
  }
}

}  // namespace latcorr
