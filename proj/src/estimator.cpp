#include "latcorr/estimator.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <filesystem>
#include <set>
#include <sstream>
#include <thread>

#include "latcorr/bridge.hpp"
#include "latcorr/kendall.hpp"

namespace latcorr {

namespace {

void check_declared_type(std::span<const double> v, VariableType t, std::string_view name) {
  for (double x : v) {
    const bool ok = t == VariableType::binary      ? (x == 0.0 || x == 1.0)
                    : t == VariableType::truncated ? (x >= 0.0 && std::isfinite(x))
                                                   : std::isfinite(x);
    if (!ok) {
      std::ostringstream msg;
      msg << "column '" << name << "' is declared " << to_string(t) << " but contains " << x;
      throw InvalidColumnError(msg.str());
    }
  }
}

// Type used for estimation: a truncated column without zeros behaves as continuous.
VariableType effective_type(VariableType t, Probability pi0, std::string_view name) {
  switch (t) {
    case VariableType::continuous:
      return t;
    case VariableType::binary:
      if (pi0.value() == 0.0 || pi0.value() == 1.0) {
        throw DegenerateVariableError(std::string(name), "binary column takes a single value");
      }
      return t;
    case VariableType::truncated:
      if (pi0.value() == 1.0) {
        throw DegenerateVariableError(std::string(name), "truncated column is entirely zero");
      }
      return pi0.value() == 0.0 ? VariableType::continuous : t;
  }
  return t;
}

}  // namespace

std::string to_string(EstimationMethod m) {
  switch (m) {
    case EstimationMethod::org:
      return "org";
    case EstimationMethod::ml:
      return "ml";
    case EstimationMethod::mlbd:
      return "mlbd";
  }
  return "?";
}

std::string to_string(MethodUsed m) {
  switch (m) {
    case MethodUsed::closed_form:
      return "closed_form";
    case MethodUsed::org:
      return "org";
    case MethodUsed::ml:
      return "ml";
  }
  return "?";
}

std::string to_string(Fallback f) {
  switch (f) {
    case Fallback::none:
      return "none";
    case Fallback::boundary:
      return "boundary";
    case Fallback::out_of_hull:
      return "out_of_hull";
  }
  return "?";
}

EstimationMethod parse_estimation_method(const std::string& s) {
  std::string t = s;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (auto m : {EstimationMethod::org, EstimationMethod::ml, EstimationMethod::mlbd}) {
    if (to_string(m) == t) return m;
  }
  throw std::invalid_argument("unknown estimation method '" + s + "'");
}

DegenerateVariableError::DegenerateVariableError(std::string column, const std::string& why)
    : std::runtime_error("degenerate column '" + column + "': " + why), column_(std::move(column)) {}

MissingGridError::MissingGridError(CaseKind c)
    : std::runtime_error("no interpolation grid loaded for case " + to_string(c) +
                         " (run the precompute step)"),
      kind_(c) {}

PairError::PairError(std::size_t i, std::size_t j, const std::string& name_i,
                     const std::string& name_j, const std::string& what, std::exception_ptr cause)
    : std::runtime_error("pair (" + name_i + ", " + name_j + ") [" + std::to_string(i) + ", " +
                         std::to_string(j) + "]: " + what),
      i_(i),
      j_(j),
      cause_(std::move(cause)) {}

PairClass classify_pair(VariableType a, VariableType b) noexcept {
  using VT = VariableType;
  auto rank = [](VT t) { return t == VT::truncated ? 0 : t == VT::binary ? 1 : 2; };
  // Canonical role order is truncated, binary, continuous.
  const bool swap = rank(b) < rank(a);
  const VT first = swap ? b : a;
  const VT second = swap ? a : b;
  CaseKind kind = CaseKind::CC;
  if (first == VT::truncated) {
    kind = second == VT::truncated ? CaseKind::TT : second == VT::binary ? CaseKind::TB : CaseKind::TC;
  } else if (first == VT::binary) {
    kind = second == VT::binary ? CaseKind::BB : CaseKind::BC;
  }
  return {kind, swap};
}

double abd(CaseKind c, Probability pi0_first, Probability pi0_second) {
  const double x = pi0_first.value();
  const double y = pi0_second.value();
  switch (c) {
    case CaseKind::CC:
      return 1.0;
    case CaseKind::TC:
      return 1.0 - x * x;
    case CaseKind::TT: {
      const double m = std::max(x, y);
      return 1.0 - m * m;
    }
    case CaseKind::BC:
      return 2.0 * x * (1.0 - x);
    case CaseKind::BB:
      return 2.0 * std::min(x, y) * (1.0 - std::max(x, y));
    case CaseKind::TB: {
      const double b = std::max(y, 1.0 - y);
      return 2.0 * b * (1.0 - std::max(b, x));
    }
  }
  return 1.0;
}

void GridSet::insert(InterpolationGrid grid) {
  const auto k = static_cast<std::size_t>(grid.kind());
  grids_[k].reset();
  grids_[k].emplace(std::move(grid));
}

const InterpolationGrid* GridSet::find(CaseKind c) const noexcept {
  const auto& g = grids_[static_cast<std::size_t>(c)];
  return g ? &*g : nullptr;
}

GridSet GridSet::load_directory(const std::string& dir, std::span<const CaseKind> cases) {
  GridSet set;
  for (CaseKind c : cases) {
    if (c == CaseKind::CC) continue;
    const auto path = std::filesystem::path(dir) / (to_string(c) + ".lcg");
    if (!std::filesystem::exists(path)) continue;
    InterpolationGrid g = load_grid(path.string());
    if (g.kind() != c) {
      throw FormatError("file " + path.string() + " holds a " + to_string(g.kind()) + " grid", 4);
    }
    set.insert(std::move(g));
  }
  return set;
}

PairEstimate estimate_pair(std::span<const double> x, std::span<const double> y, VariableType tx,
                           VariableType ty, const EstimateOptions& options, const GridSet& grids,
                           std::string_view name_x, std::string_view name_y) {
  check_declared_type(x, tx, name_x);
  check_declared_type(y, ty, name_y);

  PairEstimate out;
  PairStatistics& st = out.stats;
  st.tau_hat = kendall_tau_a(x, y);
  st.pi0_x = zero_proportion(x);
  st.pi0_y = zero_proportion(y);
  if (tx != VariableType::continuous) st.delta_x = delta_from_zero_proportion(st.pi0_x);
  if (ty != VariableType::continuous) st.delta_y = delta_from_zero_proportion(st.pi0_y);

  const VariableType ex = effective_type(tx, st.pi0_x, name_x);
  const VariableType ey = effective_type(ty, st.pi0_y, name_y);
  const PairClass pc = classify_pair(ex, ey);
  out.kind = pc.kind;

  if (pc.kind == CaseKind::CC) {
    out.r_hat = cc_inverse_closed(st.tau_hat);
    out.method_used = MethodUsed::closed_form;
    return out;
  }

  // Canonical role order for thresholds and ABD.
  const Probability p_first = pc.swap ? st.pi0_y : st.pi0_x;
  const Probability p_second = pc.swap ? st.pi0_x : st.pi0_y;
  const VariableType t_second = pc.swap ? ex : ey;
  const double d_first = delta_from_zero_proportion(p_first);
  const Thresholds th = t_second == VariableType::continuous
                            ? Thresholds(d_first)
                            : Thresholds(d_first, delta_from_zero_proportion(p_second));

  auto run_org = [&](Fallback why) {
    const OrgResult org = bridge_inverse_org(pc.kind, st.tau_hat, th);
    out.r_hat = org.r;
    out.saturated = org.saturated;
    out.method_used = MethodUsed::org;
    out.fallback = why;
    return out;
  };

  if (options.method == EstimationMethod::org) return run_org(Fallback::none);

  const InterpolationGrid* grid = grids.find(pc.kind);
  if (grid == nullptr) throw MissingGridError(pc.kind);

  if (options.method == EstimationMethod::mlbd) {
    const double bound = options.boundary.for_case(pc.kind) * abd(pc.kind, p_first, p_second);
    if (!(std::abs(st.tau_hat) <= bound)) return run_org(Fallback::boundary);
  }
  const std::optional<double> r = multilinear_interpolate(*grid, st.tau_hat, th);
  if (!r) return run_org(Fallback::out_of_hull);
  out.r_hat = *r;
  out.method_used = MethodUsed::ml;
  return out;
}

DataMatrix::DataMatrix(std::vector<std::string> names, std::size_t rows,
                       std::vector<double> column_major)
    : names_(std::move(names)), rows_(rows), data_(std::move(column_major)) {
  if (data_.size() != rows_ * names_.size()) {
    throw std::invalid_argument("DataMatrix: data size does not match rows x columns");
  }
}

VariableType infer_type(std::span<const double> column) {
  if (column.empty()) throw std::invalid_argument("infer_type: empty column");
  bool all_01 = true, all_nonneg = true, has_zero = false, has_one = false;
  std::set<double> nonzero;
  for (double v : column) {
    all_01 = all_01 && (v == 0.0 || v == 1.0);
    all_nonneg = all_nonneg && v >= 0.0;
    has_zero = has_zero || v == 0.0;
    has_one = has_one || v == 1.0;
    if (v != 0.0 && nonzero.size() < 2) nonzero.insert(v);
  }
  if (all_01 && has_zero && has_one) return VariableType::binary;
  if (all_nonneg && has_zero && nonzero.size() >= 2) return VariableType::truncated;
  return VariableType::continuous;
}

std::vector<VariableType> infer_types(const DataMatrix& data) {
  std::vector<VariableType> out;
  out.reserve(data.cols());
  for (std::size_t j = 0; j < data.cols(); ++j) {
    try {
      out.push_back(infer_type(data.column(j)));
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("infer_types: column '" + data.names()[j] + "' is empty");
    }
  }
  return out;
}

LatentCorrelationMatrix estimate_matrix(const DataMatrix& data, std::span<const VariableType> types,
                                        const MatrixOptions& options, const GridSet& grids) {
  const std::size_t p = data.cols();
  if (p < 2) throw std::invalid_argument("estimate_matrix: need at least 2 columns");
  if (types.size() != p) {
    throw std::invalid_argument("estimate_matrix: " + std::to_string(types.size()) +
                                " types for " + std::to_string(p) + " columns");
  }

  LatentCorrelationMatrix m;
  m.names = data.names();
  m.values.assign(p * p, 0.0);
  m.provenance.assign(p * p, EntryProvenance{});
  for (std::size_t i = 0; i < p; ++i) m.values[i * p + i] = 1.0;

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) pairs.emplace_back(i, j);
  }
  std::vector<std::exception_ptr> errors(pairs.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= pairs.size()) return;
      const auto [i, j] = pairs[k];
      try {
        const PairEstimate e =
            estimate_pair(data.column(i), data.column(j), types[i], types[j], options.estimate,
                          grids, data.names()[i], data.names()[j]);
        const EntryProvenance prov{e.kind, e.method_used, e.fallback, e.saturated, std::nullopt};
        m.values[i * p + j] = m.values[j * p + i] = e.r_hat;
        m.provenance[i * p + j] = m.provenance[j * p + i] = prov;
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < std::max(1u, options.threads); ++t) pool.emplace_back(worker);
    worker();
  }

  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (!errors[k]) continue;
    const auto [i, j] = pairs[k];
    std::string what;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const std::exception& e) {
      what = e.what();
    }
    if (options.on_error == ErrorPolicy::abort) {
      throw PairError(i, j, data.names()[i], data.names()[j], what, errors[k]);
    }
    m.values[i * p + j] = m.values[j * p + i] = std::nan("");
    m.provenance[i * p + j].error = m.provenance[j * p + i].error = what;
  }
  return m;
}

}  // namespace latcorr
