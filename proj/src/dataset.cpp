#include "latcorr/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

namespace latcorr {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  std::string out(s.substr(b, e - b + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

std::string where(std::size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

// Quotes a CSV field only when it needs it.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

DataMatrix read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    names = split(line);
    break;
  }
  if (names.empty()) throw DatasetError("dataset is empty");
  if (names.size() < 2) throw DatasetError("dataset needs at least 2 columns");
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (names[j].empty()) throw DatasetError(where(line_no) + "empty column name");
    for (std::size_t k = 0; k < j; ++k) {
      if (names[k] == names[j]) throw DatasetError(where(line_no) + "duplicate column '" + names[j] + "'");
    }
  }

  std::vector<std::vector<double>> cols(names.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto cells = split(line);
    if (cells.size() != names.size()) {
      throw DatasetError(where(line_no) + "expected " + std::to_string(names.size()) +
                         " cells, found " + std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string& c = cells[j];
      if (c.empty()) throw DatasetError(where(line_no) + "empty cell in column '" + names[j] + "'");
      double v = 0.0;
      const char* first = c.data();
      if (*first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, c.data() + c.size(), v);
      if (ec != std::errc() || ptr != c.data() + c.size() || !std::isfinite(v)) {
        throw DatasetError(where(line_no) + "not a finite number in column '" + names[j] + "': '" +
                           c + "'");
      }
      cols[j].push_back(v);
    }
  }
  const std::size_t rows = cols[0].size();
  if (rows < 2) throw DatasetError("dataset needs at least 2 data rows");

  std::vector<double> data;
  data.reserve(rows * names.size());
  for (const auto& c : cols) data.insert(data.end(), c.begin(), c.end());
  return DataMatrix(std::move(names), rows, std::move(data));
}

DataMatrix read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset '" + path + "'");
  try {
    return read_dataset_csv(in);
  } catch (const DatasetError& e) {
    throw DatasetError(path + ": " + e.what());
  }
}

std::vector<VariableType> read_type_spec(std::istream& in, const std::vector<std::string>& names) {
  std::map<std::string, VariableType> declared;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const auto cells = split(line);
    if (cells.size() != 2) throw DatasetError(where(line_no) + "expected '<name>,<type>'");
    VariableType t;
    try {
      t = parse_variable_type(cells[1]);
    } catch (const std::invalid_argument& e) {
      throw DatasetError(where(line_no) + e.what());
    }
    if (!declared.emplace(cells[0], t).second) {
      throw DatasetError(where(line_no) + "column '" + cells[0] + "' declared twice");
    }
  }
  std::vector<VariableType> out;
  for (const auto& n : names) {
    const auto it = declared.find(n);
    if (it == declared.end()) throw DatasetError("type spec has no entry for column '" + n + "'");
    out.push_back(it->second);
    declared.erase(it);
  }
  if (!declared.empty()) {
    throw DatasetError("type spec names unknown column '" + declared.begin()->first + "'");
  }
  return out;
}

std::vector<VariableType> read_type_spec_file(const std::string& path,
                                              const std::vector<std::string>& names) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open type spec '" + path + "'");
  try {
    return read_type_spec(in, names);
  } catch (const DatasetError& e) {
    throw DatasetError(path + ": " + e.what());
  }
}

void write_matrix_csv(std::ostream& out, const LatentCorrelationMatrix& m) {
  const std::size_t p = m.dim();
  for (std::size_t j = 0; j < p; ++j) out << (j ? "," : "") << csv_field(m.names[j]);
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

void write_provenance_csv(std::ostream& out, const LatentCorrelationMatrix& m) {
  out << "var_i,var_j,case,method,fallback,saturated,error\n";
  const std::size_t p = m.dim();
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      const EntryProvenance& e = m.provenance[i * p + j];
      out << csv_field(m.names[i]) << ',' << csv_field(m.names[j]) << ',' << to_string(e.kind) << ','
          << (e.error ? "missing" : to_string(e.method_used)) << ',' << to_string(e.fallback) << ','
          << (e.saturated ? "true" : "false") << ',' << (e.error ? csv_field(*e.error) : "") << '\n';
    }
  }
}

}  // namespace latcorr
