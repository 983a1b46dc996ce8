#include "steinkd/io.hpp"

#include "steinkd/parallel.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace steinkd {

namespace {

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& value) {
  if (s.empty()) return false;
  const char* begin = s.data();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), value);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

WeightedEmpirical read_sample_csv(std::istream& in, std::size_t dim) {
  if (dim == 0) throw InputError("sample dimension must be positive");
  std::vector<std::vector<double>> rows;
  std::size_t columns = 0;
  bool have_weights = false;
  bool first = true;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = split_fields(t);

    std::vector<double> values(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (!parse_double(fields[i], values[i])) numeric = false;
    }

    if (first) {
      first = false;
      if (!numeric) {
        have_weights = lower(fields.back()) == "weight";
        columns = dim + (have_weights ? 1 : 0);
        if (fields.size() != columns) {
          throw InputError("sample header has " + std::to_string(fields.size()) +
                           " columns, expected " + std::to_string(columns));
        }
        continue;
      }
      if (fields.size() == dim) {
        columns = dim;
      } else if (fields.size() == dim + 1) {
        columns = dim + 1;
        have_weights = true;
      } else {
        throw InputError("sample row has " + std::to_string(fields.size()) +
                         " columns, expected " + std::to_string(dim) + " or " +
                         std::to_string(dim + 1));
      }
    }
    if (!numeric) throw InputError("non-numeric value on sample line " + std::to_string(line_no));
    if (fields.size() != columns) {
      throw InputError("sample line " + std::to_string(line_no) + " has " +
                       std::to_string(fields.size()) + " columns, expected " +
                       std::to_string(columns));
    }
    for (double v : values) {
      if (!std::isfinite(v)) {
        throw InputError("non-finite value on sample line " + std::to_string(line_no));
      }
    }
    rows.push_back(std::move(values));
  }

  if (rows.empty()) throw InputError("sample is empty");
  const auto n = static_cast<Eigen::Index>(rows.size());
  PointMatrix points(n, static_cast<Eigen::Index>(dim));
  Vector weights(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) points(i, static_cast<Eigen::Index>(j)) = rows[i][j];
    weights[i] = have_weights ? rows[i][dim] : 1.0 / static_cast<double>(n);
  }
  if (have_weights) {
    if ((weights.array() < 0.0).any()) throw InputError("sample weights must be nonnegative");
    const double total = pairwise_sum(weights.data(), weights.size());
    if (!(total >= 0.99 && total <= 1.01)) {
      throw InputError("sample weights sum to " + format_double(total) + ", expected 1");
    }
    weights /= total;
  }
  return WeightedEmpirical(std::move(points), std::move(weights));
}

WeightedEmpirical read_sample_csv_file(const std::string& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open sample file " + path);
  return read_sample_csv(in, dim);
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

}  // namespace steinkd
