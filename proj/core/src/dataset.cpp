#include "grounded/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace grounded {

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC-4180-ish: quoted fields may contain commas, doubled quotes and newlines.
CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool record_started = false;

  auto end_field = [&] {
    record.push_back(field);
    field.clear();
  };
  auto end_record = [&] {
    end_field();
    if (table.header.empty()) {
      table.header = std::move(record);
    } else {
      table.rows.push_back(std::move(record));
    }
    record = {};
    record_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        record_started = true;
        break;
      case ',':
        end_field();
        record_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (record_started || !field.empty() || !record.empty()) end_record();
        break;
      default:
        field += c;
        record_started = true;
        break;
    }
  }
  if (in_quotes) throw DataError(path + ": unterminated quoted field");
  if (record_started || !field.empty() || !record.empty()) end_record();

  if (table.header.empty()) throw DataError(path + ": missing header row");
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.rows[r].size() != table.header.size()) {
      throw DataError(path + ": row " + std::to_string(r + 2) + " has " +
                      std::to_string(table.rows[r].size()) + " fields, header has " +
                      std::to_string(table.header.size()));
    }
  }
  return table;
}

double parse_double(const std::string& cell, std::size_t row, const std::string& col) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || begin == end) {
    throw DataError("unparsable numeric cell \"" + cell + "\" at data row " +
                    std::to_string(row + 1) + ", column \"" + col + "\"");
  }
  return value;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::size_t column_index(const CsvTable& t, const std::string& name, const std::string& path) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) throw DataError(path + ": missing column \"" + name + "\"");
  return static_cast<std::size_t>(it - t.header.begin());
}

}  // namespace

void Dataset::validate() const {
  const Eigen::Index rows = n();
  if (rows < 1) throw DataError("dataset is empty");
  if (features.rows() != rows || treatment.size() != rows)
    throw DataError("dataset columns have inconsistent lengths");
  if (static_cast<Eigen::Index>(feature_names.size()) != features.cols())
    throw DataError("feature_names length does not match feature count");
  std::set<std::string> unique_names(feature_names.begin(), feature_names.end());
  if (static_cast<Eigen::Index>(unique_names.size()) != features.cols())
    throw DataError("feature names are not unique");
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double t = treatment[i];
    if (t != 0.0 && t != 1.0)
      throw DataError("non-binary treatment value " + format_double(t) + " at data row " +
                      std::to_string(i + 1));
  }
  if (propensity) {
    if (propensity->size() != rows) throw DataError("propensity column has wrong length");
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double e = (*propensity)[i];
      if (!(e > 0.0 && e < 1.0))
        throw DataError("propensity " + format_double(e) + " outside (0,1) at data row " +
                        std::to_string(i + 1));
    }
  }
}

Dataset Dataset::rows(const std::vector<Eigen::Index>& idx) const {
  Dataset out;
  out.feature_names = feature_names;
  out.features.resize(static_cast<Eigen::Index>(idx.size()), features.cols());
  out.treatment.resize(static_cast<Eigen::Index>(idx.size()));
  out.outcome.resize(static_cast<Eigen::Index>(idx.size()));
  if (propensity) out.propensity.emplace(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Eigen::Index i = idx[k];
    out.features.row(static_cast<Eigen::Index>(k)) = features.row(i);
    out.treatment[static_cast<Eigen::Index>(k)] = treatment[i];
    out.outcome[static_cast<Eigen::Index>(k)] = outcome[i];
    if (propensity) (*out.propensity)[static_cast<Eigen::Index>(k)] = (*propensity)[i];
  }
  return out;
}

Eigen::Index Dataset::feature_index(const std::string& name) const {
  const auto it = std::find(feature_names.begin(), feature_names.end(), name);
  if (it == feature_names.end()) throw DataError("no feature named \"" + name + "\"");
  return static_cast<Eigen::Index>(it - feature_names.begin());
}

OneHotResult one_hot_encode(const std::vector<std::string>& values, OneHotPolicy policy) {
  if (values.empty()) throw DataError("one_hot_encode: empty input");
  std::set<std::string> level_set(values.begin(), values.end());
  std::vector<std::string> levels(level_set.begin(), level_set.end());  // lexicographic

  const std::size_t first = policy == OneHotPolicy::drop_first && levels.size() > 1 ? 1 : 0;
  OneHotResult out;
  out.levels.assign(levels.begin() + static_cast<std::ptrdiff_t>(first), levels.end());
  out.columns = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(values.size()),
                                      static_cast<Eigen::Index>(out.levels.size()));
  std::map<std::string, Eigen::Index> pos;
  for (std::size_t k = 0; k < out.levels.size(); ++k)
    pos[out.levels[k]] = static_cast<Eigen::Index>(k);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto it = pos.find(values[i]);
    if (it != pos.end()) out.columns(static_cast<Eigen::Index>(i), it->second) = 1.0;
  }
  return out;
}

Dataset load_csv(const std::string& path, const ColumnSchema& schema, OneHotPolicy policy) {
  if (schema.treatment_col == schema.outcome_col)
    throw ConfigError("schema: treatment_col and outcome_col must differ");

  const CsvTable table = read_csv_table(path);
  if (table.rows.empty()) throw DataError(path + ": no data rows");

  const std::size_t t_idx = column_index(table, schema.treatment_col, path);
  const std::size_t y_idx = column_index(table, schema.outcome_col, path);
  std::optional<std::size_t> e_idx;
  if (schema.propensity_col) e_idx = column_index(table, *schema.propensity_col, path);
  for (const auto& c : schema.categorical_cols) column_index(table, c, path);
  for (const auto& c : schema.drop_cols) column_index(table, c, path);

  const std::size_t n = table.rows.size();
  Dataset ds;
  ds.treatment.resize(static_cast<Eigen::Index>(n));
  ds.outcome.resize(static_cast<Eigen::Index>(n));
  if (e_idx) ds.propensity.emplace(static_cast<Eigen::Index>(n));

  for (std::size_t r = 0; r < n; ++r) {
    const double t = parse_double(table.rows[r][t_idx], r, schema.treatment_col);
    if (t != 0.0 && t != 1.0)
      throw DataError(path + ": non-binary treatment value \"" + table.rows[r][t_idx] +
                      "\" at data row " + std::to_string(r + 1));
    ds.treatment[static_cast<Eigen::Index>(r)] = t;
    ds.outcome[static_cast<Eigen::Index>(r)] =
        parse_double(table.rows[r][y_idx], r, schema.outcome_col);
    if (e_idx)
      (*ds.propensity)[static_cast<Eigen::Index>(r)] =
          parse_double(table.rows[r][*e_idx], r, *schema.propensity_col);
  }

  const auto is_categorical = [&](const std::string& name) {
    return std::find(schema.categorical_cols.begin(), schema.categorical_cols.end(), name) !=
           schema.categorical_cols.end();
  };
  const auto is_dropped = [&](const std::string& name) {
    return std::find(schema.drop_cols.begin(), schema.drop_cols.end(), name) !=
           schema.drop_cols.end();
  };

  std::vector<Eigen::VectorXd> cols;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const std::string& name = table.header[c];
    if (c == t_idx || c == y_idx || (e_idx && c == *e_idx) || is_dropped(name)) continue;
    if (is_categorical(name)) {
      std::vector<std::string> raw(n);
      for (std::size_t r = 0; r < n; ++r) raw[r] = table.rows[r][c];
      const OneHotResult enc = one_hot_encode(raw, policy);
      for (std::size_t k = 0; k < enc.levels.size(); ++k) {
        cols.push_back(enc.columns.col(static_cast<Eigen::Index>(k)));
        names.push_back(name + "=" + enc.levels[k]);
      }
    } else {
      Eigen::VectorXd col(static_cast<Eigen::Index>(n));
      for (std::size_t r = 0; r < n; ++r)
        col[static_cast<Eigen::Index>(r)] = parse_double(table.rows[r][c], r, name);
      cols.push_back(std::move(col));
      names.push_back(name);
    }
  }

  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) ds.features.col(static_cast<Eigen::Index>(c)) = cols[c];
  ds.feature_names = std::move(names);
  ds.validate();
  return ds;
}

void write_csv(const Dataset& ds, const std::string& path, const std::string& extra_col,
               const std::vector<double>& extra_values) {
  if (!extra_col.empty() && static_cast<Eigen::Index>(extra_values.size()) != ds.n())
    throw ConfigError("write_csv: extra column length mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open file for writing: " + path);

  for (const auto& name : ds.feature_names) out << csv_escape(name) << ',';
  out << "treatment,outcome";
  if (ds.propensity) out << ",propensity";
  if (!extra_col.empty()) out << ',' << csv_escape(extra_col);
  out << '\n';

  for (Eigen::Index r = 0; r < ds.n(); ++r) {
    for (Eigen::Index c = 0; c < ds.d(); ++c) out << format_double(ds.features(r, c)) << ',';
    out << format_double(ds.treatment[r]) << ',' << format_double(ds.outcome[r]);
    if (ds.propensity) out << ',' << format_double((*ds.propensity)[r]);
    if (!extra_col.empty()) out << ',' << format_double(extra_values[static_cast<std::size_t>(r)]);
    out << '\n';
  }
}

std::vector<double> read_csv_column(const std::string& path, const std::string& column) {
  const CsvTable table = read_csv_table(path);
  const std::size_t idx = column_index(table, column, path);
  std::vector<double> out(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    out[r] = parse_double(table.rows[r][idx], r, column);
  return out;
}

std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> split_indices(
    Eigen::Index n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ConfigError("split: fraction must lie strictly in (0,1)");
  const std::int64_t k = round_half_away(fraction * static_cast<double>(n));
  if (k < 1 || k >= n)
    throw DataError("split: degenerate partition (sizes " + std::to_string(k) + "/" +
                    std::to_string(n - k) + ")");

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);

  std::vector<Eigen::Index> first(idx.begin(), idx.begin() + k);
  std::vector<Eigen::Index> second(idx.begin() + k, idx.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {std::move(first), std::move(second)};
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction, std::uint64_t seed) {
  const auto [first, second] = split_indices(ds.n(), fraction, seed);
  return {ds.rows(first), ds.rows(second)};
}

PairDiagnostics validate_pair(const Dataset& conf, const Dataset& unc) {
  if (conf.feature_names != unc.feature_names)
    throw DataError("feature-name mismatch between confounded and unconfounded datasets");

  PairDiagnostics diag;
  diag.unc_has_propensity = unc.propensity.has_value();
  if (!diag.unc_has_propensity)
    log_warn("unconfounded dataset has no propensity column; constant-propensity "
             "estimation (mean of treatment) will apply");

  // z-score both samples with conf statistics; zero-variance features skipped.
  const Eigen::Index d = conf.d();
  Eigen::VectorXd mean = conf.features.colwise().mean();
  Eigen::VectorXd sd(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    const double var =
        (conf.features.col(c).array() - mean[c]).square().sum() / std::max<double>(1, conf.n());
    sd[c] = std::sqrt(var);
  }
  std::vector<Eigen::Index> active;
  for (Eigen::Index c = 0; c < d; ++c)
    if (sd[c] > 0.0) active.push_back(c);
  if (active.empty()) {
    diag.coverage_fraction = 1.0;
    return diag;
  }

  const auto standardize = [&](const Dataset& ds, Eigen::Index cap) {
    // Deterministic stride subsample keeps the diagnostic O(cap^2).
    const Eigen::Index n = ds.n();
    const Eigen::Index take = std::min(n, cap);
    Eigen::MatrixXd z(take, static_cast<Eigen::Index>(active.size()));
    for (Eigen::Index i = 0; i < take; ++i) {
      const Eigen::Index row = i * n / take;
      for (std::size_t a = 0; a < active.size(); ++a)
        z(i, static_cast<Eigen::Index>(a)) =
            (ds.features(row, active[a]) - mean[active[a]]) / sd[active[a]];
    }
    return z;
  };

  constexpr Eigen::Index kCap = 4000;
  const Eigen::MatrixXd zc = standardize(conf, kCap);
  const Eigen::MatrixXd zu = standardize(unc, kCap);

  std::vector<double> nn(static_cast<std::size_t>(zc.rows()),
                         std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < zc.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < zc.rows(); ++j) {
      const double dist = (zc.row(i) - zc.row(j)).squaredNorm();
      nn[static_cast<std::size_t>(i)] = std::min(nn[static_cast<std::size_t>(i)], dist);
      nn[static_cast<std::size_t>(j)] = std::min(nn[static_cast<std::size_t>(j)], dist);
    }
  }
  std::sort(nn.begin(), nn.end());
  const double median_sq =
      zc.rows() < 2 ? 0.0
                    : (nn.size() % 2 == 1 ? nn[nn.size() / 2]
                                          : 0.5 * (nn[nn.size() / 2 - 1] + nn[nn.size() / 2]));
  diag.median_nn_radius = std::sqrt(median_sq);

  Eigen::Index covered = 0;
  for (Eigen::Index i = 0; i < zu.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < zc.rows(); ++j)
      best = std::min(best, (zu.row(i) - zc.row(j)).squaredNorm());
    if (best <= median_sq) ++covered;
  }
  diag.coverage_fraction = zu.rows() > 0 ? static_cast<double>(covered) / zu.rows() : 0.0;
  return diag;
}

}  // namespace grounded
