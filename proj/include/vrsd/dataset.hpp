#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vrsd/rng.hpp"

namespace vrsd {

struct SparseEntry {
  std::uint32_t index;
  double value;
  bool operator==(const SparseEntry&) const = default;
};

/// Non-owning view of one stored row.
struct RowView {
  std::span<const std::uint32_t> index;
  std::span<const double> value;

  std::size_t size() const { return index.size(); }

  template <typename Vec>
  double dot(const Vec& x) const {
    double s = 0.0;
    for (std::size_t k = 0; k < index.size(); ++k) s += value[k] * x[index[k]];
    return s;
  }
};

/// Row-major sparse design matrix with labels.
///
/// Indices inside a row are strictly increasing and every stored value is
/// non-zero. The object is immutable once built; all mutation goes through
/// functions returning a new Dataset.
class Dataset {
 public:
  Dataset() = default;

  /// Validates and takes ownership of per-row entries.
  static Dataset from_rows(std::size_t dim, const std::vector<std::vector<SparseEntry>>& rows,
                           std::vector<double> labels, std::string id = {}) {
    if (rows.size() != labels.size())
      throw std::invalid_argument("dataset: row count does not match label count");
    Dataset ds;
    ds.d_ = dim;
    ds.labels_ = std::move(labels);
    ds.id_ = std::move(id);
    ds.row_ptr_.reserve(rows.size() + 1);
    for (const auto& row : rows) {
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (row[k].index >= dim) throw std::invalid_argument("dataset: index out of range");
        if (k > 0 && row[k].index <= row[k - 1].index)
          throw std::invalid_argument("dataset: row indices must be strictly increasing");
        if (row[k].value == 0.0) continue;
        ds.col_.push_back(row[k].index);
        ds.val_.push_back(row[k].value);
      }
      ds.row_ptr_.push_back(ds.col_.size());
    }
    ds.refresh_norms();
    return ds;
  }

  std::size_t n() const { return labels_.size(); }
  std::size_t d() const { return d_; }
  std::size_t nnz() const { return val_.size(); }
  double density() const {
    const double cells = static_cast<double>(n()) * static_cast<double>(d_);
    return cells > 0 ? static_cast<double>(nnz()) / cells : 0.0;
  }
  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }

  RowView row(std::size_t i) const {
    const std::size_t lo = row_ptr_[i], hi = row_ptr_[i + 1];
    return {std::span<const std::uint32_t>(col_.data() + lo, hi - lo),
            std::span<const double>(val_.data() + lo, hi - lo)};
  }
  double label(std::size_t i) const { return labels_[i]; }
  std::span<const double> labels() const { return labels_; }
  double row_norm_sq(std::size_t i) const { return row_norm_sq_[i]; }
  std::span<const double> row_norms_sq() const { return row_norm_sq_; }
  double max_row_norm_sq() const {
    double m = 0.0;
    for (double v : row_norm_sq_) m = std::max(m, v);
    return m;
  }

  std::vector<SparseEntry> row_entries(std::size_t i) const {
    const RowView r = row(i);
    std::vector<SparseEntry> out(r.size());
    for (std::size_t k = 0; k < r.size(); ++k) out[k] = {r.index[k], r.value[k]};
    return out;
  }

  /// Same sparsity pattern and labels, values replaced row by row.
  Dataset with_scaled_rows(std::span<const double> scale) const {
    Dataset out = *this;
    for (std::size_t i = 0; i < n(); ++i)
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) out.val_[k] *= scale[i];
    out.refresh_norms();
    return out;
  }

  Dataset with_labels(std::vector<double> labels) const {
    if (labels.size() != n()) throw std::invalid_argument("dataset: label count mismatch");
    Dataset out = *this;
    out.labels_ = std::move(labels);
    return out;
  }

  bool operator==(const Dataset& o) const {
    return d_ == o.d_ && row_ptr_ == o.row_ptr_ && col_ == o.col_ && val_ == o.val_ &&
           labels_ == o.labels_;
  }

 private:
  void refresh_norms() {
    row_norm_sq_.assign(n(), 0.0);
    for (std::size_t i = 0; i < n(); ++i) {
      double s = 0.0;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += val_[k] * val_[k];
      row_norm_sq_[i] = s;
    }
  }

  std::size_t d_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> col_;
  std::vector<double> val_;
  std::vector<double> labels_;
  std::vector<double> row_norm_sq_;
  std::string id_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                           ": " + what),
        line_(line),
        column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

namespace detail {

inline bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc{} && ptr == tok.data() + tok.size();
}

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Parses LIBSVM text (`label idx:val ...`, 1-based indices, `#` comments).
inline Dataset parse_libsvm(std::string_view text,
                            std::optional<std::size_t> expected_dim = std::nullopt) {
  std::vector<std::vector<SparseEntry>> rows;
  std::vector<double> labels;
  std::size_t max_index = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    std::vector<SparseEntry> row;
    bool have_label = false;
    double label = 0.0;
    std::size_t c = 0;
    while (c < line.size()) {
      while (c < line.size() && (line[c] == ' ' || line[c] == '\t' || line[c] == '\r')) ++c;
      if (c >= line.size()) break;
      std::size_t e = c;
      while (e < line.size() && line[e] != ' ' && line[e] != '\t' && line[e] != '\r') ++e;
      const std::string_view tok = line.substr(c, e - c);
      const std::size_t column = c + 1;
      if (!have_label) {
        if (!detail::parse_double(tok, label))
          throw ParseError(line_no, column, "invalid label '" + std::string(tok) + "'");
        have_label = true;
      } else {
        const auto colon = tok.find(':');
        if (colon == std::string_view::npos)
          throw ParseError(line_no, column, "expected idx:val, got '" + std::string(tok) + "'");
        const std::string_view idx_tok = tok.substr(0, colon);
        long long idx = 0;
        const auto [ip, iec] = std::from_chars(idx_tok.data(), idx_tok.data() + idx_tok.size(), idx);
        if (iec != std::errc{} || ip != idx_tok.data() + idx_tok.size())
          throw ParseError(line_no, column, "invalid index '" + std::string(idx_tok) + "'");
        if (idx <= 0) throw ParseError(line_no, column, "index must be >= 1");
        if (idx > static_cast<long long>(std::numeric_limits<std::uint32_t>::max()))
          throw ParseError(line_no, column, "index too large");
        double v = 0.0;
        if (!detail::parse_double(tok.substr(colon + 1), v))
          throw ParseError(line_no, column + colon + 1,
                           "invalid value '" + std::string(tok.substr(colon + 1)) + "'");
        row.push_back({static_cast<std::uint32_t>(idx - 1), v});
        max_index = std::max(max_index, static_cast<std::size_t>(idx));
      }
      c = e;
    }
    if (!have_label) continue;

    std::stable_sort(row.begin(), row.end(),
                     [](const SparseEntry& a, const SparseEntry& b) { return a.index < b.index; });
    for (std::size_t k = 1; k < row.size(); ++k)
      if (row[k].index == row[k - 1].index)
        throw ParseError(line_no, 1, "duplicate index " + std::to_string(row[k].index + 1));
    std::erase_if(row, [](const SparseEntry& e) { return e.value == 0.0; });
    rows.push_back(std::move(row));
    labels.push_back(label);
  }
  std::size_t dim = max_index;
  if (expected_dim) {
    if (*expected_dim < max_index)
      throw std::invalid_argument("parse_libsvm: index " + std::to_string(max_index) +
                                  " exceeds expected dimension " + std::to_string(*expected_dim));
    dim = *expected_dim;
  }
  return Dataset::from_rows(dim, rows, std::move(labels));
}

/// LIBSVM rendering with shortest round-trip doubles.
inline std::string serialize_libsvm(const Dataset& ds) {
  std::string out;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    out += detail::format_double(ds.label(i));
    const RowView r = ds.row(i);
    for (std::size_t k = 0; k < r.size(); ++k) {
      out += ' ';
      out += std::to_string(r.index[k] + 1);
      out += ':';
      out += detail::format_double(r.value[k]);
    }
    out += '\n';
  }
  return out;
}

/// Scales every non-zero row to unit Euclidean norm; zero rows are kept.
inline Dataset normalize_rows(const Dataset& ds) {
  std::vector<double> scale(ds.n(), 1.0);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const double nrm = std::sqrt(ds.row_norm_sq(i));
    if (nrm > 0.0) scale[i] = 1.0 / nrm;
  }
  return ds.with_scaled_rows(scale);
}

struct SynthOptions {
  /// Column j is scaled by (1+j)^-spectral_decay before any normalization;
  /// larger values give worse conditioning.
  double spectral_decay = 0.0;
  /// Normalize rows before forming the labels, so that b = A x + noise
  /// holds for the returned (unit-row) matrix.
  bool unit_rows = false;
};

struct SynthResult {
  Dataset data;
  std::vector<double> planted_x;
};

/// Synthetic least-squares problem: b = A * planted_x + N(0, noise_sd^2).
inline SynthResult synth_regression(std::size_t n, std::size_t d, double sparsity, double noise_sd,
                                    std::uint64_t seed, const SynthOptions& opts = {}) {
  if (n < 1 || d < 1) throw std::invalid_argument("synth_regression: n and d must be >= 1");
  if (!(sparsity > 0.0 && sparsity <= 1.0))
    throw std::invalid_argument("synth_regression: sparsity must lie in (0, 1]");
  if (!(noise_sd >= 0.0)) throw std::invalid_argument("synth_regression: noise_sd must be >= 0");
  Rng rng(seed);
  std::vector<double> planted(d);
  for (auto& v : planted) v = rng.normal();

  std::vector<double> col_scale(d);
  for (std::size_t j = 0; j < d; ++j)
    col_scale[j] = std::pow(static_cast<double>(j + 1), -opts.spectral_decay);

  std::vector<std::vector<SparseEntry>> rows(n);
  for (auto& row : rows) {
    for (std::size_t j = 0; j < d; ++j) {
      const bool keep = sparsity >= 1.0 || rng.uniform01() < sparsity;
      const double v = rng.normal() * col_scale[j];
      if (keep && v != 0.0) row.push_back({static_cast<std::uint32_t>(j), v});
    }
  }
  Dataset ds = Dataset::from_rows(d, rows, std::vector<double>(n, 0.0));
  if (opts.unit_rows) ds = normalize_rows(ds);

  std::vector<double> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = ds.row(i).dot(planted);
    if (noise_sd > 0.0) labels[i] += noise_sd * rng.normal();
  }
  ds = ds.with_labels(std::move(labels));
  std::string id = "synth-n" + std::to_string(n) + "-d" + std::to_string(d) + "-s" + std::to_string(seed);
  if (sparsity != 1.0) id += "-p" + detail::format_double(sparsity);
  if (noise_sd != 0.1) id += "-e" + detail::format_double(noise_sd);
  if (opts.spectral_decay != 0.0) id += "-k" + detail::format_double(opts.spectral_decay);
  if (opts.unit_rows) id += "-unit";
  ds.set_id(std::move(id));
  return {std::move(ds), std::move(planted)};
}

}  // namespace vrsd
